"""Symbols, expressions and the fixed sentence patterns.

Expressions are nonempty strings over ``~ P ( )`` (plus ``N`` in the extended
alphabet) with no blank inside. Sentences are expressions of the form
``P(X)``, ``~P(X)``, ``PN(X)`` or ``~PN(X)``, always with a terminal ``)``; the
argument ``X`` is the whole interior, so inner parentheses are just symbols.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from . import kernels

BLANK_CHAR = "0"
SYMBOLS = "0~P()N"  # index = tape code
BASE_SYMBOLS = "~P()"
EXTENDED_SYMBOLS = "~P()N"
CODE = {ch: i for i, ch in enumerate(SYMBOLS)}


class Alphabet(str, enum.Enum):
    BASE = "base"
    EXTENDED = "extended"

    @property
    def symbols(self) -> str:
        return BASE_SYMBOLS if self is Alphabet.BASE else EXTENDED_SYMBOLS

    @property
    def size(self) -> int:
        """Number of tape symbols including the blank."""
        return len(self.symbols) + 1


class LanguageError(ValueError):
    pass


class UnknownSymbol(LanguageError):
    pass


class EmptyInput(LanguageError):
    pass


class NotASentence(LanguageError):
    pass


@dataclass(frozen=True, order=True)
class Expression:
    text: str

    def __post_init__(self):
        if not self.text:
            raise EmptyInput("expression must be nonempty")
        for ch in self.text:
            if ch not in EXTENDED_SYMBOLS:
                raise UnknownSymbol(f"symbol {ch!r} is not an expression symbol")

    def __str__(self) -> str:
        return self.text

    def __len__(self) -> int:
        return len(self.text)

    @property
    def codes(self) -> bytes:
        return bytes(CODE[ch] for ch in self.text)

    @property
    def extended(self) -> bool:
        return "N" in self.text

    @classmethod
    def from_codes(cls, codes: bytes) -> "Expression":
        return cls("".join(SYMBOLS[c] for c in codes))


def parse(text: str, alphabet: Alphabet | str = Alphabet.BASE) -> Expression:
    alphabet = Alphabet(alphabet)
    if not text:
        raise EmptyInput("empty input")
    for ch in text:
        if ch not in alphabet.symbols:
            raise UnknownSymbol(f"{ch!r} is not in the {alphabet.value} alphabet")
    return Expression(text)


def as_expression(x: Expression | str) -> Expression:
    return x if isinstance(x, Expression) else Expression(x)


def norm(x: Expression | str) -> Expression:
    """The expression ``X(X)``."""
    t = as_expression(x).text
    return Expression(f"{t}({t})")


class Kind(enum.IntEnum):
    NOT_SENTENCE = 0
    P_OF_X = 1
    NEG_P_OF_X = 2
    PN_OF_X = 3
    NEG_PN_OF_X = 4

    @property
    def prefix(self) -> str:
        return _PREFIX[self]

    @property
    def negative(self) -> bool:
        return self in (Kind.NEG_P_OF_X, Kind.NEG_PN_OF_X)


_PREFIX = {
    Kind.NOT_SENTENCE: "",
    Kind.P_OF_X: "P(",
    Kind.NEG_P_OF_X: "~P(",
    Kind.PN_OF_X: "PN(",
    Kind.NEG_PN_OF_X: "~PN(",
}


@dataclass(frozen=True)
class SentenceSet:
    """Which pattern matches count as sentences.

    ``base_atomic``: ``P(X)``/``~P(X)`` where ``X`` is itself not a sentence
    (recursively, within this same set). ``orders``: ``P``/``~P`` forms of any
    nesting depth up to ``max_order`` (0 = unbounded). ``with_pn``: all four
    forms, argument unrestricted.
    """

    mode: str = "base_atomic"
    max_order: int = 0

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown sentence set {self.mode!r}")

    @property
    def code(self) -> int:
        return _MODES[self.mode]

    @classmethod
    def parse(cls, spec: str) -> "SentenceSet":
        """Accept ``base_atomic``, ``with_PN`` or ``extended_orders(k)``."""
        s = spec.strip()
        if s.startswith("extended_orders"):
            inner = s[len("extended_orders") :].strip("() ")
            return cls("orders", int(inner) if inner else 0)
        if s.lower() in ("with_pn", "pn"):
            return cls("with_pn")
        return cls(s)


_MODES = {"base_atomic": 0, "orders": 1, "with_pn": 2}

BASE_ATOMIC = SentenceSet("base_atomic")
WITH_PN = SentenceSet("with_pn")


def extended_orders(max_k: int) -> SentenceSet:
    return SentenceSet("orders", max_k)


@dataclass(frozen=True)
class SentenceForm:
    kind: Kind
    argument: Expression | None = None
    order: int | None = None

    @property
    def is_sentence(self) -> bool:
        return self.kind is not Kind.NOT_SENTENCE

    def text(self) -> str:
        if not self.is_sentence:
            raise NotASentence("not a sentence")
        return f"{self.kind.prefix}{self.argument.text})"

    def expression(self) -> Expression:
        return Expression(self.text())


def classify(x: Expression | str, sentence_set: SentenceSet = BASE_ATOMIC) -> SentenceForm:
    x = as_expression(x)
    kind, order = _classify(x.text, sentence_set)
    if kind is Kind.NOT_SENTENCE:
        return SentenceForm(Kind.NOT_SENTENCE)
    arg = Expression(x.text[len(kind.prefix) : -1])
    return SentenceForm(kind, arg, order)


def _match(text: str) -> Kind:
    if len(text) < 4 or text[-1] != ")":
        return Kind.NOT_SENTENCE
    # the prefixes differ within their first two symbols, no backtracking
    for kind in (Kind.P_OF_X, Kind.PN_OF_X, Kind.NEG_P_OF_X, Kind.NEG_PN_OF_X):
        if text.startswith(kind.prefix) and len(text) > len(kind.prefix) + 1:
            return kind
    return Kind.NOT_SENTENCE


def _classify(text: str, ss: SentenceSet) -> tuple[Kind, int]:
    kind = _match(text)
    if kind is Kind.NOT_SENTENCE:
        return kind, 0
    if kind >= Kind.PN_OF_X and ss.mode != "with_pn":
        return Kind.NOT_SENTENCE, 0
    inner_kind, inner_order = _classify(text[len(kind.prefix) : -1], SentenceSet(ss.mode))
    if ss.mode == "base_atomic":
        return (Kind.NOT_SENTENCE, 0) if inner_kind else (kind, 1)
    order = inner_order + 1 if inner_kind else 1
    if ss.mode == "orders" and 0 < ss.max_order < order:
        return Kind.NOT_SENTENCE, 0
    return kind, order


def is_sentence(x: Expression | str, sentence_set: SentenceSet = BASE_ATOMIC) -> bool:
    return classify(x, sentence_set).is_sentence


def referent(s: SentenceForm | Expression | str, sentence_set: SentenceSet = WITH_PN) -> Expression:
    """The expression a sentence talks about: ``X`` for P-forms, ``X(X)`` for PN-forms."""
    form = s if isinstance(s, SentenceForm) else classify(s, sentence_set)
    if not form.is_sentence:
        raise NotASentence(f"{s} is not a sentence")
    if form.kind in (Kind.P_OF_X, Kind.NEG_P_OF_X):
        return form.argument
    return norm(form.argument)


def sentence(kind: Kind, x: Expression | str) -> Expression:
    return Expression(f"{kind.prefix}{as_expression(x).text})")


def self_referential_sentences() -> list[Expression]:
    """Solve the length equation for the two PN-forms and check the fixed points.

    ``prefix + X + ")"`` must have the length of ``X(X)``; that fixes
    ``len(X) = len(prefix) - 1``, and the only argument of that length whose
    norm is the sentence itself is the prefix minus its ``(``.
    """
    found = []
    for kind in (Kind.NEG_PN_OF_X, Kind.PN_OF_X):
        prefix = kind.prefix
        size = len(prefix) + 1 - 2  # len(prefix) + n + 1 == 2n + 2
        for chars in itertools.product(EXTENDED_SYMBOLS, repeat=size):
            x = Expression("".join(chars))
            s = sentence(kind, x)
            if referent(s) == s:
                found.append(s)
    return found


class ChainStatus(str, enum.Enum):
    TERMINATED_NON_SENTENCE = "terminated_non_sentence"
    TERMINATED_NEGATIVE = "terminated_negative"
    NONTERMINATING_CUTOFF = "nonterminating_cutoff"


@dataclass(frozen=True)
class Chain:
    sentences: tuple[Expression, ...]
    status: ChainStatus
    terminal: Expression | None = None  # the non-sentence referent that ended the chain

    def pn_counts(self) -> list[int]:
        return [s.text.count("PN") for s in self.sentences]


def chain(x: Expression | str, max_steps: int) -> Chain:
    """Follow ``PN(x)`` through printable referents.

    A positive sentence that is printable and true forces its referent to be
    printed, and when that referent is a positive sentence the argument
    repeats. Negative sentences assert nonprintability and end the chain.
    """
    current = sentence(Kind.PN_OF_X, x)
    out = [current]
    while True:
        form = classify(current, WITH_PN)
        if form.kind.negative:
            return Chain(tuple(out), ChainStatus.TERMINATED_NEGATIVE)
        if len(out) >= max_steps:
            return Chain(tuple(out), ChainStatus.NONTERMINATING_CUTOFF)
        nxt = referent(form)
        if not is_sentence(nxt, WITH_PN):
            return Chain(tuple(out), ChainStatus.TERMINATED_NON_SENTENCE, nxt)
        out.append(nxt)
        current = nxt


def delta_formula(n: int) -> Fraction:
    """``4**(n-3) + 4**(n-4)``, kept exact for small n where it is fractional."""
    return Fraction(4) ** (n - 3) + Fraction(4) ** (n - 4)


@dataclass(frozen=True)
class SentenceCount:
    n: int
    exact: int
    formula: Fraction

    @property
    def matches(self) -> bool:
        return self.exact == self.formula


def count_sentences(n: int, sentence_set: SentenceSet = BASE_ATOMIC) -> SentenceCount:
    """Exhaustive count of length-``n`` sentences over the 4 base symbols."""
    if n < 1:
        raise ValueError("n must be >= 1")
    alphabet = Expression(BASE_SYMBOLS).codes
    exact = kernels.count_sentences(n, sentence_set.code, sentence_set.max_order, alphabet)
    return SentenceCount(n, int(exact), delta_formula(n))


def iter_expressions(length: int, symbols: str = BASE_SYMBOLS) -> Iterator[Expression]:
    for chars in itertools.product(symbols, repeat=length):
        yield Expression("".join(chars))


def atomic_sentences(max_len: int, sentence_set: SentenceSet = BASE_ATOMIC) -> list[Expression]:
    """All sentences of total length <= ``max_len`` in site-length order."""
    out = []
    for n in range(4, max_len + 1):
        for kind in (Kind.P_OF_X, Kind.NEG_P_OF_X):
            size = n - len(kind.prefix) - 1
            if size < 1:
                continue
            for x in iter_expressions(size):
                s = sentence(kind, x)
                if is_sentence(s, sentence_set):
                    out.append(s)
    return out


def sentences_for_arguments(max_arg_len: int) -> list[Expression]:
    """``P(X)`` and ``~P(X)`` for every non-sentence ``X`` with ``len(X) <= max_arg_len``."""
    out = []
    for n in range(1, max_arg_len + 1):
        for x in iter_expressions(n):
            if not is_sentence(x):
                out.append(sentence(Kind.P_OF_X, x))
                out.append(sentence(Kind.NEG_P_OF_X, x))
    return out


# -- tape paths ---------------------------------------------------------------


@dataclass(frozen=True)
class PathItem:
    expression: Expression
    start: int

    @property
    def end(self) -> int:
        return self.start + len(self.expression) - 1


@dataclass(frozen=True)
class ExpressionPath:
    items: tuple[PathItem, ...]
    head: int
    internal: int
    incomplete_last: bool = False

    def expressions(self, complete_only: bool = True) -> list[Expression]:
        items = self.items[:-1] if (complete_only and self.incomplete_last) else self.items
        return [it.expression for it in items]

    def render(self) -> dict[int, str]:
        """Site -> symbol map for the nonblank cells of this path."""
        cells = {}
        for it in self.items:
            for i, ch in enumerate(it.expression.text):
                cells[it.start + i] = ch
        return cells

    def __str__(self) -> str:
        parts = [f"{it.expression}@{it.start}" for it in self.items]
        if self.incomplete_last and parts:
            parts[-1] += "*"
        return " ".join(parts) if parts else "(empty)"


def tokenize_tape(config) -> ExpressionPath:
    """Split a configuration's tape left of the head into its expressions.

    Runs starting at or after the head are not yet written and are dropped; a
    run reaching ``head - 1`` or beyond may still grow and is flagged
    incomplete.
    """
    items = []
    incomplete = False
    for start, codes in kernels.all_runs(config.cells, config.offset):
        if start >= config.head:
            break
        if start + len(codes) - 1 >= config.head - 1:
            codes = codes[: config.head - start]  # the head cell is not final
            incomplete = True
        items.append(PathItem(Expression.from_codes(codes), start))
    return ExpressionPath(tuple(items), config.head, config.internal, incomplete)


def tape_text(cells: dict[int, str] | Iterable[tuple[int, str]], lo: int, hi: int) -> str:
    cells = dict(cells)
    return "".join(cells.get(site, BLANK_CHAR) for site in range(lo, hi + 1))


def expression_list(items: Sequence[Expression | str]) -> list[Expression]:
    return [as_expression(x) for x in items]
