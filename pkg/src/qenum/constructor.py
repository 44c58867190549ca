"""Scripted valid-and-complete enumerator and the Fourier analysis of its blocks.

For each length n = 1..n_max one block of ``2n + 6`` sites is prepared::

    a            sign cell: blank (P branch) or ~ (~P branch)
    a+1..a+n+3   P ( X )
    a+n+4        blank
    a+n+5..      payload: X on the P branch when X is not a sentence, else blank
    a+2n+5       blank

with X in uniform superposition over all 4**n strings and the sign in
``(|0> + |~>)/sqrt(2)``. A flag (stored as the block's ancilla label) records
whether X is a sentence; sentence arguments get no payload. The state is not
produced by a right-moving step operator (the payload copy needs the head to
go back), so it is scripted directly.

The blocks are independent, so the full state is kept as a product
(:class:`BlockState`). Expectations of limit-form projectors are computed by
combining per-block occurrence distributions; the expanded sparse state is
available for small ``n_max`` as a cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .lang import BASE_SYMBOLS, CODE, Expression, count_sentences, delta_formula, is_sentence, \
    iter_expressions, sentences_for_arguments
from .projectors import Projector
from .semantics import PreparedState, SemanticsReport, build_report
from .state import BasisConfig, SparseState

MAX_NMAX = 6
EXPAND_LIMIT = 1 << 17
DIGIT = {ch: i for i, ch in enumerate(BASE_SYMBOLS)}  # ~ P ( ) -> 0 1 2 3


class ScaleExceeded(ValueError):
    pass


def block_width(n: int) -> int:
    return 2 * n + 6


def block_start(n: int) -> int:
    return sum(block_width(k) for k in range(1, n))


def argument_index(x: Expression | str) -> int:
    """4-ary value of X, most significant digit leftmost."""
    text = x.text if isinstance(x, Expression) else x
    value = 0
    for ch in text:
        value = value * 4 + DIGIT[ch]
    return value


def argument_of(index: int, n: int) -> Expression:
    digits = []
    for _ in range(n):
        index, d = divmod(index, 4)
        digits.append(BASE_SYMBOLS[d])
    return Expression("".join(reversed(digits)))


@dataclass(frozen=True)
class BlockTerm:
    x: int
    negative: bool
    sentence_flag: bool
    config: BasisConfig
    amplitude: complex


@dataclass
class QucomBlock:
    n: int
    a: int
    terms: list[BlockTerm] = field(default_factory=list)

    @property
    def b(self) -> int:
        return self.a + self.n + 3

    @property
    def width(self) -> int:
        return block_width(self.n)

    @property
    def payload_start(self) -> int:
        return self.a + self.n + 5

    def norm2(self) -> float:
        return math.fsum(abs(t.amplitude) ** 2 for t in self.terms)

    def state(self) -> SparseState:
        return SparseState({t.config: t.amplitude for t in self.terms}, 1)


def _block_stages(n: int, a: int, head: int) -> tuple[QucomBlock, QucomBlock]:
    """The block after the sign/argument preparation, and after the payload copy."""
    amp = 1 / math.sqrt(2 * 4 ** n)
    prepared, copied = QucomBlock(n, a), QucomBlock(n, a)
    for x in iter_expressions(n):
        flag = is_sentence(x)
        label = "1" if flag else "0"
        for negative in (False, True):
            tape = {a + 1 + i: ch for i, ch in enumerate(f"P({x.text})")}
            if negative:
                tape[a] = "~"
            before = BasisConfig.from_tape(tape, head, 0, (label,))
            prepared.terms.append(BlockTerm(argument_index(x), negative, flag, before, amp))
            if not negative and not flag:
                start = a + n + 5
                tape.update({start + i: ch for i, ch in enumerate(x.text)})
            after = BasisConfig.from_tape(tape, head, 0, (label,))
            copied.terms.append(BlockTerm(argument_index(x), negative, flag, after, amp))
    return prepared, copied


class BlockState:
    """Product over independent blocks; the head sits just right of the last block."""

    def __init__(self, blocks: list[QucomBlock]):
        self.blocks = blocks
        self.head = sum(b.width for b in blocks)
        self.L = 1
        self._index: list[dict[bytes, list[int]]] = []
        for blk in blocks:
            idx: dict[bytes, list[int]] = {}
            for i, t in enumerate(blk.terms):
                for codes in t.config.complete_expressions():
                    idx.setdefault(codes, []).append(i)
            self._index.append(idx)

    def block(self, n: int) -> QucomBlock:
        for blk in self.blocks:
            if blk.n == n:
                return blk
        raise KeyError(f"no block for n={n}")

    def __len__(self) -> int:
        return math.prod(len(b.terms) for b in self.blocks)

    def norm2(self) -> float:
        return math.prod(b.norm2() for b in self.blocks)

    def occurrence_distribution(self, atoms: tuple[bytes, ...]) -> dict[int, float]:
        """Probability of each bitmask of which atoms occur somewhere on the tape."""
        dist = {0: 1.0}
        for blk, idx in zip(self.blocks, self._index):
            probs = [abs(t.amplitude) ** 2 for t in blk.terms]
            masks = [0] * len(blk.terms)
            for bit, codes in enumerate(atoms):
                for i in idx.get(codes, ()):
                    masks[i] |= 1 << bit
            local: dict[int, float] = {}
            for mask, p in zip(masks, probs):
                local[mask] = local.get(mask, 0.0) + p
            merged: dict[int, float] = {}
            for m1, p1 in dist.items():
                for m2, p2 in local.items():
                    merged[m1 | m2] = merged.get(m1 | m2, 0.0) + p1 * p2
            dist = merged
        return dist

    def expectation(self, p: Projector) -> float:
        if p.atoms is None:
            return self.to_sparse().probability(p.predicate)
        atoms = p.atoms
        total = 0.0
        for mask, prob in self.occurrence_distribution(atoms).items():
            occ = {codes: bool(mask >> bit & 1) for bit, codes in enumerate(atoms)}
            if p.formula(occ):
                total += prob
        return total

    def probability(self, predicate) -> float:
        return self.to_sparse().probability(predicate)

    def to_sparse(self, limit: int = EXPAND_LIMIT) -> SparseState:
        if len(self) > limit:
            raise ScaleExceeded(f"expanding {len(self)} terms exceeds the limit of {limit}")
        terms = {BasisConfig(0, self.head): 1 + 0j}
        for blk in self.blocks:
            nxt = {}
            for cfg, amp in terms.items():
                for t in blk.terms:
                    tape = cfg.tape
                    tape.update(t.config.tape)
                    new = BasisConfig.from_tape(tape, self.head, 0, cfg.ancilla + t.config.ancilla)
                    nxt[new] = amp * t.amplitude
            terms = nxt
        return SparseState(terms, 1)


@dataclass(frozen=True)
class QucomBuild:
    state: BlockState
    stage_norms: tuple[tuple[int, float, float], ...]  # (n, after preparation, after copy)
    step_count: int


def _check_nmax(n_max: int) -> None:
    if not isinstance(n_max, int) or n_max < 1:
        raise ValueError("n_max must be a positive integer")
    if n_max > MAX_NMAX:
        raise ScaleExceeded(f"n_max={n_max} exceeds the desk-scale limit {MAX_NMAX}")


def scripted_steps(n: int) -> int:
    """Operations for one block: a pass over its sites, n controlled copies, sign and flag."""
    return block_width(n) + n + 2


def build(n_max: int) -> QucomBuild:
    _check_nmax(n_max)
    head = sum(block_width(n) for n in range(1, n_max + 1))
    blocks, norms = [], []
    for n in range(1, n_max + 1):
        prepared, copied = _block_stages(n, block_start(n), head)
        blocks.append(copied)
        norms.append((n, prepared.norm2(), copied.norm2()))
    steps = sum(scripted_steps(n) for n in range(1, n_max + 1))
    return QucomBuild(BlockState(blocks), tuple(norms), steps)


def build_qucom(n_max: int) -> BlockState:
    return build(n_max).state


def qucom_sentences(n_max: int) -> list[Expression]:
    return sentences_for_arguments(n_max)


def verify_qucom(n_max: int, horizon: int | None = None, state: BlockState | None = None) -> SemanticsReport:
    """Validity, completeness and consistency of every ``P(X)``/``~P(X)`` with ``|X| <= n_max``."""
    state = state or build_qucom(n_max)
    horizon = horizon or state.head
    machine = PreparedState(state, f"qucom(n_max={n_max})")
    return build_report(machine, horizon, qucom_sentences(n_max), include_printed=False)


# -- Fourier analysis ---------------------------------------------------------------


@dataclass(frozen=True)
class QftRecord:
    y: int
    branch: str
    probability: float


def qft_amplitudes(state: BlockState, n: int) -> dict[tuple[str, bytes], np.ndarray]:
    """Transform the argument register of block n on the non-sentence part.

    Terms are grouped by branch and payload (which the transform does not
    touch); within a group the amplitude vector over X maps to
    ``sum_X a_X exp(2 pi i Y X / 4**n) / 2**n``.
    """
    blk = state.block(n)
    size = 4 ** n
    groups: dict[tuple[str, bytes], np.ndarray] = {}
    lo = blk.payload_start
    for t in blk.terms:
        if t.sentence_flag:
            continue
        payload = bytes(t.config.symbol(s) for s in range(lo, lo + n))
        key = ("~P" if t.negative else "P", payload)
        vec = groups.setdefault(key, np.zeros(size, dtype=complex))
        vec[t.x] += t.amplitude
    return {k: np.fft.ifft(v, norm="ortho") for k, v in groups.items()}


def qft_argument(state: BlockState, n: int) -> list[QftRecord]:
    """Distribution over (Y, branch) after the transform; payloads are summed out."""
    size = 4 ** n
    dist = {"P": np.zeros(size), "~P": np.zeros(size)}
    for (branch, _), amps in qft_amplitudes(state, n).items():
        dist[branch] += np.abs(amps) ** 2
    return [QftRecord(y, branch, float(dist[branch][y])) for branch in ("P", "~P") for y in range(size)]


def qft_expected(n: int) -> dict[str, float]:
    """Closed forms for block n in terms of the exact sentence count."""
    size = 4 ** n
    delta = count_sentences(n).exact
    good = size - delta
    return {
        "p_branch_per_y": good / (2 * size ** 2),
        "neg_peak": good ** 2 / (2 * size ** 2),
        "neg_off_peak_total": delta * good / (2 * size ** 2),
        "neg_total": good / (2 * size),
        "delta": delta,
        "order_scale": (delta / size) ** 2,
    }


# -- efficiency ---------------------------------------------------------------------


@dataclass(frozen=True)
class EfficiencyReport:
    n_max: int
    sentences_exact: int
    sentences_formula: float
    step_count: int
    total_width: int

    def to_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "sentences_exact": self.sentences_exact,
            "sentences_formula": self.sentences_formula,
            "step_count": self.step_count,
            "total_width": self.total_width,
        }


def qucom_efficiency_report(n_max: int) -> EfficiencyReport:
    """Number of sentences covered (with the exact and the closed-form count) and script length."""
    _check_nmax(n_max)
    exact = sum(2 * (4 ** n - count_sentences(n).exact) for n in range(1, n_max + 1))
    formula = sum(2 * (4 ** n - delta_formula(n)) for n in range(1, n_max + 1))
    steps = sum(scripted_steps(n) for n in range(1, n_max + 1))
    width = sum(block_width(n) for n in range(1, n_max + 1))
    return EfficiencyReport(n_max, exact, float(formula), steps, width)


def blocks_of(state: BlockState) -> Iterable[QucomBlock]:
    return iter(state.blocks)
