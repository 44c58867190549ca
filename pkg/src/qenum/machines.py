"""Machine specifications: how the single-step matrix U is obtained.

U acts on the head's internal state and the two tape cells at and right of the
head. Basis index convention, fixed so spec files are portable::

    index = l * k**2 + code(s_j) * k + code(s_{j+1})

with ``k`` tape symbols (5 for the base alphabet ``0 ~ P ( )``, 6 when ``N``
is added) and codes in that order.

Program machines write one symbol per step onto a blank tape and are compiled
to permutation matrices; branching machines add one rotation on the internal
state at the first step. Only the columns the machine can actually reach are
prescribed; the rest of U is completed to a unitary without touching them.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .lang import Alphabet, Expression, parse


class MachineError(ValueError):
    pass


class ParseError(MachineError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message}" + (f" ({', '.join(where)})" if where else ""))
        self.line = line
        self.field = field


class UnknownBuiltin(MachineError):
    pass


KINDS = ("dense", "identity", "program", "branching", "coin", "random", "random_internal")


@dataclass(frozen=True)
class MachineSpec:
    kind: str
    L: int | None = None
    alphabet: Alphabet = Alphabet.BASE
    entries: np.ndarray | None = field(default=None, compare=False, repr=False)
    program: tuple[str, ...] = ()
    branches: tuple[tuple[float, tuple[str, ...]], ...] = ()
    separator: int = 1
    coins: int = 0
    seed: int | None = None
    phase_seed: int | None = None
    name: str = ""

    @property
    def k(self) -> int:
        return self.alphabet.size

    def describe(self) -> str:
        if self.name:
            return self.name
        if self.kind == "program":
            return "program[" + ",".join(self.program) + "]"
        if self.kind == "branching":
            return "branching[" + "|".join(f"{w:g}:" + ",".join(p) for w, p in self.branches) + "]"
        return f"{self.kind}(L={self.L}, seed={self.seed})"


# -- unitary construction -------------------------------------------------------


def index(l: int, a: int, b: int, k: int) -> int:
    return (l * k + a) * k + b


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def complete_unitary(columns: dict[int, dict[int, complex]], dim: int) -> np.ndarray:
    """Extend prescribed orthonormal columns to a full unitary.

    Columns sharing rows are grouped; each group is completed inside the span
    of its own rows, so permutation parts stay permutations. Leftover columns
    are matched to untouched rows, identity first.
    """
    U = np.zeros((dim, dim), dtype=complex)
    parent = {}

    def find(r):
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        return r

    for col, entries in columns.items():
        if not entries:
            raise MachineError(f"column {col} is empty")
        rows = list(entries)
        for r in rows:
            parent.setdefault(r, r)
        for r in rows[1:]:
            parent[find(r)] = find(rows[0])
        for r, v in entries.items():
            U[r, col] = v

    groups: dict[int, tuple[list[int], list[int]]] = {}
    for r in parent:
        groups.setdefault(find(r), ([], []))[0].append(r)
    for col, entries in columns.items():
        groups[find(next(iter(entries)))][1].append(col)

    spare: list[np.ndarray] = []
    for rows, cols in groups.values():
        rows.sort()
        if len(cols) > len(rows):
            raise MachineError("prescribed columns are not linearly independent")
        if len(cols) == len(rows):
            continue
        A = U[np.ix_(rows, sorted(cols))]
        q, _ = np.linalg.qr(np.hstack([A, np.eye(len(rows))]))
        for v in q[:, len(cols) : len(rows)].T:
            vec = np.zeros(dim, dtype=complex)
            vec[rows] = v
            spare.append(vec)

    free_rows = [r for r in range(dim) if r not in parent]
    free_set = set(free_rows)
    open_cols = [c for c in range(dim) if c not in columns]
    leftovers = []
    for c in open_cols:
        if c in free_set:
            U[c, c] = 1
            free_set.discard(c)
        else:
            leftovers.append(c)
    for r in free_rows:
        if r in free_set:
            vec = np.zeros(dim, dtype=complex)
            vec[r] = 1
            spare.append(vec)
    if len(spare) != len(leftovers):
        raise MachineError("cannot complete to a unitary")
    for c, vec in zip(leftovers, spare):
        U[:, c] = vec
    return U


def _program_codes(program: Sequence[str], separator: int, alphabet: Alphabet) -> bytes:
    exprs = [parse(p, alphabet) for p in program]
    out = bytearray()
    for i, x in enumerate(exprs):
        if i:
            out.extend(b"\x00" * separator)
        out.extend(x.codes)
    return bytes(out)


def _program_columns(codes: bytes, base: int, nxt_after: int | None, k: int) -> dict[int, dict[int, complex]]:
    """Columns for one straight-line writer occupying internal states ``base..base+len``.

    State ``base + i`` writes ``codes[i]`` and advances; the final state idles
    on blank cells.
    """
    halt = base + len(codes)
    cols = {}
    for i, c in enumerate(codes):
        nxt = base + i + 1
        cols[index(base + i, 0, 0, k)] = {index(nxt, c, 0, k): 1.0}
    cols[index(halt, 0, 0, k)] = {index(halt, 0, 0, k): 1.0}
    return cols


def program_states(spec: MachineSpec) -> int:
    if spec.kind == "program":
        return len(_program_codes(spec.program, spec.separator, spec.alphabet)) + 1
    if spec.kind == "branching":
        return 1 + sum(len(_program_codes(p, spec.separator, spec.alphabet)) + 1 for _, p in spec.branches)
    raise MachineError(f"{spec.kind} is not a program machine")


def unitary_for(spec: MachineSpec) -> np.ndarray:
    """Resolve a spec to its dense U (not yet checked for unitarity)."""
    k = spec.k
    if spec.kind == "dense":
        if spec.entries is None or spec.L is None:
            raise MachineError("dense spec needs L and entries")
        U = np.asarray(spec.entries, dtype=complex)
    elif spec.kind == "identity":
        U = np.eye(k * k * (spec.L or 1), dtype=complex)
    elif spec.kind == "random":
        U = haar_unitary(k * k * (spec.L or 1), np.random.default_rng(spec.seed))
    elif spec.kind == "random_internal":
        L = spec.L or 2
        U = np.kron(haar_unitary(L, np.random.default_rng(spec.seed)), np.eye(k * k))
    elif spec.kind == "coin":
        # each coin step writes an equal superposition of the listed symbols,
        # followed by `separator` blank steps; the last write enters the halt state
        L = coin_states(spec)
        symbols = [parse(x, spec.alphabet).codes[0] for x in spec.program]
        amp = 1 / math.sqrt(len(symbols))
        period = spec.separator + 1
        cols = {}
        for s in range(L - 1):
            if s % period == 0:
                cols[index(s, 0, 0, k)] = {index(s + 1, c, 0, k): amp for c in symbols}
            else:
                cols[index(s, 0, 0, k)] = {index(s + 1, 0, 0, k): 1.0}
        cols[index(L - 1, 0, 0, k)] = {index(L - 1, 0, 0, k): 1.0}
        U = complete_unitary(cols, k * k * L)
    elif spec.kind in ("program", "branching"):
        need = program_states(spec)
        L = spec.L or need
        if L < need:
            raise MachineError(f"program needs L >= {need}, got {L}")
        cols: dict[int, dict[int, complex]] = {}
        if spec.kind == "program":
            cols.update(_program_columns(_program_codes(spec.program, spec.separator, spec.alphabet), 0, None, k))
        else:
            total = sum(w for w, _ in spec.branches)
            if total <= 0 or any(w < 0 for w, _ in spec.branches):
                raise MachineError("branch weights must be nonnegative with a positive sum")
            branch_col: dict[int, complex] = {}
            base = 1
            for w, prog in spec.branches:
                codes = _program_codes(prog, spec.separator, spec.alphabet)
                if w > 0:
                    branch_col[index(base, 0, 0, k)] = math.sqrt(w / total)
                cols.update(_program_columns(codes, base, None, k))
                base += len(codes) + 1
            cols[index(0, 0, 0, k)] = branch_col
        U = complete_unitary(cols, k * k * L)
    else:
        raise MachineError(f"unknown machine kind {spec.kind!r}")
    if spec.phase_seed is not None:
        theta = np.random.default_rng(spec.phase_seed).uniform(0, 2 * math.pi, U.shape[0])
        U = np.exp(1j * theta)[:, None] * U
    return U


def coin_states(spec: MachineSpec) -> int:
    if spec.coins < 1:
        raise MachineError("coin machines need coins >= 1")
    return (spec.coins - 1) * (spec.separator + 1) + 2


def internal_dimension(spec: MachineSpec) -> int:
    if spec.kind in ("program", "branching"):
        return spec.L or program_states(spec)
    if spec.kind == "coin":
        return coin_states(spec)
    if spec.kind == "random_internal":
        return spec.L or 2
    return spec.L or 1


# -- builtins ---------------------------------------------------------------------


def _prog(name: str, *program: str, **kw) -> MachineSpec:
    return MachineSpec("program", program=tuple(program), name=name, **kw)


def _branch(name: str, *branches: tuple[float, Sequence[str]], **kw) -> MachineSpec:
    return MachineSpec("branching", branches=tuple((w, tuple(p)) for w, p in branches), name=name, **kw)


def _builtins() -> dict[str, MachineSpec]:
    ext = {"alphabet": Alphabet.EXTENDED}
    specs = [
        MachineSpec("identity", L=1, name="blank"),
        _prog("p-tilde", "P(~)", "~"),
        _prog("tilde-then-p", "~", "P(~)"),
        _prog("p-only", "P(~)"),
        _prog("neg-valid", "~P(P)", "~"),
        _prog("neg-false", "~P(()", "("),
        _prog("neg-late-false", "~P(~)", "((", "~"),
        _prog("p-late-true", "P(~)", "((", "))", "~"),
        _prog("adversarial", "P(~)", "~P(~)", "~"),
        _prog("adversarial-bare", "P(~)", "~P(~)"),
        _prog("wide-gaps", "P(()", "~", "(", separator=2),
        _prog("mixed", "P(~~)", "~~", "~P(P)", "P(())", "())"),
        _prog("noise", "((", ")~", "P", "~P"),
        _branch("split", (0.5, ["P(~)", "~"]), (0.5, ["~P(~)"])),
        _branch("split-uneven", (0.3, ["P(~)", "~"]), (0.7, ["~P(~)", "P"])),
        _branch("split-bad", (0.5, ["P(~)", "~P(~)", "~"]), (0.5, ["~"])),
        _branch("split-missing", (0.5, ["P(~)", "~"]), (0.5, ["P(~)"])),
        _branch("three-way", (0.2, ["P(~)", "~"]), (0.3, ["~P(~)"]), (0.5, ["P(P)", "P"])),
        _branch("neg-other-path", (0.5, ["~P(~)"]), (0.5, ["~"])),
        _branch("split-equal", (0.5, ["P(~)"]), (0.5, ["~P(P)"])),
        _prog("p-tilde-phased", "P(~)", "~", phase_seed=7),
        _branch("split-phased", (0.5, ["P(~)", "~"]), (0.5, ["~P(~)"]), phase_seed=11),
        _branch("split-bad-phased", (0.4, ["P(~)", "~P(~)", "~"]), (0.6, ["~"]), phase_seed=13),
        MachineSpec("random_internal", L=3, seed=5, name="random-internal"),
        MachineSpec("coin", coins=5, separator=0, program=("~", "P", ")"), name="coin"),
        MachineSpec("coin", coins=4, separator=1, program=("~", "("), phase_seed=3, name="coin-gapped"),
        _prog("selfref-neg", "~PN(~PN)", **ext),
        _prog("selfref-pos", "PN(~PN)", **ext),
        _prog("selfref-both", "PN(~PN)", "~PN(~PN)", **ext),
        _prog("selfref-pnpn", "PN(PN)", **ext),
        _branch("selfref-split", (0.5, ["~PN(~PN)"]), (0.5, ["PN(~PN)"]), **ext),
        MachineSpec("identity", L=1, alphabet=Alphabet.EXTENDED, name="blank-extended"),
    ]
    return {s.name: s for s in specs}


BUILTINS: dict[str, MachineSpec] = _builtins()


def builtin(name: str) -> MachineSpec:
    try:
        return BUILTINS[name]
    except KeyError:
        raise UnknownBuiltin(f"no builtin machine named {name!r}; known: {', '.join(BUILTINS)}") from None


# -- spec files -------------------------------------------------------------------


def _complex_matrix(raw, dim: int) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != dim:
        got = len(raw) if isinstance(raw, list) else type(raw).__name__
        raise ParseError(f"expected {dim} rows (25L for the base alphabet), got {got}", field="entries")
    out = np.zeros((dim, dim), dtype=complex)
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != dim:
            raise ParseError(f"row {i} must have {dim} entries", field="entries")
        for j, v in enumerate(row):
            if isinstance(v, (int, float)):
                out[i, j] = v
            elif isinstance(v, list) and len(v) == 2:
                out[i, j] = complex(v[0], v[1])
            else:
                raise ParseError(f"entry [{i}][{j}] must be a number or [re, im]", field="entries")
    return out


def spec_from_dict(data: dict) -> MachineSpec:
    if not isinstance(data, dict):
        raise ParseError("machine spec must be a JSON object")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ParseError(f"kind must be one of {', '.join(KINDS)}", field="kind")
    try:
        alphabet = Alphabet(data.get("alphabet", "base"))
    except ValueError:
        raise ParseError("alphabet must be 'base' or 'extended'", field="alphabet") from None
    L = data.get("L")
    if L is not None and (not isinstance(L, int) or L < 1):
        raise ParseError("L must be a positive integer", field="L")
    common = dict(alphabet=alphabet, name=data.get("name", ""), phase_seed=data.get("phase_seed"))
    if kind == "dense":
        if L is None:
            raise ParseError("dense machines need L", field="L")
        dim = alphabet.size ** 2 * L
        return MachineSpec("dense", L=L, entries=_complex_matrix(data.get("entries"), dim), **common)
    if kind == "coin":
        symbols = data.get("symbols", ["~", "P"])
        coins, separator = data.get("coins"), data.get("separator", 0)
        if not isinstance(symbols, list) or not symbols or len(set(symbols)) != len(symbols):
            raise ParseError("symbols must be a list of distinct symbols", field="symbols")
        try:
            for x in symbols:
                if len(parse(x, alphabet)) != 1:
                    raise ParseError("each coin symbol must be a single nonblank symbol", field="symbols")
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc), field="symbols") from None
        if not isinstance(coins, int) or coins < 1:
            raise ParseError("coins must be a positive integer", field="coins")
        if not isinstance(separator, int) or separator < 0:
            raise ParseError("separator must be a nonnegative integer", field="separator")
        return MachineSpec("coin", program=tuple(symbols), coins=coins, separator=separator, **common)
    if kind in ("identity", "random", "random_internal"):
        seed = data.get("seed")
        if kind != "identity" and not isinstance(seed, int):
            raise ParseError("random machines need an integer seed", field="seed")
        return MachineSpec(kind, L=L, seed=seed, **common)
    separator = data.get("separator", 1)
    if not isinstance(separator, int) or separator < 1:
        raise ParseError("separator must be a positive integer", field="separator")
    raw = data.get("programs")
    try:
        if kind == "program":
            if not isinstance(raw, list) or not all(isinstance(p, str) for p in raw):
                raise ParseError("programs must be a list of expressions", field="programs")
            for p in raw:
                parse(p, alphabet)
            return MachineSpec("program", L=L, program=tuple(raw), separator=separator, **common)
        if not isinstance(raw, list) or not raw:
            raise ParseError("programs must be a list of [weight, [expressions]]", field="programs")
        branches = []
        for item in raw:
            if not (isinstance(item, list) and len(item) == 2 and isinstance(item[0], (int, float))
                    and isinstance(item[1], list)):
                raise ParseError("each branch must be [weight, [expressions]]", field="programs")
            for p in item[1]:
                parse(p, alphabet)
            branches.append((float(item[0]), tuple(item[1])))
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), field="programs") from None
    return MachineSpec("branching", L=L, branches=tuple(branches), separator=separator, **common)


def load_machine(path: str | Path) -> MachineSpec:
    """Load a spec from a JSON file, or ``builtin:<name>``."""
    text = str(path)
    if text.startswith("builtin:"):
        return builtin(text[len("builtin:") :])
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    return spec_from_dict(data)


def spec_to_dict(spec: MachineSpec) -> dict:
    out: dict = {"kind": spec.kind, "alphabet": spec.alphabet.value}
    if spec.L is not None:
        out["L"] = spec.L
    if spec.name:
        out["name"] = spec.name
    if spec.phase_seed is not None:
        out["phase_seed"] = spec.phase_seed
    if spec.kind == "dense":
        out["entries"] = [[[float(v.real), float(v.imag)] for v in row] for row in spec.entries]
    elif spec.kind == "coin":
        out["symbols"] = list(spec.program)
        out["coins"] = spec.coins
        out["separator"] = spec.separator
    elif spec.kind == "program":
        out["programs"] = list(spec.program)
        out["separator"] = spec.separator
    elif spec.kind == "branching":
        out["programs"] = [[w, list(p)] for w, p in spec.branches]
        out["separator"] = spec.separator
    elif spec.seed is not None:
        out["seed"] = spec.seed
    return out


def expressions_of(spec: MachineSpec) -> list[Expression]:
    """Every expression a program/branching machine writes (empty for the others)."""
    progs = [spec.program] if spec.kind == "program" else [p for _, p in spec.branches]
    return [Expression(x) for p in progs for x in p]
