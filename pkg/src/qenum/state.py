"""Sparse states over head/tape configurations.

A configuration is the head's internal state and lattice site, a finitely
supported tape, and an optional tuple of ancilla labels (``"i"``, ``"0"``,
``"1"``) used to record premeasurement outcomes. The tape is stored trimmed:
``cells`` holds the codes from the first to the last nonblank site and
``offset`` is the site of ``cells[0]``. Trimming makes dataclass equality the
canonical equality of finitely supported tapes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, TextIO

from . import kernels
from .lang import BLANK_CHAR, CODE, SYMBOLS

# probabilities at or below this count as zero
EPS = 1e-10


class StateError(ValueError):
    pass


class InvalidDimension(StateError):
    pass


class DimensionMismatch(StateError):
    pass


def _trim(cells: bytes, offset: int) -> tuple[bytes, int]:
    start, stop = 0, len(cells)
    while start < stop and cells[start] == 0:
        start += 1
    while stop > start and cells[stop - 1] == 0:
        stop -= 1
    if start == stop:
        return b"", 0
    return bytes(cells[start:stop]), offset + start


@dataclass(frozen=True, order=True)
class BasisConfig:
    internal: int
    head: int
    offset: int = 0
    cells: bytes = b""
    ancilla: tuple[str, ...] = ()

    def __post_init__(self):
        if self.cells and (self.cells[0] == 0 or self.cells[-1] == 0):
            cells, offset = _trim(self.cells, self.offset)
            object.__setattr__(self, "cells", cells)
            object.__setattr__(self, "offset", offset)
        elif not self.cells and self.offset:
            object.__setattr__(self, "offset", 0)

    @classmethod
    def from_tape(cls, tape: Mapping[int, str] | str, head: int = 0, internal: int = 0,
                  ancilla: Iterable[str] = (), start: int = 0) -> "BasisConfig":
        """Build from a site->symbol map or from a string laid out from ``start``."""
        if isinstance(tape, str):
            tape = {start + i: ch for i, ch in enumerate(tape)}
        sites = [s for s, ch in tape.items() if ch != BLANK_CHAR]
        if not sites:
            return cls(internal, head, 0, b"", tuple(ancilla))
        lo, hi = min(sites), max(sites)
        buf = bytearray(hi - lo + 1)
        for s in sites:
            buf[s - lo] = CODE[tape[s]]
        return cls(internal, head, lo, bytes(buf), tuple(ancilla))

    def symbol(self, site: int) -> int:
        i = site - self.offset
        if 0 <= i < len(self.cells):
            return self.cells[i]
        return 0

    @property
    def tape(self) -> dict[int, str]:
        return {self.offset + i: SYMBOLS[c] for i, c in enumerate(self.cells) if c}

    def tape_text(self, lo: int, hi: int) -> str:
        return "".join(SYMBOLS[self.symbol(s)] for s in range(lo, hi + 1))

    def window(self) -> tuple[int, int]:
        """Smallest site range covering the origin, the head and the tape."""
        if not self.cells:
            return min(0, self.head), max(0, self.head)
        lo = min(0, self.head, self.offset)
        hi = max(0, self.head, self.offset + len(self.cells) - 1)
        return lo, hi

    def with_ancilla(self, labels: tuple[str, ...]) -> "BasisConfig":
        return replace(self, ancilla=labels)

    def complete_expressions(self) -> frozenset[bytes]:
        """Codes of every expression finished left of the head, at sites >= 0."""
        return _complete_set(self.cells, self.offset, self.head)

    def __str__(self) -> str:
        lo, hi = self.window()
        anc = "".join(self.ancilla)
        return f"l={self.internal} j={self.head} [{lo}]{self.tape_text(lo, hi)}" + (f" |{anc}" if anc else "")


@lru_cache(maxsize=1 << 18)
def _complete_set(cells: bytes, offset: int, head: int) -> frozenset[bytes]:
    return frozenset(codes for start, codes in kernels.complete_runs(cells, offset, head) if start >= 0)


@dataclass(frozen=True)
class SparseState:
    """Map from configuration to amplitude; exact zeros are never stored."""

    terms: Mapping[BasisConfig, complex] = field(default_factory=dict)
    L: int = 1

    def __post_init__(self):
        if self.L < 1:
            raise InvalidDimension("L must be >= 1")

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[BasisConfig, complex]]:
        return iter(self.terms.items())

    def norm2(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.terms.values())

    def probability(self, predicate) -> float:
        return math.fsum(abs(a) ** 2 for c, a in self.terms.items() if predicate(c))

    def amplitude(self, config: BasisConfig) -> complex:
        return self.terms.get(config, 0j)

    def heads(self) -> set[int]:
        return {c.head for c in self.terms}

    def sorted_terms(self) -> list[tuple[BasisConfig, complex]]:
        return sorted(self.terms.items(), key=lambda kv: kv[0])

    def scaled(self, factor: complex) -> "SparseState":
        if factor == 0:
            return SparseState({}, self.L)
        return SparseState({c: a * factor for c, a in self.terms.items()}, self.L)

    def filter(self, predicate) -> "SparseState":
        return SparseState({c: a for c, a in self.terms.items() if predicate(c)}, self.L)

    def __add__(self, other: "SparseState") -> "SparseState":
        return superpose([(1, self), (1, other)])

    def __sub__(self, other: "SparseState") -> "SparseState":
        return superpose([(1, self), (-1, other)])


def from_terms(pairs: Iterable[tuple[BasisConfig, complex]], L: int = 1) -> SparseState:
    acc: dict[BasisConfig, complex] = {}
    for cfg, amp in pairs:
        acc[cfg] = acc.get(cfg, 0j) + amp
    return SparseState({c: a for c, a in acc.items() if a != 0}, L)


def init_state(L: int) -> SparseState:
    """Head in internal state 0 at site 0 on a blank tape."""
    if not isinstance(L, int) or L < 1:
        raise InvalidDimension(f"L must be a positive integer, got {L!r}")
    return SparseState({BasisConfig(0, 0): 1 + 0j}, L)


def zero_state(L: int = 1) -> SparseState:
    return SparseState({}, L)


def inner_product(a: SparseState, b: SparseState) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.L != b.L:
        raise DimensionMismatch(f"L differs: {a.L} vs {b.L}")
    small, large = (a.terms, b.terms) if len(a) <= len(b) else (b.terms, a.terms)
    total = 0j
    for cfg in small:
        if cfg in large:
            total += a.terms[cfg].conjugate() * b.terms[cfg]
    return total


def superpose(pairs: Iterable[tuple[complex, SparseState]]) -> SparseState:
    pairs = list(pairs)
    if not pairs:
        raise ValueError("nothing to superpose")
    L = pairs[0][1].L
    acc: dict[BasisConfig, complex] = {}
    for coeff, psi in pairs:
        if psi.L != L:
            raise DimensionMismatch(f"L differs: {L} vs {psi.L}")
        if coeff == 0:
            continue
        for cfg, amp in psi.terms.items():
            acc[cfg] = acc.get(cfg, 0j) + coeff * amp
    return SparseState({c: a for c, a in acc.items() if a != 0}, L)


def attach_ancilla(psi: SparseState, count: int) -> SparseState:
    """Append ``count`` ancilla qubytes in the no-measurement state ``i``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    extra = ("i",) * count
    return SparseState({c.with_ancilla(c.ancilla + extra): a for c, a in psi.terms.items()}, psi.L)


def basis_state(config: BasisConfig, L: int = 1) -> SparseState:
    return SparseState({config: 1 + 0j}, L)


# -- serialization --------------------------------------------------------------


def dump(psi: SparseState, fp: TextIO) -> None:
    """One JSON record per term, sorted; amplitudes as ``[re, im]``."""
    fp.write(json.dumps({"L": psi.L, "terms": len(psi)}) + "\n")
    for cfg, amp in psi.sorted_terms():
        lo, hi = cfg.window()
        rec = {
            "internal": cfg.internal,
            "head": cfg.head,
            "window": lo,
            "tape": cfg.tape_text(lo, hi),
            "ancilla": "".join(cfg.ancilla),
            "amp": [amp.real, amp.imag],
        }
        fp.write(json.dumps(rec) + "\n")


def load(fp: TextIO) -> SparseState:
    header = json.loads(fp.readline())
    pairs = []
    for line in fp:
        if not line.strip():
            continue
        rec = json.loads(line)
        cfg = BasisConfig.from_tape(rec["tape"], rec["head"], rec["internal"], tuple(rec["ancilla"]),
                                    start=rec["window"])
        pairs.append((cfg, complex(*rec["amp"])))
    return from_terms(pairs, header["L"])
