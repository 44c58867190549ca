"""The single-step operator T = U (x) u and its application to sparse states.

U acts on (internal state, cell at the head, cell right of the head); u moves
the head one site right. Each column of U is stored as the list of its nonzero
entries so one application touches only the reachable outputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .lang import Alphabet
from .machines import MachineSpec, internal_dimension, unitary_for
from .state import BasisConfig, SparseState, StateError, init_state

UNITARY_TOL = 1e-12


class DynamicsError(ValueError):
    pass


class NotUnitary(DynamicsError):
    def __init__(self, deviation: float):
        super().__init__(f"U is not unitary: max |U^dagger U - I| = {deviation:.3e}")
        self.deviation = deviation


class BadDimension(DynamicsError):
    pass


class BadRegion(DynamicsError):
    pass


@dataclass(frozen=True, eq=False)
class StepOperator:
    L: int
    k: int
    U: np.ndarray = field(repr=False)
    columns: tuple = field(repr=False)
    name: str = ""

    def column(self, l: int, a: int, b: int) -> tuple:
        return self.columns[(l * self.k + a) * self.k + b]


def unitarity_deviation(U: np.ndarray) -> float:
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def step_from_matrix(U: np.ndarray, L: int, alphabet: Alphabet = Alphabet.BASE, name: str = "") -> StepOperator:
    k = alphabet.size
    U = np.asarray(U, dtype=complex)
    dim = k * k * L
    if U.shape != (dim, dim):
        raise BadDimension(f"U must be {dim}x{dim} ({k * k}L with L={L}), got {U.shape[0]}x{U.shape[1]}")
    dev = unitarity_deviation(U)
    if dev > UNITARY_TOL:
        raise NotUnitary(dev)
    cols = []
    for c in range(dim):
        rows = np.nonzero(U[:, c])[0]
        entries = []
        for r in rows:
            l2, rest = divmod(int(r), k * k)
            a2, b2 = divmod(rest, k)
            entries.append((l2, a2, b2, complex(U[r, c])))
        cols.append(tuple(entries))
    return StepOperator(L, k, U, tuple(cols), name)


def build_step(spec: MachineSpec) -> StepOperator:
    L = internal_dimension(spec)
    return step_from_matrix(unitary_for(spec), L, spec.alphabet, spec.describe())


def apply_step(T: StepOperator, psi: SparseState) -> SparseState:
    if psi.L != T.L:
        raise BadDimension(f"state has L={psi.L}, operator has L={T.L}")
    k = T.k
    acc: dict[BasisConfig, complex] = {}
    for cfg, amp in psi.terms.items():
        j = cfg.head
        a, b = cfg.symbol(j), cfg.symbol(j + 1)
        if a >= k or b >= k:
            raise StateError(f"symbol code outside a {k}-symbol alphabet at site {j}")
        for l2, a2, b2, u in T.columns[(cfg.internal * k + a) * k + b]:
            if a2 == a and b2 == b:
                new = BasisConfig(l2, j + 1, cfg.offset, cfg.cells, cfg.ancilla)
            else:
                cells, off = kernels.write_pair(cfg.cells, cfg.offset, j, a2, b2)
                new = BasisConfig(l2, j + 1, off, cells, cfg.ancilla)
            acc[new] = acc.get(new, 0j) + u * amp
    return SparseState({c: v for c, v in acc.items() if v != 0}, psi.L)


def apply_steps(T: StepOperator, psi: SparseState, n: int) -> SparseState:
    if n < 0:
        raise ValueError("n must be >= 0")
    for _ in range(n):
        psi = apply_step(T, psi)
    return psi


def split_apply(T: StepOperator, psi: SparseState) -> tuple[SparseState, SparseState]:
    """``(T0 psi, Tnz psi)``: the step split by the symbol left at the site just passed."""
    out = apply_step(T, psi)
    zero = out.filter(lambda c: c.symbol(c.head - 1) == 0)
    nonzero = out.filter(lambda c: c.symbol(c.head - 1) != 0)
    return zero, nonzero


def region_expectation(psi: SparseState, region: tuple[int, int], s: str) -> float:
    lo, hi = region
    if hi < lo or len(s) != hi - lo + 1:
        raise BadRegion(f"string of length {len(s)} does not fit region [{lo}, {hi}]")
    return psi.probability(lambda c: c.tape_text(lo, hi) == s)


class MachineRun:
    """A machine driven from its initial state, with the states Psi(n) cached."""

    def __init__(self, T: StepOperator, spec: MachineSpec | None = None):
        self.T = T
        self.spec = spec
        self.name = T.name
        self._states = [init_state(T.L)]

    @classmethod
    def from_spec(cls, spec: MachineSpec) -> "MachineRun":
        return cls(build_step(spec), spec)

    @property
    def L(self) -> int:
        return self.T.L

    def state(self, n: int) -> SparseState:
        if n < 0:
            raise ValueError("n must be >= 0")
        while len(self._states) <= n:
            self._states.append(apply_step(self.T, self._states[-1]))
        return self._states[n]

    def advance(self, psi: SparseState, m: int) -> SparseState:
        return apply_steps(self.T, psi, m)

    def head_at(self, n: int) -> int:
        return n
