"""Diagonal projectors over configurations.

Every projector here is a predicate on :class:`BasisConfig`: applying it keeps
the terms where the predicate holds. Diagonal projectors commute, so sums and
products reduce to boolean or/and, and the least upper bound of a family is the
union of supports.

Projectors built from the limit form (an expression finished somewhere in
``[0, head-2]``, for every head position) also carry their expressions as
``atoms`` and a boolean ``formula`` over which atoms occur. That lets product
states (see :mod:`qenum.constructor`) evaluate them without expanding.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from . import kernels
from .lang import Expression, as_expression
from .state import BasisConfig, SparseState


@dataclass(frozen=True, eq=False)
class Projector:
    predicate: Callable[[BasisConfig], bool]
    description: str
    atoms: tuple[bytes, ...] | None = None
    formula: Callable[[Mapping[bytes, bool]], bool] | None = None

    def __call__(self, config: BasisConfig) -> bool:
        return bool(self.predicate(config))

    def __and__(self, other: "Projector") -> "Projector":
        return combine([self, other], "and")

    def __or__(self, other: "Projector") -> "Projector":
        return combine([self, other], "or")

    def __invert__(self) -> "Projector":
        return combine([self], "not")

    def __str__(self) -> str:
        return self.description


IDENTITY = Projector(lambda c: True, "1", (), lambda occ: True)
ZERO = Projector(lambda c: False, "0", (), lambda occ: False)


def q_at(x: Expression | str, b: int) -> Projector:
    """X occupies sites ``[b-len+1, b]`` with blanks on both sides; head free."""
    x = as_expression(x)
    codes = x.codes
    return Projector(lambda c: kernels.delimited_at(c.cells, c.offset, codes, b),
                     f"Q[{x.text}@{b}]")


def q_region(x: Expression | str, m: int, n: int, negated: bool = False,
             first_only: int | None = None) -> Projector:
    """X ends somewhere in ``[m+len-1, n]``; or its complement; or only its first occurrence.

    ``first_only=j`` keeps configurations where X ends exactly at ``m+j`` and
    nowhere earlier in the region; ``j`` runs over ``[len-1, n-m]``.
    """
    if m > n:
        raise ValueError(f"empty region [{m}, {n}]")
    x = as_expression(x)
    codes = x.codes
    lo = m + len(codes) - 1
    if first_only is not None:
        if negated:
            raise ValueError("first_only and negated are exclusive")
        end = m + first_only
        if first_only < len(codes) - 1 or end > n:
            return Projector(ZERO.predicate, f"Q1st[{x.text},{m},{n},j={first_only}]=0")

        def first(c: BasisConfig) -> bool:
            return (kernels.delimited_at(c.cells, c.offset, codes, end)
                    and not kernels.delimited_ends(c.cells, c.offset, codes, lo, end - 1))

        return Projector(first, f"Q1st[{x.text},[{m},{n}],j={first_only}]")
    if lo > n:
        base = Projector(ZERO.predicate, f"Q[{x.text},[{m},{n}]]=0")
    else:
        base = Projector(lambda c: bool(kernels.delimited_ends(c.cells, c.offset, codes, lo, n)),
                         f"Q[{x.text},[{m},{n}]]")
    return ~base if negated else base


def head_at(site: int) -> Projector:
    return Projector(lambda c: c.head == site, f"Qh[{site}]")


def q_h(x: Expression | str, m: int, n: int, k: int = 0) -> Projector:
    """X in ``[m, n]`` and the head exactly ``k+2`` sites beyond ``n``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return combine([q_region(x, m, n), head_at(n + k + 2)], "and")


def limit(x: Expression | str) -> Projector:
    """Limit form Q^h_X: X finished at sites ``>= 0`` and at least two sites left of the head."""
    x = as_expression(x)
    codes = x.codes
    return Projector(lambda c: codes in c.complete_expressions(), f"Qh[{x.text}]",
                     (codes,), lambda occ: occ[codes])


def limit_not(x: Expression | str) -> Projector:
    return ~limit(x)


def limit_all(xs: Sequence[Expression | str]) -> Projector:
    """Q^h of the conjunction: every listed expression present."""
    return combine([limit(x) for x in xs], "and")


def combine(ops: Sequence[Projector], mode: str) -> Projector:
    ops = list(ops)
    if not ops:
        raise ValueError("combine needs at least one projector")
    symbolic = all(p.atoms is not None for p in ops)
    atoms = tuple(dict.fromkeys(a for p in ops for a in p.atoms)) if symbolic else None
    if mode == "not":
        if len(ops) != 1:
            raise ValueError("not takes exactly one projector")
        (p,) = ops
        pred = p.predicate
        return Projector(lambda c: not pred(c), f"not({p.description})", atoms,
                         (lambda occ: not p.formula(occ)) if symbolic else None)
    preds = [p.predicate for p in ops]
    desc = f" {mode} ".join(p.description for p in ops)
    if mode == "and":
        formula = (lambda occ: all(p.formula(occ) for p in ops)) if symbolic else None
        return Projector(lambda c: all(f(c) for f in preds), f"({desc})", atoms, formula)
    if mode == "or":
        formula = (lambda occ: any(p.formula(occ) for p in ops)) if symbolic else None
        return Projector(lambda c: any(f(c) for f in preds), f"({desc})", atoms, formula)
    raise ValueError(f"unknown mode {mode!r}")


def apply(p: Projector, psi) -> SparseState:
    if not isinstance(psi, SparseState):
        psi = psi.to_sparse()
    return psi.filter(p.predicate)


def expectation(p: Projector, psi) -> float:
    """``<psi|P|psi>``; product states evaluate symbolic projectors without expanding."""
    if isinstance(psi, SparseState):
        return psi.probability(p.predicate)
    return psi.expectation(p)


def sandwich(psi, left: Projector, T, m: int, right: Projector) -> float:
    """``|| left T^m right psi ||^2``.

    ``T`` is a :class:`~qenum.dynamics.StepOperator` or anything with an
    ``advance(state, m)`` method; it is not touched when ``m == 0``.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        if isinstance(psi, SparseState):
            return psi.probability(lambda c: right.predicate(c) and left.predicate(c))
        return psi.expectation(combine([right, left], "and"))
    from .dynamics import StepOperator, apply_steps

    phi = apply(right, psi)
    phi = apply_steps(T, phi, m) if isinstance(T, StepOperator) else T.advance(phi, m)
    return phi.probability(left.predicate)
