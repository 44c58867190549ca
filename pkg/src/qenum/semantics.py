"""Truth, validity, consistency and completeness as matrix elements.

A sentence S is n-printable when ``<Psi(n)|Q^h_S|Psi(n)> > EPS``. Its truth is
only defined on the paths carrying it: ``P(X)`` is n,m-false when some path
with S lacks X after m more steps, ``~P(X)`` when some path with S has X.
Limits in n are taken as a finite horizon, with a flag saying whether the
verdict can still change as n grows.

Every function takes a "machine": a :class:`~qenum.dynamics.MachineRun`, a
:class:`~qenum.machines.MachineSpec` (run from its initial state), or a
:class:`PreparedState` (a fixed state such as the constructor output, which
supports ``m = 0`` only).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dynamics import MachineRun, StepOperator
from .lang import (BASE_ATOMIC, WITH_PN, Expression, Kind, SentenceSet, as_expression, classify,
                   is_sentence, referent, sentence)
from .machines import MachineSpec
from .projectors import combine, expectation, limit, limit_not, sandwich
from .state import EPS, SparseState, attach_ancilla, inner_product

EQUIV_TOL = 1e-9


class SemanticsError(ValueError):
    pass


class EquivalenceViolation(RuntimeError):
    """The two equivalent truth definitions disagreed; this is an internal error."""


class NotApplicable(SemanticsError):
    pass


class Status(str, enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNDEFINED = "undefined"


class Finality(str, enum.Enum):
    FINAL = "final"
    MAY_CHANGE = "may_change_with_n"


@dataclass(frozen=True)
class TruthVerdict:
    status: Status
    witness: dict
    n: int
    m: int
    monotone_note: Finality = Finality.MAY_CHANGE
    history: tuple[Status, ...] = ()

    @property
    def is_true(self) -> bool:
        return self.status is Status.TRUE


class PreparedState:
    """A fixed state used as Psi at the evaluation horizon; it has no dynamics."""

    def __init__(self, psi, name: str = "prepared"):
        self.psi = psi
        self.name = name
        self.L = getattr(psi, "L", 1)

    def state(self, n: int):
        return self.psi

    def advance(self, psi, m: int):
        if m:
            raise SemanticsError("a prepared state cannot be advanced in time")
        return psi


def as_machine(machine):
    if isinstance(machine, (MachineRun, PreparedState)):
        return machine
    if isinstance(machine, MachineSpec):
        return MachineRun.from_spec(machine)
    if isinstance(machine, StepOperator):
        return MachineRun(machine)
    if isinstance(machine, SparseState) or hasattr(machine, "expectation"):
        return PreparedState(machine)
    raise TypeError(f"cannot use {type(machine).__name__} as a machine")


@dataclass(frozen=True)
class SentenceParts:
    sentence: Expression
    kind: Kind
    referent: Expression

    @property
    def negative(self) -> bool:
        return self.kind.negative


def parts(s: Expression | str, sentence_set: SentenceSet = WITH_PN) -> SentenceParts:
    s = as_expression(s)
    form = classify(s, sentence_set)
    if not form.is_sentence:
        from .lang import NotASentence

        raise NotASentence(f"{s} is not a sentence")
    return SentenceParts(s, form.kind, referent(form))


def _advance(machine, psi, m):
    return machine.advance(psi, m) if m else psi


# -- printability and truth -------------------------------------------------------


def printability(machine, s: Expression | str, n: int) -> float:
    machine = as_machine(machine)
    return expectation(limit(s), machine.state(n))


def _false_projector(p: SentenceParts):
    """The referent test whose weight on the sentence's paths makes it false."""
    return limit(p.referent) if p.negative else limit_not(p.referent)


def _equivalent_form(machine, p: SentenceParts, n: int, m: int, prob: float) -> float:
    """``<Psi(n)|T^-m Q T^m Q^h_S|Psi(n)> - <Q^h_S>`` with Q the truth-side referent test."""
    true_side = limit_not(p.referent) if p.negative else limit(p.referent)
    psi = machine.state(n)
    if m == 0:
        return expectation(combine([true_side, limit(p.sentence)], "and"), psi) - prob
    later = machine.state(n + m)
    moved = machine.advance(psi.filter(limit(p.sentence).predicate), m)
    value = inner_product(later, moved.filter(true_side.predicate))
    if abs(value.imag) > EQUIV_TOL:
        raise EquivalenceViolation(f"imaginary part {value.imag:.3e} in a diagonal matrix element")
    return value.real - prob


def nm_truth(machine, s: Expression | str, n: int, m: int = 0, eps: float = EPS,
             sentence_set: SentenceSet = WITH_PN) -> TruthVerdict:
    machine = as_machine(machine)
    if n < 0 or m < 0:
        raise ValueError("n and m must be >= 0")
    p = parts(s, sentence_set)
    prob = printability(machine, p.sentence, n)
    if prob <= eps:
        return TruthVerdict(Status.UNDEFINED, {"printability": prob}, n, m)
    false_w = sandwich(machine.state(n), _false_projector(p), machine, m, limit(p.sentence))
    alt = _equivalent_form(machine, p, n, m, prob)
    status = Status.FALSE if false_w > eps else Status.TRUE
    status2 = Status.FALSE if alt < -eps else Status.TRUE
    if abs(false_w + alt) > EQUIV_TOL or status is not status2:
        raise EquivalenceViolation(
            f"{p.sentence} at n={n}, m={m}: witness {false_w:.3e} vs equivalent form {alt:.3e}")
    note = Finality.FINAL if (p.negative and status is Status.FALSE and m == 0) else Finality.MAY_CHANGE
    return TruthVerdict(status, {"printability": prob, "false_witness": false_w, "equivalent": alt}, n, m, note)


def truth(machine, s: Expression | str, horizon: int, eps: float = EPS,
          sentence_set: SentenceSet = WITH_PN) -> TruthVerdict:
    """Evaluate at m = 0 for n = 1..horizon and report the verdict at the horizon.

    ``<Q^h_X Q^h_S>`` only grows with n, so a false negative sentence stays
    false; every other verdict may change at larger n.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    machine = as_machine(machine)
    if isinstance(machine, PreparedState):
        v = nm_truth(machine, s, horizon, 0, eps, sentence_set)
        return TruthVerdict(v.status, v.witness, horizon, 0, v.monotone_note, (v.status,))
    history = []
    final = None
    for n in range(1, horizon + 1):
        v = nm_truth(machine, s, n, 0, eps, sentence_set)
        history.append(v.status)
        final = v
    return TruthVerdict(final.status, final.witness, horizon, 0, final.monotone_note, tuple(history))


def alt_truth(machine, s: Expression | str, horizon: int, eps: float = EPS) -> TruthVerdict:
    """Truth defined everywhere: ``P(X)`` holds iff X is printable at the horizon."""
    machine = as_machine(machine)
    p = parts(s)
    px = printability(machine, p.referent, horizon)
    printed = px > eps
    status = Status.TRUE if printed != p.negative else Status.FALSE
    return TruthVerdict(status, {"referent_printability": px}, horizon, 0)


# -- validity ---------------------------------------------------------------------


@dataclass(frozen=True)
class ValidityResult:
    sentence: Expression
    valid: bool
    verdict: TruthVerdict
    printability: float
    sum_check: float  # truth-side weight plus weight of paths without S; 1 when valid


def validity_detail(machine, s: Expression | str, n: int | None = None, m: int = 0,
                    horizon: int | None = None, eps: float = EPS) -> ValidityResult:
    machine = as_machine(machine)
    if (n is None) == (horizon is None):
        raise ValueError("give exactly one of n or horizon")
    if horizon is not None:
        verdict = truth(machine, s, horizon, eps)
        n = horizon
    else:
        verdict = nm_truth(machine, s, n, m, eps)
    prob = verdict.witness["printability"]
    valid = verdict.status is not Status.FALSE
    norm2 = machine.state(n).norm2()
    # truth-side weight on the S paths plus the weight of paths without S
    if verdict.status is Status.UNDEFINED:
        total = norm2
    else:
        total = (verdict.witness["equivalent"] + prob) + (norm2 - prob)
        if valid != (abs(total - norm2) <= eps + 1e-12):
            raise EquivalenceViolation(f"validity sum check disagrees for {s}: {total} vs {norm2}")
    return ValidityResult(as_expression(s), valid, verdict, prob, total)


def validity(machine, s: Expression | str, n: int | None = None, m: int = 0,
             horizon: int | None = None, eps: float = EPS) -> bool:
    return validity_detail(machine, s, n, m, horizon, eps).valid


def printed_sentences(machine, n: int, sentence_set: SentenceSet = WITH_PN) -> list[Expression]:
    """Every sentence finished in ``[0, n-2]`` on some path of Psi(n)."""
    machine = as_machine(machine)
    psi = machine.state(n)
    if not isinstance(psi, SparseState):
        return []
    seen = set()
    for cfg in psi.terms:
        seen.update(cfg.complete_expressions())
    out = [Expression.from_codes(c) for c in seen]
    return sorted((x for x in out if is_sentence(x, sentence_set)), key=lambda x: (len(x), x.text))


def aggregate_validity(machine, n: int, m: int = 0, eps: float = EPS,
                       sentence_set: SentenceSet = BASE_ATOMIC) -> tuple[bool, list[ValidityResult]]:
    """n,m-validity over every sentence fitting in ``[0, n-2]``.

    Sentences absent from every path are vacuously valid, so only the printed
    ones need a check.
    """
    results = [validity_detail(machine, s, n=n, m=m, eps=eps)
               for s in printed_sentences(machine, n, sentence_set)]
    return all(r.valid for r in results), results


# -- consistency, completeness, correlation ---------------------------------------


def consistency(machine, x: Expression | str, n: int, eps: float = EPS) -> tuple[bool, float]:
    """No path carries both ``P(X)`` and ``~P(X)``; returns ``(flag, joint)``."""
    x = as_expression(x)
    if is_sentence(x):
        raise NotApplicable(f"{x} is a sentence; consistency is for non-sentence arguments")
    machine = as_machine(machine)
    joint = expectation(combine([limit(sentence(Kind.P_OF_X, x)), limit(sentence(Kind.NEG_P_OF_X, x))],
                                "and"), machine.state(n))
    return joint <= eps, joint


def completeness(machine, s: Expression | str, horizon: int, eps: float = EPS) -> bool:
    return printability(machine, s, horizon) > eps


@dataclass(frozen=True)
class Correlation:
    joint: float
    product: float
    deviation: float


def correlation(machine, s: Expression | str, n: int) -> Correlation:
    """``<Q^h_X Q^h_S>`` against ``<Q^h_X><Q^h_S>``; zero deviation means no correlation."""
    machine = as_machine(machine)
    p = parts(s)
    psi = machine.state(n)
    joint = expectation(combine([limit(p.referent), limit(p.sentence)], "and"), psi)
    product = expectation(limit(p.referent), psi) * expectation(limit(p.sentence), psi)
    return Correlation(joint, product, joint - product)


# -- premeasurement ---------------------------------------------------------------


@dataclass(frozen=True)
class MeasurementOutcome:
    labels: tuple[str, ...]  # which ancilla records which test
    branches: dict  # ancilla labels -> SparseState

    def probabilities(self) -> dict[tuple[str, ...], float]:
        return {k: v.norm2() for k, v in self.branches.items()}

    def total(self) -> float:
        return math.fsum(self.probabilities().values())


def _record(psi: SparseState, slot: int, test, only_if: tuple[int, str] | None = None) -> SparseState:
    """Unitary correlation step: set ancilla ``slot`` from ``i`` to ``1``/``0`` by ``test``."""
    out = {}
    for cfg, amp in psi.terms.items():
        labels = list(cfg.ancilla)
        if only_if is None or labels[only_if[0]] == only_if[1]:
            labels[slot] = "1" if test(cfg) else "0"
        out[cfg.with_ancilla(tuple(labels))] = amp
    return SparseState(out, psi.L)


def _split(psi: SparseState, keys: Iterable[tuple[str, ...]]) -> dict:
    groups = {k: {} for k in keys}
    for cfg, amp in psi.terms.items():
        groups.setdefault(cfg.ancilla, {})[cfg.with_ancilla(())] = amp
    return {k: SparseState(v, psi.L) for k, v in groups.items()}


MEASURE_KEYS = (("1", "1"), ("1", "0"), ("0", "i"))


def measure(machine, s: Expression | str, n: int, m: int = 0) -> MeasurementOutcome:
    """Record S at time n, run m steps, then record X_S on the paths that had S."""
    machine = as_machine(machine)
    p = parts(s)
    psi = attach_ancilla(machine.state(n), 2)
    psi = _record(psi, 0, limit(p.sentence).predicate)
    psi = _advance(machine, psi, m)
    psi = _record(psi, 1, limit(p.referent).predicate, only_if=(0, "1"))
    return MeasurementOutcome(("S", "X_S"), _split(psi, MEASURE_KEYS))


def pair_keys() -> list[tuple[str, str, str, str]]:
    keys = []
    for a in "10":
        for b in "10":
            xa = "10" if a == "1" else "i"
            xb = "10" if b == "1" else "i"
            keys.extend((a, b, u, v) for u in xa for v in xb)
    return keys


def measure_pair(machine, s: Expression | str, s2: Expression | str, n: int, m: int = 0,
                 order: str = "forward") -> MeasurementOutcome:
    """Two sentences at once: ancillas (S, S', X_S, X_S'), nine branches.

    ``order="reverse"`` applies the two sentence records and the two referent
    records in the opposite order; the result is the same since they commute.
    """
    machine = as_machine(machine)
    p, q = parts(s), parts(s2)
    if p.sentence == q.sentence:
        raise ValueError("the two sentences must differ")
    psi = attach_ancilla(machine.state(n), 4)
    first = [(0, p.sentence, None), (1, q.sentence, None)]
    second = [(2, p.referent, (0, "1")), (3, q.referent, (1, "1"))]
    if order == "reverse":
        first.reverse()
        second.reverse()
    for slot, x, cond in first:
        psi = _record(psi, slot, limit(x).predicate, cond)
    psi = _advance(machine, psi, m)
    for slot, x, cond in second:
        psi = _record(psi, slot, limit(x).predicate, cond)
    return MeasurementOutcome(("S", "S'", "X_S", "X_S'"), _split(psi, pair_keys()))


# -- finite-size inequality brackets --------------------------------------------------


@dataclass(frozen=True)
class AppendixCheck:
    lhs: float
    mid: float
    rhs: float
    ok: bool
    neg_lhs: float
    neg_mid: float
    neg_rhs: float
    neg_floor: float
    neg_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.ok and self.neg_ok


def appendix_check(machine, s: Expression | str, n: int, m: int, tol: float = EPS) -> AppendixCheck:
    """Bracket the m-step matrix element between the time-n and time-(n+m) ones.

    With Q = Q^h_{X_S}:  <Q Q_S>_n <= ||Q T^m Q_S Psi(n)||^2 <= <Q Q_S>_{n+m}.
    With the complement the referent region only shrinks its weight as it grows,
    so the first inequality turns around, and the middle value is also bounded
    below by ``<Q_S>_n - <Q Q_S>_{n+m}``.
    """
    machine = as_machine(machine)
    p = parts(s)
    qs, qx, qnx = limit(p.sentence), limit(p.referent), limit_not(p.referent)
    now, later = machine.state(n), machine.state(n + m)
    lhs = expectation(combine([qx, qs], "and"), now)
    mid = sandwich(now, qx, machine, m, qs)
    rhs = expectation(combine([qx, qs], "and"), later)
    neg_lhs = expectation(combine([qnx, qs], "and"), now)
    neg_mid = sandwich(now, qnx, machine, m, qs)
    neg_rhs = expectation(combine([qnx, qs], "and"), later)
    floor = expectation(qs, now) - rhs
    ok = lhs <= mid + tol and mid <= rhs + tol
    neg_ok = neg_mid <= neg_lhs + tol and neg_mid <= neg_rhs + tol and floor <= neg_mid + tol
    return AppendixCheck(lhs, mid, rhs, ok, neg_lhs, neg_mid, neg_rhs, floor, neg_ok)


# -- reports ----------------------------------------------------------------------


SELF_REFERENTIAL_PAIR = (Expression("~PN(~PN)"), Expression("PN(~PN)"))


@dataclass(frozen=True)
class SentenceRecord:
    sentence: str
    printability: float
    verdict: str
    witnesses: dict
    valid: bool
    finality: str
    complete: bool

    def to_dict(self) -> dict:
        return {
            "sentence": self.sentence,
            "printability": self.printability,
            "verdict": self.verdict,
            "witnesses": self.witnesses,
            "valid": self.valid,
            "finality": self.finality,
            "complete": self.complete,
        }


@dataclass(frozen=True)
class SemanticsReport:
    machine: str
    horizon: int
    records: tuple[SentenceRecord, ...]
    consistency: tuple[dict, ...]
    summary: dict = field(default_factory=dict)

    @property
    def invalid(self) -> list[str]:
        return [r.sentence for r in self.records if not r.valid]

    @property
    def incomplete(self) -> list[str]:
        return [r.sentence for r in self.records if not r.complete]

    def to_dict(self) -> dict:
        return {
            "machine": self.machine,
            "horizon": self.horizon,
            "sentences": [r.to_dict() for r in self.records],
            "consistency": list(self.consistency),
            "summary": self.summary,
        }


def _round(x: float) -> float:
    # stable text output across runs: drop float noise below the threshold scale
    return 0.0 if abs(x) < 1e-15 else float(f"{x:.15g}")


def build_report(machine, horizon: int, sentences: Sequence[Expression | str] | None = None,
                 max_len: int | None = None, include_printed: bool = True,
                 eps: float = EPS) -> SemanticsReport:
    """Per-sentence truth/validity/completeness plus consistency and a summary.

    ``sentences`` defaults to every base sentence of length ``<= max_len``;
    sentences printed by the machine are always added when ``include_printed``.
    """
    from .lang import atomic_sentences

    machine = as_machine(machine)
    wanted: list[Expression] = [as_expression(s) for s in sentences] if sentences is not None else []
    if sentences is None and max_len is not None:
        wanted = atomic_sentences(max_len)
    if include_printed:
        wanted += printed_sentences(machine, horizon)
    wanted = list(dict.fromkeys(wanted))

    records = []
    for s in wanted:
        res = validity_detail(machine, s, horizon=horizon, eps=eps)
        v = res.verdict
        records.append(SentenceRecord(
            s.text, _round(res.printability), v.status.value,
            {k: _round(val) for k, val in v.witness.items()},
            res.valid, v.monotone_note.value, res.printability > eps))

    args = []
    for s in wanted:
        form = classify(s, BASE_ATOMIC)
        if form.is_sentence and form.argument not in args:
            args.append(form.argument)
    pairs = []
    for x in args:
        flag, joint = consistency(machine, x, horizon, eps)
        pairs.append({"argument": x.text, "joint": _round(joint), "consistent": flag})

    printed_pair = [s.text for s in SELF_REFERENTIAL_PAIR if printability(machine, s, horizon) > eps]
    summary = {
        "sentences": len(records),
        "valid": sum(r.valid for r in records),
        "invalid": [r.sentence for r in records if not r.valid],
        "complete": sum(r.complete for r in records),
        "incomplete": len([r for r in records if not r.complete]),
        "inconsistent": [p["argument"] for p in pairs if not p["consistent"]],
        "maximal_completeness": {
            "excluded_by_consistency": [s.text for s in SELF_REFERENTIAL_PAIR],
            "excluded_printed": printed_pair,
            "incomplete_other": [r.sentence for r in records
                                 if not r.complete and Expression(r.sentence) not in SELF_REFERENTIAL_PAIR],
        },
    }
    return SemanticsReport(getattr(machine, "name", "machine"), horizon, tuple(records), tuple(pairs), summary)
