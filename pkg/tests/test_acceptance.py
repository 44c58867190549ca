"""Acceptance criteria 1-11, one marker per criterion.

The terminal summary prints a PASS/FAIL line per criterion (see conftest).
Time limits are asserted inside the tests that carry one.
"""
import itertools
import math
import time

import numpy as np
import pytest

from qenum import kernels
from qenum.constructor import build_qucom, qft_argument, qft_expected, qucom_sentences, verify_qucom
from qenum.dynamics import MachineRun, apply_step
from qenum.lang import (ChainStatus, Expression, atomic_sentences, chain, count_sentences, delta_formula,
                        is_sentence, iter_expressions, WITH_PN)
from qenum.machines import BUILTINS, MachineSpec
from qenum.projectors import apply, combine, expectation, limit, q_h, q_region
from qenum.semantics import (SELF_REFERENTIAL_PAIR, EquivalenceViolation, Status, appendix_check,
                             consistency, nm_truth, printability, printed_sentences, validity)
from qenum.state import BasisConfig, superpose

import oracles

EPS = 1e-10

BATTERY = {name: spec for name, spec in BUILTINS.items()}
BATTERY.update({f"random-internal-{s}": MachineSpec("random_internal", L=2, seed=s, name=f"random-internal-{s}")
                for s in (7, 11, 23)})
_RUNS = {}


def run(name):
    if name not in _RUNS:
        _RUNS[name] = MachineRun.from_spec(BATTERY[name])
    return _RUNS[name]


def sentences_for(name, horizon, fallback=4):
    found = printed_sentences(run(name), horizon)
    return found or atomic_sentences(fallback)


def close(a, b, tol=1e-12):
    return all(abs(v) <= tol for _, v in superpose([(1, a), (-1, b)]))


@pytest.mark.criterion(1, "unitarity and locality of every builtin, n <= 30, < 10 s")
def test_unitarity_and_locality():
    t0 = time.perf_counter()
    for name, spec in BUILTINS.items():
        r = MachineRun.from_spec(spec)
        for n in range(31):
            psi = r.state(n)
            assert abs(psi.norm2() - 1) <= 1e-12, (name, n)
            assert psi.heads() <= {n}
            if n < 30:
                for cfg, amp in psi:
                    for new, _ in apply_step(r.T, type(psi)({cfg: amp}, r.L)):
                        lo = min(cfg.offset, new.offset, cfg.head)
                        hi = max(cfg.offset + len(cfg.cells), new.offset + len(new.cells), cfg.head + 2)
                        changed = {s for s in range(lo, hi) if new.symbol(s) != cfg.symbol(s)}
                        assert changed <= {cfg.head, cfg.head + 1}, (name, n)
    assert time.perf_counter() - t0 < 10


class TestProjectorAlgebra:
    """Criterion 2; the three tests together must stay under 60 s."""

    started = None

    @classmethod
    def _clock(cls):
        if cls.started is None:
            cls.started = time.perf_counter()
        return time.perf_counter() - cls.started

    @pytest.mark.criterion(2, "projector algebra: complement, first-occurrence decomposition, commutation, < 60 s")
    def test_decomposition_exhaustive_width8(self):
        self._clock()
        width = 8
        tapes = oracles.all_tapes(width)
        regions = [(0, 7), (1, 6), (2, 7)]
        for size in (1, 2, 3):
            for x in iter_expressions(size):
                occ = oracles.occurrence_matrix(tapes, x.text)
                for m, n in regions:
                    total, hits, bad = kernels.first_occurrence_sweep(width, x.codes, m, n)
                    lo = m + size - 1
                    region = occ[:, lo:n + 1].any(axis=1)
                    firsts = np.zeros(len(tapes), dtype=np.int64)
                    for end in range(lo, n + 1):
                        firsts += occ[:, end] & ~occ[:, lo:end].any(axis=1)
                    assert (total, hits, bad) == (len(tapes), int(region.sum()), 0), (x.text, m, n)
                    assert np.array_equal(firsts, region.astype(np.int64))

    @pytest.mark.criterion(2, "projector algebra: complement, first-occurrence decomposition, commutation, < 60 s")
    def test_library_projectors_against_oracle(self):
        self._clock()
        # full width 8 for one expression of each length, every expression at width 5
        cases = [(8, [Expression("~"), Expression("P("), Expression("P(~")])]
        cases.append((5, [x for k in (1, 2, 3) for x in iter_expressions(k)]))
        for width, exprs in cases:
            tapes = oracles.all_tapes(width)
            configs = [BasisConfig(0, 0, 0, bytes(row)) for row in tapes]
            m, n = 0, width - 1
            for x in exprs:
                region, firsts = oracles.first_occurrence_tables(tapes, x.text, m, n)
                p, notp = q_region(x, m, n), q_region(x, m, n, negated=True)
                got = np.fromiter((p(c) for c in configs), bool, len(configs))
                got_not = np.fromiter((notp(c) for c in configs), bool, len(configs))
                assert np.array_equal(got, region)
                assert np.all(got ^ got_not)  # Q + Q_not = 1 exactly
                count = np.zeros(len(configs), dtype=np.int64)
                for j, want in firsts.items():
                    f = q_region(x, m, n, first_only=j)
                    col = np.fromiter((f(c) for c in configs), bool, len(configs))
                    assert np.array_equal(col, want)
                    count += col
                assert np.array_equal(count, region.astype(np.int64))

    @pytest.mark.criterion(2, "projector algebra: complement, first-occurrence decomposition, commutation, < 60 s")
    def test_commutation_on_reachable_states(self):
        self._clock()
        for name in BATTERY:
            r = run(name)
            for t in range(2, 11):
                psi = r.state(t)
                stepped = apply_step(r.T, psi)
                exprs = {c for cfg in psi.terms for c in cfg.complete_expressions()} | {b"\x01", b"\x02"}
                for codes in exprs:
                    x = Expression.from_codes(codes)
                    for m in (0, 1):
                        for n in range(m, t - 1):
                            k = t - n - 2
                            lhs = apply_step(r.T, apply(q_h(x, m, n, k), psi))
                            rhs = apply(q_h(x, m, n, k + 1), stepped)
                            assert close(lhs, rhs), (name, x.text, m, n, k)
        assert self._clock() < 60


@pytest.mark.criterion(3, "validity for P(X) and ~P(X) forces a zero joint element; adversarial flagged")
def test_pair_validity_rules_out_joint_occurrence():
    assert len(BATTERY) >= 20
    checked = 0
    for name in BATTERY:
        r = run(name)
        args = {"~", "P", "(", "()"}
        args |= {s.text[s.text.index("(") + 1:-1] for s in printed_sentences(r, 20)
                 if not s.text.startswith(("PN", "~PN"))}
        for x in sorted(args):
            if is_sentence(x):
                continue
            for n in (8, 12, 16, 20):
                for m in (0, 2):
                    if validity(r, f"P({x})", n=n, m=m) and validity(r, f"~P({x})", n=n, m=m):
                        joint = consistency(r, x, n)[1]
                        assert joint <= EPS, (name, x, n, m)
                        checked += 1
            if validity(r, f"P({x})", horizon=20) and validity(r, f"~P({x})", horizon=20):
                assert consistency(r, x, 20)[0]
    assert checked > 100
    adv = run("adversarial")
    assert not consistency(adv, "~", 20)[0]
    assert not validity(adv, "~P(~)", horizon=20)


@pytest.mark.criterion(4, "printing a self-referential sentence breaks validity; blank is valid with 0")
def test_self_reference_cannot_be_printed_validly():
    horizon = 24
    seen = 0
    for name in BATTERY:
        r = run(name)
        printed = [s for s in SELF_REFERENTIAL_PAIR if printability(r, s, horizon) > EPS]
        if not printed:
            continue
        seen += 1
        valid = [validity(r, s, horizon=horizon) for s in printed]
        assert not all(valid), name
        if len(printed) == 1:
            assert not valid[0], name
    assert seen == 4
    for name in ("blank", "blank-extended"):
        for s in SELF_REFERENTIAL_PAIR:
            assert printability(run(name), s, horizon) == 0
            assert validity(run(name), s, horizon=horizon)


@pytest.mark.criterion(5, "both truth definitions agree on every (machine, sentence, n <= 12, m <= 4)")
def test_definitional_equivalence():
    violations = evaluated = 0
    for name in BATTERY:
        r = run(name)
        for s in sentences_for(name, 16) + atomic_sentences(4)[:2]:
            for n in range(13):
                for m in range(5):
                    try:
                        v = nm_truth(r, s, n, m)
                    except EquivalenceViolation:
                        violations += 1
                        continue
                    if v.status is Status.UNDEFINED:
                        continue
                    evaluated += 1
                    other = Status.FALSE if v.witness["equivalent"] < -EPS else Status.TRUE
                    assert other is v.status
    assert violations == 0
    assert evaluated > 1000


@pytest.mark.criterion(6, "both inequality chains hold for every builtin, n + m <= 12")
def test_inequality_chains():
    for name in BUILTINS:
        r = run(name)
        for s in sentences_for(name, 12):
            for n in range(13):
                for m in range(13 - n):
                    c = appendix_check(r, s, n, m)
                    assert c.ok, (name, s.text, n, m)
                    assert c.neg_ok, (name, s.text, n, m)


@pytest.mark.criterion(7, "constructor with n_max = 3 is valid and complete for all 168 sentences, < 60 s")
def test_constructor_reproduction():
    t0 = time.perf_counter()
    rep = verify_qucom(3)
    elapsed = time.perf_counter() - t0
    assert len(rep.records) == 168 == len(qucom_sentences(3))
    assert all(r.valid for r in rep.records)
    assert all(r.complete for r in rep.records)
    assert rep.summary["valid"] == rep.summary["complete"] == 168
    assert elapsed < 60


@pytest.mark.criterion(8, "Fourier distributions: n = 2 delta and uniform, n = 5 off-peak against explicit DFT")
def test_qft_reproduction():
    recs = qft_argument(build_qucom(2), 2)
    neg = np.array([r.probability for r in recs if r.branch == "~P"])
    pos = np.array([r.probability for r in recs if r.branch == "P"])
    assert count_sentences(2).exact == 0
    assert abs(neg[0] - 0.5) <= 1e-12 and np.all(neg[1:] <= 1e-12)
    assert np.max(np.abs(pos - pos.mean())) <= 1e-12

    n, size = 5, 4 ** 5
    values = np.zeros(size)
    for i, t in enumerate(itertools.product("~P()", repeat=n)):
        if not oracles.is_base_sentence("".join(t)):
            values[i] = 1 / math.sqrt(2 * size)
    want = np.abs(oracles.dft(values)) ** 2
    got = np.array([r.probability for r in qft_argument(build_qucom(n), n) if r.branch == "~P"])
    assert np.max(np.abs(got[1:] - want[1:])) <= 1e-12
    assert abs(got[1:].sum() - want[1:].sum()) <= 1e-12
    exp = qft_expected(n)
    assert abs(got[1:].sum() - exp["neg_off_peak_total"]) <= 1e-12
    # each off-peak Y is bounded by the squared sentence fraction (all Delta phases aligned)
    assert np.max(got[1:]) <= exp["order_scale"] / 2 + 1e-15
    assert np.max(got[1:]) > 0


@pytest.mark.criterion(9, "exact sentence counts against the closed form and the brute-force oracle")
def test_counting():
    for n in (5, 6):
        c = count_sentences(n)
        assert c.exact == delta_formula(n) == oracles.count_base_sentences(n)
    assert (count_sentences(4).exact, delta_formula(4)) == (4, 5)
    assert oracles.count_base_sentences(4) == 4
    assert (count_sentences(7).exact, delta_formula(7)) == (316, 320)
    for n in (7, 8, 9):
        exact = oracles.count_base_sentences(n)
        assert count_sentences(n).exact == exact
        # the closed form also counts spellings whose argument is itself a sentence
        assert delta_formula(n) - exact == oracles.count_pattern_matches(n) - exact > 0


@pytest.mark.criterion(10, "PN chains: counts 3, 4, 6, 10, 18, 34; P stops in 2; PN(P ends at a non-sentence")
def test_chains():
    counts = chain("PN(PN", 6).pn_counts()
    assert counts == [3, 4, 6, 10, 18, 34] == oracles.chain_pn_counts("PN(PN", 6)
    assert all(b == 2 * (a - 1) for a, b in zip(counts, counts[1:]))
    short = chain("P", 10)
    assert len(short.sentences) == 2 and short.status is ChainStatus.TERMINATED_NON_SENTENCE
    unclosed = chain("PN(P", 10)
    assert unclosed.status is ChainStatus.TERMINATED_NON_SENTENCE
    assert not is_sentence(unclosed.terminal, WITH_PN)


@pytest.mark.criterion(11, "printability and region probabilities are nondecreasing in n, n <= 20")
def test_monotonicity():
    for name in BATTERY:
        r = run(name)
        final = r.state(20)
        exprs = {Expression.from_codes(c) for cfg in final.terms for c in cfg.complete_expressions()}
        exprs |= set(sentences_for(name, 20)) | {Expression("~"), Expression("P(~)")}
        for x in exprs:
            printed = [printability(r, x, n) for n in range(21)]
            assert all(a <= b + 1e-15 for a, b in zip(printed, printed[1:])), (name, x.text)
            region = [expectation(q_region(x, 0, n), final) for n in range(21)]
            assert all(a <= b + 1e-15 for a, b in zip(region, region[1:])), (name, x.text)
        for x in sentences_for(name, 20)[:3]:
            joint = [expectation(combine([limit(x), limit(x)], "and"), r.state(n)) for n in range(21)]
            assert all(a <= b + 1e-15 for a, b in zip(joint, joint[1:]))
