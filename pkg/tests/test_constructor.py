import itertools
import math

import numpy as np
import pytest

from qenum.constructor import (MAX_NMAX, ScaleExceeded, argument_index, argument_of, block_start,
                               block_width, build, build_qucom, qft_argument, qft_expected,
                               qucom_efficiency_report, qucom_sentences, verify_qucom)
from qenum.lang import count_sentences, delta_formula
from qenum.projectors import expectation, limit
from qenum.semantics import PreparedState, build_report

import oracles


class TestLayout:
    def test_blocks_tile_the_tape(self):
        for n in range(1, 6):
            assert block_start(n + 1) == block_start(n) + block_width(n)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_argument_index_roundtrip(self, n):
        for i in range(4 ** n):
            assert argument_index(argument_of(i, n)) == i

    def test_digit_order(self):
        assert argument_index("P~") == 4 and argument_index(")") == 3

    def test_terms_sit_inside_their_block(self):
        state = build_qucom(3)
        for blk in state.blocks:
            for t in blk.terms:
                lo, hi = t.config.offset, t.config.offset + len(t.config.cells) - 1
                assert blk.a <= lo and hi < blk.a + blk.width - 1
                assert t.config.head == state.head


class TestBuild:
    @pytest.mark.parametrize("n_max", [1, 2, 3, 4])
    def test_term_counts(self, n_max):
        state = build_qucom(n_max)
        for n in range(1, n_max + 1):
            blk = state.block(n)
            assert len(blk.terms) == 2 * 4 ** n
            flagged = sum(t.sentence_flag for t in blk.terms)
            assert flagged == 2 * oracles.count_base_sentences(n)

    def test_stage_norms(self):
        b = build(4)
        for n, before, after in b.stage_norms:
            assert before == pytest.approx(1, abs=1e-14) and after == pytest.approx(1, abs=1e-14)
        assert b.state.norm2() == pytest.approx(1, abs=1e-13)

    def test_payload_only_for_positive_non_sentences(self):
        blk = build_qucom(4).block(4)
        for t in blk.terms:
            text = t.config.tape_text(blk.payload_start, blk.payload_start + 3)
            if t.negative or t.sentence_flag:
                assert text == "0000"
            else:
                assert text == argument_of(t.x, 4).text

    def test_limits(self):
        with pytest.raises(ScaleExceeded):
            build(MAX_NMAX + 1)
        with pytest.raises(ValueError):
            build(0)
        with pytest.raises(ScaleExceeded):
            build_qucom(3).to_sparse(limit=1000)


class TestVerify:
    def test_small(self):
        rep = verify_qucom(2)
        assert len(rep.records) == len(qucom_sentences(2)) == 2 * (4 + 16)
        assert all(r.valid and r.complete for r in rep.records)
        assert all(p["consistent"] for p in rep.consistency)

    def test_block_and_sparse_routes_agree(self):
        state = build_qucom(2)
        fast = verify_qucom(2, state=state).to_dict()
        slow = build_report(PreparedState(state.to_sparse(), fast["machine"]), state.head,
                            qucom_sentences(2), include_printed=False).to_dict()
        assert fast == slow

    @pytest.mark.parametrize("x", ["~", "P(", "~~)"])
    def test_printability_split(self, x):
        state = build_qucom(3)
        n = len(x)
        assert expectation(limit(f"P({x})"), state) == pytest.approx(1 / (2 * 4 ** n))
        assert expectation(limit(f"~P({x})"), state) == pytest.approx(1 / (2 * 4 ** n))

    def test_sentence_arguments_excluded(self):
        # arguments that are sentences are not in the count
        assert "P(P(~))" not in {s.text for s in qucom_sentences(4)}


class TestQft:
    def test_n2_delta_and_uniform(self):
        recs = qft_argument(build_qucom(2), 2)
        neg = np.array([r.probability for r in recs if r.branch == "~P"])
        pos = np.array([r.probability for r in recs if r.branch == "P"])
        assert neg[0] == pytest.approx(0.5, abs=1e-15) and np.all(np.abs(neg[1:]) <= 1e-15)
        assert np.max(np.abs(pos - 1 / 32)) <= 1e-12

    @pytest.mark.parametrize("n", [3, 4])
    def test_negative_branch_against_explicit_dft(self, n):
        size = 4 ** n
        values = np.zeros(size)
        for i, t in enumerate(itertools.product("~P()", repeat=n)):
            if not oracles.is_base_sentence("".join(t)):
                values[i] = 1 / math.sqrt(2 * size)
        want = np.abs(oracles.dft(values)) ** 2
        got = np.array([r.probability for r in qft_argument(build_qucom(n), n) if r.branch == "~P"])
        assert np.max(np.abs(got - want)) <= 1e-12

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_parseval_and_closed_forms(self, n):
        recs = qft_argument(build_qucom(n), n)
        exp = qft_expected(n)
        neg = np.array([r.probability for r in recs if r.branch == "~P"])
        pos = np.array([r.probability for r in recs if r.branch == "P"])
        assert neg.sum() == pytest.approx(exp["neg_total"], abs=1e-12)
        assert pos.sum() == pytest.approx(exp["neg_total"], abs=1e-12)
        assert neg[0] == pytest.approx(exp["neg_peak"], abs=1e-12)
        assert neg[1:].sum() == pytest.approx(exp["neg_off_peak_total"], abs=1e-12)
        assert np.max(np.abs(pos - exp["p_branch_per_y"])) <= 1e-12

    def test_expected_uses_exact_count(self):
        assert qft_expected(4)["delta"] == count_sentences(4).exact == 4
        assert qft_expected(2)["order_scale"] == 0


class TestEfficiency:
    def test_counts(self):
        rep = qucom_efficiency_report(3)
        assert rep.sentences_exact == 168
        assert rep.sentences_formula == pytest.approx(float(sum(2 * (4 ** n - delta_formula(n))
                                                                for n in (1, 2, 3))))
        assert rep.step_count == sum(block_width(n) + n + 2 for n in (1, 2, 3))
        assert rep.to_dict()["total_width"] == block_start(4)

    def test_grows_with_nmax(self):
        steps = [qucom_efficiency_report(k).step_count for k in range(1, 6)]
        assert steps == sorted(steps) and len(set(steps)) == 5
