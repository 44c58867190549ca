import itertools
import os
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qenum import _pykernels, kernels

import oracles

ck = kernels.compiled()
needs_compiled = pytest.mark.skipif(ck is None, reason="compiled extension not built")

cells_st = st.binary(max_size=12).map(lambda b: bytes(x % 5 for x in b))
pattern_st = st.binary(min_size=1, max_size=4).map(lambda b: bytes(x % 4 + 1 for x in b))


def test_backend_selected_at_import():
    assert kernels.BACKEND in ("cython", "python")
    if ck is not None:
        assert kernels.BACKEND == "cython"


def test_pure_python_override():
    code = "from qenum import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, QENUM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
@given(cells=cells_st, offset=st.integers(-3, 3), pattern=pattern_st, lo=st.integers(-4, 14),
       span=st.integers(0, 12))
def test_delimited_parity(cells, offset, pattern, lo, span):
    hi = lo + span
    assert ck.delimited_ends(cells, offset, pattern, lo, hi) == _pykernels.delimited_ends(
        cells, offset, pattern, lo, hi)
    assert ck.delimited_at(cells, offset, pattern, lo) == _pykernels.delimited_at(cells, offset, pattern, lo)


@needs_compiled
@given(cells=cells_st, offset=st.integers(-3, 3), head=st.integers(-2, 16))
def test_runs_parity(cells, offset, head):
    assert ck.all_runs(cells, offset) == _pykernels.all_runs(cells, offset)
    assert ck.complete_runs(cells, offset, head) == _pykernels.complete_runs(cells, offset, head)


@needs_compiled
@given(cells=cells_st, offset=st.integers(-3, 3), site=st.integers(-5, 15), a=st.integers(0, 4),
       b=st.integers(0, 4))
def test_write_pair_parity(cells, offset, site, a, b):
    # inputs to write_pair are already trimmed in the library
    trimmed = cells.strip(b"\x00")
    off = offset + (len(cells) - len(cells.lstrip(b"\x00"))) if trimmed else 0
    assert ck.write_pair(trimmed, off, site, a, b) == _pykernels.write_pair(trimmed, off, site, a, b)


@needs_compiled
@given(codes=st.binary(min_size=1, max_size=10).map(lambda b: bytes(x % 5 + 1 for x in b)),
       mode=st.integers(0, 2), cap=st.integers(0, 3))
def test_classify_parity(codes, mode, cap):
    assert ck.classify_codes(codes, mode, cap) == _pykernels.classify_codes(codes, mode, cap)


@needs_compiled
@pytest.mark.parametrize("length", [3, 4, 5, 6])
@pytest.mark.parametrize("mode", [0, 1, 2])
def test_count_parity(length, mode):
    alphabet = bytes([1, 2, 3, 4])
    assert ck.count_sentences(length, mode, 0, alphabet) == _pykernels.count_sentences(length, mode, 0, alphabet)


@needs_compiled
@pytest.mark.parametrize("pattern,m,n", [(b"\x01", 0, 4), (b"\x02\x03", 1, 5), (b"\x01\x04\x01", 0, 5)])
def test_sweep_parity(pattern, m, n):
    assert ck.first_occurrence_sweep(6, pattern, m, n) == _pykernels.first_occurrence_sweep(6, pattern, m, n)


@settings(max_examples=200)
@given(tape=st.text(alphabet="0~P()", max_size=9), x=st.text(alphabet="~P()", min_size=1, max_size=3),
       end=st.integers(-2, 11))
def test_delimited_matches_string_oracle(tape, x, end):
    cells = bytes("0~P()".index(c) for c in tape)
    pattern = bytes("0~P()".index(c) for c in x)
    assert kernels.delimited_at(cells, 0, pattern, end) == oracles.occurs_delimited(tape, x, end)


def test_sweep_counts_every_tape():
    tapes, hits, bad = kernels.first_occurrence_sweep(5, b"\x01", 0, 4)
    assert tapes == 5 ** 5
    assert bad == 0
    brute = sum(oracles.region_hit("".join(t), "~", 0, 4)
                for t in itertools.product("0~P()", repeat=5))
    assert hits == brute


def test_benchmark_script_runs(capsys):
    import runpy
    from pathlib import Path

    script = Path(__file__).resolve().parent.parent / "benchmarks" / "bench_kernels.py"
    module = runpy.run_path(str(script))
    module["main"](["--quick", "--repeat", "1"])
    out = capsys.readouterr().out
    assert "end-to-end" in out and "python" in out
