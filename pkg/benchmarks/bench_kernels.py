"""Compare the compiled tape kernels with the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py            # kernel micro-benchmarks + end-to-end runs
    python benchmarks/bench_kernels.py --quick    # smaller workloads

Each kernel is timed on identical inputs in both modules, and outputs are
compared before timing. The end-to-end part runs the same workload in a child
process with and without ``QENUM_PURE_PYTHON=1`` so the import-time backend
switch is exercised as users see it.
"""
import argparse
import os
import subprocess
import sys
import timeit

from qenum import _pykernels, kernels

BASE = bytes(range(5))

END_TO_END = """
import time
from qenum import kernels
from qenum.dynamics import MachineRun
from qenum.machines import BUILTINS
from qenum.lang import count_sentences
from qenum.semantics import build_report
t0 = time.perf_counter()
run = MachineRun.from_spec(BUILTINS["coin"])
build_report(run, {horizon}, max_len=4)
count_sentences({count_n})
kernels.first_occurrence_sweep({width}, b"\\x02\\x03", 0, {width} - 1)
print(kernels.BACKEND, time.perf_counter() - t0)
"""


def workloads(quick):
    tape = bytes([1, 2, 3, 1, 4, 0, 1, 0, 2, 3, 4, 4, 0, 1] * (2 if quick else 8))
    sweep_width = 6 if quick else 7
    return [
        ("delimited_ends", lambda k: k.delimited_ends(tape, 0, b"\x01", 0, len(tape) - 1), 2000),
        ("complete_runs", lambda k: k.complete_runs(tape, 0, len(tape) + 2), 2000),
        ("write_pair", lambda k: k.write_pair(tape, 0, len(tape) // 2, 3, 0), 5000),
        ("classify_codes", lambda k: k.classify_codes(b"\x01\x02\x03\x02\x03\x01\x04\x04", 0, 0), 5000),
        ("count_sentences(6)", lambda k: k.count_sentences(6, 0, 0, bytes([1, 2, 3, 4])), 1),
        (f"first_occurrence_sweep(w={sweep_width})",
         lambda k: k.first_occurrence_sweep(sweep_width, b"\x02\x03", 0, sweep_width - 1), 1),
    ]


def bench_kernels(quick, repeat):
    fast = kernels.compiled()
    if fast is None:
        print("compiled kernels are not built; only the Python fallback is available")
        return
    print(f"{'kernel':<32}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, call, number in workloads(quick):
        if call(fast) != call(_pykernels):
            raise SystemExit(f"backends disagree on {name}")
        slow_t = min(timeit.repeat(lambda: call(_pykernels), number=number, repeat=repeat)) / number
        fast_t = min(timeit.repeat(lambda: call(fast), number=number, repeat=repeat)) / number
        print(f"{name:<32}{slow_t:>12.3e}{fast_t:>12.3e}{slow_t / fast_t:>9.1f}x")


def bench_end_to_end(quick):
    code = END_TO_END.format(horizon=10 if quick else 14, count_n=6 if quick else 7, width=6 if quick else 7)
    print()
    print("end-to-end (coin report, sentence count, region sweep):")
    for pure in ("0", "1"):
        env = dict(os.environ, QENUM_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, seconds = out.stdout.split()
        print(f"  {backend:<8}{float(seconds):8.3f} s")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    print(f"default backend at import: {kernels.BACKEND}")
    bench_kernels(args.quick, args.repeat)
    bench_end_to_end(args.quick)


if __name__ == "__main__":
    main()
