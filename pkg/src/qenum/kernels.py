"""Backend selection for the tape kernels.

The compiled module is used when it imports; otherwise the pure-Python one.
Set ``QENUM_PURE_PYTHON=1`` to force the fallback (the benchmark and the parity
tests do this to compare both).
"""
from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("QENUM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "cython"

delimited_at = _impl.delimited_at
delimited_ends = _impl.delimited_ends
all_runs = _impl.all_runs
complete_runs = _impl.complete_runs
write_pair = _impl.write_pair
classify_codes = _impl.classify_codes
count_sentences = _impl.count_sentences
first_occurrence_sweep = _impl.first_occurrence_sweep


def compiled():
    """Return the compiled module, or None when it is not built."""
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels
