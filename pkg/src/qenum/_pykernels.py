"""Pure-Python implementations of the hot tape kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature and
results; ``qenum.kernels`` picks one at import time.

Tapes are passed as ``(cells, offset)``: ``cells`` is a bytes object of symbol
codes whose first byte sits at lattice site ``offset``; every site outside the
window is blank (code 0).
"""
from __future__ import annotations

from itertools import product

BLANK = 0
TILDE, PSYM, LPAR, RPAR, NSYM = 1, 2, 3, 4, 5

NOT_SENTENCE, P_OF_X, NEG_P_OF_X, PN_OF_X, NEG_PN_OF_X = 0, 1, 2, 3, 4

MODE_BASE, MODE_ORDERS, MODE_WITH_PN = 0, 1, 2


def _cell(cells: bytes, offset: int, site: int) -> int:
    i = site - offset
    if 0 <= i < len(cells):
        return cells[i]
    return BLANK


def delimited_at(cells: bytes, offset: int, pattern: bytes, end: int) -> bool:
    """True iff ``pattern`` occupies ``[end-len+1, end]`` with blanks on both flanks."""
    start = end - len(pattern) + 1
    if _cell(cells, offset, start - 1) or _cell(cells, offset, end + 1):
        return False
    for i, code in enumerate(pattern):
        if _cell(cells, offset, start + i) != code:
            return False
    return True


def delimited_ends(cells: bytes, offset: int, pattern: bytes, lo: int, hi: int) -> list[int]:
    # a nonblank pattern can only end inside the window
    lo = max(lo, offset + len(pattern) - 1)
    hi = min(hi, offset + len(cells) - 1)
    return [end for end in range(lo, hi + 1) if delimited_at(cells, offset, pattern, end)]


def all_runs(cells: bytes, offset: int) -> list[tuple[int, bytes]]:
    """Maximal nonblank runs as ``(start_site, codes)`` in site order."""
    runs = []
    i, size = 0, len(cells)
    while i < size:
        if cells[i] == BLANK:
            i += 1
            continue
        k = i
        while k < size and cells[k] != BLANK:
            k += 1
        runs.append((offset + i, bytes(cells[i:k])))
        i = k
    return runs


def complete_runs(cells: bytes, offset: int, head: int) -> tuple[tuple[int, bytes], ...]:
    """Runs whose last symbol is at or before ``head - 2``.

    Maximality puts a blank right after each such run, at a site the head has
    already passed, so these runs can no longer change.
    """
    return tuple(
        (start, codes) for start, codes in all_runs(cells, offset) if start + len(codes) - 1 <= head - 2
    )


def write_pair(cells: bytes, offset: int, site: int, first: int, second: int) -> tuple[bytes, int]:
    """Set sites ``site`` and ``site + 1`` and return the trimmed window."""
    if not cells:
        lo, buf = site, bytearray(2)
    else:
        lo = min(offset, site)
        hi = max(offset + len(cells) - 1, site + 1)
        buf = bytearray(hi - lo + 1)
        buf[offset - lo : offset - lo + len(cells)] = cells
    buf[site - lo] = first
    buf[site - lo + 1] = second
    start, stop = 0, len(buf)
    while start < stop and buf[start] == BLANK:
        start += 1
    while stop > start and buf[stop - 1] == BLANK:
        stop -= 1
    if start == stop:
        return b"", 0
    return bytes(buf[start:stop]), lo + start


def _match_prefix(codes: bytes) -> tuple[int, int]:
    n = len(codes)
    if n < 4 or codes[-1] != RPAR:
        return NOT_SENTENCE, 0
    if codes[0] == PSYM:
        if codes[1] == LPAR:
            return P_OF_X, 2
        if codes[1] == NSYM and codes[2] == LPAR:
            return PN_OF_X, 3
    elif codes[0] == TILDE and codes[1] == PSYM:
        if codes[2] == LPAR:
            return NEG_P_OF_X, 3
        if n > 4 and codes[2] == NSYM and codes[3] == LPAR:
            return NEG_PN_OF_X, 4
    return NOT_SENTENCE, 0


def _classify(codes: bytes, mode: int) -> tuple[int, int]:
    kind, plen = _match_prefix(codes)
    if kind == NOT_SENTENCE or len(codes) - 1 - plen < 1:
        return NOT_SENTENCE, 0
    if kind >= PN_OF_X and mode != MODE_WITH_PN:
        return NOT_SENTENCE, 0
    inner_kind, inner_order = _classify(codes[plen:-1], mode)
    if mode == MODE_BASE:
        if inner_kind != NOT_SENTENCE:
            return NOT_SENTENCE, 0
        return kind, 1
    return kind, inner_order + 1 if inner_kind != NOT_SENTENCE else 1


def classify_codes(codes: bytes, mode: int, max_order: int) -> tuple[int, int]:
    """Return ``(kind, order)``; ``max_order <= 0`` means uncapped."""
    kind, order = _classify(codes, mode)
    if kind != NOT_SENTENCE and mode == MODE_ORDERS and 0 < max_order < order:
        return NOT_SENTENCE, 0
    return kind, order


def count_sentences(length: int, mode: int, max_order: int, alphabet: bytes) -> int:
    """Exhaustively count length-``length`` strings over ``alphabet`` that classify as sentences."""
    total = 0
    for combo in product(alphabet, repeat=length):
        if classify_codes(bytes(combo), mode, max_order)[0] != NOT_SENTENCE:
            total += 1
    return total


def first_occurrence_sweep(width: int, pattern: bytes, m: int, n: int) -> tuple[int, int, int]:
    """Check the first-occurrence decomposition of a region projector on every tape.

    Tapes range over all ``5**width`` base-alphabet fillings of sites
    ``[0, width-1]``. For each tape the region indicator (some delimited
    occurrence ending in ``[m+len-1, n]``) is compared with the number of
    first-occurrence projectors that accept it. Returns
    ``(tapes, tapes_in_region, violations)``; a violation is a tape where the
    count is not exactly the indicator, which covers both a wrong sum and a
    failure of pairwise orthogonality.
    """
    plen = len(pattern)
    lo = m + plen - 1
    tapes = hits = bad = 0
    for combo in product(range(5), repeat=width):
        cells = bytes(combo)
        tapes += 1
        region = any(delimited_at(cells, 0, pattern, b) for b in range(lo, n + 1))
        firsts = 0
        for j in range(plen - 1, n - m + 1):
            end = m + j
            if not delimited_at(cells, 0, pattern, end):
                continue
            if not any(delimited_at(cells, 0, pattern, b) for b in range(lo, end)):
                firsts += 1
        hits += region
        if firsts != int(region):
            bad += 1
    return tapes, hits, bad
