# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tape kernels; see ``_pykernels`` for the reference semantics."""

from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset

cdef enum:
    BLANK = 0
    TILDE = 1
    PSYM = 2
    LPAR = 3
    RPAR = 4
    NSYM = 5

cdef enum:
    NOT_SENTENCE = 0
    P_OF_X = 1
    NEG_P_OF_X = 2
    PN_OF_X = 3
    NEG_PN_OF_X = 4

cdef enum:
    MODE_BASE = 0
    MODE_ORDERS = 1
    MODE_WITH_PN = 2


cdef inline int _cell(const unsigned char* c, Py_ssize_t size, long offset, long site) noexcept nogil:
    cdef long i = site - offset
    if i < 0 or i >= size:
        return BLANK
    return c[i]


cdef bint _delimited_at(const unsigned char* c, Py_ssize_t size, long offset,
                        const unsigned char* p, Py_ssize_t plen, long end) noexcept nogil:
    cdef long start = end - plen + 1
    cdef Py_ssize_t i
    if _cell(c, size, offset, start - 1) != BLANK or _cell(c, size, offset, end + 1) != BLANK:
        return False
    for i in range(plen):
        if _cell(c, size, offset, start + i) != p[i]:
            return False
    return True


def delimited_at(bytes cells, long offset, bytes pattern, long end):
    return bool(_delimited_at(cells, len(cells), offset, pattern, len(pattern), end))


def delimited_ends(bytes cells, long offset, bytes pattern, long lo, long hi):
    cdef const unsigned char* c = cells
    cdef const unsigned char* p = pattern
    cdef Py_ssize_t size = len(cells), plen = len(pattern)
    cdef long end
    cdef list out = []
    if lo < offset + plen - 1:
        lo = offset + plen - 1
    if hi > offset + size - 1:
        hi = offset + size - 1
    for end in range(lo, hi + 1):
        if _delimited_at(c, size, offset, p, plen, end):
            out.append(end)
    return out


def all_runs(bytes cells, long offset):
    cdef const unsigned char* c = cells
    cdef Py_ssize_t size = len(cells), i = 0, k
    cdef list runs = []
    while i < size:
        if c[i] == BLANK:
            i += 1
            continue
        k = i
        while k < size and c[k] != BLANK:
            k += 1
        runs.append((offset + i, cells[i:k]))
        i = k
    return runs


def complete_runs(bytes cells, long offset, long head):
    cdef const unsigned char* c = cells
    cdef Py_ssize_t size = len(cells), i = 0, k
    cdef list runs = []
    while i < size:
        if c[i] == BLANK:
            i += 1
            continue
        k = i
        while k < size and c[k] != BLANK:
            k += 1
        if offset + k - 1 <= head - 2:
            runs.append((offset + i, cells[i:k]))
        i = k
    return tuple(runs)


def write_pair(bytes cells, long offset, long site, int first, int second):
    cdef Py_ssize_t size = len(cells)
    cdef long lo, hi, width, start, stop
    cdef unsigned char* buf
    if size == 0:
        lo = site
        hi = site + 1
    else:
        lo = offset if offset < site else site
        hi = offset + size - 1
        if site + 1 > hi:
            hi = site + 1
    width = hi - lo + 1
    buf = <unsigned char*> malloc(width)
    if buf == NULL:
        raise MemoryError()
    try:
        memset(buf, 0, width)
        if size:
            memcpy(buf + (offset - lo), <const unsigned char*> cells, size)
        buf[site - lo] = first
        buf[site - lo + 1] = second
        start = 0
        stop = width
        while start < stop and buf[start] == BLANK:
            start += 1
        while stop > start and buf[stop - 1] == BLANK:
            stop -= 1
        if start == stop:
            return b"", 0
        return buf[start:stop], lo + start
    finally:
        free(buf)


cdef int _classify(const unsigned char* s, Py_ssize_t n, int mode, int* order) noexcept nogil:
    cdef int kind = NOT_SENTENCE, plen = 0, inner_kind, inner_order = 0
    order[0] = 0
    if n < 4 or s[n - 1] != RPAR:
        return NOT_SENTENCE
    if s[0] == PSYM:
        if s[1] == LPAR:
            kind, plen = P_OF_X, 2
        elif s[1] == NSYM and s[2] == LPAR:
            kind, plen = PN_OF_X, 3
    elif s[0] == TILDE and s[1] == PSYM:
        if s[2] == LPAR:
            kind, plen = NEG_P_OF_X, 3
        elif n > 4 and s[2] == NSYM and s[3] == LPAR:
            kind, plen = NEG_PN_OF_X, 4
    if kind == NOT_SENTENCE or n - 1 - plen < 1:
        return NOT_SENTENCE
    if kind >= PN_OF_X and mode != MODE_WITH_PN:
        return NOT_SENTENCE
    inner_kind = _classify(s + plen, n - 1 - plen, mode, &inner_order)
    if mode == MODE_BASE:
        if inner_kind != NOT_SENTENCE:
            return NOT_SENTENCE
        order[0] = 1
        return kind
    order[0] = inner_order + 1 if inner_kind != NOT_SENTENCE else 1
    return kind


cdef inline int _classify_capped(const unsigned char* s, Py_ssize_t n, int mode, int max_order,
                                 int* order) noexcept nogil:
    cdef int kind = _classify(s, n, mode, order)
    if kind != NOT_SENTENCE and mode == MODE_ORDERS and 0 < max_order < order[0]:
        order[0] = 0
        return NOT_SENTENCE
    return kind


def classify_codes(bytes codes, int mode, int max_order):
    cdef int order = 0
    cdef int kind = _classify_capped(codes, len(codes), mode, max_order, &order)
    return kind, order


def count_sentences(int length, int mode, int max_order, bytes alphabet):
    cdef Py_ssize_t k = len(alphabet), i
    cdef const unsigned char* a = alphabet
    cdef int* digits
    cdef unsigned char* buf
    cdef long long total = 0
    cdef int order
    if length <= 0:
        return 0
    digits = <int*> malloc(length * sizeof(int))
    buf = <unsigned char*> malloc(length)
    if digits == NULL or buf == NULL:
        free(digits)
        free(buf)
        raise MemoryError()
    with nogil:
        for i in range(length):
            digits[i] = 0
            buf[i] = a[0]
        while True:
            if _classify_capped(buf, length, mode, max_order, &order) != NOT_SENTENCE:
                total += 1
            i = length - 1
            while i >= 0:
                digits[i] += 1
                if digits[i] < k:
                    buf[i] = a[digits[i]]
                    break
                digits[i] = 0
                buf[i] = a[0]
                i -= 1
            if i < 0:
                break
    free(digits)
    free(buf)
    return total


def first_occurrence_sweep(int width, bytes pattern, long m, long n):
    cdef const unsigned char* p = pattern
    cdef Py_ssize_t plen = len(pattern), i
    cdef long lo = m + plen - 1, j, b, end
    cdef long long tapes = 0, hits = 0, bad = 0
    cdef int firsts
    cdef bint region, earlier
    cdef unsigned char* tape = <unsigned char*> malloc(width if width > 0 else 1)
    if tape == NULL:
        raise MemoryError()
    with nogil:
        memset(tape, 0, width)
        while True:
            tapes += 1
            region = False
            for b in range(lo, n + 1):
                if _delimited_at(tape, width, 0, p, plen, b):
                    region = True
                    break
            firsts = 0
            for j in range(plen - 1, n - m + 1):
                end = m + j
                if not _delimited_at(tape, width, 0, p, plen, end):
                    continue
                earlier = False
                for b in range(lo, end):
                    if _delimited_at(tape, width, 0, p, plen, b):
                        earlier = True
                        break
                if not earlier:
                    firsts += 1
            if region:
                hits += 1
            if firsts != (1 if region else 0):
                bad += 1
            i = width - 1
            while i >= 0:
                tape[i] += 1
                if tape[i] < 5:
                    break
                tape[i] = 0
                i -= 1
            if i < 0:
                break
    free(tape)
    return tapes, hits, bad
