# cython: language_level=3
"""Compiled literal keyword scanner.

Same contract as dfdscan._scan_py.scan.  ASCII inputs (the common case for
Java and YAML sources) run through a memchr/memcmp loop over the raw bytes;
anything else falls back to the pure implementation.
"""
from libc.string cimport memchr, memcmp

import bisect

from dfdscan._scan_py import scan as _scan_fallback


def scan(text, keyword, line_starts):
    if not keyword:
        raise ValueError("keyword must be non-empty")
    if "\n" in keyword:
        raise ValueError("keyword must not contain newlines")
    if not (<str> text).isascii() or not (<str> keyword).isascii():
        return _scan_fallback(text, keyword, line_starts)

    cdef bytes tb = (<str> text).encode("ascii")
    cdef bytes kb = (<str> keyword).encode("ascii")
    cdef const char* buf = tb
    cdef const char* kw = kb
    cdef Py_ssize_t n = len(tb)
    cdef Py_ssize_t klen = len(kb)
    cdef Py_ssize_t pos = 0
    cdef Py_ssize_t i, li, col
    cdef const char* hit
    out = []
    while pos + klen <= n:
        hit = <const char*> memchr(buf + pos, kw[0], n - pos)
        if hit == NULL:
            break
        i = hit - buf
        if i + klen > n:
            break
        if memcmp(buf + i, kw, klen) == 0:
            li = bisect.bisect_right(line_starts, i) - 1
            col = i - line_starts[li]
            out.append((li, col, col + klen))
        pos = i + 1
    return out
