# cython: language_level=3, boundscheck=False, wraparound=False
"""Merge kernels over sorted id lists (compiled twin of _kernels_py)."""


def intersection_size(list a, list b):
    cdef Py_ssize_t i = 0, j = 0
    cdef Py_ssize_t n = len(a), m = len(b)
    cdef Py_ssize_t count = 0
    cdef object x, y
    while i < n and j < m:
        x = a[i]
        y = b[j]
        if x == y:
            count += 1
            i += 1
            j += 1
        elif x < y:
            i += 1
        else:
            j += 1
    return count


def intersect_sorted(list a, list b):
    cdef Py_ssize_t i = 0, j = 0
    cdef Py_ssize_t n = len(a), m = len(b)
    cdef list out = []
    cdef object x, y
    while i < n and j < m:
        x = a[i]
        y = b[j]
        if x == y:
            out.append(x)
            i += 1
            j += 1
        elif x < y:
            i += 1
        else:
            j += 1
    return out


def union_sorted(list a, list b):
    cdef Py_ssize_t i = 0, j = 0
    cdef Py_ssize_t n = len(a), m = len(b)
    cdef list out = []
    cdef object x, y
    while i < n and j < m:
        x = a[i]
        y = b[j]
        if x == y:
            out.append(x)
            i += 1
            j += 1
        elif x < y:
            out.append(x)
            i += 1
        else:
            out.append(y)
            j += 1
    while i < n:
        out.append(a[i])
        i += 1
    while j < m:
        out.append(b[j])
        j += 1
    return out


def difference_sorted(list a, list b):
    cdef Py_ssize_t i = 0, j = 0
    cdef Py_ssize_t n = len(a), m = len(b)
    cdef list out = []
    cdef object x, y
    while i < n and j < m:
        x = a[i]
        y = b[j]
        if x == y:
            i += 1
            j += 1
        elif x < y:
            out.append(x)
            i += 1
        else:
            j += 1
    while i < n:
        out.append(a[i])
        i += 1
    return out
