"""Merge kernels over sorted id lists (pure-Python fallback).

Inputs must be strictly ascending lists of mutually comparable ids;
outputs are strictly ascending lists. ``_kernels_c`` is the compiled
twin with identical semantics.
"""

from __future__ import annotations


def intersection_size(a: list, b: list) -> int:
    i = j = count = 0
    n, m = len(a), len(b)
    while i < n and j < m:
        x, y = a[i], b[j]
        if x == y:
            count += 1
            i += 1
            j += 1
        elif x < y:
            i += 1
        else:
            j += 1
    return count


def intersect_sorted(a: list, b: list) -> list:
    i = j = 0
    n, m = len(a), len(b)
    out = []
    while i < n and j < m:
        x, y = a[i], b[j]
        if x == y:
            out.append(x)
            i += 1
            j += 1
        elif x < y:
            i += 1
        else:
            j += 1
    return out


def union_sorted(a: list, b: list) -> list:
    i = j = 0
    n, m = len(a), len(b)
    out = []
    while i < n and j < m:
        x, y = a[i], b[j]
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
    if i < n:
        out.extend(a[i:])
    if j < m:
        out.extend(b[j:])
    return out


def difference_sorted(a: list, b: list) -> list:
    i = j = 0
    n, m = len(a), len(b)
    out = []
    while i < n and j < m:
        x, y = a[i], b[j]
        if x == y:
            i += 1
            j += 1
        elif x < y:
            out.append(x)
            i += 1
        else:
            j += 1
    if i < n:
        out.extend(a[i:])
    return out
