"""Enumeration and integer encoding of spectrum-reuse matchings.

A matching assigns each of the N V-UE pairs a distinct C-UE index out of M,
so there are M!/(M-N)! of them. Matchings are ordered lexicographically and
the position in that order is the classification label of the sample; encode
and decode are exact inverses (a bijection) for every valid matching.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def n_matchings(m: int, n: int) -> int:
    """Number of full matchings, M!/(M-N)!."""
    if not (m >= n >= 1):
        raise ValueError("need m >= n >= 1")
    return math.perm(m, n)


def all_matchings(m: int, n: int) -> np.ndarray:
    """All matchings as an (M!/(M-N)!, N) int array in lexicographic order."""
    count = n_matchings(m, n)
    out = np.fromiter(
        itertools.chain.from_iterable(itertools.permutations(range(m), n)),
        dtype=np.int64, count=count * n)
    return out.reshape(count, n)


def validate_matching(matching, m: int) -> np.ndarray:
    arr = np.asarray(matching, dtype=np.int64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("matching must be a non-empty 1-D sequence")
    if np.any(arr < 0) or np.any(arr >= m):
        raise ValueError("matching entries must lie in [0, M)")
    if len(set(arr.tolist())) != arr.size:
        raise ValueError("matching entries must be distinct")
    return arr


def encode_matching(matching, m: int) -> int:
    """Lexicographic rank of a matching among all M!/(M-N)! matchings."""
    arr = validate_matching(matching, m)
    n = arr.size
    remaining = list(range(m))
    rank = 0
    for k, choice in enumerate(arr.tolist()):
        pos = remaining.index(choice)
        rank += pos * math.perm(m - 1 - k, n - 1 - k)
        remaining.pop(pos)
    return rank


def decode_matching(index: int, m: int, n: int) -> np.ndarray:
    """Inverse of encode_matching."""
    count = n_matchings(m, n)
    if not (0 <= index < count):
        raise ValueError(f"class index {index} out of range [0, {count})")
    remaining = list(range(m))
    out = np.empty(n, dtype=np.int64)
    rest = index
    for k in range(n):
        block = math.perm(m - 1 - k, n - 1 - k)
        pos, rest = divmod(rest, block)
        out[k] = remaining.pop(pos)
    return out
