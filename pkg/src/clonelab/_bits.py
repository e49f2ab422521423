"""Bit-vector kernels for relations of small arity.

A relation of arity n is a Python int with 2**n significant bits; bit t is set
iff the tuple whose binary spelling (variable 0 most significant) equals t
belongs to the relation.
"""
from functools import lru_cache
from itertools import permutations, product

import numpy as np


def full_mask(n):
    return (1 << (1 << n)) - 1


def index_of(values):
    t = 0
    for a in values:
        t = (t << 1) | a
    return t


def tuple_of(t, n):
    return tuple((t >> (n - 1 - i)) & 1 for i in range(n))


def iter_bits(b):
    while b:
        low = b & -b
        yield low.bit_length() - 1
        b ^= low


def popcount(b):
    return bin(b).count("1")


@lru_cache(maxsize=None)
def var_mask(n, i):
    """Tuples whose variable i equals 1."""
    w = 1 << (n - 1 - i)
    m = 0
    for t in range(1 << n):
        if t & w:
            m |= 1 << t
    return m


def cofactors(b, n, i):
    """Split on variable i: (restriction to x_i=0, restriction to x_i=1), arity n-1."""
    w = 1 << (n - 1 - i)
    if i == 0:
        return b & ((1 << w) - 1), b >> w
    chunk = (1 << w) - 1
    lo = hi = 0
    for h in range(1 << i):
        seg = b >> (h * 2 * w)
        lo |= (seg & chunk) << (h * w)
        hi |= ((seg >> w) & chunk) << (h * w)
    return lo, hi


def join_cofactors(lo, hi, n, i):
    """Inverse of cofactors: rebuild an arity-n vector from its two halves."""
    w = 1 << (n - 1 - i)
    if i == 0:
        return lo | (hi << w)
    chunk = (1 << w) - 1
    b = 0
    for h in range(1 << i):
        b |= ((lo >> (h * w)) & chunk) << (h * 2 * w)
        b |= ((hi >> (h * w)) & chunk) << (h * 2 * w + w)
    return b


def is_dummy(b, n, i):
    lo, hi = cofactors(b, n, i)
    return lo == hi


def insert_dummy(b, n, i):
    """Arity n -> n+1 with a fresh dummy variable at position i."""
    return join_cofactors(b, b, n + 1, i)


def forall(b, n, i):
    lo, hi = cofactors(b, n, i)
    return lo & hi


def exists(b, n, i):
    lo, hi = cofactors(b, n, i)
    return lo | hi


def identify(b, n, i, j):
    """Substitute x_j := x_i (i < j) and drop position j."""
    lo, hi = cofactors(b, n, j)
    vm = var_mask(n - 1, i)
    return (lo & ~vm) | (hi & vm)


def outer(b1, n1, b2, n2):
    """Cartesian product: the relation b1(x) and b2(y) on arity n1+n2."""
    r = 0
    shift = 1 << n2
    for p in iter_bits(b1):
        r |= b2 << (p * shift)
    return r


@lru_cache(maxsize=None)
def _perm_sources(n, perm):
    # new tuple t holds old tuple src[t], where old position i reads x_{perm[i]}
    src = []
    for t in range(1 << n):
        a = tuple_of(t, n)
        src.append(index_of(a[perm[i]] for i in range(n)))
    inv = [0] * (1 << n)
    for t, s in enumerate(src):
        inv[s] = t
    return tuple(inv)


def permute(b, n, perm):
    """rho_pi(x_0..x_{n-1}) = rho(x_{pi(0)}, .., x_{pi(n-1)})."""
    inv = _perm_sources(n, tuple(perm))
    r = 0
    for s in iter_bits(b):
        r |= 1 << inv[s]
    return r


def blocks_of(sorted_sorts):
    """Run lengths of a sorted sort vector."""
    out = []
    prev = None
    for s in sorted_sorts:
        if s == prev:
            out[-1] += 1
        else:
            out.append(1)
            prev = s
    return tuple(out)


@lru_cache(maxsize=None)
def block_perms(blocks):
    groups = []
    start = 0
    for size in blocks:
        groups.append([tuple(start + j for j in p) for p in permutations(range(size))])
        start += size
    return [sum(choice, ()) for choice in product(*groups)]


@lru_cache(maxsize=None)
def _perm_table(blocks):
    n = sum(blocks)
    perms = block_perms(blocks)
    weights = np.array([1 << (n - 1 - i) for i in range(n)], dtype=np.int64)
    tuples = np.array([tuple_of(t, n) for t in range(1 << n)], dtype=np.int64).reshape(1 << n, n)
    table = np.empty((len(perms), 1 << n), dtype=np.int64)
    for r, p in enumerate(perms):
        table[r] = tuples[:, list(p)] @ weights
    return perms, table


def _min_perm_numpy(b, n, blocks):
    perms, table = _perm_table(blocks)
    size = 1 << n
    vec = np.array([(b >> t) & 1 for t in range(size)], dtype=np.uint64)
    images = vec[table]
    words = max(1, size // 64)
    width = min(size, 64)
    shifts = np.arange(width, dtype=np.uint64)
    chunks = (images.reshape(len(perms), words, width) << shifts).sum(axis=2, dtype=np.uint64)
    # lexsort: last key is primary, so the most significant word goes last
    order = np.lexsort([chunks[:, w] for w in range(words)])
    best = int(order[0])
    value = 0
    for w in range(words):
        value |= int(chunks[best, w]) << (64 * w)
    return value, perms[best]


def min_under_blocks(b, n, blocks):
    """Least bit vector over permutations acting within consecutive blocks.

    Returns (value, perm) with permute(b, n, perm) == value.
    """
    if all(s == 1 for s in blocks):
        return b, tuple(range(n))
    if n <= 3:
        best = None
        for p in block_perms(blocks):
            v = permute(b, n, p)
            if best is None or v < best[0]:
                best = (v, p)
        return best
    return _min_perm_numpy(b, n, blocks)
