"""Symmetric-group tables, Gram matrices and Weingarten matrices."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..qudit import NumericalError

MAX_REPLICAS = 5


def cycle_count(perm) -> int:
    seen = [False] * len(perm)
    cycles = 0
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycles += 1
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
    return cycles


def compose(a, b) -> tuple:
    """``(a o b)(x) = a(b(x))``."""
    return tuple(a[b[x]] for x in range(len(b)))


def inverse(a) -> tuple:
    out = [0] * len(a)
    for i, ai in enumerate(a):
        out[ai] = i
    return tuple(out)


@dataclass(frozen=True, eq=False)
class SymmetricGroupTable:
    """All ``D!`` permutations of ``range(D)`` in lexicographic order."""

    D: int
    elements: tuple
    compose: np.ndarray
    inverse: np.ndarray
    cycles: np.ndarray

    @property
    def order(self) -> int:
        return len(self.elements)

    def index(self, perm) -> int:
        return self.elements.index(tuple(perm))

    @property
    def identity_index(self) -> int:
        return 0


@lru_cache(maxsize=None)
def enumerate_permutations(D: int) -> SymmetricGroupTable:
    if not 1 <= D <= MAX_REPLICAS:
        raise ValueError(f"D must be in [1, {MAX_REPLICAS}], got {D}")
    elements = tuple(itertools.permutations(range(D)))
    pos = {p: i for i, p in enumerate(elements)}
    n = len(elements)
    comp = np.empty((n, n), dtype=np.int64)
    for i, a in enumerate(elements):
        for j, b in enumerate(elements):
            comp[i, j] = pos[compose(a, b)]
    inv = np.array([pos[inverse(a)] for a in elements], dtype=np.int64)
    cyc = np.array([cycle_count(a) for a in elements], dtype=np.int64)
    for arr in (comp, inv, cyc):
        arr.setflags(write=False)
    return SymmetricGroupTable(D, elements, comp, inv, cyc)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    n: int
    D: int
    entries: np.ndarray


def gram_matrix(n: int, D: int) -> GramMatrix:
    """``G[s, t] = n^{#(s^-1 t)}``, exact integers."""
    if n < 2:
        raise ValueError("n must be at least 2")
    grp = enumerate_permutations(D)
    rel = grp.compose[grp.inverse[:, None], np.arange(grp.order)[None, :]]
    entries = np.asarray(n, dtype=np.int64) ** grp.cycles[rel]
    return GramMatrix(n, D, entries)


@dataclass(frozen=True, eq=False)
class WeingartenMatrix:
    d: int
    D: int
    entries: np.ndarray
    residual: float


def weingarten_matrix(d: int, D: int, tol: float = 1e-10) -> WeingartenMatrix:
    """Inverse of the Gram matrix at local dimension ``d^2``."""
    if d * d < D:
        raise ValueError(f"Gram matrix is singular for d^2={d * d} < D={D}")
    G = gram_matrix(d * d, D).entries.astype(float)
    Wg = np.linalg.inv(G)
    residual = float(np.max(np.abs(Wg @ G - np.eye(len(G)))))
    if residual > tol:
        raise NumericalError(f"Weingarten inversion residual {residual:.3e} above {tol}")
    return WeingartenMatrix(d, D, Wg, residual)
