"""Local tensors of the Haar-averaged replica network.

Every wire between layers carries coefficients in the dual (hat) basis of
the permutation states, so a layer-to-layer connection is a plain index
contraction. Gram factors sit inside the gate and top tensors.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from ..defects import DefectSubspace, case_formula_overlap, css_overlap_table
from ..qudit import check_dim, replica_count
from .group import enumerate_permutations, gram_matrix, weingarten_matrix


def boundary_weight(d: int, D: int) -> float:
    """``(d^2-1)! / (d^2+D-1)!``: Haar average of one gate acting on |00>."""
    n = d * d
    return factorial(n - 1) / factorial(n + D - 1)


@dataclass(frozen=True, eq=False)
class BottomBoundary:
    d: int
    D: int
    weight: float

    @property
    def vector(self) -> np.ndarray:
        """Two-site vector ``sum_pi w |pi>|pi>`` flattened to ``q*q``."""
        q = factorial(self.D)
        return (self.weight * np.eye(q)).reshape(-1)


def build_bottom_boundary(d: int, D: int | None = None) -> BottomBoundary:
    d = check_dim(d)
    D = replica_count(d) if D is None else D
    return BottomBoundary(d, D, boundary_weight(d, D))


@dataclass(frozen=True, eq=False)
class GateTensor:
    """Averaged two-site gate ``W[(t1,t2),(p1,p2)] = delta_{t1,t2} M[t1,p1,p2]``
    with ``M[t,p1,p2] = sum_s Wg[t,s] G[s,p1] G[s,p2]``."""

    d: int
    D: int
    core: np.ndarray
    gram: np.ndarray
    wg: np.ndarray

    @property
    def q(self) -> int:
        return self.core.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        q = self.q
        W = np.zeros((q, q, q, q))
        W[np.arange(q), np.arange(q)] = self.core
        return W.reshape(q * q, q * q)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Act on a two-site spin vector of length ``q*q``."""
        return self.matrix @ np.asarray(vec).reshape(-1)


def build_gate_tensor(d: int, D: int | None = None) -> GateTensor:
    d = check_dim(d)
    D = replica_count(d) if D is None else D
    G = gram_matrix(d, D).entries.astype(float)
    Wg = weingarten_matrix(d, D).entries
    core = np.einsum("ts,sa,sb->tab", Wg, G, G)
    return GateTensor(d, D, core, G, Wg)


@dataclass(frozen=True, eq=False)
class TopTensor:
    """Closure of the last layer: ``pair`` for sites under a top gate and
    ``single`` for uncovered edge sites."""

    d: int
    D: int
    overlaps: np.ndarray
    pair: np.ndarray
    single: np.ndarray


def overlap_vector(A: DefectSubspace) -> np.ndarray:
    """``c[pi] = tr(r(A) R_pi)`` ordered like :func:`enumerate_permutations`."""
    grp = enumerate_permutations(A.k)
    if A.d ** A.k <= 2**12:
        table = css_overlap_table(A).as_dict()
        return np.array([table[p] for p in grp.elements], dtype=float)
    if A == DefectSubspace.ones(A.d):
        return np.array([case_formula_overlap(p, A.d) for p in grp.elements], dtype=float)
    raise ValueError("overlap table too large to compute")


def build_top_tensor(A: DefectSubspace | None = None, d: int | None = None) -> TopTensor:
    if A is None:
        A = DefectSubspace.ones(check_dim(d))
    d = A.d
    D = replica_count(d)
    if A.k != D or A != DefectSubspace.ones(d):
        raise ValueError("top tensor is defined for A = span{1_D} only")
    c = overlap_vector(A)
    gate = build_gate_tensor(d, D)
    pair = np.einsum("t,tab->ab", c * c, gate.core)
    return TopTensor(d, D, c, pair, c.copy())
