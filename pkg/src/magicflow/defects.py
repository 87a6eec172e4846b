"""Defect subspaces of Z_d^k, their CSS projectors and permutation overlaps."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .qudit import ResourceError, check_dim, omega, replica_count

MAX_ENUMERATION = 10**8
MAX_PROJECTOR_DIM = 2**14


def _span(generators: np.ndarray, d: int) -> np.ndarray:
    """All ``d^r`` linear combinations of the rows of ``generators`` mod ``d``."""
    r, k = generators.shape
    coeffs = np.array(list(itertools.product(range(d), repeat=r)), dtype=np.int64).reshape(-1, r)
    return (coeffs @ generators) % d


def _rref_mod(vectors: np.ndarray, d: int) -> np.ndarray:
    """Reduced row echelon basis over Z_d (zero rows dropped)."""
    m = np.array(vectors, dtype=np.int64) % d
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        pivot = next((i for i in range(rank, rows) if m[i, c]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        m[rank] = (m[rank] * pow(int(m[rank, c]), -1, d)) % d
        for i in range(rows):
            if i != rank and m[i, c]:
                m[i] = (m[i] - m[i, c] * m[rank]) % d
        rank += 1
        if rank == rows:
            break
    return m[:rank]


def _rank_mod(vectors: np.ndarray, d: int) -> int:
    return len(_rref_mod(vectors, d))


def _is_defect_vector(x: np.ndarray, d: int) -> bool:
    D = replica_count(d)
    return int(x @ x) % D == 0 and int(x.sum()) % d == 0


@dataclass(frozen=True, eq=False)
class DefectSubspace:
    """Subspace ``A`` of Z_d^k spanned by ``generators`` (rows)."""

    d: int
    generators: np.ndarray
    k: int = field(init=False)

    def __post_init__(self):
        check_dim(self.d)
        g = np.atleast_2d(np.asarray(self.generators, dtype=np.int64)) % self.d
        object.__setattr__(self, "generators", g)
        object.__setattr__(self, "k", g.shape[1])

    @classmethod
    def ones(cls, d: int) -> "DefectSubspace":
        """``span{1_D}``, the subspace defining the ``Y_d`` family."""
        return cls(d, np.ones((1, replica_count(d)), dtype=np.int64))

    @property
    def dim(self) -> int:
        return _rank_mod(self.generators, self.d)

    @property
    def size(self) -> int:
        return self.d**self.dim

    @cached_property
    def elements(self) -> np.ndarray:
        els = np.unique(_span(self.generators, self.d), axis=0)
        return els[np.lexsort(els.T[::-1])]

    def key(self) -> tuple:
        return tuple(map(tuple, self.elements.tolist()))

    def __eq__(self, other):
        if not isinstance(other, DefectSubspace):
            return NotImplemented
        return self.d == other.d and self.k == other.k and self.key() == other.key()

    def __hash__(self):
        return hash((self.d, self.k, self.key()))

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "k": self.k,
            "dim": self.dim,
            "generators": self.generators.tolist(),
            "elements": self.elements.tolist(),
        }

    def __repr__(self):
        gens = ", ".join("(" + ",".join(map(str, g)) + ")" for g in self.generators.tolist())
        return f"DefectSubspace(d={self.d}, span{{{gens}}})"


def validate_defect_subspace(A: DefectSubspace) -> bool:
    if A.generators.shape[0] != A.dim:
        return False
    if not 0 < A.dim < A.k:
        return False
    return all(_is_defect_vector(x, A.d) for x in A.elements)


def find_defect_subspaces(d: int, k: int) -> list[DefectSubspace]:
    """Every defect subspace of Z_d^k, canonically sorted.

    Candidate vectors come from brute-force enumeration of Z_d^k; subspaces
    are grown depth first by adding candidates that keep every element of
    the span a defect vector.
    """
    d = check_dim(d)
    if k > 6:
        raise ValueError("k > 6 is not supported")
    if d**k > MAX_ENUMERATION:
        raise ResourceError(f"d^k = {d**k} exceeds the enumeration guard")

    digits = np.array(list(itertools.product(range(d), repeat=k)), dtype=np.int64)[:, ::-1]
    D = replica_count(d)
    mask = ((digits * digits).sum(1) % D == 0) & (digits.sum(1) % d == 0)
    mask[0] = False
    candidates = digits[mask]

    found: dict[tuple, DefectSubspace] = {}
    # every subspace of a defect subspace is again one, so growing level by
    # level from smaller subspaces reaches all of them
    level: dict[tuple, DefectSubspace] = {(): None}
    for _ in range(k - 1):
        nxt: dict[tuple, DefectSubspace] = {}
        for key, A in level.items():
            gens = [] if A is None else list(A.generators)
            members = set(key)
            for v in candidates:
                if tuple(v.tolist()) in members:
                    continue
                new = np.array(gens + [v])
                if not all(_is_defect_vector(x, d) for x in _span(new, d)):
                    continue
                B = DefectSubspace(d, _rref_mod(new, d))
                bkey = B.key()
                if bkey not in found and bkey not in nxt:
                    nxt[bkey] = B
        found.update(nxt)
        level = nxt
        if not level:
            break
    return sorted(found.values(), key=lambda A: A.key())


def _z_power_diag(d: int, q: np.ndarray) -> np.ndarray:
    """Diagonal of ``Z_q`` on ``(C^d)^{ox k}``."""
    k = len(q)
    idx = np.indices((d,) * k).reshape(k, -1)
    return omega(d) ** ((q @ idx) % d)


def _x_shift_index(d: int, p: np.ndarray) -> np.ndarray:
    """``X_p |x> = |x + p>``: returns the flat target index for each source."""
    k = len(p)
    idx = np.indices((d,) * k).reshape(k, -1)
    shifted = (idx + p[:, None]) % d
    return np.ravel_multi_index(tuple(shifted), (d,) * k)


@dataclass(frozen=True, eq=False)
class CssProjector:
    subspace: DefectSubspace
    matrix: np.ndarray


def css_projector(A: DefectSubspace) -> CssProjector:
    """``Q_A = |A|^{-2} sum_{q,p in A} Z_q X_p`` as a dense matrix."""
    d, k = A.d, A.k
    dim = d**k
    if dim > MAX_PROJECTOR_DIM:
        raise ResourceError(f"projector of size {dim} exceeds guard {MAX_PROJECTOR_DIM}")
    els = A.elements
    cols = np.arange(dim)
    zsum = sum(_z_power_diag(d, q) for q in els)
    Q = np.zeros((dim, dim), dtype=complex)
    for p in els:
        # (sum_q Z_q) X_p: column x -> row x+p with the Z phase of the row
        rows = _x_shift_index(d, p)
        Q[rows, cols] += zsum[rows]
    Q /= len(els) ** 2
    return CssProjector(A, Q)


def permutation_operator(perm, d: int) -> np.ndarray:
    """``R_pi |x_1..x_k> = |x_{pi^-1(1)} .. x_{pi^-1(k)}>``: tensor factor ``i``
    is moved to position ``pi(i)``."""
    k = len(perm)
    dim = d**k
    idx = np.indices((d,) * k).reshape(k, -1)
    out_digits = np.empty_like(idx)
    for i, target in enumerate(perm):
        out_digits[target] = idx[i]
    rows = np.ravel_multi_index(tuple(out_digits), (d,) * k)
    R = np.zeros((dim, dim))
    R[rows, np.arange(dim)] = 1.0
    return R


@dataclass(frozen=True, eq=False)
class OverlapTable:
    """``tr(r(A) R_pi)`` for every permutation of the ``k`` replicas, with
    ``r(A) = |A| Q_A``."""

    subspace: DefectSubspace
    perms: tuple
    values: tuple

    def as_dict(self) -> dict:
        return dict(zip(self.perms, self.values))

    def __getitem__(self, perm) -> int:
        return self.as_dict()[tuple(perm)]


def css_overlap_table(A: DefectSubspace) -> OverlapTable:
    proj = css_projector(A)
    r = A.size * proj.matrix
    perms = tuple(itertools.permutations(range(A.k)))
    values = []
    for perm in perms:
        # tr(r R) = sum_ij r_ij R_ji without forming the product
        tr = np.sum(r * permutation_operator(perm, A.d).T)
        val = int(round(tr.real))
        if abs(tr - val) > 1e-8:
            raise ValueError(f"non-integer overlap {tr} for permutation {perm}")
        values.append(val)
    return OverlapTable(A, perms, tuple(values))


def case_formula_overlap(perm, d: int) -> int:
    """Closed-form ``tr(r(A) R_pi)`` for ``A = span{1_D}``."""
    from .replica.group import cycle_count

    D = len(perm)
    cyc = cycle_count(perm)
    if cyc == D:
        return d ** (D - 1)
    if cyc == 1:
        return d**2
    if d == 2 and D == 4 and cyc == 2 and all(perm[perm[i]] == i for i in range(D)):
        return d**3
    return d ** (cyc - 1)
