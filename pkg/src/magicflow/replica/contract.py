"""Layer-by-layer MPS contraction of the averaged replica network.

The spatial chain of ``N`` permutation spins is stored as a matrix product
state and pushed upward through the brick wall. Layer 1 is the bottom
boundary, layers ``2..t-1`` are averaged gates, and layer ``t`` is closed
with the top tensor without truncation.

Site vectors are kept in Hilbert-Schmidt coordinates: a vector ``a`` over
permutations stands for the operator ``sum_pi a_pi R_pi`` and is stored as
``H a`` with ``H^T H = G``. Euclidean norms of the MPS are then operator
norms, so SVD truncation discards the least operator weight. In the raw
permutation basis the discarded weight has no such meaning, and when ``G``
is singular (``d = 2``) the raw basis also carries null directions that
eat bond dimension without changing any observable.

Every averaged layer fixes the global Haar projector onto
``span{pi^{x N}}``, so the exact state's top-boundary value of that
component is the Haar value at every depth. Truncation leaks weight into it
early on, which would otherwise survive as a constant offset in ``Y`` long
after the physical decay has died away. :class:`HaarComponent` measures the
truncated state's component and swaps in the exact one.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..qudit import NumericalError, check_dim, replica_count
from .group import enumerate_permutations
from .tensors import build_bottom_boundary, build_gate_tensor, build_top_tensor

logger = logging.getLogger(__name__)

DEFAULT_CUTOFF = 1e-14
DENSE_SVD_LIMIT = 2000  # larger two-site matrices use a randomized SVD
POWER_ITERATIONS = 3


def signed_logsumexp(logs, signs, axis=None):
    """``(log|sum|, sign)`` of ``sum signs * exp(logs)``.

    scipy's ``logsumexp`` with signed weights returns nan when the sum
    cancels to within rounding of the largest term, which is the normal
    case for the Haar correction at shallow depth.
    """
    logs = np.asarray(logs, dtype=float)
    signs = np.broadcast_to(np.asarray(signs, dtype=float), logs.shape)
    top = np.max(logs, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    total = np.sum(signs * np.exp(logs - top), axis=axis)
    with np.errstate(divide="ignore"):
        out = np.log(np.abs(total)) + np.squeeze(top, axis=axis)
    return out, np.sign(total)


def layer_pairs(N: int, r: int) -> list[int]:
    """Left sites (0-based) of the gates in layer ``r`` (1-based)."""
    start = 0 if r % 2 == 1 else 1
    return list(range(start, N - 1, 2))


@dataclass(frozen=True, eq=False)
class SpinFrame:
    """Hilbert-Schmidt coordinates for one permutation spin.

    ``H`` has shape ``(rank G, q)`` and satisfies ``H^T H = G``.
    """

    H: np.ndarray
    gram: np.ndarray
    wg: np.ndarray
    eigenvalues: np.ndarray

    @property
    def rank(self) -> int:
        return self.H.shape[0]

    def covector(self, c: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """``f`` with ``f . (H a) = c . a`` for every ``a``.

        Exists only if ``c`` lies in the range of ``G``, which holds for any
        linear functional of the represented operator.
        """
        f = (self.H @ c) / self.eigenvalues
        if np.linalg.norm(self.H.T @ f - c) > tol * max(1.0, np.linalg.norm(c)):
            raise NumericalError("covector is not a function of the operator")
        return f

    def pair_covector(self, u: np.ndarray) -> np.ndarray:
        """Two-site covector of ``a1, a2 -> sum_s u_s (G a1)_s (G a2)_s``."""
        return np.einsum("is,js,s->ij", self.H, self.H, u)


def hs_frame(gram: np.ndarray, wg: np.ndarray, tol: float = 1e-10) -> SpinFrame:
    evals, evecs = np.linalg.eigh(gram)
    keep = evals > tol * evals.max()
    evals, evecs = evals[keep], evecs[:, keep]
    H = np.sqrt(evals)[:, None] * evecs.T
    return SpinFrame(H, gram, wg, evals)


def _dense_svd(mat: np.ndarray):
    try:
        return scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")


class _GateOutput:
    """Two-site matrix ``theta[(a,i),(j,c)] = sum_t H[i,t] H[j,t] v[t,a,c]``
    without forming it."""

    def __init__(self, H: np.ndarray, v: np.ndarray):
        self.H, self.v = H, v
        self.r = H.shape[0]
        self.q, self.a, self.c = v.shape
        self.shape = (self.a * self.r, self.r * self.c)

    def dense(self) -> np.ndarray:
        HH = (self.H[:, None, :] * self.H[None, :, :]).reshape(self.r * self.r, self.q)
        out = (HH @ self.v.reshape(self.q, -1)).reshape(self.r, self.r, self.a, self.c)
        return out.transpose(2, 0, 1, 3).reshape(self.shape)

    def frobenius2(self, gram: np.ndarray) -> float:
        flat = self.v.reshape(self.q, -1)
        return float(np.sum((gram * gram) * (flat @ flat.T)))

    def matmul(self, X: np.ndarray) -> np.ndarray:
        """``theta @ X`` for ``X`` of shape ``(r*c, k)``."""
        k = X.shape[1]
        w = np.tensordot(self.H, X.reshape(self.r, self.c, k), axes=(0, 0))  # (t, c, k)
        z = np.matmul(self.v, w)  # (t, a, k)
        return np.tensordot(self.H, z, axes=(1, 0)).transpose(1, 0, 2).reshape(-1, k)

    def rmatmul(self, Y: np.ndarray) -> np.ndarray:
        """``theta.T @ Y`` for ``Y`` of shape ``(a*r, k)``."""
        k = Y.shape[1]
        w = np.tensordot(self.H, Y.reshape(self.a, self.r, k), axes=(0, 1))  # (t, a, k)
        z = np.matmul(self.v.transpose(0, 2, 1), w)  # (t, c, k)
        return np.tensordot(self.H, z, axes=(1, 0)).reshape(-1, k)

    def randomized_svd(self, rank: int, rng: np.random.Generator):
        """Halko-Martinsson-Tropp range finder with power iterations."""
        omega = rng.standard_normal((self.shape[1], rank))
        Q, _ = np.linalg.qr(self.matmul(omega))
        for _ in range(POWER_ITERATIONS):
            P, _ = np.linalg.qr(self.rmatmul(Q))
            Q, _ = np.linalg.qr(self.matmul(P))
        B = self.rmatmul(Q).T  # (rank, r*c)
        ub, s, vh = _dense_svd(B)
        return Q @ ub, s, vh


@dataclass
class SpinMPS:
    """Open-boundary MPS over permutation spins in Hilbert-Schmidt coordinates.

    ``tensors[i]`` has shape ``(left, r, right)`` with ``r = rank G``. The
    represented vector is ``exp(log_scale)`` times the contraction.
    """

    tensors: list
    frame: SpinFrame
    chi: int
    cutoff: float = DEFAULT_CUTOFF
    log_scale: float = 0.0
    max_bond: int = 1
    discarded_weight: float = 0.0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bonds(self) -> list[int]:
        return [A.shape[2] for A in self.tensors[:-1]]

    @classmethod
    def paired_product(cls, N: int, frame: SpinFrame, weight: float, chi: int, cutoff: float = DEFAULT_CUTOFF):
        """Product over pairs ``(0,1), (2,3), ...`` of ``weight * sum_pi |pi, pi>``.

        In Hilbert-Schmidt coordinates each pair is ``weight * H H^T``,
        which is diagonal.
        """
        r = frame.rank
        tensors = []
        for _ in range(N // 2):
            tensors.append(np.eye(r).reshape(1, r, r))
            tensors.append(np.diag(frame.eigenvalues).reshape(r, r, 1))
        mps = cls(tensors, frame, chi, cutoff)
        mps.log_scale = (N // 2) * math.log(weight)
        mps.max_bond = r
        return mps

    def _absorb_norm(self, site: int):
        nrm = np.linalg.norm(self.tensors[site])
        if not np.isfinite(nrm) or nrm == 0.0:
            raise NumericalError(f"degenerate norm {nrm} at site {site}")
        self.tensors[site] = self.tensors[site] / nrm
        self.log_scale += math.log(nrm)

    def right_canonicalize(self):
        """Sweep right to left; afterwards the orthogonality centre is site 0."""
        T = self.tensors
        for i in range(self.n_sites - 1, 0, -1):
            l, s, r = T[i].shape
            qm, rm = np.linalg.qr(T[i].reshape(l, s * r).T)
            T[i] = qm.T.reshape(-1, s, r)
            T[i - 1] = np.tensordot(T[i - 1], rm.T, axes=(2, 0))
            self._absorb_norm(i - 1)  # keeps long chains from overflowing

    def _shift_centre(self, i: int):
        """Move the orthogonality centre from site ``i`` to ``i + 1``."""
        T = self.tensors
        l, s, r = T[i].shape
        qm, rm = np.linalg.qr(T[i].reshape(l * s, r))
        T[i] = qm.reshape(l, s, -1)
        T[i + 1] = np.tensordot(rm, T[i + 1], axes=(1, 0))

    def apply_gate(self, i: int):
        """Averaged gate on sites ``(i, i+1)``; the centre must sit at ``i``."""
        T, H = self.tensors, self.frame.H
        # (G a)_s on each spin, then the diagonal s1 = s2 = s of the pair
        A = np.tensordot(H, T[i], axes=(0, 1))  # (s, a, b)
        B = np.tensordot(H, T[i + 1], axes=(0, 1))  # (s, b, c)
        x = np.matmul(A, B)  # (s, a, c)
        v = np.tensordot(self.frame.wg, x, axes=(1, 0))  # (t, a, c)
        out = _GateOutput(H, v)
        m, n = out.shape
        if min(m, n) <= max(DENSE_SVD_LIMIT, 3 * self.chi):
            mat = out.dense()
            total = float(np.sum(mat * mat))
            u, s, vh = _dense_svd(mat)
        else:
            total = out.frobenius2(self.frame.gram)
            # a sketch of twice the kept rank pins the truncated tail
            u, s, vh = out.randomized_svd(2 * self.chi + 20, self.rng)
        if not np.isfinite(total) or total == 0.0:
            raise NumericalError(f"degenerate two-site tensor at sites {i},{i + 1}")
        weights = s * s
        keep = int(np.count_nonzero(weights > self.cutoff * total))
        keep = max(1, min(self.chi, keep))
        self.discarded_weight += max(0.0, total - float(weights[:keep].sum())) / total
        r = self.frame.rank
        T[i] = u[:, :keep].reshape(out.a, r, keep)
        T[i + 1] = (s[:keep, None] * vh[:keep]).reshape(keep, r, out.c)
        self._absorb_norm(i + 1)
        self.max_bond = max(self.max_bond, keep)

    def apply_layer(self, starts: list[int]):
        self.right_canonicalize()
        starts = set(starts)
        i = 0
        N = self.n_sites
        while i < N - 1:
            if i in starts:
                self.apply_gate(i)
                if i + 2 < N:
                    self._shift_centre(i + 1)
                i += 2
            else:
                self._shift_centre(i)
                i += 1

    def product_overlaps(self, covectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(log|<f^N|psi>|, sign)`` for each row ``f`` of ``covectors``."""
        k = covectors.shape[0]
        v = np.ones((k, 1))
        logs = np.full(k, self.log_scale)
        for T in self.tensors:
            v = np.einsum("kl,lsr,ks->kr", v, T, covectors)
            nrm = np.linalg.norm(v, axis=1)
            alive = nrm > 0
            logs[~alive] = -np.inf
            v[alive] /= nrm[alive, None]
            logs[alive] += np.log(nrm[alive])
        return logs, np.sign(v[:, 0])

    def close(self, starts: list[int], pair: np.ndarray, single: np.ndarray) -> tuple[float, float]:
        """Contract with ``pair`` covectors on ``starts`` and ``single`` elsewhere.

        Both covectors are in Hilbert-Schmidt coordinates. Returns
        ``(log|value|, sign)``.
        """
        T = self.tensors
        starts = set(starts)
        v = np.ones(1)
        log_val = self.log_scale
        i = 0
        while i < self.n_sites:
            if i in starts:
                x = np.tensordot(v, T[i], axes=(0, 0))
                y = np.tensordot(x, T[i + 1], axes=(1, 0))
                v = np.tensordot(pair, y, axes=([0, 1], [0, 1]))
                i += 2
            else:
                v = single @ np.tensordot(v, T[i], axes=(0, 0))
                i += 1
            nrm = np.linalg.norm(v)
            if not np.isfinite(nrm) or nrm == 0.0:
                raise NumericalError(f"closure vanished at site {i}")
            log_val += math.log(nrm)
            v = v / nrm
        return log_val, float(np.sign(v[0]))


@dataclass
class HaarComponent:
    """Top-boundary value of the part of an MPS fixed by every layer.

    The fixed part of ``psi`` is ``sum_{s,t} |s^N> Wg_N(s,t) <t^N|psi>``
    where ``Wg_N`` is the Weingarten matrix at dimension ``d^N``. The top
    boundary maps ``|s^N>`` to ``c_s^N``, so the value is
    ``sum_t beta_t <t^N|psi>`` with ``beta = Wg_N^T c^N``.
    """

    log_beta: np.ndarray
    sign_beta: np.ndarray
    covectors: np.ndarray

    @classmethod
    def build(cls, frame: SpinFrame, c: np.ndarray, N: int, d: int, D: int) -> "HaarComponent":
        grp = enumerate_permutations(D)
        rel = grp.compose[grp.inverse[:, None], np.arange(grp.order)[None, :]]
        # G_N / d^{N D} has unit diagonal and entries d^{-N (D - #)} elsewhere
        scaled = np.exp(-N * (D - grp.cycles[rel]) * math.log(d))
        w = np.linalg.inv(scaled)
        with np.errstate(divide="ignore"):
            log_c = N * np.log(np.abs(c))
            log_w = np.log(np.abs(w))
        log_beta, sign_beta = signed_logsumexp(log_c[:, None] + log_w, (np.sign(c) ** N)[:, None] * np.sign(w), axis=0)
        # <t| on one site is (G a)_t, i.e. column t of H in these coordinates
        return cls(log_beta - N * D * math.log(d), sign_beta, frame.H.T.copy())

    def value(self, mps: SpinMPS) -> tuple[float, float]:
        """``(log|value|, sign)`` on ``mps``."""
        logs, signs = mps.product_overlaps(self.covectors)
        out, sign = signed_logsumexp(self.log_beta + logs, self.sign_beta * signs)
        return float(out), float(sign)


@dataclass
class ContractionResult:
    d: int
    N: int
    chi: int
    log_upsilon: list = field(default_factory=list)
    max_bond: list = field(default_factory=list)
    discarded_weight: list = field(default_factory=list)
    haar_leak: list = field(default_factory=list)

    @property
    def depths(self) -> list[int]:
        return list(range(1, len(self.log_upsilon) + 1))

    @property
    def annealed_Y(self) -> np.ndarray:
        return -np.asarray(self.log_upsilon)


def annealed_curve(
    N: int, t_max: int, d: int, chi: int, cutoff: float = DEFAULT_CUTOFF, haar_correction: bool = True
) -> ContractionResult:
    """``log E[Upsilon_d]`` for every depth ``1..t_max`` from one evolution.

    With ``haar_correction`` the truncated state's Haar-fixed component is
    replaced by the exact one (see :class:`HaarComponent`); ``haar_leak``
    records the relative error that was removed. Without truncation the
    two agree to rounding.
    """
    d = check_dim(d)
    if N < 2 or N % 2:
        raise ValueError("N must be even and at least 2")
    if t_max < 1 or chi < 1:
        raise ValueError("t_max and chi must be positive")
    D = replica_count(d)
    bottom = build_bottom_boundary(d, D)
    gate = build_gate_tensor(d, D)
    top = build_top_tensor(d=d)
    c = top.single
    res = ContractionResult(d, N, chi)

    # t = 1 closes the product of Haar pairs directly
    pair_val = bottom.weight * float(c @ c)
    res.log_upsilon.append((N // 2) * math.log(pair_val))
    res.max_bond.append(0)
    res.discarded_weight.append(0.0)
    res.haar_leak.append(0.0)
    if t_max == 1:
        return res

    frame = hs_frame(gate.gram, gate.wg)
    pair = frame.pair_covector(gate.wg.T @ (c * c))
    single = frame.covector(c)
    mps = SpinMPS.paired_product(N, frame, bottom.weight, chi, cutoff)
    haar = HaarComponent.build(frame, c, N, d, D)
    log_exact, _ = haar.value(mps)  # nothing truncated yet
    for t in range(2, t_max + 1):
        if t > 2:
            mps.apply_layer(layer_pairs(N, t - 1))
        log_val, sign = mps.close(layer_pairs(N, t), pair, single)
        leak = 0.0
        if haar_correction:
            log_fixed, fixed_sign = haar.value(mps)
            leak = fixed_sign * math.exp(log_fixed - log_exact) - 1.0
            log_val, sign = signed_logsumexp([log_val, log_fixed, log_exact], [sign, -fixed_sign, 1.0])
            log_val, sign = float(log_val), float(sign)
        if sign <= 0 or not np.isfinite(log_val):
            raise NumericalError(f"non-positive or non-finite Upsilon at layer {t}")
        res.log_upsilon.append(log_val)
        res.max_bond.append(mps.max_bond)
        res.discarded_weight.append(mps.discarded_weight)
        res.haar_leak.append(leak)
        logger.debug("d=%d N=%d t=%d logU=%.12g bond=%d", d, N, t, log_val, mps.max_bond)
    return res


def contract_annealed_upsilon(N: int, t: int, d: int, chi: int, cutoff: float = DEFAULT_CUTOFF):
    """``(log E[Upsilon_d], diagnostics)`` at depth ``t``."""
    res = annealed_curve(N, t, d, chi, cutoff)
    diag = {
        "max_bond": res.max_bond[-1],
        "discarded_weight": res.discarded_weight[-1],
    }
    return res.log_upsilon[-1], diag


def annealed_css_entropy(N: int, t: int, d: int, chi: int, cutoff: float = DEFAULT_CUTOFF) -> float:
    log_u, _ = contract_annealed_upsilon(N, t, d, chi, cutoff)
    return -log_u
