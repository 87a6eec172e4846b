"""CSS entropy of a physical matrix product state via its replica MPS."""
from __future__ import annotations

import math

import numpy as np

from ..defects import DefectSubspace, css_projector
from ..qudit import NumericalError, ResourceError

MAX_REPLICA_BOND = 4096


def replica_factor(A: DefectSubspace, tol: float = 1e-10) -> np.ndarray:
    """``Gamma`` with ``Gamma^dagger Gamma = r(A) = |A| Q_A``."""
    r = A.size * css_projector(A).matrix
    evals, evecs = np.linalg.eigh(r)
    if evals.min() < -tol:
        raise NumericalError(f"r(A) has negative eigenvalue {evals.min():.3e}")
    keep = evals > tol
    return np.sqrt(evals[keep])[:, None] * evecs[:, keep].conj().T


def _site_power(A: np.ndarray, k: int) -> np.ndarray:
    out = A
    for _ in range(k - 1):
        l1, s1, r1 = out.shape
        l2, s2, r2 = A.shape
        out = np.einsum("asb,ctd->acstbd", out, A).reshape(l1 * l2, s1 * s2, r1 * r2)
    return out


def css_entropy_mps(tensors: list, A: DefectSubspace) -> float:
    """``Y_A = -log <Phi|Phi>`` where ``Phi`` carries ``Gamma`` applied to
    ``k`` copies of each site tensor.

    ``tensors[i]`` has shape ``(left, d, right)`` and the MPS must be
    normalized.
    """
    k = A.k
    chi = max(max(T.shape[0], T.shape[2]) for T in tensors)
    if chi**k > MAX_REPLICA_BOND:
        raise ResourceError(f"replica bond {chi}^{k} exceeds {MAX_REPLICA_BOND}")
    gamma = replica_factor(A)
    env = np.ones((1, 1), dtype=complex)
    log_val = 0.0
    for T in tensors:
        if T.shape[1] != A.d:
            raise ValueError("physical dimension does not match the subspace")
        B = np.tensordot(gamma, _site_power(np.asarray(T, dtype=complex), k), axes=(1, 1))
        # B: (g, left, right)
        env = np.einsum("ab,gac,gbd->cd", env, B.conj(), B)
        nrm = np.linalg.norm(env)
        if nrm == 0.0:
            raise NumericalError("replica norm vanished")
        log_val += math.log(nrm)
        env = env / nrm
    val = env[0, 0]
    if val.real <= 0 or abs(val.imag) > 1e-10:
        raise NumericalError(f"replica norm is not positive: {val}")
    return -(log_val + math.log(val.real))


def product_mps(states: list) -> list:
    return [np.asarray(s, dtype=complex).reshape(1, -1, 1) for s in states]


def random_mps(N: int, d: int, chi: int, rng: np.random.Generator) -> list:
    """Normalized random MPS with bond dimension at most ``chi``."""
    tensors = []
    left = 1
    for i in range(N):
        right = 1 if i == N - 1 else min(chi, d ** (i + 1), d ** (N - i - 1))
        T = rng.standard_normal((left, d, right)) + 1j * rng.standard_normal((left, d, right))
        tensors.append(T)
        left = right
    nrm = np.linalg.norm(mps_to_dense(tensors))
    tensors[0] = tensors[0] / nrm
    return tensors


def mps_to_dense(tensors: list) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for T in tensors:
        out = np.tensordot(out, T, axes=(1, 0)).reshape(-1, T.shape[2])
    return out.reshape(-1)
