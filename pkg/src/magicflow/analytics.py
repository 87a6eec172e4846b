"""Haar saturation values, decay fits and the doped-Clifford reference curve."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .defects import DefectSubspace, case_formula_overlap, css_overlap_table
from .defects import MAX_PROJECTOR_DIM
from .qudit import check_dim


@lru_cache(maxsize=None)
def stirling_cycle(n: int, k: int) -> int:
    """Unsigned Stirling number of the first kind: permutations of ``n``
    elements with exactly ``k`` cycles."""
    if not 1 <= k <= n <= 8:
        raise ValueError("stirling_cycle requires 1 <= k <= n <= 8")
    if n == k:
        return 1
    if k == 1:
        return math.factorial(n - 1)
    return stirling_cycle(n - 1, k - 1) + (n - 1) * stirling_cycle(n - 1, k)


@dataclass(frozen=True)
class HaarValue:
    d: int
    N: int
    A: DefectSubspace
    upsilon_log: float

    @property
    def Y(self) -> float:
        return -self.upsilon_log

    @property
    def upsilon(self) -> float:
        return math.exp(self.upsilon_log)


def _overlaps(A: DefectSubspace) -> list[int]:
    if A.d**A.k <= MAX_PROJECTOR_DIM:
        return list(css_overlap_table(A).values)
    if A != DefectSubspace.ones(A.d):
        raise ValueError("overlap table too large to build for this subspace")
    import itertools

    return [case_formula_overlap(p, A.d) for p in itertools.permutations(range(A.k))]


def haar_css_entropy(A: DefectSubspace | None = None, N: int = 1, d: int | None = None) -> HaarValue:
    """``E[Upsilon_A]`` over Haar states, ``sum_pi c_pi^N / prod_j (d^N + j)``.

    Evaluated in log space so that ``c_pi^N`` never materializes.
    """
    if A is None:
        if d is None:
            raise ValueError("give either A or d")
        A = DefectSubspace.ones(check_dim(d))
    if N < 1:
        raise ValueError("N must be positive")
    c = np.array(_overlaps(A), dtype=float)
    if np.any(c <= 0):
        raise ValueError("overlaps must be positive")
    log_num = logsumexp(N * np.log(c))
    # log(d^N + j) without forming d^N
    log_dN = N * math.log(A.d)
    log_den = sum(log_dN + math.log1p(j * math.exp(-log_dN)) for j in range(A.k))
    return HaarValue(A.d, N, A, float(log_num - log_den))


def haar_Y(d: int, N: int) -> float:
    """``Y_d`` of Haar states for ``A = span{1_D}``."""
    return haar_css_entropy(d=d, N=N).Y


@dataclass(frozen=True)
class DecayFit:
    alpha: float
    a: float
    t_window: tuple
    residual: float
    stderr_alpha: float
    n_points: int

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "stderr": self.stderr_alpha,
            "a": self.a,
            "t_window": list(self.t_window),
            "residual": self.residual,
        }

    def __call__(self, t):
        return self.a * np.exp(-self.alpha * np.asarray(t, dtype=float))


def fit_decay(series, t_min: float = -math.inf, t_max: float = math.inf) -> DecayFit:
    """Least-squares fit of ``log deltaY = log a - alpha t``.

    Parameters
    ----------
    series : iterable of (t, deltaY)
    t_min, t_max : float
        Inclusive fit window.

    Points with ``deltaY <= 0`` inside the window are dropped with a warning.
    """
    pts = np.asarray(list(series), dtype=float).reshape(-1, 2)
    pts = pts[(pts[:, 0] >= t_min) & (pts[:, 0] <= t_max)]
    bad = ~(pts[:, 1] > 0)
    if bad.any():
        warnings.warn(f"dropping {int(bad.sum())} non-positive deltaY points", RuntimeWarning, stacklevel=2)
        pts = pts[~bad]
    if len(pts) < 4:
        raise ValueError(f"need at least 4 positive points, got {len(pts)}")
    t, logy = pts[:, 0], np.log(pts[:, 1])
    X = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(X, logy, rcond=None)
    resid = logy - X @ coef
    dof = len(t) - 2
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(X.T @ X)
    return DecayFit(
        alpha=float(-coef[1]),
        a=float(math.exp(coef[0])),
        t_window=(float(t.min()), float(t.max())),
        residual=float(np.sqrt(np.mean(resid**2))),
        stderr_alpha=float(np.sqrt(cov[1, 1])),
        n_points=len(t),
    )


def saturation_time(alpha: float, N: float, epsilon: float, a: float = 1.0) -> float:
    """Depth at which ``a N exp(-alpha t)`` falls to ``epsilon``."""
    if alpha <= 0 or epsilon <= 0:
        raise ValueError("alpha and epsilon must be positive")
    return math.log(N * a / epsilon) / alpha


def doped_reference_curve(t, N: int):
    """``Y_2^Haar + log(Upsilon_2^Haar + (3/4)^t)``, vanishing as ``t -> inf``."""
    h = haar_css_entropy(d=2, N=N)
    t = np.asarray(t, dtype=float)
    out = h.Y + np.logaddexp(h.upsilon_log, t * math.log(0.75))
    return float(out) if out.ndim == 0 else out
