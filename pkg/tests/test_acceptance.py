"""End-to-end acceptance criteria, each at its stated tolerance.

Expensive TN curves are computed once per session and shared. The summary
at the end of the pytest run lists one PASS/FAIL line per criterion.
"""
import math
import time
from functools import lru_cache

import numpy as np
import pytest

from magicflow.analytics import doped_reference_curve, fit_decay, haar_css_entropy, haar_Y
from magicflow.defects import DefectSubspace, css_projector, find_defect_subspaces
from magicflow.exact import (
    CircuitSpec,
    DopedCliffordSpec,
    StateVector,
    apply_single_site_gate,
    apply_two_site_gate,
    brickwall_upsilon,
    css_entropy_exact,
    ensemble_averages,
    run_doped_clifford,
)
from magicflow.qudit import clifford_generators
from magicflow.replica import annealed_curve, contract_annealed_upsilon, gram_matrix, weingarten_matrix

import oracles

pytestmark = pytest.mark.acceptance


T_MAX = {2: 12, 3: 25}


@lru_cache(maxsize=None)
def _tn_curve(d, N, chi):
    res = annealed_curve(N, T_MAX[d], d, chi)
    return np.array(res.depths), haar_Y(d, N) - res.annealed_Y


def tn_delta(d, N, chi, t_max):
    """``(depths, deltaY)`` of the annealed TN curve up to ``t_max``."""
    t, dY = _tn_curve(d, N, chi)
    return t[:t_max], dY[:t_max]


# --- 1 ------------------------------------------------------------------------------


@pytest.mark.criterion("1a", "defect census: (2,4) (2,5) (3,3) (7,3) and one-dimensional (2,6)")
def test_census(measured):
    t0 = time.perf_counter()
    c24 = find_defect_subspaces(2, 4)
    c25 = find_defect_subspaces(2, 5)
    c26 = find_defect_subspaces(2, 6)
    c33 = find_defect_subspaces(3, 3)
    c73 = find_defect_subspaces(7, 3)
    elapsed = time.perf_counter() - t0
    measured("seconds", f"{elapsed:.3f}")
    assert c24 == [DefectSubspace.ones(2)]
    assert len(c25) == 5 and all(A.dim == 1 for A in c25)
    assert sum(A.dim == 1 for A in c26) == 15
    assert DefectSubspace.ones(3) in c33
    assert DefectSubspace(7, [[1, 2, 4]]) in c73
    assert elapsed < 1.0


@pytest.mark.criterion("1b", "defect census: nine two-dimensional subspaces at (2,6)")
@pytest.mark.xfail(
    strict=True,
    reason="there are 15 two-dimensional defect subspaces at (2,6), one per perfect "
    "matching of six replicas; brute-force enumeration agrees",
)
def test_census_two_dimensional(measured):
    two = [A for A in find_defect_subspaces(2, 6) if A.dim == 2]
    measured("count", len(two))
    assert len(two) == 9


# --- 2 ------------------------------------------------------------------------------

DEEP = 30


@pytest.mark.criterion("2a", "Haar closed forms: Monte-Carlo over 2000 deep circuits within 3 stderr")
@pytest.mark.parametrize("d,N", [(2, 3), (2, 4), (2, 5), (3, 2), (3, 3)])
def test_haar_monte_carlo(d, N, measured):
    from magicflow.exact import realization_seeds

    ups = np.array([brickwall_upsilon(d, N, [DEEP], s)[0] for s in realization_seeds(1000 + 10 * d + N, 2000)])
    closed = 4 / (2**N + 3) if d == 2 else 3 / (3**N + 2)
    err = ups.std(ddof=1) / math.sqrt(len(ups))
    z = abs(ups.mean() - closed) / err
    measured("d,N", f"{d},{N}")
    measured("z", f"{z:.2f}")
    assert z <= 3


@pytest.mark.criterion("2b", "Haar general sum equals both closed forms to 1e-12 for N <= 30")
def test_haar_general_sum(measured):
    worst = 0.0
    for N in range(1, 31):
        for d, closed in ((2, 4 / (2**N + 3)), (3, 3 / (3**N + 2))):
            got = haar_css_entropy(d=d, N=N).upsilon_log
            worst = max(worst, abs(got - math.log(closed)))
    measured("max_log_err", f"{worst:.1e}")
    assert worst < 1e-12


# --- 3 ------------------------------------------------------------------------------


@lru_cache(maxsize=None)
def exact_ensemble(N):
    spec = CircuitSpec(d=2, N=N, t=6, seed=300 + N, M=10_000)
    return ensemble_averages(spec, depths=range(1, 7))


@pytest.mark.criterion("3a", "TN at full bond vs exact ensemble (M=1e4) within 3 stderr")
@pytest.mark.parametrize("N", [4, 6])
def test_tn_vs_exact_ensemble(N, measured):
    stats = exact_ensemble(N)
    zs = []
    for j, t in enumerate(range(1, 7)):
        log_u, _ = contract_annealed_upsilon(N, t, 2, chi=10**6)
        zs.append(abs(-log_u - stats.annealed[j]) / stats.annealed_err[j])
    measured("N", N)
    measured("max_z", f"{max(zs):.2f}")
    assert max(zs) <= 3


@pytest.mark.criterion("3b", "TN vs dense replica oracle at N=4, t<=3 to 1e-8")
def test_tn_vs_replica_oracle(measured):
    worst = 0.0
    for t in (1, 2, 3):
        log_u, _ = contract_annealed_upsilon(4, t, 2, chi=10**6)
        worst = max(worst, abs(log_u - math.log(oracles.exact_replica_upsilon(2, 4, t))))
    measured("max_err", f"{worst:.1e}")
    assert worst < 1e-8


# --- 4 ------------------------------------------------------------------------------


@pytest.mark.criterion("4", "t=1 additivity (N/2) log(7/4) and (N/2) log(11/3)")
def test_first_layer_additivity(measured):
    worst = 0.0
    for N in (4, 16, 64):
        for d, per_pair in ((2, math.log(7 / 4)), (3, math.log(11 / 3))):
            log_u, _ = contract_annealed_upsilon(N, 1, d, chi=36)
            worst = max(worst, abs(-log_u - N / 2 * per_pair))
    measured("max_err", f"{worst:.1e}")
    assert worst < 1e-10


# --- 5 ------------------------------------------------------------------------------


def decay_fit(d, N, chi, lo, hi):
    t, dY = tn_delta(d, N, chi, hi)
    return fit_decay(zip(t, dY / N), lo, hi)


@pytest.mark.criterion("5a", "alpha_3 = 0.98 +- 0.08 at d=3, chi=36, t in [5,15]")
@pytest.mark.parametrize("N", [32, 64])
def test_alpha3(N, measured):
    fit = decay_fit(3, N, 36, 5, 15)
    measured("N", N)
    measured("alpha", f"{fit.alpha:.4f}")
    measured("points", fit.n_points)
    assert abs(fit.alpha - 0.98) <= 0.08


@pytest.mark.criterion("5b", "alpha_2 = 0.43 +- 0.06 at d=2, N=32, chi=576, t in [5,12]")
def test_alpha2_full(measured):
    fit = decay_fit(2, 32, 576, 5, 12)
    measured("alpha", f"{fit.alpha:.4f}")
    assert abs(fit.alpha - 0.43) <= 0.06


@pytest.mark.criterion("5c", "alpha_2 smoke variant within 0.43 +- 0.10 at chi=100")
def test_alpha2_smoke(measured):
    fit = decay_fit(2, 32, 100, 5, 12)
    measured("alpha", f"{fit.alpha:.4f}")
    assert abs(fit.alpha - 0.43) <= 0.10


# --- 6 ------------------------------------------------------------------------------


@pytest.mark.criterion("6", "collapse: deltaY_3/N at N=32 and N=64 agree within 5% for t >= 5")
@pytest.mark.xfail(
    strict=True,
    reason="open-boundary deficit: deltaY = a (N - x(t)) exp(-alpha t) with x of 5 to 10 sites, "
    "so deltaY/N at N=32 and N=64 differ by 8-15%",
)
def test_collapse(measured):
    t, a = tn_delta(3, 32, 36, 15)
    _, b = tn_delta(3, 64, 36, 15)
    sel = t >= 5
    rel = np.abs(a[sel] / 32 - b[sel] / 64) / np.abs(b[sel] / 64)
    measured("max_rel", f"{rel.max():.3g}")
    measured("at_t", int(t[sel][rel.argmax()]))
    assert np.all(rel <= 0.05)


# --- 7 ------------------------------------------------------------------------------


@pytest.mark.criterion("7", "chi convergence |Y(36) - Y(72)| < 1e-6 at d=3, N=64")
@pytest.mark.xfail(
    strict=True,
    reason="truncation at the entanglement peak (t = 4..11) leaves chi=36 and chi=72 apart by "
    "up to 1.4e-4, and chi=72 vs chi=144 by 2.4e-5; later depths agree below 1e-6",
)
def test_chi_convergence(measured):
    _, a = tn_delta(3, 64, 36, 20)
    _, b = tn_delta(3, 64, 72, 20)
    diff = np.abs(a - b)
    measured("max_diff", f"{diff.max():.2e}")
    measured("at_t", int(diff.argmax()) + 1)
    assert diff.max() < 1e-6


# --- 8 ------------------------------------------------------------------------------

DOPED_T = 50


@lru_cache(maxsize=None)
def doped_run(N):
    return run_doped_clifford(DopedCliffordSpec(N=N, t=DOPED_T, seed=800 + N, M=1000))


def doped_tail_window(N):
    stats = doped_run(N)
    dY = haar_Y(2, N) - stats.annealed
    err = stats.annealed_err
    # decayed well past the crossover, yet resolved above the noise
    sel = (dY <= 0.1) & (dY >= 5 * err)
    return stats.t[sel], dY[sel]


@pytest.mark.criterion("8a", "doped Clifford: large-t slope of log deltaY_2 is log(3/4) within 15%")
@pytest.mark.parametrize("N", [10, 12])
def test_doped_slope(N, measured):
    t, dY = doped_tail_window(N)
    slope = np.polyfit(t, np.log(dY), 1)[0]
    measured("N", N)
    measured("slope", f"{slope:.4f}")
    measured("window", f"{int(t.min())}-{int(t.max())}")
    assert len(t) >= 5
    assert abs(slope / math.log(0.75) - 1) <= 0.15


@pytest.mark.criterion("8b", "doped Clifford: linear growth, then decay tracking the reference curve")
@pytest.mark.parametrize("N", [10, 12])
def test_doped_crossover(N, measured):
    stats = doped_run(N)
    t = stats.t
    Y = stats.annealed
    dY = haar_Y(2, N) - Y
    ref = doped_reference_curve(t, N)
    # early regime: Y grows linearly in depth
    early = t <= N
    coef, res, *_ = np.polyfit(t[early], Y[early], 1, full=True)
    r2 = 1 - res[0] / np.sum((Y[early] - Y[early].mean()) ** 2)
    measured("N", N)
    measured("early_slope", f"{coef[0]:.3f}")
    measured("r2", f"{r2:.4f}")
    assert coef[0] > 0 and r2 >= 0.99
    # crossover: depth where deltaY halves, compared with the reference
    half_data = t[np.argmax(dY <= dY[0] / 2)]
    half_ref = t[np.argmax(ref <= ref[0] / 2)]
    measured("half_depth", f"{half_data}/{half_ref}")
    assert 10 * abs(int(half_data) - int(half_ref)) <= 3 * int(half_ref)  # within 30%, exact
    # late regime stays within an order of magnitude of the reference
    resolved = dY >= 5 * np.nan_to_num(stats.annealed_err, nan=0.0)
    ratio = np.abs(np.log(dY[resolved] / ref[resolved]))
    measured("max_log10_ratio", f"{ratio.max() / math.log(10):.2f}")
    assert ratio.max() <= math.log(10)


# --- 9 ------------------------------------------------------------------------------


def random_state(d, n, rng):
    psi = rng.standard_normal(d**n) + 1j * rng.standard_normal(d**n)
    return StateVector(d, n, psi / np.linalg.norm(psi))


@pytest.mark.criterion("9a", "faithfulness: Y = 0 on 100 random stabilizer states")
def test_faithfulness(measured):
    rng = np.random.default_rng(90)
    worst = 0.0
    for j in range(100):
        d = 2 if j % 2 == 0 else 3
        n = 1 + j % 4
        psi = oracles.stabilizer_state(d, n, rng)
        worst = max(worst, abs(css_entropy_exact(StateVector(d, n, psi))))
    measured("max_abs_Y", f"{worst:.1e}")
    assert worst < 1e-9


@pytest.mark.criterion("9b", "Clifford invariance over 50 random Clifford words, N <= 4")
def test_clifford_invariance(measured):
    rng = np.random.default_rng(91)
    worst = 0.0
    for j in range(50):
        d = 2 if j % 2 == 0 else 3
        n = 2 + j % 3
        g = clifford_generators(d)
        s = random_state(d, n, rng)
        y0 = css_entropy_exact(s)
        for _ in range(40):
            kind = int(rng.integers(3))
            if kind == 2:
                apply_two_site_gate(s, g.CADD, int(rng.integers(n - 1)))
            else:
                apply_single_site_gate(s, g.H if kind == 0 else g.P, int(rng.integers(n)))
        worst = max(worst, abs(css_entropy_exact(s) - y0))
    measured("max_diff", f"{worst:.1e}")
    assert worst < 1e-9


@pytest.mark.criterion("9c", "additivity on random product states")
def test_additivity(measured):
    rng = np.random.default_rng(92)
    worst = 0.0
    for j in range(40):
        d = 2 if j % 2 == 0 else 3
        a, b = random_state(d, 1 + j % 2, rng), random_state(d, 1 + j % 3, rng)
        worst = max(worst, abs(css_entropy_exact(a @ b) - css_entropy_exact(a) - css_entropy_exact(b)))
    measured("max_diff", f"{worst:.1e}")
    assert worst < 1e-9


@pytest.mark.criterion("9d", "Q_A idempotence and trace identities")
def test_projector_identities(measured):
    subs = [DefectSubspace.ones(2), DefectSubspace.ones(3)]
    subs += find_defect_subspaces(2, 6) + find_defect_subspaces(3, 6)[:6] + find_defect_subspaces(5, 5)[:2]
    worst = 0.0
    for A in subs:
        Q = css_projector(A).matrix
        worst = max(worst, np.abs(Q @ Q - Q).max(), np.abs(Q - Q.conj().T).max())
        worst = max(worst, abs(np.trace(Q) - A.d ** (A.k - 2 * A.dim)))
    measured("max_err", f"{worst:.1e}")
    assert worst < 1e-10


@pytest.mark.criterion("9e", "Weingarten times Gram is the identity")
def test_weingarten_identity(measured):
    worst = 0.0
    for d, D in ((2, 4), (3, 3), (5, 5)):
        G = gram_matrix(d * d, D).entries.astype(float)
        worst = max(worst, np.abs(weingarten_matrix(d, D).entries @ G - np.eye(len(G))).max())
    measured("max_err", f"{worst:.1e}")
    assert worst < 1e-10


# --- 10 -----------------------------------------------------------------------------


@pytest.mark.criterion("10", "N=1024 run completes; deltaY_3 tail slope within 10% of the N=64 fit")
def test_large_chain(measured):
    t0 = time.perf_counter()
    t, dY = tn_delta(3, 1024, 36, 25)
    measured("seconds", f"{time.perf_counter() - t0:.0f}")
    assert np.all(np.isfinite(dY))
    ref = decay_fit(3, 64, 36, 5, 15).alpha
    sel = t >= 10
    assert np.all(dY[sel] > 0)
    tail = fit_decay(zip(t[sel], dY[sel] / 1024))
    y = np.log(dY[sel] / 1024)
    r2 = 1 - np.sum((y - (np.log(tail.a) - tail.alpha * t[sel])) ** 2) / np.sum((y - y.mean()) ** 2)
    measured("tail_alpha", f"{tail.alpha:.4f}")
    measured("n64_alpha", f"{ref:.4f}")
    measured("R2", f"{r2:.6f}")
    assert r2 >= 0.999  # log-linear
    assert abs(tail.alpha / ref - 1) <= 0.10
