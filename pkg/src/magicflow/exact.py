"""Dense statevector simulation of brick-wall circuits and exact CSS entropies."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .defects import DefectSubspace, css_projector
from .qudit import (
    NumericalError,
    ResourceError,
    check_dim,
    clifford_generators,
    random_haar_unitary,
    replica_count,
)

MAX_AMPLITUDES = 2**28
MAX_REPLICA_AMPLITUDES = 2**24
IMAG_TOL = 1e-10


@dataclass
class StateVector:
    d: int
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != self.d**self.n:
            raise ValueError("amplitude count does not match d^N")

    def copy(self) -> "StateVector":
        return StateVector(self.d, self.n, self.amplitudes.copy())

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.d,) * self.n)

    def __matmul__(self, other: "StateVector") -> "StateVector":
        """Tensor product with ``self`` on the leading sites."""
        if other.d != self.d:
            raise ValueError("dimension mismatch")
        return StateVector(self.d, self.n + other.n, np.kron(self.amplitudes, other.amplitudes))


def init_zero_state(d: int, N: int) -> StateVector:
    d = check_dim(d)
    if d**N > MAX_AMPLITUDES:
        raise ResourceError(f"{d}^{N} amplitudes exceed the guard")
    amps = np.zeros(d**N, dtype=complex)
    amps[0] = 1.0
    return StateVector(d, N, amps)


def product_state(local_states: list, d: int) -> StateVector:
    amps = np.ones(1, dtype=complex)
    for s in local_states:
        amps = np.kron(amps, np.asarray(s, dtype=complex))
    return StateVector(d, len(local_states), amps / np.linalg.norm(amps))


def apply_single_site_gate(state: StateVector, U: np.ndarray, i: int) -> StateVector:
    d, n = state.d, state.n
    if not 0 <= i < n:
        raise IndexError(f"site {i} out of range for {n} sites")
    t = state.amplitudes.reshape(d**i, d, d ** (n - i - 1))
    state.amplitudes = np.einsum("ab,ibj->iaj", U, t).reshape(-1)
    return state


def apply_two_site_gate(state: StateVector, U: np.ndarray, i: int) -> StateVector:
    """Apply a ``d^2 x d^2`` gate to sites ``(i, i+1)`` (0-based), in place."""
    d, n = state.d, state.n
    if not 0 <= i < n - 1:
        raise IndexError(f"left site {i} out of range for {n} sites")
    t = state.amplitudes.reshape(d**i, d * d, d ** (n - i - 2))
    state.amplitudes = np.matmul(U, t).reshape(-1)
    return state


def layer_pairs(N: int, r: int) -> list[int]:
    """Left sites (0-based) of the gates in layer ``r`` (1-based)."""
    return list(range(0 if r % 2 == 1 else 1, N - 1, 2))


@dataclass(frozen=True)
class CircuitSpec:
    d: int
    N: int
    t: int
    seed: int = 0
    M: int = 1

    def __post_init__(self):
        check_dim(self.d)
        if self.N < 2 or self.N % 2:
            raise ValueError("N must be even and at least 2")
        if self.t < 0 or self.M < 1:
            raise ValueError("t must be >= 0 and M >= 1")


def brickwall_layers(state: StateVector, t: int, rng: np.random.Generator):
    """Yield the state after each of ``t`` Haar brick-wall layers (in place)."""
    dim = state.d**2
    for r in range(1, t + 1):
        for i in layer_pairs(state.n, r):
            apply_two_site_gate(state, random_haar_unitary(dim, rng), i)
        yield state


def run_brickwall(spec: CircuitSpec, rng: np.random.Generator | None = None) -> StateVector:
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    state = init_zero_state(spec.d, spec.N)
    for _ in brickwall_layers(state, spec.t, rng):
        pass
    return state


# --- CSS entropies -----------------------------------------------------------


def _shifted_index(digits: np.ndarray, b: np.ndarray, d: int) -> np.ndarray:
    """Flat index of ``n - b`` (digitwise mod d) for every ``n`` and each row of ``b``."""
    n = digits.shape[1]
    idx = np.zeros((len(b), len(digits)), dtype=np.int64)
    for j in range(n):
        idx *= d
        idx += (digits[None, :, j] - b[:, None, j]) % d
    return idx


def pauli_power_sum(psi: np.ndarray, d: int, n: int, power: int, chunk_elems: int = 2**21) -> complex:
    """``sum_{a,b} <Z_a X_b>^power`` over the full Pauli group.

    For every shift ``b`` the row ``f_b(m) = psi*(m) psi(m - b)`` is Fourier
    transformed over Z_d^N, which yields ``<Z_a X_b>`` for all ``a`` at once.
    """
    dim = d**n
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    digits = np.indices((d,) * n).reshape(n, -1).T
    chunk = max(1, chunk_elems // dim)
    conj = psi.conj()
    total = 0j
    for start in range(0, dim, chunk):
        b = digits[start : start + chunk]
        if d == 2:
            idx = np.arange(dim)[None, :] ^ np.arange(start, start + len(b))[:, None]
        else:
            idx = _shifted_index(digits, b, d)
        f = (conj[None, :] * psi[idx]).reshape((len(b),) + (d,) * n)
        spec = np.fft.ifftn(f, axes=tuple(range(1, n + 1))) * dim
        total += np.sum(spec**power)
    return complex(total)


def upsilon_fast(state: StateVector) -> complex:
    """``Upsilon_d = sum_P <P>^D / d^N`` for ``A = span{1_D}``."""
    D = replica_count(state.d)
    return pauli_power_sum(state.amplitudes, state.d, state.n, D) / state.d**state.n


def upsilon_generic(state: StateVector, A: DefectSubspace) -> complex:
    """``tr(r(A)^{(x)N} rho^{(x)k})`` by contracting ``k`` replicas of the state."""
    d, n, k = state.d, state.n, A.k
    if d != A.d:
        raise ValueError("state and subspace dimensions differ")
    if d ** (n * k) > MAX_REPLICA_AMPLITUDES:
        raise ResourceError(f"{k} replicas of {n} qudits exceed the guard")
    r = (A.size * css_projector(A).matrix).reshape((d,) * (2 * k))
    psi = state.tensor()
    rep = psi
    for _ in range(k - 1):
        rep = np.multiply.outer(rep, psi)
    out = rep
    for site in range(n):
        axes = [site + j * n for j in range(k)]
        out = np.tensordot(r, out, axes=(list(range(k, 2 * k)), axes))
        out = np.moveaxis(out, list(range(k)), axes)
    return complex(np.vdot(rep, out))


def _checked_upsilon(ups: complex) -> float:
    if abs(ups.imag) > IMAG_TOL:
        raise NumericalError(f"Upsilon has imaginary residue {ups.imag:.3e}")
    if ups.real <= 0:
        raise NumericalError(f"Upsilon is not positive: {ups.real:.3e}")
    return ups.real


def css_upsilon(state: StateVector, A: DefectSubspace | None = None, route: str = "auto") -> float:
    A = DefectSubspace.ones(state.d) if A is None else A
    if route == "auto":
        route = "fast" if A == DefectSubspace.ones(state.d) else "generic"
    if route == "fast":
        if A != DefectSubspace.ones(state.d):
            raise ValueError("fast route only handles A = span{1_D}")
        return _checked_upsilon(upsilon_fast(state))
    if route == "generic":
        return _checked_upsilon(upsilon_generic(state, A))
    raise ValueError(f"unknown route {route!r}")


def css_entropy_exact(state: StateVector, A: DefectSubspace | None = None, route: str = "auto") -> float:
    """``Y_A = -log Upsilon_A`` of a pure state."""
    return -math.log(css_upsilon(state, A, route))


# --- two-qubit Clifford group ------------------------------------------------


def _canonical_phase(U: np.ndarray) -> np.ndarray:
    flat = U.reshape(-1)
    j = int(np.flatnonzero(np.abs(flat) > 1e-9)[0])
    return U * (abs(flat[j]) / flat[j])


def _group_key(U: np.ndarray) -> bytes:
    V = np.rint(np.concatenate([U.real, U.imag]) * 1e6).astype(np.int64)
    return V.tobytes()


@lru_cache(maxsize=None)
def clifford2_group() -> np.ndarray:
    """All 11520 two-qubit Cliffords modulo phase, by generator closure.

    Each element is stored with its first nonzero entry real positive.
    """
    g = clifford_generators(2)
    I2 = np.eye(2)
    gens = [np.kron(g.H, I2), np.kron(I2, g.H), np.kron(g.P, I2), np.kron(I2, g.P), g.CADD]
    start = np.eye(4, dtype=complex)
    seen = {_group_key(start): start}
    frontier = [start]
    while frontier:
        nxt = []
        for U in frontier:
            for G in gens:
                V = _canonical_phase(G @ U)
                key = _group_key(V)
                if key not in seen:
                    seen[key] = V
                    nxt.append(V)
        frontier = nxt
    out = np.array(list(seen.values()))
    out.setflags(write=False)
    return out


def sample_uniform_clifford2(rng: np.random.Generator) -> np.ndarray:
    group = clifford2_group()
    return group[rng.integers(len(group))]


T_GATE = np.diag([1.0, np.exp(-1j * np.pi / 4)])


# --- ensembles ---------------------------------------------------------------


@dataclass
class EnsembleStats:
    """Per-depth quenched and annealed averages of ``Y``.

    ``upsilon`` holds the raw samples with shape ``(M, len(t))``.
    """

    t: np.ndarray
    upsilon: np.ndarray
    seed: int | None = None
    quenched_mean: np.ndarray = field(init=False)
    quenched_err: np.ndarray = field(init=False)
    annealed: np.ndarray = field(init=False)
    annealed_err: np.ndarray = field(init=False)

    def __post_init__(self):
        ups = np.asarray(self.upsilon, dtype=float)
        if ups.ndim != 2:
            raise ValueError("upsilon must be (M, n_depths)")
        self.upsilon = ups
        self.t = np.asarray(self.t)
        M = ups.shape[0]
        y = -np.log(ups) + 0.0  # no negative zeros
        self.quenched_mean = y.mean(0)
        mean_u = ups.mean(0)
        self.annealed = -np.log(mean_u) + 0.0
        if M < 2:
            self.quenched_err = np.full(len(self.t), np.nan)
            self.annealed_err = np.full(len(self.t), np.nan)
            return
        # jackknife over realizations
        loo_y = (y.sum(0) - y) / (M - 1)
        loo_a = -np.log((ups.sum(0) - ups) / (M - 1))
        self.quenched_err = np.sqrt((M - 1) / M * ((loo_y - loo_y.mean(0)) ** 2).sum(0))
        self.annealed_err = np.sqrt((M - 1) / M * ((loo_a - loo_a.mean(0)) ** 2).sum(0))

    @property
    def samples(self) -> int:
        return self.upsilon.shape[0]

    @property
    def mean_upsilon(self) -> np.ndarray:
        return self.upsilon.mean(0)

    @property
    def upsilon_err(self) -> np.ndarray:
        return self.upsilon.std(0, ddof=1) / np.sqrt(self.samples)

    def rows(self):
        for j, t in enumerate(self.t):
            yield {
                "t": int(t),
                "quenched_mean": float(self.quenched_mean[j]),
                "quenched_err": float(self.quenched_err[j]),
                "annealed": float(self.annealed[j]),
                "annealed_err": float(self.annealed_err[j]),
                "M": self.samples,
                "seed": self.seed,
            }


def realization_seeds(seed: int, M: int) -> list[np.random.SeedSequence]:
    """Independent per-realization streams, identical for any worker count."""
    return np.random.SeedSequence(seed).spawn(M)


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (8 * threads))))


def brickwall_upsilon(d: int, N: int, depths, seed, A: DefectSubspace | None = None) -> np.ndarray:
    """``Upsilon_A`` of one Haar brick-wall realization at each of ``depths``.

    Unlike :class:`CircuitSpec` this accepts odd ``N``; the last site then
    idles in odd layers.
    """
    A = DefectSubspace.ones(d) if A is None else A
    rng = np.random.default_rng(seed)
    state = init_zero_state(d, N)
    wanted = set(depths)
    out = []
    if 0 in wanted:
        out.append(css_upsilon(state, A))
    for r, st in enumerate(brickwall_layers(state, max(depths), rng), start=1):
        if r in wanted:
            out.append(css_upsilon(st, A))
    return np.array(out)


def _brickwall_realization(args) -> np.ndarray:
    return brickwall_upsilon(*args)


def ensemble_averages(
    spec: CircuitSpec,
    A: DefectSubspace | None = None,
    depths=None,
    seeds=None,
    threads: int = 1,
) -> EnsembleStats:
    """Quenched and annealed CSS entropies over ``spec.M`` Haar brick walls.

    ``depths`` defaults to ``0..t``. ``seeds`` overrides the per-realization
    streams spawned from ``spec.seed``.
    """
    A = DefectSubspace.ones(spec.d) if A is None else A
    depths = sorted(range(spec.t + 1) if depths is None else depths)
    seeds = realization_seeds(spec.seed, spec.M) if seeds is None else seeds
    jobs = [(spec.d, spec.N, depths, s, A) for s in seeds]
    ups = np.array(_map(_brickwall_realization, jobs, threads))
    return EnsembleStats(np.array(depths), ups, spec.seed)


# --- T-doped Clifford circuits -------------------------------------------------

THETA_T = np.pi / 8  # T = e^{-i pi/8} exp(i pi/8 Z)


def _pauli_label_matrix(label: int) -> np.ndarray:
    """Hermitian two-qubit Pauli for ``label = xa + 2 xb + 4 za + 8 zb``."""
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Z = np.diag([1.0 + 0j, -1.0])
    xa, xb, za, zb = (label >> 0) & 1, (label >> 1) & 1, (label >> 2) & 1, (label >> 3) & 1
    A = np.linalg.matrix_power(X, xa) @ np.linalg.matrix_power(Z, za)
    B = np.linalg.matrix_power(X, xb) @ np.linalg.matrix_power(Z, zb)
    return 1j ** (xa * za + xb * zb) * np.kron(A, B)


@lru_cache(maxsize=None)
def clifford2_conjugation_table() -> tuple[np.ndarray, np.ndarray]:
    """``(labels, signs)`` with ``C_g^dag sigma_l C_g = signs[g, l] sigma_{labels[g, l]}``."""
    group = clifford2_group()
    basis = np.array([_pauli_label_matrix(l) for l in range(16)])
    # coefficient of sigma_m in C^dag sigma_l C is tr(sigma_m C^dag sigma_l C)/4
    conj = np.einsum("gba,lbc,gcd->glad", group.conj(), basis, group)
    coef = np.einsum("mda,glad->glm", basis, conj) / 4
    labels = np.abs(coef).argmax(-1)
    signs = np.take_along_axis(coef, labels[..., None], -1)[..., 0]
    if not np.allclose(np.abs(coef).sum(-1), 1.0) or not np.allclose(signs.imag, 0):
        raise NumericalError("Clifford conjugation table is not a signed permutation")
    labels = labels.astype(np.int64)
    signs = np.rint(signs.real).astype(np.int64)
    labels.setflags(write=False)
    signs.setflags(write=False)
    return labels, signs


@dataclass(frozen=True)
class DopedCliffordSpec:
    N: int
    t: int
    t_per_layer: int = 1
    seed: int = 0
    M: int = 1

    def __post_init__(self):
        if self.N < 2 or self.N % 2:
            raise ValueError("N must be even and at least 2")
        if self.N > 14:
            raise ResourceError("doped Clifford runs are limited to N <= 14")
        if self.t < 0 or self.t_per_layer < 0 or self.M < 1:
            raise ValueError("t, t_per_layer must be >= 0 and M >= 1")

    @property
    def d(self) -> int:
        return 2


def draw_doped_circuit(spec: DopedCliffordSpec, rng: np.random.Generator):
    """Per layer: list of ``(left_site, clifford_index)`` and the T-gate sites."""
    n_group = len(clifford2_group())
    layers = []
    for r in range(1, spec.t + 1):
        gates = [(i, int(rng.integers(n_group))) for i in layer_pairs(spec.N, r)]
        tsites = [int(rng.integers(spec.N)) for _ in range(spec.t_per_layer)]
        layers.append((gates, tsites))
    return layers


def _doped_statevector(spec: DopedCliffordSpec, layers) -> np.ndarray:
    group = clifford2_group()
    state = init_zero_state(2, spec.N)
    out = [css_upsilon(state)]
    for gates, tsites in layers:
        for i, g in gates:
            apply_two_site_gate(state, group[g], i)
        for s in tsites:
            apply_single_site_gate(state, T_GATE, s)
        out.append(css_upsilon(state))
    return np.array(out)


def _conjugate_pauli(x: int, z: int, sign: int, gates, labels, signs) -> tuple[int, int, int]:
    """``C^dag sigma C`` for one brick-wall layer ``C``; site ``i`` is bit ``i``."""
    for i, g in gates:
        a, b = i, i + 1
        l = ((x >> a) & 1) | ((x >> b) & 1) << 1 | ((z >> a) & 1) << 2 | ((z >> b) & 1) << 3
        m = int(labels[g, l])
        sign *= int(signs[g, l])
        x = (x & ~((1 << a) | (1 << b))) | (m & 1) << a | ((m >> 1) & 1) << b
        z = (z & ~((1 << a) | (1 << b))) | ((m >> 2) & 1) << a | ((m >> 3) & 1) << b
    return x, z, sign


def _rotation_paulis(spec: DopedCliffordSpec, layers) -> list[list[tuple[int, int, int]]]:
    """Heisenberg-picture Paulis ``V_j^dag Z_s V_j`` of every T gate, by layer."""
    labels, signs = clifford2_conjugation_table()
    out = []
    for j, (_, tsites) in enumerate(layers):
        row = []
        for s in tsites:
            x, z, sign = 0, 1 << s, 1
            for gates, _ in reversed(layers[: j + 1]):
                x, z, sign = _conjugate_pauli(x, z, sign, gates, labels, signs)
            row.append((x, z, sign))
        out.append(row)
    return out


def _doped_pauli(spec: DopedCliffordSpec, layers) -> np.ndarray:
    from ._kernels import pauli_fourth_moment, pauli_rotate

    N = spec.N
    c = np.zeros(4**N)
    c[: 2**N] = 1.0  # |0...0><0...0| has unit weight on every Z string
    moment = float(2**N)
    out = [moment / 2**N]
    for row in _rotation_paulis(spec, layers):
        for x, z, sign in row:
            moment += pauli_rotate(c, N, x, z, sign, np.cos(2 * THETA_T), np.sin(2 * THETA_T))
        if len(out) % 16 == 0:
            moment = pauli_fourth_moment(c)  # drop accumulated rounding
        out.append(moment / 2**N)
    return np.array(out)


def _doped_realization(args) -> np.ndarray:
    spec, method, seed = args
    layers = draw_doped_circuit(spec, np.random.default_rng(seed))
    if method == "statevector":
        return _doped_statevector(spec, layers)
    if method == "pauli":
        return _doped_pauli(spec, layers)
    raise ValueError(f"unknown method {method!r}")


def run_doped_clifford(
    spec: DopedCliffordSpec,
    method: str = "pauli",
    seeds=None,
    threads: int = 1,
) -> EnsembleStats:
    """``Y_2`` at depths ``0..t`` over ``spec.M`` T-doped Clifford brick walls.

    ``method="pauli"`` evolves the Pauli spectrum of ``prod_j exp(i pi/8 P_j)|0>``,
    where ``P_j`` is the j-th T gate pulled back through the preceding
    Cliffords. This leaves ``Upsilon_2`` unchanged and costs ``O(4^N)`` per T
    gate. ``method="statevector"`` simulates the circuit directly.
    """
    seeds = realization_seeds(spec.seed, spec.M) if seeds is None else seeds
    ups = np.array(_map(_doped_realization, [(spec, method, s) for s in seeds], threads))
    return EnsembleStats(np.arange(spec.t + 1), ups, spec.seed)
