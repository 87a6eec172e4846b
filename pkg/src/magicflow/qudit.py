"""Qudit algebra: arithmetic over Z_d, generalized Pauli operators, Clifford
generators and Haar-random unitaries.

Conventions
-----------
``X|m> = |m+1 mod d>`` and ``Z|m> = w^m |m>`` with ``w = exp(2 pi i / d)``.
A Pauli string is ``Z_q X_p``: on every site the ``Z`` factor sits to the
left of the ``X`` factor and no extra global phase is attached.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SUPPORTED_DIMS = (2, 3, 5, 7)
MAX_MATRIX_QUBITS = 24


class ResourceError(RuntimeError):
    """Raised when a requested object would exceed a hard size guard."""


class NumericalError(RuntimeError):
    """Raised when a computation produces values outside numerical tolerance."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, int(n**0.5) + 1))


def check_dim(d: int) -> int:
    """Validate a qudit dimension and return it as ``int``."""
    d = int(d)
    if not _is_prime(d):
        raise ValueError(f"qudit dimension must be prime, got {d}")
    if d not in SUPPORTED_DIMS:
        raise ValueError(f"qudit dimension {d} not in supported set {SUPPORTED_DIMS}")
    return d


def replica_count(d: int) -> int:
    """``D = 2d`` for even ``d`` and ``D = d`` for odd ``d``."""
    return 2 * d if d % 2 == 0 else d


def omega(d: int) -> complex:
    return np.exp(2j * np.pi / d)


@dataclass(frozen=True)
class FieldScalar:
    """Element of the prime field Z_d."""

    value: int
    d: int

    def __post_init__(self):
        if not _is_prime(self.d):
            raise ValueError(f"modulus must be prime, got {self.d}")
        object.__setattr__(self, "value", int(self.value) % self.d)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldScalar):
            if other.d != self.d:
                raise ValueError("mismatched moduli")
            return other.value
        return int(other)

    def __add__(self, other):
        return FieldScalar(self.value + self._coerce(other), self.d)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldScalar(self.value - self._coerce(other), self.d)

    def __neg__(self):
        return FieldScalar(-self.value, self.d)

    def __mul__(self, other):
        return FieldScalar(self.value * self._coerce(other), self.d)

    __rmul__ = __mul__

    def inverse(self) -> "FieldScalar":
        if self.value == 0:
            raise ZeroDivisionError("0 has no inverse in Z_d")
        return FieldScalar(pow(self.value, -1, self.d), self.d)

    def __int__(self):
        return self.value


@dataclass(frozen=True)
class PauliString:
    """``Z_q X_p`` on ``N`` qudits of dimension ``d``."""

    q: tuple
    p: tuple
    d: int = 2
    n: int = field(init=False)

    def __post_init__(self):
        q = tuple(int(v) % self.d for v in self.q)
        p = tuple(int(v) % self.d for v in self.p)
        if len(q) != len(p):
            raise ValueError("q and p must have the same length")
        check_dim(self.d)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "n", len(q))

    @classmethod
    def identity(cls, n: int, d: int = 2) -> "PauliString":
        return cls((0,) * n, (0,) * n, d)

    def is_identity(self) -> bool:
        return not any(self.q) and not any(self.p)


def pauli_matrix(d: int, q: int, p: int) -> np.ndarray:
    """Single-qudit ``Z^q X^p``."""
    d = check_dim(d)
    q, p = int(q) % d, int(p) % d
    m = np.arange(d)
    out = np.zeros((d, d), dtype=complex)
    # Z^q X^p |m> = w^{q (m+p)} |m+p>
    out[(m + p) % d, m] = omega(d) ** (q * ((m + p) % d))
    return out


def pauli_string_matrix(s: PauliString) -> np.ndarray:
    if s.n * np.log2(s.d) > MAX_MATRIX_QUBITS:
        raise ResourceError(f"refusing to build a {s.d}^{s.n} dimensional matrix")
    out = np.ones((1, 1), dtype=complex)
    for qi, pi in zip(s.q, s.p):
        out = np.kron(out, pauli_matrix(s.d, qi, pi))
    return out


def apply_pauli(psi: np.ndarray, s: PauliString) -> np.ndarray:
    """Return ``Z_q X_p |psi>`` using per-site shifts and phases."""
    d, n = s.d, s.n
    if psi.size != d**n:
        raise ValueError(f"state of size {psi.size} does not match {n} qudits of dim {d}")
    t = psi.reshape((d,) * n)
    shifts = tuple(s.p)
    if any(shifts):
        t = np.roll(t, shifts, axis=tuple(range(n)))
    if any(s.q):
        w = omega(d)
        m = np.arange(d)
        for site, qi in enumerate(s.q):
            if qi:
                shape = [1] * n
                shape[site] = d
                t = t * (w ** (qi * m)).reshape(shape)
    return t.reshape(-1)


def pauli_expectation(psi: np.ndarray, s: PauliString) -> complex:
    """``<psi| Z_q X_p |psi>`` without materializing the operator."""
    psi = np.asarray(psi).reshape(-1)
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise ValueError("state is not normalized")
    return complex(np.vdot(psi, apply_pauli(psi, s)))


@dataclass(frozen=True)
class CliffordGenerators:
    H: np.ndarray
    P: np.ndarray
    CADD: np.ndarray


def clifford_generators(d: int) -> CliffordGenerators:
    """Hadamard, phase and CADD gates generating the Clifford group."""
    d = check_dim(d)
    w = omega(d)
    m = np.arange(d)
    H = w ** np.outer(m, m) / np.sqrt(d)
    if d == 2:
        P = np.diag([1.0, 1.0j])
    else:
        half = pow(2, -1, d)
        P = np.diag(w ** ((m * (m - 1) * half) % d))
    cadd = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            cadd[a * d + (a + b) % d, a * d + b] = 1.0
    return CliffordGenerators(H=H.astype(complex), P=P.astype(complex), CADD=cadd)


def random_haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``dim x dim`` unitary.

    QR of a complex Ginibre matrix, with the phases of ``diag(R)`` moved
    into ``Q`` so that the result is exactly Haar distributed.
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol)
