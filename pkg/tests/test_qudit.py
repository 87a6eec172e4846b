import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magicflow.qudit import (
    FieldScalar,
    PauliString,
    ResourceError,
    clifford_generators,
    is_unitary,
    omega,
    pauli_expectation,
    pauli_matrix,
    pauli_string_matrix,
    random_haar_unitary,
)

import oracles


def test_pauli_matrix_examples():
    np.testing.assert_array_equal(pauli_matrix(2, 0, 0), np.eye(2))
    np.testing.assert_allclose(pauli_matrix(2, 1, 0), np.diag([1, -1]), atol=1e-15)
    X3 = pauli_matrix(3, 0, 1)
    np.testing.assert_array_equal(X3 @ np.eye(3)[:, 0], np.eye(3)[:, 1])
    np.testing.assert_allclose(np.linalg.matrix_power(X3, 3), np.eye(3), atol=1e-15)


def test_non_prime_rejected():
    with pytest.raises(ValueError):
        pauli_matrix(4, 1, 0)
    with pytest.raises(ValueError):
        FieldScalar(1, 6)


def test_field_arithmetic():
    a, b = FieldScalar(3, 7), FieldScalar(5, 7)
    assert int(a + b) == 1 and int(a * b) == 1 and int(a - b) == 5
    assert int(a * a.inverse()) == 1


@pytest.mark.parametrize("d", [2, 3, 5])
def test_pauli_unitary_and_order(d):
    D = 2 * d if d == 2 else d
    for q, p in itertools.product(range(d), repeat=2):
        P = pauli_matrix(d, q, p)
        assert is_unitary(P)
        Pd = np.linalg.matrix_power(P, d)
        phase = Pd[0, 0]
        np.testing.assert_allclose(Pd, phase * np.eye(d), atol=1e-12)
        # the phase is a D-th root of unity
        assert abs(phase**D - 1) < 1e-12


def test_pauli_matches_oracle():
    for d in (2, 3):
        for q, p in itertools.product(range(d), repeat=2):
            np.testing.assert_allclose(pauli_matrix(d, q, p), oracles.weyl(d, [q], [p]), atol=1e-14)


def test_pauli_string_examples():
    np.testing.assert_array_equal(pauli_string_matrix(PauliString.identity(3)), np.eye(8))
    ZX = np.kron(np.diag([1, -1]), np.array([[0, 1], [1, 0]]))
    np.testing.assert_allclose(pauli_string_matrix(PauliString((1, 0), (0, 1))), ZX, atol=1e-15)
    with pytest.raises(ResourceError):
        pauli_string_matrix(PauliString.identity(25))


@pytest.mark.parametrize("d", [2, 3])
def test_pauli_product_rule(d):
    """(Z_q X_p)(Z_q' X_p') = w^{-q'.p} Z_{q+q'} X_{p+p'}."""
    w = omega(d)
    vecs = list(itertools.product(range(d), repeat=2))
    for q, p, q2, p2 in itertools.product(vecs, repeat=4):
        lhs = pauli_string_matrix(PauliString(q, p, d)) @ pauli_string_matrix(PauliString(q2, p2, d))
        s = PauliString(np.add(q, q2), np.add(p, p2), d)
        phase = w ** (-int(np.dot(q2, p)) % d)
        np.testing.assert_allclose(lhs, phase * pauli_string_matrix(s), atol=1e-12)


def test_expectation_examples():
    psi = np.zeros(8, dtype=complex)
    psi[0] = 1
    assert pauli_expectation(psi, PauliString((1, 1, 1), (0, 0, 0))) == pytest.approx(1)
    assert pauli_expectation(psi, PauliString((1, 0, 1), (0, 1, 0))) == pytest.approx(0)
    t = np.array([1, np.exp(1j * np.pi / 4)]) / np.sqrt(2)
    # Bloch vector of T|+> is (1/sqrt2, 1/sqrt2, 0)
    X = pauli_expectation(t, PauliString((0,), (1,)))
    Z = pauli_expectation(t, PauliString((1,), (0,)))
    Y = np.vdot(t, np.array([[0, -1j], [1j, 0]]) @ t)
    assert X == pytest.approx(1 / np.sqrt(2)) and Y == pytest.approx(1 / np.sqrt(2))
    assert abs(Z) < 1e-15
    with pytest.raises(ValueError):
        pauli_expectation(2 * psi, PauliString((0, 0, 0), (0, 0, 0)))
    with pytest.raises(ValueError):
        pauli_expectation(psi, PauliString((0, 0), (0, 0)))


@settings(max_examples=40, deadline=None)
@given(
    d=st.sampled_from([2, 3]),
    n=st.integers(1, 3),
    seed=st.integers(0, 2**32 - 1),
    data=st.data(),
)
def test_expectation_matches_trace(d, n, seed, data):
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal(d**n) + 1j * rng.standard_normal(d**n)
    psi /= np.linalg.norm(psi)
    q = data.draw(st.lists(st.integers(0, d - 1), min_size=n, max_size=n))
    p = data.draw(st.lists(st.integers(0, d - 1), min_size=n, max_size=n))
    s = PauliString(q, p, d)
    rho = np.outer(psi, psi.conj())
    assert abs(pauli_expectation(psi, s) - np.trace(rho @ oracles.weyl(d, q, p))) < 1e-10


def test_clifford_generator_examples():
    g2 = clifford_generators(2)
    np.testing.assert_allclose(g2.H, np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(g2.P, np.diag([1, 1j]))
    g3 = clifford_generators(3)
    w = omega(3)
    np.testing.assert_allclose(np.diag(g3.P), [1, 1, w], atol=1e-15)


def _is_pauli_up_to_phase(M, d, n):
    for q in itertools.product(range(d), repeat=n):
        for p in itertools.product(range(d), repeat=n):
            P = pauli_string_matrix(PauliString(q, p, d))
            c = np.trace(P.conj().T @ M) / d**n
            if abs(abs(c) - 1) < 1e-10:
                return True
    return False


@pytest.mark.parametrize("d", [2, 3])
def test_generators_are_clifford(d):
    g = clifford_generators(d)
    for U in (g.H, g.P, g.CADD):
        assert is_unitary(U)
    one = [(g.H, 1), (g.P, 1), (g.CADD, 2)]
    for U, n in one:
        for q in itertools.product(range(d), repeat=n):
            for p in itertools.product(range(d), repeat=n):
                P = pauli_string_matrix(PauliString(q, p, d))
                assert _is_pauli_up_to_phase(U @ P @ U.conj().T, d, n)


def test_haar_unitary_basic():
    rng = np.random.default_rng(0)
    u1 = random_haar_unitary(1, rng)
    assert abs(abs(u1[0, 0]) - 1) < 1e-14
    assert is_unitary(random_haar_unitary(4, rng))
    a = random_haar_unitary(4, np.random.default_rng(7))
    b = random_haar_unitary(4, np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)


def test_haar_first_moments():
    rng = np.random.default_rng(123)
    dim, n = 4, 100_000
    u00 = np.array([random_haar_unitary(dim, rng)[0, 0] for _ in range(n)])
    for part in (u00.real, u00.imag):
        assert abs(part.mean()) < 4 * part.std() / np.sqrt(n)
    p = np.abs(u00) ** 2
    assert abs(p.mean() - 1 / dim) < 4 * p.std() / np.sqrt(n)
