import numpy as np
import pytest

from floqryd.linalg import (
    NotHermitianError,
    NotUnitaryError,
    hermitian_eig,
    kron,
    normalize_state,
    unitary_eig,
)

I2 = np.eye(2)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
PE = np.diag([0.0, 1.0]).astype(complex)


def random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


def test_kron_identity():
    assert np.array_equal(kron(I2, I2), np.eye(4))


def test_kron_sign_algebra():
    zz = kron(SZ, SZ)
    # |01> is basis index 1 (left factor most significant)
    assert zz[1, 1] == -1


def test_kron_projector():
    assert np.array_equal(kron(PE, PE), np.diag([0.0, 0.0, 0.0, 1.0]))


def test_kron_associative():
    # exact equality holds when the entry products are exactly representable
    rng = np.random.default_rng(3)
    a, b, c = (rng.integers(-8, 8, size=(2, 2)).astype(float) for _ in range(3))
    assert np.array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))
    x, y, z = (rng.normal(size=(2, 2)) for _ in range(3))
    assert np.allclose(kron(kron(x, y), z), kron(x, kron(y, z)), rtol=1e-15, atol=0)


def test_kron_rejects_nonfinite():
    bad = np.array([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(ValueError):
        kron(bad, I2)


def test_hermitian_diagonal():
    w, v = hermitian_eig(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(w, [1.0, 2.0, 3.0])


def test_hermitian_pauli_x():
    w, v = hermitian_eig(SX)
    assert np.allclose(w, [-1.0, 1.0], atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_hermitian_reconstruction(seed):
    m = random_hermitian(4, seed)
    w, v = hermitian_eig(m)
    assert np.abs(v @ np.diag(w) @ v.conj().T - m).max() < 1e-8
    assert np.abs(v.conj().T @ v - np.eye(4)).max() < 1e-8
    assert np.all(np.diff(w) >= -1e-12)


def test_hermitian_eig_dim16():
    m = random_hermitian(16, 7)
    w, v = hermitian_eig(m)
    assert np.abs(v @ np.diag(w) @ v.conj().T - m).max() < 1e-8


def test_not_hermitian_raises():
    m = np.array([[0.0, 1.0], [0.5, 0.0]])
    with pytest.raises(NotHermitianError):
        hermitian_eig(m)


def test_unitary_identity():
    phases, _ = unitary_eig(np.eye(4, dtype=complex))
    assert np.allclose(phases, 0.0, atol=1e-12)


def test_unitary_diag_phase():
    phases, _ = unitary_eig(np.diag([1.0, 1j]))
    assert np.allclose(sorted(phases), [0.0, np.pi / 2], atol=1e-12)


def test_unitary_from_generator():
    # exp(iB) for Hermitian B: phases must match B's spectrum mod 2pi.
    # The oracle builds the unitary by an independent eigendecomposition.
    b = random_hermitian(4, 11)
    wb, vb = np.linalg.eigh(b)
    u = vb @ np.diag(np.exp(1j * wb)) @ vb.conj().T
    phases, v = unitary_eig(u)
    expected = np.sort(np.angle(np.exp(1j * wb)))
    assert np.allclose(np.sort(phases), expected, atol=1e-7)
    assert np.abs(u @ v - v @ np.diag(np.exp(1j * phases))).max() < 1e-7


def test_unitary_degenerate_subspace():
    # doubly degenerate real part: the subspace must be resolved against the
    # imaginary part so that eigenvectors diagonalise u exactly
    u = np.diag([np.exp(0.3j), np.exp(-0.3j), np.exp(0.3j), 1.0])
    rng = np.random.default_rng(5)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    u = q @ u @ q.conj().T
    phases, v = unitary_eig(u)
    assert np.abs(u @ v - v @ np.diag(np.exp(1j * phases))).max() < 1e-7


def test_not_unitary_raises():
    with pytest.raises(NotUnitaryError):
        unitary_eig(np.diag([1.0, 2.0]))


def test_normalize_state():
    v = normalize_state([3.0, 4.0])
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        normalize_state([0.0, 0.0])
