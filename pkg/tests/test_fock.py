import numpy as np
import pytest

from nclsim import fock
from nclsim.errors import (
    FockIndexError,
    InvalidDimensionError,
    InvalidStateError,
    TruncationLeakageError,
)


def test_annihilation_dim2():
    assert np.array_equal(fock.annihilation(2), np.array([[0, 1], [0, 0]], dtype=complex))


def test_annihilation_entries():
    a = fock.annihilation(3)
    assert a[1, 2] == pytest.approx(np.sqrt(2))
    assert np.count_nonzero(a) == 2


def test_number_operator_eigenvalue():
    n = fock.creation(8) @ fock.annihilation(8)
    v = fock.fock_state(5, 8)
    assert np.allclose(n @ v, 5.0 * v)


@pytest.mark.parametrize("dim", [0, 1, -3])
def test_invalid_dimension(dim):
    with pytest.raises(InvalidDimensionError):
        fock.annihilation(dim)


def test_creation_is_exact_adjoint():
    a = fock.annihilation(17)
    assert np.array_equal(fock.creation(17), a.conj().T)


def test_commutator_on_subspace():
    dim = 12
    a = fock.annihilation(dim)
    comm = a @ fock.creation(dim) - fock.creation(dim) @ a
    dev = np.abs(comm - np.eye(dim))[: dim - 1, : dim - 1].max()
    assert dev < 1e-12


def test_fock_state_basics():
    assert np.array_equal(fock.fock_state(2, 5), np.eye(5, dtype=complex)[2])
    assert np.array_equal(fock.fock_state(0, 2), np.eye(2, dtype=complex)[0])
    assert np.vdot(fock.fock_state(2, 5), fock.fock_state(2, 5)) == pytest.approx(1.0)
    with pytest.raises(FockIndexError):
        fock.fock_state(5, 5)


def test_coherent_vacuum():
    assert np.array_equal(fock.coherent_state(0.0, 6), fock.fock_state(0, 6))


def test_coherent_moments():
    v = fock.coherent_state(2.0, 30)
    p = np.abs(v) ** 2
    n = np.arange(30)
    mean = (n * p).sum()
    second = (n * n * p).sum()
    assert mean == pytest.approx(4.0, abs=1e-8)
    q = (second - mean**2) / mean - 1.0
    assert q == pytest.approx(0.0, abs=1e-8)


def test_coherent_truncation_guard():
    with pytest.raises(TruncationLeakageError) as err:
        fock.coherent_state(5.0, 60)
    assert err.value.min_dim is not None and err.value.min_dim > 60
    # guard names a dim that actually passes
    fock.coherent_state(5.0, err.value.min_dim)
    # and the guard can be disabled explicitly
    v = fock.coherent_state(5.0, 60, guard=False)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 1.5, 3.0, -2.0, 1.0 + 1.0j])
def test_coherent_approximate_eigenvector(alpha):
    # a bit below the guard threshold: the 1e-6 eigen-residual needs the
    # cutoff amplitude itself (not just the tail weight) to be ~1e-7
    dim = fock.coherent_min_dim(alpha, threshold=1e-14)
    v = fock.coherent_state(alpha, dim)
    a = fock.annihilation(dim)
    assert np.linalg.norm(a @ v - alpha * v) <= 1e-6


def test_diagonal_function_operator_values():
    d = fock.diagonal_function_operator(lambda x: x - 1, 3)
    assert np.allclose(np.diag(d), [-1, 0, 1])
    d2 = fock.diagonal_function_operator(lambda x: (x - 1) ** 2, 3)
    assert np.allclose(np.diag(d2), [1, 0, 1])


def test_diagonal_function_kills_dark_state():
    dim = 5
    op = fock.annihilation(dim) @ fock.diagonal_function_operator(lambda x: x - 1, dim)
    assert np.linalg.norm(op @ fock.fock_state(1, dim)) == 0.0
    assert np.allclose(op @ fock.fock_state(2, dim), np.sqrt(2) * fock.fock_state(1, dim))


def test_diagonal_function_commutes_with_number():
    dim = 9
    d = fock.diagonal_function_operator(lambda x: (x - 2.5) ** 3, dim)
    n = fock.number_operator(dim)
    assert np.array_equal(d @ n, n @ d)


def test_normal_order_norm_vacuum_k2():
    assert fock.normal_order_norm(fock.fock_state(0, 5), 2) == pytest.approx(2.0)


def test_normal_order_norm_one_photon_k1():
    assert fock.normal_order_norm(fock.fock_state(1, 4), 1) == pytest.approx(2.0)


def test_normal_order_norm_coherent():
    # brute-force oracle: <y| a^k (a†)^k |y> = sum_n p_n (n+1)(n+2) for k=2
    dim = 40
    v = fock.coherent_state(2.0, dim)
    p = np.abs(v) ** 2
    n = np.arange(dim)
    oracle = float((p * (n + 1) * (n + 2)).sum())
    val = fock.normal_order_norm(v, 2)
    assert val == pytest.approx(oracle, abs=1e-10)
    assert val == pytest.approx(34.0, abs=1e-8)  # |α|⁴ + 4|α|² + 2 at α=2


def test_normal_order_norm_spill_guard():
    with pytest.raises(TruncationLeakageError):
        fock.normal_order_norm(fock.fock_state(1, 2), 1)


def test_thermal_density():
    rho = fock.thermal_density(0.5, 40)
    p = np.real(np.diag(rho))
    assert (np.arange(40) * p).sum() == pytest.approx(0.5, abs=1e-10)
    ratio = p[1:6] / p[:5]
    assert np.allclose(ratio, 0.5 / 1.5, atol=1e-12)
    with pytest.raises(TruncationLeakageError):
        fock.thermal_density(5.0, 20)


def test_state_checks():
    with pytest.raises(InvalidStateError):
        fock.check_state_vector(np.array([1.0, 1.0]))
    with pytest.raises(InvalidStateError):
        fock.check_density_matrix(np.array([[0.5, 0.4], [0.1, 0.5]]))  # not Hermitian
    with pytest.raises(InvalidStateError):
        fock.check_density_matrix(np.diag([0.7, 0.7]).astype(complex))  # trace 1.4
    with pytest.raises(InvalidStateError):
        fock.check_density_matrix(np.diag([1.2, -0.2]).astype(complex))  # negative
    rho = fock.pure_density(fock.coherent_state(1.0, 16))
    assert fock.check_density_matrix(rho) is rho
