"""Truncated Fock-space states and operators.

Conventions shared by every module in the package:

* basis index = photon number, ascending, ``0 .. dim-1`` (cutoff ``dim-1``)
* operators are dense complex ``(dim, dim)`` ndarrays
* state vectors are complex ``(dim,)`` ndarrays with unit L2 norm
* density matrices are Hermitian, unit-trace, positive-semidefinite
  (to tolerance) ndarrays

Truncation guards are on by default: constructors that would silently leak
weight past the cutoff raise :class:`~nclsim.errors.TruncationLeakageError`
instead.  Silent leakage is the dominant failure mode of Fock-space
simulation, so disabling a guard is an explicit per-call decision.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import poisson

from .errors import (
    FockIndexError,
    InvalidDimensionError,
    InvalidStateError,
    TruncationLeakageError,
)

COHERENT_TAIL_THRESHOLD = 1e-10
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
PSD_TOL = 1e-8


def _check_dim(dim: int) -> int:
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"Fock dimension must be an integer >= 2, got {dim}")
    return int(dim)


def annihilation(dim: int) -> np.ndarray:
    """Annihilation operator a with a|n> = sqrt(n)|n-1>."""
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(dim: int) -> np.ndarray:
    """Creation operator a† = annihilation(dim)†, exactly."""
    return annihilation(dim).conj().T


def number_operator(dim: int) -> np.ndarray:
    """Photon-number operator a†a = diag(0, 1, ..., dim-1)."""
    dim = _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def fock_state(n: int, dim: int) -> np.ndarray:
    """Number state |n> as a unit vector."""
    dim = _check_dim(dim)
    if int(n) != n or n < 0 or n >= dim:
        raise FockIndexError(f"photon number {n} outside basis 0..{dim - 1}")
    vec = np.zeros(dim, dtype=complex)
    vec[int(n)] = 1.0
    return vec


def coherent_min_dim(alpha: complex, threshold: float = COHERENT_TAIL_THRESHOLD) -> int:
    """Smallest dim whose discarded Poisson tail weight is below threshold."""
    mu = abs(alpha) ** 2
    if mu == 0.0:
        return 2
    # isf gives a good starting point; walk to the exact integer boundary
    d = max(2, int(poisson.isf(threshold, mu)) - 2)
    while poisson.sf(d - 1, mu) >= threshold:
        d += 1
    return d


def coherent_state(alpha: complex, dim: int, guard: bool = True) -> np.ndarray:
    """Coherent state |α> truncated to dim levels and renormalized.

    Amplitudes are c_n ∝ α^n/sqrt(n!).  With the guard enabled the discarded
    tail weight of the untruncated Poisson photon-number distribution must be
    below ``COHERENT_TAIL_THRESHOLD``; otherwise the call fails and names the
    minimal acceptable dimension.
    """
    dim = _check_dim(dim)
    mu = abs(alpha) ** 2
    if guard:
        tail = float(poisson.sf(dim - 1, mu))
        if tail >= COHERENT_TAIL_THRESHOLD:
            need = coherent_min_dim(alpha)
            raise TruncationLeakageError(
                f"coherent state alpha={alpha}: discarded tail weight {tail:.3e} "
                f"exceeds {COHERENT_TAIL_THRESHOLD:.0e}; need dim >= {need}",
                min_dim=need,
            )
    if mu == 0.0:
        return fock_state(0, dim)
    n = np.arange(dim)
    # log-domain magnitudes avoid overflow of alpha**n / sqrt(n!)
    log_mag = n * np.log(abs(alpha)) - 0.5 * np.cumsum(np.log(np.maximum(n, 1)))
    log_mag -= log_mag.max()
    vec = np.exp(log_mag).astype(complex)
    theta = float(np.angle(alpha))
    if theta != 0.0:
        vec *= np.exp(1j * theta * n)
    return vec / np.linalg.norm(vec)


def thermal_density(nbar: float, dim: int, guard: bool = True) -> np.ndarray:
    """Thermal (Bose-Einstein) density matrix with mean photon number nbar."""
    dim = _check_dim(dim)
    if nbar < 0:
        raise InvalidStateError(f"thermal occupation must be >= 0, got {nbar}")
    if nbar == 0:
        return pure_density(fock_state(0, dim))
    r = nbar / (nbar + 1.0)
    if guard:
        tail = r**dim  # exact geometric tail weight
        if tail >= COHERENT_TAIL_THRESHOLD:
            need = int(np.ceil(np.log(COHERENT_TAIL_THRESHOLD) / np.log(r))) + 1
            raise TruncationLeakageError(
                f"thermal state nbar={nbar}: discarded tail weight {tail:.3e} "
                f"exceeds {COHERENT_TAIL_THRESHOLD:.0e}; need dim >= {need}",
                min_dim=need,
            )
    p = (1 - r) * r ** np.arange(dim)
    p /= p.sum()
    return np.diag(p).astype(complex)


def pure_density(psi: np.ndarray) -> np.ndarray:
    """|ψ><ψ| for a normalized state vector."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def diagonal_function_operator(f, dim: int) -> np.ndarray:
    """f(a†a) = diag(f(0), f(1), ..., f(dim-1)) for a real-valued f."""
    dim = _check_dim(dim)
    vals = np.array([float(f(n)) for n in range(dim)], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise InvalidStateError("nonlinearity evaluates to a non-finite value on the basis")
    return np.diag(vals).astype(complex)


def normal_order_norm(y: np.ndarray, k: int) -> float:
    """<y| a^k (a†)^k |y> = ||(a†)^k |y>||², by explicit operator application.

    Guarded: the top k amplitudes of |y> must be below 1e-10 so that the
    repeated creation operator cannot spill weight past the cutoff.
    """
    y = np.asarray(y, dtype=complex)
    dim = y.shape[0]
    if int(k) != k or k < 1:
        raise InvalidDimensionError(f"power k must be a positive integer, got {k}")
    if dim < 2:
        raise InvalidDimensionError("state too short")
    top = np.abs(y[dim - k:]) if k < dim else np.abs(y)
    if top.size and top.max() >= 1e-10:
        raise TruncationLeakageError(
            f"top-{k} amplitudes reach {top.max():.3e}; raising by (a†)^{k} would "
            "spill past the cutoff (increase dim)"
        )
    v = y.copy()
    cr = creation(dim)
    for _ in range(int(k)):
        v = cr @ v
    return float(np.real(np.vdot(v, v)))


def check_state_vector(psi: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Validate unit norm; returns the array unchanged."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.shape[0] < 2:
        raise InvalidStateError("state vector must be 1-d with dim >= 2")
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > tol:
        raise InvalidStateError(f"state vector norm {nrm} deviates from 1 by more than {tol}")
    return psi


def check_density_matrix(
    rho: np.ndarray,
    herm_tol: float = HERMITICITY_TOL,
    trace_tol: float = TRACE_TOL,
    psd_tol: float = PSD_TOL,
) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity (to tolerance)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 2:
        raise InvalidStateError("density matrix must be square with dim >= 2")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > herm_tol:
        raise InvalidStateError(f"Hermiticity violation {herm:.3e} > {herm_tol:.0e}")
    tr = abs(np.trace(rho) - 1.0)
    if tr > trace_tol:
        raise InvalidStateError(f"trace deviates from 1 by {tr:.3e} > {trace_tol:.0e}")
    wmin = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min())
    if wmin < -psd_tol:
        raise InvalidStateError(f"smallest eigenvalue {wmin:.3e} < -{psd_tol:.0e}")
    return rho
