"""Scalar and distribution observables.

Mandel's Q parameter, Q = (<n²> - <n>²)/<n> - 1, is computed from the
diagonal of ρ: photon-number moments depend on the diagonal only, which is
both cheaper and numerically stabler than full-operator moments.  Q < 0 is
sub-Poissonian (nonclassical); Q = -1 is a number state; a coherent state
has Q = 0 and a thermal state Q = n̄.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CorruptedStateError,
    DimensionMismatchError,
    InvalidStateError,
    UndefinedQError,
)

_MEAN_N_FLOOR = 1e-14


@dataclass(frozen=True)
class DiagonalDistribution:
    """Photon-number distribution: p_n >= 0 summing to 1 (within 1e-12)."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        object.__setattr__(self, "probabilities", p)
        if p.ndim != 1 or p.size < 1:
            raise InvalidStateError("distribution must be a 1-d probability vector")
        if p.min() < 0:
            raise InvalidStateError(f"negative probability {p.min():.3e}")
        if abs(p.sum() - 1.0) > 1e-12:
            raise InvalidStateError(f"probabilities sum to {p.sum()!r}, not 1")

    @property
    def dim(self) -> int:
        return self.probabilities.size

    def mean(self) -> float:
        return float(np.sum(np.arange(self.dim) * self.probabilities))

    def variance(self) -> float:
        n = np.arange(self.dim)
        m = self.mean()
        return float(np.sum((n - m) ** 2 * self.probabilities))

    def mandel_q(self) -> float:
        m = self.mean()
        if m <= _MEAN_N_FLOOR:
            raise UndefinedQError("mean photon number is zero; Q undefined")
        return self.variance() / m - 1.0


def poisson_distribution(mean: float, dim: int) -> DiagonalDistribution:
    """Poisson reference distribution with the given mean, truncated and
    renormalized (used for side-by-side nonclassicality comparisons)."""
    if mean < 0:
        raise InvalidStateError("mean must be >= 0")
    n = np.arange(dim)
    if mean == 0:
        p = np.zeros(dim)
        p[0] = 1.0
    else:
        logp = n * np.log(mean) - mean - np.cumsum(np.log(np.maximum(n, 1)))
        p = np.exp(logp - logp.max())
    return DiagonalDistribution(p / p.sum())


def mandel_q(rho: np.ndarray) -> float:
    """Mandel Q of a density matrix (moments via the diagonal)."""
    d = np.real(np.diag(np.asarray(rho)))
    n = np.arange(d.size)
    mean = float(np.sum(n * d))
    if mean <= _MEAN_N_FLOOR:
        raise UndefinedQError("mean photon number is zero; Q undefined")
    second = float(np.sum(n * n * d))
    return (second - mean * mean) / mean - 1.0


def fidelity_to_pure(rho: np.ndarray, phi: np.ndarray) -> float:
    """<φ|ρ|φ> for a pure target |φ>."""
    rho = np.asarray(rho, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    if rho.shape != (phi.size, phi.size):
        raise DimensionMismatchError(f"rho shape {rho.shape} vs target dim {phi.size}")
    return float(np.real(np.vdot(phi, rho @ phi)))


def photon_distribution(rho: np.ndarray) -> DiagonalDistribution:
    """Diagonal of ρ as a distribution; tiny negative entries are clipped.

    If the diagonal retains less than 0.999 of its mass after clipping the
    state is considered corrupted (not a numerical wobble) and an error is
    raised instead of silently renormalizing garbage.
    """
    d = np.real(np.diag(np.asarray(rho))).copy()
    clipped = d < 0
    d[clipped] = 0.0
    total = d.sum()
    if total < 0.999:
        raise CorruptedStateError(
            f"diagonal mass {total:.6f} after clipping negatives; state corrupted"
        )
    return DiagonalDistribution(d / total)


def purity(rho: np.ndarray) -> float:
    """Tr ρ² (1 for pure states, 1/dim for the maximally mixed state)."""
    rho = np.asarray(rho, dtype=complex)
    return float(np.real(np.trace(rho @ rho)))


@dataclass(frozen=True)
class ObservableReport:
    """One state's worth of scalar observables plus its distribution."""

    mean_n: float
    variance_n: float
    mandel_q: float  # nan when undefined (vacuum)
    purity: float
    distribution: DiagonalDistribution
    fidelity: float | None = field(default=None)


def observable_report(rho: np.ndarray, target: np.ndarray | None = None) -> ObservableReport:
    """Bundle the standard observables of a density matrix."""
    dist = photon_distribution(rho)
    try:
        q = dist.mandel_q()
    except UndefinedQError:
        q = float("nan")
    fid = None if target is None else fidelity_to_pure(rho, target)
    return ObservableReport(
        mean_n=dist.mean(),
        variance_n=dist.variance(),
        mandel_q=q,
        purity=purity(rho),
        distribution=dist,
        fidelity=fid,
    )
