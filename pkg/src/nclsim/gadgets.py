"""Engineered Lindblad operators and their analytic diagnostics.

Two families of dissipation are built here:

* the projector gadget A = |φ><y| a^k, which funnels population from a
  source state |y> toward a target |φ> at a rate set by the norm factor
  N = <y| a^k (a†)^k |y>;
* nonlinear coherent loss (NCL) A = a f(a†a), whose dark states are
  nonlinear coherent states selected by the zeros of f.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidDimensionError,
    InvalidStateError,
    UndefinedRatioError,
)
from .fock import (
    annihilation,
    check_state_vector,
    creation,
    diagonal_function_operator,
    normal_order_norm,
)

_PRESET_POLYS = {
    "x-1": ([0.0, 1.0], 1.0),
    "(x-1)^2": ([0.0, 0.0, 1.0], 1.0),
    "(x-1)^3": ([0.0, 0.0, 0.0, 1.0], 1.0),
}


class NonlinearFunction:
    """Real-valued f(n) on photon numbers, with a derivative rule.

    Forms: a polynomial in (x - shift) given by a coefficient list
    (ascending powers), or a table of values on 0..len(table)-1.  Polynomial
    derivatives are exact; tabulated ones use the central difference
    (f(n+1) - f(n-1))/2 with one-sided differences at the ends.
    """

    def __init__(self, coeffs=None, shift=0.0, table=None, name=None):
        if (coeffs is None) == (table is None):
            raise InvalidStateError("specify exactly one of coeffs or table")
        self.coeffs = None if coeffs is None else [float(c) for c in coeffs]
        self.shift = float(shift)
        self.table = None if table is None else np.asarray(table, dtype=float)
        self.name = name

    @classmethod
    def from_name(cls, name: str, power: int | None = None) -> "NonlinearFunction":
        if name in _PRESET_POLYS:
            coeffs, shift = _PRESET_POLYS[name]
            return cls(coeffs=coeffs, shift=shift, name=name)
        if name == "x^k":
            if power is None or int(power) != power or power < 1:
                raise InvalidStateError("preset 'x^k' needs a positive integer power")
            coeffs = [0.0] * int(power) + [1.0]
            return cls(coeffs=coeffs, shift=0.0, name=f"x^{int(power)}")
        raise InvalidStateError(f"unknown nonlinearity preset {name!r}")

    @classmethod
    def from_polynomial(cls, coeffs, shift: float = 0.0) -> "NonlinearFunction":
        return cls(coeffs=coeffs, shift=shift)

    @classmethod
    def from_table(cls, values) -> "NonlinearFunction":
        return cls(table=values)

    def __call__(self, x: float) -> float:
        if self.table is not None:
            idx = int(round(x))
            if idx < 0 or idx >= self.table.size:
                raise InvalidStateError(f"tabulated nonlinearity has no value at {x}")
            return float(self.table[idx])
        u = x - self.shift
        return float(sum(c * u**j for j, c in enumerate(self.coeffs)))

    def derivative(self, x: float) -> float:
        if self.table is not None:
            idx = int(round(x))
            lo, hi = max(idx - 1, 0), min(idx + 1, self.table.size - 1)
            if hi == lo:
                return 0.0
            return float((self.table[hi] - self.table[lo]) / (hi - lo))
        u = x - self.shift
        return float(sum(j * c * u ** (j - 1) for j, c in enumerate(self.coeffs) if j > 0))

    def describe(self) -> str:
        if self.name:
            return self.name
        if self.table is not None:
            return f"table[{self.table.size}]"
        return f"poly(shift={self.shift}, coeffs={self.coeffs})"

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"NonlinearFunction({self.describe()})"


class ProjectorGadget:
    """Geometry of the engineered operator A = |φ><y| a^k.

    Derived quantities: the normalized raised source |Ψ> ∝ (a†)^k |y>, its
    norm factor N, the overlap <φ|Ψ>, the orthogonal complement |0> of |Ψ>
    inside span{|φ>, |Ψ>}, and the projector P onto that two-dimensional
    subspace.  Construction fails when |φ> and |Ψ> are parallel (the
    complement is undefined there).
    """

    def __init__(self, target: np.ndarray, source: np.ndarray, k: int):
        target = check_state_vector(np.asarray(target, dtype=complex))
        source = check_state_vector(np.asarray(source, dtype=complex))
        if target.shape[0] != source.shape[0]:
            raise DimensionMismatchError(
                f"target dim {target.shape[0]} != source dim {source.shape[0]}"
            )
        if int(k) != k or k < 1:
            raise InvalidDimensionError(f"power k must be a positive integer, got {k}")
        if k == 1:
            warnings.warn(
                "projector gadget with k=1 lies outside the k>1 regime the "
                "transfer analysis assumes; proceeding anyway",
                stacklevel=2,
            )
        self.target = target
        self.source = source
        self.k = int(k)
        self.dim = target.shape[0]

        self.norm_factor = normal_order_norm(source, self.k)  # guards the cutoff
        if self.norm_factor <= 0:
            raise InvalidStateError("norm factor vanished; (a†)^k |y> is the zero vector")
        raised = source.copy()
        cr = creation(self.dim)
        for _ in range(self.k):
            raised = cr @ raised
        self.psi = raised / np.sqrt(self.norm_factor)
        self.overlap = complex(np.vdot(target, self.psi))  # <φ|Ψ>

        leak = 1.0 - abs(self.overlap)
        if leak < 1e-12:
            raise InvalidStateError(
                "|φ> and |Ψ> are parallel within 1e-12; orthogonal complement undefined"
            )
        resid = target - np.vdot(self.psi, target) * self.psi  # |φ> - <Ψ|φ>|Ψ>
        self.complement = resid / np.linalg.norm(resid)
        self.projector = np.outer(self.psi, self.psi.conj()) + np.outer(
            self.complement, self.complement.conj()
        )


def projector_lindblad(gadget: ProjectorGadget, dim: int) -> np.ndarray:
    """Dense matrix of A = |φ><y| a^k, zero-padded to ``dim`` if larger."""
    if dim < gadget.dim:
        raise DimensionMismatchError(
            f"cannot truncate a gadget built at dim {gadget.dim} down to {dim}"
        )
    phi = np.zeros(dim, dtype=complex)
    phi[: gadget.dim] = gadget.target
    y = np.zeros(dim, dtype=complex)
    y[: gadget.dim] = gadget.source
    ak = np.linalg.matrix_power(annihilation(dim), gadget.k)
    return np.outer(phi, y.conj() @ ak)


def ncl_lindblad(f, dim: int) -> np.ndarray:
    """Nonlinear coherent loss operator A = a · f(a†a)."""
    return annihilation(dim) @ diagonal_function_operator(f, dim)


def gamma_eff(gadget: ProjectorGadget, gamma: float) -> float:
    """Effective transfer rate min{1, 2(1-|<φ|Ψ>|²)} · N · γ."""
    ov2 = abs(gadget.overlap) ** 2
    return min(1.0, 2.0 * (1.0 - ov2)) * gadget.norm_factor * float(gamma)


def steady_fidelity_prediction(gadget: ProjectorGadget, rho0: np.ndarray) -> float:
    """Closed-form long-time target population (1-|<φ|Ψ>|²) · Tr{P ρ(0)}."""
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (gadget.dim, gadget.dim):
        raise DimensionMismatchError(
            f"rho0 shape {rho0.shape} incompatible with gadget dim {gadget.dim}"
        )
    weight = float(np.real(np.trace(gadget.projector @ rho0)))
    return (1.0 - abs(gadget.overlap) ** 2) * weight


def jump_rate_ratio(me, psi: np.ndarray) -> float:
    """Linear-to-engineered jump-rate ratio on a state |Ψ>.

    r = Γ(n̄+1) <Ψ|a†a|Ψ> / (γ <Ψ|A†A|Ψ>); r << 1 means linear loss is
    negligible during target-state generation.
    """
    psi = check_state_vector(np.asarray(psi, dtype=complex))
    if me.gamma_nonlinear <= 0 or me.nonlinear_op is None:
        raise UndefinedRatioError("master equation carries no engineered channel")
    if psi.shape[0] != me.dim:
        raise DimensionMismatchError(f"state dim {psi.shape[0]} != system dim {me.dim}")
    jumped = me.nonlinear_op @ psi
    den = me.gamma_nonlinear * float(np.real(np.vdot(jumped, jumped)))
    if den == 0.0:
        raise UndefinedRatioError("engineered jump rate vanishes on this state")
    n_mean = float(np.sum(np.arange(me.dim) * np.abs(psi) ** 2))
    return me.gamma_linear * (me.nbar + 1.0) * n_mean / den
