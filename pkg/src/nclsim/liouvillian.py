"""Master-equation right-hand side and superoperator materialization.

The equation of motion is

    dρ/dt = -i[H, ρ] + Γ(n̄+1) L(a)ρ + Γ n̄ L(a†)ρ + γ L(A)ρ

with the factor-2 dissipator convention

    L(x)ρ = 2 x ρ x† - x†x ρ - ρ x†x            (no 1/2 anywhere)

and the driving Hamiltonian H = iΩ(a - a†).  All rates in this package are
interpreted under this convention; halve them when comparing against
libraries that use the (1/2)-convention.

The right-hand side is applied matrix-free (sums of left/right products,
exploiting sparsity of the channel operators).  The superoperator matrix is
materialized only for null-space steady-state solving, using column-stacking
vectorization: vec(ρ)[i + dim*j] = ρ[i, j], so vec(AρB) = (Bᵀ ⊗ A) vec(ρ).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionCapError, DimensionMismatchError, InvalidStateError
from .fock import annihilation, creation, _check_dim

SUPEROPERATOR_DIM_CAP = 64
_SPARSE_DENSITY_CUTOFF = 0.25


@dataclass(frozen=True)
class LindbladChannel:
    """One jump channel: ``rate`` multiplies L(op)ρ in the master equation."""

    rate: float
    op: np.ndarray

    def __post_init__(self):
        if self.rate < 0:
            raise InvalidStateError(f"channel rate must be >= 0, got {self.rate}")


def _maybe_sparse(m: np.ndarray):
    dim = m.shape[0]
    if np.count_nonzero(m) <= _SPARSE_DENSITY_CUTOFF * dim * dim:
        return sp.csr_matrix(m)
    return m


class MasterEquation:
    """Single-mode master equation with linear loss, thermal pumping,
    coherent driving and one engineered channel.

    The three canonical channels are always exactly those implied by
    (Γ, γ, n̄) and the chosen engineered operator: rates Γ(n̄+1), Γn̄, γ.
    Derived accessors: ``epsilon`` = Γ/γ and ``alpha0`` = Ω/γ.
    """

    def __init__(
        self,
        dim: int,
        gamma_linear: float = 0.0,
        gamma_nonlinear: float = 0.0,
        nbar: float = 0.0,
        omega: float = 0.0,
        nonlinear_op: np.ndarray | None = None,
    ):
        self.dim = _check_dim(dim)
        if gamma_linear < 0 or gamma_nonlinear < 0 or nbar < 0:
            raise InvalidStateError("rates and thermal occupation must be >= 0")
        if gamma_nonlinear > 0 and nonlinear_op is None:
            raise InvalidStateError("gamma_nonlinear > 0 requires an engineered operator")
        self.gamma_linear = float(gamma_linear)
        self.gamma_nonlinear = float(gamma_nonlinear)
        self.nbar = float(nbar)
        self.omega = float(omega)

        a = annihilation(self.dim)
        ad = creation(self.dim)
        if nonlinear_op is None:
            nonlinear_op = np.zeros((self.dim, self.dim), dtype=complex)
        else:
            nonlinear_op = np.asarray(nonlinear_op, dtype=complex)
            if nonlinear_op.shape != (self.dim, self.dim):
                raise DimensionMismatchError(
                    f"engineered operator shape {nonlinear_op.shape} != ({self.dim}, {self.dim})"
                )
        self.nonlinear_op = nonlinear_op
        self.hamiltonian = 1j * self.omega * (a - ad)
        herm = np.abs(self.hamiltonian - self.hamiltonian.conj().T).max()
        if herm > 1e-10:
            raise InvalidStateError(f"Hamiltonian Hermiticity violation {herm:.3e}")
        self.channels = [
            LindbladChannel(self.gamma_linear * (self.nbar + 1.0), a),
            LindbladChannel(self.gamma_linear * self.nbar, ad),
            LindbladChannel(self.gamma_nonlinear, self.nonlinear_op),
        ]
        # matrix-free kernels for the active (rate > 0) channels
        self._kernels = []
        for ch in self.channels:
            if ch.rate == 0.0:
                continue
            xdx = ch.op.conj().T @ ch.op
            self._kernels.append(
                (
                    ch.rate,
                    _maybe_sparse(ch.op),
                    _maybe_sparse(ch.op.conj().T),
                    _maybe_sparse(xdx),
                    ch.op,
                    xdx,
                )
            )
        self._h_sparse = _maybe_sparse(self.hamiltonian) if self.omega != 0.0 else None

    @property
    def epsilon(self) -> float:
        """Linear-to-engineered rate ratio Γ/γ."""
        if self.gamma_nonlinear > 0:
            return self.gamma_linear / self.gamma_nonlinear
        return 0.0 if self.gamma_linear == 0 else float("inf")

    @property
    def alpha0(self) -> float:
        """Scaled driving amplitude Ω/γ."""
        if self.gamma_nonlinear > 0:
            return self.omega / self.gamma_nonlinear
        return 0.0 if self.omega == 0 else float("inf")

    def decay_scale(self, m: int | None = None) -> float:
        """Upper estimate of the fastest decay rate (for step-size seeding)."""
        m = self.dim if m is None else m
        scale = 2.0 * abs(self.omega) * np.sqrt(m)
        for kern in self._kernels:
            d = np.real(np.diag(kern[5])[:m])
            if d.size:
                scale += 2.0 * kern[0] * d.max()
        return float(scale)

    def is_pure_lowering(self) -> bool:
        """True when nothing couples population upward: no driving, no
        thermal pumping, and every active channel operator lives on a single
        superdiagonal (a one-step-lowering band)."""
        if self.omega != 0.0 or self.nbar != 0.0:
            return False
        for ch in self.channels:
            if ch.rate == 0.0:
                continue
            rows, cols = np.nonzero(ch.op)
            if rows.size == 0:
                continue
            offsets = np.unique(cols - rows)
            if offsets.size != 1 or offsets[0] < 1:
                return False
        return True


def dissipator(x: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """L(x)ρ = 2xρx† - x†xρ - ρx†x (factor-2 convention)."""
    x = np.asarray(x, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if x.shape != rho.shape or x.shape[0] != x.shape[1]:
        raise DimensionMismatchError(f"operator shape {x.shape} vs state shape {rho.shape}")
    xd = x.conj().T
    xdx = xd @ x
    return 2.0 * (x @ rho @ xd) - xdx @ rho - rho @ xdx


def rhs(me: MasterEquation, rho: np.ndarray) -> np.ndarray:
    """Full master-equation right-hand side, matrix-free."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (me.dim, me.dim):
        raise DimensionMismatchError(f"rho shape {rho.shape} != ({me.dim}, {me.dim})")
    out = np.zeros((me.dim, me.dim), dtype=complex)
    if me._h_sparse is not None:
        h = me._h_sparse
        out += -1j * (h @ rho - rho @ h)
    for rate, x, xd, xdx, _, _ in me._kernels:
        t = x @ rho
        out += rate * (2.0 * (t @ xd) - xdx @ rho - rho @ xdx)
    return out


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization (Fortran order)."""
    return np.asarray(rho).flatten(order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v).reshape((dim, dim), order="F")


def spre(op) -> sp.csr_matrix:
    """Superoperator for left multiplication: vec(Aρ) = spre(A) vec(ρ)."""
    op = sp.csr_matrix(op)
    return sp.kron(sp.identity(op.shape[0], format="csr"), op, format="csr")


def spost(op) -> sp.csr_matrix:
    """Superoperator for right multiplication: vec(ρB) = spost(B) vec(ρ)."""
    op = sp.csr_matrix(op)
    return sp.kron(op.T, sp.identity(op.shape[0], format="csr"), format="csr")


def superoperator_sparse(me: MasterEquation) -> sp.csr_matrix:
    """Sparse D²×D² matrix representing :func:`rhs` under column stacking."""
    dim = me.dim
    total = sp.csr_matrix((dim * dim, dim * dim), dtype=complex)
    if me.omega != 0.0:
        total = total + (-1j) * (spre(me.hamiltonian) - spost(me.hamiltonian))
    for ch in me.channels:
        if ch.rate == 0.0:
            continue
        x = sp.csr_matrix(ch.op)
        xd = x.conj().T
        xdx = (xd @ x).tocsr()
        total = total + ch.rate * (2.0 * (spre(x) @ spost(xd)) - spre(xdx) - spost(xdx))
    return total.tocsr()


def superoperator_matrix(me: MasterEquation, cap: int = SUPEROPERATOR_DIM_CAP) -> np.ndarray:
    """Dense superoperator matrix; refuses dimensions above ``cap``.

    Above the cap the D²×D² matrix is too large to be worth materializing;
    use the long-time integration solver (evolve.evolve_to_steady) instead.
    """
    if me.dim > cap:
        raise DimensionCapError(
            f"dim {me.dim} exceeds superoperator cap {cap}; "
            "use the long-time-integration solver instead"
        )
    return superoperator_sparse(me).toarray()
