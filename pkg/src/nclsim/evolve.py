"""Time propagation of density matrices and convergence to stationarity.

The integrator is an embedded Dormand-Prince 4(5) pair with PI step-size
control, applied directly to the D×D density matrix (no vectorization).
After every accepted step the state is re-Hermitized, ρ ← (ρ+ρ†)/2;
positivity is monitored but never projected, so integrator bugs surface in
the recorded diagnostics instead of being masked.

For master equations with no upward coupling (no driving, no thermal
pumping, every channel operator on a single superdiagonal) population only
flows down the ladder.  The integrator then tracks a shrinking active block:
once the top rows of the block fall below 1e-14 they are zeroed and dropped,
which removes the huge (and empty) decay rates at the cutoff from the
stability constraint.  This is exact up to the 1e-14 clip and is what makes
large-cutoff transient runs affordable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    InsufficientDecayError,
    InvalidStateError,
    SimulationError,
    StepSizeUnderflowError,
    TruncationBreachError,
)
from .fock import check_density_matrix
from .liouvillian import MasterEquation

DEFAULT_TOL = 1e-9
STEADY_TOL = 1e-10
BREACH_TOL = 1e-6
_SHRINK_CUT = 1e-14

# Dormand-Prince 4(5) tableau
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (
    9017 / 3168,
    -355 / 33,
    46732 / 5247,
    49 / 176,
    -5103 / 18656,
)
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1 = 35 / 384 - 5179 / 57600
_E3 = 500 / 1113 - 7571 / 16695
_E4 = 125 / 192 - 393 / 640
_E5 = -2187 / 6784 + 92097 / 339200
_E6 = 11 / 84 - 187 / 2100
_E7 = -1 / 40


def _band_offsets(m: np.ndarray):
    rows, cols = np.nonzero(m)
    if rows.size == 0:
        return "zero", None
    offs = np.unique(cols - rows)
    if offs.size == 1:
        return "band", int(offs[0])
    return "general", None


def _multipliers(m: np.ndarray):
    """Left/right multiplication closures tuned to the operator's structure."""
    kind, s = _band_offsets(m)
    dim = m.shape[0]
    if kind == "zero":
        def zmul(rho):
            return np.zeros_like(rho)

        return zmul, zmul
    if kind == "band":
        v = np.diag(m, s).copy()
        if s == 0:
            def lmul(rho, v=v):
                return v[:, None] * rho

            def rmul(rho, v=v):
                return rho * v[None, :]

            return lmul, rmul
        if s > 0:
            def lmul(rho, v=v, s=s):
                out = np.zeros_like(rho)
                out[:-s, :] = v[:, None] * rho[s:, :]
                return out

            def rmul(rho, v=v, s=s):
                out = np.zeros_like(rho)
                out[:, s:] = rho[:, :-s] * v[None, :]
                return out

            return lmul, rmul

        def lmul(rho, v=v, s=-s):
            out = np.zeros_like(rho)
            out[s:, :] = v[:, None] * rho[:-s, :]
            return out

        def rmul(rho, v=v, s=-s):
            out = np.zeros_like(rho)
            out[:, :-s] = rho[:, s:] * v[None, :]
            return out

        return lmul, rmul
    # general operator: sparse when it pays off, dense otherwise
    if np.count_nonzero(m) <= 0.25 * dim * dim:
        ms = sp.csr_matrix(m)

        def lmul(rho, ms=ms):
            return ms @ rho

        def rmul(rho, ms=ms):
            return rho @ ms

        return lmul, rmul

    def lmul(rho, m=m):
        return m @ rho

    def rmul(rho, m=m):
        return rho @ m

    return lmul, rmul


class _BlockRhs:
    """Master-equation right-hand side restricted to the leading m×m block.

    Restriction is exact when the caller guarantees the state vanishes
    outside the block and the equation never couples population upward
    (see MasterEquation.is_pure_lowering).
    """

    def __init__(self, me: MasterEquation, m: int):
        self.m = m
        self.terms = []
        for ch in me.channels:
            if ch.rate == 0.0:
                continue
            x = np.ascontiguousarray(ch.op[:m, :m])
            xd = np.ascontiguousarray(x.conj().T)
            xdx = xd @ x
            lx, _ = _multipliers(x)
            _, rxd = _multipliers(xd)
            lxdx, rxdx = _multipliers(xdx)
            self.terms.append((ch.rate, lx, rxd, lxdx, rxdx))
        self.h_ops = None
        if me.omega != 0.0:
            h = np.ascontiguousarray(me.hamiltonian[:m, :m])
            self.h_ops = _multipliers(h)
        self.scale = me.decay_scale(m)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho)
        if self.h_ops is not None:
            lh, rh = self.h_ops
            out += -1j * (lh(rho) - rh(rho))
        for rate, lx, rxd, lxdx, rxdx in self.terms:
            out += rate * (2.0 * rxd(lx(rho)) - lxdx(rho) - rxdx(rho))
        return out


def _frob(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


class _Engine:
    """Adaptive DP45 stepper with hermitization, guards and window shrink."""

    def __init__(
        self,
        me: MasterEquation,
        rho0: np.ndarray,
        t0: float,
        tol: float,
        window: bool,
        breach_guard: bool,
        breach_tol: float,
        max_steps: int,
    ):
        self.me = me
        self.dim = me.dim
        self.tol = float(tol)
        self.breach_guard = breach_guard
        self.breach_tol = breach_tol
        self.max_steps = int(max_steps)
        self.t = float(t0)
        self.windowed = bool(window) and me.is_pure_lowering()

        y = np.array(rho0, dtype=complex)
        y = 0.5 * (y + y.conj().T)
        self.k_active = self.dim
        if self.windowed:
            rmax = np.abs(y).max(axis=1)
            nz = np.nonzero(rmax >= _SHRINK_CUT)[0]
            k0 = max(2, int(nz.max()) + 1 if nz.size else 2)
            if k0 < self.dim:
                y[k0:, :] = 0.0
                y[:, k0:] = 0.0
            self.k_active = k0
        self.yb = np.ascontiguousarray(y[: self.k_active, : self.k_active])
        self.rhs = _BlockRhs(me, self.k_active)
        self.h = None
        self.k1 = None
        self.err_prev = 1.0
        self.last_asym = 0.0
        self.attempts = 0

    # -- stepping ---------------------------------------------------------

    def _seed_step(self, span: float) -> float:
        scale = max(self.rhs.scale, 1e-12)
        return min(abs(span), 0.1 / scale)

    def _dp_step(self, h: float):
        f, y, k1 = self.rhs, self.yb, self.k1
        k2 = f(y + h * (_A21 * k1))
        k3 = f(y + h * (_A31 * k1 + _A32 * k2))
        k4 = f(y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
        k5 = f(y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
        k6 = f(y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
        y5 = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        asym = float(np.abs(y5 - y5.conj().T).max())
        ynew = 0.5 * (y5 + y5.conj().T)
        k7 = f(ynew)
        err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        return ynew, k7, err, asym

    def _shrink(self):
        changed = False
        while self.k_active > 2:
            k = self.k_active
            if np.abs(self.yb[k - 1, :]).max() >= _SHRINK_CUT:
                break
            self.yb = np.ascontiguousarray(self.yb[: k - 1, : k - 1])
            self.k_active = k - 1
            changed = True
        if changed:
            self.rhs = _BlockRhs(self.me, self.k_active)
            self.k1 = None

    def _guard(self):
        if not self.breach_guard or self.k_active < self.dim:
            return
        top = float(self.yb[-1, -1].real)
        if top > self.breach_tol:
            raise TruncationBreachError(
                f"top Fock level population {top:.3e} exceeds {self.breach_tol:.0e} "
                f"at t={self.t:.6g}; increase dim",
                time=self.t,
            )

    def step_to(self, t_target: float, on_accept=None):
        """Advance to t_target; on_accept(residual) may return True to stop."""
        if self.h is None:
            self.h = self._seed_step(t_target - self.t)
        while self.t < t_target - 1e-14 * max(1.0, abs(t_target)):
            self.attempts += 1
            if self.attempts > self.max_steps:
                raise SimulationError(
                    f"integration exceeded {self.max_steps} step attempts"
                )
            if self.k1 is None:
                self.k1 = self.rhs(self.yb)
            h = min(self.h, t_target - self.t)
            ynew, k7, err, asym = self._dp_step(h)
            en = _frob(err) / (self.tol * h * max(1.0, _frob(self.yb)))
            if en <= 1.0:
                self.yb = ynew
                self.t += h
                self.k1 = k7
                self.last_asym = asym
                residual = _frob(k7)
                self._guard()
                if self.windowed:
                    self._shrink()
                en_c = max(en, 1e-10)
                fac = 0.9 * en_c**-0.175 * max(self.err_prev, 1e-10) ** 0.1
                self.h = h * min(10.0, max(0.2, fac))
                self.err_prev = en_c
                if on_accept is not None and on_accept(residual):
                    return
            else:
                self.h = h * max(0.1, 0.9 * en**-0.25)
            if self.h < 1e-15 * max(1.0, abs(self.t)):
                raise StepSizeUnderflowError(
                    f"step size underflow at t={self.t:.6g} (h={self.h:.3e})"
                )

    # -- observation ------------------------------------------------------

    def full_state(self) -> np.ndarray:
        if self.k_active == self.dim:
            return self.yb.copy()
        full = np.zeros((self.dim, self.dim), dtype=complex)
        full[: self.k_active, : self.k_active] = self.yb
        return full

    def diagnostics(self):
        tr_err = abs(float(np.real(np.trace(self.yb))) - 1.0)
        w = np.linalg.eigvalsh(self.yb)
        min_eig = float(w.min())
        if self.k_active < self.dim:
            min_eig = min(min_eig, 0.0)
        top = float(self.yb[-1, -1].real) if self.k_active == self.dim else 0.0
        return tr_err, self.last_asym, min_eig, top


@dataclass
class Trajectory:
    """Recorded propagation: states and per-point integrity diagnostics."""

    times: np.ndarray
    states: list
    trace_error: np.ndarray
    herm_error: np.ndarray
    min_eigenvalue: np.ndarray
    top_population: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 1 or (t.size > 1 and not np.all(np.diff(t) > 0)):
            raise InvalidStateError("trajectory times must be strictly increasing")
        object.__setattr__(self, "times", t)


@dataclass
class SteadyEvolveResult:
    """Outcome of integrating toward stationarity; never silently unconverged."""

    rho: np.ndarray
    converged: bool
    t_final: float
    residual: float


def _rk4_fixed(rhs, y, t0, t1, h):
    t = t0
    while t < t1 - 1e-14 * max(1.0, abs(t1)):
        step = min(h, t1 - t)
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * step * k1)
        k3 = rhs(y + 0.5 * step * k2)
        k4 = rhs(y + step * k3)
        y = y + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        y = 0.5 * (y + y.conj().T)
        t += step
    return y


def propagate(
    me: MasterEquation,
    rho0: np.ndarray,
    grid,
    tol: float = DEFAULT_TOL,
    breach_guard: bool = True,
    breach_tol: float = BREACH_TOL,
    window: bool = True,
    fixed_step: float | None = None,
    max_steps: int = 2_000_000,
) -> Trajectory:
    """Integrate dρ/dt = rhs(me, ρ) and record the state on a time grid.

    ``grid`` must be ascending; ``rho0`` is the state at ``grid[0]``.  ``tol``
    is the local error tolerance per unit time.  ``fixed_step`` selects the
    classical fixed-step RK4 fallback instead of the adaptive pair.
    """
    rho0 = check_density_matrix(rho0)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise InvalidStateError("time grid must be a non-empty 1-d array")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise InvalidStateError("time grid must be strictly increasing")
    if rho0.shape != (me.dim, me.dim):
        raise InvalidStateError(f"rho0 shape {rho0.shape} != ({me.dim}, {me.dim})")

    if fixed_step is not None:
        return _propagate_fixed(me, rho0, grid, fixed_step, breach_guard, breach_tol)

    eng = _Engine(me, rho0, grid[0], tol, window, breach_guard, breach_tol, max_steps)
    states = [eng.full_state()]
    diags = [eng.diagnostics()]
    for t_next in grid[1:]:
        eng.step_to(float(t_next))
        states.append(eng.full_state())
        diags.append(eng.diagnostics())
    tr, he, mi, tp = (np.array(col) for col in zip(*diags))
    return Trajectory(grid.copy(), states, tr, he, mi, tp)


def _propagate_fixed(me, rho0, grid, h, breach_guard, breach_tol):
    rhs = _BlockRhs(me, me.dim)
    y = 0.5 * (np.array(rho0, dtype=complex) + np.array(rho0, dtype=complex).conj().T)
    states = [y.copy()]
    diags = [(abs(float(np.real(np.trace(y))) - 1.0), 0.0, float(np.linalg.eigvalsh(y).min()), float(y[-1, -1].real))]
    for i in range(1, grid.size):
        y = _rk4_fixed(rhs, y, grid[i - 1], grid[i], h)
        top = float(y[-1, -1].real)
        if breach_guard and top > breach_tol:
            raise TruncationBreachError(
                f"top Fock level population {top:.3e} exceeds {breach_tol:.0e} "
                f"at t={grid[i]:.6g}; increase dim",
                time=float(grid[i]),
            )
        states.append(y.copy())
        diags.append(
            (
                abs(float(np.real(np.trace(y))) - 1.0),
                0.0,
                float(np.linalg.eigvalsh(y).min()),
                top,
            )
        )
    tr, he, mi, tp = (np.array(col) for col in zip(*diags))
    return Trajectory(grid.copy(), states, tr, he, mi, tp)


def evolve_to_steady(
    me: MasterEquation,
    rho0: np.ndarray,
    tol: float = STEADY_TOL,
    t_max: float = 1000.0,
    step_tol: float = DEFAULT_TOL,
    breach_guard: bool = True,
    breach_tol: float = BREACH_TOL,
    window: bool = True,
    max_steps: int = 5_000_000,
) -> SteadyEvolveResult:
    """Integrate until ||rhs(ρ)||_F < tol or t_max is reached.

    The returned result is explicitly tagged converged/unconverged; callers
    must not treat an unconverged state as stationary.
    """
    rho0 = check_density_matrix(rho0)
    if rho0.shape != (me.dim, me.dim):
        raise InvalidStateError(f"rho0 shape {rho0.shape} != ({me.dim}, {me.dim})")
    eng = _Engine(me, rho0, 0.0, step_tol, window, breach_guard, breach_tol, max_steps)
    eng.k1 = eng.rhs(eng.yb)
    residual = _frob(eng.k1)
    if residual < tol:
        return SteadyEvolveResult(eng.full_state(), True, 0.0, residual)

    state = {"res": residual}

    def check(res):
        state["res"] = res
        return res < tol

    eng.step_to(float(t_max), on_accept=check)
    residual = state["res"]
    return SteadyEvolveResult(eng.full_state(), residual < tol, eng.t, residual)


def projector_residuals(traj: Trajectory, gadget) -> np.ndarray:
    """||P ρ(t) P - Tr{Pρ(0)} |0><0| ||_F along a trajectory."""
    p = gadget.projector
    c0 = float(np.real(np.trace(p @ traj.states[0])))
    limit = c0 * np.outer(gadget.complement, gadget.complement.conj())
    return np.array([np.linalg.norm(p @ rho @ p - limit) for rho in traj.states])


def decay_rate_fit(
    traj: Trajectory,
    gadget,
    window: tuple = (1e-8, 1e-2),
) -> float:
    """Exponential rate of the projected residual, by least squares on log ε.

    Only points with ε inside ``window`` enter the fit; outside it the
    residual is either still transient or drowned in integration noise.
    """
    eps = projector_residuals(traj, gadget)
    lo, hi = window
    mask = (eps >= lo) & (eps <= hi)
    if int(mask.sum()) < 3:
        raise InsufficientDecayError(
            f"only {int(mask.sum())} residual points inside [{lo:.0e}, {hi:.0e}]; "
            "extend the trajectory"
        )
    slope = np.polyfit(traj.times[mask], np.log(eps[mask]), 1)[0]
    return float(-slope)
