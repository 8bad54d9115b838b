"""Semi-implicit integrator for the simplified director-fluid system in 2D.

Unknowns on the MAC grid: face velocities (u, v), cell temperature theta,
cell director d (unit vectors), cell pressure pi.  The evolved system (with
lam = rho d_tau psi / theta, kappa = -theta d2_theta psi, all coefficients
functions of (theta, tau)):

    rho Dt u - 2 div(mu D) + grad pi = div S_E,     S_E = -theta lam grad_d grad_d^T
    div u = 0
    rho kappa Dt theta - div(alpha grad theta)
        = 2 mu |D|^2 - theta lam (grad_d grad_d^T) : D
          - rho (d_tau eps) grad_d : Dt grad_d + div(lam grad_d . Dt d)
    gamma Dt d - div(lam grad) d = lam |grad d|^2 d

with no-slip velocity and homogeneous Neumann temperature/director walls.
Stretching and anisotropic-conduction terms are absent from this system, so
the integrator requires mu_V = mu_D = mu_P = mu_L = mu_0 = alpha_1 = 0.

Time stepping (IMEX, coefficients frozen at the old time level):
  1. director: advection and the |grad d|^2 reaction explicit, the
     div(lam grad) diffusion implicit; optional cell-wise renormalization
     with the pre-normalization defect recorded;
  2. temperature: conduction implicit, all sources explicit; the two elastic
     exchange terms are contracted against the midpoint director gradient so
     the tau-bookkeeping is exact to quadrature;
  3. momentum: div(mu grad u) implicit, the transpose viscous part,
     advection and the elastic forcing explicit; then an exact MAC
     projection (pressure Poisson with mean-free right side).

Each implicit solve is posed for the increment (new minus old field), which
keeps the conjugate-gradient right-hand side on the scale of the physical
tendencies: the relative 1e-10 solver tolerance then translates into an
energy-bookkeeping slip far below the discretization defect, and a constant
equilibrium is a machine-exact fixed point of the full step (every
right-hand side vanishes identically on constants).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import grid as gr
from .grid import Grid
from .linsolve import cg
from .material import MaterialModel
from .sampling import make_rng, smooth_cosine_field

CG_RTOL = 1e-10
DIV_TOL = 1e-10
RENORM_TOL = 1e-12


class SolverError(ValueError):
    """Invalid solver configuration."""


class CflError(RuntimeError):
    """Time step exceeds the advective/viscous stability guard."""


class SolverAbort(RuntimeError):
    """Integration aborted; carries the failing time and a state snapshot."""

    def __init__(self, reason: str, t: float, state: "StateField"):
        super().__init__(f"aborted at t={t:.6g}: {reason}")
        self.reason = reason
        self.t = t
        self.state = state


@dataclass
class StateField:
    """Discrete state on the staggered grid."""

    grid: Grid
    u: np.ndarray          # (Nx+1, Ny)
    v: np.ndarray          # (Nx, Ny+1)
    theta: np.ndarray      # (Nx, Ny)
    d: np.ndarray          # (Nx, Ny, 2)
    pi: np.ndarray         # (Nx, Ny)
    t: float = 0.0

    def copy(self) -> "StateField":
        return StateField(self.grid, self.u.copy(), self.v.copy(),
                          self.theta.copy(), self.d.copy(), self.pi.copy(), self.t)

    def director_norm_defect(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.d, axis=-1) - 1.0)))

    def max_speed(self) -> float:
        return max(float(np.max(np.abs(self.u))), float(np.max(np.abs(self.v))))

    @classmethod
    def constant(cls, grid: Grid, theta_star: float, d_star) -> "StateField":
        d = np.zeros((grid.Nx, grid.Ny, 2))
        d[:, :, 0] = d_star[0]
        d[:, :, 1] = d_star[1]
        return cls(grid=grid,
                   u=np.zeros((grid.Nx + 1, grid.Ny)),
                   v=np.zeros((grid.Nx, grid.Ny + 1)),
                   theta=np.full(grid.shape, float(theta_star)),
                   d=d, pi=np.zeros(grid.shape), t=0.0)


@dataclass(frozen=True)
class StepConfig:
    dt: float
    t_end: float
    cfl_safety: float = 0.9
    renormalize_director: bool = True
    isothermal: bool = False
    theta_floor: float = 1e-10
    output_every: float = 0.1
    snapshot_every: float = 0.0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise SolverError("dt must be positive")
        if not (0.0 < self.cfl_safety <= 1.0):
            raise SolverError("cfl_safety must lie in (0, 1]")
        if self.t_end < 0.0:
            raise SolverError("t_end must be nonnegative")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    amplitude: float = 0.02
    seed: int = 1234
    theta_star: float = 1.5
    d_angle: float = 0.0


SCENARIOS = ("equilibrium_perturbation", "taylor_green_director", "random_smooth")


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def _director_from_angle(grid: Grid, angle_field) -> np.ndarray:
    d = np.empty((grid.Nx, grid.Ny, 2))
    d[:, :, 0] = np.cos(angle_field)
    d[:, :, 1] = np.sin(angle_field)
    return d


def initialize(grid: Grid, material: MaterialModel,
               scenario: ScenarioConfig, theta_floor: float = 1e-10) -> StateField:
    """Build the initial state for a named scenario.

    The velocity is projected to the discretely divergence-free space, the
    director is normalized cell-wise, and positivity of theta is enforced.
    """
    if scenario.name not in SCENARIOS:
        raise SolverError(f"unknown scenario {scenario.name!r}; "
                          f"available: {', '.join(SCENARIOS)}")
    amp = float(scenario.amplitude)
    th0 = float(scenario.theta_star)
    xc, yc = grid.xc(), grid.yc()
    xn, yn = grid.x_nodes(), grid.y_nodes()

    if scenario.name == "equilibrium_perturbation":
        theta = th0 * (1.0 + amp * (np.cos(np.pi * xc / grid.Lx)
                                    + 0.5 * np.cos(np.pi * yc / grid.Ly)))
        angle = scenario.d_angle + amp * (np.cos(np.pi * yc / grid.Ly)
                                          + 0.5 * np.cos(np.pi * xc / grid.Lx))
        psi = 0.5 * amp * (np.sin(np.pi * xn / grid.Lx) ** 2
                           * np.sin(np.pi * yn / grid.Ly) ** 2)
    elif scenario.name == "taylor_green_director":
        theta = np.full(grid.shape, th0)
        angle = scenario.d_angle + 0.0 * xc + 0.0 * yc
        psi = amp * np.sin(np.pi * xn / grid.Lx) * np.sin(np.pi * yn / grid.Ly)
    else:  # random_smooth
        rng_t = make_rng(scenario.seed, stream=1)
        rng_d = make_rng(scenario.seed, stream=2)
        rng_u = make_rng(scenario.seed, stream=3)
        theta = th0 * (1.0 + amp * smooth_cosine_field(xc, yc, grid.Lx, grid.Ly, rng_t))
        angle = scenario.d_angle + amp * smooth_cosine_field(xc, yc, grid.Lx, grid.Ly, rng_d)
        window = (np.sin(np.pi * xn / grid.Lx) ** 2
                  * np.sin(np.pi * yn / grid.Ly) ** 2)
        psi = 0.5 * amp * window * smooth_cosine_field(xn, yn, grid.Lx, grid.Ly, rng_u)

    theta = np.broadcast_to(theta, grid.shape).copy()
    if np.min(theta) < theta_floor:
        raise SolverError(
            f"initial temperature falls below the floor "
            f"({np.min(theta)} < {theta_floor})")
    angle = np.broadcast_to(angle, grid.shape)
    d = _director_from_angle(grid, angle)
    d /= np.linalg.norm(d, axis=-1, keepdims=True)

    u, v = gr.curl_of_streamfunction(grid, np.broadcast_to(psi, (grid.Nx + 1, grid.Ny + 1)))
    state = StateField(grid=grid, u=u, v=v, theta=theta, d=d,
                       pi=np.zeros(grid.shape), t=0.0)
    project_velocity(state)
    return state


def project_velocity(state: StateField, rtol: float = CG_RTOL) -> None:
    """Project (u, v) onto the discretely divergence-free space in place.

    Solves the all-Neumann pressure Poisson problem with mean-free right
    side; the boundary (no-slip) faces are untouched.
    """
    g = state.grid
    div = gr.divergence(g, state.u, state.v)
    ones_fx = np.ones((g.Nx - 1, g.Ny))
    ones_fy = np.ones((g.Nx, g.Ny - 1))

    def poisson(phi):
        return -gr.laplace_neumann(g, phi)

    diag = gr.helmholtz_diagonal(g, 0.0, ones_fx, ones_fy)
    phi = cg(poisson, -div, x0=None, diag=diag, rtol=rtol,
             remove_mean=True, label="projection poisson")
    gx, gy = gr.grad_to_faces(g, phi)
    state.u -= gx
    state.v -= gy


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

_SIMPLIFIED_ZERO = ("mu_V", "mu_D", "mu_P", "mu_L", "mu_0", "alpha_1")


@dataclass
class _StepFields:
    """Old-time-level quantities shared by the sub-steps of one step."""

    grad_d: np.ndarray
    tau: np.ndarray
    lam: np.ndarray
    gam: np.ndarray
    kappa: np.ndarray
    alpha: np.ndarray
    mu_c: np.ndarray
    mu_n: np.ndarray
    uc: np.ndarray
    vc: np.ndarray


class Stepper:
    """One-writer integrator; sub-steps ordered director -> theta -> velocity."""

    def __init__(self, grid: Grid, material: MaterialModel, cfg: StepConfig):
        self.grid = grid
        self.material = material
        self.cfg = cfg
        self.last_drift = 0.0
        for name in _SIMPLIFIED_ZERO:
            rule = material.params.rule(name)
            if not (rule.form == "constant" and rule.coeffs[0] == 0.0):
                raise SolverError(
                    f"the integrator evolves the simplified dynamics: parameter "
                    f"{name} must be the constant 0 rule, got {rule!r}")
        g = grid
        self._ones_fx = np.ones((g.Nx - 1, g.Ny))
        self._ones_fy = np.ones((g.Nx, g.Ny - 1))
        self._diag_p = gr.helmholtz_diagonal(g, 0.0, self._ones_fx, self._ones_fy)
        self._pi_prev: Optional[np.ndarray] = None   # for warm-start extrapolation

    # -- shared old-time fields ----------------------------------------------

    def _fields(self, state: StateField) -> _StepFields:
        g = self.grid
        mat = self.material
        zeros = np.zeros(g.shape)
        grad_d = gr.grad_center_vec(g, state.d)
        tau = 0.5 * np.einsum("xyik,xyik->xy", grad_d, grad_d)
        mu_c = mat.params.mu_s(state.theta, tau) + zeros
        return _StepFields(
            grad_d=grad_d, tau=tau,
            lam=mat.lam(state.theta, tau) + zeros,
            gam=mat.params.gamma(state.theta, tau) + zeros,
            kappa=mat.kappa(state.theta, tau) + zeros,
            alpha=mat.params.alpha_0(state.theta, tau) + zeros,
            mu_c=mu_c, mu_n=gr.cells_to_nodes(mu_c),
            uc=gr.interp_u_to_centers(state.u),
            vc=gr.interp_v_to_centers(state.v))

    # -- guards ---------------------------------------------------------------

    def cfl_limit(self, state: StateField, fields: Optional[_StepFields] = None) -> float:
        g = self.grid
        f = fields if fields is not None else self._fields(state)
        h = min(g.dx, g.dy)
        mu_max = float(np.max(f.mu_c))
        limit = self.material.rho * h * h / (4.0 * mu_max) if mu_max > 0 else np.inf
        speed = state.max_speed()
        if speed > 0.0:
            limit = min(limit, h / speed)
        return self.cfg.cfl_safety * limit

    # -- sub-steps --------------------------------------------------------------

    def director_step(self, state: StateField, dt: float,
                      fields: Optional[_StepFields] = None
                      ) -> Tuple[np.ndarray, np.ndarray, float]:
        """Semi-implicit director update.

        Returns (d_new, Dt_d, drift): the updated field, the discrete rate
        of director change (before any renormalization), and the
        pre-normalization defect max | |d| - 1 |.
        """
        g = self.grid
        f = fields if fields is not None else self._fields(state)
        cfx, cfy = gr.face_coefficients(f.lam)
        sfx, sfy = gr.scale_face_coefficients(g, cfx, cfy, trailing=1)
        a_cell = f.gam / dt
        diag = gr.helmholtz_diagonal(g, a_cell, cfx, cfy)[:, :, None]

        advection = gr.advect_center_vec(g, state.d, f.uc, f.vc)
        explicit = (gr.div_flux_scaled(state.d, sfx, sfy)
                    + (f.lam * 2.0 * f.tau)[:, :, None] * state.d
                    - f.gam[:, :, None] * advection)
        a3 = a_cell[:, :, None]

        def op(x):
            return a3 * x - gr.div_flux_scaled(x, sfx, sfy)

        delta = cg(op, explicit, x0=None, diag=diag, rtol=CG_RTOL,
                   label="director diffusion")
        d_new = state.d + delta
        dt_d = delta / dt + advection
        drift = float(np.max(np.abs(np.linalg.norm(d_new, axis=-1) - 1.0)))
        if self.cfg.renormalize_director:
            d_new = d_new / np.linalg.norm(d_new, axis=-1, keepdims=True)
        return d_new, dt_d, drift

    def temperature_step(self, state: StateField, d_new: np.ndarray,
                         dt_d: np.ndarray, dt: float,
                         fields: Optional[_StepFields] = None) -> np.ndarray:
        """Semi-implicit heat update with all sources explicit.

        The elastic exchange terms are contracted against the midpoint
        director gradient, and the couple flux div(lam grad_d . Dt d) uses a
        conservative zero-wall-flux stencil, so their cell sums telescope.
        """
        g = self.grid
        mat = self.material
        rho = mat.rho
        f = fields if fields is not None else self._fields(state)
        if np.min(f.kappa) <= 0.0:
            raise SolverAbort("heat capacity nonpositive on the grid", state.t, state)
        grad_d_new = gr.grad_center_vec(g, d_new)
        grad_d_mid = 0.5 * (f.grad_d + grad_d_new)

        diss = 2.0 * f.mu_c * gr.strain_sq_at_centers(g, state.u, state.v)

        # elastic work  - theta lam (grad_d grad_d^T) : D
        D = gr.strain_at_centers(g, state.u, state.v)
        work = state.theta * f.lam * np.einsum(
            "xyab,xycb,xyac->xy", f.grad_d, f.grad_d, D)

        # - rho (d_tau eps) grad_d : Dt grad_d, midpoint contraction
        dte = mat.dtau_epsilon(state.theta, f.tau) + np.zeros(g.shape)
        dt_grad_d = ((grad_d_new - f.grad_d) / dt
                     + gr.advect_center_vec(g, f.grad_d, f.uc, f.vc))
        exchange = -rho * dte * np.einsum("xyik,xyik->xy", grad_d_mid, dt_grad_d)

        # couple flux  div(lam grad_d . Dt d)
        w = f.lam[:, :, None] * np.einsum("xyik,xyk->xyi", grad_d_mid, dt_d)
        couple = gr.div_vector_center(g, w)

        advection = rho * f.kappa * gr.advect_center(g, state.theta, f.uc, f.vc)

        a_cell = rho * f.kappa / dt
        cfx, cfy = gr.face_coefficients(f.alpha)
        sfx, sfy = gr.scale_face_coefficients(g, cfx, cfy)
        explicit = (gr.div_flux_scaled(state.theta, sfx, sfy)
                    - advection + diss - work + exchange + couple)
        diag = gr.helmholtz_diagonal(g, a_cell, cfx, cfy)

        def op(x):
            return a_cell * x - gr.div_flux_scaled(x, sfx, sfy)

        delta = cg(op, explicit, x0=None, diag=diag, rtol=CG_RTOL,
                   label="heat conduction")
        theta_new = state.theta + delta
        if float(np.min(theta_new)) < self.cfg.theta_floor:
            raise SolverAbort(
                f"temperature fell below the floor "
                f"({float(np.min(theta_new))} < {self.cfg.theta_floor})",
                state.t, state)
        return theta_new

    def momentum_step(self, state: StateField, dt: float,
                      fields: Optional[_StepFields] = None
                      ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Semi-implicit viscous solve, explicit forcing, exact projection."""
        g = self.grid
        rho = self.material.rho
        f = fields if fields is not None else self._fields(state)
        mu_c, mu_n = f.mu_c, f.mu_n

        # elastic stress divergence (explicit)
        s_e = -(state.theta * f.lam)[:, :, None, None] * np.einsum(
            "xyab,xycb->xyac", f.grad_d, f.grad_d)
        fx, fy = gr.div_tensor_to_faces(g, s_e)

        explicit_u = (gr.visc_u(g, state.u, mu_c, mu_n)
                      - rho * gr.advect_u(g, state.u, state.v)
                      + gr.transpose_visc_u(g, state.u, state.v, mu_c, mu_n)
                      + fx)
        explicit_v = (gr.visc_v(g, state.v, mu_c, mu_n)
                      - rho * gr.advect_v(g, state.u, state.v)
                      + gr.transpose_visc_v(g, state.u, state.v, mu_c, mu_n)
                      + fy)

        u_star = state.u.copy()
        v_star = state.v.copy()

        def op_u(x):
            full = np.zeros_like(state.u)
            full[1:-1, :] = x
            return rho / dt * x - gr.visc_u(g, full, mu_c, mu_n)

        def op_v(x):
            full = np.zeros_like(state.v)
            full[:, 1:-1] = x
            return rho / dt * x - gr.visc_v(g, full, mu_c, mu_n)

        diag_u = rho / dt + gr.visc_u_diagonal(g, mu_c, mu_n)
        diag_v = rho / dt + gr.visc_v_diagonal(g, mu_c, mu_n)
        u_star[1:-1, :] += cg(op_u, explicit_u, x0=None, diag=diag_u,
                              rtol=CG_RTOL, label="viscous u")
        v_star[:, 1:-1] += cg(op_v, explicit_v, x0=None, diag=diag_v,
                              rtol=CG_RTOL, label="viscous v")

        # projection: -div grad pi = -(rho/dt) div u*, then u -= (dt/rho) grad pi
        div_star = gr.divergence(g, u_star, v_star)

        def poisson(phi):
            return -gr.laplace_neumann(g, phi)

        # warm start: linear extrapolation from the last two pressures
        if self._pi_prev is not None:
            pi_guess = 2.0 * state.pi - self._pi_prev
        else:
            pi_guess = state.pi
        pi = cg(poisson, -(rho / dt) * div_star, x0=pi_guess, diag=self._diag_p,
                rtol=CG_RTOL, remove_mean=True, label="pressure poisson")
        self._pi_prev = state.pi.copy()
        gx, gy = gr.grad_to_faces(g, pi)
        u_new = u_star - dt / rho * gx
        v_new = v_star - dt / rho * gy

        div_new = gr.divergence(g, u_new, v_new)
        norm_star = float(np.sqrt(np.sum(div_star ** 2)))
        norm_new = float(np.sqrt(np.sum(div_new ** 2)))
        if norm_new > 2.0 * DIV_TOL * norm_star + 1e-300:
            raise SolverAbort(
                f"projection failed the divergence contract "
                f"({norm_new:.3e} vs {norm_star:.3e} pre-projection)",
                state.t, state)
        return u_new, v_new, pi

    # -- full step ----------------------------------------------------------------

    def step(self, state: StateField) -> StateField:
        dt = self.cfg.dt
        fields = self._fields(state)
        limit = self.cfl_limit(state, fields)
        if dt > limit:
            raise CflError(
                f"dt = {dt:.6g} exceeds the stability guard {limit:.6g} "
                f"at t = {state.t:.6g}")
        d_new, dt_d, drift = self.director_step(state, dt, fields)
        if self.cfg.isothermal:
            theta_new = state.theta.copy()
        else:
            theta_new = self.temperature_step(state, d_new, dt_d, dt, fields)
        u_new, v_new, pi = self.momentum_step(state, dt, fields)
        self.last_drift = drift
        out = StateField(grid=self.grid, u=u_new, v=v_new, theta=theta_new,
                         d=d_new, pi=pi, t=state.t + dt)
        if self.cfg.renormalize_director and out.director_norm_defect() > RENORM_TOL:
            raise SolverAbort("director renormalization contract violated",
                              out.t, out)
        return out


def nlevp_residual(grid: Grid, d: np.ndarray, a_cells: np.ndarray) -> np.ndarray:
    """Residual of the director equilibrium problem div(a grad)d + a|grad d|^2 d.

    Zero (exactly, stencil of a constant) for constant unit fields; used to
    detect director equilibria.  Homogeneous Neumann walls.
    """
    a_cells = np.broadcast_to(np.asarray(a_cells, dtype=float), grid.shape)
    cfx, cfy = gr.face_coefficients(a_cells)
    lap = gr.div_coef_grad_vec(grid, d, cfx, cfy)
    grad_d = gr.grad_center_vec(grid, d)
    two_tau = np.einsum("xyik,xyik->xy", grad_d, grad_d)
    return lap + (a_cells * two_tau)[:, :, None] * d


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    final_state: StateField
    records: List                  # diagnostics.DiagnosticsRecord series
    snapshots: List[StateField] = field(default_factory=list)


def run(material: MaterialModel, grid: Grid, scenario: ScenarioConfig,
        cfg: StepConfig) -> RunResult:
    """Integrate from the scenario's initial state to t_end.

    Emits one diagnostics record at t = 0, one per output cadence, and one
    at the final time; snapshots follow their own cadence when enabled.
    Deterministic for a fixed seed.
    """
    from .diagnostics import totals

    state = initialize(grid, material, scenario, theta_floor=cfg.theta_floor)
    stepper = Stepper(grid, material, cfg)

    records = [totals(state, material, d_drift=0.0)]
    snapshots: List[StateField] = []
    if cfg.snapshot_every > 0.0:
        snapshots.append(state.copy())

    n_steps = int(round(cfg.t_end / cfg.dt))
    next_output = cfg.output_every if cfg.output_every > 0.0 else np.inf
    next_snapshot = cfg.snapshot_every if cfg.snapshot_every > 0.0 else np.inf
    half_dt = 0.5 * cfg.dt
    for _ in range(n_steps):
        state = stepper.step(state)
        if state.t >= next_output - half_dt:
            records.append(totals(state, material, d_drift=stepper.last_drift))
            next_output += cfg.output_every
        if state.t >= next_snapshot - half_dt:
            snapshots.append(state.copy())
            next_snapshot += cfg.snapshot_every
    if records[-1].t < state.t:
        records.append(totals(state, material, d_drift=stepper.last_drift))
    return RunResult(final_state=state, records=records, snapshots=snapshots)
