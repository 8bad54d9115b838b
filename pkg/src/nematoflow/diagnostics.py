"""Discrete functionals: conserved totals, Lyapunov quantities, rate fits.

Quadrature is the cell-midpoint sum everywhere (second order on the
staggered layout); face velocities are averaged to centers before use.  All
reductions use numpy's pairwise summation in a fixed order, so repeated
evaluation of the same state is bit-identical.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, TYPE_CHECKING

import numpy as np

from . import grid as gr
from . import stress
from .material import MaterialModel, ThermoState

if TYPE_CHECKING:  # pragma: no cover
    from .solver import StateField


class NoFitError(RuntimeError):
    """The decay-rate fit window contains too few usable samples."""


CSV_COLUMNS = ("t", "mass", "energy", "entropy", "available_energy",
               "entropy_production", "d_drift", "u_l2", "grad_theta_l2",
               "grad_d_l2", "theta_min", "theta_max", "div_u_max")

# diagnostics evaluate the constitutive formulas on the actual discrete
# director, which may carry drift when renormalization is disabled
DIAG_UNIT_TOL = 1e-3


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    entropy: float
    available_energy: float
    entropy_production: float
    d_drift: float
    u_l2: float
    grad_theta_l2: float
    grad_d_l2: float
    theta_min: float
    theta_max: float
    div_u_max: float
    equilibrium_distance: Optional[float] = None   # not part of the CSV schema

    def csv_values(self) -> List[float]:
        return [getattr(self, name) for name in CSV_COLUMNS]

    @classmethod
    def from_csv_values(cls, values: Sequence[float]) -> "DiagnosticsRecord":
        return cls(**dict(zip(CSV_COLUMNS, (float(v) for v in values))))


def totals(state: "StateField", material: MaterialModel,
           d_drift: float = 0.0) -> DiagnosticsRecord:
    """Evaluate every diagnostic functional of a state."""
    g = state.grid
    vol = g.cell_volume
    rho = material.rho

    uc = gr.interp_u_to_centers(state.u)
    vc = gr.interp_v_to_centers(state.v)
    speed_sq = uc ** 2 + vc ** 2

    grad_d = gr.grad_center_vec(g, state.d)
    tau = 0.5 * np.einsum("xyik,xyik->xy", grad_d, grad_d)
    grad_theta = gr.grad_center(g, state.theta)

    eps = material.epsilon(state.theta, tau) + np.zeros(g.shape)
    eta = material.eta(state.theta, tau) + np.zeros(g.shape)
    psi = material.psi(state.theta, tau) + np.zeros(g.shape)

    lam = material.lam(state.theta, tau) + np.zeros(g.shape)
    cfx, cfy = gr.face_coefficients(lam)
    lap_d = gr.div_coef_grad_vec(g, state.d, cfx, cfy)
    div_u = gr.divergence(g, state.u, state.v)
    D = gr.strain_at_centers(g, state.u, state.v)
    s = ThermoState(theta=state.theta, tau=tau, rho=rho)
    r = stress.entropy_production(material.params, s, D, div_u, grad_theta,
                                  state.d, lap_d, unit_tol=DIAG_UNIT_TOL)

    return DiagnosticsRecord(
        t=float(state.t),
        mass=float(rho * np.sum(np.ones(g.shape)) * vol),
        energy=float(rho * np.sum(0.5 * speed_sq + eps) * vol),
        entropy=float(rho * np.sum(eta) * vol),
        available_energy=float(rho * np.sum(0.5 * speed_sq + psi) * vol),
        entropy_production=float(np.sum(r) * vol),
        d_drift=float(d_drift),
        u_l2=float(np.sqrt(np.sum(speed_sq) * vol)),
        grad_theta_l2=float(np.sqrt(np.sum(grad_theta ** 2) * vol)),
        grad_d_l2=float(np.sqrt(np.sum(grad_d ** 2) * vol)),
        theta_min=float(np.min(state.theta)),
        theta_max=float(np.max(state.theta)),
        div_u_max=float(np.max(np.abs(div_u))),
        equilibrium_distance=equilibrium_distance(state),
    )


def equilibrium_distance(state: "StateField",
                         reference: Optional[Tuple[float, np.ndarray]] = None) -> float:
    """Discrete distance ||u|| + ||theta - theta*|| + ||d - d*|| + ||grad d||.

    Without a reference, (mean theta, normalized mean d) of the state is
    used, which is the constant state the flow relaxes toward.
    """
    g = state.grid
    vol = g.cell_volume
    if reference is None:
        theta_star = float(np.mean(state.theta))
        d_mean = np.mean(state.d, axis=(0, 1))
        norm = np.linalg.norm(d_mean)
        d_star = d_mean / norm if norm > 0.0 else np.array([1.0, 0.0])
    else:
        theta_star, d_star = reference
        d_star = np.asarray(d_star, dtype=float)
    uc = gr.interp_u_to_centers(state.u)
    vc = gr.interp_v_to_centers(state.v)
    grad_d = gr.grad_center_vec(g, state.d)
    u_l2 = np.sqrt(np.sum(uc ** 2 + vc ** 2) * vol)
    theta_l2 = np.sqrt(np.sum((state.theta - theta_star) ** 2) * vol)
    d_l2 = np.sqrt(np.sum((state.d - d_star) ** 2) * vol)
    gd_l2 = np.sqrt(np.sum(grad_d ** 2) * vol)
    return float(u_l2 + theta_l2 + d_l2 + gd_l2)


def fit_decay_rate(times: Sequence[float], values: Sequence[float],
                   window: Tuple[float, float] = (1e-8, 1e-2),
                   min_samples: int = 10) -> Tuple[float, float]:
    """Least-squares exponential rate of a decaying positive series.

    Fits log(value) over the samples whose value lies inside ``window`` and
    returns (rate, rms residual); the rate is positive for decay.  Raises
    NoFitError when the window holds fewer than ``min_samples`` points or
    the series does not decay there.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    mask = (v >= window[0]) & (v <= window[1]) & (v > 0.0)
    if int(np.sum(mask)) < min_samples:
        raise NoFitError(
            f"only {int(np.sum(mask))} samples inside the fit window "
            f"[{window[0]:g}, {window[1]:g}] (need {min_samples})")
    tw, logv = t[mask], np.log(v[mask])
    slope, intercept = np.polyfit(tw, logv, 1)
    if slope >= 0.0:
        raise NoFitError(f"series does not decay inside the window (slope {slope:g})")
    residual = float(np.sqrt(np.mean((logv - (slope * tw + intercept)) ** 2)))
    return float(-slope), residual


# ---------------------------------------------------------------------------
# second variation of the entropy functional at an equilibrium
# ---------------------------------------------------------------------------

@dataclass
class PerturbationTriple:
    """Density, temperature, and director perturbation fields (cell-centered)."""

    sigma: Optional[np.ndarray]
    vartheta: Optional[np.ndarray]
    delta: Optional[np.ndarray]     # (Nx, Ny, m)


def second_variation(material: MaterialModel, rho_star: float, theta_star: float,
                     p: PerturbationTriple, grid: gr.Grid,
                     incompressible: bool = True) -> float:
    """Quadrature of the stability quadratic form at a constant equilibrium.

    value = integral of (d_rho pi / (rho theta*)) sigma^2
            + (kappa/theta*^2) vartheta^2 + lam |grad delta|^2;
    the sigma term is dropped in incompressible mode.  Nonnegative whenever
    the material satisfies the strict stability conditions at (theta*, 0);
    a warning is attached otherwise and the value still returned.
    """
    vol = grid.cell_volume
    kappa = float(material.kappa(theta_star, 0.0))
    lam = float(material.lam(theta_star, 0.0))
    if kappa <= 0.0 or lam <= 0.0:
        warnings.warn(
            f"material fails the stability conditions at the equilibrium "
            f"(kappa={kappa}, lam={lam}); the form may be indefinite",
            stacklevel=2)
    value = 0.0
    if p.vartheta is not None:
        value += float(np.sum((kappa / theta_star ** 2) * p.vartheta ** 2) * vol)
    if p.delta is not None:
        grad_delta = gr.grad_center_vec(grid, p.delta)
        value += float(np.sum(lam * grad_delta ** 2) * vol)
    if p.sigma is not None and not incompressible:
        from .material import drho_pressure
        drho_pi = float(drho_pressure(material.free_energy,
                                      ThermoState(theta_star, 0.0, rho_star)))
        if drho_pi <= 0.0:
            warnings.warn(f"d_rho pi = {drho_pi} <= 0 at the equilibrium",
                          stacklevel=2)
        value += float(np.sum((drho_pi / (rho_star * theta_star)) * p.sigma ** 2) * vol)
    return value


# ---------------------------------------------------------------------------
# post-hoc defect audit of a diagnostics series
# ---------------------------------------------------------------------------

@dataclass
class DefectSummary:
    max_energy_defect: float          # max |E(t) - E(0)| / |E(0)|
    mass_defect: float                # max |M(t) - M(0)|
    min_entropy_increment: float
    entropy_violations: List[Tuple[int, float]]   # (record index, increment)
    max_available_energy_increment: float
    entropy_increments: np.ndarray


def energy_identity_defect(records: Sequence[DiagnosticsRecord],
                           entropy_tol: float = 0.0) -> DefectSummary:
    """Conservation/monotonicity audit of a diagnostics series.

    Requires at least two records.  Entropy increments more negative than
    ``entropy_tol`` are flagged with the index of the record where the
    decrease registers.
    """
    if len(records) < 2:
        raise ValueError("need at least two records to audit a series")
    t = np.array([r.t for r in records])
    if np.any(np.diff(t) <= 0.0):
        raise ValueError("record times must be strictly increasing")
    energy = np.array([r.energy for r in records])
    mass = np.array([r.mass for r in records])
    ent = np.array([r.entropy for r in records])
    avail = np.array([r.available_energy for r in records])
    scale = abs(energy[0]) if energy[0] != 0.0 else 1.0
    increments = np.diff(ent)
    violations = [(int(k + 1), float(inc)) for k, inc in enumerate(increments)
                  if inc < -entropy_tol]
    return DefectSummary(
        max_energy_defect=float(np.max(np.abs(energy - energy[0])) / scale),
        mass_defect=float(np.max(np.abs(mass - mass[0]))),
        min_entropy_increment=float(np.min(increments)),
        entropy_violations=violations,
        max_available_energy_increment=float(np.max(np.diff(avail))),
        entropy_increments=increments,
    )
