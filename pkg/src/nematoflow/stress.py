"""Point-wise constitutive tensors and entropy-production scalars.

Conventions (used consistently across the package):

    (grad_u)[i, j] = du_j / dx_i          (grad_d)[i, j] = dd_j / dx_i
    2D = grad_u + grad_u^T                2V = grad_u - grad_u^T
    P_d = I - d (x) d                     tau = 0.5 * |grad_d|_F^2

All functions broadcast over leading batch axes, so a whole grid of points
evaluates in one call; the trailing one or two axes are the tensor indices.
Every function is pure.  Operations that require a unit director assert
| |d| - 1 | <= unit_tol (default 1e-10) and raise instead of silently
projecting, so solver drift cannot hide here.

The dissipative stress satisfies the contraction identity

    S_diss : grad_u = S_diss : D
        = 2 (mu_P/gamma) (n | P_d D d) + (mu_L + mu_P^2/gamma) |P_d D d|^2
          + mu_0 (D d | d)^2

whenever the supplied rate-of-director-change is tangent (Dt_d . d = 0);
``diss_entropy_identity`` returns both sides for verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .material import MaterialModel, MaterialError, ParameterSet, ThermoState

DEFAULT_UNIT_TOL = 1e-10


def _require_unit(d: np.ndarray, unit_tol: float) -> None:
    norms = np.linalg.norm(d, axis=-1)
    worst = float(np.max(np.abs(norms - 1.0)))
    if worst > unit_tol:
        raise MaterialError(
            f"director must be unit length: max | |d|-1 | = {worst:.3e} > {unit_tol:.1e}")


def _coef(p: ParameterSet, name: str, s: ThermoState):
    return np.asarray(p.rule(name)(s.theta, s.tau), dtype=float)


def _vec(c):
    return np.asarray(c)[..., None]


def _mat(c):
    return np.asarray(c)[..., None, None]


def tangent_projector(d: np.ndarray) -> np.ndarray:
    """P_d = I - d (x) d."""
    d = np.asarray(d, dtype=float)
    n = d.shape[-1]
    eye = np.eye(n)
    return eye - np.einsum("...i,...j->...ij", d, d)


def decompose_gradient(grad_u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Split a square gradient into symmetric D and antisymmetric V parts."""
    g = np.asarray(grad_u, dtype=float)
    if g.shape[-1] != g.shape[-2]:
        raise MaterialError(f"grad_u must be square, got shape {g.shape}")
    gt = np.swapaxes(g, -1, -2)
    return 0.5 * (g + gt), 0.5 * (g - gt)


def newton_stress(p: ParameterSet, s: ThermoState, D: np.ndarray, div_u) -> np.ndarray:
    """S_N = 2 mu_s D + mu_b (div u) I."""
    D = np.asarray(D, dtype=float)
    n = D.shape[-1]
    mu_s = _coef(p, "mu_s", s)
    mu_b = _coef(p, "mu_b", s)
    return (2.0 * _mat(mu_s) * D
            + _mat(mu_b * np.asarray(div_u)) * np.eye(n))


def ericksen_stress(lam, theta, grad_d: np.ndarray) -> np.ndarray:
    """S_E = -theta * lam * grad_d grad_d^T (negative semidefinite)."""
    g = np.asarray(grad_d, dtype=float)
    m = np.einsum("...ik,...jk->...ij", g, g)
    return -_mat(np.asarray(theta) * np.asarray(lam)) * m


def a_vector(lam, grad_d: np.ndarray, lap_weighted_d: np.ndarray,
             d: np.ndarray, unit_tol: float = DEFAULT_UNIT_TOL) -> np.ndarray:
    """Tangential elastic force a = div(lam grad) d + lam |grad_d|^2 d.

    ``lap_weighted_d`` is the caller-supplied div(lam grad) d (discrete or
    analytic).  For field-consistent inputs a . d vanishes; with discrete
    stencils it is O(dx^2), so no orthogonality is enforced here.
    """
    _require_unit(d, unit_tol)
    g = np.asarray(grad_d, dtype=float)
    two_tau = np.einsum("...ij,...ij->...", g, g)
    return np.asarray(lap_weighted_d) + _vec(np.asarray(lam) * two_tau) * d


def n_vector(p: ParameterSet, s: ThermoState, V: np.ndarray, D: np.ndarray,
             d: np.ndarray, Dt_d: np.ndarray,
             unit_tol: float = DEFAULT_UNIT_TOL) -> np.ndarray:
    """n = mu_V V d + mu_D P_d D d - gamma Dt_d."""
    _require_unit(d, unit_tol)
    Vd = np.einsum("...ij,...j->...i", np.asarray(V, dtype=float), d)
    Dd = np.einsum("...ij,...j->...i", np.asarray(D, dtype=float), d)
    PdDd = Dd - _vec(np.einsum("...i,...i->...", Dd, d)) * d
    return (_vec(_coef(p, "mu_V", s)) * Vd
            + _vec(_coef(p, "mu_D", s)) * PdDd
            - _vec(_coef(p, "gamma", s)) * np.asarray(Dt_d))


def stretch_stress(p: ParameterSet, s: ThermoState, n_vec: np.ndarray,
                   d: np.ndarray, unit_tol: float = DEFAULT_UNIT_TOL) -> np.ndarray:
    """S_stretch = (mu_D+mu_V)/(2 gamma) n(x)d + (mu_D-mu_V)/(2 gamma) d(x)n."""
    _require_unit(d, unit_tol)
    mu_D = _coef(p, "mu_D", s)
    mu_V = _coef(p, "mu_V", s)
    gam = _coef(p, "gamma", s)
    nd = np.einsum("...i,...j->...ij", np.asarray(n_vec), d)
    dn = np.swapaxes(nd, -1, -2)
    return _mat((mu_D + mu_V) / (2.0 * gam)) * nd + _mat((mu_D - mu_V) / (2.0 * gam)) * dn


def dissipative_stress(p: ParameterSet, s: ThermoState, n_vec: np.ndarray,
                       d: np.ndarray, D: np.ndarray,
                       unit_tol: float = DEFAULT_UNIT_TOL) -> np.ndarray:
    """Symmetric dissipative Leslie stress.

    S_diss = (mu_P/gamma)(n(x)d + d(x)n)
             + (gamma mu_L + mu_P^2)/(2 gamma) (P_d D d (x) d + d (x) P_d D d)
             + mu_0 (D d | d) d (x) d
    """
    _require_unit(d, unit_tol)
    mu_P = _coef(p, "mu_P", s)
    mu_L = _coef(p, "mu_L", s)
    mu_0 = _coef(p, "mu_0", s)
    gam = _coef(p, "gamma", s)
    Dd = np.einsum("...ij,...j->...i", np.asarray(D, dtype=float), d)
    Dd_d = np.einsum("...i,...i->...", Dd, d)
    PdDd = Dd - _vec(Dd_d) * d
    nd = np.einsum("...i,...j->...ij", np.asarray(n_vec), d)
    pd = np.einsum("...i,...j->...ij", PdDd, d)
    dd = np.einsum("...i,...j->...ij", d, d)
    return (_mat(mu_P / gam) * (nd + np.swapaxes(nd, -1, -2))
            + _mat((gam * mu_L + mu_P ** 2) / (2.0 * gam)) * (pd + np.swapaxes(pd, -1, -2))
            + _mat(mu_0 * Dd_d) * dd)


def diss_entropy_identity(p: ParameterSet, s: ThermoState, n_vec: np.ndarray,
                          d: np.ndarray, D: np.ndarray, grad_u: np.ndarray,
                          unit_tol: float = DEFAULT_UNIT_TOL):
    """Both sides of the dissipative-stress contraction identity."""
    S = dissipative_stress(p, s, n_vec, d, D, unit_tol)
    lhs = np.einsum("...ij,...ij->...", S, np.asarray(grad_u, dtype=float))
    mu_P = _coef(p, "mu_P", s)
    mu_L = _coef(p, "mu_L", s)
    mu_0 = _coef(p, "mu_0", s)
    gam = _coef(p, "gamma", s)
    Dd = np.einsum("...ij,...j->...i", np.asarray(D, dtype=float), d)
    Dd_d = np.einsum("...i,...i->...", Dd, d)
    PdDd = Dd - _vec(Dd_d) * d
    rhs = (2.0 * (mu_P / gam) * np.einsum("...i,...i->...", np.asarray(n_vec), PdDd)
           + (mu_L + mu_P ** 2 / gam) * np.einsum("...i,...i->...", PdDd, PdDd)
           + mu_0 * Dd_d ** 2)
    return lhs, rhs


def heat_flux(p: ParameterSet, s: ThermoState, grad_theta: np.ndarray,
              d: np.ndarray, unit_tol: float = DEFAULT_UNIT_TOL) -> np.ndarray:
    """q = -alpha_0 grad theta - alpha_1 (d . grad theta) d."""
    _require_unit(d, unit_tol)
    gt = np.asarray(grad_theta, dtype=float)
    a0 = _coef(p, "alpha_0", s)
    a1 = _coef(p, "alpha_1", s)
    return -_vec(a0) * gt - _vec(a1 * np.einsum("...i,...i->...", d, gt)) * d


def entropy_production(p: ParameterSet, s: ThermoState, D: np.ndarray, div_u,
                       grad_theta: np.ndarray, d: np.ndarray,
                       lap_weighted_d: np.ndarray,
                       unit_tol: float = DEFAULT_UNIT_TOL):
    """Entropy production r >= 0 (under the consistency set).

    theta * r = [alpha_0 |grad theta|^2 + alpha_1 (d . grad theta)^2] / theta
                + 2 mu_s |D|^2 + mu_b (div u)^2
                + |P_d div(lam grad) d - mu_P P_d D d|^2 / gamma
                + mu_L |P_d D d|^2 + mu_0 (D d | d)^2
    """
    _require_unit(d, unit_tol)
    theta = np.asarray(s.theta, dtype=float)
    if not np.all(theta > 0.0):
        raise MaterialError("entropy production requires theta > 0")
    gt = np.asarray(grad_theta, dtype=float)
    D = np.asarray(D, dtype=float)
    a0 = _coef(p, "alpha_0", s)
    a1 = _coef(p, "alpha_1", s)
    mu_s = _coef(p, "mu_s", s)
    mu_b = _coef(p, "mu_b", s)
    mu_P = _coef(p, "mu_P", s)
    mu_L = _coef(p, "mu_L", s)
    mu_0 = _coef(p, "mu_0", s)
    gam = _coef(p, "gamma", s)

    d_gt = np.einsum("...i,...i->...", d, gt)
    heat = (a0 * np.einsum("...i,...i->...", gt, gt) + a1 * d_gt ** 2) / theta
    Dd = np.einsum("...ij,...j->...i", D, d)
    Dd_d = np.einsum("...i,...i->...", Dd, d)
    PdDd = Dd - _vec(Dd_d) * d
    lap = np.asarray(lap_weighted_d, dtype=float)
    Pd_lap = lap - _vec(np.einsum("...i,...i->...", lap, d)) * d
    w = Pd_lap - _vec(mu_P) * PdDd
    theta_r = (heat
               + 2.0 * mu_s * np.einsum("...ij,...ij->...", D, D)
               + mu_b * np.asarray(div_u) ** 2
               + np.einsum("...i,...i->...", w, w) / gam
               + mu_L * np.einsum("...i,...i->...", PdDd, PdDd)
               + mu_0 * Dd_d ** 2)
    return theta_r / theta


def available_dissipation(p: ParameterSet, s: ThermoState, D: np.ndarray, div_u,
                          d: np.ndarray, lap_weighted_d: np.ndarray,
                          unit_tol: float = DEFAULT_UNIT_TOL):
    """Dissipation rate of the available energy (isothermal Lyapunov decay).

    r_a = 2 mu_s |D|^2 + mu_b (div u)^2 + mu_0 (D d | d)^2 + mu_L |P_d D d|^2
          + |P_d (div(lam grad) d - mu_P D d)|^2 / gamma

    Equals theta * r minus the conductive term when theta is constant.
    """
    _require_unit(d, unit_tol)
    D = np.asarray(D, dtype=float)
    mu_s = _coef(p, "mu_s", s)
    mu_b = _coef(p, "mu_b", s)
    mu_P = _coef(p, "mu_P", s)
    mu_L = _coef(p, "mu_L", s)
    mu_0 = _coef(p, "mu_0", s)
    gam = _coef(p, "gamma", s)
    Dd = np.einsum("...ij,...j->...i", D, d)
    Dd_d = np.einsum("...i,...i->...", Dd, d)
    PdDd = Dd - _vec(Dd_d) * d
    lap = np.asarray(lap_weighted_d, dtype=float)
    Pd_lap = lap - _vec(np.einsum("...i,...i->...", lap, d)) * d
    w = Pd_lap - _vec(mu_P) * PdDd
    return (2.0 * mu_s * np.einsum("...ij,...ij->...", D, D)
            + mu_b * np.asarray(div_u) ** 2
            + mu_0 * Dd_d ** 2
            + mu_L * np.einsum("...i,...i->...", PdDd, PdDd)
            + np.einsum("...i,...i->...", w, w) / gam)


# ---------------------------------------------------------------------------
# bundled evaluation
# ---------------------------------------------------------------------------

@dataclass
class KinematicPoint:
    """Local kinematic data at one point (or a batch of points)."""

    grad_u: np.ndarray
    d: np.ndarray
    grad_d: np.ndarray
    Dt_d: np.ndarray
    theta: np.ndarray
    grad_theta: np.ndarray
    tau: np.ndarray

    @classmethod
    def make(cls, grad_u, d, grad_d, Dt_d, theta, grad_theta,
             unit_tol: float = DEFAULT_UNIT_TOL) -> "KinematicPoint":
        d = np.asarray(d, dtype=float)
        grad_d = np.asarray(grad_d, dtype=float)
        _require_unit(d, unit_tol)
        tau = 0.5 * np.einsum("...ij,...ij->...", grad_d, grad_d)
        return cls(grad_u=np.asarray(grad_u, dtype=float), d=d, grad_d=grad_d,
                   Dt_d=np.asarray(Dt_d, dtype=float),
                   theta=np.asarray(theta, dtype=float),
                   grad_theta=np.asarray(grad_theta, dtype=float), tau=tau)


@dataclass
class StressBundle:
    """All constitutive tensors and production scalars at a point batch."""

    D: np.ndarray
    V: np.ndarray
    S_N: np.ndarray
    S_E: np.ndarray
    S_stretch: np.ndarray
    S_diss: np.ndarray
    n_vec: np.ndarray
    a_vec: np.ndarray
    q: np.ndarray
    r: np.ndarray
    r_a: np.ndarray

    @property
    def total_stress(self) -> np.ndarray:
        return self.S_N + self.S_E + self.S_stretch + self.S_diss


def assemble_bundle(material: MaterialModel, kin: KinematicPoint,
                    lap_weighted_d: np.ndarray,
                    unit_tol: float = DEFAULT_UNIT_TOL) -> StressBundle:
    """Evaluate the full stress bundle from kinematic data.

    ``lap_weighted_d`` is div(lam grad) d supplied by the caller (the solver
    provides its discrete stencil; tests provide analytic values).
    """
    p = material.params
    s = ThermoState(theta=kin.theta, tau=np.maximum(kin.tau, 0.0), rho=material.rho)
    D, V = decompose_gradient(kin.grad_u)
    div_u = np.einsum("...ii->...", np.asarray(kin.grad_u, dtype=float))
    lam = material.lam(kin.theta, kin.tau)
    nv = n_vector(p, s, V, D, kin.d, kin.Dt_d, unit_tol)
    return StressBundle(
        D=D, V=V,
        S_N=newton_stress(p, s, D, div_u),
        S_E=ericksen_stress(lam, kin.theta, kin.grad_d),
        S_stretch=stretch_stress(p, s, nv, kin.d, unit_tol),
        S_diss=dissipative_stress(p, s, nv, kin.d, D, unit_tol),
        n_vec=nv,
        a_vec=a_vector(lam, kin.grad_d, lap_weighted_d, kin.d, unit_tol),
        q=heat_flux(p, s, kin.grad_theta, kin.d, unit_tol),
        r=entropy_production(p, s, D, div_u, kin.grad_theta, kin.d,
                             lap_weighted_d, unit_tol),
        r_a=available_dissipation(p, s, D, div_u, kin.d, lap_weighted_d, unit_tol),
    )
