"""Numerical certification of the parameter-function inequalities.

Two families of conditions are certified on a sampled (theta, tau[, rho])
box:

* the non-strict consistency set, which guarantees nonnegative entropy
  production:
      mu_s >= 0,  2 mu_s + n mu_b >= 0,  alpha_0 >= 0,  alpha_0 + alpha_1 >= 0,
      mu_0 >= 0,  mu_L >= 0,  gamma > 0;
* the strict stability set, which makes the constant states attracting:
      mu_s, 2 mu_s + n mu_b, alpha_0, alpha_0 + alpha_1, gamma > 0,
      kappa > 0,  lambda > 0,  d_rho pi > 0,
  extended by the parabolicity condition lambda + 2 tau d_tau lambda > 0
  required by the director equation.

A refined (weaker) pair replaces mu_0, mu_L >= 0 when negative Leslie
coefficients are desired:
      2 mu_s + mu_L >= 0,   2 mu_s + mu_0 >= 0,
with, for compressible modeling, additionally
      mu_0^2/n^2 <= (2 mu_s + mu_0) (2 mu_s/n + mu_b + mu_0/n^2).
The refined rows are reported but do not gate the verdict.

Sampling is a deterministic Halton sequence over the requested box, plus the
box corners and center; for affine parameter rules the corner points attain
the true minimum, so enlarging the box can never turn a fail into a pass.
Strict inequalities pass only with slack > 1e-12 * (scale of the terms).

The proportionality mu_V = c0 * gamma needed for angular-momentum flux
closure is fitted by least squares and reported with its worst residual.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .material import FreeEnergy, MaterialModel, ParameterSet, MaterialError, _fd1
from .sampling import halton, scale_box

STRICT_REL_TOL = 1e-12

CONSISTENCY_IDS = ("mu_s", "two_mu_s_plus_n_mu_b", "alpha_0", "alpha_0+alpha_1",
                   "mu_0", "mu_L", "gamma")
REFINED_IDS = ("two_mu_s_plus_mu_L", "two_mu_s_plus_mu_0", "compressible_refined")
STABILITY_IDS = ("mu_s", "two_mu_s_plus_n_mu_b", "alpha_0", "alpha_0+alpha_1",
                 "gamma", "kappa", "lambda", "lambda_well_posed", "drho_pi")
# rows whose defining inequality is strict regardless of the requested mode
NATIVE_STRICT = ("gamma", "kappa", "lambda", "lambda_well_posed", "drho_pi")


@dataclass(frozen=True)
class SamplingSpec:
    """Box and resolution for the consistency sweep.

    rho_range activates the density-dependent rows (drho_pi) and extends the
    sample points to three dimensions; without it the constant params.rho is
    used and drho_pi is skipped.
    """

    theta_range: Tuple[float, float] = (0.5, 3.0)
    tau_range: Tuple[float, float] = (0.0, 2.0)
    rho_range: Optional[Tuple[float, float]] = None
    n_samples: int = 4096
    seed_offset: int = 0

    def __post_init__(self):
        for name, (lo, hi) in (("theta_range", self.theta_range),
                               ("tau_range", self.tau_range)):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise MaterialError(f"empty or invalid {name}: ({lo}, {hi})")
        if self.theta_range[0] <= 0.0:
            raise MaterialError("theta_range must be positive")
        if self.tau_range[0] < 0.0:
            raise MaterialError("tau_range must be nonnegative")
        if self.rho_range is not None and self.rho_range[0] <= 0.0:
            raise MaterialError("rho_range must be positive")
        if self.n_samples < 1:
            raise MaterialError("n_samples must be at least 1")


@dataclass
class InequalityResult:
    inequality_id: str
    set_name: str                     # "consistency" | "stability" | "refined"
    min_slack: float
    arg_min_theta: float
    arg_min_tau: float
    arg_min_rho: float
    scale: float
    skipped: bool = False

    @property
    def native_strict(self) -> bool:
        return self.inequality_id in NATIVE_STRICT

    @property
    def pass_nonstrict(self) -> bool:
        return self.min_slack >= -STRICT_REL_TOL * self.scale

    @property
    def pass_strict(self) -> bool:
        return self.min_slack > STRICT_REL_TOL * self.scale

    def passed(self, strict_mode: bool) -> bool:
        if self.skipped:
            return True
        if strict_mode or self.native_strict:
            return self.pass_strict
        return self.pass_nonstrict


@dataclass
class ConsistencyReport:
    material_name: str
    n_dim: int
    spec: SamplingSpec
    n_points: int
    rows: List[InequalityResult] = field(default_factory=list)
    c0_estimate: float = 0.0
    c0_residual: float = 0.0

    def row(self, inequality_id: str) -> InequalityResult:
        for r in self.rows:
            if r.inequality_id == inequality_id:
                return r
        raise KeyError(inequality_id)

    def failed_ids(self, strict: bool = False) -> List[str]:
        gate = STABILITY_IDS if strict else CONSISTENCY_IDS
        return [r.inequality_id for r in self.rows
                if r.inequality_id in gate and not r.skipped and not r.passed(strict)]

    def consistent(self, strict: bool = False) -> bool:
        return not self.failed_ids(strict)

    def to_text(self, strict: bool = False) -> str:
        mode = "strict (stability)" if strict else "non-strict (consistency)"
        out = io.StringIO()
        out.write(f"consistency report: material={self.material_name} "
                  f"n_dim={self.n_dim} points={self.n_points}\n")
        out.write(f"box: theta={self.spec.theta_range} tau={self.spec.tau_range}"
                  f" rho={self.spec.rho_range}\n")
        out.write(f"{'inequality':<24}{'set':<13}{'min_slack':>24}"
                  f"{'at_theta':>12}{'at_tau':>12}{'pass':>7}\n")
        for r in self.rows:
            if r.skipped:
                out.write(f"{r.inequality_id:<24}{r.set_name:<13}"
                          f"{'(skipped: no rho_range)':>55}\n")
                continue
            out.write(f"{r.inequality_id:<24}{r.set_name:<13}{r.min_slack:>24.17g}"
                      f"{r.arg_min_theta:>12.5g}{r.arg_min_tau:>12.5g}"
                      f"{str(r.passed(strict)):>7}\n")
        out.write(f"c0 fit: mu_V = {self.c0_estimate:.17g} * gamma "
                  f"(max residual {self.c0_residual:.17g})\n")
        verdict = "CONSISTENT" if self.consistent(strict) else "INCONSISTENT"
        out.write(f"verdict [{mode}]: {verdict}\n")
        if not self.consistent(strict):
            out.write("failed: " + ", ".join(self.failed_ids(strict)) + "\n")
        return out.getvalue()

    def csv_rows(self, strict: bool = False) -> List[list]:
        rows = [["inequality_id", "min_slack", "arg_min_theta", "arg_min_tau", "pass"]]
        for r in self.rows:
            if r.skipped:
                continue
            rows.append([r.inequality_id, r.min_slack, r.arg_min_theta,
                         r.arg_min_tau, r.passed(strict)])
        return rows


def _sample_points(spec: SamplingSpec, rho_const: float):
    """Halton points plus box corners and center; rho column always present."""
    with_rho = spec.rho_range is not None
    dim = 3 if with_rho else 2
    lo = [spec.theta_range[0], spec.tau_range[0]]
    hi = [spec.theta_range[1], spec.tau_range[1]]
    if with_rho:
        lo.append(spec.rho_range[0])
        hi.append(spec.rho_range[1])
    pts = scale_box(halton(spec.n_samples, dim, offset=spec.seed_offset), lo, hi)
    corners01 = np.array(np.meshgrid(*([[0.0, 1.0]] * dim), indexing="ij"),
                         dtype=float).reshape(dim, -1).T
    extra = np.vstack([corners01, np.full((1, dim), 0.5)])
    pts = np.vstack([pts, scale_box(extra, lo, hi)])
    theta, tau = pts[:, 0], pts[:, 1]
    rho = pts[:, 2] if with_rho else np.full_like(theta, rho_const)
    return theta, tau, rho


def check_consistency(fe: FreeEnergy, p: ParameterSet,
                      spec: SamplingSpec = SamplingSpec()) -> ConsistencyReport:
    """Evaluate every inequality on the sampled box and report minimum slacks."""
    theta, tau, rho = _sample_points(spec, p.rho)
    n = p.n_dim

    vals = {name: np.broadcast_to(np.asarray(p.rule(name)(theta, tau), dtype=float),
                                  theta.shape)
            for name in ("mu_s", "mu_b", "mu_V", "mu_D", "mu_P", "mu_L", "mu_0",
                         "alpha_0", "alpha_1", "gamma")}
    for name, v in vals.items():
        if not np.all(np.isfinite(v)):
            raise MaterialError(f"parameter rule {name} returned non-finite values")

    kappa = -theta * fe.d2_theta(theta, tau, rho)
    lam = rho * fe.d_tau(theta, tau, rho) / theta
    dtau_lam = rho * fe.d2_tau(theta, tau, rho) / theta

    report = ConsistencyReport(material_name=fe.name, n_dim=n, spec=spec,
                               n_points=theta.size)

    def add(inequality_id, set_name, slack, scale, skipped=False):
        slack = np.broadcast_to(np.asarray(slack, dtype=float), theta.shape)
        scale = np.broadcast_to(np.asarray(scale, dtype=float), theta.shape)
        i = int(np.argmin(slack))
        report.rows.append(InequalityResult(
            inequality_id=inequality_id, set_name=set_name,
            min_slack=float(slack[i]), arg_min_theta=float(theta[i]),
            arg_min_tau=float(tau[i]), arg_min_rho=float(rho[i]),
            scale=float(np.max(scale)) + 1e-300, skipped=skipped))

    mu_s, mu_b = vals["mu_s"], vals["mu_b"]
    mu_0, mu_L = vals["mu_0"], vals["mu_L"]
    a0, a1 = vals["alpha_0"], vals["alpha_1"]
    gam = vals["gamma"]

    add("mu_s", "consistency", mu_s, np.abs(mu_s))
    add("two_mu_s_plus_n_mu_b", "consistency", 2 * mu_s + n * mu_b,
        2 * np.abs(mu_s) + n * np.abs(mu_b))
    add("alpha_0", "consistency", a0, np.abs(a0))
    add("alpha_0+alpha_1", "consistency", a0 + a1, np.abs(a0) + np.abs(a1))
    add("mu_0", "consistency", mu_0, np.abs(mu_0))
    add("mu_L", "consistency", mu_L, np.abs(mu_L))
    add("gamma", "consistency", gam, np.abs(gam))

    add("two_mu_s_plus_mu_L", "refined", 2 * mu_s + mu_L,
        2 * np.abs(mu_s) + np.abs(mu_L))
    add("two_mu_s_plus_mu_0", "refined", 2 * mu_s + mu_0,
        2 * np.abs(mu_s) + np.abs(mu_0))
    prod = (2 * mu_s + mu_0) * (2 * mu_s / n + mu_b + mu_0 / n ** 2)
    add("compressible_refined", "refined", prod - mu_0 ** 2 / n ** 2,
        np.abs(prod) + mu_0 ** 2 / n ** 2)

    add("kappa", "stability", kappa, np.abs(kappa))
    add("lambda", "stability", lam, np.abs(lam))
    add("lambda_well_posed", "stability", lam + 2 * tau * dtau_lam,
        np.abs(lam) + 2 * tau * np.abs(dtau_lam))
    if spec.rho_range is not None:
        def pi_of_rho(r):
            return r ** 2 * fe.d_rho(theta, tau, r)
        drho_pi = _fd1(pi_of_rho, rho, fe.fd_step)
        add("drho_pi", "stability", drho_pi, np.abs(drho_pi))
    else:
        add("drho_pi", "stability", np.nan, 0.0, skipped=True)

    gam_sq = float(np.sum(gam * gam))
    c0 = float(np.sum(vals["mu_V"] * gam)) / gam_sq if gam_sq > 0.0 else 0.0
    report.c0_estimate = c0
    report.c0_residual = float(np.max(np.abs(vals["mu_V"] - c0 * gam)))
    return report


def check_material(material: MaterialModel,
                   spec: SamplingSpec = SamplingSpec()) -> ConsistencyReport:
    return check_consistency(material.free_energy, material.params, spec)
