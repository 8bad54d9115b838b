"""Free-energy catalog, parameter functions, and thermodynamic relations.

The free energy psi(theta, tau, rho) generates every constitutive scalar:

    eta   = -d_theta psi                 (entropy per mass)
    eps   = psi + theta * eta            (internal energy per mass)
    kappa = d_theta eps = -theta * d2_theta psi      (heat capacity)
    lam   = rho * d_tau psi / theta      (director elasticity coefficient)
    pi    = rho^2 * d_rho psi            (thermodynamic pressure)

Here theta > 0 is absolute temperature, tau = 0.5 * |grad d|^2 >= 0 is the
director-distortion scalar, and rho > 0 is the (constant) mass density.

Catalog forms
-------------
ideal_linear :  psi = -a*theta*(ln theta - 1) + k*theta*tau/rho
    kappa = a and lam = k are constants, d_tau eps = 0.  The minimal model
    with a temperature-director coupling.
coupled      :  psi = -a*theta*(ln theta - 1) + (k0 + k1*theta)*tau/rho
    d_tau eps = k0/rho != 0, so distortion changes internal energy and every
    term of the heat equation is active.  lam = k0/theta + k1.

Custom forms can be built from a plain callable; any partial derivative not
supplied analytically falls back to centered finite differences with step
h = max(1, |x|) * eps_machine**(1/3) per variable (five-point formula for
second derivatives).  The fallback is accurate to ~1e-10 relative for first
derivatives but only ~1e-5 for second derivatives; catalog forms ship
analytic partials throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

EPS = np.finfo(float).eps
FD_STEP = EPS ** (1.0 / 3.0)


class MaterialError(ValueError):
    """Invalid material data or an inadmissible thermodynamic state."""


class EvaluationError(ArithmeticError):
    """A constitutive rule produced a non-finite or inadmissible value."""


def _check_finite(value, what: str, state) -> None:
    if not np.all(np.isfinite(value)):
        raise EvaluationError(f"{what} is non-finite at state {state}")


# ---------------------------------------------------------------------------
# thermodynamic state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThermoState:
    """Point (or field) in the admissible thermodynamic domain.

    theta : temperature > 0
    tau   : 0.5*|grad d|^2 >= 0
    rho   : density > 0
    """

    theta: float
    tau: float
    rho: float = 1.0

    def __post_init__(self):
        if not np.all(np.asarray(self.theta) > 0.0):
            raise MaterialError(f"theta must be positive, got {self.theta}")
        if not np.all(np.asarray(self.tau) >= 0.0):
            raise MaterialError(f"tau must be nonnegative, got {self.tau}")
        if not np.all(np.asarray(self.rho) > 0.0):
            raise MaterialError(f"rho must be positive, got {self.rho}")


# ---------------------------------------------------------------------------
# free energy
# ---------------------------------------------------------------------------

def _fd1(f: Callable, x: float, step_scale: float):
    h = np.maximum(1.0, np.abs(x)) * step_scale
    return (f(x + h) - f(x - h)) / (2.0 * h)


def _fd2(f: Callable, x: float, step_scale: float):
    # five-point second derivative
    h = np.maximum(1.0, np.abs(x)) * step_scale
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x)
            + 16 * f(x - h) - f(x - 2 * h)) / (12.0 * h * h)


def _fd_mixed(f: Callable, x: float, y: float, step_scale: float):
    hx = np.maximum(1.0, np.abs(x)) * step_scale
    hy = np.maximum(1.0, np.abs(y)) * step_scale
    return (f(x + hx, y + hy) - f(x + hx, y - hy)
            - f(x - hx, y + hy) + f(x - hx, y - hy)) / (4.0 * hx * hy)


@dataclass
class FreeEnergy:
    """Free energy psi(theta, tau, rho) with its first and second partials.

    ``partials`` may supply any of the keys
    d_theta, d_tau, d_rho, d2_theta, d_theta_tau, d2_tau;
    missing entries are differentiated numerically with relative step
    ``fd_step``.
    """

    name: str
    coefficients: Dict[str, float]
    psi_fn: Callable
    partials: Dict[str, Callable] = field(default_factory=dict)
    fd_step: float = FD_STEP

    def psi(self, theta, tau, rho=1.0):
        value = self.psi_fn(theta, tau, rho)
        _check_finite(value, f"psi[{self.name}]", (theta, tau, rho))
        return value

    def _partial(self, key: str, fallback: Callable, theta, tau, rho):
        fn = self.partials.get(key)
        value = fn(theta, tau, rho) if fn is not None else fallback()
        _check_finite(value, f"{key} psi[{self.name}]", (theta, tau, rho))
        return value

    def d_theta(self, theta, tau, rho=1.0):
        return self._partial(
            "d_theta",
            lambda: _fd1(lambda t: self.psi_fn(t, tau, rho), theta, self.fd_step),
            theta, tau, rho)

    def d_tau(self, theta, tau, rho=1.0):
        return self._partial(
            "d_tau",
            lambda: _fd1(lambda s: self.psi_fn(theta, s, rho), tau, self.fd_step),
            theta, tau, rho)

    def d_rho(self, theta, tau, rho=1.0):
        return self._partial(
            "d_rho",
            lambda: _fd1(lambda r: self.psi_fn(theta, tau, r), rho, self.fd_step),
            theta, tau, rho)

    def d2_theta(self, theta, tau, rho=1.0):
        return self._partial(
            "d2_theta",
            lambda: _fd2(lambda t: self.psi_fn(t, tau, rho), theta, self.fd_step),
            theta, tau, rho)

    def d_theta_tau(self, theta, tau, rho=1.0):
        return self._partial(
            "d_theta_tau",
            lambda: _fd_mixed(lambda t, s: self.psi_fn(t, s, rho), theta, tau, self.fd_step),
            theta, tau, rho)

    def d2_tau(self, theta, tau, rho=1.0):
        return self._partial(
            "d2_tau",
            lambda: _fd2(lambda s: self.psi_fn(theta, s, rho), tau, self.fd_step),
            theta, tau, rho)

    # -- catalog ------------------------------------------------------------

    @classmethod
    def ideal_linear(cls, a: float = 2.0, k: float = 0.5) -> "FreeEnergy":
        """psi = -a*theta*(ln theta - 1) + k*theta*tau/rho."""
        return cls(
            name="ideal_linear",
            coefficients={"a": float(a), "k": float(k)},
            psi_fn=lambda th, ta, rho: -a * th * (np.log(th) - 1.0) + k * th * ta / rho,
            partials={
                "d_theta": lambda th, ta, rho: -a * np.log(th) + k * ta / rho,
                "d_tau": lambda th, ta, rho: k * th / rho + 0.0 * ta,
                "d_rho": lambda th, ta, rho: -k * th * ta / rho ** 2,
                "d2_theta": lambda th, ta, rho: -a / th + 0.0 * ta,
                "d_theta_tau": lambda th, ta, rho: k / rho + 0.0 * th,
                "d2_tau": lambda th, ta, rho: 0.0 * th + 0.0 * ta,
            },
        )

    @classmethod
    def coupled(cls, a: float = 2.0, k0: float = 0.3, k1: float = 0.2) -> "FreeEnergy":
        """psi = -a*theta*(ln theta - 1) + (k0 + k1*theta)*tau/rho."""
        return cls(
            name="coupled",
            coefficients={"a": float(a), "k0": float(k0), "k1": float(k1)},
            psi_fn=lambda th, ta, rho: (-a * th * (np.log(th) - 1.0)
                                        + (k0 + k1 * th) * ta / rho),
            partials={
                "d_theta": lambda th, ta, rho: -a * np.log(th) + k1 * ta / rho,
                "d_tau": lambda th, ta, rho: (k0 + k1 * th) / rho,
                "d_rho": lambda th, ta, rho: -(k0 + k1 * th) * ta / rho ** 2,
                "d2_theta": lambda th, ta, rho: -a / th + 0.0 * ta,
                "d_theta_tau": lambda th, ta, rho: k1 / rho + 0.0 * th,
                "d2_tau": lambda th, ta, rho: 0.0 * th + 0.0 * ta,
            },
        )

    @classmethod
    def from_callable(cls, name: str, psi_fn: Callable,
                      partials: Optional[Dict[str, Callable]] = None,
                      fd_step: float = FD_STEP,
                      coefficients: Optional[Dict[str, float]] = None) -> "FreeEnergy":
        """Wrap a plain psi(theta, tau, rho) callable; FD fills missing partials."""
        return cls(name=name, coefficients=dict(coefficients or {}),
                   psi_fn=psi_fn, partials=dict(partials or {}), fd_step=fd_step)


FREE_ENERGY_CATALOG = {
    "ideal_linear": (FreeEnergy.ideal_linear, ("a", "k")),
    "coupled": (FreeEnergy.coupled, ("a", "k0", "k1")),
}


def free_energy_from_name(name: str, **coeffs) -> FreeEnergy:
    if name not in FREE_ENERGY_CATALOG:
        raise MaterialError(
            f"unknown free energy {name!r}; catalog: {sorted(FREE_ENERGY_CATALOG)}")
    ctor, keys = FREE_ENERGY_CATALOG[name]
    unknown = set(coeffs) - set(keys)
    if unknown:
        raise MaterialError(f"free energy {name!r} does not take {sorted(unknown)}")
    return ctor(**coeffs)


# ---------------------------------------------------------------------------
# thermodynamic relations derived from psi
# ---------------------------------------------------------------------------

def entropy(fe: FreeEnergy, s: ThermoState):
    """eta = -d_theta psi."""
    return -fe.d_theta(s.theta, s.tau, s.rho)


def internal_energy(fe: FreeEnergy, s: ThermoState):
    """eps = psi + theta * eta."""
    return fe.psi(s.theta, s.tau, s.rho) + s.theta * entropy(fe, s)


def heat_capacity(fe: FreeEnergy, s: ThermoState):
    """kappa = -theta * d2_theta psi; must be positive on admissible states."""
    kappa = -s.theta * fe.d2_theta(s.theta, s.tau, s.rho)
    if not np.all(kappa > 0.0):
        raise EvaluationError(
            f"heat capacity nonpositive ({kappa}) at theta={s.theta}, tau={s.tau}")
    return kappa


def lambda_coeff(fe: FreeEnergy, s: ThermoState):
    """lam = rho * d_tau psi / theta; must be positive on admissible states."""
    lam = s.rho * fe.d_tau(s.theta, s.tau, s.rho) / s.theta
    if not np.all(lam > 0.0):
        raise EvaluationError(
            f"director coefficient lam nonpositive ({lam}) at theta={s.theta}, tau={s.tau}")
    return lam


def pressure(fe: FreeEnergy, s: ThermoState):
    """pi = rho^2 * d_rho psi (used by consistency checks only)."""
    return s.rho ** 2 * fe.d_rho(s.theta, s.tau, s.rho)


def drho_pressure(fe: FreeEnergy, s: ThermoState):
    """d_rho pi by centered differencing of pi (no third psi-partial needed)."""
    def pi_of_rho(r):
        return r ** 2 * fe.d_rho(s.theta, s.tau, r)
    return _fd1(pi_of_rho, s.rho, fe.fd_step)


# ---------------------------------------------------------------------------
# parameter functions mu_j, alpha_j, gamma of (theta, tau)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamRule:
    """Named analytic scalar rule of (theta, tau); vectorizes over arrays.

    Forms: constant(c); affine(c0, c_theta, c_tau); arrhenius(prefactor,
    activation) = prefactor * exp(activation / theta).
    """

    form: str
    coeffs: tuple

    def __call__(self, theta, tau):
        if self.form == "constant":
            (c,) = self.coeffs
            return c + 0.0 * theta + 0.0 * tau
        if self.form == "affine":
            c0, ct, cs = self.coeffs
            return c0 + ct * theta + cs * tau
        if self.form == "arrhenius":
            pre, act = self.coeffs
            return pre * np.exp(act / theta) + 0.0 * tau
        raise MaterialError(f"unknown parameter rule form {self.form!r}")

    @classmethod
    def constant(cls, c: float) -> "ParamRule":
        return cls("constant", (float(c),))

    @classmethod
    def affine(cls, c0: float, c_theta: float = 0.0, c_tau: float = 0.0) -> "ParamRule":
        return cls("affine", (float(c0), float(c_theta), float(c_tau)))

    @classmethod
    def arrhenius(cls, prefactor: float, activation: float) -> "ParamRule":
        return cls("arrhenius", (float(prefactor), float(activation)))

    def __repr__(self):
        args = ", ".join(f"{c:g}" for c in self.coeffs)
        return f"{self.form}({args})"


PARAM_NAMES = ("mu_s", "mu_b", "mu_V", "mu_D", "mu_P", "mu_L", "mu_0",
               "alpha_0", "alpha_1", "gamma")


@dataclass
class ParameterSet:
    """Viscosity/conductivity/relaxation rules plus density and dimension."""

    mu_s: ParamRule
    mu_b: ParamRule
    mu_V: ParamRule
    mu_D: ParamRule
    mu_P: ParamRule
    mu_L: ParamRule
    mu_0: ParamRule
    alpha_0: ParamRule
    alpha_1: ParamRule
    gamma: ParamRule
    rho: float = 1.0
    n_dim: int = 2

    def __post_init__(self):
        if self.rho <= 0.0:
            raise MaterialError(f"rho must be positive, got {self.rho}")
        if self.n_dim not in (2, 3):
            raise MaterialError(f"n_dim must be 2 or 3, got {self.n_dim}")

    @classmethod
    def from_constants(cls, *, mu_s=1.0, mu_b=0.0, mu_V=0.0, mu_D=0.0, mu_P=0.0,
                       mu_L=0.0, mu_0=0.0, alpha_0=1.0, alpha_1=0.0, gamma=1.0,
                       rho=1.0, n_dim=2) -> "ParameterSet":
        def rule(v):
            return v if isinstance(v, ParamRule) else ParamRule.constant(v)
        return cls(mu_s=rule(mu_s), mu_b=rule(mu_b), mu_V=rule(mu_V),
                   mu_D=rule(mu_D), mu_P=rule(mu_P), mu_L=rule(mu_L),
                   mu_0=rule(mu_0), alpha_0=rule(alpha_0), alpha_1=rule(alpha_1),
                   gamma=rule(gamma), rho=float(rho), n_dim=int(n_dim))

    def rule(self, name: str) -> ParamRule:
        if name not in PARAM_NAMES:
            raise MaterialError(f"unknown parameter {name!r}")
        return getattr(self, name)


@dataclass
class MaterialModel:
    """Free energy plus parameter rules; every constitutive scalar lives here.

    Methods vectorize over (theta, tau) arrays; rho is the constant density
    from the parameter set.
    """

    free_energy: FreeEnergy
    params: ParameterSet

    @property
    def rho(self) -> float:
        return self.params.rho

    def psi(self, theta, tau):
        return self.free_energy.psi(theta, tau, self.rho)

    def eta(self, theta, tau):
        return -self.free_energy.d_theta(theta, tau, self.rho)

    def epsilon(self, theta, tau):
        return self.psi(theta, tau) + theta * self.eta(theta, tau)

    def kappa(self, theta, tau):
        return -theta * self.free_energy.d2_theta(theta, tau, self.rho)

    def lam(self, theta, tau):
        return self.rho * self.free_energy.d_tau(theta, tau, self.rho) / theta

    def dtau_lam(self, theta, tau):
        return self.rho * self.free_energy.d2_tau(theta, tau, self.rho) / theta

    def dtau_eta(self, theta, tau):
        return -self.free_energy.d_theta_tau(theta, tau, self.rho)

    def dtau_epsilon(self, theta, tau):
        # d_tau eps = d_tau psi + theta * d_tau eta
        return (self.free_energy.d_tau(theta, tau, self.rho)
                + theta * self.dtau_eta(theta, tau))

    @classmethod
    def default(cls) -> "MaterialModel":
        return cls(FreeEnergy.ideal_linear(), ParameterSet.from_constants())


# ---------------------------------------------------------------------------
# Oseen-Frank distortion energy (evaluator only, 3D)
# ---------------------------------------------------------------------------

def oseen_frank_density(d: np.ndarray, grad_d: np.ndarray, k: tuple) -> float:
    """Distortion energy k1*(div d)^2 + k2*|d x curl d|^2 + k3*(d . curl d)^2
    + (k2 + k4)*(tr((grad d)^2) - (div d)^2).

    Convention: grad_d[i, j] = d_i d_j / d x_i, so div d = trace(grad_d) and
    (curl d)_k = eps_kij grad_d[i, j].  Requires |d| = 1 within 1e-12.
    """
    d = np.asarray(d, dtype=float)
    g = np.asarray(grad_d, dtype=float)
    if d.shape != (3,) or g.shape != (3, 3):
        raise MaterialError("oseen_frank_density expects a 3-vector and a 3x3 gradient")
    if abs(np.linalg.norm(d) - 1.0) > 1e-12:
        raise MaterialError(f"director must be unit length, |d| = {np.linalg.norm(d)!r}")
    k1, k2, k3, k4 = k
    div_d = np.trace(g)
    curl = np.array([g[1, 2] - g[2, 1], g[2, 0] - g[0, 2], g[0, 1] - g[1, 0]])
    d_dot_curl = float(d @ curl)
    d_cross_curl = np.cross(d, curl)
    tr_g2 = float(np.einsum("ij,ji->", g, g))
    return (k1 * div_d ** 2 + k2 * float(d_cross_curl @ d_cross_curl)
            + k3 * d_dot_curl ** 2 + (k2 + k4) * (tr_g2 - div_d ** 2))
