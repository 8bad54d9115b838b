"""Certification of the principal linearization of the coupled theta-d system.

Freezing the coefficients at an admissible point (theta0, tau0, grad_d0, d0)
and reducing the director to its scalar shadow d_red = c(xi) . d, with
c(xi) = xi . grad_d0, yields the 2x2 second-order symbol

    A_red(xi) = [ a0|xi|^2 + a1|c|^2     -i b0 (lam0|xi|^2 + dtau_lam0 |c|^2) ]
                [ i b1 |c|^2              (lam0|xi|^2 + dtau_lam0 |c|^2)/gamma0 ]

with coefficients derived from the material:

    a0 = alpha0/(rho kappa0)            a1 = rho theta0 (dtau_eta0)^2/(gamma0 kappa0)
    b0 = theta0 dtau_eta0/(gamma0 kappa0)   b1 = rho dtau_eta0/gamma0

Because b0 * b1 * gamma0 = a1, the characteristic polynomial of A_red has

    trace = a0|xi|^2 + a1|c|^2 + (lam0|xi|^2 + dtau_lam0|c|^2)/gamma0
    det   = a0 |xi|^2 (lam0|xi|^2 + dtau_lam0|c|^2) / gamma0,

both positive whenever kappa0, lam0, gamma0, alpha0 > 0 and
lam0 + 2 tau0 dtau_lam0 > 0 (note |c(xi)|^2 <= 2 tau0 |xi|^2), so both roots
of det(z + A_red(xi)) = 0 are real and negative: the system is normally
parabolic (``check_normal_ellipticity``).

At a boundary point (normal nu, xi tangent, normal derivative of d0 zero)
the one-sided boundary ODE -E_red w'' + (z + A_red(xi)) w = 0, w'(0) = 0 has
only the trivial decaying solution iff M = E_red^{-1}(z + A_red(xi)) has no
spectrum in (-inf, 0] and its principal square root B is invertible.  E_red
is the coefficient matrix of |xi|^2 in A_red,

    E_red = [ a0   -i b0 lam0 ]
            [ 0     lam0/gamma0 ],

which realizes the exact identity det(z + A_red(xi) + w^2 E_red)
= det(z + A_red(xi + w nu)) used by ``check_ls``.

``equilibrium_spectrum`` reports the slowest decay rates of the block
linearization at a constant state: diffusion coefficient times the first
nonzero eigenvalue of the discrete Neumann Laplacian for the theta and d
blocks (closed form 2(1 - cos(pi/N))/h^2 per axis), and the smallest
eigenvalue of the discrete no-slip Stokes operator for the velocity block
(dense solve over the exactly divergence-free streamfunction basis).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .grid import Grid, curl_of_streamfunction, visc_u, visc_v
from .material import FreeEnergy, MaterialModel, ParameterSet

SPECTRUM_EXCLUSION_TOL = 1e-12    # floating-point realization of "avoids (-inf, 0]"
ORIGIN_EXCLUSION = 1e-6           # joint (z, xi) origin exclusion radius
STOKES_DENSE_LIMIT = 64           # dense eigensolve guard per axis


class SymbolCheckError(ValueError):
    """Inadmissible freeze point or ill-posed symbol-check input."""


# ---------------------------------------------------------------------------
# frozen coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrozenCoefficients:
    """Material scalars frozen at (theta0, tau0) with the local director data."""

    theta0: float
    tau0: float
    grad_d0: np.ndarray
    d0: np.ndarray
    rho: float
    kappa0: float
    lambda0: float
    dtau_lambda0: float
    gamma0: float
    alpha0: float
    dtau_eta0: float
    a0: float
    a1: float
    b0: float
    b1: float

    @property
    def n_dim(self) -> int:
        return self.d0.shape[0]


def freeze(material: MaterialModel, theta0: float, tau0: float,
           grad_d0: np.ndarray, d0: np.ndarray) -> FrozenCoefficients:
    """Evaluate and validate all frozen scalars at (theta0, tau0).

    Raises SymbolCheckError when the point violates the parabolicity
    requirements (kappa, lambda, gamma, alpha positive and
    lambda + 2 tau dtau_lambda > 0) or the director data is inconsistent
    (|d0| != 1, grad_d0 d0 != 0, or tau0 != 0.5|grad_d0|^2).
    """
    d0 = np.asarray(d0, dtype=float)
    grad_d0 = np.asarray(grad_d0, dtype=float)
    n = d0.shape[0]
    if grad_d0.shape != (n, n):
        raise SymbolCheckError(f"grad_d0 must be {n}x{n}, got {grad_d0.shape}")
    if theta0 <= 0.0 or tau0 < 0.0:
        raise SymbolCheckError(f"inadmissible freeze point theta0={theta0}, tau0={tau0}")
    if abs(np.linalg.norm(d0) - 1.0) > 1e-10:
        raise SymbolCheckError(f"|d0| = {np.linalg.norm(d0)!r}, must be 1")
    gnorm = np.linalg.norm(grad_d0)
    if np.linalg.norm(grad_d0 @ d0) > 1e-10 * (1.0 + gnorm):
        raise SymbolCheckError("grad_d0 . d0 != 0 (director gradient not tangent)")
    tau_from_grad = 0.5 * gnorm ** 2
    if abs(tau0 - tau_from_grad) > 1e-8 * max(tau0, tau_from_grad, 1e-30):
        raise SymbolCheckError(
            f"tau0={tau0} inconsistent with 0.5|grad_d0|^2={tau_from_grad}")

    rho = material.rho
    kappa0 = float(material.kappa(theta0, tau0))
    lam0 = float(material.lam(theta0, tau0))
    dtau_lam0 = float(material.dtau_lam(theta0, tau0))
    gamma0 = float(material.params.gamma(theta0, tau0))
    alpha0 = float(material.params.alpha_0(theta0, tau0))
    dtau_eta0 = float(material.dtau_eta(theta0, tau0))

    for name, value in (("kappa0", kappa0), ("lambda0", lam0),
                        ("gamma0", gamma0), ("alpha0", alpha0)):
        if not np.isfinite(value) or value <= 0.0:
            raise SymbolCheckError(
                f"freeze point violates positivity: {name} = {value} "
                f"at theta0={theta0}, tau0={tau0}")
    if lam0 + 2.0 * tau0 * dtau_lam0 <= 0.0:
        raise SymbolCheckError(
            f"freeze point violates lambda + 2 tau dtau_lambda > 0 "
            f"({lam0 + 2.0 * tau0 * dtau_lam0} at theta0={theta0}, tau0={tau0})")

    return FrozenCoefficients(
        theta0=float(theta0), tau0=float(tau0), grad_d0=grad_d0, d0=d0, rho=rho,
        kappa0=kappa0, lambda0=lam0, dtau_lambda0=dtau_lam0, gamma0=gamma0,
        alpha0=alpha0, dtau_eta0=dtau_eta0,
        a0=alpha0 / (rho * kappa0),
        a1=rho * theta0 * dtau_eta0 ** 2 / (gamma0 * kappa0),
        b0=theta0 * dtau_eta0 / (gamma0 * kappa0),
        b1=rho * dtau_eta0 / gamma0,
    )


# ---------------------------------------------------------------------------
# reduced symbol
# ---------------------------------------------------------------------------

@dataclass
class ReducedSymbol:
    xi: np.ndarray
    c_xi: np.ndarray            # c(xi) = xi . grad_d0
    c_sq: float                 # |c(xi)|^2
    matrix: np.ndarray          # 2x2 complex A_red(xi)
    e_red: np.ndarray           # 2x2 complex boundary coefficient E_red


def _symbol_entries(fc: FrozenCoefficients, xi: np.ndarray):
    xi = np.asarray(xi, dtype=float)
    q = float(xi @ xi)
    c = xi @ fc.grad_d0
    c_sq = float(c @ c)
    L = fc.lambda0 * q + fc.dtau_lambda0 * c_sq
    return xi, q, c, c_sq, L


def e_red_matrix(fc: FrozenCoefficients) -> np.ndarray:
    """Coefficient of |xi|^2 in A_red; the boundary ODE's second-order matrix."""
    return np.array([
        [fc.a0, -1j * fc.b0 * fc.lambda0],
        [0.0, fc.lambda0 / fc.gamma0],
    ], dtype=complex)


def reduced_symbol(fc: FrozenCoefficients, xi: np.ndarray) -> ReducedSymbol:
    """The 2x2 reduced symbol A_red(xi); requires xi != 0."""
    xi, q, c, c_sq, L = _symbol_entries(fc, xi)
    if q == 0.0:
        raise SymbolCheckError("reduced symbol is undefined at xi = 0")
    a = np.array([
        [fc.a0 * q + fc.a1 * c_sq, -1j * fc.b0 * L],
        [1j * fc.b1 * c_sq, L / fc.gamma0],
    ], dtype=complex)
    return ReducedSymbol(xi=xi, c_xi=c, c_sq=c_sq, matrix=a, e_red=e_red_matrix(fc))


@dataclass
class NormalEllipticityVerdict:
    passed: bool
    roots: Tuple[complex, complex]
    reason: str = ""


def symbol_roots(fc: FrozenCoefficients, xi: np.ndarray) -> Tuple[complex, complex]:
    """The two roots of det(z + A_red(xi)) = 0 (negated eigenvalues)."""
    _, q, _, c_sq, L = _symbol_entries(fc, xi)
    tr = fc.a0 * q + fc.a1 * c_sq + L / fc.gamma0
    det = (fc.a0 * q + fc.a1 * c_sq) * L / fc.gamma0 - fc.b0 * fc.b1 * L * c_sq
    disc = complex(tr * tr - 4.0 * det)
    sq = np.sqrt(disc)
    return (-tr - sq) / 2.0, (-tr + sq) / 2.0


def check_normal_ellipticity(fc: FrozenCoefficients, xi: np.ndarray) -> NormalEllipticityVerdict:
    """Both roots of det(z + A_red(xi)) = 0 must be real and negative."""
    xi = np.asarray(xi, dtype=float)
    if float(xi @ xi) == 0.0:
        raise SymbolCheckError("normal ellipticity is checked at xi != 0")
    z1, z2 = symbol_roots(fc, xi)
    scale = max(abs(z1), abs(z2), 1e-300)
    if max(abs(z1.imag), abs(z2.imag)) > 1e-10 * scale:
        return NormalEllipticityVerdict(False, (z1, z2), "complex pair of roots")
    if max(z1.real, z2.real) >= 0.0:
        return NormalEllipticityVerdict(False, (z1, z2), "nonnegative root")
    return NormalEllipticityVerdict(True, (z1, z2))


# ---------------------------------------------------------------------------
# boundary (one-sided) condition
# ---------------------------------------------------------------------------

def principal_sqrt_2x2(m: np.ndarray) -> np.ndarray:
    """Principal matrix square root of a 2x2 complex matrix.

    Eigendecomposition when well conditioned; Schur-based fallback
    (scipy.linalg.sqrtm) for near-defective matrices.
    """
    w, vecs = np.linalg.eig(m)
    cond = np.linalg.cond(vecs)
    if np.isfinite(cond) and cond < 1e8:
        return (vecs * np.sqrt(w)) @ np.linalg.inv(vecs)
    from scipy.linalg import sqrtm
    return np.asarray(sqrtm(m), dtype=complex)


@dataclass
class LsVerdict:
    passed: bool
    m_eigs: np.ndarray
    b_eigs: np.ndarray
    min_re_eig_b: float
    min_singular_value: float
    reason: str = ""


def check_ls(fc: FrozenCoefficients, xi_tangent: np.ndarray, z: complex) -> LsVerdict:
    """Only-trivial-solution check for the boundary ODE at covariables (xi, z).

    xi_tangent has n-1 components (tangential to the wall; the normal is the
    last axis) and the freeze point must be boundary compatible: the normal
    derivative row of grad_d0 vanishes.  Requires z outside (-inf, 0] and
    (z, xi) jointly away from the origin.
    """
    n = fc.n_dim
    xi_t = np.asarray(xi_tangent, dtype=float)
    if xi_t.shape != (n - 1,):
        raise SymbolCheckError(
            f"xi_tangent must have {n - 1} components for n_dim={n}, got {xi_t.shape}")
    z = complex(z)
    xi_norm = float(np.linalg.norm(xi_t))
    if abs(z) <= ORIGIN_EXCLUSION and xi_norm <= ORIGIN_EXCLUSION:
        raise SymbolCheckError("(z, xi) must stay away from the joint origin")
    if z.real <= 0.0 and abs(z.imag) <= SPECTRUM_EXCLUSION_TOL * abs(z.real):
        raise SymbolCheckError(f"z = {z} lies on (-inf, 0]")
    gnorm = np.linalg.norm(fc.grad_d0)
    if np.linalg.norm(fc.grad_d0[n - 1, :]) > 1e-10 * (1.0 + gnorm):
        raise SymbolCheckError(
            "freeze point is not boundary compatible: normal derivative of d0 nonzero")

    xi = np.zeros(n)
    xi[: n - 1] = xi_t
    e = e_red_matrix(fc)
    if xi_norm == 0.0:
        a_matrix = np.zeros((2, 2), dtype=complex)   # pure-z case: M = z E_red^{-1}
    else:
        a_matrix = reduced_symbol(fc, xi).matrix
    det_e = e[0, 0] * e[1, 1]
    if abs(det_e) <= 1e-14 * (abs(e[0, 0]) + abs(e[1, 1]) + 1e-300) ** 2:
        raise SymbolCheckError("E_red is singular (a0 or lambda0/gamma0 vanishes)")

    m = np.linalg.solve(e, z * np.eye(2) + a_matrix)
    m_eigs = np.linalg.eigvals(m)
    for w in m_eigs:
        if w.real <= 0.0 and abs(w.imag) <= SPECTRUM_EXCLUSION_TOL * abs(w.real):
            return LsVerdict(False, m_eigs, np.array([]), float("nan"), float("nan"),
                             f"eigenvalue {w} of M lies on (-inf, 0]")
    b = principal_sqrt_2x2(m)
    b_eigs = np.linalg.eigvals(b)
    min_re = float(np.min(b_eigs.real))
    svals = np.linalg.svd(b, compute_uv=False)
    min_sv = float(svals[-1])
    if min_re <= 0.0:
        return LsVerdict(False, m_eigs, b_eigs, min_re, min_sv,
                         "B has spectrum outside the open right half plane")
    if min_sv <= 1e-10 * float(svals[0]):
        return LsVerdict(False, m_eigs, b_eigs, min_re, min_sv, "B numerically singular")
    return LsVerdict(True, m_eigs, b_eigs, min_re, min_sv)


# ---------------------------------------------------------------------------
# sampling helpers and sweeps
# ---------------------------------------------------------------------------

def sample_catalog_material(rng: np.random.Generator) -> MaterialModel:
    """Random admissible catalog material (used by sweeps and test suites)."""
    if rng.integers(2) == 0:
        fe = FreeEnergy.ideal_linear(a=rng.uniform(0.5, 3.0), k=rng.uniform(0.1, 2.0))
    else:
        fe = FreeEnergy.coupled(a=rng.uniform(0.5, 3.0), k0=rng.uniform(0.1, 1.0),
                                k1=rng.uniform(0.05, 1.0))
    params = ParameterSet.from_constants(
        mu_s=rng.uniform(0.1, 3.0), alpha_0=rng.uniform(0.2, 3.0),
        gamma=rng.uniform(0.2, 3.0), rho=rng.uniform(0.5, 2.0))
    return MaterialModel(fe, params)


def sample_director_data(rng: np.random.Generator, n_dim: int,
                         boundary: bool = False,
                         grad_scale: float = 1.0):
    """Random unit director with a tangent gradient (optionally wall compatible)."""
    d0 = rng.standard_normal(n_dim)
    d0 /= np.linalg.norm(d0)
    g = rng.standard_normal((n_dim, n_dim)) * grad_scale
    if boundary:
        g[n_dim - 1, :] = 0.0
    grad_d0 = g @ (np.eye(n_dim) - np.outer(d0, d0))
    tau0 = 0.5 * float(np.sum(grad_d0 * grad_d0))
    return d0, grad_d0, tau0


def sample_frozen(rng: np.random.Generator, n_dim: int,
                  material: Optional[MaterialModel] = None,
                  boundary: bool = False) -> FrozenCoefficients:
    mat = material if material is not None else sample_catalog_material(rng)
    d0, grad_d0, tau0 = sample_director_data(
        rng, n_dim, boundary=boundary, grad_scale=rng.uniform(0.0, 1.2))
    theta0 = rng.uniform(0.5, 3.0)
    return freeze(mat, theta0, tau0, grad_d0, d0)


def sample_ls_covariable(rng: np.random.Generator) -> complex:
    """z = r e^{i phi}, log-uniform r in [1e-3, 1e3], phi in [-pi/2, pi/2]."""
    r = 10.0 ** rng.uniform(-3.0, 3.0)
    phi = rng.uniform(-np.pi / 2.0, np.pi / 2.0)
    return r * np.exp(1j * phi)


@dataclass
class SweepRow:
    sample_id: int
    theta0: float
    tau0: float
    xi: np.ndarray
    root1: complex
    root2: complex
    min_re_eig_b: float
    passed: bool
    reason: str = ""


def symbol_sweep(n_samples: int, n_dim: int, seed: int,
                 material: Optional[MaterialModel] = None) -> List[SweepRow]:
    """Joint interior (roots) and boundary (square root) sweep.

    Each sample freezes boundary-compatible coefficients, checks normal
    ellipticity at a random full covariable, and the boundary condition at a
    random tangential covariable with z on the closed right-half-plane arc.
    """
    from .sampling import make_rng
    rng = make_rng(seed, stream=7)
    rows: List[SweepRow] = []
    for i in range(n_samples):
        xi = rng.standard_normal(n_dim)
        while float(xi @ xi) < 1e-12:
            xi = rng.standard_normal(n_dim)
        xi_t = rng.standard_normal(n_dim - 1)
        while float(xi_t @ xi_t) < 1e-12:
            xi_t = rng.standard_normal(n_dim - 1)
        z = sample_ls_covariable(rng)
        try:
            fc = sample_frozen(rng, n_dim, material=material, boundary=True)
            ne = check_normal_ellipticity(fc, xi)
            ls = check_ls(fc, xi_t, z)
            rows.append(SweepRow(
                sample_id=i, theta0=fc.theta0, tau0=fc.tau0, xi=xi,
                root1=ne.roots[0], root2=ne.roots[1],
                min_re_eig_b=ls.min_re_eig_b,
                passed=bool(ne.passed and ls.passed),
                reason=(ne.reason or ls.reason)))
        except SymbolCheckError as exc:
            # an inadmissible freeze point is itself a failed sample
            rows.append(SweepRow(
                sample_id=i, theta0=float("nan"), tau0=float("nan"), xi=xi,
                root1=complex("nan"), root2=complex("nan"),
                min_re_eig_b=float("nan"), passed=False, reason=str(exc)))
    return rows


# ---------------------------------------------------------------------------
# equilibrium decay rates
# ---------------------------------------------------------------------------

def neumann_min_eig_1d(n: int, length: float) -> float:
    """First nonzero eigenvalue of the 1D cell-centered Neumann Laplacian."""
    h = length / n
    return 2.0 * (1.0 - np.cos(np.pi / n)) / h ** 2


def stokes_min_eig(grid: Grid) -> float:
    """Smallest eigenvalue of the discrete no-slip Stokes operator -P div grad.

    Built over the streamfunction basis of exactly divergence-free MAC
    fields (psi on interior nodes, zero on the boundary) as a dense
    generalized symmetric eigenproblem.  Guarded against grids too large for
    a dense solve.
    """
    if grid.Nx > STOKES_DENSE_LIMIT or grid.Ny > STOKES_DENSE_LIMIT:
        raise SymbolCheckError(
            f"grid {grid.Nx}x{grid.Ny} too large for the dense velocity-block "
            f"eigensolve (limit {STOKES_DENSE_LIMIT} per axis)")
    nx, ny = grid.Nx, grid.Ny
    n_psi = (nx - 1) * (ny - 1)
    n_u = (nx - 1) * ny
    n_v = nx * (ny - 1)
    mu_c = np.ones((nx, ny))
    mu_n = np.ones((nx + 1, ny + 1))

    z_cols = np.zeros((n_u + n_v, n_psi))
    a_cols = np.zeros_like(z_cols)
    psi = np.zeros((nx + 1, ny + 1))
    col = 0
    for i in range(1, nx):
        for j in range(1, ny):
            psi[i, j] = 1.0
            u, v = curl_of_streamfunction(grid, psi)
            psi[i, j] = 0.0
            z_cols[:n_u, col] = u[1:-1, :].ravel()
            z_cols[n_u:, col] = v[:, 1:-1].ravel()
            a_cols[:n_u, col] = -visc_u(grid, u, mu_c, mu_n).ravel()
            a_cols[n_u:, col] = -visc_v(grid, v, mu_c, mu_n).ravel()
            col += 1
    h = z_cols.T @ a_cols
    gram = z_cols.T @ z_cols
    h = 0.5 * (h + h.T)
    from scipy.linalg import eigh
    eigs = eigh(h, gram, eigvals_only=True)
    return float(eigs[0])


@dataclass
class BlockRate:
    block: str
    coefficient: float
    discrete_eig: float
    rate: float
    continuum_eig: Optional[float]
    continuum_rate: Optional[float]


@dataclass
class SpectrumTable:
    blocks: List[BlockRate] = field(default_factory=list)

    @property
    def slowest_rate(self) -> float:
        return min(b.rate for b in self.blocks)

    def block(self, name: str) -> BlockRate:
        for b in self.blocks:
            if b.block == name:
                return b
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"{'block':<10}{'coefficient':>15}{'discrete_eig':>16}"
                 f"{'rate':>16}{'continuum_rate':>16}"]
        for b in self.blocks:
            cont = f"{b.continuum_rate:.8g}" if b.continuum_rate is not None else "-"
            lines.append(f"{b.block:<10}{b.coefficient:>15.8g}{b.discrete_eig:>16.8g}"
                         f"{b.rate:>16.8g}{cont:>16}")
        lines.append(f"slowest predicted decay rate: {self.slowest_rate:.10g}")
        return "\n".join(lines) + "\n"


def equilibrium_spectrum(material: MaterialModel, theta_star: float,
                         d_star: np.ndarray, grid: Grid) -> SpectrumTable:
    """Slowest decay rates per block of the linearization at a constant state."""
    d_star = np.asarray(d_star, dtype=float)
    if abs(np.linalg.norm(d_star) - 1.0) > 1e-10:
        raise SymbolCheckError("d_star must be a unit vector")
    rho = material.rho
    kappa = float(material.kappa(theta_star, 0.0))
    lam = float(material.lam(theta_star, 0.0))
    gamma = float(material.params.gamma(theta_star, 0.0))
    alpha = float(material.params.alpha_0(theta_star, 0.0))
    mu = float(material.params.mu_s(theta_star, 0.0))
    for name, value in (("mu_s", mu), ("alpha_0", alpha), ("gamma", gamma),
                        ("kappa", kappa), ("lambda", lam)):
        if value <= 0.0:
            raise SymbolCheckError(
                f"equilibrium state fails the stability conditions: {name} = {value}")

    nu_disc = min(neumann_min_eig_1d(grid.Nx, grid.Lx),
                  neumann_min_eig_1d(grid.Ny, grid.Ly))
    nu_cont = min((np.pi / grid.Lx) ** 2, (np.pi / grid.Ly) ** 2)
    sigma_u = stokes_min_eig(grid)

    table = SpectrumTable()
    table.blocks.append(BlockRate("velocity", mu / rho, sigma_u,
                                  mu / rho * sigma_u, None, None))
    table.blocks.append(BlockRate("theta", alpha / (rho * kappa), nu_disc,
                                  alpha / (rho * kappa) * nu_disc, nu_cont,
                                  alpha / (rho * kappa) * nu_cont))
    table.blocks.append(BlockRate("director", lam / gamma, nu_disc,
                                  lam / gamma * nu_disc, nu_cont,
                                  lam / gamma * nu_cont))
    return table
