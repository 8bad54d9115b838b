"""Staggered (MAC) grid layout and discrete operators on a rectangle.

Layout, with i the x-index and j the y-index (arrays are indexed [i, j]):

    u[i, j]  x-velocity at vertical faces   (i*dx,       (j+0.5)*dy),  shape (Nx+1, Ny)
    v[i, j]  y-velocity at horizontal faces ((i+0.5)*dx, j*dy),        shape (Nx, Ny+1)
    c[i, j]  cell-centered scalars          ((i+0.5)*dx, (j+0.5)*dy),  shape (Nx, Ny)

On the MAC grid the discrete divergence and gradient are exact negative
adjoints, so the pressure projection removes the divergence to the accuracy
of the Poisson solve and no checkerboard mode exists.

Boundary realization (second-order):
  * no-slip velocity: normal faces on the boundary carry 0 and stay 0;
    tangential components use odd ghost reflection u_ghost = -u_interior;
  * homogeneous Neumann scalars: mirrored ghost cells (edge copy), which
    makes every wall flux of a flux-form operator vanish identically;
  * corner ghosts are the double reflection implied by composing the two
    edge rules (numpy edge padding handles this).

All operators are allocation-light slicing expressions; none mutate inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform rectangle [0, Lx] x [0, Ly] with Nx x Ny cells."""

    Lx: float
    Ly: float
    Nx: int
    Ny: int

    def __post_init__(self):
        if self.Lx <= 0 or self.Ly <= 0:
            raise ValueError("domain lengths must be positive")
        if self.Nx < 2 or self.Ny < 2:
            raise ValueError("need at least 2 cells per direction")

    @property
    def dx(self) -> float:
        return self.Lx / self.Nx

    @property
    def dy(self) -> float:
        return self.Ly / self.Ny

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.Nx, self.Ny)

    # coordinate arrays (broadcastable column/row forms)
    def xc(self) -> np.ndarray:
        return ((np.arange(self.Nx) + 0.5) * self.dx)[:, None]

    def yc(self) -> np.ndarray:
        return ((np.arange(self.Ny) + 0.5) * self.dy)[None, :]

    def x_ufaces(self) -> np.ndarray:
        return (np.arange(self.Nx + 1) * self.dx)[:, None]

    def y_ufaces(self) -> np.ndarray:
        return ((np.arange(self.Ny) + 0.5) * self.dy)[None, :]

    def x_vfaces(self) -> np.ndarray:
        return ((np.arange(self.Nx) + 0.5) * self.dx)[:, None]

    def y_vfaces(self) -> np.ndarray:
        return (np.arange(self.Ny + 1) * self.dy)[None, :]

    def x_nodes(self) -> np.ndarray:
        return (np.arange(self.Nx + 1) * self.dx)[:, None]

    def y_nodes(self) -> np.ndarray:
        return (np.arange(self.Ny + 1) * self.dy)[None, :]


# ---------------------------------------------------------------------------
# divergence / gradient / interpolation
# ---------------------------------------------------------------------------

def divergence(g: Grid, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Cell-centered divergence of a face field."""
    return (u[1:, :] - u[:-1, :]) / g.dx + (v[:, 1:] - v[:, :-1]) / g.dy


def grad_to_faces(g: Grid, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Cell-scalar gradient at faces; boundary faces get 0 (Neumann p)."""
    gx = np.zeros((g.Nx + 1, g.Ny))
    gy = np.zeros((g.Nx, g.Ny + 1))
    gx[1:-1, :] = (p[1:, :] - p[:-1, :]) / g.dx
    gy[:, 1:-1] = (p[:, 1:] - p[:, :-1]) / g.dy
    return gx, gy


def pad_neumann(c: np.ndarray) -> np.ndarray:
    """Mirror ghost ring for a cell-centered array (any trailing axes)."""
    out = np.empty((c.shape[0] + 2, c.shape[1] + 2) + c.shape[2:], dtype=c.dtype)
    out[1:-1, 1:-1] = c
    out[0, 1:-1] = c[0]
    out[-1, 1:-1] = c[-1]
    out[:, 0] = out[:, 1]
    out[:, -1] = out[:, -2]
    return out


def grad_center(g: Grid, c: np.ndarray) -> np.ndarray:
    """Centered gradient of a cell scalar, shape (Nx, Ny, 2)."""
    ce = pad_neumann(c)
    out = np.empty(c.shape + (2,))
    out[..., 0] = (ce[2:, 1:-1] - ce[:-2, 1:-1]) / (2.0 * g.dx)
    out[..., 1] = (ce[1:-1, 2:] - ce[1:-1, :-2]) / (2.0 * g.dy)
    return out


def grad_center_vec(g: Grid, d: np.ndarray) -> np.ndarray:
    """Gradient of a cell vector field d (Nx, Ny, m) -> (Nx, Ny, 2, m).

    out[..., i, k] = d d_k / d x_i with mirrored (Neumann) ghosts.
    """
    de = pad_neumann(d)
    out = np.empty(d.shape[:2] + (2, d.shape[2]))
    out[:, :, 0, :] = (de[2:, 1:-1, :] - de[:-2, 1:-1, :]) / (2.0 * g.dx)
    out[:, :, 1, :] = (de[1:-1, 2:, :] - de[1:-1, :-2, :]) / (2.0 * g.dy)
    return out


def interp_u_to_centers(u: np.ndarray) -> np.ndarray:
    return 0.5 * (u[1:, :] + u[:-1, :])


def interp_v_to_centers(v: np.ndarray) -> np.ndarray:
    return 0.5 * (v[:, 1:] + v[:, :-1])


def cells_to_nodes(c: np.ndarray) -> np.ndarray:
    """Average a cell scalar to nodes (mirror ghosts), shape (Nx+1, Ny+1)."""
    ce = pad_neumann(c)
    return 0.25 * (ce[1:, 1:] + ce[:-1, 1:] + ce[1:, :-1] + ce[:-1, :-1])


def face_coefficients(c: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Arithmetic averages of a cell coefficient at interior faces."""
    cfx = 0.5 * (c[1:, :] + c[:-1, :])
    cfy = 0.5 * (c[:, 1:] + c[:, :-1])
    return cfx, cfy


# ---------------------------------------------------------------------------
# cell-centered elliptic operators (homogeneous Neumann)
# ---------------------------------------------------------------------------

def div_flux_scaled(c: np.ndarray, sfx: np.ndarray, sfy: np.ndarray) -> np.ndarray:
    """Flux-form div(coef grad c) from prescaled transmissibilities.

    sfx = coef_face_x / dx^2 and sfy = coef_face_y / dy^2 at interior faces;
    wall fluxes are zero.  Broadcasts over trailing axes of ``c`` (so a
    vector field solves in one call).  The stencil of a constant is exactly
    zero.
    """
    fx = sfx * (c[1:, :] - c[:-1, :])
    fy = sfy * (c[:, 1:] - c[:, :-1])
    out = np.zeros_like(c)
    out[:-1, :] += fx
    out[1:, :] -= fx
    out[:, :-1] += fy
    out[:, 1:] -= fy
    return out


def scale_face_coefficients(g: Grid, cfx: np.ndarray, cfy: np.ndarray,
                            trailing: int = 0):
    """Turn face coefficients into transmissibilities for div_flux_scaled."""
    sfx = cfx / g.dx ** 2
    sfy = cfy / g.dy ** 2
    for _ in range(trailing):
        sfx = sfx[..., None]
        sfy = sfy[..., None]
    return sfx, sfy


def div_coef_grad(g: Grid, c: np.ndarray, cfx: np.ndarray, cfy: np.ndarray) -> np.ndarray:
    """Flux-form div(coef grad c) with zero wall flux.

    cfx, cfy are the coefficient at interior x/y faces (face_coefficients).
    """
    return div_flux_scaled(c, cfx / g.dx ** 2, cfy / g.dy ** 2)


def laplace_neumann(g: Grid, c: np.ndarray) -> np.ndarray:
    """div grad with unit coefficient and zero wall flux (pressure operator)."""
    fx = (c[1:, :] - c[:-1, :]) * (1.0 / g.dx ** 2)
    fy = (c[:, 1:] - c[:, :-1]) * (1.0 / g.dy ** 2)
    out = np.zeros_like(c)
    out[:-1, :] += fx
    out[1:, :] -= fx
    out[:, :-1] += fy
    out[:, 1:] -= fy
    return out


def div_coef_grad_vec(g: Grid, d: np.ndarray, cfx: np.ndarray, cfy: np.ndarray) -> np.ndarray:
    """div(coef grad) applied to each component of a cell vector field."""
    sfx, sfy = scale_face_coefficients(g, cfx, cfy, trailing=1)
    return div_flux_scaled(d, sfx, sfy)


def helmholtz_diagonal(g: Grid, a_cell: np.ndarray, cfx: np.ndarray,
                       cfy: np.ndarray) -> np.ndarray:
    """Diagonal of x -> a_cell * x - div(coef grad x) (Jacobi preconditioner)."""
    diag = np.array(a_cell, dtype=float, copy=True) \
        if np.ndim(a_cell) else np.full(g.shape, float(a_cell))
    diag = np.broadcast_to(diag, g.shape).copy()
    dx2, dy2 = g.dx ** 2, g.dy ** 2
    diag[:-1, :] += cfx / dx2
    diag[1:, :] += cfx / dx2
    diag[:, :-1] += cfy / dy2
    diag[:, 1:] += cfy / dy2
    return diag


def div_vector_center(g: Grid, w: np.ndarray) -> np.ndarray:
    """Divergence of a cell-centered vector with zero wall flux.

    Interior face fluxes are two-cell averages; wall fluxes are zero, so the
    cell sum of the result telescopes to exactly zero (conservative form).
    """
    fx = 0.5 * (w[1:, :, 0] + w[:-1, :, 0])
    fy = 0.5 * (w[:, 1:, 1] + w[:, :-1, 1])
    out = np.zeros(w.shape[:2])
    out[:-1, :] += fx / g.dx
    out[1:, :] -= fx / g.dx
    out[:, :-1] += fy / g.dy
    out[:, 1:] -= fy / g.dy
    return out


def advect_center(g: Grid, c: np.ndarray, uc: np.ndarray, vc: np.ndarray) -> np.ndarray:
    """Centered u . grad c for a cell scalar with mirrored ghosts."""
    ce = pad_neumann(c)
    dcdx = (ce[2:, 1:-1] - ce[:-2, 1:-1]) / (2.0 * g.dx)
    dcdy = (ce[1:-1, 2:] - ce[1:-1, :-2]) / (2.0 * g.dy)
    return uc * dcdx + vc * dcdy


def advect_center_vec(g: Grid, d: np.ndarray, uc: np.ndarray, vc: np.ndarray) -> np.ndarray:
    """Centered u . grad applied to every trailing component of d at once."""
    de = pad_neumann(d)
    dcdx = (de[2:, 1:-1] - de[:-2, 1:-1]) / (2.0 * g.dx)
    dcdy = (de[1:-1, 2:] - de[1:-1, :-2]) / (2.0 * g.dy)
    shape = uc.shape + (1,) * (d.ndim - 2)
    return uc.reshape(shape) * dcdx + vc.reshape(shape) * dcdy


# ---------------------------------------------------------------------------
# face-centered viscous operators (no-slip ghosts)
# ---------------------------------------------------------------------------

def _u_with_tangential_ghosts(u: np.ndarray) -> np.ndarray:
    """u extended by one ghost row in y with odd reflection (wall value 0)."""
    ue = np.empty((u.shape[0], u.shape[1] + 2))
    ue[:, 1:-1] = u
    ue[:, 0] = -u[:, 0]
    ue[:, -1] = -u[:, -1]
    return ue


def _v_with_tangential_ghosts(v: np.ndarray) -> np.ndarray:
    ve = np.empty((v.shape[0] + 2, v.shape[1]))
    ve[1:-1, :] = v
    ve[0, :] = -v[0, :]
    ve[-1, :] = -v[-1, :]
    return ve


def visc_u(g: Grid, u: np.ndarray, mu_c: np.ndarray, mu_n: np.ndarray) -> np.ndarray:
    """div(mu grad u) at interior x-faces, shape (Nx-1, Ny).

    mu_c: viscosity at cells (Nx, Ny); mu_n: at nodes (Nx+1, Ny+1).
    Boundary faces of u are fixed at zero by the no-slip condition.
    """
    fx = mu_c * (u[1:, :] - u[:-1, :]) / g.dx            # (Nx, Ny) at cells
    ue = _u_with_tangential_ghosts(u)
    fy = mu_n * (ue[:, 1:] - ue[:, :-1]) / g.dy          # (Nx+1, Ny+1) at nodes
    return ((fx[1:, :] - fx[:-1, :]) / g.dx
            + (fy[1:-1, 1:] - fy[1:-1, :-1]) / g.dy)


def visc_v(g: Grid, v: np.ndarray, mu_c: np.ndarray, mu_n: np.ndarray) -> np.ndarray:
    """div(mu grad v) at interior y-faces, shape (Nx, Ny-1)."""
    fy = mu_c * (v[:, 1:] - v[:, :-1]) / g.dy            # (Nx, Ny) at cells
    ve = _v_with_tangential_ghosts(v)
    fx = mu_n * (ve[1:, :] - ve[:-1, :]) / g.dx          # (Nx+1, Ny+1) at nodes
    return ((fy[:, 1:] - fy[:, :-1]) / g.dy
            + (fx[1:, 1:-1] - fx[:-1, 1:-1]) / g.dx)


def visc_u_diagonal(g: Grid, mu_c: np.ndarray, mu_n: np.ndarray) -> np.ndarray:
    """Diagonal of -visc_u as a function of interior u values."""
    dx2, dy2 = g.dx ** 2, g.dy ** 2
    diag = (mu_c[1:, :] + mu_c[:-1, :]) / dx2
    # odd ghosts double the wall-node coefficient contribution
    diag += (mu_n[1:-1, 1:] + mu_n[1:-1, :-1]) / dy2
    diag[:, 0] += mu_n[1:-1, 0] / dy2
    diag[:, -1] += mu_n[1:-1, -1] / dy2
    return diag


def visc_v_diagonal(g: Grid, mu_c: np.ndarray, mu_n: np.ndarray) -> np.ndarray:
    dx2, dy2 = g.dx ** 2, g.dy ** 2
    diag = (mu_c[:, 1:] + mu_c[:, :-1]) / dy2
    diag += (mu_n[1:, 1:-1] + mu_n[:-1, 1:-1]) / dx2
    diag[0, :] += mu_n[0, 1:-1] / dx2
    diag[-1, :] += mu_n[-1, 1:-1] / dx2
    return diag


def transpose_visc_u(g: Grid, u: np.ndarray, v: np.ndarray, mu_c: np.ndarray,
                     mu_n: np.ndarray) -> np.ndarray:
    """x-component of div(mu [grad u]^T) at interior x-faces: d_x(mu d_x u) + d_y(mu d_x v)."""
    fx = mu_c * (u[1:, :] - u[:-1, :]) / g.dx
    dxv = (v[1:, :] - v[:-1, :]) / g.dx                   # (Nx-1, Ny+1) at interior-x nodes
    fyx = mu_n[1:-1, :] * dxv
    return ((fx[1:, :] - fx[:-1, :]) / g.dx
            + (fyx[:, 1:] - fyx[:, :-1]) / g.dy)


def transpose_visc_v(g: Grid, u: np.ndarray, v: np.ndarray, mu_c: np.ndarray,
                     mu_n: np.ndarray) -> np.ndarray:
    """y-component of div(mu [grad u]^T) at interior y-faces: d_y(mu d_y v) + d_x(mu d_y u)."""
    fy = mu_c * (v[:, 1:] - v[:, :-1]) / g.dy
    dyu = (u[:, 1:] - u[:, :-1]) / g.dy                   # (Nx+1, Ny-1) at interior-y nodes
    fxy = mu_n[:, 1:-1] * dyu
    return ((fy[:, 1:] - fy[:, :-1]) / g.dy
            + (fxy[1:, :] - fxy[:-1, :]) / g.dx)


def advect_u(g: Grid, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Centered (u . grad) u at interior x-faces, shape (Nx-1, Ny)."""
    ue = _u_with_tangential_ghosts(u)                     # (Nx+1, Ny+2)
    dudx = (u[2:, :] - u[:-2, :]) / (2.0 * g.dx)
    dudy = (ue[1:-1, 2:] - ue[1:-1, :-2]) / (2.0 * g.dy)
    v_at_u = 0.25 * (v[1:, :-1] + v[1:, 1:] + v[:-1, :-1] + v[:-1, 1:])  # (Nx-1, Ny)
    return u[1:-1, :] * dudx + v_at_u * dudy


def advect_v(g: Grid, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Centered (u . grad) v at interior y-faces, shape (Nx, Ny-1)."""
    ve = _v_with_tangential_ghosts(v)                     # (Nx+2, Ny+1)
    dvdy = (v[:, 2:] - v[:, :-2]) / (2.0 * g.dy)
    dvdx = (ve[2:, 1:-1] - ve[:-2, 1:-1]) / (2.0 * g.dx)
    u_at_v = 0.25 * (u[:-1, 1:] + u[1:, 1:] + u[:-1, :-1] + u[1:, :-1])  # (Nx, Ny-1)
    return u_at_v * dvdx + v[:, 1:-1] * dvdy


def div_tensor_to_faces(g: Grid, S: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Divergence of a symmetric cell tensor S (Nx, Ny, 2, 2) at interior faces.

    Returns (fx, fy): fx = d_x S_xx + d_y S_xy at interior x-faces (Nx-1, Ny);
    fy = d_y S_yy + d_x S_xy at interior y-faces (Nx, Ny-1).  Off-diagonal
    entries are averaged to nodes with mirrored ghosts.
    """
    sxy_n = cells_to_nodes(S[:, :, 0, 1])
    fx = ((S[1:, :, 0, 0] - S[:-1, :, 0, 0]) / g.dx
          + (sxy_n[1:-1, 1:] - sxy_n[1:-1, :-1]) / g.dy)
    fy = ((S[:, 1:, 1, 1] - S[:, :-1, 1, 1]) / g.dy
          + (sxy_n[1:, 1:-1] - sxy_n[:-1, 1:-1]) / g.dx)
    return fx, fy


def strain_at_centers(g: Grid, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Symmetric velocity-gradient tensor D at cell centers, (Nx, Ny, 2, 2).

    Diagonal entries are exact center values; the shear entry is computed at
    nodes (odd tangential ghosts) and averaged back to centers.
    """
    dudx = (u[1:, :] - u[:-1, :]) / g.dx
    dvdy = (v[:, 1:] - v[:, :-1]) / g.dy
    ue = _u_with_tangential_ghosts(u)
    ve = _v_with_tangential_ghosts(v)
    dudy_n = (ue[:, 1:] - ue[:, :-1]) / g.dy              # (Nx+1, Ny+1)
    dvdx_n = (ve[1:, :] - ve[:-1, :]) / g.dx              # (Nx+1, Ny+1)
    shear_n = 0.5 * (dudy_n + dvdx_n)
    shear_c = 0.25 * (shear_n[1:, 1:] + shear_n[:-1, 1:]
                      + shear_n[1:, :-1] + shear_n[:-1, :-1])
    D = np.empty((g.Nx, g.Ny, 2, 2))
    D[:, :, 0, 0] = dudx
    D[:, :, 1, 1] = dvdy
    D[:, :, 0, 1] = shear_c
    D[:, :, 1, 0] = shear_c
    return D


def strain_sq_at_centers(g: Grid, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """|D|_F^2 at cell centers with node shear squared before averaging.

    Averaging the squared node shear (rather than squaring the averaged
    shear) keeps the viscous heating paired with the kinetic-energy sink of
    the face-based viscous operator through the wall layer; the plain
    tensor from strain_at_centers loses a first-order slice of the wall
    dissipation there.
    """
    dudx = (u[1:, :] - u[:-1, :]) / g.dx
    dvdy = (v[:, 1:] - v[:, :-1]) / g.dy
    ue = _u_with_tangential_ghosts(u)
    ve = _v_with_tangential_ghosts(v)
    shear_n = 0.5 * ((ue[:, 1:] - ue[:, :-1]) / g.dy
                     + (ve[1:, :] - ve[:-1, :]) / g.dx)
    sq_n = shear_n ** 2
    sq_c = 0.25 * (sq_n[1:, 1:] + sq_n[:-1, 1:] + sq_n[1:, :-1] + sq_n[:-1, :-1])
    return dudx ** 2 + dvdy ** 2 + 2.0 * sq_c


def grad_u_at_centers(g: Grid, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Full velocity gradient (du_j/dx_i) at cell centers, (Nx, Ny, 2, 2)."""
    ue = _u_with_tangential_ghosts(u)
    ve = _v_with_tangential_ghosts(v)
    dudy_n = (ue[:, 1:] - ue[:, :-1]) / g.dy
    dvdx_n = (ve[1:, :] - ve[:-1, :]) / g.dx
    G = np.empty((g.Nx, g.Ny, 2, 2))
    G[:, :, 0, 0] = (u[1:, :] - u[:-1, :]) / g.dx
    G[:, :, 1, 1] = (v[:, 1:] - v[:, :-1]) / g.dy
    G[:, :, 1, 0] = 0.25 * (dudy_n[1:, 1:] + dudy_n[:-1, 1:]
                            + dudy_n[1:, :-1] + dudy_n[:-1, :-1])
    G[:, :, 0, 1] = 0.25 * (dvdx_n[1:, 1:] + dvdx_n[:-1, 1:]
                            + dvdx_n[1:, :-1] + dvdx_n[:-1, :-1])
    return G


def curl_of_streamfunction(g: Grid, psi_nodes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Exactly divergence-free face velocity from a node streamfunction.

    u = d_y psi, v = -d_x psi; psi must vanish on boundary nodes for zero
    normal velocity.  The discrete divergence of the result is identically 0.
    """
    u = np.zeros((g.Nx + 1, g.Ny))
    v = np.zeros((g.Nx, g.Ny + 1))
    u[:, :] = (psi_nodes[:, 1:] - psi_nodes[:, :-1]) / g.dy
    v[:, :] = -(psi_nodes[1:, :] - psi_nodes[:-1, :]) / g.dx
    return u, v
