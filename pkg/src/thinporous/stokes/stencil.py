"""Matrix-free MAC stencils on full face arrays."""

from __future__ import annotations

import numpy as np

from .kernels import viscosity_weights

__all__ = ["viscosity_weights", "strain_rate", "divergence", "stress_divergence",
           "pressure_gradient", "corner_shape"]


# ---------------------------------------------------------------------------
# face-array stencils (full face arrays: u is (nx+1, ny), v is (nx, ny+1))
# ---------------------------------------------------------------------------


def corner_shape(grid):
    return (grid.nx if grid.periodic[0] else grid.nx + 1,
            grid.ny if grid.periodic[1] else grid.ny + 1)


def strain_rate(grid, u, v):
    """Strain-rate components ``(d11, d22, d12)`` from full face arrays.

    ``d11, d22`` at cell centres, ``d12`` on the corner lattice; velocities
    beyond a non-periodic side are zero.
    """
    px, py = grid.periodic
    d11 = (u[1:, :] - u[:-1, :]) / grid.dx
    d22 = (v[:, 1:] - v[:, :-1]) / grid.dy

    uu = u[:-1, :] if px else u
    if py:
        uu = np.concatenate([uu[:, -1:], uu], axis=1)
    else:
        z = np.zeros((uu.shape[0], 1))
        uu = np.concatenate([z, uu, z], axis=1)
    du_dy = (uu[:, 1:] - uu[:, :-1]) / grid.dy

    vv = v[:, :-1] if py else v
    if px:
        vv = np.concatenate([vv[-1:, :], vv], axis=0)
    else:
        z = np.zeros((1, vv.shape[1]))
        vv = np.concatenate([z, vv, z], axis=0)
    dv_dx = (vv[1:, :] - vv[:-1, :]) / grid.dx
    return d11, d22, 0.5 * (du_dy + dv_dx)


def divergence(grid, u, v):
    return (u[1:, :] - u[:-1, :]) / grid.dx + (v[:, 1:] - v[:, :-1]) / grid.dy


def stress_divergence(grid, s11, s22, s12):
    """``(div sigma)`` at full u and v faces from centre/corner stresses.

    Values on faces without two interior neighbours are meaningless and are
    masked out by the caller.
    """
    px, py = grid.periodic
    nx, ny = grid.nx, grid.ny
    # x-momentum at u faces: d1 s11 + d2 s12
    if px:
        s11p = np.concatenate([s11[-1:, :], s11, s11[:1, :]], axis=0)
    else:
        z = np.zeros((1, ny))
        s11p = np.concatenate([z, s11, z], axis=0)
    d1s11 = (s11p[1:, :] - s11p[:-1, :]) / grid.dx  # (nx+1, ny)

    s12u = s12 if not px else np.concatenate([s12, s12[:1, :]], axis=0)  # (nx+1, ncy)
    if py:
        s12u = np.concatenate([s12u, s12u[:, :1]], axis=1)
    d2s12 = (s12u[:, 1:] - s12u[:, :-1]) / grid.dy  # (nx+1, ny)
    fx = d1s11 + d2s12

    if py:
        s22p = np.concatenate([s22[:, -1:], s22, s22[:, :1]], axis=1)
    else:
        z = np.zeros((nx, 1))
        s22p = np.concatenate([z, s22, z], axis=1)
    d2s22 = (s22p[:, 1:] - s22p[:, :-1]) / grid.dy  # (nx, ny+1)

    s12v = s12 if not py else np.concatenate([s12, s12[:, :1]], axis=1)  # (ncx, ny+1)
    if px:
        s12v = np.concatenate([s12v, s12v[:1, :]], axis=0)
    d1s12 = (s12v[1:, :] - s12v[:-1, :]) / grid.dx
    fy = d1s12 + d2s22
    return fx, fy


def pressure_gradient(grid, p):
    """``(dp/dx1 at u faces, dp/dx2 at v faces)`` for a cell-centred ``p``."""
    px, py = grid.periodic
    if px:
        pp = np.concatenate([p[-1:, :], p, p[:1, :]], axis=0)
    else:
        z = np.zeros((1, grid.ny))
        pp = np.concatenate([z, p, z], axis=0)
    gx = (pp[1:, :] - pp[:-1, :]) / grid.dx
    if py:
        pq = np.concatenate([p[:, -1:], p, p[:, :1]], axis=1)
    else:
        z = np.zeros((grid.nx, 1))
        pq = np.concatenate([z, p, z], axis=1)
    gy = (pq[:, 1:] - pq[:, :-1]) / grid.dy
    return gx, gy
