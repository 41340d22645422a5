"""Power-law Stokes solver on masked MAC grids.

Solves ``-div(nu |D u|^(r-2) D u) + grad p = f``, ``div u = 0`` with no-slip
on solid cells and non-periodic sides.  The discretization is the
Euler-Lagrange system of a discrete convex energy (centre and corner
quadrature of ``|D u|^r``), so the Picard operator at the current iterate
is exactly the energy gradient.  Each Picard step freezes the viscosity
and solves the linear Stokes system by augmented-Lagrangian Uzawa with a
sparse LU factorization of the augmented velocity block.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import ConfigurationError, ContractError, ConvergenceError, SingularViscosityError
from ..geometry import Grid
from ..rheology import FluidModel
from . import stencil

logger = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    tol_momentum: float = 1e-8
    tol_div: float = 1e-10
    max_picard: int = 500
    rho: float = 1.0
    theta: float | None = None  # None: min(1, 2/r)
    max_uzawa: int = 200
    rho_boost: float = 1e3

    def __post_init__(self):
        if not (self.tol_momentum > 0 and self.tol_div > 0):
            raise ConfigurationError("solver tolerances must be positive")
        if self.theta is not None and not 0.0 < self.theta <= 1.0:
            raise ConfigurationError("Picard damping theta must lie in (0, 1]")
        if self.rho <= 0 or self.max_picard < 1:
            raise ConfigurationError("rho must be positive and max_picard >= 1")

    def initial_theta(self, r: float) -> float:
        return self.theta if self.theta is not None else min(1.0, 2.0 / r)

    def key(self) -> str:
        return f"tm={self.tol_momentum:g},td={self.tol_div:g}"


ForceComponent = "float | np.ndarray | Callable"


@dataclass
class StokesProblem:
    """Grid, fluid and body force ``f = (f1, f2)``.

    Each force component is a constant, a callable ``f(x1, x2)`` evaluated
    at the component's face locations, or an array shaped like the full
    face array (``(nx+1, ny)`` for ``f1``, ``(nx, ny+1)`` for ``f2``).
    With ``paper_mode`` the force must be horizontal and independent of
    ``x2``.
    """

    grid: Grid
    model: FluidModel
    f1: object = 0.0
    f2: object = 0.0
    paper_mode: bool = False

    def __post_init__(self):
        if not self.grid.fluid.any():
            raise ContractError("grid has no fluid cell")
        if self.paper_mode:
            f1, f2 = self.force_faces()
            if np.any(f2 != 0.0):
                raise ContractError("with paper_mode the force must have zero vertical component")
            if np.any(np.abs(f1 - f1[:, :1]) > 1e-14 * (1.0 + np.abs(f1[:, :1]))):
                raise ContractError("with paper_mode the force must not depend on x2")

    def force_faces(self):
        g = self.grid
        xu, yu = np.meshgrid(g.xf(), g.yc(), indexing="ij")
        xv, yv = np.meshgrid(g.xc(), g.yf(), indexing="ij")
        return _eval_component(self.f1, xu, yu), _eval_component(self.f2, xv, yv)


def _eval_component(f, X, Y):
    if callable(f):
        out = np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape)
    else:
        arr = np.asarray(f, dtype=float)
        if arr.ndim and arr.shape != X.shape:
            raise ContractError(f"force array shape {arr.shape} != {X.shape}")
        out = np.broadcast_to(arr, X.shape)
    return np.array(out, dtype=float)


@dataclass
class StokesSolution:
    """Full face velocities (periodic duplicates included), centred pressure
    with zero fluid mean, and solver diagnostics."""

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    iterations: int = 0
    momentum_residual: float = 0.0
    max_divergence: float = 0.0
    energy: float = 0.0
    history: list = field(default_factory=list)
    energy_history: list = field(default_factory=list)

    def centred_velocity(self):
        return 0.5 * (self.u[1:, :] + self.u[:-1, :]), 0.5 * (self.v[:, 1:] + self.v[:, :-1])


class MacSystem:
    """Index bookkeeping and sparse difference operators for one grid."""

    def __init__(self, grid: Grid):
        self.grid = g = grid
        px, py = g.periodic
        nx, ny = g.nx, g.ny
        fluid = g.fluid
        self.nux = nx if px else nx + 1
        self.nvy = ny if py else ny + 1
        self.ncx, self.ncy = stencil.corner_shape(g)

        # u face i sits between cells i-1 and i
        iu = np.arange(self.nux)
        left = np.zeros((self.nux, ny), dtype=bool)
        right = np.zeros((self.nux, ny), dtype=bool)
        if px:
            left[:] = fluid[(iu - 1) % nx, :]
            right[:] = fluid[iu % nx, :]
        else:
            left[1:] = fluid[:, :]
            right[:-1] = fluid[:, :]
        self.active_u = left & right

        jv = np.arange(self.nvy)
        below = np.zeros((nx, self.nvy), dtype=bool)
        above = np.zeros((nx, self.nvy), dtype=bool)
        if py:
            below[:] = fluid[:, (jv - 1) % ny]
            above[:] = fluid[:, jv % ny]
        else:
            below[:, 1:] = fluid
            above[:, :-1] = fluid
        self.active_v = below & above

        self.udof = -np.ones((self.nux, ny), dtype=np.int64)
        self.udof[self.active_u] = np.arange(int(self.active_u.sum()))
        nu_ = int(self.active_u.sum())
        self.vdof = -np.ones((nx, self.nvy), dtype=np.int64)
        self.vdof[self.active_v] = nu_ + np.arange(int(self.active_v.sum()))
        self.n_u = nu_
        self.ndof = nu_ + int(self.active_v.sum())
        self.fluid_idx = np.flatnonzero(fluid.ravel())
        self._build_operators()

    # -- dof <-> face arrays ------------------------------------------------
    def faces(self, x):
        g = self.grid
        uu = np.zeros((self.nux, g.ny))
        uu[self.active_u] = x[: self.n_u]
        vv = np.zeros((g.nx, self.nvy))
        vv[self.active_v] = x[self.n_u:]
        u = np.concatenate([uu, uu[:1]], axis=0) if g.periodic[0] else uu
        v = np.concatenate([vv, vv[:, :1]], axis=1) if g.periodic[1] else vv
        return u, v

    def dofs(self, u, v):
        g = self.grid
        uu = u[: self.nux]
        vv = v[:, : self.nvy]
        return np.concatenate([uu[self.active_u], vv[self.active_v]])

    def _uidx(self, i, j):
        """dof index of u face (i, j) with wrapping, -1 outside or inactive."""
        g = self.grid
        i = np.asarray(i)
        j = np.asarray(j)
        ok = np.ones(np.broadcast(i, j).shape, dtype=bool)
        if g.periodic[0]:
            i = i % g.nx
        else:
            ok &= (i >= 0) & (i <= g.nx)
        if g.periodic[1]:
            j = j % g.ny
        else:
            ok &= (j >= 0) & (j < g.ny)
        out = -np.ones(ok.shape, dtype=np.int64)
        out[ok] = self.udof[np.clip(i, 0, self.nux - 1)[ok], np.clip(j, 0, g.ny - 1)[ok]]
        return out

    def _vidx(self, i, j):
        g = self.grid
        i = np.asarray(i)
        j = np.asarray(j)
        ok = np.ones(np.broadcast(i, j).shape, dtype=bool)
        if g.periodic[0]:
            i = i % g.nx
        else:
            ok &= (i >= 0) & (i < g.nx)
        if g.periodic[1]:
            j = j % g.ny
        else:
            ok &= (j >= 0) & (j <= g.ny)
        out = -np.ones(ok.shape, dtype=np.int64)
        out[ok] = self.vdof[np.clip(i, 0, g.nx - 1)[ok], np.clip(j, 0, self.nvy - 1)[ok]]
        return out

    def _build_operators(self):
        g = self.grid
        nx, ny = g.nx, g.ny
        I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        rows_c = (I * ny + J).ravel()

        def assemble(nrows, parts):
            rr, cc, vv = [], [], []
            for rows, cols, coef in parts:
                cols = cols.ravel()
                keep = cols >= 0
                rr.append(rows[keep])
                cc.append(cols[keep])
                vv.append(np.full(int(keep.sum()), coef))
            return sp.csr_matrix(
                (np.concatenate(vv), (np.concatenate(rr), np.concatenate(cc))),
                shape=(nrows, self.ndof),
            )

        self.G11 = assemble(nx * ny, [
            (rows_c, self._uidx(I + 1, J), 1.0 / g.dx),
            (rows_c, self._uidx(I, J), -1.0 / g.dx),
        ])
        self.G22 = assemble(nx * ny, [
            (rows_c, self._vidx(I, J + 1), 1.0 / g.dy),
            (rows_c, self._vidx(I, J), -1.0 / g.dy),
        ])
        CI, CJ = np.meshgrid(np.arange(self.ncx), np.arange(self.ncy), indexing="ij")
        rows_n = (CI * self.ncy + CJ).ravel()
        self.G12 = assemble(self.ncx * self.ncy, [
            (rows_n, self._uidx(CI, CJ), 0.5 / g.dy),
            (rows_n, self._uidx(CI, CJ - 1), -0.5 / g.dy),
            (rows_n, self._vidx(CI, CJ), 0.5 / g.dx),
            (rows_n, self._vidx(CI - 1, CJ), -0.5 / g.dx),
        ])
        self.B = (self.G11 + self.G22)[self.fluid_idx].tocsr()
        self.BtB = (self.B.T @ self.B).tocsc()

    def strain(self, x):
        g = self.grid
        return (
            (self.G11 @ x).reshape(g.nx, g.ny),
            (self.G22 @ x).reshape(g.nx, g.ny),
            (self.G12 @ x).reshape(self.ncx, self.ncy),
        )

    def operator(self, wc, wn):
        wc = sp.diags(wc.ravel())
        return (self.G11.T @ wc @ self.G11 + self.G22.T @ wc @ self.G22
                + 2.0 * self.G12.T @ sp.diags(wn.ravel()) @ self.G12).tocsc()

    def grad_t(self, p_fluid):
        """``B^T p``, equal to minus the discrete pressure gradient."""
        return self.B.T @ p_fluid


def _weights(system: MacSystem, x, model: FluidModel, r: float | None = None):
    g = system.grid
    r = model.r if r is None else r
    d11, d22, d12 = system.strain(x)
    return stencil.viscosity_weights(d11, d22, d12, g.periodic[0], g.periodic[1],
                                     model.nu, r, model.delta)


def _gauge(p):
    return p - p.mean()


def _uzawa(system, K_lu, rhs, p, rho, cfg, fnorm):
    """Augmented-Lagrangian Uzawa iterations with a fixed factorization."""
    B = system.B
    x = None
    for it in range(cfg.max_uzawa):
        x = K_lu.solve(rhs + system.grad_t(p))
        div = B @ x
        p = p - rho * div
        if np.max(np.abs(div), initial=0.0) <= 0.1 * cfg.tol_div:
            break
    return x, _gauge(p), it + 1


class StokesAssembly:
    """Reusable setup for repeated solves on one grid (e.g. parameter sweeps)."""

    def __init__(self, problem: StokesProblem):
        self.problem = problem
        self.system = MacSystem(problem.grid)
        f1, f2 = problem.force_faces()
        self.f = self.system.dofs(f1, f2)


def _linear_solve(system, A, f, p0, cfg, rho_scale, fnorm):
    rho = cfg.rho * cfg.rho_boost * rho_scale
    K = (A + rho * system.BtB).tocsc()
    lu = spla.splu(K, permc_spec="COLAMD")
    x, p, its = _uzawa(system, lu, f, p0, rho, cfg, fnorm)
    return x, p, its


def _momentum(system, A, x, p, f):
    return A @ x - system.grad_t(p) - f


def solve_stokes(problem: StokesProblem, cfg: SolverConfig | None = None,
                 initial: StokesSolution | None = None) -> StokesSolution:
    """Picard iteration on the frozen-viscosity linearization.

    Starts from the Newtonian solution rescaled by the energy-optimal
    factor.  A step is damped (halving ``theta``) until the discrete energy
    does not increase; ``theta`` is also halved for the next step whenever
    the residual grew.
    """
    cfg = cfg or SolverConfig()
    model = problem.model
    if model.r < 2.0 and model.delta <= 0.0:
        raise SingularViscosityError("shear-thinning solves need delta > 0")
    asm = StokesAssembly(problem)
    system, f = asm.system, asm.f
    grid = problem.grid
    npres = system.fluid_idx.size
    fnorm = float(np.linalg.norm(f))
    if fnorm == 0.0:
        u, v = system.faces(np.zeros(system.ndof))
        return StokesSolution(grid, u, v, np.zeros((grid.nx, grid.ny)))

    f_area = f * grid.cell_area

    def energy_of(x, phi_sum):
        return grid.cell_area * model.nu / model.r * phi_sum - float(f_area @ x)

    history, energies = [], []
    newtonian = FluidModel(2.0, model.nu, 0.0)
    if initial is not None:
        x = system.dofs(initial.u, initial.v)
        p = initial.p.ravel()[system.fluid_idx]
    else:
        wc, wn, _, _ = _weights(system, np.zeros(system.ndof), newtonian)
        A = system.operator(wc, wn)
        x, p, _ = _linear_solve(system, A, f, np.zeros(npres), cfg, model.nu, fnorm)
        res0 = float(np.linalg.norm(system.grad_t(p) + f)) / fnorm
        if model.r != 2.0 and res0 <= cfg.tol_momentum:
            # gradient force: the pressure balances it alone and u = 0 solves every r,
            # while the energy scaling below would divide round-off by round-off
            u, v = system.faces(np.zeros(system.ndof))
            pc = np.zeros(grid.nx * grid.ny)
            pc[system.fluid_idx] = _gauge(p)
            sol = StokesSolution(grid, u, v, pc.reshape(grid.nx, grid.ny), 0, res0, 0.0,
                                 history=[res0], energy_history=[0.0])
            sol.energy = energy(problem, sol)
            return sol
        if model.r != 2.0:
            # J(c x) = nu/r |c|^r Q - c F is minimized at c = (F / (nu Q))^(1/(r-1))
            _, _, _, q0 = _weights(system, x, model)
            F0 = float(f @ x)
            c = (F0 / (model.nu * q0)) ** (1.0 / (model.r - 1.0))
            x = c * x
            p = p * c ** (model.r - 1.0)

    theta0 = cfg.initial_theta(model.r)
    theta = theta0
    wc, wn, phi, _ = _weights(system, x, model)
    A = system.operator(wc, wn)
    J = energy_of(x, phi)
    res = float(np.linalg.norm(_momentum(system, A, x, p, f))) / fnorm
    history.append(res)
    energies.append(J)
    div = float(np.max(np.abs(system.B @ x), initial=0.0))
    it = 0
    while not (res <= cfg.tol_momentum and div <= cfg.tol_div):
        if it >= cfg.max_picard:
            raise ConvergenceError(
                f"Picard iteration did not converge in {cfg.max_picard} steps "
                f"(residual {res:.3e}, divergence {div:.3e})", history)
        it += 1
        rho_scale = float(np.median(wc[grid.fluid])) if grid.fluid.any() else model.nu
        xh, ph, _ = _linear_solve(system, A, f, p, cfg, max(rho_scale, 1e-300), fnorm)
        step = theta
        while True:
            xn = x + step * (xh - x)
            pn = p + step * (ph - p)
            wcn, wnn, phin, _ = _weights(system, xn, model)
            Jn = energy_of(xn, phin)
            if Jn <= J + 1e-12 * abs(J) or step < 1e-6:
                break
            step *= 0.5
        An = system.operator(wcn, wnn)
        resn = float(np.linalg.norm(_momentum(system, An, xn, pn, f))) / fnorm
        if resn > res:
            theta = max(0.5 * step, 1e-6)
        else:
            theta = min(theta0, 2.0 * step)
        x, p, wc, wn, A, J, res = xn, pn, wcn, wnn, An, Jn, resn
        div = float(np.max(np.abs(system.B @ x), initial=0.0))
        history.append(res)
        energies.append(J)
        logger.debug("picard %d: residual %.3e energy %.12e step %.3g", it, res, J, step)

    u, v = system.faces(x)
    pc = np.zeros(grid.nx * grid.ny)
    pc[system.fluid_idx] = _gauge(p)
    sol = StokesSolution(grid, u, v, pc.reshape(grid.nx, grid.ny), it, res, div,
                         history=history, energy_history=energies)
    sol.energy = energy(problem, sol)
    return sol


def residuals(problem: StokesProblem, solution: StokesSolution) -> dict:
    """Relative momentum residual and maximum divergence, matrix-free.

    Uses the face-array stencils rather than the assembled operators.
    """
    grid, model = problem.grid, problem.model
    u, v = solution.u, solution.v
    d11, d22, d12 = stencil.strain_rate(grid, u, v)
    wc, wn, _, _ = stencil.viscosity_weights(d11, d22, d12, grid.periodic[0], grid.periodic[1],
                                             model.nu, model.r, model.delta)
    fx, fy = stencil.stress_divergence(grid, wc * d11, wc * d22, wn * d12)
    gx, gy = stencil.pressure_gradient(grid, np.where(grid.fluid, solution.p, 0.0))
    f1, f2 = problem.force_faces()
    ru = -fx + gx - f1
    rv = -fy + gy - f2
    system = MacSystem(grid)
    au = system.active_u
    av = system.active_v
    r_all = np.concatenate([ru[: system.nux][au], rv[:, : system.nvy][av]])
    f_all = np.concatenate([f1[: system.nux][au], f2[:, : system.nvy][av]])
    fnorm = float(np.linalg.norm(f_all))
    rnorm = float(np.linalg.norm(r_all))
    div = stencil.divergence(grid, u, v)[grid.fluid]
    return {
        "momentum_rel": rnorm / fnorm if fnorm > 0 else rnorm,
        "div_max": float(np.max(np.abs(div), initial=0.0)),
    }


def power_integral(grid: Grid, u, v, r: float) -> float:
    """Quadrature of ``|D u|^r`` over the grid (centre/corner rule)."""
    d11, d22, d12 = stencil.strain_rate(grid, u, v)
    _, _, _, psum = stencil.viscosity_weights(d11, d22, d12, grid.periodic[0], grid.periodic[1],
                                              1.0, r, 0.0)
    return grid.cell_area * psum


def dissipation(problem: StokesProblem, solution: StokesSolution) -> float:
    """``sum nu_eff |D u|^2`` with the solver's weights, i.e. the discrete
    ``nu ∫ |Du|^(r-2) Du : Du``."""
    grid, model = problem.grid, problem.model
    d11, d22, d12 = stencil.strain_rate(grid, solution.u, solution.v)
    wc, wn, _, _ = stencil.viscosity_weights(d11, d22, d12, grid.periodic[0], grid.periodic[1],
                                             model.nu, model.r, model.delta)
    return grid.cell_area * float(np.sum(wc * (d11**2 + d22**2)) + 2.0 * np.sum(wn * d12**2))


def work(problem: StokesProblem, solution: StokesSolution) -> float:
    """``∫ f . u`` over the velocity unknowns."""
    grid = problem.grid
    f1, f2 = problem.force_faces()
    u = solution.u[:-1] if grid.periodic[0] else solution.u
    f1 = f1[:-1] if grid.periodic[0] else f1
    v = solution.v[:, :-1] if grid.periodic[1] else solution.v
    f2 = f2[:, :-1] if grid.periodic[1] else f2
    return grid.cell_area * float(np.sum(f1 * u) + np.sum(f2 * v))


def energy(problem: StokesProblem, solution: StokesSolution) -> float:
    """``(nu/r) ∫ |D u|^r - ∫ f . u`` with the solver's quadrature."""
    model = problem.model
    q = power_integral(problem.grid, solution.u, solution.v, model.r)
    return model.nu / model.r * q - work(problem, solution)
