import numpy as np
import pytest

from oracles import channel_profile
from thinporous.errors import ConvergenceError, SingularViscosityError
from thinporous.geometry import build_channel_grid
from thinporous.rheology import FluidModel
from thinporous.stokes import (
    SolverConfig, StokesProblem, StokesSolution, dissipation, energy, residuals,
    solve_stokes, work,
)


def channel(r, n_gap=32, nu=1.0, f1=1.0, solid=None, n_x=4):
    grid = build_channel_grid(n_gap, n_x, solid=solid)
    return StokesProblem(grid, FluidModel(r, nu), f1, 0.0)


@pytest.fixture(scope="module")
def poiseuille():
    prob = channel(2.0, 64)
    return prob, solve_stokes(prob)


@pytest.fixture(scope="module")
def cubic():
    prob = channel(3.0, 32)
    return prob, solve_stokes(prob)


def test_newtonian_poiseuille(poiseuille):
    prob, sol = poiseuille
    y = prob.grid.yc()
    exact = y * (1 - y)
    assert np.max(np.abs(sol.u - exact[None, :])) <= 1e-8
    assert np.max(np.abs(sol.v)) <= 1e-12
    assert np.max(np.abs(sol.p)) <= 1e-10


def test_virtual_work_identity(poiseuille):
    prob, sol = poiseuille
    assert energy(prob, sol) == pytest.approx(-0.5 * work(prob, sol), rel=1e-10)
    # work of the analytic profile, midpoint rule on the discrete rows
    y = prob.grid.yc()
    assert work(prob, sol) == pytest.approx(np.sum(y * (1 - y)) / 64, rel=1e-10)


def test_power_law_channel(cubic):
    prob, sol = cubic
    exact = channel_profile(prob.grid.yc(), 3.0)
    err = np.linalg.norm(sol.u[0] - exact) / np.linalg.norm(exact)
    assert err <= 1e-2


def test_test_function_identity(cubic):
    prob, sol = cubic
    assert dissipation(prob, sol) == pytest.approx(work(prob, sol), rel=1e-6)


def test_residual_recomputed(cubic):
    prob, sol = cubic
    res = residuals(prob, sol)
    cfg = SolverConfig()
    assert res["momentum_rel"] <= 10 * cfg.tol_momentum
    assert res["div_max"] <= cfg.tol_div
    zero = StokesSolution(prob.grid, 0 * sol.u, 0 * sol.v, 0 * sol.p)
    assert residuals(prob, zero)["momentum_rel"] == pytest.approx(1.0)
    rng = np.random.default_rng(3)
    bumped = StokesSolution(prob.grid, sol.u + 1e-3 * rng.normal(size=sol.u.shape), sol.v, sol.p)
    bumped.u[-1] = bumped.u[0]
    assert residuals(prob, bumped)["momentum_rel"] > res["momentum_rel"]


def _stream_perturbation(grid, rng, size):
    psi = np.zeros((grid.nx, grid.ny + 1))
    psi[:, 1:-1] = size * rng.normal(size=(grid.nx, grid.ny - 1))
    u = np.empty((grid.nx + 1, grid.ny))
    u[:-1] = np.diff(psi, axis=1) / grid.dy
    u[-1] = u[0]
    v = -(np.roll(psi, -1, axis=0) - psi) / grid.dx
    return u, v


def test_energy_minimal_against_divergence_free_perturbations(cubic):
    prob, sol = cubic
    e0 = energy(prob, sol)
    rng = np.random.default_rng(7)
    for _ in range(10):
        du, dv = _stream_perturbation(prob.grid, rng, 1e-3)
        trial = StokesSolution(prob.grid, sol.u + du, sol.v + dv, sol.p)
        assert residuals(prob, trial)["div_max"] < 1e-10
        assert energy(prob, trial) > e0


def test_energy_decreases_along_picard(cubic):
    _, sol = cubic
    e = np.array(sol.energy_history)
    assert np.all(np.diff(e) <= 1e-12 * np.abs(e[:-1]))


def test_zero_force_gives_zero():
    prob = channel(3.0, 16, f1=0.0)
    sol = solve_stokes(prob)
    assert not sol.u.any() and not sol.v.any() and not sol.p.any()
    assert energy(prob, sol) == 0.0


def test_nu_scaling_newtonian():
    a = solve_stokes(channel(2.0, 16, nu=1.0, f1=lambda x, y: 1 + np.sin(2 * np.pi * x) * y))
    b = solve_stokes(channel(2.0, 16, nu=2.0, f1=lambda x, y: 1 + np.sin(2 * np.pi * x) * y))
    assert np.allclose(b.u, 0.5 * a.u, atol=1e-12, rtol=0)
    assert np.allclose(b.v, 0.5 * a.v, atol=1e-12, rtol=0)


def test_midline_mirror_symmetry():
    n_gap, n_x = 24, 12
    solid = np.zeros((n_x, n_gap - 1), dtype=bool)
    solid[3:6, 2:7] = True
    f = lambda x, y: 1 + 0.5 * y + 0.3 * np.cos(2 * np.pi * x)
    fm = lambda x, y: f(x, 1 - y)
    a = solve_stokes(channel(2.0, n_gap, f1=f, solid=solid, n_x=n_x))
    b = solve_stokes(channel(2.0, n_gap, f1=fm, solid=solid[:, ::-1], n_x=n_x))
    assert np.max(np.abs(a.u - b.u[:, ::-1])) <= 1e-10
    assert np.max(np.abs(a.v + b.v[:, ::-1])) <= 1e-10
    assert np.max(np.abs(a.p - b.p[:, ::-1])) <= 1e-10


def test_deterministic():
    prob = channel(1.5, 16)
    a, b = solve_stokes(prob), solve_stokes(prob)
    assert np.array_equal(a.u, b.u) and a.history == b.history


def test_errors():
    with pytest.raises(SingularViscosityError):
        solve_stokes(channel(1.5, 16).__class__(build_channel_grid(16), FluidModel(1.5, delta=0.0), 1.0))
    with pytest.raises(ConvergenceError) as exc:
        solve_stokes(channel(4.0, 16), SolverConfig(max_picard=1, tol_momentum=1e-14))
    assert exc.value.history


@pytest.mark.parametrize("r", [3.0, 4.0])
def test_gradient_force_shear_thickening(r):
    # f1 = cos(2 pi x) is a periodic gradient: u = 0 and p = sin(2 pi x) / (2 pi)
    prob = StokesProblem(build_channel_grid(16, 32), FluidModel(r), lambda x, y: np.cos(2 * np.pi * x))
    sol = solve_stokes(prob)
    assert not sol.u.any() and not sol.v.any()
    assert residuals(prob, sol)["momentum_rel"] <= SolverConfig().tol_momentum
