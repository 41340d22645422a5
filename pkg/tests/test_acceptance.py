"""Acceptance criteria 1-9 with pinned tolerances and runtime budgets.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""

import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import record_acceptance
from oracles import brute_source_norms, brute_unfold_norms, channel_profile, shoot_film
from thinporous.cell_problem import solve_cell
from thinporous.dns import run_study
from thinporous.forcing import Forcing
from thinporous.geometry import FilmProfile, ObstacleShape, UnitCell, build_channel_grid
from thinporous.reynolds import (
    ReynoldsProblem, film_average_velocity_formula, film_profile_formula, solve_reynolds,
)
from thinporous.rheology import FluidModel, power_map
from thinporous.scaling import critical_exponents, fissure_exponent
from thinporous.stokes import StokesProblem, solve_stokes
from thinporous.unfolding import verify_norm_identities

pytestmark = pytest.mark.acceptance

IDENTITY_TOL = 1e-3
POISEUILLE_TOL = 1e-8
POWER_CHANNEL_TOL = 1e-2
REYNOLDS_TOL = 1e-8
VELOCITY_ZERO_TOL = 1e-12
AVERAGE_TOL = 1e-8
SHOOTING_TOL = 1e-6
UNFOLD_TOL = 1e-12
UNIQUENESS_TOL = 1e-10


def test_1_permeability_identity():
    gaps, times = {}, {}
    for r in (1.5, 2.0, 3.0):
        t0 = time.perf_counter()
        sol = solve_cell(UnitCell(ObstacleShape.disk(0.25)), r, 128)
        times[r] = time.perf_counter() - t0
        gaps[r] = abs(sol.mu_flux - sol.mu_energy) / sol.mu_flux
    ok = all(g <= IDENTITY_TOL for g in gaps.values()) and all(t <= 120 for t in times.values())
    detail = ", ".join(f"r={r}: gap {gaps[r]:.2e} in {times[r]:.1f}s" for r in gaps)
    assert record_acceptance(1, "permeability flux/energy identity", ok, detail)


def test_2_newtonian_poiseuille():
    t0 = time.perf_counter()
    prob = StokesProblem(build_channel_grid(64), FluidModel(2.0), 1.0)
    sol = solve_stokes(prob)
    y = prob.grid.yc()
    err = float(np.max(np.abs(sol.u - (y * (1 - y))[None, :])))
    dt = time.perf_counter() - t0
    ok = err <= POISEUILLE_TOL and dt <= 10
    assert record_acceptance(2, "Newtonian Poiseuille", ok, f"Linf {err:.2e}, {dt:.2f}s")


def test_3_power_law_channel():
    t0 = time.perf_counter()
    prob = StokesProblem(build_channel_grid(128), FluidModel(3.0), 1.0)
    sol = solve_stokes(prob)
    exact = channel_profile(prob.grid.yc(), 3.0)
    err = float(np.linalg.norm(sol.u[0] - exact) / np.linalg.norm(exact))
    dt = time.perf_counter() - t0
    ok = err <= POWER_CHANNEL_TOL and dt <= 60
    assert record_acceptance(3, "power-law channel r=3", ok, f"rel L2 {err:.2e}, {dt:.2f}s")


def test_4_reynolds_zero_flux_mode():
    t0 = time.perf_counter()
    prob = ReynoldsProblem(lambda z: np.cos(np.pi * z), FilmProfile.constant(1.0), 0.05, 1.0,
                           2.0, 1.0, m=1024)
    sol = solve_reynolds(prob)
    err = float(np.max(np.abs(sol.p - np.sin(np.pi * sol.z) / np.pi)))
    vmax = float(max(np.max(np.abs(sol.V_av[0])), np.max(np.abs(sol.Vfilm_av[0]))))
    dt = time.perf_counter() - t0
    ok = err <= REYNOLDS_TOL and vmax <= VELOCITY_ZERO_TOL and dt <= 1
    assert record_acceptance(4, "Reynolds zero-flux mode", ok,
                             f"p* error {err:.2e}, max |V| {vmax:.1e}, {dt:.3f}s")


def test_5_film_profile_consistency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_avg = worst_shoot = 0.0
    for _ in range(100):
        r = rng.uniform(1.2, 5.0)
        g = rng.uniform(0.2, 3.0)
        q = rng.uniform(-5.0, 5.0)
        nu = rng.uniform(0.3, 3.0)
        mean = quad(lambda z: film_profile_formula(z, q, g, nu, r), -g, 0.0,
                    epsabs=1e-14, epsrel=1e-13, points=[-g / 2])[0] / g
        worst_avg = max(worst_avg, abs(mean - film_average_velocity_formula(q, g, nu, r)))
        z = np.linspace(-g, 0.0, 5)
        worst_shoot = max(worst_shoot, float(np.max(np.abs(
            shoot_film(z, q, g, nu, r) - film_profile_formula(z, q, g, nu, r)))))
    dt = time.perf_counter() - t0
    ok = worst_avg <= AVERAGE_TOL and worst_shoot <= SHOOTING_TOL and dt <= 30
    assert record_acceptance(5, "film profile and average", ok,
                             f"average {worst_avg:.1e}, shooting {worst_shoot:.1e}, {dt:.1f}s")


def test_6_scaling_algebra():
    a, b = critical_exponents(2)
    exact = (a, b) == (Fraction(3), Fraction(2))
    fissure = all(fissure_exponent(r) == Fraction(r) / (2 * Fraction(r) - 1)
                  for r in (Fraction(3, 2), 2, Fraction(5, 2), 3, Fraction(7, 4)))
    newtonian = fissure_exponent(2) == Fraction(2, 3)
    ok = exact and fissure and newtonian and isinstance(a, Fraction)
    assert record_acceptance(6, "critical exponents in exact arithmetic", ok,
                             f"r=2 exponents ({a}, {b}), fissure exponent {fissure_exponent(2)}")


def test_7_unfolding_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    layouts = [(1 / 8, 1 / 2, 64, 16), (1 / 4, 1 / 2, 32, 12), (1 / 16, 1 / 4, 64, 32)]
    worst = worst_brute = 0.0
    for k in range(50):
        eps, h, nx, ny = layouts[k % len(layouts)]
        vals = rng.normal(size=(nx, ny))
        for s in (1.5, 2.0, 3.0):
            rep = verify_norm_identities(vals, s, eps, h)
            worst = max(worst, *(abs(rep[key] - 1) for key in
                                 ("value_norm_ratio", "dy1_ratio", "dy2_ratio")))
            if k < 5:
                hv, h1, h2 = brute_unfold_norms(vals, s, eps, h)
                sv, s1, s2 = brute_source_norms(vals, s, eps, h)
                worst_brute = max(worst_brute, abs(hv / sv - 1), abs(h1 / (eps * s1) - 1),
                                  abs(h2 / (eps / h * s2) - 1))
    dt = time.perf_counter() - t0
    ok = worst <= UNFOLD_TOL and worst_brute <= UNFOLD_TOL and dt <= 30
    assert record_acceptance(7, "unfolding norm identities", ok,
                             f"max |ratio-1| {worst:.1e}, loop oracle {worst_brute:.1e}, {dt:.2f}s")


def test_8_monotonicity_uniqueness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    x = rng.uniform(-100, 100, 10_000)
    y = rng.uniform(-100, 100, 10_000)
    r = rng.uniform(1.05, 8.0, 10_000)
    prods = np.array([(power_map(a, p) - power_map(b, p)) * (a - b) for a, b, p in zip(x, y, r)])
    strict = bool(np.all(prods[x != y] > 0))
    g = FilmProfile.from_spec("cosine", {"mean": 1.0, "amplitude": 0.3})
    prob = ReynoldsProblem(lambda z: 1 + np.sin(3 * z), g, 0.05, 1.0, 3.0, 1.0,
                           flux_mode="prescribed_pressure_drop", pressure_drop=0.2)
    diff = float(np.max(np.abs(solve_reynolds(prob, 1.0).p - solve_reynolds(prob, 37.0).p)))
    dt = time.perf_counter() - t0
    ok = strict and diff <= UNIQUENESS_TOL and dt <= 10
    assert record_acceptance(8, "power map monotone, Reynolds unique", ok,
                             f"strict on 1e4 pairs: {strict}, bracket difference {diff:.1e}, {dt:.2f}s")


@pytest.mark.slow
def test_9_dns_convergence():
    t0 = time.perf_counter()
    res = run_study(2.0, 1.0, [1 / 8, 1 / 16], ObstacleShape.disk(0.25), FilmProfile.constant(1.0),
                    Forcing("sine", {"amplitude": 1.0, "k": 1.0}), s=5 / 6)
    dt = time.perf_counter() - t0
    c = res.checks
    film = [row["film_distance"] for row in res.rows]
    jump = [row["interface_jump"] for row in res.rows]
    ok = (c["film_distance_decreasing"] and c["interface_jump_decreasing"]
          and c["velocity_ratio_within_decade"] and dt <= 1800)
    detail = (f"film distance {film[0]:.2e} -> {film[1]:.2e}, jump {jump[0]:.2e} -> {jump[1]:.2e}, "
              f"velocity ratio spread {c['velocity_ratio_spread']:.3g}, {dt:.1f}s")
    assert record_acceptance(9, "DNS convergence along the critical sequence", ok, detail)
