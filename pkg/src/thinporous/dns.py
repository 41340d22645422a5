"""Direct simulation of the fine-scale problem and comparison with the limit.

The physical domain is the perforated band ``0 < x2 < h`` over the film
``-eta g(x1) < x2 < 0`` with no-slip on obstacles and on the outer
boundary, driven by ``f = (f1(x1), 0)``.  Fields are split at the
interface, rescaled per medium (``z2 = x2 / h`` and ``z2 = x2 / eta``) and
compared with the zero-flux Reynolds pressure.

For a horizontal force depending on ``x1`` only, ``u = 0`` with
``p = ∫ f1`` is an exact solution, both continuously and for the MAC
scheme (every horizontal pressure difference can match ``dx f1`` at its
face).  DNS velocities are then at rounding level and the pressure
carries the whole response.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import ContractError, InputError, RegimeError
from .forcing import Forcing
from .geometry import (BandField, FilmProfile, ObstacleShape, PerforatedDomain, band_field,
                       build_perforated_domain, rescale_field)
from .reynolds import ReynoldsProblem, ReynoldsSolution, solve_reynolds
from .rheology import FluidModel, conjugate_exponent, power_map
from .scaling import CRITICAL_BAND, ScalingRegime, lambda_estimate, predicted_exponents, regime_sequence
from .stokes import SolverConfig, StokesProblem, dissipation, solve_stokes, work
from .stokes.stencil import strain_rate

logger = logging.getLogger(__name__)


@dataclass
class DnsCase:
    regime: ScalingRegime
    obstacle: ObstacleShape
    g: FilmProfile
    f1: object
    n_per_cell: int = 16
    cfg: SolverConfig | None = None
    nu: float = 1.0
    max_cells: int = 1_000_000

    def __post_init__(self):
        cls = self.regime.classify()
        if cls["classification"] != "critical":
            raise RegimeError(f"DNS case must be critical, got lambda_est={cls['lambda_est']:.3g}")


@dataclass
class DnsReport:
    eps: float
    h: float
    eta: float
    r: float
    lam: float
    lam_realized: float
    P1: BandField
    P2: BandField
    norms: dict
    traces: dict
    c_hat: float
    f1_x1: np.ndarray
    f1_values: np.ndarray
    g_spec: dict
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"eps": self.eps, "h": self.h, "eta": self.eta, "lambda_realized": self.lam_realized,
                **self.norms, "c_hat": self.c_hat}


def _centre_strain_magnitude(grid, u, v):
    d11, d22, d12 = strain_rate(grid, u, v)
    # corner lattice is (nx+1, ny+1) on a walled grid; average the four corners
    d12sq = d12**2
    corner_mean = 0.25 * (d12sq[:-1, :-1] + d12sq[1:, :-1] + d12sq[:-1, 1:] + d12sq[1:, 1:])
    return np.sqrt(d11**2 + d22**2 + 2.0 * corner_mean)


def _lr_norm(mag, mask, weight, s):
    vals = np.where(mask, mag, 0.0)
    return float((np.sum(vals**s) * weight) ** (1.0 / s))


def _wall_velocity_max(grid, u, v) -> float:
    """Largest face velocity on faces touching a solid cell or the outer wall."""
    pad = np.pad(grid.solid, 1, constant_values=True)
    wall_u = pad[:-1, 1:-1] | pad[1:, 1:-1]
    wall_v = pad[1:-1, :-1] | pad[1:-1, 1:]
    return float(max(np.max(np.abs(u[wall_u]), initial=0.0), np.max(np.abs(v[wall_v]), initial=0.0)))


def _mean_zero(field: BandField) -> tuple[BandField, float]:
    mean = float(np.mean(field.values[field.fluid]))
    vals = np.where(field.fluid, field.values - mean, 0.0)
    return BandField(vals, field.x1, field.x2, field.medium, field.reference, field.fluid), mean


def run_dns(case: DnsCase) -> DnsReport:
    """Solve on the perforated domain and collect the rescaled quantities."""
    reg = case.regime
    dom = PerforatedDomain(reg.eps, reg.h, reg.eta, case.obstacle, case.g)
    grid = build_perforated_domain(dom, case.n_per_cell, case.max_cells)
    h_real = dom.realized_h
    f1 = case.f1
    model = FluidModel(reg.r, case.nu)
    problem = StokesProblem(grid, model, lambda X, Y: f1(X), 0.0, paper_mode=True)
    sol = solve_stokes(problem, case.cfg or SolverConfig())

    j0 = grid.sigma_row
    fluid = grid.fluid
    uc, vc = sol.centred_velocity()
    speed = np.hypot(uc, vc)
    strain = _centre_strain_magnitude(grid, sol.u, sol.v)
    area = grid.dx * grid.dy
    r = reg.r
    porous = np.zeros_like(fluid)
    porous[:, j0:] = fluid[:, j0:]
    film = np.zeros_like(fluid)
    film[:, :j0] = fluid[:, :j0]
    norms = {
        "porous_velocity": _lr_norm(speed, porous, area / h_real, r),
        "porous_gradient": _lr_norm(strain, porous, area / h_real, r),
        "film_velocity": _lr_norm(speed, film, area / reg.eta, r),
        "film_gradient": _lr_norm(strain, film, area / reg.eta, r),
    }

    P1, m1 = _mean_zero(rescale_field(band_field(grid, sol.p, "porous"), "porous", h_real))
    P2, m2 = _mean_zero(rescale_field(band_field(grid, sol.p, "film"), "film", reg.eta))
    both = fluid[:, j0] & fluid[:, j0 - 1]
    tp = P1.values[:, 0][both]
    tf = P2.values[:, -1][both]
    traces = {"x1": grid.xc()[both], "porous": tp, "film": tf}
    c_hat = float(np.mean(tp - tf)) if tp.size else 0.0

    w = work(problem, sol)
    diag = {
        "grid": [grid.nx, grid.ny],
        "cells": int(grid.nx * grid.ny),
        "iterations": sol.iterations,
        "momentum_residual": sol.momentum_residual,
        "max_divergence": sol.max_divergence,
        "work": w,
        "dissipation": dissipation(problem, sol),
        "raw_pressure_means": [m1, m2],
        "wall_velocity_max": _wall_velocity_max(grid, sol.u, sol.v),
    }
    return DnsReport(reg.eps, h_real, reg.eta, r, reg.lam,
                     lambda_estimate(reg.eps, h_real, reg.eta, r), P1, P2, norms, traces, c_hat,
                     grid.xc(), np.asarray(f1(grid.xc()), dtype=float), case.g.to_dict(), diag)


def report_from_limit(limit: ReynoldsSolution, problem: ReynoldsProblem, nx: int = 256,
                      ny: int = 8, eps: float = 0.125, h: float = 0.25,
                      eta: float = 0.25) -> DnsReport:
    """Synthetic report whose pressures are the limit pressure itself."""
    x1 = -0.5 + (np.arange(nx) + 0.5) / nx
    pstar = CubicSpline(limit.z, limit.p)(x1)
    z2p = (np.arange(ny) + 0.5) / ny
    z2f = -problem.g.b + (np.arange(ny) + 0.5) * problem.g.b / ny
    full = np.ones((nx, ny), dtype=bool)
    vals = np.repeat(pstar[:, None], ny, axis=1)
    P1, _ = _mean_zero(BandField(vals, x1, z2p, "porous", True, full))
    P2, _ = _mean_zero(BandField(vals.copy(), x1, z2f, "film", True, full))
    zero = {k: 0.0 for k in ("porous_velocity", "porous_gradient", "film_velocity", "film_gradient")}
    traces = {"x1": x1, "porous": P1.values[:, 0], "film": P2.values[:, -1]}
    return DnsReport(eps, h, eta, problem.r, problem.lam, problem.lam, P1, P2,
                     zero, traces, 0.0, x1, problem.force(x1), problem.g.to_dict(),
                     {"synthetic": True})


def optimal_shift(err: np.ndarray, weight: float, s: float) -> tuple[float, float]:
    """``argmin_c`` and ``min_c`` of ``||err - c||_{L^s}`` for uniform weights."""
    err = np.asarray(err, dtype=float)
    if err.size == 0:
        return 0.0, 0.0
    lo, hi = float(err.min()), float(err.max())
    if hi - lo <= 1e-300:
        c = lo
    elif s == 2.0:
        c = float(np.mean(err))
    else:
        c = brentq(lambda c: float(np.sum(power_map(err - c, s))), lo, hi, xtol=1e-15, rtol=1e-15)
    dist = float((np.sum(np.abs(err - c) ** s) * weight) ** (1.0 / s))
    return c, dist


def compare_to_homogenized(report: DnsReport, limit: ReynoldsSolution,
                           problem: ReynoldsProblem) -> dict:
    """Pressure distances to the limit after optimal shifts, and the interface jump."""
    if report.r != problem.r:
        raise ContractError(f"flow index differs: report {report.r}, limit {problem.r}")
    if abs(report.lam - problem.lam) > 1e-12 * problem.lam:
        raise ContractError(f"lambda differs: report {report.lam}, limit {problem.lam}")
    g_lim = problem.g.to_dict()
    if report.g_spec.get("kind") != "custom" and g_lim.get("kind") != "custom" and report.g_spec != g_lim:
        raise ContractError("film profiles differ between report and limit")
    f_lim = problem.force(report.f1_x1)
    scale = max(1.0, float(np.max(np.abs(f_lim))))
    if np.max(np.abs(f_lim - report.f1_values)) > 1e-10 * scale:
        raise ContractError("forcing differs between report and limit")
    if limit.q0 != 0.0:
        raise ContractError("the fine-scale problem has impermeable ends: compare with the zero-flux limit")

    rc = conjugate_exponent(report.r)
    spline = CubicSpline(limit.z, limit.p)
    out = {}
    for name, fld in (("porous", report.P1), ("film", report.P2)):
        ref = spline(fld.x1)[:, None]
        err = (fld.values - ref)[fld.fluid]
        c, dist = optimal_shift(err, fld.d1 * fld.d2, rc)
        out[f"{name}_distance"] = dist
        out[f"{name}_shift"] = c
    out["interface_jump"] = abs(out["porous_shift"] - out["film_shift"])
    return out


def fit_scaling_exponent(values) -> float:
    """Least-squares slope of ``log(norm)`` against ``log(eps)``."""
    pts = list(values)
    if len(pts) < 2:
        raise InputError("need at least two (eps, norm) points")
    eps = np.array([p[0] for p in pts], dtype=float)
    nrm = np.array([p[1] for p in pts], dtype=float)
    if np.any(eps <= 0) or np.any(nrm <= 0) or not np.all(np.isfinite(nrm)):
        raise InputError("eps and norms must be positive and finite")
    if np.unique(eps).size < 2:
        raise InputError("need at least two distinct eps values")
    return float(np.polyfit(np.log(eps), np.log(nrm), 1)[0])


# ---------------------------------------------------------------------------
# convergence study
# ---------------------------------------------------------------------------


@dataclass
class StudyResult:
    rows: list
    reports: list
    limit: ReynoldsSolution
    exponents: dict
    checks: dict


def _run_case(case: DnsCase) -> DnsReport:
    return run_dns(case)


def _picklable(case: DnsCase) -> bool:
    return case.g.kind != "custom" and isinstance(case.f1, Forcing)


def run_study(r: float, lam: float, eps_list, obstacle: ObstacleShape, g: FilmProfile, f1,
              s: float | None = None, n_per_cell: int = 16, cfg: SolverConfig | None = None,
              jobs: int = 1, mu: float = 1.0, m: int = 1024, nu: float = 1.0,
              max_cells: int = 1_000_000) -> StudyResult:
    """DNS along an admissible critical sequence, compared with the limit.

    ``mu`` only enters the limit coefficient, which the zero-flux pressure
    does not depend on.
    """
    regimes = regime_sequence(r, lam, eps_list, s)
    cases = [DnsCase(reg, obstacle, g, f1, n_per_cell, cfg, nu, max_cells) for reg in regimes]
    if jobs > 1 and len(cases) > 1 and all(_picklable(c) for c in cases):
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_case, cases))
    else:
        reports = [run_dns(c) for c in cases]

    problem = ReynoldsProblem(f1, g, mu, nu, r, lam, m=m)
    limit = solve_reynolds(problem)
    pred = predicted_exponents(r)
    rows = []
    for rep in reports:
        cmp = compare_to_homogenized(rep, limit, problem)
        rows.append({**rep.summary(), **cmp,
                     "porous_velocity_ratio": rep.norms["porous_velocity"]
                     / rep.eps ** float(pred["porous_velocity_in_eps"])})
    rows.sort(key=lambda row: -row["eps"])

    exponents = {}
    for key in ("porous_velocity", "porous_gradient"):
        pts = [(row["eps"], row[key]) for row in rows]
        try:
            exponents[key] = fit_scaling_exponent(pts)
        except InputError as exc:
            exponents[key] = None
            logger.info("no exponent for %s: %s", key, exc)
    exponents["predicted_porous_velocity"] = float(pred["porous_velocity_in_eps"])
    exponents["predicted_porous_gradient"] = float(pred["porous_gradient_in_eps"])

    film = [row["film_distance"] for row in rows]
    jump = [row["interface_jump"] for row in rows]
    ratio = [row["porous_velocity_ratio"] for row in rows]
    positive = [x for x in ratio if x > 0.0]
    checks = {
        "film_distance_decreasing": all(b < a for a, b in zip(film, film[1:])),
        "interface_jump_decreasing": all(b < a for a, b in zip(jump, jump[1:])),
        "velocity_ratio_spread": (max(positive) / min(positive)) if len(positive) == len(ratio) and positive
        else math.inf,
    }
    checks["velocity_ratio_within_decade"] = checks["velocity_ratio_spread"] <= 10.0
    return StudyResult(rows, reports, limit, exponents, checks)
