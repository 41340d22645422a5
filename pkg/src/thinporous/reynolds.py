"""Coupled generalized Reynolds equation for the limit pressure.

The limit pressure ``p`` on ``omega = (-1/2, 1/2)`` satisfies

    ∫ G(z) A_{r'}(f1 - p') psi' dz = q0 [psi]    for every test function psi,

with ``G = mu / nu^(r'-1) + g^r' / (lam 2^(r'/2) (r'+1) nu^(r'-1))`` and
``A_s(x) = |x|^(s-2) x``.  In one dimension this forces the flux
``G A_{r'}(f1 - p')`` to be the constant ``q0``: zero for the impermeable
ends of the original problem, prescribed or fitted to a pressure drop in
the extension modes.  Inverting the scalar power map gives
``p' = f1 - A_r(q0 / G)`` pointwise and ``p`` follows by quadrature.

Discretization: ``m`` uniform nodes, P1 pressure.  Element averages of
``f1`` and of ``G^(1-r)`` use Simpson's rule with midpoint evaluations, so
the pressure increments are fourth-order accurate and the discrete weak
form holds to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ContractError, DomainError, InfeasibilityError, InputError
from .geometry import FilmProfile
from .rheology import conjugate_exponent, power_map

FLUX_MODES = ("paper_zero_flux", "prescribed_flux", "prescribed_pressure_drop")


@dataclass
class ReynoldsProblem:
    """Data of the limit problem.

    ``f1`` is a callable on ``omega`` or an array of samples on the ``m``
    uniform nodes.  ``r`` is the flow index; the equation itself uses the
    conjugate exponent ``r_conj``.
    """

    f1: object
    g: FilmProfile
    mu: float
    nu: float
    r: float
    lam: float
    flux_mode: str = "paper_zero_flux"
    q0: float = 0.0
    pressure_drop: float = 0.0
    m: int = 1024

    def __post_init__(self):
        for name in ("mu", "nu", "lam"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not self.r > 1.0:
            raise DomainError(f"flow index must exceed 1, got {self.r!r}")
        if self.m < 64:
            raise DomainError(f"quadrature needs m >= 64 nodes, got {self.m}")
        if self.flux_mode not in FLUX_MODES:
            raise ContractError(f"unknown flux mode {self.flux_mode!r}")
        if not callable(self.f1):
            arr = np.asarray(self.f1, dtype=float)
            if arr.shape != (self.m,):
                raise ContractError(f"sampled f1 must have {self.m} values, got {arr.shape}")

    @property
    def r_conj(self) -> float:
        return conjugate_exponent(self.r)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-0.5, 0.5, self.m)

    def force(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if callable(self.f1):
            vals = np.broadcast_to(np.asarray(self.f1(z), dtype=float), z.shape)
        else:
            vals = np.interp(z, self.nodes, np.asarray(self.f1, dtype=float))
        vals = np.array(vals, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise InputError("f1 has non-finite values")
        return vals


def coefficient_G(z, problem: ReynoldsProblem):
    """Porous plus film conductance ``G(z)``."""
    rc = problem.r_conj
    nu_pow = problem.nu ** (rc - 1.0)
    film = problem.g(z) ** rc / (problem.lam * 2.0 ** (rc / 2.0) * (rc + 1.0) * nu_pow)
    out = problem.mu / nu_pow + film
    return out if np.ndim(out) else float(out)


def G_lower_bound(problem: ReynoldsProblem) -> float:
    """``G`` with ``g`` replaced by its lower bound ``a``."""
    rc = problem.r_conj
    nu_pow = problem.nu ** (rc - 1.0)
    return problem.mu / nu_pow + problem.g.a**rc / (
        problem.lam * 2.0 ** (rc / 2.0) * (rc + 1.0) * nu_pow)


def darcy_average_velocity(q, mu: float, nu: float, r: float):
    """Porous average velocity ``(mu / nu^(r'-1)) A_{r'}(q)`` for ``q = f1 - p'``."""
    rc = conjugate_exponent(r)
    return mu / nu ** (rc - 1.0) * power_map(q, rc)


def film_average_velocity_formula(q, g, nu: float, r: float):
    """Film average velocity ``g^r' A_{r'}(q) / (2^(r'/2) (r'+1) nu^(r'-1))``."""
    rc = conjugate_exponent(r)
    g = np.asarray(g, dtype=float)
    out = g**rc / (2.0 ** (rc / 2.0) * (rc + 1.0) * nu ** (rc - 1.0)) * power_map(q, rc)
    return out if np.ndim(out) else float(out)


def film_profile_formula(z2, q, g, nu: float, r: float):
    """Closed-form film velocity across the gap ``-g <= z2 <= 0``.

    Solves ``-(A_r(U'))' = 2^(r/2) q / nu`` with ``U = 0`` at both walls.
    """
    rc = conjugate_exponent(r)
    z2 = np.asarray(z2, dtype=float)
    amp = power_map(2.0 ** (r / 2.0) * np.asarray(q, dtype=float) / nu, rc)
    half = 0.5 * np.asarray(g, dtype=float)
    out = amp * (half**rc - np.abs(z2 + half) ** rc) / rc
    return out if np.ndim(out) else float(out)


@dataclass
class ReynoldsSolution:
    z: np.ndarray
    p: np.ndarray
    q0: float
    dpdz: np.ndarray
    G: np.ndarray
    slopes: np.ndarray
    f_mean: np.ndarray
    G_elem: np.ndarray
    V_av: tuple = ()
    Vfilm_av: tuple = ()
    residual: float = 0.0
    bisection_steps: int = 0
    info: dict = field(default_factory=dict)


def _element_data(problem: ReynoldsProblem):
    z = problem.nodes
    mid = 0.5 * (z[:-1] + z[1:])
    f_n, f_m = problem.force(z), problem.force(mid)
    f_mean = (f_n[:-1] + 4.0 * f_m + f_n[1:]) / 6.0
    G_n = np.asarray(coefficient_G(z, problem), dtype=float)
    G_m = np.asarray(coefficient_G(mid, problem), dtype=float)
    e = 1.0 - problem.r
    inv_mean = (G_n[:-1] ** e + 4.0 * G_m**e + G_n[1:] ** e) / 6.0
    return z, f_n, f_mean, G_n, inv_mean


def _slopes(q0, f_mean, inv_mean, r):
    return f_mean - power_map(q0, r) * inv_mean


def _bracket_and_bisect(phi: Callable[[float], float], start: float = 1.0, cap: float = 1e12):
    Q = abs(start) or 1.0
    while not (phi(-Q) > 0.0 > phi(Q)):
        if phi(-Q) == 0.0:
            return -Q, 0
        if phi(Q) == 0.0:
            return Q, 0
        Q *= 2.0
        if Q > cap:
            raise InfeasibilityError("pressure drop unreachable: flux bracket exceeded 1e12")
    lo, hi = -Q, Q
    steps = 0
    while True:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi or steps > 2000:
            break
        steps += 1
        val = phi(mid)
        if val > 0.0:
            lo = mid
        elif val < 0.0:
            hi = mid
        else:
            lo = hi = mid
            break
    return 0.5 * (lo + hi), steps


def solve_reynolds(problem: ReynoldsProblem, bracket_start: float = 1.0) -> ReynoldsSolution:
    """Limit pressure, flux and both average velocities."""
    z, f_n, f_mean, G_n, inv_mean = _element_data(problem)
    r = problem.r
    h = z[1] - z[0]
    steps = 0
    if problem.flux_mode == "paper_zero_flux":
        q0 = 0.0
    elif problem.flux_mode == "prescribed_flux":
        q0 = float(problem.q0)
    else:
        target = float(problem.pressure_drop)

        def phi(q):
            return float(np.sum(_slopes(q, f_mean, inv_mean, r)) * h) - target

        q0, steps = _bracket_and_bisect(phi, bracket_start)

    slopes = _slopes(q0, f_mean, inv_mean, r)
    p = np.concatenate([[0.0], np.cumsum(slopes * h)])
    dpdz = f_n - power_map(q0 / G_n, r)
    # trapezoid mean with the endpoint-derivative correction
    mean = h * (np.sum(p) - 0.5 * (p[0] + p[-1])) - h**2 / 12.0 * (dpdz[-1] - dpdz[0])
    p = p - mean
    G_elem = inv_mean ** (-(problem.r_conj - 1.0))
    sol = ReynoldsSolution(z, p, q0, dpdz, G_n, slopes, f_mean, G_elem, bisection_steps=steps,
                           info={"mean_before_shift": mean})
    sol.V_av = darcy_velocity(sol, problem)
    sol.Vfilm_av = film_average_velocity(sol, problem)
    sol.residual = weak_form_residual(sol, problem)
    return sol


def pressure_gradient_gap(sol: ReynoldsSolution, problem: ReynoldsProblem):
    """``q = f1 - p'`` at the nodes."""
    return problem.force(sol.z) - sol.dpdz


def darcy_velocity(sol: ReynoldsSolution, problem: ReynoldsProblem):
    q = pressure_gradient_gap(sol, problem)
    v1 = np.asarray(darcy_average_velocity(q, problem.mu, problem.nu, problem.r), dtype=float)
    return v1, np.zeros_like(v1)


def film_average_velocity(sol: ReynoldsSolution, problem: ReynoldsProblem):
    q = pressure_gradient_gap(sol, problem)
    v1 = np.asarray(film_average_velocity_formula(q, problem.g(sol.z), problem.nu, problem.r),
                    dtype=float)
    return v1, np.zeros_like(v1)


def film_velocity_profile(z1, z2, sol: ReynoldsSolution, problem: ReynoldsProblem):
    """Film velocity at ``(z1, z2)`` for the solved pressure."""
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    g = problem.g(z1)
    tol = 1e-12 * np.maximum(1.0, g)
    if np.any(z2 > tol) or np.any(z2 < -g - tol):
        raise DomainError("z2 must lie in the film [-g(z1), 0]")
    q = problem.force(z1) - power_map(sol.q0 / np.asarray(coefficient_G(z1, problem)), problem.r)
    return film_profile_formula(np.clip(z2, -g, 0.0), q, g, problem.nu, problem.r)


def _legendre_tests(z, k):
    """Derivatives of the shifted Legendre polynomials ``P_1..P_k`` and the
    values of ``P_0..P_k`` on ``[-1/2, 1/2]``."""
    t = 2.0 * z
    vals, ders = [], []
    for j in range(k + 1):
        c = np.zeros(j + 1)
        c[j] = 1.0
        vals.append(np.polynomial.legendre.legval(t, c))
        ders.append(2.0 * np.polynomial.legendre.legval(t, np.polynomial.legendre.legder(c)))
    return np.array(vals), np.array(ders)


def weak_form_residual(sol: ReynoldsSolution, problem: ReynoldsProblem, k: int = 6,
                       p=None) -> float:
    """Largest weak-form residual over polynomial test functions of degree <= k.

    The discrete form uses the P1 interpolant of ``p``: on each element the
    pressure slope comes from the nodal values, ``f1`` and ``G`` enter
    through their element quadratures.  The boundary flux term
    ``q0 [psi]`` (zero in zero-flux mode) is subtracted.
    """
    z = sol.z
    p = sol.p if p is None else np.asarray(p, dtype=float)
    slope = np.diff(p) / np.diff(z)
    flux = sol.G_elem * power_map(sol.f_mean - slope, problem.r_conj)
    vals, _ = _legendre_tests(z, k)
    out = 0.0
    for psi in vals:
        lhs = float(np.sum(flux * np.diff(psi)))
        out = max(out, abs(lhs - sol.q0 * (psi[-1] - psi[0])))
    return out


def tridiagonal_newtonian(problem: ReynoldsProblem) -> np.ndarray:
    """Direct P1 solve of the ``r = 2`` weak form (reference path).

    Assembles the Neumann stiffness matrix with the element coefficients,
    pins the first node and returns nodal pressures with ``p[0] = 0``.
    """
    from scipy.linalg import solve_banded

    if problem.r != 2.0:
        raise ContractError("the tridiagonal reference solve is linear and needs r = 2")
    if problem.flux_mode == "prescribed_pressure_drop":
        raise ContractError("reference solve supports the flux modes only")
    z, _, f_mean, _, inv_mean = _element_data(problem)
    Ge = 1.0 / inv_mean
    h = z[1] - z[0]
    m = z.size
    q0 = 0.0 if problem.flux_mode == "paper_zero_flux" else float(problem.q0)
    diag = np.zeros(m)
    off = -Ge / h
    diag[:-1] += Ge / h
    diag[1:] += Ge / h
    rhs = np.zeros(m)
    # ∫ G p' psi' = ∫ G f psi' - q0 [psi]
    rhs[:-1] -= Ge * f_mean
    rhs[1:] += Ge * f_mean
    rhs[0] += q0
    rhs[-1] -= q0
    # pin p[0] = 0
    diag[0] = 1.0
    rhs[0] = 0.0
    upper = off.copy()
    upper[0] = 0.0
    ab = np.zeros((3, m))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = off
    return solve_banded((1, 1), ab, rhs)
