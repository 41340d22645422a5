"""Periodic cell problem and the permeability it defines.

The cell problem is the power-law Stokes system on the fluid part of the
reference cell, driven by the unit force ``e1`` with unit consistency and
periodic in both directions.  Its solution gives the permeability either
as the mean flux of the first velocity component or as the ``r``-energy of
the strain rate; the two agree at the discrete solution.
"""

from __future__ import annotations

import contextlib
import fcntl
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, IncompatibilityError
from .geometry import Grid, ObstacleShape, UnitCell, build_unit_cell_grid
from .rheology import FluidModel
from .stokes import SolverConfig, StokesProblem, power_integral, solve_stokes

logger = logging.getLogger(__name__)

CACHE_ENV = "THINPOROUS_CACHE_DIR"


@dataclass
class CellSolution:
    grid: Grid
    w_u: np.ndarray
    w_v: np.ndarray
    q: np.ndarray
    r: float
    n: int
    mu_flux: float = 0.0
    mu_energy: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def solve_cell(cell: UnitCell, r: float, n: int, cfg: SolverConfig | None = None,
               delta: float | None = None, force: float = 1.0) -> CellSolution:
    """Solve the cell problem at resolution ``n`` and fill both permeabilities.

    ``force`` scales the driving term ``e1`` (kept for homogeneity checks).
    """
    if n < 32:
        raise DomainError(f"cell resolution must be >= 32, got {n}")
    if cell.obstacle is None:
        raise IncompatibilityError(
            "the cell problem needs an obstacle: without drag the periodic force has no balance")
    grid = build_unit_cell_grid(cell, n)
    model = FluidModel(r, 1.0, delta)
    problem = StokesProblem(grid, model, float(force), 0.0)
    sol = solve_stokes(problem, cfg or SolverConfig())
    out = CellSolution(grid, sol.u, sol.v, sol.p, r, n, diagnostics={
        "iterations": sol.iterations,
        "momentum_residual": sol.momentum_residual,
        "max_divergence": sol.max_divergence,
        "delta": model.delta,
    })
    out.mu_flux = permeability_flux(out)
    out.mu_energy = permeability_energy(out, r)
    return out


def permeability_flux(sol: CellSolution) -> float:
    """Integral of the first velocity component over the fluid part of Y."""
    g = sol.grid
    return g.cell_area * float(np.sum(sol.w_u[:-1, :]))


def permeability_energy(sol: CellSolution, r: float | None = None) -> float:
    """Integral of ``|D w|^r`` over the fluid part of Y."""
    r = sol.r if r is None else r
    return power_integral(sol.grid, sol.w_u, sol.w_v, r)


def transverse_flux(sol: CellSolution) -> float:
    return sol.grid.cell_area * float(np.sum(sol.w_v[:, :-1]))


def richardson(values, ratio: float = 2.0):
    """Limit and observed order from three values on grids refined by ``ratio``."""
    a, b, c = values
    d1, d2 = a - b, b - c
    if d2 == 0.0 or d1 / d2 <= 0.0:
        return c, float("nan")
    order = math.log(d1 / d2) / math.log(ratio)
    return c - d2 / (ratio**order - 1.0), order


# ---------------------------------------------------------------------------
# persistent cache
# ---------------------------------------------------------------------------


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "thinporous"


def cache_key(obstacle: ObstacleShape, r: float, n: int, delta: float, cfg: SolverConfig) -> str:
    return f"{obstacle.key()}|r={r!r}|n={n}|delta={delta!r}|{cfg.key()}"


class PermeabilityCache:
    """JSON map from cache key to ``{mu_flux, mu_energy, diagnostics}``.

    Reads take a shared lock, commits an exclusive one and replace the file
    atomically.
    """

    def __init__(self, directory: str | os.PathLike | None = None):
        self.directory = Path(directory) if directory is not None else default_cache_dir()
        self.path = self.directory / "permeability.json"
        self.hits = 0
        self.misses = 0

    @contextlib.contextmanager
    def _lock(self, mode):
        self.directory.mkdir(parents=True, exist_ok=True)
        with open(self.directory / ".permeability.lock", "a") as fh:
            fcntl.flock(fh, mode)
            try:
                yield
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    def _read(self) -> dict:
        if not self.path.exists():
            return {}
        with open(self.path) as fh:
            return json.load(fh)

    def load(self) -> dict:
        with self._lock(fcntl.LOCK_SH):
            return self._read()

    def get(self, key: str):
        return self.load().get(key)

    def put(self, key: str, entry: dict):
        with self._lock(fcntl.LOCK_EX):
            data = self._read()
            data[key] = entry
            fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".perm", suffix=".json")
            with os.fdopen(fd, "w") as fh:
                json.dump(data, fh, indent=1, sort_keys=True)
            os.replace(tmp, self.path)


def permeability(obstacle: ObstacleShape, r: float, n: int, cfg: SolverConfig | None = None,
                 delta: float | None = None, cache: PermeabilityCache | None = None) -> dict:
    """Cached ``{mu_flux, mu_energy, diagnostics, cached}`` for one cell setup."""
    cfg = cfg or SolverConfig()
    delta_val = FluidModel(r, 1.0, delta).delta
    key = cache_key(obstacle, r, n, delta_val, cfg)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            cache.hits += 1
            return {**hit, "cached": True}
        cache.misses += 1
    sol = solve_cell(UnitCell(obstacle), r, n, cfg, delta_val)
    entry = {"mu_flux": sol.mu_flux, "mu_energy": sol.mu_energy, "diagnostics": sol.diagnostics}
    if cache is not None:
        cache.put(key, entry)
    return {**entry, "cached": False}
