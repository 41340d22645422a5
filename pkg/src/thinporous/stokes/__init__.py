from .solver import (
    MacSystem,
    SolverConfig,
    StokesProblem,
    StokesSolution,
    dissipation,
    energy,
    power_integral,
    residuals,
    solve_stokes,
    work,
)

__all__ = [
    "MacSystem",
    "SolverConfig",
    "StokesProblem",
    "StokesSolution",
    "dissipation",
    "energy",
    "power_integral",
    "residuals",
    "solve_stokes",
    "work",
]
