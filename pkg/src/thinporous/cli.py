"""Command-line front end: ``thinporous <subcommand> [--config FILE] ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cell_problem import PermeabilityCache, permeability
from .config import FORMATS, RunConfig, load_config, parse_config_text
from .dns import DnsCase, compare_to_homogenized, run_dns, run_study
from .errors import InputError, ThinPorousError
from .io import dumps, svg_plot, write_csv, write_json, write_rows_csv
from .reynolds import ReynoldsProblem, solve_reynolds
from .scaling import classify_regime, critical_thickness, default_eta_exponent, regime_sequence
from .unfolding import verify_norm_identities

logger = logging.getLogger("thinporous")

EXIT_CODES = {
    "configuration": 2, "input": 2, "domain": 3, "contract": 4, "geometry": 5, "regime": 6,
    "resource": 7, "singular-viscosity": 8, "incompatibility": 9, "alignment": 10,
    "infeasible": 11, "convergence": 12,
}

DEFAULT_CONFIG = "[fluid]\nr = 2.0\n"


class Run:
    """Resolved config plus output options and the permeability cache."""

    def __init__(self, cfg: RunConfig, out: Path, formats: tuple, jobs: int):
        self.cfg = cfg
        self.out = out
        self.formats = formats
        self.jobs = jobs
        self.cache = PermeabilityCache()

    def wants(self, fmt: str) -> bool:
        # figures never go out without their data
        return fmt in self.formats or (fmt == "csv" and "svg" in self.formats)

    def permeability(self) -> dict:
        c = self.cfg
        return permeability(c.obstacle, c.fluid.r, c.cell_resolution, c.solver, c.fluid.delta,
                            self.cache)

    def cache_summary(self) -> dict:
        return {"hits": self.cache.hits, "cell_solves": self.cache.misses}


def _reynolds_problem(cfg: RunConfig, mu: float) -> ReynoldsProblem:
    return ReynoldsProblem(cfg.f1, cfg.film, mu, cfg.fluid.nu, cfg.fluid.r, cfg.lam, cfg.flux_mode,
                           cfg.q0, cfg.pressure_drop, cfg.m)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_permeability(run: Run) -> dict:
    res = run.permeability()
    out = {"mu_flux": res["mu_flux"], "mu_energy": res["mu_energy"],
           "identity_gap": abs(res["mu_flux"] - res["mu_energy"]) / abs(res["mu_flux"]),
           "diagnostics": res["diagnostics"], "r": run.cfg.fluid.r,
           "resolution": run.cfg.cell_resolution, "obstacle": run.cfg.obstacle.to_dict(),
           "cache": run.cache_summary()}
    if run.wants("json"):
        write_json(run.out / "permeability.json", out)
    if run.wants("csv"):
        write_csv(run.out / "permeability.csv",
                  {"r": [out["r"]], "resolution": [out["resolution"]], "mu_flux": [out["mu_flux"]],
                   "mu_energy": [out["mu_energy"]], "identity_gap": [out["identity_gap"]]})
    return out


def cmd_reynolds(run: Run, mu: float | None = None) -> dict:
    if mu is None:
        mu = run.permeability()["mu_flux"]
    problem = _reynolds_problem(run.cfg, mu)
    sol = solve_reynolds(problem)
    q = np.full_like(sol.z, sol.q0)
    cols = {"z1": sol.z, "p_star": sol.p, "q_flux": q, "V_av_1": sol.V_av[0],
            "Vfilm_av_1": sol.Vfilm_av[0], "G": sol.G}
    if run.wants("csv"):
        write_csv(run.out / "reynolds.csv", cols)
    if "svg" in run.formats:
        svg_plot(run.out / "reynolds.svg",
                 [("p*", sol.z, sol.p), ("V_av,1", sol.z, sol.V_av[0]),
                  ("film V_av,1", sol.z, sol.Vfilm_av[0])],
                 xlabel="z1", title="limit pressure and average velocities")
    idx = np.round(np.linspace(0, sol.z.size - 1, 9)).astype(int)
    out = {"mu": mu, "q0": sol.q0, "flux_mode": problem.flux_mode, "m": problem.m,
           "weak_form_residual": sol.residual,
           "p_star_range": [float(sol.p.min()), float(sol.p.max())],
           "samples": {"z1": sol.z[idx], "p_star": sol.p[idx], "V_av_1": sol.V_av[0][idx]},
           "V_av_1_max_abs": float(np.max(np.abs(sol.V_av[0]))),
           "Vfilm_av_1_max_abs": float(np.max(np.abs(sol.Vfilm_av[0])))}
    if run.wants("json"):
        write_json(run.out / "reynolds.json", out)
    return out


def cmd_critical_regime(run: Run) -> dict:
    c = run.cfg
    r = c.fluid.r
    s = c.eta_exponent if c.eta_exponent is not None else default_eta_exponent(r)
    rows = []
    for eps in c.epsilon:
        eta = eps**s
        row = {"eps": eps, "eta": eta}
        try:
            res = critical_thickness(eps, eta, r, c.lam)
        except ThinPorousError as exc:
            rows.append({**row, "h": float("nan"), "lambda_est": float("nan"),
                         "classification": f"inadmissible: {exc}"})
            continue
        cls = classify_regime(eps, res.h, eta, r) if res.h < 1.0 else {
            "lambda_est": c.lam, "classification": "inadmissible: h >= 1"}
        rows.append({**row, "h": res.h, "lambda_est": cls["lambda_est"],
                     "classification": cls["classification"]})
    fields = ["eps", "eta", "h", "lambda_est", "classification"]
    if run.wants("csv"):
        write_rows_csv(run.out / "critical_regime.csv", rows, fields)
    w = sys.stdout
    w.write(",".join(fields) + "\n")
    for row in rows:
        w.write(",".join(repr(row[f]) if isinstance(row[f], float) else str(row[f]) for f in fields)
                + "\n")
    return {"rows": rows, "eta_exponent": s}


def cmd_unfold_check(run: Run, s_values=(1.5, 2.0, 3.0), seed: int = 0) -> dict:
    c = run.cfg
    reg = regime_sequence(c.fluid.r, c.lam, c.epsilon[:1], c.eta_exponent)[0]
    eps = reg.eps
    rows = max(1, round(reg.h / eps))
    h = rows * eps
    n = c.dns_resolution
    nx, ny = round(1 / eps) * n, rows * n
    rng = np.random.default_rng(seed)
    field = rng.standard_normal((nx, ny))
    results = {}
    for s in s_values:
        rep = verify_norm_identities(field, s, eps, h)
        results[repr(float(s))] = {k: rep[k] for k in ("value_norm_ratio", "dy1_ratio", "dy2_ratio")}
    out = {"eps": eps, "h": h, "grid": [nx, ny], "seed": seed, "ratios": results}
    sys.stdout.write(dumps(out))
    if run.wants("json"):
        write_json(run.out / "unfold_check.json", out)
    return out


def _limit(run: Run, mu: float = 1.0):
    c = run.cfg
    problem = ReynoldsProblem(c.f1, c.film, mu, c.fluid.nu, c.fluid.r, c.lam, m=c.m)
    return problem, solve_reynolds(problem)


def cmd_dns(run: Run) -> dict:
    c = run.cfg
    reg = regime_sequence(c.fluid.r, c.lam, c.epsilon[:1], c.eta_exponent)[0]
    case = DnsCase(reg, c.obstacle, c.film, c.f1, c.dns_resolution, c.solver, c.fluid.nu,
                   c.dns_max_cells)
    rep = run_dns(case)
    problem, limit = _limit(run)
    cmp = compare_to_homogenized(rep, limit, problem)
    tag = f"eps{reg.eps:.6g}"
    if run.wants("csv"):
        for name, fld in (("porous", rep.P1), ("film", rep.P2)):
            X1, Z2 = np.meshgrid(fld.x1, fld.x2, indexing="ij")
            write_csv(run.out / f"dns_{tag}_{name}_pressure.csv",
                      {"z1": X1[fld.fluid], "z2": Z2[fld.fluid], "pressure": fld.values[fld.fluid]})
        write_csv(run.out / f"dns_{tag}_traces.csv", rep.traces)
    if "svg" in run.formats:
        svg_plot(run.out / f"dns_{tag}_traces.svg",
                 [("porous trace", rep.traces["x1"], rep.traces["porous"]),
                  ("film trace", rep.traces["x1"], rep.traces["film"]),
                  ("p*", limit.z, limit.p)], xlabel="z1", title="interface pressure traces")
    out = {**rep.summary(), **cmp, "diagnostics": rep.diagnostics}
    if run.wants("json"):
        write_json(run.out / f"dns_{tag}.json", out)
    return out


def cmd_study(run: Run) -> dict:
    c = run.cfg
    res = run_study(c.fluid.r, c.lam, c.epsilon, c.obstacle, c.film, c.f1, c.eta_exponent,
                    c.dns_resolution, c.solver, run.jobs, 1.0, c.m, c.fluid.nu, c.dns_max_cells)
    if run.wants("csv"):
        write_rows_csv(run.out / "study.csv", res.rows)
    if "svg" in run.formats:
        eps = [row["eps"] for row in res.rows]
        svg_plot(run.out / "study_norms.svg",
                 [(k, eps, [row[k] for row in res.rows])
                  for k in ("porous_velocity", "porous_gradient", "film_velocity")],
                 xlabel="eps", title="velocity norms", loglog=True)
        svg_plot(run.out / "study_distances.svg",
                 [(k, eps, [row[k] for row in res.rows])
                  for k in ("porous_distance", "film_distance", "interface_jump")],
                 xlabel="eps", title="distance to the limit pressure", loglog=True)
    out = {"rows": res.rows, "exponents": res.exponents, "checks": res.checks}
    if run.wants("json"):
        write_json(run.out / "study.json", out)
    return out


def cmd_pipeline(run: Run) -> dict:
    perm = cmd_permeability(run)
    rey = cmd_reynolds(run, perm["mu_flux"])
    summary = {"mu_flux": perm["mu_flux"], "mu_energy": perm["mu_energy"], "q0": rey["q0"],
               "reynolds": rey}
    if run.cfg.dns_enabled:
        study = cmd_study(run)
        summary["norms"] = {row["eps"]: {k: row[k] for k in ("porous_velocity", "porous_gradient",
                                                             "film_velocity", "film_gradient")}
                            for row in study["rows"]}
        summary["distances"] = {row["eps"]: {k: row[k] for k in ("porous_distance",
                                                                 "film_distance", "interface_jump")}
                                for row in study["rows"]}
        summary["exponents"] = study["exponents"]
    summary["cache"] = run.cache_summary()
    write_json(run.out / "summary.json", summary)
    return summary


COMMANDS = {
    "permeability": cmd_permeability,
    "reynolds": cmd_reynolds,
    "critical-regime": cmd_critical_regime,
    "unfold-check": cmd_unfold_check,
    "dns": cmd_dns,
    "study": cmd_study,
    "pipeline": cmd_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thinporous",
                                description="Power-law flow through a thin porous layer over a thin film.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="TOML run configuration")
        sp.add_argument("--out", help="output directory (overrides [output].directory)")
        sp.add_argument("--jobs", type=int, help="parallel DNS cases")
        sp.add_argument("--format", action="append", choices=FORMATS, dest="formats",
                        help="output format; repeat for several")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else parse_config_text(DEFAULT_CONFIG)
        out = Path(args.out or cfg.output_dir)
        formats = tuple(dict.fromkeys(args.formats)) if args.formats else cfg.formats
        jobs = args.jobs if args.jobs is not None else cfg.jobs
        if jobs < 1:
            raise InputError("--jobs must be >= 1")
        result = COMMANDS[args.command](Run(cfg, out, formats, jobs))
    except ThinPorousError as exc:
        payload = {"error": {"category": exc.category, "message": str(exc),
                             "config_path": getattr(exc, "config_path", None)}}
        sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
        return EXIT_CODES.get(exc.category, 1)
    if args.command in ("permeability", "reynolds", "dns", "study", "pipeline"):
        brief = {k: v for k, v in result.items() if not isinstance(v, (dict, list))}
        sys.stdout.write(dumps(brief))
    return 0


if __name__ == "__main__":
    sys.exit(main())
