"""Strict TOML run configuration.

Example::

    [fluid]
    r = 2.0
    nu = 1.0

    [cell]
    obstacle = "disk"
    radius = 0.25
    resolution = 64

    [film]
    kind = "constant"
    value = 1.0

    [reynolds]
    flux_mode = "paper_zero_flux"
    m = 1024
    [reynolds.f1]
    kind = "constant"
    value = 1.0

    [regime]
    lambda = 1.0
    epsilon = [0.125, 0.0625]

    [dns]
    enabled = false

    [output]
    directory = "out"
    formats = ["csv", "json", "svg"]

Unknown sections or keys are errors.  Every error names the offending
``[section].key`` and, when it can be found, its line in the file.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigurationError, ThinPorousError
from .forcing import Forcing
from .geometry import FilmProfile, ObstacleShape
from .rheology import FluidModel
from .stokes import SolverConfig

FORMATS = ("csv", "json", "svg")

_OBSTACLE_KEYS = {"disk": {"radius", "center"}, "rectangle": {"half_widths", "center"},
                  "polygon": {"vertices"}}
_FILM_KEYS = {"constant": {"value"}, "linear": {"left", "right"},
              "cosine": {"mean", "amplitude", "waves"}, "samples": {"values"}}
_FORCING_KEYS = {"constant": {"value"}, "cosine": {"amplitude", "k"}, "sine": {"amplitude", "k"},
                 "polynomial": {"coefficients"}, "samples": {"values"}}
_SOLVER_KEYS = {"tol_momentum", "tol_div", "max_picard", "rho", "theta", "max_uzawa", "rho_boost"}

_SECTIONS = {
    "fluid": {"r", "nu", "delta"},
    "cell": {"obstacle", "resolution"} | set().union(*_OBSTACLE_KEYS.values()),
    "film": {"kind", "a", "b"} | set().union(*_FILM_KEYS.values()),
    "reynolds": {"f1", "flux_mode", "q0", "pressure_drop", "m"},
    "regime": {"lambda", "epsilon", "eta_exponent"},
    "dns": {"enabled", "resolution", "max_cells", "jobs"},
    "output": {"directory", "formats"},
    "solver": _SOLVER_KEYS,
}


@dataclass
class RunConfig:
    fluid: FluidModel
    obstacle: ObstacleShape
    cell_resolution: int
    film: FilmProfile
    f1: Forcing
    flux_mode: str = "paper_zero_flux"
    q0: float = 0.0
    pressure_drop: float = 0.0
    m: int = 1024
    lam: float = 1.0
    epsilon: list = field(default_factory=lambda: [0.125, 0.0625])
    eta_exponent: float | None = None
    dns_enabled: bool = False
    dns_resolution: int = 16
    dns_max_cells: int = 1_000_000
    jobs: int = 1
    output_dir: str = "out"
    formats: tuple = FORMATS
    solver: SolverConfig = field(default_factory=SolverConfig)
    source: str = "<config>"
    raw: dict = field(default_factory=dict, repr=False)


def _line_of(text: str, section: str, key: str | None) -> int | None:
    """Best-effort line number of ``key`` inside ``[section]``."""
    current = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[([^\]]+)\]", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return no
            continue
        if key is not None and current == section and re.match(rf"^{re.escape(key)}\s*=", s):
            return no
    return None


class _Reader:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def where(self, section: str, key: str | None = None) -> str:
        path = f"[{section}]" + (f".{key}" if key else "")
        sec, _, sub = section.partition(".")
        line = _line_of(self.text, section, key)
        loc = f"{self.source}:{line}" if line else self.source
        return f"{loc}: {path}"

    def fail(self, section, key, msg):
        err = ConfigurationError(f"{self.where(section, key)}: {msg}")
        err.config_path = f"[{section}]" + (f".{key}" if key else "")
        return err

    def check_keys(self, section, table, allowed):
        if not isinstance(table, dict):
            raise self.fail(section, None, "must be a table")
        for key in table:
            if key not in allowed:
                raise self.fail(section, key, f"unknown key (allowed: {', '.join(sorted(allowed))})")

    def number(self, section, table, key, default=None, kind=float, required=False):
        if key not in table:
            if required:
                raise self.fail(section, key, "missing required key")
            return default
        val = table[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise self.fail(section, key, f"expected a number, got {val!r}")
        if kind is int:
            if isinstance(val, float) and not val.is_integer():
                raise self.fail(section, key, f"expected an integer, got {val!r}")
            return int(val)
        return float(val)


def _wrap(reader, section, key, fn):
    """Run a module constructor, re-labelling its error with the config path."""
    try:
        return fn()
    except ThinPorousError as exc:
        exc.args = (f"{reader.where(section, key)}: {exc}",)
        exc.config_path = f"[{section}]" + (f".{key}" if key else "")
        raise


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        err = ConfigurationError(f"{source}: {exc}")
        err.config_path = ""
        raise err from None
    rd = _Reader(text, source)
    for name in data:
        if name not in _SECTIONS:
            raise rd.fail(name, None, f"unknown section (allowed: {', '.join(sorted(_SECTIONS))})")

    fl = data.get("fluid", {})
    rd.check_keys("fluid", fl, _SECTIONS["fluid"])
    r = rd.number("fluid", fl, "r", required=True)
    nu = rd.number("fluid", fl, "nu", 1.0)
    delta = rd.number("fluid", fl, "delta")
    fluid = _wrap(rd, "fluid", "r", lambda: FluidModel(r, nu, delta))

    cell = data.get("cell", {})
    rd.check_keys("cell", cell, _SECTIONS["cell"])
    kind = cell.get("obstacle", "disk")
    if kind not in _OBSTACLE_KEYS:
        raise rd.fail("cell", "obstacle", f"unknown obstacle {kind!r}")
    extra = set(cell) - _OBSTACLE_KEYS[kind] - {"obstacle", "resolution"}
    if extra:
        raise rd.fail("cell", sorted(extra)[0], f"not used by obstacle {kind!r}")
    center = tuple(cell.get("center", (0.0, 0.0)))
    if kind == "disk":
        radius = rd.number("cell", cell, "radius", 0.25)
        obstacle = _wrap(rd, "cell", "radius", lambda: ObstacleShape.disk(radius, center))
    elif kind == "rectangle":
        hw = tuple(cell.get("half_widths", (0.2, 0.2)))
        obstacle = _wrap(rd, "cell", "half_widths", lambda: ObstacleShape.rectangle(hw, center))
    else:
        if "vertices" not in cell:
            raise rd.fail("cell", "vertices", "missing required key")
        obstacle = _wrap(rd, "cell", "vertices",
                         lambda: ObstacleShape.polygon([tuple(v) for v in cell["vertices"]]))
    resolution = rd.number("cell", cell, "resolution", 64, int)

    film = data.get("film", {})
    rd.check_keys("film", film, _SECTIONS["film"])
    fkind = film.get("kind", "constant")
    if fkind not in _FILM_KEYS:
        raise rd.fail("film", "kind", f"unknown film profile {fkind!r}")
    extra = set(film) - _FILM_KEYS[fkind] - {"kind", "a", "b"}
    if extra:
        raise rd.fail("film", sorted(extra)[0], f"not used by film profile {fkind!r}")
    params = {k: film[k] for k in _FILM_KEYS[fkind] if k in film}
    g = _wrap(rd, "film", None, lambda: FilmProfile.from_spec(
        fkind, params, rd.number("film", film, "a"), rd.number("film", film, "b")))

    rey = data.get("reynolds", {})
    rd.check_keys("reynolds", rey, _SECTIONS["reynolds"])
    f1_tab = rey.get("f1", {"kind": "constant", "value": 1.0})
    if not isinstance(f1_tab, dict):
        raise rd.fail("reynolds", "f1", "must be a table")
    fk = f1_tab.get("kind", "constant")
    if fk not in _FORCING_KEYS:
        raise rd.fail("reynolds.f1", "kind", f"unknown forcing {fk!r}")
    rd.check_keys("reynolds.f1", f1_tab, _FORCING_KEYS[fk] | {"kind"})
    f1 = _wrap(rd, "reynolds.f1", None,
               lambda: Forcing(fk, {k: v for k, v in f1_tab.items() if k != "kind"}))
    flux_mode = rey.get("flux_mode", "paper_zero_flux")
    if flux_mode not in ("paper_zero_flux", "prescribed_flux", "prescribed_pressure_drop"):
        raise rd.fail("reynolds", "flux_mode", f"unknown flux mode {flux_mode!r}")
    m = rd.number("reynolds", rey, "m", 1024, int)
    if m < 64:
        raise rd.fail("reynolds", "m", f"quadrature needs m >= 64, got {m}")

    reg = data.get("regime", {})
    rd.check_keys("regime", reg, _SECTIONS["regime"])
    lam = rd.number("regime", reg, "lambda", 1.0)
    if not lam > 0:
        raise rd.fail("regime", "lambda", "must be positive")
    eps = reg.get("epsilon", [0.125, 0.0625])
    if not isinstance(eps, list) or not eps or not all(
            isinstance(e, (int, float)) and not isinstance(e, bool) for e in eps):
        raise rd.fail("regime", "epsilon", "expected a non-empty list of numbers")

    dns = data.get("dns", {})
    rd.check_keys("dns", dns, _SECTIONS["dns"])
    enabled = dns.get("enabled", False)
    if not isinstance(enabled, bool):
        raise rd.fail("dns", "enabled", "expected true or false")

    out = data.get("output", {})
    rd.check_keys("output", out, _SECTIONS["output"])
    formats = out.get("formats", list(FORMATS))
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        raise rd.fail("output", "formats", f"expected a list drawn from {FORMATS}")

    sol = data.get("solver", {})
    rd.check_keys("solver", sol, _SOLVER_KEYS)
    kw = {}
    for key in _SOLVER_KEYS & set(sol):
        kw[key] = rd.number("solver", sol, key, kind=int if key.startswith("max_") else float)
    solver = _wrap(rd, "solver", None, lambda: SolverConfig(**kw))

    return RunConfig(
        fluid=fluid, obstacle=obstacle, cell_resolution=resolution, film=g, f1=f1,
        flux_mode=flux_mode, q0=rd.number("reynolds", rey, "q0", 0.0),
        pressure_drop=rd.number("reynolds", rey, "pressure_drop", 0.0), m=m, lam=lam,
        epsilon=[float(e) for e in eps], eta_exponent=rd.number("regime", reg, "eta_exponent"),
        dns_enabled=enabled, dns_resolution=rd.number("dns", dns, "resolution", 16, int),
        dns_max_cells=rd.number("dns", dns, "max_cells", 1_000_000, int),
        jobs=rd.number("dns", dns, "jobs", 1, int),
        output_dir=str(out.get("directory", "out")), formats=tuple(dict.fromkeys(formats)),
        solver=solver, source=source, raw=data)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        err = ConfigurationError(f"cannot read config {path}: {exc.strerror}")
        err.config_path = ""
        raise err from None
    return parse_config_text(text, str(path))
