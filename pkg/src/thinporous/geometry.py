"""Reference cell, thin two-media domain and staggered grids.

Coordinates: the reference cell is ``Y = (-1/2, 1/2)^2``; the macroscopic
interval is ``omega = (-1/2, 1/2)``.  The porous band occupies
``0 < x2 < h`` and the film ``-eta g(x1) < x2 < 0``; the interface is the
line ``x2 = 0``.

Grids are cell-centred with the MAC convention: horizontal velocity on
vertical faces, vertical velocity on horizontal faces, pressure at cell
centres.  Arrays are indexed ``[i, j]`` with ``i`` along ``x1`` and ``j``
along ``x2``.  A non-periodic side behaves as if the grid were wrapped in a
ring of solid cells, so the tangential no-slip condition sits on the centre
line of that ring (half a cell outside the last fluid row).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, DomainError, GeometryError, RegimeError, ResourceError

DEFAULT_MAX_CELLS = 1_000_000


# ---------------------------------------------------------------------------
# obstacles and cells
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObstacleShape:
    """Solid inclusion ``T`` inside the reference cell.

    ``kind`` is ``"disk"`` (uses ``radius``), ``"rectangle"`` (uses
    ``half_widths``) or ``"polygon"`` (uses ``vertices``, counter-clockwise
    or clockwise).  All lengths are in cell units.
    """

    kind: str
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    half_widths: tuple[float, float] = (0.0, 0.0)
    vertices: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("disk", "rectangle", "polygon"):
            raise GeometryError(f"unknown obstacle kind {self.kind!r}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "half_widths", tuple(float(c) for c in self.half_widths))
        object.__setattr__(
            self, "vertices", tuple((float(a), float(b)) for a, b in self.vertices)
        )
        if self.area() <= 0.0:
            raise GeometryError("obstacle must have positive area")
        if self.clearance() <= 0.0:
            raise GeometryError("obstacle must lie strictly inside the unit cell")

    @classmethod
    def disk(cls, radius, center=(0.0, 0.0)):
        return cls("disk", center=center, radius=float(radius))

    @classmethod
    def rectangle(cls, half_widths, center=(0.0, 0.0)):
        return cls("rectangle", center=center, half_widths=tuple(half_widths))

    @classmethod
    def polygon(cls, vertices):
        return cls("polygon", vertices=tuple(map(tuple, vertices)))

    def bounding_box(self):
        """``(xmin, xmax, ymin, ymax)`` in cell coordinates."""
        if self.kind == "disk":
            cx, cy = self.center
            return cx - self.radius, cx + self.radius, cy - self.radius, cy + self.radius
        if self.kind == "rectangle":
            (cx, cy), (a, b) = self.center, self.half_widths
            return cx - a, cx + a, cy - b, cy + b
        xs = [p[0] for p in self.vertices]
        ys = [p[1] for p in self.vertices]
        return min(xs), max(xs), min(ys), max(ys)

    def clearance(self) -> float:
        """Smallest distance from the bounding box to the cell boundary."""
        xmin, xmax, ymin, ymax = self.bounding_box()
        return min(xmin + 0.5, 0.5 - xmax, ymin + 0.5, 0.5 - ymax)

    def area(self) -> float:
        if self.kind == "disk":
            return math.pi * self.radius**2
        if self.kind == "rectangle":
            return 4.0 * self.half_widths[0] * self.half_widths[1]
        if len(self.vertices) < 3:
            return 0.0
        v = np.asarray(self.vertices)
        x, y = v[:, 0], v[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    def contains(self, y1, y2):
        """Open-set membership test, vectorized over points."""
        y1 = np.asarray(y1, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        cx, cy = self.center
        if self.kind == "disk":
            return (y1 - cx) ** 2 + (y2 - cy) ** 2 < self.radius**2
        if self.kind == "rectangle":
            a, b = self.half_widths
            return (np.abs(y1 - cx) < a) & (np.abs(y2 - cy) < b)
        inside = np.zeros(np.broadcast(y1, y2).shape, dtype=bool)
        verts = self.vertices
        n = len(verts)
        for k in range(n):
            xa, ya = verts[k]
            xb, yb = verts[(k + 1) % n]
            crosses = (ya > y2) != (yb > y2)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = xa + (y2 - ya) * (xb - xa) / (yb - ya)
            inside ^= crosses & (y1 < xint)
        return inside

    def mirrored_x(self) -> "ObstacleShape":
        """Reflection across the ``y1 = 0`` axis."""
        cx, cy = self.center
        if self.kind == "polygon":
            return ObstacleShape.polygon([(-a, b) for a, b in reversed(self.vertices)])
        return ObstacleShape(self.kind, (-cx, cy), self.radius, self.half_widths)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "polygon":
            d["vertices"] = [list(p) for p in self.vertices]
        else:
            d["center"] = list(self.center)
            if self.kind == "disk":
                d["radius"] = self.radius
            else:
                d["half_widths"] = list(self.half_widths)
        return d

    def key(self) -> str:
        """Stable short hash used by the permeability cache."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha1(blob).hexdigest()[:16]


@dataclass(frozen=True)
class UnitCell:
    obstacle: ObstacleShape | None

    @property
    def fluid_fraction(self) -> float:
        if self.obstacle is None:
            return 1.0
        return 1.0 - self.obstacle.area()


# ---------------------------------------------------------------------------
# film profile
# ---------------------------------------------------------------------------


def _closed_form_profile(kind: str, params: dict) -> Callable:
    if kind == "constant":
        value = float(params.get("value", 1.0))
        return lambda x: np.full_like(np.asarray(x, dtype=float), value)
    if kind == "linear":
        left, right = float(params["left"]), float(params["right"])
        return lambda x: left + (right - left) * (np.asarray(x, dtype=float) + 0.5)
    if kind == "cosine":
        mean = float(params.get("mean", 1.0))
        amp = float(params.get("amplitude", 0.0))
        waves = float(params.get("waves", 1.0))
        return lambda x: mean + amp * np.cos(2.0 * np.pi * waves * np.asarray(x, dtype=float))
    raise GeometryError(f"unknown film profile kind {kind!r}")


class FilmProfile:
    """Film thickness profile ``g`` on ``omega`` with bounds ``0 < a <= g <= b``.

    Built either from a closed-form registry entry (``constant``, ``linear``,
    ``cosine``) or from samples on a uniform grid of ``omega``, which are
    linearly interpolated.
    """

    def __init__(self, func=None, *, samples=None, a=None, b=None, kind="custom", params=None):
        if (func is None) == (samples is None):
            raise ContractError("give exactly one of func or samples")
        self.kind = kind
        self.params = dict(params or {})
        if samples is not None:
            samples = np.asarray(samples, dtype=float)
            if samples.ndim != 1 or samples.size < 2:
                raise ContractError("film samples must be a 1D array of length >= 2")
            nodes = np.linspace(-0.5, 0.5, samples.size)
            self._func = lambda x: np.interp(np.asarray(x, dtype=float), nodes, samples)
            self.kind = "samples"
            self.params = {"values": samples.tolist()}
            probe = samples
        else:
            self._func = func
            probe = np.asarray(func(np.linspace(-0.5, 0.5, 1025)), dtype=float)
        self.a = float(np.min(probe)) if a is None else float(a)
        self.b = float(np.max(probe)) if b is None else float(b)
        if not self.a > 0.0:
            raise GeometryError("film lower bound a must be positive")
        if self.a > self.b:
            raise GeometryError("film bounds require a <= b")
        if np.any(probe < self.a - 1e-12) or np.any(probe > self.b + 1e-12):
            raise GeometryError("film profile leaves its declared bounds [a, b]")

    @classmethod
    def constant(cls, value=1.0):
        return cls.from_spec("constant", {"value": value})

    @classmethod
    def from_spec(cls, kind, params=None, a=None, b=None):
        params = dict(params or {})
        if kind == "samples":
            return cls(samples=params["values"], a=a, b=b)
        return cls(_closed_form_profile(kind, params), a=a, b=b, kind=kind, params=params)

    def __call__(self, x):
        return np.asarray(self._func(x), dtype=float)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params, "a": self.a, "b": self.b}

    def __reduce__(self):
        # registry and sampled profiles rebuild from their spec
        if self.kind == "custom":
            raise TypeError("custom film profiles cannot be pickled")
        return (FilmProfile.from_spec, (self.kind, self.params, self.a, self.b))


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

POROUS, FILM = 0, 1


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform cell-centred grid with a solid mask.

    ``x0, y0`` locate the lower-left corner of cell ``(0, 0)``.  ``medium``
    (optional) labels each cell ``POROUS`` or ``FILM``; ``sigma_row`` is the
    horizontal face row lying on the interface.
    """

    nx: int
    ny: int
    dx: float
    dy: float
    x0: float
    y0: float
    periodic: tuple[bool, bool]
    solid: np.ndarray
    medium: np.ndarray | None = None
    sigma_row: int | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        solid = np.asarray(self.solid, dtype=bool)
        if solid.shape != (self.nx, self.ny):
            raise ContractError(f"solid mask shape {solid.shape} != {(self.nx, self.ny)}")
        solid.setflags(write=False)
        object.__setattr__(self, "solid", solid)
        object.__setattr__(self, "periodic", (bool(self.periodic[0]), bool(self.periodic[1])))

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def fluid(self) -> np.ndarray:
        return ~self.solid

    @property
    def fluid_fraction(self) -> float:
        return float(np.mean(~self.solid))

    def xc(self):
        return self.x0 + (np.arange(self.nx) + 0.5) * self.dx

    def yc(self):
        return self.y0 + (np.arange(self.ny) + 0.5) * self.dy

    def xf(self):
        """x-coordinates of vertical face lines (``nx + 1`` values)."""
        return self.x0 + np.arange(self.nx + 1) * self.dx

    def yf(self):
        return self.y0 + np.arange(self.ny + 1) * self.dy

    def with_solid(self, solid) -> "Grid":
        return Grid(self.nx, self.ny, self.dx, self.dy, self.x0, self.y0, self.periodic,
                    solid, self.medium, self.sigma_row, dict(self.info))


def _cell_centres(n):
    return -0.5 + (np.arange(n) + 0.5) / n


def unit_cell_mask(obstacle: ObstacleShape, n: int) -> np.ndarray:
    yc = _cell_centres(n)
    Y1, Y2 = np.meshgrid(yc, yc, indexing="ij")
    return obstacle.contains(Y1, Y2)


def build_unit_cell_grid(cell: UnitCell, n: int) -> Grid:
    """``n x n`` doubly periodic grid on the reference cell."""
    if n < 16:
        raise DomainError(f"unit-cell resolution must be >= 16, got {n}")
    if cell.obstacle is None:
        raise GeometryError("the unit cell needs an obstacle; an empty cell cannot balance the driving force")
    mask = unit_cell_mask(cell.obstacle, n)
    if not mask.any():
        raise GeometryError(f"obstacle is not resolved at n={n}")
    if mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any():
        raise GeometryError(f"obstacle reaches the cell boundary at n={n}")
    h = 1.0 / n
    return Grid(n, n, h, h, -0.5, -0.5, (True, True), mask, info={"kind": "unit_cell"})


def build_channel_grid(n_gap: int, n_x: int = 4, height: float = 1.0, length: float = 1.0,
                       solid=None) -> Grid:
    """Plane channel ``0 < x2 < height``, periodic in ``x1``.

    The walls coincide with the centres of the virtual solid ring, so the
    gap holds ``n_gap - 1`` fluid rows with spacing ``height / n_gap``.
    """
    dy = height / n_gap
    dx = length / n_x
    mask = np.zeros((n_x, n_gap - 1), dtype=bool) if solid is None else solid
    return Grid(n_x, n_gap - 1, dx, dy, 0.0, 0.5 * dy, (True, False), mask,
                info={"kind": "channel", "height": height})


@dataclass(frozen=True)
class PerforatedDomain:
    """The thin porous band over the thin film, ``D = Omega ∪ Sigma ∪ I``."""

    eps: float
    h: float
    eta: float
    obstacle: ObstacleShape
    g: FilmProfile

    def __post_init__(self):
        for name in ("eps", "h", "eta"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise DomainError(f"{name} must lie in (0, 1), got {val!r}")
        inv = 1.0 / self.eps
        if abs(inv - round(inv)) > 1e-9:
            raise DomainError(f"1/eps must be an integer, got eps={self.eps!r}")
        if not self.eps < self.eta:
            raise RegimeError(f"need eps < eta (eps={self.eps}, eta={self.eta})")

    @property
    def n_cells(self) -> int:
        """Number of obstacle cells along omega."""
        return int(round(1.0 / self.eps))

    @property
    def porous_rows(self) -> int:
        ratio = self.h / self.eps
        if ratio < 1.0:
            raise RegimeError(f"h/eps = {ratio:.3g} < 1: the porous band holds no full cell row")
        return max(1, int(round(ratio)))

    @property
    def realized_h(self) -> float:
        return self.porous_rows * self.eps


def build_perforated_domain(params: PerforatedDomain, n_per_cell: int,
                            max_cells: int = DEFAULT_MAX_CELLS) -> Grid:
    """Grid covering porous band and film with obstacles and film wall masked.

    Spacing is ``eps / n_per_cell`` in both directions; the interface is a
    face line.  The film depth is ``eta * b`` rounded up to whole cells and
    cells below ``x2 = -eta g(x1)`` are masked.
    """
    if n_per_cell < 16:
        raise DomainError(f"n_per_cell must be >= 16, got {n_per_cell}")
    if not params.eps < params.h:
        raise RegimeError(f"need eps < h (eps={params.eps}, h={params.h})")
    rows_cells = params.porous_rows
    K = params.n_cells
    d = params.eps / n_per_cell
    nx = K * n_per_cell
    ny_p = rows_cells * n_per_cell
    ny_f = int(math.ceil(params.eta * params.g.b / d - 1e-9))
    ny = ny_p + ny_f
    if nx * ny > max_cells:
        raise ResourceError(f"grid of {nx}x{ny} cells exceeds the cap of {max_cells}")

    cell_mask = unit_cell_mask(params.obstacle, n_per_cell)
    if cell_mask[0, :].any() or cell_mask[-1, :].any() or cell_mask[:, 0].any() or cell_mask[:, -1].any():
        raise GeometryError("obstacle reaches the boundary of its periodicity cell")

    solid = np.zeros((nx, ny), dtype=bool)
    solid[:, ny_f:] = np.tile(cell_mask, (K, rows_cells))
    x0, y0 = -0.5, -ny_f * d
    xc = x0 + (np.arange(nx) + 0.5) * d
    yc = y0 + (np.arange(ny_f) + 0.5) * d
    depth = params.eta * params.g(xc)
    solid[:, :ny_f] = yc[None, :] <= -depth[:, None]

    medium = np.full((nx, ny), POROUS, dtype=np.int8)
    medium[:, :ny_f] = FILM
    info = {
        "kind": "perforated",
        "eps": params.eps,
        "h": params.realized_h,
        "h_requested": params.h,
        "eta": params.eta,
        "n_per_cell": n_per_cell,
        "porous_cell_rows": rows_cells,
        "film_rows": ny_f,
    }
    return Grid(nx, ny, d, d, x0, y0, (False, False), solid, medium, ny_f, info)


# ---------------------------------------------------------------------------
# dilatation of a band field
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BandField:
    """Cell-centred samples on one medium, in physical or reference coordinates."""

    values: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    medium: str
    reference: bool = False
    fluid: np.ndarray | None = None

    @property
    def d1(self) -> float:
        return float(self.x1[1] - self.x1[0]) if self.x1.size > 1 else 1.0

    @property
    def d2(self) -> float:
        return float(self.x2[1] - self.x2[0]) if self.x2.size > 1 else 1.0

    def lp_norm(self, s: float) -> float:
        vals = np.abs(self.values)
        if self.fluid is not None:
            vals = np.where(self.fluid, vals, 0.0)
        if vals.ndim == 3:
            vals = np.sqrt(np.sum(vals**2, axis=0))
        return float((np.sum(vals**s) * self.d1 * self.d2) ** (1.0 / s))


def band_field(grid: Grid, values, medium: str) -> BandField:
    """Restrict a full-grid cell field to one medium of a perforated grid."""
    if grid.medium is None:
        raise ContractError("grid carries no medium labels")
    code = {"porous": POROUS, "film": FILM}[medium]
    j0 = grid.sigma_row
    rows = slice(j0, grid.ny) if code == POROUS else slice(0, j0)
    values = np.asarray(values)
    sub = values[..., :, rows]
    return BandField(sub, grid.xc(), grid.yc()[rows], medium, False, ~grid.solid[:, rows])


def rescale_field(field: BandField, medium: str, thickness: float) -> BandField:
    """Map the vertical coordinate to the fixed reference band.

    Porous: ``z2 = x2 / h``; film: ``z2 = x2 / eta``.  Values are unchanged.
    """
    if medium not in ("porous", "film"):
        raise ContractError(f"unknown medium {medium!r}")
    if field.medium != medium:
        raise ContractError(f"field lives on {field.medium!r}, not {medium!r}")
    if field.reference:
        raise ContractError("field is already in reference coordinates")
    return BandField(field.values, field.x1, field.x2 / thickness, medium, True, field.fluid)


def unscale_field(field: BandField, thickness: float) -> BandField:
    if not field.reference:
        raise ContractError("field is already in physical coordinates")
    return BandField(field.values, field.x1, field.x2 * thickness, field.medium, False, field.fluid)


# ---------------------------------------------------------------------------
# text mask format
# ---------------------------------------------------------------------------


def mask_to_text(grid_or_mask) -> str:
    """One line per grid row, top row first; ``1`` marks a solid cell."""
    mask = grid_or_mask.solid if isinstance(grid_or_mask, Grid) else np.asarray(grid_or_mask)
    lines = ["".join("1" if s else "0" for s in mask[:, j]) for j in range(mask.shape[1] - 1, -1, -1)]
    return "\n".join(lines) + "\n"


def mask_from_text(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or len({len(ln) for ln in lines}) != 1:
        raise ContractError("mask text must have equal-length non-empty rows")
    if set("".join(lines)) - {"0", "1"}:
        raise ContractError("mask text may only contain 0 and 1")
    rows = [[c == "1" for c in ln] for ln in reversed(lines)]
    return np.array(rows, dtype=bool).T
