"""Discrete unfolding of fields on the rescaled porous band.

The band ``(-1/2, 1/2) x (0, 1)`` is cut into blocks of width ``eps`` and
height ``eps / h``.  Each block is mapped onto the reference cell
``Y = (0, 1)^2`` by ``y1 = (z1 - block origin) / eps`` and
``y2 = h (z2 - block origin) / eps``.  On a grid whose spacing divides the
block sizes this is a pure re-indexing, so norms transfer exactly:

* ``||phi_hat||_{L^s(omega x Y)} = ||phi||_{L^s}``
* ``||d_{y1} phi_hat|| = eps ||d_{z1} phi||``
* ``||d_{y2} phi_hat|| = (eps / h) ||d_{z2} phi||``

with derivatives taken by one-sided differences inside blocks.  Values
outside the fluid are zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, ContractError, DomainError


@dataclass
class UnfoldedField:
    """Block-indexed field.

    ``values`` has shape ``(..., K1, K2, n1, n2)``: leading component axes,
    block indices, then the local ``Y`` grid.
    """

    values: np.ndarray
    eps: float
    h: float
    n1: int
    n2: int
    dz1: float
    dz2: float
    fluid: np.ndarray | None = None

    @property
    def blocks(self) -> tuple[int, int]:
        return self.values.shape[-4], self.values.shape[-3]

    @property
    def dy(self) -> tuple[float, float]:
        return 1.0 / self.n1, 1.0 / self.n2

    @property
    def block_measure(self) -> float:
        return self.eps * self.eps / self.h

    def y_centres(self):
        return (np.arange(self.n1) + 0.5) / self.n1, (np.arange(self.n2) + 0.5) / self.n2


def _as_int(x: float, what: str) -> int:
    k = int(round(x))
    if k < 1 or abs(x - k) > 1e-9 * max(1.0, x):
        raise AlignmentError(f"{what} = {x!r} is not a whole number of grid cells")
    return k


def _layout(shape, eps, h, dz1, dz2):
    nx, ny = shape[-2], shape[-1]
    if not 0.0 < eps < 1.0 or not eps <= h <= 1.0:
        raise DomainError(f"need 0 < eps <= h <= 1, got eps={eps!r}, h={h!r}")
    dz1 = 1.0 / nx if dz1 is None else dz1
    dz2 = 1.0 / ny if dz2 is None else dz2
    n1 = _as_int(eps / dz1, "eps / dz1")
    n2 = _as_int(eps / h / dz2, "(eps / h) / dz2")
    if nx % n1 or ny % n2:
        raise AlignmentError(f"grid {nx}x{ny} is not tiled by {n1}x{n2} blocks")
    return nx // n1, ny // n2, n1, n2, dz1, dz2


def unfold(values, eps: float, h: float, dz1: float | None = None, dz2: float | None = None,
           fluid=None) -> UnfoldedField:
    """Unfold a cell-centred field of shape ``(..., nx, ny)``.

    Grid spacings default to the unit band.  Grids that do not tile into
    whole blocks raise :class:`AlignmentError`; nothing is resampled.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim < 2:
        raise ContractError("field must have at least two axes")
    K1, K2, n1, n2, dz1, dz2 = _layout(values.shape, eps, h, dz1, dz2)
    if fluid is not None:
        fluid = np.asarray(fluid, dtype=bool)
        if fluid.shape != values.shape[-2:]:
            raise ContractError("fluid mask shape does not match the field")
        values = np.where(fluid, values, 0.0)
    lead = values.shape[:-2]
    blocks = values.reshape(*lead, K1, n1, K2, n2)
    nd = len(lead)
    blocks = np.moveaxis(blocks, nd + 2, nd + 1)  # (..., K1, K2, n1, n2)
    mask = None
    if fluid is not None:
        mask = np.moveaxis(fluid.reshape(K1, n1, K2, n2), 2, 1)
    return UnfoldedField(np.ascontiguousarray(blocks), eps, h, n1, n2, dz1, dz2, mask)


def refold(unf: UnfoldedField) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    v = unf.values
    nd = v.ndim - 4
    K1, K2 = unf.blocks
    back = np.moveaxis(v, nd + 1, nd + 2)  # (..., K1, n1, K2, n2)
    return back.reshape(*v.shape[:nd], K1 * unf.n1, K2 * unf.n2)


def _magnitude(arr, lead):
    if lead == 0:
        return np.abs(arr)
    axes = tuple(range(lead))
    return np.sqrt(np.sum(arr**2, axis=axes))


def _lp(arr, s, weight, lead):
    return float((np.sum(_magnitude(arr, lead) ** s) * weight) ** (1.0 / s))


def _blockwise_diff(values, n, axis):
    """One-sided differences along ``axis`` that never cross a block edge.

    Returns the differences with cross-block entries removed, reshaped so
    blocks stay separate.
    """
    size = values.shape[axis]
    moved = np.moveaxis(values, axis, -1)
    blk = moved.reshape(*moved.shape[:-1], size // n, n)
    return np.diff(blk, axis=-1)


def verify_norm_identities(values, s: float, eps: float, h: float, dz1: float | None = None,
                           dz2: float | None = None, fluid=None) -> dict:
    """Ratios of unfolded norms to their predicted multiples of source norms.

    Each ratio is 1 up to rounding.  A derivative whose source norm is zero
    (for example a constant field) is reported as ``1.0`` when the
    unfolded norm is zero as well, and flagged in ``exact_zero``.
    """
    if not s >= 1.0:
        raise DomainError(f"norm exponent must be >= 1, got {s!r}")
    values = np.asarray(values, dtype=float)
    if fluid is not None:
        values = np.where(np.asarray(fluid, dtype=bool), values, 0.0)
    unf = unfold(values, eps, h, dz1, dz2)
    lead = values.ndim - 2
    dy1, dy2 = unf.dy
    # measure of Omega x Y per local cell: block area times the Y cell
    w_hat = unf.block_measure * dy1 * dy2
    w_src = unf.dz1 * unf.dz2

    src_norm = _lp(values, s, w_src, lead)
    hat_norm = _lp(unf.values, s, w_hat, lead)

    d1_src = _blockwise_diff(values, unf.n1, -2) / unf.dz1
    d2_src = _blockwise_diff(values, unf.n2, -1) / unf.dz2
    d1_hat = np.diff(unf.values, axis=-2) / dy1
    d2_hat = np.diff(unf.values, axis=-1) / dy2
    n1_src = eps * _lp(d1_src, s, w_src, lead)
    n2_src = eps / h * _lp(d2_src, s, w_src, lead)
    n1_hat = _lp(d1_hat, s, w_hat, lead)
    n2_hat = _lp(d2_hat, s, w_hat, lead)

    def ratio(a, b):
        if b == 0.0:
            return (1.0, True) if a == 0.0 else (float("inf"), False)
        return a / b, False

    rv, zv = ratio(hat_norm, src_norm)
    r1, z1 = ratio(n1_hat, n1_src)
    r2, z2 = ratio(n2_hat, n2_src)
    return {
        "value_norm_ratio": rv,
        "dy1_ratio": r1,
        "dy2_ratio": r2,
        "exact_zero": {"value": zv, "dy1": z1, "dy2": z2},
        "norms": {"source": src_norm, "unfolded": hat_norm,
                  "dz1_scaled": n1_src, "dy1": n1_hat, "dz2_scaled": n2_src, "dy2": n2_hat},
    }


def cell_average(unf: UnfoldedField) -> np.ndarray:
    """Discrete ``∫_{Y_f} phi_hat dy`` for every block, shape ``(..., K1, K2)``."""
    vals = unf.values
    if unf.fluid is not None:
        vals = np.where(unf.fluid, vals, 0.0)
    dy1, dy2 = unf.dy
    return vals.sum(axis=(-2, -1)) * dy1 * dy2


def global_integral(values, dz1: float, dz2: float) -> float:
    """``∫ phi dz`` by cell sums; the unfolded counterpart is
    ``sum(cell_average) * block_measure``."""
    return float(np.sum(values) * dz1 * dz2)
