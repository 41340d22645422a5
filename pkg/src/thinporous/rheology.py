"""Power-law constitutive algebra.

The flow of an Ostwald-de Waele fluid is described by the stress
``nu * |D|^(r-2) D``.  Everything the solvers need from the constitutive
law lives here: conjugate exponents, the scalar and tensor power maps, and
the regularized viscosity used to keep the Picard linearization finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ContractError, SingularViscosityError

DEFAULT_SHEAR_THINNING_DELTA = 1e-8


def conjugate_exponent(r: float) -> float:
    """Return ``r / (r - 1)``, the Hoelder conjugate of ``r``."""
    if not r > 1.0:
        raise DomainError(f"flow index must exceed 1, got {r!r}")
    return r / (r - 1.0)


def default_delta(r: float) -> float:
    return DEFAULT_SHEAR_THINNING_DELTA if r < 2.0 else 0.0


@dataclass(frozen=True)
class FluidModel:
    """Power-law fluid: flow index ``r``, consistency ``nu`` and the
    strain-rate floor ``delta`` (``None`` picks the default for ``r``)."""

    r: float
    nu: float = 1.0
    delta: float | None = None
    r_conj: float = field(init=False, repr=False)

    def __post_init__(self):
        if not self.r > 1.0:
            raise DomainError(f"flow_index must exceed 1, got {self.r!r}")
        if not self.nu > 0.0:
            raise DomainError(f"consistency must be positive, got {self.nu!r}")
        delta = default_delta(self.r) if self.delta is None else float(self.delta)
        if delta < 0.0:
            raise DomainError(f"regularization must be non-negative, got {delta!r}")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "r_conj", conjugate_exponent(self.r))


def power_map(x, p: float):
    """Scalar power map ``|x|^(p-2) x``, exactly zero at ``x = 0``.

    Works elementwise on arrays.  Evaluated as ``sign(x) |x|^(p-1)`` so the
    removable singularity at the origin never produces ``0 ** negative``.
    """
    if not p > 1.0:
        raise DomainError(f"power map exponent must exceed 1, got {p!r}")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.abs(x) ** (p - 1.0)
    return out if out.ndim else float(out)


def tensor_power_map(xi, r: float, *, atol: float = 1e-12):
    """Tensor power map ``|xi|^(r-2) xi`` with the Frobenius norm.

    ``xi`` is a symmetric 2x2 tensor (or a stack of them with shape
    ``(..., 2, 2)``).  The zero tensor maps to zero.
    """
    if not r > 1.0:
        raise DomainError(f"flow index must exceed 1, got {r!r}")
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-2:] != (2, 2):
        raise ContractError(f"expected (..., 2, 2) tensor, got shape {xi.shape}")
    scale = max(1.0, float(np.max(np.abs(xi)))) if xi.size else 1.0
    if np.any(np.abs(xi[..., 0, 1] - xi[..., 1, 0]) > atol * scale):
        raise ContractError("tensor_power_map requires a symmetric tensor")
    norm = np.sqrt(np.sum(xi * xi, axis=(-2, -1)))
    factor = np.zeros_like(norm)
    nz = norm > 0.0
    factor[nz] = norm[nz] ** (r - 2.0)
    return factor[..., None, None] * xi


def regularized_viscosity(d2, model: FluidModel):
    """Viscosity ``nu (delta^2 + d2)^((r-2)/2)`` for squared strain-rate norm ``d2``.

    Raises ``SingularViscosityError`` for a shear-thinning model without
    regularization evaluated at zero strain rate.
    """
    d2 = np.asarray(d2, dtype=float)
    if np.any(d2 < 0.0):
        raise DomainError("squared strain-rate norm must be non-negative")
    base = model.delta**2 + d2
    if model.r < 2.0 and np.any(base == 0.0):
        raise SingularViscosityError(
            "viscosity is singular at zero strain for r < 2; use delta > 0"
        )
    out = model.nu * base ** ((model.r - 2.0) / 2.0)
    return out if out.ndim else float(out)
