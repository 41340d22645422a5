"""Horizontal body-force profiles ``f1(z1)`` on ``omega``.

Profiles are plain picklable objects so they can cross process boundaries
in parallel studies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

KINDS = ("constant", "cosine", "sine", "polynomial", "samples")


@dataclass(frozen=True)
class Forcing:
    """``f1`` by kind.

    ``constant``: ``value``.  ``cosine`` / ``sine``:
    ``amplitude * cos(pi * k * z)`` with wavenumber ``k``.  ``polynomial``:
    ascending ``coefficients``.  ``samples``: ``values`` on a uniform grid
    of ``[-1/2, 1/2]``, linearly interpolated.
    """

    kind: str = "constant"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown forcing kind {self.kind!r}; expected one of {KINDS}")
        vals = self._numbers()
        if not np.all(np.isfinite(vals)):
            raise InputError("forcing parameters must be finite")

    def _numbers(self):
        out = []
        for v in self.params.values():
            out.extend(np.ravel(np.asarray(v, dtype=float)))
        return np.asarray(out, dtype=float)

    def __call__(self, z, *_):
        z = np.asarray(z, dtype=float)
        p = self.params
        if self.kind == "constant":
            return np.full_like(z, float(p.get("value", 1.0)))
        if self.kind in ("cosine", "sine"):
            fn = np.cos if self.kind == "cosine" else np.sin
            return float(p.get("amplitude", 1.0)) * fn(np.pi * float(p.get("k", 1.0)) * z)
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(z, np.asarray(p["coefficients"], dtype=float))
        vals = np.asarray(p["values"], dtype=float)
        return np.interp(z, np.linspace(-0.5, 0.5, vals.size), vals)

    def mirrored(self) -> "Forcing":
        """``z -> f1(-z)``, available for the closed-form kinds."""
        p = dict(self.params)
        if self.kind in ("constant", "cosine"):
            return self
        if self.kind == "sine":
            p["amplitude"] = -float(p.get("amplitude", 1.0))
        elif self.kind == "polynomial":
            c = np.asarray(p["coefficients"], dtype=float)
            p["coefficients"] = [float(x) * (-1) ** i for i, x in enumerate(c)]
        else:
            p["values"] = list(np.asarray(p["values"], dtype=float)[::-1])
        return Forcing(self.kind, p)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **{k: (list(v) if isinstance(v, (list, tuple, np.ndarray)) else v)
                                      for k, v in self.params.items()}}
