"""Critical-regime arithmetic between eps, h, eta and the flow index.

The porous band of thickness ``h`` and the film of thickness ``eta`` carry
pressures of the same order when

    h ~ lam * eta^((2r-1)/(r-1)) * eps^(-r/(r-1)).

Exponents are exact :class:`fractions.Fraction` values whenever ``r`` is
rational (ints, Fractions and floats with a short binary expansion).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

from .errors import ConfigurationError, DomainError, RegimeError

CRITICAL_BAND = (0.1, 10.0)


def as_exponent_number(r):
    """``r`` as a Fraction when it is rational with a small denominator."""
    if isinstance(r, Rational):
        return Fraction(r)
    frac = Fraction(r).limit_denominator(10_000)
    return frac if float(frac) == float(r) else float(r)


def _check_r(r):
    if not r > 1:
        raise DomainError(f"flow index must exceed 1, got {r!r}")


def critical_exponents(r):
    """Exponents ``(a, b)`` with ``h ~ eta^a eps^(-b)``."""
    _check_r(r)
    r = as_exponent_number(r)
    return (2 * r - 1) / (r - 1), r / (r - 1)


def fissure_exponent(r):
    """``s`` such that ``h = 1`` forces ``eta = eps^s``; equals ``r / (2r - 1)``."""
    a, b = critical_exponents(r)
    return b / a


def predicted_exponents(r) -> dict:
    """Exponents of the a-priori velocity and strain-rate bounds."""
    _check_r(r)
    r = as_exponent_number(r)
    vel, grad = r / (r - 1), 1 / (r - 1)
    return {
        "porous_velocity_in_eps": vel,
        "porous_gradient_in_eps": grad,
        "film_velocity_in_eta": vel,
        "film_gradient_in_eta": grad,
    }


@dataclass(frozen=True)
class ThicknessResult:
    h: float
    admissible: bool
    warnings: tuple = ()


def _scale(eps, eta, r):
    a, b = critical_exponents(r)
    return eta ** float(a) * eps ** (-float(b))


def critical_thickness(eps: float, eta: float, r: float, lam: float) -> ThicknessResult:
    """Band thickness of the critical regime with limit ratio ``lam``."""
    _check_r(r)
    if not 0.0 < eps < eta < 1.0:
        raise RegimeError(f"need 0 < eps < eta < 1, got eps={eps!r}, eta={eta!r}")
    if not lam > 0.0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    h = lam * _scale(eps, eta, r)
    warns = []
    if h >= 1.0:
        warns.append(f"h={h:.6g} >= 1: band thicker than the domain")
    if h <= eps:
        warns.append(f"h={h:.6g} <= eps={eps:.6g}: band thinner than one cell")
    return ThicknessResult(h, not warns, tuple(warns))


def lambda_estimate(eps: float, h: float, eta: float, r: float) -> float:
    return h / _scale(eps, eta, r)


def classify_regime(eps: float, h: float, eta: float, r: float) -> dict:
    """``{classification, lambda_est}`` using the decade band around 1."""
    _check_r(r)
    for name, val in (("eps", eps), ("h", h), ("eta", eta)):
        if not 0.0 < val < 1.0:
            raise DomainError(f"{name} must lie in (0, 1), got {val!r}")
    lam = lambda_estimate(eps, h, eta, r)
    lo, hi = CRITICAL_BAND
    if lam < lo:
        kind = "subcritical"
    elif lam > hi:
        kind = "supercritical"
    else:
        kind = "critical"
    return {"classification": kind, "lambda_est": lam}


@dataclass(frozen=True)
class ScalingRegime:
    eps: float
    h: float
    eta: float
    r: float
    lam: float
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        _check_r(self.r)
        for name in ("eps", "h", "eta"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise DomainError(f"{name} must lie in (0, 1), got {val!r}")
        if not (self.eps < self.h and self.eps < self.eta):
            raise RegimeError(f"need eps < h and eps < eta, got {self}")
        est = lambda_estimate(self.eps, self.h, self.eta, self.r)
        if abs(est - self.lam) > 1e-12 * max(1.0, abs(self.lam)):
            raise RegimeError(f"lambda {self.lam!r} inconsistent with fields (estimate {est!r})")

    def classify(self) -> dict:
        return classify_regime(self.eps, self.h, self.eta, self.r)


def default_eta_exponent(r) -> float:
    """Midpoint of the admissible interval ``(r/(2r-1), 1)``."""
    return 0.5 * (float(fissure_exponent(r)) + 1.0)


def regime_sequence(r: float, lam: float, eps_list, s: float | None = None,
                    min_ratio: float = 1.0) -> list[ScalingRegime]:
    """Admissible critical regimes with ``eta = eps^s`` for each ``eps``.

    Entries violating ``eps < h < 1`` or ``eps < eta < 1`` are dropped.
    ``min_ratio > 1`` additionally asks ``eta >= min_ratio * eps`` so that
    the film stays resolvable by the cell grid.
    """
    _check_r(r)
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigurationError("epsilon list must be strictly decreasing")
    if any(not 0.0 < e < 1.0 for e in eps_list):
        raise ConfigurationError("every epsilon must lie in (0, 1)")
    s = default_eta_exponent(r) if s is None else float(s)
    out, reasons = [], []
    for eps in eps_list:
        eta = eps**s
        if not (eps < eta < 1.0 and eta >= min_ratio * eps):
            reasons.append(f"eps={eps:g}: eta={eta:g} violates eps < eta < 1"
                           + (f" or eta >= {min_ratio:g} eps" if min_ratio > 1.0 else ""))
            continue
        h = lam * _scale(eps, eta, r)
        if not eps < h < 1.0:
            reasons.append(f"eps={eps:g}: h={h:g} violates eps < h < 1")
            continue
        # lam recomputed from the stored fields keeps the record self-consistent
        out.append(ScalingRegime(eps, h, eta, r, lambda_estimate(eps, h, eta, r)))
    if not out:
        raise ConfigurationError("no admissible regime: " + "; ".join(reasons))
    return out
