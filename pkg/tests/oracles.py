"""Independent reference computations used by the tests."""

import math

import numpy as np


def channel_profile(y, r, f=1.0, nu=1.0):
    """Unidirectional power-law flow between walls at ``y = 0`` and ``y = 1``.

    Integrates ``nu |D|^(r-2) D12 = -f (y - 1/2)`` with ``D12 = u'/2`` and
    ``|D| = |u'| / sqrt(2)`` in closed form.
    """
    rc = r / (r - 1.0)
    c = (2.0 ** (r / 2.0) * f / nu) ** (rc - 1.0)
    return c * (0.5**rc - np.abs(np.asarray(y) - 0.5) ** rc) / rc


def shoot_film(z2, q, g, nu, r, steps=10_000):
    """Two-point problem ``-(A_r(U'))' = 2^(r/2) q / nu``, ``U(-g) = U(0) = 0``.

    Shooting on the wall stress ``tau0 = A_r(U'(-g))``: the stress is
    linear, ``U' = A_{r'}(tau)`` is integrated with Simpson steps from the
    lower wall, and ``tau0`` is found by bisection on ``U(0)``.  The step
    grid is split at the zero of ``tau`` and graded towards it, where
    ``U'`` behaves like ``|z - zk|^(r'-1)``.
    """
    rc = r / (r - 1.0)
    alpha = rc - 1.0
    beta = 2.0 / (alpha + 1.0)
    F = 2.0 ** (r / 2.0) * q / nu

    def slope(tau):
        return np.sign(tau) * np.abs(tau) ** alpha

    def piece(a, b, n, tau_at, kink_at_a, grade=beta):
        # z = kink + (other - kink) t^grade turns the endpoint singularity into t^1
        t = np.linspace(0.0, 1.0, n + 1)
        tm = 0.5 * (t[:-1] + t[1:])
        k, o = (a, b) if kink_at_a else (b, a)

        def integrand(tt):
            z = k + (o - k) * tt**grade
            jac = np.zeros_like(tt)
            pos = tt > 0 if grade < 1.0 else np.ones_like(tt, dtype=bool)
            jac[pos] = abs(o - k) * grade * tt[pos] ** (grade - 1.0)
            return slope(tau_at(z)) * jac

        w = integrand(t)
        wm = integrand(tm)
        return float(np.sum((w[:-1] + 4 * wm + w[1:]) / (6.0 * n)))

    def integrate(tau0, upto):
        tau_at = lambda z: tau0 - F * (z + g)
        span = upto + g
        zk = tau0 / F - g
        # a kink outside [-g, upto] is still bracketed, so every piece ends on it
        if zk >= upto:
            return piece(-g, zk, steps, tau_at, False) - piece(upto, zk, steps, tau_at, False)
        if zk <= -g:
            return piece(zk, upto, steps, tau_at, True) - piece(zk, -g, steps, tau_at, True)
        n1 = max(2, int(math.ceil(steps * (zk + g) / span)))
        n2 = max(2, int(math.ceil(steps * (upto - zk) / span)))
        return piece(-g, zk, n1, tau_at, False) + piece(zk, upto, n2, tau_at, True)

    if F == 0.0:
        return np.zeros_like(np.asarray(z2, dtype=float))
    lo, hi = -abs(F) * g - 1.0, abs(F) * g + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if integrate(mid, 0.0) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15 * max(1.0, abs(mid)):
            break
    tau0 = 0.5 * (lo + hi)
    return np.array([integrate(tau0, z) if z > -g else 0.0 for z in np.atleast_1d(z2)])


def brute_unfold_norms(values, s, eps, h):
    """Norms of the unfolded field by explicit loops over blocks."""
    nx, ny = values.shape
    n1 = round(eps * nx)
    n2 = round(eps / h * ny)
    K1, K2 = nx // n1, ny // n2
    meas = eps * eps / h / (n1 * n2)
    val = d1 = d2 = 0.0
    for k1 in range(K1):
        for k2 in range(K2):
            blk = values[k1 * n1:(k1 + 1) * n1, k2 * n2:(k2 + 1) * n2]
            val += np.sum(np.abs(blk) ** s) * meas
            d1 += np.sum(np.abs(np.diff(blk, axis=0) * n1) ** s) * meas
            d2 += np.sum(np.abs(np.diff(blk, axis=1) * n2) ** s) * meas
    return val ** (1 / s), d1 ** (1 / s), d2 ** (1 / s)


def brute_source_norms(values, s, eps, h):
    """Source norms with block-local differences, by loops."""
    nx, ny = values.shape
    n1 = round(eps * nx)
    n2 = round(eps / h * ny)
    dz1, dz2 = 1.0 / nx, 1.0 / ny
    val = np.sum(np.abs(values) ** s) * dz1 * dz2
    d1 = d2 = 0.0
    for i in range(nx - 1):
        if (i + 1) % n1:
            d1 += np.sum(np.abs((values[i + 1] - values[i]) / dz1) ** s) * dz1 * dz2
    for j in range(ny - 1):
        if (j + 1) % n2:
            d2 += np.sum(np.abs((values[:, j + 1] - values[:, j]) / dz2) ** s) * dz1 * dz2
    return val ** (1 / s), d1 ** (1 / s), d2 ** (1 / s)


def pressure_drop_flux(f1, G, r, dp):
    """Flux for a prescribed pressure drop, from the scalar balance.

    ``p(1/2) - p(-1/2) = ∫ f1 - A_r(q0) ∫ G^(1-r)`` inverted for ``q0``.
    """
    from scipy.integrate import quad

    F = quad(f1, -0.5, 0.5, epsabs=1e-13, epsrel=1e-12)[0]
    W = quad(lambda z: G(z) ** (1.0 - r), -0.5, 0.5, epsabs=1e-13, epsrel=1e-12)[0]
    x = (F - dp) / W
    return math.copysign(abs(x) ** (1.0 / (r - 1.0)), x)
