"""Pointwise viscosity kernel on the MAC corner/centre lattice."""

import numpy as np


def _pad_corners_for_centres(a, axis, periodic):
    # corner line k feeds centres k-1 and k; ghost centres see zero corners
    if periodic:
        first = np.take(a, [0], axis=axis)
        return np.concatenate([a, first], axis=axis)
    shape = list(a.shape)
    shape[axis] = 1
    z = np.zeros(shape)
    return np.concatenate([z, a, z], axis=axis)


def _pad_centres_for_corners(a, axis, periodic):
    if periodic:
        last = np.take(a, [-1], axis=axis)
        return np.concatenate([last, a], axis=axis)
    return a


def _pair_sum(a, axis):
    n = a.shape[axis]
    return np.take(a, range(n - 1), axis=axis) + np.take(a, range(1, n), axis=axis)


def viscosity_weights(d11, d22, d12, periodic_x, periodic_y, nu, r, delta):
    """Picard weights and energy sums from the discrete strain rate.

    ``d11, d22`` live on the ``(nx, ny)`` cell centres and ``d12`` on the
    corner lattice.  Non-periodic sides add a ring of ghost centres with
    zero normal strain.  Returns ``(wc, wn, phi_sum, power_sum)`` where
    ``wc``/``wn`` weight the centre/corner strain terms of the linearized
    operator, ``phi_sum`` is the regularized energy density sum
    ``(1/2) sum (delta^2 + s)^(r/2)`` and ``power_sum`` the same with
    ``delta = 0``.
    """
    gx, gy = (0 if periodic_x else 1), (0 if periodic_y else 1)
    nx, ny = d11.shape
    normal = np.zeros((nx + 2 * gx, ny + 2 * gy))
    normal[gx:gx + nx, gy:gy + ny] = d11 * d11 + d22 * d22

    sq12 = d12 * d12
    c = _pad_corners_for_centres(sq12, 0, periodic_x)
    c = _pad_corners_for_centres(c, 1, periodic_y)
    s_c = normal + 0.5 * _pair_sum(_pair_sum(c, 0), 1)

    e = _pad_centres_for_corners(normal, 0, periodic_x)
    e = _pad_centres_for_corners(e, 1, periodic_y)
    s_n = 0.25 * _pair_sum(_pair_sum(e, 0), 1) + 2.0 * sq12

    expo = 0.5 * (r - 2.0)
    base_c = delta * delta + s_c
    base_n = delta * delta + s_n
    with np.errstate(divide="ignore", invalid="ignore"):
        # delta = 0 with r < 2 is only used for the energy sums
        visc_c = nu * base_c**expo
        visc_n = nu * base_n**expo

    vn = _pad_corners_for_centres(visc_n, 0, periodic_x)
    vn = _pad_corners_for_centres(vn, 1, periodic_y)
    avg_n_at_c = 0.25 * _pair_sum(_pair_sum(vn, 0), 1)
    wc = 0.5 * (visc_c + avg_n_at_c)[gx:gx + nx, gy:gy + ny]

    vc = _pad_centres_for_corners(visc_c, 0, periodic_x)
    vc = _pad_centres_for_corners(vc, 1, periodic_y)
    wn = 0.5 * (visc_n + 0.25 * _pair_sum(_pair_sum(vc, 0), 1))

    with np.errstate(invalid="ignore"):
        dens_c = np.where(base_c > 0.0, base_c * visc_c / nu, 0.0)
        dens_n = np.where(base_n > 0.0, base_n * visc_n / nu, 0.0)
    phi_sum = 0.5 * (np.sum(dens_c) + np.sum(dens_n))
    if delta == 0.0:
        power_sum = phi_sum
    else:
        half_r = 0.5 * r
        power_sum = 0.5 * (np.sum(s_c**half_r) + np.sum(s_n**half_r))
    return wc, wn, float(phi_sum), float(power_sum)
