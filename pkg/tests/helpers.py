"""Independent oracles and statistics shared by the test modules.

Everything here deliberately avoids the code paths it is used to check:
finite differences instead of closed-form derivatives, composite Simpson
instead of the adaptive rule, rejection sampling instead of inverse-CDF
lookup, and a deterministic initial-condition grid instead of Monte Carlo.
"""

import math

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss

from gasrelax.dynamics import _evolve_batch, _records_grid
from gasrelax.model import PhaseState


def numerical_poisson_bracket(f, g, state, eps=1e-6):
    """Central-difference canonical bracket sum_j (df/dz dg/dp - df/dp dg/dz)."""
    z, p = state.z, state.p
    total = 0.0
    for j in range(z.size):
        bump = np.zeros(z.size)
        bump[j] = eps
        df_dz = (f(PhaseState(z + bump, p)) - f(PhaseState(z - bump, p))) / (2 * eps)
        df_dp = (f(PhaseState(z, p + bump)) - f(PhaseState(z, p - bump))) / (2 * eps)
        dg_dz = (g(PhaseState(z + bump, p)) - g(PhaseState(z - bump, p))) / (2 * eps)
        dg_dp = (g(PhaseState(z, p + bump)) - g(PhaseState(z, p - bump))) / (2 * eps)
        total += df_dz * dg_dp - df_dp * dg_dz
    return total


def simpson_integral(f, a, b, n=1 << 15):
    """Composite Simpson rule on n cells (n even)."""
    x = np.linspace(a, b, n + 1)
    y = np.asarray(f(x), dtype=float)
    h = (b - a) / n
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def boltzmann_weight(z, params, tilt=0.0):
    """Inline wall weight exp(-beta V + beta tilt z), zero outside the box."""
    z = np.asarray(z, dtype=float)
    half = 0.5 * params.box_side
    u = z + half
    v = z - half
    inside = (u > 0) & (v < 0)
    us = np.where(inside, u, 1.0)
    vs = np.where(inside, v, -1.0)
    with np.errstate(over="ignore"):
        expo = -params.beta * (params.delta_wall * (us ** -12.0 + vs ** -12.0)
                               - tilt * z)
    return np.where(inside & (expo > -745.0), np.exp(np.maximum(expo, -745.0)), 0.0)


def rejection_sample_z(params, rng, n, tilt=0.0):
    """Exact sampler: uniform proposals accepted with the Boltzmann weight."""
    half = 0.5 * params.box_side
    out = np.empty(n)
    k = 0
    while k < n:
        m = max(4 * (n - k), 1000)
        zc = rng.uniform(-half, half, m)
        acc = zc[rng.random(m) < boltzmann_weight(zc, params, tilt)]
        take = min(acc.size, n - k)
        out[k:k + take] = acc[:take]
        k += take
    return out


def kolmogorov_sf(lam):
    """Asymptotic survival function of the Kolmogorov statistic."""
    if lam < 1e-8:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        total += 2.0 * (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
    return min(max(total, 0.0), 1.0)


def ks_two_sample_pvalue(x, y):
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    grid = np.concatenate([x, y])
    cdf_x = np.searchsorted(x, grid, side="right") / x.size
    cdf_y = np.searchsorted(y, grid, side="right") / y.size
    d = float(np.max(np.abs(cdf_x - cdf_y)))
    ne = x.size * y.size / (x.size + y.size)
    lam = (math.sqrt(ne) + 0.12 + 0.11 / math.sqrt(ne)) * d
    return kolmogorov_sf(lam)


def regularized_gamma_p(a, x):
    """Lower regularized incomplete gamma P(a, x), series/continued fraction."""
    if a <= 0.0 or x < 0.0:
        raise ValueError("need a > 0 and x >= 0")
    if x == 0.0:
        return 0.0
    norm = math.exp(-x + a * math.log(x) - math.lgamma(a))
    if x < a + 1.0:
        term = 1.0 / a
        total = term
        denom = a
        for _ in range(1000):
            denom += 1.0
            term *= x / denom
            total += term
            if abs(term) < abs(total) * 1e-15:
                break
        return total * norm
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return 1.0 - norm * h


def chi2_sf(x, dof):
    return 1.0 - regularized_gamma_p(dof / 2.0, x / 2.0)


def quadrature_autocorr_n1(params, h, t_end, n_times, n_z=256, n_p=64,
                           dt=1e-4, drift_tol=1e-4, weight_cut=1e-30):
    """Single-particle autocorrelation from a deterministic weighted grid.

    Gauss-Legendre nodes in z weighted by the equilibrium density and
    Gauss-Hermite nodes in p replace the Monte-Carlo average over initial
    conditions; the flow itself is the same integrator.  Nodes whose weight
    is below `weight_cut` of the maximum sit deep in the wall layer, carry
    no measurable probability, and are dropped so they cannot dominate the
    step-size requirement.
    """
    from gasrelax.dynamics import IntegratorConfig
    from gasrelax.gibbs import build_marginal

    assert params.n_particles == 1
    marginal = build_marginal(params)
    x, wz = leggauss(n_z)
    z_nodes = 0.5 * params.box_side * x
    wz = wz * 0.5 * params.box_side * marginal.density(z_nodes)
    xp, wp = hermegauss(n_p)
    p_nodes = xp / math.sqrt(params.beta)
    wp = wp / math.sqrt(2.0 * math.pi)
    z0 = np.repeat(z_nodes, n_p)
    p0 = np.tile(p_nodes, n_z)
    w = (wz[:, None] * wp[None, :]).ravel()
    keep = w >= weight_cut * w.max()
    z0, p0, w = z0[keep], p0[keep], w[keep]

    config = IntegratorConfig(dt=dt, t_end=t_end, energy_drift_tol=drift_tol)
    times, dt_run, spr = _records_grid(config, n_times)
    b_rec, _ = _evolve_batch(z0[:, None].copy(), p0[:, None].copy(), params, h,
                             dt_run, spr, n_times, drift_tol,
                             config.wall_guard)
    c = (b_rec * (w * p0)[None, :]).sum(axis=1) / w.sum()
    return times, c
