"""
Compiled scalar formulas and recursions shared by the simulator and the
likelihood.

Every model function is defined exactly once here so that the Python-level
helpers in :mod:`garchx.model` and the compiled loops produce bit-identical
floating point results.

Family codes: 0 standard GARCH, 1 GJR, 2 threshold (T-GARCH), 3 apARCH,
4 family GARCH.  Transform codes: 0 ``|x|``, 1 ``|x|^0.5``, 2 ``x^2``,
3 ``|x|^p``.
"""

import math

import numba as nb
import numpy as np

STANDARD, GJR, TGARCH, APARCH, FGARCH = 0, 1, 2, 3, 4
U_ABS, U_SQRT_ABS, U_SQUARE, U_POWER_ABS = 0, 1, 2, 3

DIVERGENCE_LIMIT = 1e300

# position of beta1 in the parameter layout of each smooth family
BETA_INDEX = (3, 3, 4, 3, 3)


@nb.njit(cache=True)
def root_delta(s, delta):
    if delta == 2.0:
        return math.sqrt(s)
    if delta == 1.0:
        return s
    return s ** (1.0 / delta)


@nb.njit(cache=True)
def power_delta(v, delta):
    if delta == 2.0:
        return v * v
    if delta == 1.0:
        return v
    return v**delta


@nb.njit(cache=True)
def u1_value(ukind, upow, x):
    ax = abs(x)
    if ukind == U_ABS:
        return ax
    if ukind == U_SQRT_ABS:
        return math.sqrt(ax)
    if ukind == U_SQUARE:
        return x * x
    return ax**upow


@nb.njit(cache=True)
def u_value(p, ukind, upow, x):
    return p[1] * u1_value(ukind, upow, x)


@nb.njit(cache=True)
def _asym_base(v, eta):
    # |v| - eta * v, nonnegative for |eta| <= 1
    b = abs(v) - eta * v
    return b if b > 0.0 else 0.0


@nb.njit(cache=True)
def c_value(fam, p, delta, gam, e):
    """c(eps) in the representation driven by the innovation."""
    if fam == STANDARD:
        return p[3] + p[2] * e * e
    if fam == GJR:
        a = p[2] + p[4] if e < 0.0 else p[2]
        return p[3] + a * e * e
    if fam == TGARCH:
        if e > 0.0:
            return p[4] + p[2] * e
        return p[4] - p[3] * e
    if fam == APARCH:
        b = _asym_base(e, p[4])
        return p[3] + p[2] * (b**delta if b > 0.0 else 0.0)
    # FGARCH
    v = e - p[5]
    b = _asym_base(v, p[4])
    return p[3] + p[2] * (b**gam if b > 0.0 else 0.0)


@nb.njit(cache=True)
def g_value(fam, p, delta, gam, e):
    """g(eps) in the innovation representation; a constant for every family."""
    return p[0]


@nb.njit(cache=True)
def arch_fit_value(fam, p, delta, r):
    """ARCH part of g when written in terms of the lagged return (smooth families)."""
    if fam == STANDARD:
        return p[2] * r * r
    if fam == GJR:
        a = p[2] + p[4] if r < 0.0 else p[2]
        return a * r * r
    if fam == TGARCH:
        if r > 0.0:
            return p[2] * r
        return -p[3] * r
    # APARCH
    b = _asym_base(r, p[4])
    if b == 0.0:
        return 0.0
    return p[2] * b**delta


@nb.njit(cache=True)
def g_fit_value(fam, p, delta, r):
    return p[0] + arch_fit_value(fam, p, delta, r)


@nb.njit(cache=True)
def vol_step_value(fam, p, delta, gam, ukind, upow, s_prev, e_prev, x_prev):
    g = g_value(fam, p, delta, gam, e_prev)
    u = u_value(p, ukind, upow, x_prev)
    c = c_value(fam, p, delta, gam, e_prev)
    return g + u + c * s_prev


@nb.njit(cache=True)
def c_array(fam, p, delta, gam, e):
    out = np.empty(e.shape[0])
    for i in range(e.shape[0]):
        out[i] = c_value(fam, p, delta, gam, e[i])
    return out


@nb.njit(cache=True)
def u_array(p, ukind, upow, x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = u_value(p, ukind, upow, x[i])
    return out


@nb.njit(cache=True, nogil=True)
def simulate_kernel(fam, p, delta, gam, ukind, upow, s0, e0, x0, eps, x, out_s, out_r):
    """Run the volatility recursion; returns the 0-based index of divergence or -1."""
    s = s0
    e_prev = e0
    x_prev = x0
    for t in range(eps.shape[0]):
        s = vol_step_value(fam, p, delta, gam, ukind, upow, s, e_prev, x_prev)
        if not (s <= DIVERGENCE_LIMIT):
            return t
        out_s[t] = s
        out_r[t] = root_delta(s, delta) * eps[t]
        e_prev = eps[t]
        x_prev = x[t]
    return -1


@nb.njit(cache=True, nogil=True)
def horizon_sums_kernel(fam, p, delta, gam, ukind, upow, s0, e0, x0, eps, x, warmup):
    """
    Simulate many independent paths (one per row) and return the sum of the
    returns after the first ``warmup`` steps.  Rows that diverge get NaN.
    """
    n, steps = eps.shape
    out = np.empty(n)
    for i in range(n):
        s = s0
        e_prev = e0
        x_prev = x0[i]
        acc = 0.0
        bad = False
        for t in range(steps):
            s = vol_step_value(fam, p, delta, gam, ukind, upow, s, e_prev, x_prev)
            if not (s <= DIVERGENCE_LIMIT):
                bad = True
                break
            if t >= warmup:
                acc += root_delta(s, delta) * eps[i, t]
            e_prev = eps[i, t]
            x_prev = x[i, t]
        out[i] = np.nan if bad else acc
    return out


@nb.njit(cache=True, nogil=True)
def ar1_kernel(x0, phi, noise, out):
    """x_t = phi x_{t-1} + noise_t along the last axis, rows independent."""
    n, steps = noise.shape
    for i in range(n):
        v = x0[i]
        for t in range(steps):
            v = phi * v + noise[i, t]
            out[i, t] = v


# ---------------------------------------------------------------------------
# likelihood recursions


@nb.njit(cache=True)
def sigma_fit_path(fam, p, delta, gam, ukind, upow, r, x, seed):
    """Observed volatility sigma~_t^delta for the data; row 0 carries the seed."""
    n = r.shape[0]
    s = np.empty(n)
    s[0] = seed
    for t in range(1, n):
        if fam == FGARCH:
            sd = root_delta(s[t - 1], delta)
            e = r[t - 1] / sd
            s[t] = vol_step_value(fam, p, delta, gam, ukind, upow, s[t - 1], e, x[t - 1])
        else:
            s[t] = (
                g_fit_value(fam, p, delta, r[t - 1])
                + u_value(p, ukind, upow, x[t - 1])
                + p[BETA_INDEX[fam]] * s[t - 1]
            )
    return s


@nb.njit(cache=True)
def mean_loglik(s, r, delta):
    """Average of -log sigma^2 - R^2 / sigma^2."""
    acc = 0.0
    two_over = 2.0 / delta
    for t in range(r.shape[0]):
        if not (s[t] > 0.0) or not (s[t] < np.inf):
            return -np.inf
        log_s2 = two_over * math.log(s[t])
        acc += -log_s2 - r[t] * r[t] * math.exp(-log_s2)
    return acc / r.shape[0]


@nb.njit(cache=True)
def _dg_fit(fam, p, delta, ukind, upow, r, x, dw, d2w, want_hess):
    """Gradient (and Hessian) of g_fit(r) + lambda u1(x) with respect to theta."""
    m = p.shape[0]
    for i in range(m):
        dw[i] = 0.0
    dw[0] = 1.0
    dw[1] = u1_value(ukind, upow, x)
    if fam == STANDARD:
        dw[2] = r * r
    elif fam == GJR:
        dw[2] = r * r
        dw[4] = r * r if r < 0.0 else 0.0
    elif fam == TGARCH:
        dw[2] = r if r > 0.0 else 0.0
        dw[3] = -r if r <= 0.0 else 0.0
    else:
        eta = p[4]
        b = _asym_base(r, eta)
        if b > 0.0:
            dw[2] = b**delta
            db = -r  # d base / d eta
            dw[4] = p[2] * delta * b ** (delta - 1.0) * db
            if want_hess:
                d2w[2, 4] = delta * b ** (delta - 1.0) * db
                d2w[4, 2] = d2w[2, 4]
                d2w[4, 4] = p[2] * delta * (delta - 1.0) * b ** (delta - 2.0) * db * db
        elif want_hess:
            d2w[2, 4] = 0.0
            d2w[4, 2] = 0.0
            d2w[4, 4] = 0.0


@nb.njit(cache=True)
def loglik_derivatives(fam, p, delta, ukind, upow, r, x, seed, seed_grad, want_hess):
    """
    Forward accumulation of the first and second derivatives of sigma~^delta
    and of the per-observation log-likelihood (smooth families only).

    Returns (mean_ll, score, hessian, a_mat, outer, sigma_delta).
    """
    n = r.shape[0]
    m = p.shape[0]
    bi = BETA_INDEX[fam]
    beta = p[bi]
    two_over = 2.0 / delta

    s_path = np.empty(n)
    ds = seed_grad.copy()
    ds_prev = np.empty(m)
    d2s = np.zeros((m, m))
    d2s_prev = np.zeros((m, m))
    dw = np.zeros(m)
    d2w = np.zeros((m, m))

    score = np.zeros(m)
    hess = np.zeros((m, m))
    a_mat = np.zeros((m, m))
    outer = np.zeros((m, m))
    gt = np.empty(m)
    ll = 0.0
    s = seed

    for t in range(n):
        if t > 0:
            s_prev = s
            for i in range(m):
                ds_prev[i] = ds[i]
            if want_hess:
                for i in range(m):
                    for j in range(m):
                        d2s_prev[i, j] = d2s[i, j]
            _dg_fit(fam, p, delta, ukind, upow, r[t - 1], x[t - 1], dw, d2w, want_hess)
            s = (
                g_fit_value(fam, p, delta, r[t - 1])
                + p[1] * u1_value(ukind, upow, x[t - 1])
                + beta * s_prev
            )
            for i in range(m):
                ds[i] = dw[i] + beta * ds_prev[i]
            ds[bi] += s_prev
            if want_hess:
                for i in range(m):
                    for j in range(m):
                        d2s[i, j] = beta * d2s_prev[i, j]
                if fam == APARCH:
                    d2s[2, 4] += d2w[2, 4]
                    d2s[4, 2] += d2w[4, 2]
                    d2s[4, 4] += d2w[4, 4]
                for i in range(m):
                    d2s[bi, i] += ds_prev[i]
                    d2s[i, bi] += ds_prev[i]
        s_path[t] = s
        log_s2 = two_over * math.log(s)
        ratio = r[t] * r[t] * math.exp(-log_s2)
        ll += -log_s2 - ratio
        inv_s = 1.0 / s
        k1 = two_over * inv_s * (ratio - 1.0)
        for i in range(m):
            gt[i] = k1 * ds[i]
            score[i] += gt[i]
        k2 = inv_s * inv_s
        k3 = (2.0 + delta) / delta * ratio - 1.0
        for i in range(m):
            for j in range(i, m):
                prod = ds[i] * ds[j]
                a_mat[i, j] += k2 * prod
                outer[i, j] += gt[i] * gt[j]
                if want_hess:
                    hess[i, j] += two_over * inv_s * (-inv_s * prod * k3 + d2s[i, j] * (ratio - 1.0))

    for i in range(m):
        score[i] /= n
        for j in range(i, m):
            a_mat[i, j] /= n
            outer[i, j] /= n
            hess[i, j] /= n
            a_mat[j, i] = a_mat[i, j]
            outer[j, i] = outer[i, j]
            hess[j, i] = hess[i, j]
    return ll / n, score, hess, a_mat, outer, s_path
