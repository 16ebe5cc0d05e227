"""Numba inner loops for the coordinate-descent fits.

Hand-rolled loops keep every reduction in a fixed order given one binary, so
results are bit-reproducible across runs and worker counts.  Margins are
updated incrementally after each accepted coordinate step and recomputed from
scratch at the start of every sweep to bound float drift.

The hot spot is the per-update refresh of the pair weights
c_p = dw_p * F'(alpha * m_p); libm's scalar exp dominates there, so the
refresh uses a vectorizable exp(-|x|): round-to-nearest via the 1.5 * 2^52
magic constant, a degree-12 Taylor polynomial on |r| <= ln(2)/2, and 2^k
rebuilt by integer exponent arithmetic on an aliased int64 view.  Accuracy is
~1 ulp; inputs below exp(-708) clamp to the smallest normal scale, which is
indistinguishable from zero in every downstream sum.
"""

import numpy as np
from numba import njit

EXP_MAGIC = 6755399441055744.0  # 1.5 * 2^52; adding it rounds to nearest int
EXP_MAGIC_BITS = 0x4338000000000000
EXP_BIAS = 1023
LN2_HI = 6.93147180369123816490e-01
LN2_LO = 1.90821492927058770002e-10
INV_LN2 = 1.44269504088896338700e+00

# 1/k! for the exp(r) Taylor series, k = 12 .. 2
_EXP_COEFS = (
    2.08767569878680989792e-09,
    2.50521083854417187751e-08,
    2.75573192239858906526e-07,
    2.75573192239858925110e-06,
    2.48015873015873015873e-05,
    1.98412698412698412698e-04,
    1.38888888888888888889e-03,
    8.33333333333333333333e-03,
    4.16666666666666666667e-02,
    1.66666666666666666667e-01,
    5.00000000000000000000e-01,
)


@njit(cache=True)
def _refresh_weights(dw, m, alpha, fbuf, ibuf, pbuf, c):
    """c_p = dw_p * e / (1 + e)^2 with e = exp(-|alpha * m_p|).

    ``ibuf`` must be an int64 view aliasing ``fbuf`` (created by the caller
    with ndarray.view); no fastmath here so the magic-constant rounding is
    not algebraically folded away.
    """
    n = m.shape[0]
    for p in range(n):
        x = alpha * m[p]
        if x > 0.0:
            x = -x
        if x < -708.0:
            x = -708.0
        t = x * INV_LN2
        kf = (t + EXP_MAGIC) - EXP_MAGIC
        r = (x - kf * LN2_HI) - kf * LN2_LO
        s = _EXP_COEFS[0]
        s = s * r + _EXP_COEFS[1]
        s = s * r + _EXP_COEFS[2]
        s = s * r + _EXP_COEFS[3]
        s = s * r + _EXP_COEFS[4]
        s = s * r + _EXP_COEFS[5]
        s = s * r + _EXP_COEFS[6]
        s = s * r + _EXP_COEFS[7]
        s = s * r + _EXP_COEFS[8]
        s = s * r + _EXP_COEFS[9]
        s = s * r + _EXP_COEFS[10]
        s = s * r * r + r + 1.0
        pbuf[p] = s
        fbuf[p] = kf + EXP_MAGIC
    for p in range(n):
        ibuf[p] = (ibuf[p] - EXP_MAGIC_BITS + EXP_BIAS) << 52
    for p in range(n):
        e = pbuf[p] * fbuf[p]
        c[p] = dw[p] * e / ((1.0 + e) * (1.0 + e))


@njit(cache=True)
def exp_neg_abs(x_arr, out):
    """exp(-|x|) elementwise via the same path as the weight refresh
    (exposed for accuracy tests)."""
    fbuf = np.empty_like(out)
    ibuf = fbuf.view(np.int64)
    dw = np.empty_like(out)
    pbuf = np.empty_like(out)
    for p in range(out.shape[0]):
        dw[p] = 1.0
    _refresh_weights(dw, x_arr, 1.0, fbuf, ibuf, pbuf, out)
    for p in range(out.shape[0]):
        # invert the logistic-derivative wrapper: recover e from the buffers
        out[p] = pbuf[p] * fbuf[p]


@njit(cache=True, fastmath=True)
def _dot(c, row):
    g = 0.0
    for p in range(c.shape[0]):
        g += c[p] * row[p]
    return g


@njit(cache=True, fastmath=True)
def _axpy(m, row, delta):
    for p in range(m.shape[0]):
        m[p] += delta * row[p]


@njit(cache=True, fastmath=True)
def _refresh_margins(dxt, beta, m):
    d, n_pairs = dxt.shape
    for p in range(n_pairs):
        m[p] = 0.0
    for k in range(d):
        bk = beta[k]
        if bk != 0.0:
            row = dxt[k]
            for p in range(n_pairs):
                m[p] += bk * row[p]


@njit(cache=True)
def cd_fit_smoothed(dxt, dw, norm, anchor, anchor_sign, alpha, lam, step, max_sweeps, tol):
    """Proximal coordinate descent on the smoothed pairwise loss.

    Returns (beta, sweeps, converged, diverged_sweep); diverged_sweep is 0
    unless a non-finite iterate appeared, in which case it names the sweep.
    """
    d, n_pairs = dxt.shape
    beta = np.zeros(d)
    beta[anchor] = anchor_sign
    m = np.empty(n_pairs)
    c = np.empty(n_pairs)
    fbuf = np.empty(n_pairs)
    ibuf = fbuf.view(np.int64)
    pbuf = np.empty(n_pairs)
    coef = -2.0 * alpha / norm
    thr = step * lam
    sweeps = 0
    converged = False
    for sweep in range(1, max_sweeps + 1):
        sweeps = sweep
        _refresh_margins(dxt, beta, m)
        stale = True
        max_delta = 0.0
        for k in range(d):
            if k == anchor:
                continue
            if stale:
                _refresh_weights(dw, m, alpha, fbuf, ibuf, pbuf, c)
                stale = False
            row = dxt[k]
            g = coef * _dot(c, row)
            z = beta[k] - step * g
            if z > thr:
                nb = z - thr
            elif z < -thr:
                nb = z + thr
            else:
                nb = 0.0
            delta = nb - beta[k]
            if delta != 0.0:
                beta[k] = nb
                _axpy(m, row, delta)
                stale = True
                ad = abs(delta)
                if ad > max_delta:
                    max_delta = ad
        for k in range(d):
            if not np.isfinite(beta[k]):
                return beta, sweeps, False, sweep
        if max_delta < tol:
            converged = True
            break
    return beta, sweeps, converged, 0


@njit(cache=True)
def cd_fit_hinge(dxt, dw, norm, anchor, anchor_sign, lam, max_sweeps, tol):
    """Cyclic exact coordinate minimization of the hinge baseline loss.

    Each coordinate subproblem (2/norm) * sum_p dw_p (r_p - delta_p z)_+ +
    lam |z| is piecewise linear and convex; the minimizer is found by a
    breakpoint scan of its subderivative.
    """
    d, n_pairs = dxt.shape
    beta = np.zeros(d)
    beta[anchor] = anchor_sign
    m = np.empty(n_pairs)
    scale = 2.0 / norm
    z_buf = np.empty(n_pairs + 1)
    s_buf = np.empty(n_pairs + 1)
    sweeps = 0
    converged = False
    for sweep in range(1, max_sweeps + 1):
        sweeps = sweep
        _refresh_margins(dxt, beta, m)
        max_delta = 0.0
        for k in range(d):
            if k == anchor:
                continue
            row = dxt[k]
            bk = beta[k]
            # slope of the hinge part as z -> -inf, and breakpoints where a
            # pair toggles activity (slope jumps by scale * dw_p * |delta_p|)
            n_break = 0
            slope = -lam
            for p in range(n_pairs):
                dp = row[p]
                if dp == 0.0:
                    continue
                z_buf[n_break] = (1.0 - m[p] + dp * bk) / dp
                s_buf[n_break] = scale * dw[p] * abs(dp)
                n_break += 1
                if dp > 0.0:
                    slope -= scale * dw[p] * dp
            # |z| kink at zero adds 2*lam to the slope
            z_buf[n_break] = 0.0
            s_buf[n_break] = 2.0 * lam
            n_break += 1
            order = np.argsort(z_buf[:n_break])
            nb = bk
            found = False
            for idx in range(n_break):
                j = order[idx]
                slope += s_buf[j]
                if slope >= 0.0:
                    nb = z_buf[j]
                    found = True
                    break
            if not found:
                nb = bk  # objective flat/decreasing in this direction; hold
            delta = nb - bk
            if delta != 0.0:
                beta[k] = nb
                _axpy(m, row, delta)
                ad = abs(delta)
                if ad > max_delta:
                    max_delta = ad
        for k in range(d):
            if not np.isfinite(beta[k]):
                return beta, sweeps, False, sweep
        if max_delta < tol:
            converged = True
            break
    return beta, sweeps, converged, 0
