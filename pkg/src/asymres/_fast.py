"""Numba kernels for the adaptive integrator's inner loop.

The registered models' flat right-hand sides and the Cash-Karp stepping loop
are compiled here; :mod:`asymres.integrator` falls back to the pure-numpy
path when numba is unavailable.  Parameter vectors are packed by
:func:`asymres.dynamics.compiled_rhs`.
"""

import math

import numpy as np
from numba import njit

MODEL_EFFECTIVE = 0
MODEL_EXACT = 1
MODEL_CHAOS = 2

# Cash-Karp coefficients (duplicated from the integrator module so the
# kernel stays self-contained for caching).
_C2, _C3, _C4, _C5, _C6 = 1.0 / 5.0, 3.0 / 10.0, 3.0 / 5.0, 1.0, 7.0 / 8.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0
_A51, _A52, _A53, _A54 = -11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0
_A61, _A62, _A63, _A64, _A65 = (
    1631.0 / 55296.0,
    175.0 / 512.0,
    575.0 / 13824.0,
    44275.0 / 110592.0,
    253.0 / 4096.0,
)
_B1, _B3, _B4, _B6 = 37.0 / 378.0, 250.0 / 621.0, 125.0 / 594.0, 512.0 / 1771.0
_E1 = 37.0 / 378.0 - 2825.0 / 27648.0
_E3 = 250.0 / 621.0 - 18575.0 / 48384.0
_E4 = 125.0 / 594.0 - 13525.0 / 55296.0
_E5 = -277.0 / 14336.0
_E6 = 512.0 / 1771.0 - 1.0 / 4.0


@njit(cache=True, inline="always")
def _rhs_model(model_id, t, y, p, out):
    if model_id == MODEL_EFFECTIVE:
        # p = [d1, d2, half_gamma, lam, back]
        d1, d2, hg, lam, back = p[0], p[1], p[2], p[3], p[4]
        out[0] = -d1 * y[1] - hg * y[0] + lam * y[2]
        out[1] = d1 * y[0] - hg * y[1] + lam * y[3]
        out[2] = -d2 * y[3] - hg * y[2] + back * y[0]
        out[3] = d2 * y[2] - hg * y[3] + back * y[1]
    elif model_id == MODEL_EXACT:
        # p = [d1, d2, wm, hk, hgm, mr, mi, lam, kap]
        d1, d2, wm = p[0], p[1], p[2]
        hk, hgm, mr, mi = p[3], p[4], p[5], p[6]
        lam, kap = p[7], p[8]
        back = kap - lam
        ra1, ia1, rb1, ib1 = y[0], y[1], y[2], y[3]
        ra2, ia2, rb2, ib2 = y[4], y[5], y[6], y[7]
        out[0] = -d1 * ia1 - hk * ra1 + (mr * rb1 + mi * ib1) + lam * ra2
        out[1] = d1 * ra1 - hk * ia1 + (mi * rb1 - mr * ib1) + lam * ia2
        out[2] = wm * ib1 - hgm * rb1 + (mr * ra1 + mi * ia1)
        out[3] = -wm * rb1 - hgm * ib1 + (mi * ra1 - mr * ia1)
        out[4] = -d2 * ia2 - hk * ra2 + (mr * rb2 + mi * ib2) + back * ra1
        out[5] = d2 * ra2 - hk * ia2 + (mi * rb2 - mr * ib2) + back * ia1
        out[6] = wm * ib2 - hgm * rb2 + (mr * ra2 + mi * ia2)
        out[7] = -wm * rb2 - hgm * ib2 + (mi * ra2 - mr * ia2)
    else:
        # p = [wcm, gam, g0, dc, hkc, drive, dce, hkce, lc, feed]
        wcm, gam, g0 = p[0], p[1], p[2]
        dc, hkc, drive = p[3], p[4], p[5]
        dce, hkce, lc, feed = p[6], p[7], p[8], p[9]
        q, mom = y[0], y[1]
        r1, i1, r2, i2 = y[2], y[3], y[4], y[5]
        out[0] = wcm * mom
        out[1] = -wcm * q - gam * mom + g0 * (r1 * r1 + i1 * i1)
        out[2] = -dc * i1 - hkc * r1 - g0 * q * i1 + drive + lc * r2
        out[3] = dc * r1 - hkc * i1 + g0 * q * r1 + lc * i2
        out[4] = -dce * i2 - hkce * r2 + feed * r1
        out[5] = dce * r2 - hkce * i2 + feed * i1


@njit(cache=True, inline="always")
def _eval(model_id, pair, half, t, y, p, out):
    if pair:
        _rhs_model(model_id, t, y[:half], p, out[:half])
        _rhs_model(model_id, t, y[half:], p, out[half:])
    else:
        _rhs_model(model_id, t, y, p, out)


@njit(cache=True)
def advance(model_id, p, pair, t0, t1, y, h_prop, rtol, atol, max_step):
    """Adaptive Cash-Karp sub-steps from t0 to t1; y is updated in place.

    Returns (status, t_fail, h_prop): status 0 = ok, 1 = error bound
    unattainable (step underflow), 2 = state became non-finite.
    """
    n = y.size
    half = n // 2
    k = np.empty((6, n))
    ys = np.empty(n)
    ynew = np.empty(n)
    err = np.empty(n)
    t = t0
    while t < t1:
        rem = t1 - t
        h = h_prop if h_prop < max_step else max_step
        clipped = h >= rem
        if clipped:
            h = rem
        _eval(model_id, pair, half, t, y, p, k[0])
        for i in range(n):
            ys[i] = y[i] + h * (_A21 * k[0, i])
        _eval(model_id, pair, half, t + _C2 * h, ys, p, k[1])
        for i in range(n):
            ys[i] = y[i] + h * (_A31 * k[0, i] + _A32 * k[1, i])
        _eval(model_id, pair, half, t + _C3 * h, ys, p, k[2])
        for i in range(n):
            ys[i] = y[i] + h * (_A41 * k[0, i] + _A42 * k[1, i] + _A43 * k[2, i])
        _eval(model_id, pair, half, t + _C4 * h, ys, p, k[3])
        for i in range(n):
            ys[i] = y[i] + h * (
                _A51 * k[0, i] + _A52 * k[1, i] + _A53 * k[2, i] + _A54 * k[3, i]
            )
        _eval(model_id, pair, half, t + _C5 * h, ys, p, k[4])
        for i in range(n):
            ys[i] = y[i] + h * (
                _A61 * k[0, i]
                + _A62 * k[1, i]
                + _A63 * k[2, i]
                + _A64 * k[3, i]
                + _A65 * k[4, i]
            )
        _eval(model_id, pair, half, t + _C6 * h, ys, p, k[5])

        finite = True
        acc = 0.0
        for i in range(n):
            ynew[i] = y[i] + h * (
                _B1 * k[0, i] + _B3 * k[2, i] + _B4 * k[3, i] + _B6 * k[5, i]
            )
            err[i] = h * (
                _E1 * k[0, i]
                + _E3 * k[2, i]
                + _E4 * k[3, i]
                + _E5 * k[4, i]
                + _E6 * k[5, i]
            )
            if not (math.isfinite(ynew[i]) and math.isfinite(err[i])):
                finite = False
                break
            ay = abs(y[i])
            an = abs(ynew[i])
            m = ay if ay > an else an
            e = err[i] / (atol + rtol * m)
            acc += e * e

        if finite:
            err_norm = math.sqrt(acc / n)
            if err_norm <= 1.0:
                for i in range(n):
                    y[i] = ynew[i]
                t = t1 if clipped else t + h
                if not clipped:
                    if err_norm == 0.0:
                        fac = 5.0
                    else:
                        fac = 0.9 * err_norm ** -0.2
                        if fac > 5.0:
                            fac = 5.0
                        elif fac < 0.2:
                            fac = 0.2
                    h_prop = h * fac
            else:
                fac = 0.9 * err_norm ** -0.2
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
                h_prop = h * fac
        else:
            h_prop = h * 0.2
        floor = 1e-13 * (1.0 if abs(t) < 1.0 else abs(t))
        if h_prop < floor:
            return (2, t, h_prop) if not finite else (1, t, h_prop)
    return (0, t1, h_prop)
