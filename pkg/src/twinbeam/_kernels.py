"""Hot inner loops.

Each kernel has a numba ``@njit`` version and a numpy/scipy fallback with the
same signature.  The fallback is used when numba is missing or when the
environment variable ``TWINBEAM_DISABLE_NUMBA`` is set to a non-empty value
other than ``0``.  Both paths are exercised by the test-suite and compared in
``benchmarks/bench_kernels.py``.
"""
import os

import numpy as np
from scipy import signal

_disabled = os.environ.get("TWINBEAM_DISABLE_NUMBA", "").strip() not in ("", "0")

try:
    if _disabled:
        raise ImportError("numba disabled by TWINBEAM_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


# ---------------------------------------------------------------- numpy path

def first_order_filter_np(b0, b1, a1, x, x_prev, y_prev):
    """y[n] = b0 x[n] + b1 x[n-1] - a1 y[n-1]; returns (y, x_last, y_last)."""
    if x.size == 0:
        return np.empty(0), x_prev, y_prev
    zi = np.array([b1 * x_prev - a1 * y_prev])
    y, _ = signal.lfilter([b0, b1], [1.0, a1], x, zi=zi)
    return y, float(x[-1]), float(y[-1])


def balanced_detect_np(a, b, d_plus, d_minus, qe, w_plus, w_minus):
    """Photodiode pair behind a 50/50 splitter, combined by +/- power combiners.

    ``a +/- b`` are the normalized port fluctuations, ``d_plus/d_minus``
    unit vacua admixed by detector inefficiency, scaled by each port's
    share of the total power.  Returns (sum, diff).
    """
    g = np.sqrt(qe)
    h = np.sqrt(1.0 - qe)
    i_plus = g * (a + b) + h * np.sqrt(w_plus) * d_plus
    i_minus = g * (a - b) + h * np.sqrt(w_minus) * d_minus
    return i_plus + i_minus, i_plus - i_minus


def attenuate_np(x, vac, t):
    """Beam-splitter loss with power transmission t and vacuum admixture."""
    return np.sqrt(t) * x + np.sqrt(1.0 - t) * vac


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:
    @njit(cache=True)
    def first_order_filter_nb(b0, b1, a1, x, x_prev, y_prev):
        n = x.shape[0]
        y = np.empty(n)
        xp = x_prev
        yp = y_prev
        for k in range(n):
            xk = x[k]
            yk = b0 * xk + b1 * xp - a1 * yp
            y[k] = yk
            xp = xk
            yp = yk
        return y, xp, yp

    @njit(cache=True)
    def balanced_detect_nb(a, b, d_plus, d_minus, qe, w_plus, w_minus):
        n = a.shape[0]
        s = np.empty(n)
        d = np.empty(n)
        g = np.sqrt(qe)
        hp = np.sqrt((1.0 - qe) * w_plus)
        hm = np.sqrt((1.0 - qe) * w_minus)
        for k in range(n):
            ip = g * (a[k] + b[k]) + hp * d_plus[k]
            im = g * (a[k] - b[k]) + hm * d_minus[k]
            s[k] = ip + im
            d[k] = ip - im
        return s, d

    @njit(cache=True)
    def attenuate_nb(x, vac, t):
        n = x.shape[0]
        out = np.empty(n)
        st = np.sqrt(t)
        sl = np.sqrt(1.0 - t)
        for k in range(n):
            out[k] = st * x[k] + sl * vac[k]
        return out

    def first_order_filter(b0, b1, a1, x, x_prev, y_prev):
        y, xl, yl = first_order_filter_nb(float(b0), float(b1), float(a1),
                                          np.ascontiguousarray(x, dtype=np.float64),
                                          float(x_prev), float(y_prev))
        return y, float(xl), float(yl)

    def balanced_detect(a, b, d_plus, d_minus, qe, w_plus, w_minus):
        return balanced_detect_nb(a, b, d_plus, d_minus, float(qe),
                                  float(w_plus), float(w_minus))

    def attenuate(x, vac, t):
        return attenuate_nb(x, vac, float(t))

    BACKEND = "numba"
else:
    first_order_filter = first_order_filter_np
    balanced_detect = balanced_detect_np
    attenuate = attenuate_np
    BACKEND = "numpy"
