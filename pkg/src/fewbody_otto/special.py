"""Gamma function and the Gamma ratio entering the two-body eigenvalue condition.

Lanczos approximation (g = 7, nine terms) on the right half-plane, reflection
formula on the left. Works elementwise on numpy arrays.
"""

import numpy as np

_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


class GammaPoleError(ValueError):
    """Raised when Gamma is evaluated at a non-positive integer."""


def sinpi(x):
    """sin(pi x) with exact argument reduction, so it vanishes at integers."""
    x = np.asarray(x, dtype=float)
    r = x - 2.0 * np.round(0.5 * x)  # r in [-1, 1]
    out = np.sin(np.pi * r)
    return np.where(r == np.round(r), 0.0, out)


def _lanczos_series(z):
    # z >= 0.5 expected; returns (log of t**(z-0.5) e^-t sqrt(2pi) part, series)
    zm1 = z - 1.0
    acc = np.full_like(zm1, _LANCZOS_COEF[0])
    for k in range(1, len(_LANCZOS_COEF)):
        acc = acc + _LANCZOS_COEF[k] / (zm1 + k)
    t = zm1 + _LANCZOS_G + 0.5
    return t, acc


def _log_gamma_right(z):
    t, acc = _lanczos_series(z)
    return _HALF_LOG_2PI + (z - 0.5) * np.log(t) - t + np.log(acc)


def _gamma_right(z):
    t, acc = _lanczos_series(z)
    # split the power to stay finite up to z ~ 171
    half = t ** (0.5 * (z - 0.5))
    return np.sqrt(2.0 * np.pi) * half * (half * np.exp(-t)) * acc


def gamma_fn(x):
    """Gamma(x) for real x, raising :class:`GammaPoleError` at the poles."""
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0) & (x == np.round(x))):
        raise GammaPoleError(f"Gamma has a pole at non-positive integer input {x}")
    right = x >= 0.5
    out = np.empty_like(x)
    out[right] = _gamma_right(x[right])
    xl = x[~right]
    out[~right] = np.pi / (sinpi(xl) * _gamma_right(1.0 - xl))
    return out[()] if out.ndim == 0 else out


def rgamma(x):
    """1/Gamma(x); entire, exactly zero at the poles of Gamma."""
    x = np.asarray(x, dtype=float)
    right = x >= 0.5
    out = np.empty_like(x)
    out[right] = 1.0 / _gamma_right(x[right])
    xl = x[~right]
    out[~right] = sinpi(xl) * _gamma_right(1.0 - xl) / np.pi
    return out[()] if out.ndim == 0 else out


def log_abs_gamma(x):
    """Return (log|Gamma(x)|, sign Gamma(x)); log is +inf at poles, sign 0."""
    x = np.asarray(x, dtype=float)
    right = x >= 0.5
    logv = np.empty_like(x)
    sign = np.ones_like(x)
    logv[right] = _log_gamma_right(x[right])
    xl = x[~right]
    s = sinpi(xl)
    with np.errstate(divide="ignore"):
        logv[~right] = np.log(np.pi) - np.log(np.abs(s)) - _log_gamma_right(1.0 - xl)
    sign[~right] = np.sign(s)
    return logv, sign


def gamma_ratio(a, b):
    """Gamma(a)/Gamma(b), with Gamma(b) allowed to sit on a pole (ratio 0).

    Direct evaluation for moderate arguments, log form otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    small = (np.abs(a) < 150.0) & (np.abs(b) < 150.0)
    out = np.empty(a.shape, dtype=float)
    if np.any(small):
        out[small] = gamma_fn(a[small]) * rgamma(b[small])
    big = ~small
    if np.any(big):
        la, sa = log_abs_gamma(a[big])
        lb, sb = log_abs_gamma(b[big])
        with np.errstate(invalid="ignore"):
            val = sa * sb * np.exp(la - lb)
        out[big] = np.where(np.isinf(lb), 0.0, val)
    return out[()] if out.ndim == 0 else out


def log_gamma_ratio_pos(a, b):
    """log(Gamma(a) / Gamma(b)) for a, b >= 1/2 (no reflection needed)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a < 0.5) or np.any(b < 0.5):
        raise ValueError("log_gamma_ratio_pos needs arguments >= 1/2")
    return _log_gamma_right(a) - _log_gamma_right(b)
