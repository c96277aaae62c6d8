"""Complex special functions: Faddeeva, complex erf/erfc, Moshinsky functions.

All functions broadcast over numpy arrays. The Moshinsky function is always
evaluated through the Faddeeva function, since the textbook form
``exp(-i k^2 t) * erfc(y)`` overflows for decaying-pole momenta at late times.
"""

import numpy as np
from scipy.special import wofz

from .errors import DomainError, RangeError

_SQRT_PI = np.sqrt(np.pi)
_E_IPI4 = np.exp(0.25j * np.pi)
_E_MIPI4 = np.exp(-0.25j * np.pi)
_LOG_MAX = np.log(np.finfo(float).max)


def _finite(z, name="z"):
    z = np.asarray(z)
    if not np.all(np.isfinite(z)):
        raise DomainError(f"{name} must be finite")
    return z


def _scalar(x):
    return x[()] if isinstance(x, np.ndarray) and x.ndim == 0 else x


def faddeeva_w(z):
    """Faddeeva function w(z) = exp(-z^2) erfc(-iz).

    Backed by :func:`scipy.special.wofz`. Raises :class:`RangeError` where
    the exact value overflows (deep in the lower half plane).
    """
    z = _finite(z).astype(complex)
    with np.errstate(over="ignore", invalid="ignore"):
        w = wofz(z)
    if not np.all(np.isfinite(w)):
        raise RangeError("w(z) exceeds double precision range")
    return _scalar(w)


def erfc_complex(z):
    """Complementary error function for complex argument.

    Uses erfc(z) = exp(-z^2) w(iz) for Re z >= 0 and
    erfc(z) = 2 - erfc(-z) otherwise, so that w is only ever needed in the
    closed upper half plane. The product is formed in log space and a
    :class:`RangeError` is raised if it cannot be represented.
    """
    z = _finite(z).astype(complex)
    s = np.where(z.real >= 0, 1.0, -1.0)
    zz = s * z
    w = wofz(1j * zz)
    expo = -zz * zz
    with np.errstate(divide="ignore"):
        logmag = expo.real + np.log(np.abs(w))
    if np.any(logmag > _LOG_MAX):
        raise RangeError("erfc(z) exceeds double precision range")
    with np.errstate(under="ignore"):
        e = np.exp(expo) * w
    return _scalar(np.where(s > 0, e, 2.0 - e))


def erf_complex(z):
    """Error function for complex argument, erf(z) = 1 - erfc(z)."""
    z = _finite(z).astype(complex)
    s = np.where(z.real >= 0, 1.0, -1.0)
    return _scalar(s * (1.0 - erfc_complex(s * z)))


def erf_pair_sum(u, v):
    """erf(u) + erf(v) without cancelling the +-1 asymptotes.

    When u and v lie in opposite half planes the constant parts cancel
    exactly and only the two complementary functions remain.
    """
    u = _finite(u, "u").astype(complex)
    v = _finite(v, "v").astype(complex)
    su = np.where(u.real >= 0, 1.0, -1.0)
    sv = np.where(v.real >= 0, 1.0, -1.0)
    return _scalar((su + sv) - su * erfc_complex(su * u) - sv * erfc_complex(sv * v))


def chi(x, t):
    """Free-spreading kernel exp(i pi/4) / (2 sqrt(pi t)) * exp(i x^2 / 4t)."""
    t = _finite(t, "t")
    x = _finite(x, "x")
    if np.any(t <= 0):
        raise DomainError("chi requires t > 0")
    return _scalar(_E_IPI4 / (2.0 * np.sqrt(np.pi * t)) * np.exp(1j * x * x / (4.0 * t)))


def moshinsky_m(k, x, t):
    """Moshinsky function M(k, x, t) = 1/2 exp(-ik^2 t) exp(ikx) erfc(y).

    Evaluated as ``0.5 * exp(i x^2 / 4t) * w(i y)`` with
    ``y = exp(-i pi/4) (x - 2kt) / (2 sqrt t)``. At ``t == 0`` the limit
    ``theta(-x) exp(ikx)`` is returned, with theta(0) = 1/2.
    """
    k = _finite(k, "k").astype(complex)
    x = _finite(x, "x").astype(float)
    t = _finite(t, "t").astype(float)
    if np.any(t < 0):
        raise DomainError("moshinsky_m requires t >= 0")
    k, x, t = np.broadcast_arrays(k, x, t)
    out = np.empty(k.shape, dtype=complex)
    pos = t > 0
    if np.any(pos):
        kp, xp, tp = k[pos], x[pos], t[pos]
        st = np.sqrt(tp)
        iy = _E_IPI4 * (xp - 2.0 * kp * tp) / (2.0 * st)
        with np.errstate(over="ignore", invalid="ignore"):
            w = wofz(iy)
        if not np.all(np.isfinite(w)):
            raise RangeError("Moshinsky function exceeds double precision range")
        out[pos] = 0.5 * np.exp(1j * xp * xp / (4.0 * tp)) * w
    zero = ~pos
    if np.any(zero):
        kz, xz = k[zero], x[zero]
        theta = np.where(xz < 0, 1.0, np.where(xz > 0, 0.0, 0.5))
        with np.errstate(over="ignore", invalid="ignore"):
            out[zero] = np.where(theta > 0, theta * np.exp(1j * kz * xz), 0.0)
    return _scalar(out)


def moshinsky_m_naive(k, x, t):
    """Textbook form of M; overflows easily, kept as a cross-check."""
    k = np.asarray(k, dtype=complex)
    y = _E_MIPI4 * (x - 2.0 * k * t) / (2.0 * np.sqrt(t))
    return 0.5 * np.exp(-1j * k * k * t) * np.exp(1j * k * x) * erfc_complex(y)


def moshinsky_script(k, x, t):
    """Shifted Moshinsky function M(k, x, t) + chi(x, t) / k."""
    k = _finite(k, "k").astype(complex)
    if np.any(k == 0):
        raise DomainError("moshinsky_script has a pole at k = 0")
    return _scalar(moshinsky_m(k, x, t) + chi(x, t) / k)
