"""Free evolution of an S-wave packet initially confined to (0, a).

The modes are the infinite-well levels psi_n(r, 0) = sqrt(2/a) sin(n pi r/a)
on (0, a); their free evolution has a closed form in complex error functions.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError
from .specfun import erf_pair_sum

_E_3IPI4 = np.exp(0.75j * np.pi)


@dataclass(frozen=True)
class FreeModeParams:
    a: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("a must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")


@dataclass(frozen=True)
class Superposition:
    """Coefficients ``c_n`` of an initial state sum_n c_n psi_n(r, 0)."""

    a: float
    n: tuple
    c: tuple

    def __post_init__(self):
        n = np.asarray(self.n)
        if len(n) == 0 or len(n) != len(self.c):
            raise DomainError("superposition needs matching, non-empty n and c")
        if np.any(n < 1) or len(set(n.tolist())) != len(n):
            raise DomainError("mode numbers must be distinct positive integers")
        norm = float(np.sum(np.abs(np.asarray(self.c)) ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"coefficients must be normalised, sum |c|^2 = {norm!r}")

    @classmethod
    def from_terms(cls, a, terms, normalize=False):
        """Build from ``[(n, c_n), ...]``; ``normalize`` rescales the c_n."""
        n = tuple(int(t[0]) for t in terms)
        c = np.array([complex(t[1]) for t in terms])
        if normalize:
            c = c / np.sqrt(np.sum(np.abs(c) ** 2))
        return cls(float(a), n, tuple(complex(x) for x in c))

    @classmethod
    def from_vector(cls, a, c):
        """Coefficients for n = 1..len(c)."""
        c = np.asarray(c, dtype=complex)
        c = c / np.linalg.norm(c)
        return cls(float(a), tuple(range(1, len(c) + 1)), tuple(complex(x) for x in c))

    @property
    def modes(self):
        return np.asarray(self.n, dtype=int)

    @property
    def coefficients(self):
        return np.asarray(self.c, dtype=complex)


def propagator_K(r, rp, tau):
    """S-wave free propagator.

        K = exp(3 i pi/4) / (2 sqrt(pi tau)) [exp(i (r + r')^2 / 4 tau) - exp(i (r - r')^2 / 4 tau)]
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise DomainError("propagator requires tau > 0")
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    if np.any(r < 0) or np.any(rp < 0):
        raise DomainError("radii must be non-negative")
    pref = _E_3IPI4 / (2.0 * np.sqrt(np.pi * tau))
    # difference of the exponentials without cancellation for small r r'/tau
    s = (r * r + rp * rp) / (4.0 * tau)
    d = r * rp / (2.0 * tau)
    return pref * np.exp(1j * s) * 2j * np.sin(d)


def _brackets(n, a, r, tau):
    st = np.sqrt(tau)
    q = (1 - 1j) / (2.0 * a * np.sqrt(2.0))

    def xi(t, sign):
        return q * (2.0 * np.pi * n * t + a * a + sign * a * r) / st

    plus = erf_pair_sum(xi(-tau, +1.0), xi(tau, -1.0))
    minus = erf_pair_sum(xi(tau, +1.0), xi(-tau, -1.0))
    return plus, minus


def _check(n, a, r, tau):
    r = np.asarray(r, dtype=float)
    tau = np.asarray(tau, dtype=float)
    n = np.asarray(n)
    if np.any(r < 0):
        raise DomainError("r must be non-negative")
    if np.any(tau < 0):
        raise DomainError("tau must be non-negative")
    if not a > 0:
        raise DomainError("a must be positive")
    return np.broadcast_arrays(n, r, tau)


def _mode_values(n, a, r, tau, derivative):
    n, r, tau = _check(n, a, r, tau)
    out = np.empty(r.shape, dtype=complex)
    zero = tau == 0
    if np.any(zero):
        nz, rz = n[zero], r[zero]
        k = nz * np.pi / a
        inside = rz < a
        if derivative:
            out[zero] = np.where(inside, k * np.sqrt(2.0 / a) * np.cos(k * rz), 0.0)
        else:
            out[zero] = np.where(inside, np.sqrt(2.0 / a) * np.sin(k * rz), 0.0)
    pos = ~zero
    if np.any(pos):
        nn, rr, tt = n[pos], r[pos], tau[pos]
        plus, minus = _brackets(nn, a, rr, tt)
        phase = np.exp(-1j * (np.pi * nn / a) ** 2 * tt)
        e = np.exp(1j * np.pi * nn * rr / a)
        if derivative:
            out[pos] = (nn * np.pi / (2.0 * np.sqrt(2.0) * a ** 1.5)) * phase * (plus * e + minus / e)
        else:
            out[pos] = (-1j / (2.0 * np.sqrt(2.0 * a))) * phase * (plus * e - minus / e)
    return out[()] if out.ndim == 0 else out


def psi_free(params, r, tau):
    """Freely evolved level psi_n(r, tau); tau = 0 returns the initial level."""
    return _mode_values(params.n, params.a, r, tau, derivative=False)


def dpsi_free_dr(params, r, tau):
    """Radial derivative of :func:`psi_free`."""
    return _mode_values(params.n, params.a, r, tau, derivative=True)


def mode_table(n_max, a, r, tau):
    """Values and derivatives of modes 1..n_max, shape ``(n_max,) + broadcast(r, tau)``."""
    shape = np.broadcast(np.asarray(r), np.asarray(tau)).shape
    n = np.arange(1, n_max + 1).reshape((n_max,) + (1,) * len(shape))
    return (_mode_values(n, a, r, tau, derivative=False),
            _mode_values(n, a, r, tau, derivative=True))


def superpose(sup, r, tau):
    """Psi and dPsi/dr of a superposition at (r, tau)."""
    shape = np.broadcast(np.asarray(r), np.asarray(tau)).shape
    n = sup.modes.reshape((-1,) + (1,) * len(shape))
    c = sup.coefficients.reshape(n.shape)
    p = np.sum(c * _mode_values(n, sup.a, r, tau, derivative=False), axis=0)
    d = np.sum(c * _mode_values(n, sup.a, r, tau, derivative=True), axis=0)
    if np.ndim(p) == 0:
        return complex(p), complex(d)
    return p, d


def current_free(sup, r, tau):
    """Probability current 2 Im(Psi* dPsi/dr)."""
    p, d = superpose(sup, r, tau)
    j = 2.0 * np.imag(np.conj(p) * d)
    return float(j) if np.ndim(j) == 0 else j


def _gauss(lo, hi, nodes):
    x, w = leggauss(nodes)
    return lo + 0.5 * (hi - lo) * (x + 1.0), 0.5 * (hi - lo) * w


def nonescape_free(sup, tau, nodes=256, tol=1e-10, max_nodes=8192, r_max=None):
    """Integral of |Psi|^2 over (0, r_max), doubling the node count to ``tol``.

    ``r_max`` defaults to a; beyond a the rule adds panels of width a / 4.
    """
    a = sup.a
    r_max = a if r_max is None else float(r_max)
    if not r_max > 0:
        raise DomainError("r_max must be positive")
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(taus < 0):
        raise DomainError("tau must be non-negative")
    edges = [0.0, min(a, r_max)]
    if r_max > a:
        npan = int(np.ceil(4.0 * (r_max - a) / a - 1e-12))
        edges += list(np.linspace(a, r_max, npan + 1)[1:])
    out = np.empty(taus.shape)
    for i, t in enumerate(taus):
        m = nodes
        prev = None
        while True:
            parts = [_gauss(lo, hi, m if lo == 0.0 else max(m // 4, 16)) for lo, hi in zip(edges[:-1], edges[1:])]
            r = np.concatenate([q[0] for q in parts])
            w = np.concatenate([q[1] for q in parts])
            p, _ = superpose(sup, r, t)
            val = float(np.sum(w * np.abs(p) ** 2))
            if prev is not None and abs(val - prev) <= tol * max(abs(val), 1e-300):
                break
            if 2 * m > max_nodes:
                break
            prev = val
            m *= 2
        out[i] = val
    return out.reshape(np.shape(tau)) if np.ndim(tau) else float(out[0])


def total_norm_free(sup, tau, k_cut=3000.0, nodes=16):
    """Integral of |Psi|^2 over (0, infinity).

    The far-field density follows the momentum distribution at k = r / 2tau,
    which decays like k^-4 for these kinked initial states. The integral is
    taken out to R = 4a + 2 tau k_cut / a and the remainder is added as
    <r^4 |Psi|^2> / (3 R^3), with the average taken over (R/2, R).
    """
    a = sup.a
    if tau == 0:
        r, w = _gauss(0.0, a, 4 * nodes * max(sup.n))
        p, _ = superpose(sup, r, 0.0)
        return float(np.sum(w * np.abs(p) ** 2))
    R = 4.0 * a + 2.0 * tau * k_cut / a
    h_far = max(a / 8.0, tau / 2.0)
    edges = np.concatenate([np.arange(0.0, 4.0 * a, a / 8.0), np.arange(4.0 * a, R, h_far), [R]])
    edges = np.unique(edges)
    x, w = leggauss(nodes)
    h = np.diff(edges)
    r = (edges[:-1, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)).ravel()
    wt = (0.5 * h[:, None] * w[None, :]).ravel()
    p, _ = superpose(sup, r, tau)
    dens = np.abs(p) ** 2
    far = r > 0.5 * R
    mean_r4 = np.sum(wt[far] * r[far] ** 4 * dens[far]) / np.sum(wt[far])
    return float(np.sum(wt * dens) + mean_r4 / (3.0 * R ** 3))


def long_time_amplitude(params):
    """Coefficient A of psi_n ~ A r tau^{-3/2} at large tau."""
    a, n = params.a, params.n
    return np.exp(0.25j * np.pi) / np.sqrt(2.0) * (a / np.pi) ** 1.5 * (-1) ** n / n


def long_time_nonescape(params, tau):
    """Large-tau nonescape probability |A|^2 a^3 / 3 tau^{-3}."""
    A = long_time_amplitude(params)
    return abs(A) ** 2 * params.a ** 3 / 3.0 * np.asarray(tau, dtype=float) ** -3
