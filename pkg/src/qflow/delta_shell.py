"""Exact decaying wave function of a particle escaping through a delta-shell
barrier V(r) = (lam/a) delta(r - a), and the observables derived from it.

Everything is expressed in the generic time tau = hbar (t - t0) / (2m), in
which the wave equation reads i d(psi)/d(tau) = -d^2(psi)/dr^2 + V psi.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError, TruncationError
from .resonances import GLOBAL_SIGN, solve_resonances
from .specfun import chi, moshinsky_m

TAIL_TOL = 1e-9
_CHUNK = 2 ** 15


def initial_state(params, r):
    """phi_n(r) = sqrt(2/a) sin(n pi r / a) theta(a - r)."""
    r = np.asarray(r, dtype=float)
    a, n = params.a, params.n
    return np.where(r < a, np.sqrt(2.0 / a) * np.sin(n * np.pi * r / a), 0.0)


def _initial_derivative(params, r):
    r = np.asarray(r, dtype=float)
    a, n = params.a, params.n
    return np.where(r < a, (n * np.pi / a) * np.sqrt(2.0 / a) * np.cos(n * np.pi * r / a), 0.0)


def _grid(r, tau):
    r = np.asarray(r, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be non-negative")
    if np.any(tau < 0):
        raise DomainError("tau must be non-negative")
    return np.broadcast_arrays(r, tau)


def _inside(r, a, side):
    if side is None:
        return r <= a
    if side == "-":
        return r <= a
    if side == "+":
        return r < a
    raise DomainError(f"side must be '-', '+' or None, not {side!r}")


def _check_tail(res, terms, tail_tol):
    n = res.truncation
    tail = np.abs(terms[..., n - 1] + terms[..., 2 * n - 1])
    worst = float(np.max(tail)) if tail.size else 0.0
    if worst > tail_tol:
        raise TruncationError(
            f"pole sum not converged: last-pair contribution {worst:.3g} > {tail_tol:.3g}; "
            f"increase the truncation (currently {n})", error=worst, iterations=n,
        )


def _psi_positive(res, r, t, inside, tail_tol):
    p = res.params
    k, c = res.k, res.c
    rr = r[:, None]
    tt = t[:, None]
    x = rr - p.a
    ch = chi(x, tt)
    m_out = moshinsky_m(k, x, tt)
    script_out = m_out + ch / k
    m_in = moshinsky_m(k, -x, tt)
    # chi is even in x, so the bracket only involves the M parts
    bracket = np.where(inside[:, None], (1j * p.lam / (2.0 * k * p.a)) * (m_out - m_in), 0.0)
    terms = c * (script_out + bracket)
    _check_tail(res, terms, tail_tol)
    return GLOBAL_SIGN * np.sum(terms, axis=-1)


def _dpsi_positive(res, r, t, inside, tail_tol):
    p = res.params
    k, c = res.k, res.c
    rr = r[:, None]
    tt = t[:, None]
    x = rr - p.a
    ch = chi(x, tt)
    m_out = moshinsky_m(k, x, tt)
    outer = 1j * c * (k * m_out + (1.0 + x / (2.0 * tt * k)) * ch)
    m_in = moshinsky_m(k, -x, tt)
    inner = np.where(inside[:, None], (p.lam / (2.0 * p.a)) * c * (m_out + m_in + 2.0 * ch / k), 0.0)
    terms = outer - inner
    _check_tail(res, terms, tail_tol)
    return GLOBAL_SIGN * np.sum(terms, axis=-1)


def _evaluate(kernel, res, r, tau, side, tail_tol, initial):
    r, tau = _grid(r, tau)
    shape = r.shape
    r = r.ravel()
    tau = tau.ravel()
    out = np.empty(r.shape, dtype=complex)
    zero = tau == 0
    if np.any(zero):
        out[zero] = initial(res.params, r[zero])
    pos = np.nonzero(~zero)[0]
    inside = _inside(r, res.params.a, side)
    step = max(1, _CHUNK // max(1, 2 * res.truncation))
    for s in range(0, len(pos), step):
        idx = pos[s:s + step]
        out[idx] = kernel(res, r[idx], tau[idx], inside[idx], tail_tol)
    out = out.reshape(shape)
    return out[()] if out.ndim == 0 else out


def psi(res, r, tau, tail_tol=TAIL_TOL):
    """Wave function psi(r, tau); broadcasts over ``r`` and ``tau``.

    At tau = 0 the initial level phi_n is returned. Raises
    :class:`TruncationError` when the last pole pair contributes more
    than ``tail_tol``.
    """
    return _evaluate(_psi_positive, res, r, tau, None, tail_tol, initial_state)


def dpsi_dr(res, r, tau, side=None, tail_tol=TAIL_TOL):
    """Radial derivative of psi. At ``r == a`` a side ('-' or '+') is required."""
    r_arr = np.asarray(r, dtype=float)
    if side is None and np.any(r_arr == res.params.a):
        raise DomainError("the derivative jumps at r = a; pass side='-' or side='+'")
    return _evaluate(_dpsi_positive, res, r, tau, side, tail_tol, _initial_derivative)


def converged_resonances(params, r, tau, count=40, max_count=5120, tail_tol=TAIL_TOL):
    """Smallest doubling of ``count`` whose pole sum converges at the probe points.

    Early times need many more poles than late ones; probing the earliest
    and latest times of a grid is usually enough.
    """
    count = max(count, params.n + 5)
    while True:
        res = solve_resonances(params, count)
        try:
            psi(res, r, tau, tail_tol)
            dpsi_dr(res, r, tau, side="-", tail_tol=tail_tol)
            return res
        except TruncationError:
            if 2 * count > max_count:
                raise
            count *= 2


@dataclass(frozen=True)
class WaveSample:
    psi: complex
    dpsi_dr: complex
    r: float
    tau: float
    side: str = None


def sample(res, r, tau, side=None):
    """(psi, dpsi/dr) at one point, with the side of r = a recorded."""
    if side is None and r == res.params.a:
        side = "-"
    return WaveSample(complex(psi(res, r, tau)), complex(dpsi_dr(res, r, tau, side=side)),
                      float(r), float(tau), side)


def current(res, r, tau, tail_tol=TAIL_TOL):
    """Probability current j = -i (psi* psi' - psi'* psi) = 2 Im(psi* psi').

    The current is continuous at r = a, so the interior derivative is used there.
    """
    p = psi(res, r, tau, tail_tol)
    d = dpsi_dr(res, r, tau, side="-", tail_tol=tail_tol)
    j = 2.0 * np.imag(np.conj(p) * d)
    return j[()] if np.ndim(j) == 0 else j


def density(res, r, tau, tail_tol=TAIL_TOL):
    return np.abs(psi(res, r, tau, tail_tol)) ** 2


def radial_rule(a, r_max, nodes=128):
    """Gauss-Legendre nodes and weights on (0, r_max), split at r = a.

    ``nodes`` points on (0, a); beyond a, panels of width a with ``nodes``
    points each.
    """
    x, w = leggauss(nodes)
    edges = [0.0, min(a, r_max)]
    if r_max > a:
        npan = int(np.ceil((r_max - a) / a - 1e-12))
        edges += list(np.linspace(a, r_max, npan + 1)[1:])
    edges = np.array(edges)
    h = np.diff(edges)
    r = (edges[:-1, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)).ravel()
    wt = (0.5 * h[:, None] * w[None, :]).ravel()
    return r, wt


def _tau_array(tau):
    tau = np.asarray(tau, dtype=float)
    return tau, tau.ravel()


def nonescape_P(res, tau, r_max=None, nodes=128, tail_tol=TAIL_TOL):
    """Probability of finding the particle in (0, r_max); r_max defaults to a."""
    r_max = res.params.a if r_max is None else r_max
    if r_max <= 0:
        raise DomainError("r_max must be positive")
    r, w = radial_rule(res.params.a, r_max, nodes)
    tau, flat = _tau_array(tau)
    out = np.array([np.sum(w * np.abs(psi(res, r, t, tail_tol)) ** 2) for t in flat])
    out = out.reshape(tau.shape)
    return out[()] if out.ndim == 0 else out


def survival_S(res, m, tau, nodes=128, tail_tol=TAIL_TOL):
    """|<phi_m | psi(tau)>|^2; with m = n this is the survival probability."""
    if int(m) != m or m < 1:
        raise DomainError("m must be a positive integer")
    p = res.params
    r, w = radial_rule(p.a, p.a, nodes)
    phi_m = np.sqrt(2.0 / p.a) * np.sin(m * np.pi * r / p.a)
    tau, flat = _tau_array(tau)
    out = np.array([abs(np.sum(w * phi_m * psi(res, r, t, tail_tol))) ** 2 for t in flat])
    out = out.reshape(tau.shape)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class Expectations:
    """Moments at one time.

    ``x`` is <r>, ``v`` is Re <-i d/dr>, ``v_imag`` the imaginary part of
    that integral (zero up to boundary terms) and ``flux`` the integral of
    the current over r, which equals 2 v in these units. On the truncated
    domain (0, R) the moments obey d<r>/dtau = flux - R j(R), with
    ``edge_current`` = j(R).
    """

    tau: float
    x: float
    v: float
    v_imag: float
    flux: float
    edge_density: float
    edge_current: float = 0.0


def _outer_rule(a, tau, r_max, nodes=32):
    # panel widths shrink where the chirp exp(i r^2 / 4 tau) oscillates fastest
    edges = [a]
    while edges[-1] < r_max:
        r0 = edges[-1]
        h = min(a, 8.0 * max(tau, 1e-3) / max(r0, 1.0), r_max - r0)
        edges.append(r0 + h)
    edges = np.array(edges)
    x, w = leggauss(nodes)
    h = np.diff(edges)
    r = (edges[:-1, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)).ravel()
    wt = (0.5 * h[:, None] * w[None, :]).ravel()
    return r, wt


def expectation_x_v(res, tau, r_max, edge_tol=1e-5, tail_tol=TAIL_TOL):
    """Mean position and velocity at ``tau`` from integrals over (0, r_max)."""
    p = res.params
    if tau <= 0:
        raise DomainError("expectation_x_v requires tau > 0")
    edge = float(np.abs(psi(res, r_max, tau, tail_tol)) ** 2)
    if edge > edge_tol:
        raise DomainError(f"|psi(r_max)|^2 = {edge:.3g} > {edge_tol:.3g}; increase r_max")
    r_in, w_in = radial_rule(p.a, p.a, 128)
    r_out, w_out = _outer_rule(p.a, tau, r_max)
    r = np.concatenate([r_in, r_out])
    w = np.concatenate([w_in, w_out])
    f = psi(res, r, tau, tail_tol)
    d = dpsi_dr(res, r, tau, side="-", tail_tol=tail_tol)
    x = float(np.sum(w * r * np.abs(f) ** 2))
    vint = np.sum(w * np.conj(f) * (-1j) * d)
    flux = float(np.sum(w * 2.0 * np.imag(np.conj(f) * d)))
    return Expectations(float(tau), x, float(vint.real), float(vint.imag), flux, edge,
                        float(current(res, r_max, tau, tail_tol)))


def total_norm(res, tau, r_max, tail=True, tail_tol=TAIL_TOL):
    """Integral of |psi|^2 over (0, r_max), plus an estimate of the far tail.

    The kink of the initial level at r = a leaves a k^-4 momentum tail, so
    at fixed tau the outer density falls like r^-4 and no radius makes it
    negligible. With ``tail`` the part beyond r_max is estimated as
    <r^4 |psi|^2>_(r_max/2, r_max) / (3 r_max^3); this is good to about
    1e-5 once r_max exceeds 40 tau.
    """
    p = res.params
    r_in, w_in = radial_rule(p.a, p.a, 128)
    r_out, w_out = _outer_rule(p.a, tau, r_max)
    r = np.concatenate([r_in, r_out])
    w = np.concatenate([w_in, w_out])
    dens = np.abs(psi(res, r, tau, tail_tol)) ** 2
    norm = float(np.sum(w * dens))
    if tail and tau > 0 and r_max > 2.0 * p.a:
        far = r > 0.5 * r_max
        mean_r4 = np.sum(w[far] * r[far] ** 4 * dens[far]) / (0.5 * r_max)
        norm += float(mean_r4 / (3.0 * r_max ** 3))
    return norm


class Observable(Enum):
    NONESCAPE = "P"
    SURVIVAL = "S"
    CURRENT = "j"
    DENSITY = "rho"
    MEAN_POSITION = "x"
    MEAN_VELOCITY = "v"


@dataclass(frozen=True)
class ObservableTrace:
    grid: np.ndarray
    values: np.ndarray
    kind: Observable

    def __post_init__(self):
        g = np.asarray(self.grid)
        if g.ndim != 1 or np.any(np.diff(g) <= 0):
            raise DomainError("trace grid must be strictly increasing")
        if len(self.values) != len(g):
            raise DomainError("trace values and grid differ in length")
        if self.kind in (Observable.NONESCAPE, Observable.SURVIVAL):
            v = np.asarray(self.values)
            if np.any(v < -1e-9) or np.any(v > 1 + 1e-9):
                raise DomainError(f"{self.kind.name} values must lie in [0, 1]")


def trace(res, kind, taus, r=None, m=None):
    """Evaluate one observable along a tau grid."""
    taus = np.asarray(taus, dtype=float)
    kind = Observable(kind)
    p = res.params
    if kind is Observable.NONESCAPE:
        vals = nonescape_P(res, taus, r_max=r)
    elif kind is Observable.SURVIVAL:
        vals = survival_S(res, p.n if m is None else m, taus)
    elif kind is Observable.CURRENT:
        vals = current(res, p.a if r is None else r, taus)
    elif kind is Observable.DENSITY:
        vals = density(res, p.a if r is None else r, taus)
    else:
        raise DomainError(f"use expectation_x_v for {kind.name}")
    return ObservableTrace(taus, np.asarray(vals, dtype=float), kind)
