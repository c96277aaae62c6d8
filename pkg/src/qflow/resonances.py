"""Resonance poles and expansion coefficients for the delta-shell barrier.

The poles are the roots of ``ka cot(ka) + lam - i ka = 0``. Multiplying by
``sin(ka)`` and writing ``x = ka`` gives the equivalent entire-function form

    exp(2ix) = 1 - 2ix / lam,

which has exactly one root near each ``x = nu*pi`` and supplies the seeds.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConvergenceError, DomainError, TruncationError
from .numerics import newton_complex

RESIDUAL_TOL = 1e-11
_EPS = np.finfo(float).eps

# The coefficient formula expands -phi_n rather than phi_n; flipping the
# (unobservable) global sign makes psi(r, 0+) continuous with phi_n.
GLOBAL_SIGN = -1.0


@dataclass(frozen=True)
class BarrierParams:
    """Barrier strength ``lam``, shell radius ``a`` and initial level ``n``."""

    lam: float
    a: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not (self.lam > 0 and self.a > 0):
            raise DomainError("barrier requires lam > 0 and a > 0")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("initial level n must be a positive integer")


def resonance_condition(params, k):
    """Left-hand side ``ka cot(ka) + lam - i ka``."""
    x = np.asarray(k) * params.a
    return x / np.tan(x) + params.lam - 1j * x


def _entire_form(x, lam):
    return np.exp(2j * x) - 1.0 + 2j * x / lam


def _entire_form_prime(x, lam):
    return 2j * np.exp(2j * x) + 2j / lam


def _newton_tol(x, lam):
    # roundoff floor of the entire form grows like |2x / lam|
    return 1e-14 * (1.0 + abs(x) / lam)


def _seed(nu, lam, iters=40):
    """Fixed-point iterate of x = nu*pi - (i/2) log(1 - 2ix/lam)."""
    x = complex(nu * np.pi)
    for _ in range(iters):
        x_new = nu * np.pi - 0.5j * np.log(1.0 - 2j * x / lam)
        if abs(x_new - x) < 1e-15 * abs(x_new):
            return x_new
        x = x_new
    return x


def _solve_one(nu, lam):
    """Root x = k a for positive index nu."""
    seeds = [_seed(nu, lam), nu * np.pi * (1 - 0.02j)]
    for seed in seeds:
        try:
            res = newton_complex(lambda x: _entire_form(x, lam),
                                 lambda x: _entire_form_prime(x, lam),
                                 seed, tol=_newton_tol(seed, lam), max_iter=60)
        except ConvergenceError:
            continue
        x = res.root
        if abs(x.real - nu * np.pi) < np.pi / 2 and x.imag < 0:
            return x
    # continuation in lam from the impenetrable-wall limit
    x = complex(nu * np.pi)
    for lam_step in np.geomspace(1e6 * max(lam, 1.0), lam, 4 + 1)[1:]:
        try:
            x = newton_complex(lambda z: _entire_form(z, lam_step),
                               lambda z: _entire_form_prime(z, lam_step),
                               x, tol=_newton_tol(x, lam_step), max_iter=60).root
        except ConvergenceError as exc:
            raise ConvergenceError(f"resonance nu={nu} not found", estimate=exc.estimate) from exc
    return x


def _polish(params, k, steps=3):
    """Newton steps on the cot form in k itself, keeping the best iterate.

    The seeds come from the entire form in x = ka; rounding in k = x / a is
    amplified by the steep cot near the wall levels, so the final digits are
    fixed against the condition that is actually checked.
    """
    a, lam = params.a, params.lam

    def f(kk):
        x = kk * a
        return x / np.tan(x) + lam - 1j * x

    def df(kk):
        x = kk * a
        return a * (1.0 / np.tan(x) - x / np.sin(x) ** 2 - 1j)

    best, best_res = k, np.abs(f(k))
    cur = k
    for _ in range(steps):
        cur = cur - f(cur) / df(cur)
        res = np.abs(f(cur))
        better = res < best_res
        best = np.where(better, cur, best)
        best_res = np.where(better, res, best_res)
    return best


def residual_tolerance(params, k):
    """Accepted |ka cot ka + lambda - ika| per pole.

    RESIDUAL_TOL, raised to the rounding floor eps |x| (1 + |x (1 + cot^2 x)|)
    where that is larger. The floor takes over only for |ka| beyond a few
    thousand, where one ulp of ka already moves the residual past 1e-11.
    """
    x = np.asarray(k) * params.a
    cot = 1.0 / np.tan(x)
    return np.maximum(RESIDUAL_TOL, _EPS * np.abs(x) * (1.0 + np.abs(x * (1.0 + cot * cot))))


def expansion_coefficient(params, k):
    """Expansion coefficient of the initial level ``n`` on pole ``k``.

        c = (-1)^n 2 n pi sqrt(2a) k / ((k^2 a^2 - n^2 pi^2) [(1 + lam - i k a) cot(ka) - i - k a])
    """
    a, lam, n = params.a, params.lam, params.n
    k = np.asarray(k, dtype=complex)
    x = k * a
    pole = x * x - (n * np.pi) ** 2
    bracket = (1.0 + lam - 1j * x) / np.tan(x) - 1j - x
    den = pole * bracket
    if np.any(np.abs(pole) < 1e-14 * max(1.0, (n * np.pi) ** 2)) or np.any(~np.isfinite(den)) \
            or np.any(np.abs(den) < 1e-14):
        raise DomainError("expansion coefficient denominator vanishes")
    c = (-1) ** n * 2 * n * np.pi * np.sqrt(2 * a) * k / den
    return c[()] if c.ndim == 0 else c


@dataclass(frozen=True)
class ResonanceSet:
    """Poles ``k`` and coefficients ``c`` for indices ``nu = 1..N, -1..-N``.

    The arrays are ordered with the positive indices first; ``nu`` holds the
    signed index of each entry.
    """

    params: BarrierParams
    nu: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)

    @property
    def truncation(self):
        return len(self.nu) // 2

    def residuals(self):
        return np.abs(resonance_condition(self.params, self.k))

    def rows(self):
        """(nu, Re k, Im k, Re c, Im c) records."""
        return [(int(v), float(kk.real), float(kk.imag), float(cc.real), float(cc.imag))
                for v, kk, cc in zip(self.nu, self.k, self.c)]


def solve_resonances(params, count=40):
    """Solve for the poles ``nu = +-1..+-count`` and their coefficients.

    Negative-index poles are taken from the mirror symmetry
    ``k_{-nu} = -conj(k_nu)`` and re-polished. Raises
    :class:`ConvergenceError` naming the offending index on failure.
    """
    if count < params.n + 5:
        raise DomainError(f"count must be at least n + 5 = {params.n + 5}")
    lam, a = params.lam, params.a
    xs = np.array([_solve_one(nu, lam) for nu in range(1, count + 1)])
    mirror = []
    for nu, x in enumerate(xs, start=1):
        try:
            xm = newton_complex(lambda z: _entire_form(z, lam), lambda z: _entire_form_prime(z, lam),
                                -x.conjugate(), tol=_newton_tol(x, lam), max_iter=20).root
        except ConvergenceError as exc:
            raise ConvergenceError(f"resonance nu={-nu} not found", estimate=exc.estimate) from exc
        mirror.append(xm)
    xs_all = np.concatenate([xs, np.array(mirror)])
    k = _polish(params, xs_all / a)
    nu = np.concatenate([np.arange(1, count + 1), -np.arange(1, count + 1)])
    res = np.abs(resonance_condition(params, k))
    tol = residual_tolerance(params, k)
    bad = np.nonzero(~(res < tol))[0]
    if bad.size:
        i = bad[0]
        raise ConvergenceError(f"resonance nu={nu[i]} residual {res[i]:.3g} exceeds {tol[i]:.3g}",
                               estimate=k[i], error=res[i])
    d = np.abs(k[:, None] - k[None, :])
    np.fill_diagonal(d, np.inf)
    if np.min(d) < 1e-8:
        i, j = np.unravel_index(np.argmin(d), d.shape)
        raise ConvergenceError(f"duplicate roots for nu={nu[i]} and nu={nu[j]}")
    c = expansion_coefficient(params, k)
    return ResonanceSet(params, nu, k, c)


def initial_state_series(res, r):
    """Pole-series value of the wave function at tau = 0 for 0 <= r < a.

    At tau = 0 each shifted Moshinsky term reduces to a step function, so
    the series becomes ``sum_nu c_nu (1 + i lam / (2 k_nu a)) exp(i k_nu (r - a))``
    (times ``GLOBAL_SIGN``).
    """
    p = res.params
    r = np.asarray(r, dtype=float)[..., None]
    terms = res.c * (1.0 + 1j * p.lam / (2.0 * res.k * p.a)) * np.exp(1j * res.k * (r - p.a))
    return GLOBAL_SIGN * np.sum(terms, axis=-1)


def reconstruction_error(res, nodes=512):
    """L2(0, a) distance between the tau = 0 pole series and the initial level."""
    p = res.params
    x, w = leggauss(nodes)
    r = 0.5 * p.a * (x + 1.0)
    w = 0.5 * p.a * w
    phi = np.sqrt(2.0 / p.a) * np.sin(p.n * np.pi * r / p.a)
    return float(np.sqrt(np.sum(w * np.abs(initial_state_series(res, r) - phi) ** 2)))


def auto_truncate(params, tol=1e-6, count=40, max_count=2560):
    """Double the pole count until the tau = 0 reconstruction error is below ``tol``.

    The tau = 0 series converges only like count**-0.5 (the truncated sums
    overshoot next to r = a), so tight tolerances exhaust ``max_count``; the
    exception then carries the best set and its error.
    """
    count = max(count, params.n + 5)
    while True:
        res = solve_resonances(params, count)
        err = reconstruction_error(res)
        if err < tol:
            return res
        if 2 * count > max_count:
            raise TruncationError(
                f"reconstruction error {err:.3g} > {tol:.3g} at truncation {count}",
                estimate=res, error=err, iterations=count,
            )
        count *= 2
