"""Numerical kernels: Romberg quadrature, root bracketing and refinement,
complex Newton iteration, and extreme eigenpairs of Hermitian matrices."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError, HermiticityError


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_levels: int = 22
    min_levels: int = 5

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if not 5 <= self.max_levels <= 30:
            raise DomainError("max_levels must lie in [5, 30]")
        if not 1 <= self.min_levels <= self.max_levels:
            raise DomainError("min_levels must lie in [1, max_levels]")


DEFAULT_QUADRATURE = QuadratureSpec()


def romberg_sums(level_sum, lo, hi, spec=DEFAULT_QUADRATURE):
    """Romberg integration driven by sums over new abscissae.

    ``level_sum(x)`` must return ``sum_i f(x_i)`` for a 1-d array of points,
    either as a scalar or as an array of any shape; this lets array-valued
    integrands be accumulated without storing one value per abscissa.
    The error estimate is the max-norm change of the diagonal between
    successive levels, and convergence requires it to stay below
    ``max(abs_tol, rel_tol * max|I|)`` on two consecutive levels.
    """
    if not lo < hi:
        raise DomainError("romberg requires lo < hi")
    h = hi - lo
    prev = [0.5 * h * (np.asarray(level_sum(np.array([lo, hi]))))]
    passes = 0
    err = math.inf
    for level in range(1, spec.max_levels):
        n_new = 2 ** (level - 1)
        h *= 0.5
        x = lo + h * (2.0 * np.arange(n_new) + 1.0)
        row = [0.5 * prev[0] + h * np.asarray(level_sum(x))]
        factor = 1.0
        for j in range(1, level + 1):
            factor *= 4.0
            row.append(row[j - 1] + (row[j - 1] - prev[j - 1]) / (factor - 1.0))
        delta = np.abs(row[-1] - prev[-1])
        err = float(np.max(delta))
        scale = float(np.max(np.abs(row[-1])))
        prev = row
        if level + 1 >= spec.min_levels and err <= max(spec.abs_tol, spec.rel_tol * scale):
            passes += 1
            if passes == 2:
                return row[-1]
        else:
            passes = 0
    exc = ConvergenceError(
        f"Romberg did not converge in {spec.max_levels} levels",
        estimate=prev[-1], error=err, iterations=spec.max_levels,
    )
    # componentwise change of the last level, for array-valued integrands
    exc.componentwise = delta
    raise exc


def romberg(f, lo, hi, spec=DEFAULT_QUADRATURE):
    """Integrate a vectorised ``f`` over [lo, hi] by Romberg extrapolation.

    ``f`` maps an array of abscissae to an array of values whose leading
    axis matches the abscissae; trailing axes are integrated componentwise.
    """
    return romberg_sums(lambda x: np.sum(np.asarray(f(x)), axis=0), lo, hi, spec)


def romberg_table(f, lo, hi, levels):
    """Full triangular Romberg table; ``table[k][k]`` is the level-(k+1) value."""
    h = hi - lo
    table = [[0.5 * h * (f(lo) + f(hi))]]
    for level in range(1, levels):
        h *= 0.5
        x = lo + h * (2.0 * np.arange(2 ** (level - 1)) + 1.0)
        row = [0.5 * table[-1][0] + h * np.sum(f(x))]
        for j in range(1, level + 1):
            row.append(row[j - 1] + (row[j - 1] - table[-1][j - 1]) / (4.0 ** j - 1.0))
        table.append(row)
    return table


def substituted_time_integral(f, tau_l, tau_u, spec=DEFAULT_QUADRATURE, sums=False):
    """Integrate over [tau_l, tau_u] after substituting tau = 1/z.

    The integrand ``f(tau)`` oscillates ever faster as tau -> 0; in z the
    oscillation is stretched out and Romberg converges. With ``sums=True``
    ``f`` is a level-sum callable as for :func:`romberg_sums` and receives
    pre-weighted tau values via ``f(tau, weights)``.
    """
    if not 0 < tau_l < tau_u:
        raise DomainError("substituted_time_integral requires 0 < tau_l < tau_u")
    if sums:
        return romberg_sums(lambda z: f(1.0 / z, 1.0 / (z * z)), 1.0 / tau_u, 1.0 / tau_l, spec)

    def g(z):
        v = np.asarray(f(1.0 / z))
        w = 1.0 / (z * z)
        return v * w.reshape(w.shape + (1,) * (v.ndim - 1))

    return romberg(g, 1.0 / tau_u, 1.0 / tau_l, spec)


def bracket_sign_changes(f, lo, hi, n_grid):
    """Grid cells ``(x_i, x_{i+1})`` of an ``n_grid``-point grid where f changes sign.

    ``f`` is called once on the whole grid. An exact zero at a grid node is
    attributed to the cell on its left.
    """
    if n_grid < 2:
        raise DomainError("n_grid must be at least 2")
    x = np.linspace(lo, hi, n_grid)
    y = np.asarray(f(x), dtype=float)
    s = np.sign(y)
    # carry the previous sign through exact zeros
    for i in range(1, len(s)):
        if s[i] == 0:
            s[i] = s[i - 1]
    idx = np.nonzero(s[1:] * s[:-1] < 0)[0]
    return [(float(x[i]), float(x[i + 1])) for i in idx]


def refine_root(f, bracket, tol=1e-12):
    """Root of scalar ``f`` inside a sign-change bracket (Brent's method)."""
    lo, hi = bracket
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise DomainError(f"no sign change over bracket ({lo}, {hi})")
    return brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True)
class NewtonResult:
    root: complex
    iterations: int
    residual: float


def newton_complex(f, df, seed, tol=1e-12, max_iter=100, step_tol=1e-15):
    """Newton iteration in the complex plane.

    Stops when ``|f(z)| <= tol`` or the step is below ``step_tol * max(1, |z|)``
    with ``|f(z)|`` no worse than ``tol * 1e3``. Raises
    :class:`ConvergenceError` carrying the last iterate otherwise.
    """
    z = complex(seed)
    fz = f(z)
    for it in range(1, max_iter + 1):
        if not np.isfinite(fz):
            break
        if abs(fz) <= tol:
            return NewtonResult(z, it - 1, abs(fz))
        d = df(z)
        if d == 0 or not np.isfinite(d):
            break
        step = fz / d
        z -= step
        fz = f(z)
        if abs(step) <= step_tol * max(1.0, abs(z)) and abs(fz) <= 1e3 * tol:
            return NewtonResult(z, it, abs(fz))
    raise ConvergenceError(
        f"Newton iteration failed from seed {seed}", estimate=z,
        error=abs(fz) if np.isfinite(fz) else math.inf, iterations=max_iter,
    )


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray
    residual: float

    def __repr__(self):
        return f"EigenPair(value={self.value!r}, residual={self.residual:.3g}, dim={len(self.vector)})"


def _pair(M, value, vector):
    vector = np.asarray(vector, dtype=complex)
    vector = vector / np.linalg.norm(vector)
    # fix the global phase: largest component real and positive
    k = int(np.argmax(np.abs(vector)))
    vector = vector * (abs(vector[k]) / vector[k])
    residual = float(np.linalg.norm(M @ vector - value * vector))
    return EigenPair(float(value), vector, residual)


def hermiticity_residual(M):
    M = np.asarray(M)
    return float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0


def check_hermitian(M, tol=1e-10):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DomainError("expected a non-empty square matrix")
    r = hermiticity_residual(M)
    if r > tol:
        raise HermiticityError(f"matrix is not Hermitian: max |M - M^H| = {r:.3g}")
    return M


def jacobi_eigh(M, tol=1e-14, max_sweeps=100):
    """All eigenpairs of a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns ``(values, vectors)`` with ascending values and eigenvectors in
    the columns. Each rotation is a phase change that makes the pivot real
    followed by a real plane rotation.
    """
    A = check_hermitian(M).copy()
    n = A.shape[0]
    A = 0.5 * (A + A.conj().T)
    V = np.eye(n, dtype=complex)
    total = np.linalg.norm(A)
    for sweep in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * max(total, np.finfo(float).tiny):
            d = np.real(np.diag(A))
            order = np.argsort(d)
            return d[order], V[:, order]
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = A[p, q]
                ag = abs(g)
                if ag <= 1e-300:
                    continue
                app, aqq = A[p, p].real, A[q, q].real
                theta = (aqq - app) / (2.0 * ag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ph = g / ag
                # J = diag(1, conj(ph)) @ [[c, s], [-s, c]]
                J = np.array([[c, s], [-s * ph.conjugate(), c * ph.conjugate()]])
                cols = A[:, [p, q]] @ J
                A[:, p], A[:, q] = cols[:, 0], cols[:, 1]
                rows = J.conj().T @ A[[p, q], :]
                A[p, :], A[q, :] = rows[0], rows[1]
                A[p, q] = A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                vc = V[:, [p, q]] @ J
                V[:, p], V[:, q] = vc[:, 0], vc[:, 1]
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps",
                           estimate=np.real(np.diag(A)), iterations=max_sweeps)


def _gershgorin(M):
    d = np.real(np.diag(M))
    r = np.sum(np.abs(M), axis=1) - np.abs(d)
    return float(np.min(d - r)), float(np.max(d + r))


def _power(B, rng, tol, max_iter):
    v = rng.standard_normal(B.shape[0]) + 1j * rng.standard_normal(B.shape[0])
    v /= np.linalg.norm(v)
    mu = 0.0
    for _ in range(max_iter):
        w = B @ v
        mu_new = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0, v
        v = w / nw
        if abs(mu_new - mu) <= tol * max(1.0, abs(mu_new)):
            return mu_new, v
        mu = mu_new
    return mu, v


def _inverse_iteration(M, shift, v, tol, max_iter):
    n = M.shape[0]
    lam = float(np.real(np.vdot(v, M @ v)))
    # a tiny offset keeps the shifted matrix invertible when the shift is exact
    B = M - (shift + 1e-13 * max(1.0, abs(shift))) * np.eye(n)
    for it in range(max_iter):
        w = np.linalg.solve(B, v)
        v = w / np.linalg.norm(w)
        lam_new = float(np.real(np.vdot(v, M @ v)))
        if np.linalg.norm(M @ v - lam_new * v) <= tol and abs(lam_new - lam) <= tol:
            return lam_new, v
        lam = lam_new
    raise ConvergenceError("shifted inverse power iteration did not converge",
                           estimate=lam, iterations=max_iter)


def power_extreme_eigs(M, tol=1e-12, max_iter=20000, seed=0):
    """Extreme eigenpairs by shifted power iteration, polished by shifted
    inverse power iteration. Independent of :func:`jacobi_eigh`."""
    M = check_hermitian(M)
    M = 0.5 * (M + M.conj().T)
    n = M.shape[0]
    if n == 1:
        pair = _pair(M, M[0, 0].real, np.ones(1))
        return pair, pair
    rng = np.random.default_rng(seed)
    g_lo, g_hi = _gershgorin(M)
    I = np.eye(n)
    mu, v_lo = _power(M - g_hi * I, rng, 1e-8, max_iter)
    lam_lo, v_lo = _inverse_iteration(M, mu + g_hi, v_lo, tol, 500)
    mu, v_hi = _power(M - g_lo * I, rng, 1e-8, max_iter)
    lam_hi, v_hi = _inverse_iteration(M, mu + g_lo, v_hi, tol, 500)
    return _pair(M, lam_lo, v_lo), _pair(M, lam_hi, v_hi)


def hermitian_extreme_eigs(M, tol=1e-14, method="jacobi"):
    """Lowest and highest eigenpairs of a Hermitian matrix.

    ``method="jacobi"`` diagonalises fully; ``method="power"`` uses the
    shifted (inverse) power iterations. Residuals ``|Mv - lambda v|`` are
    recorded on each returned pair.
    """
    M = check_hermitian(M)
    if method == "power":
        return power_extreme_eigs(M)
    if method != "jacobi":
        raise DomainError(f"unknown eigen method {method!r}")
    values, vectors = jacobi_eigh(M, tol=tol)
    Mh = 0.5 * (M + M.conj().T)
    return _pair(Mh, values[0], vectors[:, 0]), _pair(Mh, values[-1], vectors[:, -1])
