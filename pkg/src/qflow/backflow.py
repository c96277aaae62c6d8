"""Negative-current episodes, backflow probability and its maximisation.

Backflow here means an interval of time during which the probability current
at a monitor radius is negative, so that probability flows back into the
inner region. For free superpositions of well levels the probability gained
over a time window is a Hermitian quadratic form in the coefficients

    Delta_P = c^H M c,   M_nn' = i int dtau [psi_n^* psi_n'' - psi_n'^* psi_n'] (r = a),

whose largest eigenvalue is the maximum attainable backflow.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import ConvergenceError, DomainError
from .free_packet import Superposition, mode_table, superpose
from .numerics import (
    DEFAULT_QUADRATURE,
    bracket_sign_changes,
    hermitian_extreme_eigs,
    hermiticity_residual,
    refine_root,
    romberg,
    romberg_sums,
    substituted_time_integral,
)

# below this lower time limit the tau = 1/z substitution is used
SUBSTITUTION_BELOW = 0.1


def thread_count():
    """Worker threads allowed by ``QFLOW_THREADS`` (default 1)."""
    value = os.environ.get("QFLOW_THREADS", "1")
    try:
        n = int(value)
    except ValueError as exc:
        raise DomainError(f"QFLOW_THREADS must be an integer, got {value!r}") from exc
    if n < 1:
        raise DomainError("QFLOW_THREADS must be at least 1")
    return n


def _chunked_sum(fn, x, w, chunk=2048):
    """sum over fixed chunks of ``fn(x, w)``, added in chunk order.

    The chunking does not depend on the thread count, so results are
    bit-identical whatever ``QFLOW_THREADS`` is.
    """
    pieces = [(x[i:i + chunk], w[i:i + chunk]) for i in range(0, len(x), chunk)]
    workers = min(thread_count(), len(pieces))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda p: fn(*p), pieces))
    else:
        parts = [fn(*p) for p in pieces]
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total


@dataclass(frozen=True)
class BackflowInterval:
    """Interval of negative current with its probability gain ``delta``."""

    tau_start: float
    tau_end: float
    delta: float
    p_at_start: float
    location: float

    def __post_init__(self):
        if not self.tau_start < self.tau_end:
            raise DomainError("tau_start must precede tau_end")
        if self.delta < 0:
            raise DomainError(f"backflow gain must be non-negative, got {self.delta!r}")


def find_backflow_intervals(j, window, P, location=float("nan"), step=0.0025,
                            root_tol=1e-9, spec=DEFAULT_QUADRATURE, max_extend=20):
    """Intervals inside ``window`` where the current ``j(tau)`` is negative.

    ``j`` and ``P`` are vectorised callables of tau. Sign changes are bracketed
    on a grid of spacing ``step``, refined with Brent's method and paired; the
    gain of each interval is ``-int j dtau`` by Romberg. When the current is
    negative at the start of the window the window is extended left by 10%
    until it is not. An odd number of sign changes after that means the end
    of the window cuts a negative stretch, which is an error.
    """
    lo, hi = map(float, window)
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise DomainError(f"invalid window {window!r}")
    if not step > 0:
        raise DomainError("step must be positive")
    width = hi - lo
    for _ in range(max_extend):
        if float(j(np.array([lo]))[0]) >= 0:
            break
        new_lo = lo - 0.1 * width
        if new_lo <= 0 and lo > 0:
            new_lo = 0.5 * lo
        lo = new_lo
    else:
        raise DomainError("current is negative at the window start even after extension")

    n_grid = max(int(np.ceil((hi - lo) / step)) + 1, 3)
    brackets = bracket_sign_changes(j, lo, hi, n_grid)
    if len(brackets) % 2:
        raise DomainError(
            f"odd number ({len(brackets)}) of current sign changes in ({lo}, {hi}); "
            "the window end clips a negative stretch")

    def scalar_j(t):
        return float(np.asarray(j(np.array([t])))[0])

    roots = [refine_root(scalar_j, b, tol=root_tol) for b in brackets]
    out = []
    for start, end in zip(roots[::2], roots[1::2]):
        mid = 0.5 * (start + end)
        if not scalar_j(mid) < 0:
            raise DomainError(f"current not negative inside ({start}, {end})")
        gain = -float(romberg(lambda t: np.asarray(j(t), dtype=float), start, end, spec))
        p0 = float(np.asarray(P(np.array([start])))[0])
        out.append(BackflowInterval(float(start), float(end), max(gain, 0.0), p0, float(location)))
    return out


@dataclass(frozen=True)
class BackflowMap:
    """``log10(-j)`` on an (r, tau) grid; NaN marks cells with j >= 0."""

    r: np.ndarray = field(repr=False)
    tau: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def cells(self):
        """Sparse (r, tau, log10_neg_j) triples of the negative-current cells."""
        i, k = np.nonzero(np.isfinite(self.values))
        return [(float(self.r[a]), float(self.tau[b]), float(self.values[a, b])) for a, b in zip(i, k)]

    @property
    def negative_fraction(self):
        return float(np.mean(np.isfinite(self.values))) if self.values.size else 0.0


def backflow_map(source, r_range, tau_range, grid):
    """Map of negative-current cells for a vectorised ``source(r, tau)``.

    ``source`` receives broadcastable arrays ``r[:, None]`` and ``tau[None, :]``.
    """
    nr, nt = map(int, grid)
    if nr < 1 or nt < 1:
        raise DomainError("grid counts must be positive")
    r0, r1 = map(float, r_range)
    t0, t1 = map(float, tau_range)
    if r0 > r1 or t0 > t1 or r0 < 0 or t0 < 0:
        raise DomainError("invalid map ranges")
    r = np.linspace(r0, r1, nr)
    tau = np.linspace(t0, t1, nt)
    jv = np.broadcast_to(np.asarray(source(r[:, None], tau[None, :]), dtype=float), (nr, nt))
    values = np.full((nr, nt), np.nan)
    neg = jv < 0
    values[neg] = np.log10(-jv[neg])
    return BackflowMap(r, tau, values)


@dataclass(frozen=True)
class BackflowProblem:
    """Backflow matrix for modes 1..n_max over (tau_l, tau_u), monitored at r = a."""

    a: float
    n_max: int
    tau_l: float
    tau_u: float
    matrix: np.ndarray = field(repr=False)
    monitor_r: float
    hermiticity: float = 0.0

    def __post_init__(self):
        if not 0 < self.tau_l < self.tau_u:
            raise DomainError("backflow window requires 0 < tau_l < tau_u")
        if self.n_max < 2:
            raise DomainError("n_max must be at least 2")
        if self.matrix.shape != (self.n_max, self.n_max):
            raise DomainError("matrix dimension must equal n_max")


def _cross_sum(a, n_max):
    def level(tau, weight):
        P, D = mode_table(n_max, a, a, tau)
        return (P.conj() * weight) @ D.T
    return level


def assemble_backflow_matrix(a, n_max, tau_l, tau_u, spec=DEFAULT_QUADRATURE):
    """Hermitian backflow matrix of the well levels 1..n_max at r = a.

    The cross integrals ``A_nn' = int psi_n^* psi_n'' dtau`` are accumulated
    for all pairs at once, level by level of a Romberg scheme (in z = 1/tau
    when tau_l is small), and ``M = i (A - A^H)``.
    """
    if not a > 0:
        raise DomainError("a must be positive")
    if int(n_max) != n_max or n_max < 2:
        raise DomainError("n_max must be an integer >= 2")
    if not 0 < tau_l < tau_u:
        raise DomainError("backflow window requires 0 < tau_l < tau_u")
    n_max = int(n_max)
    level = _cross_sum(a, n_max)
    try:
        if tau_l < SUBSTITUTION_BELOW:
            A = substituted_time_integral(
                lambda t, w: _chunked_sum(level, t, w), tau_l, tau_u, spec, sums=True)
        else:
            A = romberg_sums(lambda t: _chunked_sum(level, t, np.ones_like(t)), tau_l, tau_u, spec)
    except ConvergenceError as exc:
        detail = getattr(exc, "componentwise", None)
        where = ""
        if detail is not None and np.ndim(detail) == 2:
            n, m = np.unravel_index(np.argmax(detail), detail.shape)
            where = f" at entry (n, n') = ({n + 1}, {m + 1})"
        raise ConvergenceError(f"backflow matrix quadrature failed{where}: {exc}",
                               estimate=exc.estimate, error=exc.error,
                               iterations=exc.iterations) from exc
    M = 1j * (A - A.conj().T)
    return BackflowProblem(float(a), n_max, float(tau_l), float(tau_u), M, float(a),
                           hermiticity_residual(M))


def maximize_backflow(problem, method="jacobi", tol=1e-10):
    """Highest and lowest eigenpairs of the backflow matrix.

    Each pair is checked for unit norm and ``c^H M c = lambda`` to ``tol``
    (relative to the matrix scale).
    """
    lowest, highest = hermitian_extreme_eigs(problem.matrix, method=method)
    scale = max(1.0, float(np.max(np.abs(problem.matrix))))
    for pair in (highest, lowest):
        c = pair.vector
        if abs(np.vdot(c, c).real - 1.0) > tol:
            raise ConvergenceError("eigenvector is not normalised")
        q = np.vdot(c, problem.matrix @ c).real
        if abs(q - pair.value) > tol * scale:
            raise ConvergenceError(f"c^H M c = {q!r} differs from eigenvalue {pair.value!r}")
    return highest, lowest


@dataclass(frozen=True)
class BackflowReport:
    eigenvalue: float
    delta_direct: float
    mismatch: float
    spectrum: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    density0: np.ndarray = field(repr=False)


def direct_backflow(a, coefficients, tau_l, tau_u, epsabs=1e-13):
    """``-int j(a, tau) dtau`` for the superposition, by adaptive quadrature in tau."""
    sup = Superposition.from_vector(a, coefficients)

    def j(t):
        p, d = superpose(sup, a, t)
        return 2.0 * (np.conj(p) * d).imag

    val, _ = quad(j, tau_l, tau_u, limit=5000, epsabs=epsabs, epsrel=1e-12)
    return -val


def verify_backflow_solution(problem, pair, tol=1e-6, nodes=401):
    """Re-integrate the backflow of an eigenvector independently of the matrix.

    Raises :class:`ConvergenceError` when ``|Delta_P - lambda| > tol``. The
    report carries the spectrum ``|c_n|^2`` and the initial density
    ``|Psi(r, 0)|^2`` on ``nodes`` points of [0, a].
    """
    c = np.asarray(pair.vector, dtype=complex)
    if len(c) != problem.n_max:
        raise DomainError("eigenvector dimension does not match the problem")
    delta = direct_backflow(problem.a, c, problem.tau_l, problem.tau_u)
    mismatch = abs(delta - pair.value)
    if mismatch > tol:
        raise ConvergenceError(
            f"direct backflow {delta!r} differs from eigenvalue {pair.value!r} by {mismatch:.3g}",
            estimate=delta, error=mismatch)
    sup = Superposition.from_vector(problem.a, c)
    r = np.linspace(0.0, problem.a, nodes)
    psi0, _ = superpose(sup, r, 0.0)
    return BackflowReport(float(pair.value), float(delta), float(mismatch),
                          np.abs(c) ** 2, r, np.abs(psi0) ** 2)
