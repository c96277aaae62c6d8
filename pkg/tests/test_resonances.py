import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qflow.errors import DomainError, TruncationError
from qflow.resonances import (
    GLOBAL_SIGN,
    RESIDUAL_TOL,
    residual_tolerance,
    BarrierParams,
    auto_truncate,
    expansion_coefficient,
    initial_state_series,
    reconstruction_error,
    resonance_condition,
    solve_resonances,
)


def winding_count(g, dg, box, n=4000):
    """Number of zeros of g inside a rectangle by the argument principle."""
    (x0, x1), (y0, y1) = box
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]
    total = 0.0j
    s, w = np.polynomial.legendre.leggauss(64)
    for za, zb in zip(corners[:-1], corners[1:]):
        edges = np.linspace(0, 1, n // 64 + 1)
        for e0, e1 in zip(edges[:-1], edges[1:]):
            u = e0 + (e1 - e0) * (s + 1) / 2
            z = za + (zb - za) * u
            total += np.sum(w * (e1 - e0) / 2 * dg(z) / g(z)) * (zb - za)
    return total / (2j * np.pi)


def test_params_validation():
    with pytest.raises(DomainError):
        BarrierParams(-1.0)
    with pytest.raises(DomainError):
        BarrierParams(1.0, a=0.0)
    with pytest.raises(DomainError):
        BarrierParams(1.0, n=0)


def test_residuals_and_mirror(res40):
    assert np.all(res40.residuals() < RESIDUAL_TOL)
    N = res40.truncation
    kp, km = res40.k[:N], res40.k[N:]
    assert np.allclose(km, -np.conj(kp), atol=1e-12)
    assert np.all(res40.k.imag < 0)
    assert list(res40.nu[:3]) == [1, 2, 3] and list(res40.nu[N:N + 2]) == [-1, -2]


def test_poles_sit_near_wall_levels(res40):
    x = res40.k[:40].real * res40.params.a
    assert np.all(np.abs(x - np.pi * np.arange(1, 41)) < np.pi / 2)
    assert np.all(np.diff(x) > 0)


def test_first_pole_unique_in_box():
    lam = 6.0
    g = lambda x: np.exp(2j * x) - 1 + 2j * x / lam
    dg = lambda x: 2j * np.exp(2j * x) + 2j / lam
    count = winding_count(g, dg, ((2.5, 3.3), (-0.6, 0.0)))
    assert abs(count - 1) < 1e-6
    res = solve_resonances(BarrierParams(lam), 6)
    k1 = res.k[0]
    assert 2.5 < k1.real < 3.3 and -0.6 < k1.imag < 0


@settings(max_examples=12, deadline=None)
@given(st.floats(0.3, 200.0), st.floats(0.5, 3.0), st.integers(1, 4))
def test_residuals_for_random_barriers(lam, a, n):
    res = solve_resonances(BarrierParams(lam, a, n), n + 30)
    assert np.all(res.residuals() < RESIDUAL_TOL)
    N = res.truncation
    assert np.allclose(res.k[N:], -np.conj(res.k[:N]), atol=1e-10)


def test_count_must_exceed_level():
    with pytest.raises(DomainError):
        solve_resonances(BarrierParams(6.0, 1.0, 3), 7)


def test_condition_vanishes_at_poles(res40):
    assert np.max(np.abs(resonance_condition(res40.params, res40.k))) < RESIDUAL_TOL


def test_coefficient_formula_by_hand(res40):
    p = res40.params
    k = res40.k[2]
    x = k * p.a
    ref = (-1) ** p.n * 2 * p.n * np.pi * np.sqrt(2 * p.a) * k / (
        (x * x - (p.n * np.pi) ** 2) * ((1 + p.lam - 1j * x) / np.tan(x) - 1j - x))
    assert expansion_coefficient(p, k) == pytest.approx(ref, rel=1e-14)


def test_coefficient_domain_error():
    p = BarrierParams(6.0, 1.0, 1)
    with pytest.raises(DomainError):
        expansion_coefficient(p, np.pi + 0j)


def test_coefficient_mirror_symmetry(res40):
    # a real initial state pairs k_{-nu} = -conj(k_nu) with c_{-nu} = conj(c_nu)
    N = res40.truncation
    assert np.allclose(res40.c[N:], np.conj(res40.c[:N]), rtol=1e-12, atol=1e-15)


def test_initial_state_series_sign(res40):
    r = np.array([0.3, 0.5, 0.7])
    phi = np.sqrt(2) * np.sin(np.pi * r)
    series = initial_state_series(res40, r)
    assert GLOBAL_SIGN == -1.0
    # same sign as the level and within the slow truncation error
    assert np.all(np.abs(series - phi) < 0.05)


def test_reconstruction_error_decreases():
    p = BarrierParams(6.0, 1.0, 1)
    errs = [reconstruction_error(solve_resonances(p, n)) for n in (40, 160, 640)]
    assert errs[0] > errs[1] > errs[2]
    # the series converges only like N^-1/2
    slope = np.polyfit(np.log([40, 160, 640]), np.log(errs), 1)[0]
    assert -0.7 < slope < -0.3


def test_auto_truncate_loose_and_tight():
    p = BarrierParams(6.0, 1.0, 1)
    res = auto_truncate(p, tol=0.05)
    assert reconstruction_error(res) < 0.05
    with pytest.raises(TruncationError) as info:
        auto_truncate(p, tol=1e-6, max_count=160)
    assert info.value.error > 1e-6
    assert info.value.estimate.truncation == 160


def test_rows_layout(res40):
    rows = res40.rows()
    assert len(rows) == 80
    nu, kr, ki, cr, ci = rows[0]
    assert nu == 1 and kr == pytest.approx(res40.k[0].real) and ci == pytest.approx(res40.c[0].imag)


def test_residual_floor_only_for_very_high_poles():
    p = BarrierParams(6.0, 1.0, 1)
    assert np.all(residual_tolerance(p, solve_resonances(p, 320).k) == RESIDUAL_TOL)
    res = solve_resonances(p, 2700)
    assert np.all(res.residuals() < residual_tolerance(p, res.k))
    assert np.sort(res.residuals())[len(res.k) // 2] < RESIDUAL_TOL
