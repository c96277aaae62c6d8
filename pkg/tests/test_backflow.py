import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qflow.backflow import (
    BackflowInterval,
    BackflowProblem,
    assemble_backflow_matrix,
    backflow_map,
    direct_backflow,
    find_backflow_intervals,
    maximize_backflow,
    thread_count,
    verify_backflow_solution,
)
from qflow.delta_shell import current, nonescape_P
from qflow.errors import ConvergenceError, DomainError
from qflow.free_packet import FreeModeParams, dpsi_free_dr, psi_free
from qflow.numerics import EigenPair, QuadratureSpec

C_MB = 0.0384517


@pytest.fixture(scope="module")
def problem20():
    return assemble_backflow_matrix(1.0, 20, 0.02, 0.04)


def synthetic_j(t):
    return np.cos(t)


def synthetic_P(t):
    # P' = -j
    return 2.0 - np.sin(t)


def test_intervals_of_synthetic_current():
    out = find_backflow_intervals(synthetic_j, (0.0, 12.0), synthetic_P, location=1.0)
    assert len(out) == 2
    assert out[0].tau_start == pytest.approx(np.pi / 2, abs=1e-6)
    assert out[0].tau_end == pytest.approx(3 * np.pi / 2, abs=1e-6)
    assert out[0].delta == pytest.approx(2.0, rel=1e-10)
    assert out[0].p_at_start == pytest.approx(1.0, abs=1e-6)
    assert out[1].location == 1.0


def test_positive_current_gives_no_intervals():
    assert find_backflow_intervals(lambda t: np.ones_like(t), (0, 5), synthetic_P) == []


def test_odd_sign_changes_is_error():
    with pytest.raises(DomainError):
        find_backflow_intervals(synthetic_j, (0.0, 4.0), synthetic_P)


def test_window_extended_when_starting_negative():
    # cos < 0 at t = 2, so the scan restarts further left and picks up (pi/2, 3pi/2)
    out = find_backflow_intervals(synthetic_j, (2.0, 6.0), synthetic_P)
    assert len(out) == 1
    assert out[0].tau_start == pytest.approx(np.pi / 2, abs=1e-6)


def test_interval_invariants():
    with pytest.raises(DomainError):
        BackflowInterval(2.0, 1.0, 0.1, 0.5, 1.0)
    with pytest.raises(DomainError):
        BackflowInterval(1.0, 2.0, -0.1, 0.5, 1.0)
    with pytest.raises(DomainError):
        find_backflow_intervals(synthetic_j, (3.0, 1.0), synthetic_P)


def test_gain_matches_nonescape_difference(res40):
    j = lambda t: current(res40, 1.0, t)
    P = lambda t: nonescape_P(res40, t)
    out = find_backflow_intervals(j, (10.0, 20.0), P, location=1.0)
    assert len(out) == 12
    for iv in out:
        rise = float(P(np.array([iv.tau_end]))[0] - iv.p_at_start)
        assert iv.delta == pytest.approx(rise, rel=0.01)
        assert current(res40, 1.0, 0.5 * (iv.tau_start + iv.tau_end)) < 0


def test_map_positive_field_is_empty():
    m = backflow_map(lambda r, t: 1.0 + 0 * r * t, (0, 1), (0, 1), (5, 7))
    assert m.values.shape == (5, 7)
    assert m.cells() == [] and m.negative_fraction == 0.0


def test_map_values_and_cells():
    m = backflow_map(lambda r, t: np.sin(r) * np.cos(t), (0, 6), (0, 3), (13, 9))
    cells = m.cells()
    assert cells
    for r, t, v in cells:
        j = np.sin(r) * np.cos(t)
        assert j < 0 and v == pytest.approx(np.log10(-j))
    with pytest.raises(DomainError):
        backflow_map(lambda r, t: r, (1, 0), (0, 1), (2, 2))


def test_delta_shell_map_has_bands_near_shell(res_early):
    m = backflow_map(lambda r, t: current(res_early, r, t), (0.5, 10.0), (5.0, 20.0), (20, 61))
    cells = m.cells()
    assert cells
    near = [c for c in cells if c[0] < 3.0]
    assert near


def test_matrix_is_hermitian_with_real_diagonal(problem20):
    M = problem20.matrix
    assert problem20.hermiticity <= 1e-11
    assert np.max(np.abs(M - M.conj().T)) <= 1e-11
    assert np.max(np.abs(np.diag(M).imag)) < 1e-12


def test_entry_against_trapezoid_oracle(problem20):
    t = np.linspace(0.02, 0.04, 1_000_001)
    p1, p2 = (psi_free(FreeModeParams(1.0, n), 1.0, t) for n in (1, 2))
    d1, d2 = (dpsi_free_dr(FreeModeParams(1.0, n), 1.0, t) for n in (1, 2))
    f = 1j * (np.conj(p1) * d2 - np.conj(d1) * p2)
    ref = np.trapezoid(f, t) if hasattr(np, "trapezoid") else np.trapz(f, t)
    assert abs(problem20.matrix[0, 1] - ref) < 1e-9


def test_two_mode_extremes():
    pb = assemble_backflow_matrix(1.0, 2, 0.02, 0.04)
    hi, lo = maximize_backflow(pb)
    assert hi.value == pytest.approx(0.00032, abs=1e-5)
    assert lo.value == pytest.approx(-0.16424, abs=1e-5)


def test_unit_vector_gives_diagonal_entry(problem20):
    e1 = np.zeros(20, dtype=complex)
    e1[0] = 1.0
    assert direct_backflow(1.0, e1, 0.02, 0.04) == pytest.approx(problem20.matrix[0, 0].real, abs=1e-9)


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 10_000))
def test_quadratic_form_against_direct_integration(problem20, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=20) + 1j * rng.normal(size=20)
    c /= np.linalg.norm(c)
    q = np.vdot(c, problem20.matrix @ c).real
    assert direct_backflow(1.0, c, 0.02, 0.04) == pytest.approx(q, abs=1e-8)


def test_spectrum_bounds(problem20):
    ev = np.linalg.eigvalsh(problem20.matrix)
    assert ev.min() > -1 - 1e-6 and ev.max() < 1
    assert ev.max() < C_MB


def test_highest_eigenvalue_monotone_in_size():
    values = [maximize_backflow(assemble_backflow_matrix(1.0, n, 0.02, 0.04))[0].value for n in range(2, 13)]
    assert np.all(np.diff(values) >= -1e-12)


def test_jacobi_and_power_agree(problem20):
    hj, lj = maximize_backflow(problem20, method="jacobi")
    hp, lp = maximize_backflow(problem20, method="power")
    assert abs(hj.value - hp.value) < 1e-10
    assert abs(lj.value - lp.value) < 1e-10


def test_verification_report(problem20):
    hi, lo = maximize_backflow(problem20)
    rep = verify_backflow_solution(problem20, hi)
    assert rep.mismatch <= 1e-6
    assert rep.spectrum.sum() == pytest.approx(1.0)
    assert rep.density0[0] == pytest.approx(0.0, abs=1e-20)
    assert np.sum(rep.density0[:-1]) * (rep.r[1] - rep.r[0]) == pytest.approx(1.0, rel=1e-3)


def test_verification_detects_wrong_eigenvalue(problem20):
    hi, _ = maximize_backflow(problem20)
    fake = EigenPair(hi.value + 1e-3, hi.vector, hi.residual)
    with pytest.raises(ConvergenceError):
        verify_backflow_solution(problem20, fake)


def test_problem_validation():
    with pytest.raises(DomainError):
        assemble_backflow_matrix(1.0, 1, 0.02, 0.04)
    with pytest.raises(DomainError):
        assemble_backflow_matrix(1.0, 4, 0.04, 0.02)
    with pytest.raises(DomainError):
        BackflowProblem(1.0, 3, 0.1, 0.2, np.eye(2), 1.0)


def test_quadrature_failure_names_entry():
    spec = QuadratureSpec(abs_tol=1e-16, rel_tol=1e-16, max_levels=6)
    with pytest.raises(ConvergenceError, match=r"\(n, n'\)"):
        assemble_backflow_matrix(1.0, 6, 0.02, 0.04, spec)


def test_plain_romberg_branch_for_late_windows():
    pb = assemble_backflow_matrix(1.0, 4, 1.0, 1.4)
    hi, _ = maximize_backflow(pb)
    assert direct_backflow(1.0, hi.vector, 1.0, 1.4) == pytest.approx(hi.value, abs=1e-10)


def test_thread_count_is_deterministic(monkeypatch):
    monkeypatch.setenv("QFLOW_THREADS", "1")
    one = assemble_backflow_matrix(1.0, 8, 0.02, 0.04).matrix
    monkeypatch.setenv("QFLOW_THREADS", "4")
    assert thread_count() == 4
    four = assemble_backflow_matrix(1.0, 8, 0.02, 0.04).matrix
    assert np.array_equal(one, four)
    monkeypatch.setenv("QFLOW_THREADS", "zero")
    with pytest.raises(DomainError):
        thread_count()
