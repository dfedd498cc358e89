import math
from types import SimpleNamespace

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from npidob.config import GainSet
from npidob.errors import NonPositiveGamma, NotHurwitz
from npidob.stability import (StabilityQuery, current_loop_decay, error_matrices,
                              finite_time_bound, gamma_grid, gamma_star, is_hurwitz,
                              mechanical_matrix, solve_lyapunov)


def test_error_matrices(motor, gains):
    A0, A1, B = error_matrices("outer", motor, gains)
    np.testing.assert_allclose(A0, [[-1.5695067, -2242.1525], [1e5, 0]], rtol=1e-6)
    np.testing.assert_allclose(A1, [[0, 0], A0[0]])
    np.testing.assert_array_equal(B, [0, 1])
    A0, A1, _ = error_matrices("inner", motor, gains)
    np.testing.assert_allclose(A0, [[-3181.818, -3636.3636], [6e4, 0]], rtol=1e-6)
    np.testing.assert_allclose(A1, [[0, 0], A0[0]])


def test_lyapunov_examples():
    np.testing.assert_allclose(solve_lyapunov(-np.eye(2), 2 * np.eye(2)), np.eye(2), atol=1e-15)
    P = solve_lyapunov([[0, 1], [-2, -3]], np.eye(2))
    np.testing.assert_allclose(P, [[1.25, 0.25], [0.25, 0.25]], atol=1e-14)
    with pytest.raises(NotHurwitz):
        solve_lyapunov([[1, 0], [0, -1]], np.eye(2))
    with pytest.raises(ValueError):
        solve_lyapunov(-np.eye(2), [[1, 2], [0, 1]])


def test_lyapunov_agrees_with_scipy(motor, gains):
    for loop in ("outer", "inner"):
        A0, _, _ = error_matrices(loop, motor, gains)
        Q = 1000.0 * np.eye(2)
        P = solve_lyapunov(A0, Q)
        ref = scipy.linalg.solve_continuous_lyapunov(A0.T, -Q)
        np.testing.assert_allclose(P, ref, rtol=1e-8)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(-1e3, 1e3), b=st.floats(-1e3, 1e3), c=st.floats(-1e3, 1e3),
       d=st.floats(-1e3, 1e3))
def test_hurwitz_matches_eigenvalues(a, b, c, d):
    A = np.array([[a, b], [c, d]])
    ev = np.linalg.eigvals(A)
    margin = np.max(np.abs(ev)) * 1e-9 + 1e-12
    if np.all(ev.real < -margin):
        assert is_hurwitz(A)
    elif np.any(ev.real > margin):
        assert not is_hurwitz(A)


def test_mechanical_matrix(motor, gains):
    A, ok = mechanical_matrix(gains, motor)
    np.testing.assert_allclose(A, [[0, 1], [-896.86, -49.552]], rtol=1e-4)
    assert ok
    # GainSet forbids k_theta = 0, so bypass validation to probe the singular case
    A0, ok0 = mechanical_matrix(SimpleNamespace(k_theta=0.0, k_omega=gains.k_omega), motor)
    assert not ok0 and 0.0 in np.linalg.eigvals(A0)


@settings(max_examples=50, deadline=None)
@given(kt=st.floats(1e-3, 1e3), kw=st.floats(1e-3, 1e3))
def test_positive_pd_gains_always_hurwitz(kt, kw, motor, gains):
    g = GainSet(**{**gains.__dict__, "k_theta": kt, "k_omega": kw})
    assert mechanical_matrix(g, motor)[1]


def test_gamma_without_nonlinear_or_disturbance(motor, gains):
    g = GainSet(**{**gains.__dict__, "l_p_e": 0.0})
    r = gamma_star(StabilityQuery("inner", 1000.0, 0.1, 0.0), motor, g)
    assert r.gamma_star == 1000.0 / np.linalg.eigvalsh(r.P)[-1]
    assert r.nonlinear_term == 0.0 and r.disturbance_term == 0.0


def test_gamma_monotone(motor, gains):
    base = dict(loop="inner", Q0=1000.0, epsilon=0.1, delta=0.1)
    g = lambda **kw: gamma_star(StabilityQuery(**{**base, **kw}), motor, gains).gamma_star
    deltas = [g(delta=x) for x in (0.0, 0.1, 0.5, 1.0)]
    assert all(a >= b for a, b in zip(deltas, deltas[1:]))
    epss = [g(epsilon=x) for x in (0.05, 0.1, 1.0, 10.0)]
    assert all(a <= b for a, b in zip(epss, epss[1:]))
    grid = gamma_grid("inner", [0.0, 0.001, 0.0025, 0.01], [6e4], motor, gains, delta=0.1)
    assert np.all(np.diff(grid[:, 0]) <= 0)


def test_report_contents(motor, gains):
    r = gamma_star(StabilityQuery("inner", 1000.0, 0.1, 1.0), motor, gains)
    d = r.to_dict()
    assert d["norm"] == "spectral" and "gamma_star_frobenius" in d["alternatives"]
    assert d["rho"] == pytest.approx(0.1 / 1300.1)
    assert np.all(np.linalg.eigvalsh(r.P) > 0)
    outer = gamma_star(StabilityQuery("outer", 1000.0, 0.1, 1.0), motor, gains, norm="frobenius")
    assert outer.rho is None and "gamma_star_spectral" in outer.alternatives


def test_query_validation():
    with pytest.raises(ValueError):
        StabilityQuery("inner", -1.0, 0.1, 1.0)
    with pytest.raises(ValueError):
        StabilityQuery("inner", 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        StabilityQuery("inner", 1.0, 0.1, -1.0)
    with pytest.raises(ValueError):
        StabilityQuery("sideways", 1.0, 0.1, 1.0)


def test_finite_time_bound():
    assert finite_time_bound(0.1 * 0.1, 0.1, 5.0) == 0.0
    assert finite_time_bound(math.e**2 * 0.01, 0.1, 2.0) == pytest.approx(1.0)
    with pytest.raises(NonPositiveGamma):
        finite_time_bound(1.0, 0.1, -1.0)
    with pytest.raises(ValueError):
        finite_time_bound(1e-4, 0.1, 1.0)


def test_current_loop_decay(motor, gains):
    assert current_loop_decay(math.inf, gains, motor, 3.0) == pytest.approx(-2 * 2000 / 2.75e-4 + 3.0)
    big = current_loop_decay(1e12, gains, motor, 0.0)
    assert big == pytest.approx(-2 * 2000 / 2.75e-4, rel=1e-8)
    at_eta2 = current_loop_decay(gains.eta2, gains, motor, 0.0)
    assert at_eta2 == pytest.approx(-2 * 2000 / 2.75e-4 * 0.5)
    assert current_loop_decay(1.0, gains, motor, 0.0) == pytest.approx(-1.118e4, rel=1e-3)
    with pytest.raises(ValueError):
        current_loop_decay(0.0, gains, motor, 0.0)
