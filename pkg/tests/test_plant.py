import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npidob.config import MotorParams
from npidob.errors import NonFiniteState
from npidob.plant import MotorState, PlantInputs, measure, motor_torque, plant_derivative, rk4_step

P = MotorParams(0.875, 2.75e-4, 0.0158, 4, 4.46e-4, 7e-4)
ZERO = MotorState(0.0, 0.0, 0.0, 0.0)


def test_equilibrium():
    assert tuple(plant_derivative(ZERO, PlantInputs(0, 0, 0), P)) == (0, 0, 0, 0)


def test_voltage_drives_current():
    d = plant_derivative(ZERO, PlantInputs(1.0, 0.0, 0.0), P)
    assert d.i_alpha_dot == pytest.approx(3636.3636, rel=1e-6)
    assert (d.theta_dot, d.omega_dot, d.i_beta_dot) == (0.0, 0.0, 0.0)


def test_current_produces_torque():
    d = plant_derivative(MotorState(0, 0, 0, 1.0), PlantInputs(0, 0, 0), P)
    assert d.omega_dot == pytest.approx(0.0948 / 4.46e-4)
    assert d.i_beta_dot == pytest.approx(-P.R / P.L)


def test_torque_values():
    assert motor_torque(1, 0, 0, P) == 0.0
    assert motor_torque(0, 1, 0, P) == pytest.approx(0.0948)
    assert motor_torque(1, 0, math.pi / 8, P) == pytest.approx(-0.0948)


@settings(max_examples=100, deadline=None)
@given(ia=st.floats(-50, 50), ib=st.floats(-50, 50), th=st.floats(-20, 20), k=st.integers(-5, 5))
def test_torque_periodic_in_electrical_angle(ia, ib, th, k):
    a = motor_torque(ia, ib, th, P)
    b = motor_torque(ia, ib, th + k * 2 * math.pi / P.P, P)
    assert b == pytest.approx(a, abs=1e-10 * (1 + abs(a)))


def test_constant_speed_advances_angle_exactly():
    # voltages cancel the back-EMF at the start of the step, so currents stay ~0
    w = 37.5
    s = MotorState(0.25, w, 0.0, 0.0)
    free = plant_derivative(s, PlantInputs(0, 0, -P.B * w), P)
    inp = PlantInputs(-P.L * free.i_alpha_dot, -P.L * free.i_beta_dot, -P.B * w)
    h = 1e-6
    out = rk4_step(s, inp, h, P)
    assert out.omega == pytest.approx(w, rel=1e-12)
    assert out.theta == pytest.approx(0.25 + w * h, rel=1e-12)


def _rl_error(h, T=2e-3, v=2.0):
    s = ZERO
    n = int(round(T / h))
    s = rk4_step(s, PlantInputs(v, 0.0, 0.0), h, P, substeps=n)
    exact = v / P.R * (1 - math.exp(-P.R / P.L * T))
    return abs(s.i_alpha - exact), s


def test_rl_matches_exponential_with_fourth_order_slope():
    errs = [_rl_error(h)[0] for h in (4e-5, 2e-5, 1e-5)]
    assert errs[-1] < 1e-7
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    for r in ratios:
        assert 12 < r < 20
    # no torque at theta=0 with beta current zero, so the rotor stays put
    assert _rl_error(1e-5)[1].omega == 0.0


def test_measure_is_identity():
    s = MotorState(10 * math.pi, 1.0, 2.0, 3.0)
    assert measure(s) == s and measure(s).theta == 10 * math.pi


def test_invalid_step():
    with pytest.raises(ValueError):
        rk4_step(ZERO, PlantInputs(0, 0, 0), 0.0, P)
    with pytest.raises(NonFiniteState):
        rk4_step(MotorState(0, 0, 1e300, 1e300), PlantInputs(1e308, 0, 0), 1.0, P, substeps=50)


@settings(max_examples=40, deadline=None)
@given(w=st.floats(-200, 200), ia=st.floats(-20, 20), ib=st.floats(-20, 20), th=st.floats(-10, 10))
def test_unforced_energy_does_not_grow(w, ia, ib, th):
    # with zero voltage and load, magnetic plus kinetic energy only dissipates
    def energy(s):
        return 0.5 * P.J * s.omega**2 + 0.75 * P.L * (s.i_alpha**2 + s.i_beta**2)

    s = MotorState(th, w, ia, ib)
    e0 = energy(s)
    for _ in range(20):
        s = rk4_step(s, PlantInputs(0, 0, 0), 1e-5, P)
        e1 = energy(s)
        assert e1 <= e0 * (1 + 1e-9) + 1e-15
        e0 = e1


@settings(max_examples=50, deadline=None)
@given(x=st.lists(st.floats(-10, 10), min_size=4, max_size=4),
       u=st.lists(st.floats(-10, 10), min_size=3, max_size=3), c=st.floats(-3, 3))
def test_electrical_rates_affine_in_voltage(x, u, c):
    s = MotorState(*x)
    base = plant_derivative(s, PlantInputs(0, 0, u[2]), P)
    one = plant_derivative(s, PlantInputs(u[0], u[1], u[2]), P)
    scaled = plant_derivative(s, PlantInputs(c * u[0], c * u[1], u[2]), P)
    for a, b, k in ((one.i_alpha_dot, base.i_alpha_dot, scaled.i_alpha_dot),
                    (one.i_beta_dot, base.i_beta_dot, scaled.i_beta_dot)):
        assert k - b == pytest.approx(c * (a - b), rel=1e-9, abs=1e-6)
