"""
Current loop: per-axis nonlinear PI disturbance observers, the Lyapunov
current controller, and voltage-reference synthesis.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence, Tuple

from .errors import NonFiniteState
from .outer_loop import mu


class AxisObserverState(NamedTuple):
    e_hat: float
    z: float
    d_hat: float = 0.0

    @classmethod
    def initial(cls, e_meas: float) -> "AxisObserverState":
        return cls(float(e_meas), 0.0, 0.0)


class InnerObserverState(NamedTuple):
    alpha: AxisObserverState
    beta: AxisObserverState

    @classmethod
    def initial(cls, e_alpha: float, e_beta: float) -> "InnerObserverState":
        return cls(AxisObserverState.initial(e_alpha), AxisObserverState.initial(e_beta))


class InnerCommand(NamedTuple):
    u_alpha: float
    u_beta: float
    v_alpha_d: float
    v_beta_d: float


def current_control(e_alpha: float, e_beta: float, d_hat: Sequence[float], g) -> Tuple[float, float]:
    """u_j = -eta1 e_j / (e_alpha^2 + e_beta^2 + eta2) + d_hat_j, shared denominator."""
    den = e_alpha * e_alpha + e_beta * e_beta + g.eta2
    k = g.eta1 / den
    return -k * e_alpha + d_hat[0], -k * e_beta + d_hat[1]


def voltage_reference(i_d: Sequence[float], omega: float, theta: float,
                      u: Sequence[float], p) -> Tuple[float, float]:
    x = p.P * theta
    bemf = p.P * p.Phi * omega
    return (p.R * i_d[0] - bemf * math.sin(x) - u[0],
            p.R * i_d[1] + bemf * math.cos(x) - u[1])


def inner_dob_estimate(s: AxisObserverState, e_meas: float, g) -> float:
    e_tilde = e_meas - s.e_hat
    return -mu(e_tilde, g.l_p_e, g.e_tilde_max) - g.l_i_e * s.z


def inner_dob_update(s: AxisObserverState, e_meas: float, u: float, dt: float,
                     g, p) -> Tuple[AxisObserverState, float]:
    """One forward-Euler tick of a single-axis disturbance observer.

    ``u`` is the control input applied this tick; the returned estimate does
    not depend on it, so callers may use :func:`inner_dob_estimate` to get
    ``d_hat`` before computing ``u``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    e_tilde = e_meas - s.e_hat
    d_hat = inner_dob_estimate(s, e_meas, g)
    e_hat = s.e_hat + dt * (-(p.R / p.L) * s.e_hat + u / p.L - d_hat / p.L)
    z = s.z + dt * e_tilde
    if not (math.isfinite(e_hat) and math.isfinite(z) and math.isfinite(d_hat)):
        raise NonFiniteState("inner observer state became non-finite")
    return AxisObserverState(e_hat, z, d_hat), d_hat
