"""Torque modulation and the nonlinear PI load-torque observer."""

from __future__ import annotations

import math
from typing import NamedTuple, Tuple

from .errors import NonFiniteState


def mu(x: float, l_p: float, x_max: float) -> float:
    """Saturating proportional term l_p x / ((x/x_max)^2 + 1).

    Odd in ``x``; its magnitude peaks at l_p*x_max/2 for |x| = x_max.
    """
    r = x / x_max
    return l_p * x / (r * r + 1.0)


def d_mu(x: float, l_p: float, x_max: float) -> float:
    """Analytic derivative of :func:`mu` with respect to ``x``."""
    r2 = (x / x_max) ** 2
    return l_p * (1.0 - r2) / (r2 + 1.0) ** 2


class OuterObserverState(NamedTuple):
    omega_hat: float
    z_tau: float
    tau_L_hat: float = 0.0

    @classmethod
    def initial(cls, omega_meas: float) -> "OuterObserverState":
        return cls(float(omega_meas), 0.0, 0.0)


class OuterCommand(NamedTuple):
    tau_m_d: float
    i_alpha_d: float
    i_beta_d: float


def torque_modulation(e_theta, e_omega, omega_d, omega_dot_d, tau_L_hat, g, p) -> float:
    """Desired torque J*w_dot_d + B*w_d + k_theta*e_theta + k_omega*e_omega + tau_L_hat."""
    return (p.J * omega_dot_d + p.B * omega_d + g.k_theta * e_theta
            + g.k_omega * e_omega + tau_L_hat)


def current_references(tau_m_d: float, theta: float, p) -> Tuple[float, float]:
    """alpha/beta current references that realize ``tau_m_d`` at rotor angle ``theta``."""
    scale = 2.0 * tau_m_d / (3.0 * p.P * p.Phi)
    x = p.P * theta
    return -scale * math.sin(x), scale * math.cos(x)


def outer_command(tau_m_d: float, theta: float, p) -> OuterCommand:
    return OuterCommand(tau_m_d, *current_references(tau_m_d, theta, p))


def outer_dob_estimate(s: OuterObserverState, omega_meas: float, g) -> float:
    """Load-torque estimate for the current measurement, without advancing ``s``."""
    w_tilde = omega_meas - s.omega_hat
    return -mu(w_tilde, g.l_p_tau, g.omega_tilde_max) - g.l_i_tau * s.z_tau


def outer_dob_update(s: OuterObserverState, omega_meas: float, tau_m_d: float,
                     dt: float, g, p) -> Tuple[OuterObserverState, float]:
    """One forward-Euler tick of the load-torque observer.

    The estimate is computed from the pre-update state and returned together
    with the advanced state, whose ``tau_L_hat`` field carries that estimate.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    w_tilde = omega_meas - s.omega_hat
    tau_hat = outer_dob_estimate(s, omega_meas, g)
    omega_hat = s.omega_hat + dt * (-(p.B / p.J) * s.omega_hat + tau_m_d / p.J - tau_hat / p.J)
    z_tau = s.z_tau + dt * w_tilde
    if not (math.isfinite(omega_hat) and math.isfinite(z_tau) and math.isfinite(tau_hat)):
        raise NonFiniteState("outer observer state became non-finite")
    return OuterObserverState(omega_hat, z_tau, tau_hat), tau_hat
