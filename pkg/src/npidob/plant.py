"""
Surface-mounted PMSM in the stationary alpha/beta frame.

State is (theta, omega, i_alpha, i_beta). The scalar kernels are compiled
with numba because the closed-loop harness calls them ~10 times per control
tick; the dataclass wrappers are what the rest of the package uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numba

from .errors import NonFiniteState


class MotorState(NamedTuple):
    theta: float
    omega: float
    i_alpha: float
    i_beta: float


class PlantInputs(NamedTuple):
    v_alpha: float
    v_beta: float
    tau_L: float


class StateDerivative(NamedTuple):
    theta_dot: float
    omega_dot: float
    i_alpha_dot: float
    i_beta_dot: float


Measurement = MotorState


@numba.njit(cache=True)
def _torque(ia, ib, theta, Phi, P):
    k_m = 1.5 * P * Phi
    x = P * theta
    return -k_m * math.sin(x) * ia + k_m * math.cos(x) * ib


@numba.njit(cache=True)
def _deriv(theta, omega, ia, ib, va, vb, tl, R, L, Phi, P, J, B):
    x = P * theta
    s = math.sin(x)
    c = math.cos(x)
    k_m = 1.5 * P * Phi
    tau_m = -k_m * s * ia + k_m * c * ib
    return (
        omega,
        (-B * omega + tau_m - tl) / J,
        (-R * ia + P * Phi * s * omega + va) / L,
        (-R * ib - P * Phi * c * omega + vb) / L,
    )


@numba.njit(cache=True)
def _rk4(theta, omega, ia, ib, va, vb, tl, h, n, R, L, Phi, P, J, B):
    for _ in range(n):
        k1 = _deriv(theta, omega, ia, ib, va, vb, tl, R, L, Phi, P, J, B)
        h2 = 0.5 * h
        k2 = _deriv(theta + h2 * k1[0], omega + h2 * k1[1], ia + h2 * k1[2],
                    ib + h2 * k1[3], va, vb, tl, R, L, Phi, P, J, B)
        k3 = _deriv(theta + h2 * k2[0], omega + h2 * k2[1], ia + h2 * k2[2],
                    ib + h2 * k2[3], va, vb, tl, R, L, Phi, P, J, B)
        k4 = _deriv(theta + h * k3[0], omega + h * k3[1], ia + h * k3[2],
                    ib + h * k3[3], va, vb, tl, R, L, Phi, P, J, B)
        h6 = h / 6.0
        theta = theta + h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        omega = omega + h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        ia = ia + h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        ib = ib + h6 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
    return theta, omega, ia, ib


def _params(p):
    return float(p.R), float(p.L), float(p.Phi), float(p.P), float(p.J), float(p.B)


def motor_torque(i_alpha: float, i_beta: float, theta: float, p) -> float:
    """Electromagnetic torque -k_m sin(P theta) i_alpha + k_m cos(P theta) i_beta."""
    return _torque(float(i_alpha), float(i_beta), float(theta), float(p.Phi), float(p.P))


def plant_derivative(state: MotorState, inp: PlantInputs, p) -> StateDerivative:
    return StateDerivative(*_deriv(*map(float, state), *map(float, inp), *_params(p)))


def rk4_step(state: MotorState, inp: PlantInputs, dt: float, p, substeps: int = 1) -> MotorState:
    """Advance ``state`` by ``substeps`` classical RK4 steps of size ``dt``.

    Inputs are held constant (zero-order hold) over the whole interval.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    out = _rk4(*map(float, state), *map(float, inp), float(dt), int(substeps), *_params(p))
    if not all(math.isfinite(v) for v in out):
        raise NonFiniteState(f"plant state became non-finite: {out}")
    return MotorState(*out)


def measure(state: MotorState) -> Measurement:
    """Ideal sensors: every state component is returned unchanged."""
    return Measurement(*state)


@dataclass(frozen=True)
class _PlantKernel:
    """Pre-unpacked parameters for the per-tick hot loop."""

    R: float
    L: float
    Phi: float
    P: float
    J: float
    B: float

    @classmethod
    def from_params(cls, p):
        return cls(*_params(p))

    def advance(self, x, va, vb, tl, h, n):
        return _rk4(x[0], x[1], x[2], x[3], va, vb, tl, h, n,
                    self.R, self.L, self.Phi, self.P, self.J, self.B)
