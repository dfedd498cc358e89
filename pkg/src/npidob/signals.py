"""
Exogenous signals: velocity/position reference, load torque, inverter voltage error.

All profiles are immutable and evaluated in closed form, so the same time
always maps to the same value (no hidden integrator state).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np


def _check_increasing(times, what):
    for a, b in zip(times, times[1:]):
        if not b > a:
            raise ValueError(f"{what} times must be strictly increasing, got {a} then {b}")


@dataclass(frozen=True)
class ReferenceProfile:
    """Slew-limited velocity reference built from (start time, target) segments.

    ``initial`` is omega_d(0); when omitted it is the first target if that
    segment starts at t=0, otherwise zero.
    """

    segments: Tuple[Tuple[float, float], ...]
    slew: float
    initial: Optional[float] = None
    _knots: Tuple[np.ndarray, ...] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self):
        segs = tuple((float(t), float(w)) for t, w in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("reference needs at least one segment")
        _check_increasing([t for t, _ in segs], "segment")
        if not self.slew > 0:
            raise ValueError("slew must be positive")
        if segs[0][0] < 0:
            raise ValueError("segment times must be nonnegative")
        object.__setattr__(self, "_knots", self._build_knots())

    @property
    def omega0(self) -> float:
        if self.initial is not None:
            return float(self.initial)
        t0, w0 = self.segments[0]
        return w0 if t0 == 0.0 else 0.0

    def _build_knots(self):
        # piecewise-linear omega_d: knots (t, w); theta offsets are exact trapezoids
        ts = [0.0]
        ws = [self.omega0]
        slopes = []  # exact slope on each interval, so omega_dot_d is +-slew without rounding
        for k, (t_start, target) in enumerate(self.segments):
            t_end = self.segments[k + 1][0] if k + 1 < len(self.segments) else math.inf
            w_now = _eval_linear(ts, ws, t_start)
            if t_start > ts[-1]:
                ts.append(t_start)
                ws.append(w_now)
                slopes.append(0.0)
            if w_now == target:
                continue
            sign = 1.0 if target > w_now else -1.0
            slopes.append(sign * self.slew)
            t_reach = t_start + abs(target - w_now) / self.slew
            if t_reach <= t_end:
                ts.append(t_reach)
                ws.append(target)
            else:
                ts.append(t_end)
                ws.append(w_now + sign * self.slew * (t_end - t_start))
        ts_a = np.asarray(ts)
        ws_a = np.asarray(ws)
        area = np.zeros_like(ts_a)
        if len(ts_a) > 1:
            area[1:] = np.cumsum(0.5 * (ws_a[1:] + ws_a[:-1]) * np.diff(ts_a))
        return ts_a, ws_a, area, np.asarray(slopes)

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        """Times where omega_dot_d is discontinuous."""
        return tuple(float(t) for t in self._knots[0][1:])

    def ramps(self) -> Tuple[Tuple[float, float], ...]:
        """(start, end) of every interval where omega_d is changing."""
        ts, _, _, slopes = self._knots
        return tuple((float(ts[i]), float(ts[i + 1])) for i in range(len(ts) - 1)
                     if slopes[i] != 0.0)


def _eval_linear(ts, ws, t):
    # last knot holds forever
    if t >= ts[-1]:
        return ws[-1]
    i = bisect.bisect_right(ts, t) - 1
    return ws[i] + (ws[i + 1] - ws[i]) * (t - ts[i]) / (ts[i + 1] - ts[i])


def reference(t: float, profile: ReferenceProfile, theta0: float = 0.0):
    """Return (theta_d, omega_d, omega_dot_d) at time ``t``.

    theta_d is the exact integral of omega_d from 0 plus ``theta0``.
    """
    ts, ws, area, slopes = profile._knots
    n = len(ts)
    i = int(np.searchsorted(ts, t, side="right")) - 1
    i = max(i, 0)
    if i >= n - 1:
        dt = t - ts[-1]
        return theta0 + area[-1] + ws[-1] * dt, float(ws[-1]), 0.0
    slope = slopes[i]
    dt = t - ts[i]
    omega = ws[i] + slope * dt
    theta = theta0 + area[i] + ws[i] * dt + 0.5 * slope * dt * dt
    return float(theta), float(omega), float(slope)


@dataclass(frozen=True)
class LoadProfile:
    """Piecewise-constant load torque, optionally passed through a first-order lag.

    ``smoothing`` is the lag time constant in seconds; 0 gives hard steps.
    """

    steps: Tuple[Tuple[float, float], ...] = ()
    smoothing: float = 0.0
    _starts: Tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        steps = tuple((float(t), float(v)) for t, v in self.steps)
        object.__setattr__(self, "steps", steps)
        _check_increasing([t for t, _ in steps], "load step")
        if self.smoothing < 0:
            raise ValueError("smoothing time constant must be nonnegative")
        # value of the smoothed output at each step time
        starts = []
        y = 0.0
        prev_t, prev_target = None, 0.0
        for t, v in steps:
            if prev_t is not None and self.smoothing > 0:
                y = prev_target + (y - prev_target) * math.exp(-(t - prev_t) / self.smoothing)
            starts.append(y)
            prev_t, prev_target = t, v
        object.__setattr__(self, "_starts", tuple(starts))

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return tuple(t for t, _ in self.steps)


def load_torque(t: float, profile: LoadProfile) -> float:
    steps = profile.steps
    if not steps or t < steps[0][0]:
        return 0.0
    i = bisect.bisect_right(profile.breakpoints, t) - 1
    t_k, target = steps[i]
    if profile.smoothing <= 0:
        return target
    y0 = profile._starts[i]
    return target + (y0 - target) * math.exp(-(t - t_k) / profile.smoothing)


INVERTER_KINDS = ("none", "harmonic", "dead_time")


@dataclass(frozen=True)
class InverterErrorModel:
    """Additive alpha/beta voltage error between commanded and applied voltage.

    Harmonic phases left as ``None`` are drawn from the run seed (see
    :meth:`resolved`).
    """

    kind: str = "none"
    amplitude_1: float = 0.0
    amplitude_2: float = 0.0
    phase_1: Optional[float] = 0.0
    phase_2: Optional[float] = 0.0
    v_dead: float = 0.0

    def __post_init__(self):
        if self.kind not in INVERTER_KINDS:
            raise ValueError(f"unknown inverter error kind {self.kind!r}")
        for name in ("amplitude_1", "amplitude_2", "v_dead"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def resolved(self, seed: Optional[int]) -> "InverterErrorModel":
        if self.phase_1 is not None and self.phase_2 is not None:
            return self
        rng = np.random.default_rng(0 if seed is None else seed)
        p1, p2 = rng.uniform(0.0, 2.0 * math.pi, size=2)
        return InverterErrorModel(
            self.kind,
            self.amplitude_1,
            self.amplitude_2,
            float(p1) if self.phase_1 is None else self.phase_1,
            float(p2) if self.phase_2 is None else self.phase_2,
            self.v_dead,
        )


def _sign(x):
    return (x > 0) - (x < 0)


def inverter_error(
    theta: float,
    P: int,
    cmd_currents: Sequence[float],
    model: Optional[InverterErrorModel],
) -> Tuple[float, float]:
    """Voltage error (e_v_alpha, e_v_beta) added to the commanded voltages."""
    if model is None or model.kind == "none":
        return 0.0, 0.0
    if model.kind == "harmonic":
        x1 = P * theta + (model.phase_1 or 0.0)
        x2 = 2 * P * theta + (model.phase_2 or 0.0)
        a1, a2 = model.amplitude_1, model.amplitude_2
        return (
            a1 * math.sin(x1) + a2 * math.sin(x2),
            a1 * math.cos(x1) + a2 * math.cos(x2),
        )
    ia, ib = cmd_currents
    return -model.v_dead * _sign(ia), -model.v_dead * _sign(ib)
