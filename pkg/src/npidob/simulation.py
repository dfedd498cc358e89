"""
Closed-loop scheduler and trajectory logging.

One call to :func:`run_scenario` owns its plant and observer states; nothing
is shared between runs, so separate runs can go to separate processes.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from collections import namedtuple
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .config import ControllerVariant, GainSet, MotorParams, Scenario, config_to_dict
from .errors import NonFiniteState
from .inner_loop import (AxisObserverState, current_control, inner_dob_estimate,
                         inner_dob_update, voltage_reference)
from .outer_loop import (OuterObserverState, current_references, outer_dob_estimate,
                         outer_dob_update, torque_modulation)
from .plant import _PlantKernel, measure
from .signals import inverter_error, load_torque, reference

COLUMNS = (
    "t",
    "theta", "omega", "i_alpha", "i_beta",
    "theta_d", "omega_d",
    "tau_L",
    "tau_m_d", "i_alpha_d", "i_beta_d",
    "v_alpha_d", "v_beta_d", "u_alpha", "u_beta",
    "tau_L_hat", "omega_hat",
    "e_hat_alpha", "e_hat_beta", "d_hat_alpha", "d_hat_beta",
    "e_theta", "e_omega", "e_alpha", "e_beta",
    "e_v_alpha", "e_v_beta",
    "d_true_alpha", "d_true_beta",
)

LogRecord = namedtuple("LogRecord", COLUMNS)

_IDX = {name: i for i, name in enumerate(COLUMNS)}


def scenario_fingerprint(p: MotorParams, g: GainSet, s: Scenario, seed=None) -> str:
    """Hash of everything that defines a run except the controller variant."""
    doc = config_to_dict(p, g, s)
    doc["scenario"].pop("variant")
    doc["seed"] = seed
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


class Trajectory(Sequence):
    """Per-tick log of a closed-loop run.

    Behaves as a sequence of :class:`LogRecord`; whole columns are available
    as numpy arrays via ``traj["omega"]``.
    """

    def __init__(self, data: np.ndarray, meta: Optional[dict] = None):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(COLUMNS):
            data = data.reshape(-1, len(COLUMNS))
        self.data = data
        self.meta = dict(meta or {})

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, key):
        if isinstance(key, str):
            return self.data[:, _IDX[key]]
        if isinstance(key, slice):
            return Trajectory(self.data[key], self.meta)
        return LogRecord(*self.data[key].tolist())

    def __iter__(self) -> Iterator[LogRecord]:
        for row in self.data.tolist():
            yield LogRecord(*row)

    @property
    def dt(self) -> float:
        if "dt_ctrl" in self.meta:
            return float(self.meta["dt_ctrl"])
        return float(self.data[1, 0] - self.data[0, 0])

    def final_state(self) -> np.ndarray:
        return np.array(self.meta["final_state"])

    def to_csv(self, path: Union[str, Path, None] = None) -> str:
        buf = io.StringIO()
        buf.write(",".join(COLUMNS) + "\n")
        if len(self):
            np.savetxt(buf, self.data, fmt="%.16e", delimiter=",")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path_or_text: Union[str, Path], meta: Optional[dict] = None) -> "Trajectory":
        text = str(path_or_text)
        if "\n" not in text:
            text = Path(path_or_text).read_text()
        lines = text.splitlines()
        header = tuple(lines[0].split(","))
        if header != COLUMNS:
            raise ValueError("CSV header does not match the log columns")
        if len(lines) == 1:
            return cls(np.empty((0, len(COLUMNS))), meta)
        data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
        return cls(data, meta)


def _diff_reference_rate(x: np.ndarray, dt: float) -> np.ndarray:
    """Central differences with one-sided ends."""
    if len(x) < 2:
        return np.zeros_like(x)
    return np.gradient(x, dt)


def run_scenario(p: MotorParams, g: GainSet, s: Scenario, seed: Optional[int] = None) -> Trajectory:
    """Simulate the closed loop and return one log record per control tick.

    Per tick: measure, reference, load-torque estimate, torque modulation,
    outer observer update, current references and errors, disturbance
    estimate, current control, inner observer update, voltage reference,
    inverter error, then ``dt_ctrl/dt_plant`` RK4 plant sub-steps with the
    voltages and load torque held.
    """
    timing = s.timing
    n = timing.n_ticks
    dt = timing.dt_ctrl
    h = timing.dt_plant
    m = timing.substeps
    variant = ControllerVariant.parse(s.variant)
    use_outer = variant is not ControllerVariant.NO_DOB
    use_inner = variant is ControllerVariant.FULL
    inv = s.inverter_error.resolved(seed) if s.inverter_error is not None else None
    ref = s.reference
    load = s.load
    theta0 = float(s.initial_state.theta)
    kernel = _PlantKernel.from_params(p)
    L = p.L

    buf = np.empty((n, len(COLUMNS)))
    x = tuple(float(v) for v in s.initial_state)
    outer = inner_a = inner_b = None

    for k in range(n):
        t = k * dt
        th, w, ia, ib = measure(x)
        th_d, w_d, wdot_d = reference(t, ref, theta0)
        tau_L = load_torque(t, load)

        if outer is None:
            outer = OuterObserverState.initial(w)
        if use_outer:
            omega_hat = outer.omega_hat
            tau_hat = outer_dob_estimate(outer, w, g)
        else:
            omega_hat, tau_hat = w, 0.0

        e_th = th_d - th
        e_w = w_d - w
        tau_m_d = torque_modulation(e_th, e_w, w_d, wdot_d, tau_hat, g, p)
        if use_outer:
            try:
                outer, _ = outer_dob_update(outer, w, tau_m_d, dt, g, p)
            except NonFiniteState as exc:
                raise NonFiniteState(str(exc), tick=k) from None
        iad, ibd = current_references(tau_m_d, th, p)
        ea = iad - ia
        eb = ibd - ib

        if inner_a is None:
            inner_a = AxisObserverState.initial(ea)
            inner_b = AxisObserverState.initial(eb)
        if use_inner:
            ea_hat, eb_hat = inner_a.e_hat, inner_b.e_hat
            da = inner_dob_estimate(inner_a, ea, g)
            db = inner_dob_estimate(inner_b, eb, g)
        else:
            ea_hat, eb_hat, da, db = ea, eb, 0.0, 0.0

        ua, ub = current_control(ea, eb, (da, db), g)
        if use_inner:
            try:
                inner_a, _ = inner_dob_update(inner_a, ea, ua, dt, g, p)
                inner_b, _ = inner_dob_update(inner_b, eb, ub, dt, g, p)
            except NonFiniteState as exc:
                raise NonFiniteState(str(exc), tick=k) from None

        vad, vbd = voltage_reference((iad, ibd), w, th, (ua, ub), p)
        eva, evb = inverter_error(th, p.P, (iad, ibd), inv)

        buf[k] = (t, th, w, ia, ib, th_d, w_d, tau_L, tau_m_d, iad, ibd,
                  vad, vbd, ua, ub, tau_hat, omega_hat, ea_hat, eb_hat, da, db,
                  e_th, e_w, ea, eb, eva, evb, 0.0, 0.0)

        x = kernel.advance(x, vad + eva, vbd + evb, tau_L, h, m)
        if not (math.isfinite(x[0]) and math.isfinite(x[1])
                and math.isfinite(x[2]) and math.isfinite(x[3])):
            raise NonFiniteState("plant state became non-finite", tick=k)

    if n:
        for j, (col_id, col_ev) in enumerate((("i_alpha_d", "e_v_alpha"), ("i_beta_d", "e_v_beta"))):
            rate = _diff_reference_rate(buf[:, _IDX[col_id]], dt)
            buf[:, _IDX["d_true_alpha"] + j] = -L * rate + buf[:, _IDX[col_ev]]

    breaks = sorted(set(ref.breakpoints) | set(load.breakpoints))
    meta = {
        "dt_ctrl": dt,
        "dt_plant": h,
        "variant": variant.value,
        "breakpoints": [b for b in breaks if b > 0],
        "fingerprint": scenario_fingerprint(p, g, s, seed),
        "seed": seed,
        "final_state": list(x),
    }
    return Trajectory(buf, meta)
