"""
Post-run analysis of closed-loop logs: windowed metrics, error-dynamics
consistency residuals and variant comparisons.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyWindow, ScenarioMismatch
from .outer_loop import d_mu
from .simulation import Trajectory

Window = Tuple[float, float]


def _window_mask(t: np.ndarray, window: Window) -> np.ndarray:
    t0, t1 = window
    mask = (t >= t0) & (t <= t1)
    if not mask.any():
        raise EmptyWindow(f"no samples in window [{t0}, {t1}]")
    return mask


def rms(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.sum(x * x) / len(x)))


@dataclass(frozen=True)
class WindowMetrics:
    window: Window
    rms_e_ab: float
    rms_e_omega: float
    rms_tau_tilde: float
    sup_e_ab: float
    sup_e_omega: float
    sup_tau_tilde: float
    peak_e_omega: float
    occupancy: float


@dataclass(frozen=True)
class RunMetrics:
    windows: List[WindowMetrics]
    radius: float

    def to_dict(self) -> dict:
        return {"radius": self.radius, "windows": [asdict(w) for w in self.windows]}


def error_signals(log: Trajectory) -> Dict[str, np.ndarray]:
    return {
        "e_ab": np.hypot(log["e_alpha"], log["e_beta"]),
        "e_omega": np.abs(log["e_omega"]),
        "tau_tilde": np.abs(log["tau_L"] - log["tau_L_hat"]),
    }


def compute_metrics(log: Trajectory, windows: Sequence[Window], radius: float = 0.1) -> RunMetrics:
    """RMS, sup and ball occupancy of the tracking/estimation errors per window.

    Windows are closed intervals [t_start, t_end] in seconds; occupancy is the
    fraction of ticks with ||e_ab|| < ``radius``.
    """
    t = log["t"]
    sig = error_signals(log)
    out = []
    for w in windows:
        m = _window_mask(t, w)
        e_ab, e_w, tt = sig["e_ab"][m], sig["e_omega"][m], sig["tau_tilde"][m]
        out.append(WindowMetrics(
            window=(float(w[0]), float(w[1])),
            rms_e_ab=rms(e_ab), rms_e_omega=rms(e_w), rms_tau_tilde=rms(tt),
            sup_e_ab=float(e_ab.max()), sup_e_omega=float(e_w.max()),
            sup_tau_tilde=float(tt.max()), peak_e_omega=float(e_w.max()),
            occupancy=float(np.mean(e_ab < radius)),
        ))
    return RunMetrics(out, radius)


def steady_windows(log_or_breaks, t_end: Optional[float] = None, settle: float = 1.0,
                   start: float = 0.0) -> List[Window]:
    """Windows between consecutive profile events, each starting ``settle`` s after an event."""
    if isinstance(log_or_breaks, Trajectory):
        breaks = list(log_or_breaks.meta.get("breakpoints", []))
        t_end = float(log_or_breaks["t"][-1]) if t_end is None else t_end
    else:
        breaks = list(log_or_breaks)
    events = [start] + sorted(b for b in breaks if start < b < t_end)
    windows = []
    for a, b in zip(events, events[1:] + [t_end]):
        if a + settle < b:
            windows.append((a + settle, b))
    return windows


@dataclass
class EquationResidual:
    name: str
    max: float
    rms: float
    scale: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.max <= self.bound


@dataclass
class ConsistencyReport:
    residuals: Dict[str, EquationResidual] = field(default_factory=dict)
    samples: int = 0

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.residuals.values())

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "ok": self.ok,
            "equations": {k: {**asdict(v), "ok": v.ok} for k, v in self.residuals.items()},
        }


def _fd(x, dt):
    return (x[2:] - x[:-2]) / (2.0 * dt)


def consistency_check(log: Trajectory, p, g, include_coupling: bool = True,
                      guard: int = 10, bound_factor: float = 10.0) -> ConsistencyReport:
    """Compare finite-difference derivatives of the logged estimation errors
    with the right-hand sides of their continuous-time error dynamics.

    Each residual is bounded by ``bound_factor * dt * scale`` where ``scale``
    is the largest second derivative of the differentiated signal, i.e. the
    size of a first-order discretization error. For the current-error
    equations the rate of the held applied voltage over L also counts, since
    that is the first-order error a zero-order hold injects. Ticks within ``guard`` ticks
    of a reference or load breakpoint, or of the first record (observer
    initialization), are excluded. ``include_coupling=False``
    drops the current-error term from the velocity-error equation.
    """
    n = len(log)
    if n < 3:
        raise ValueError("consistency_check needs at least 3 log records")
    dt = log.dt
    t = log["t"]
    J, B, R, L, P, k_m = p.J, p.B, p.R, p.L, p.P, p.k_m

    keep = np.ones(n, dtype=bool)
    keep[0] = keep[-1] = False
    for b in [t[0], *log.meta.get("breakpoints", [])]:
        keep[np.abs(t - b) <= (guard + 0.5) * dt] = False
    inner = keep[1:-1]

    S = np.sin(P * log["theta"])
    C = np.cos(P * log["theta"])
    coupling = (k_m / J) * (S * log["e_alpha"] - C * log["e_beta"])

    w_t = log["omega"] - log["omega_hat"]
    tau_t = log["tau_L"] - log["tau_L_hat"]
    dmu_w = np.array([d_mu(x, g.l_p_tau, g.omega_tilde_max) for x in w_t])
    tau_rate = np.gradient(log["tau_L"], dt)

    eqs = {}
    held = {}
    rhs_w = -(B / J) * w_t - tau_t / J
    if include_coupling:
        rhs_w = rhs_w + coupling
    eqs["omega_tilde"] = (w_t, rhs_w)
    rhs_tau = (-dmu_w * B / J + g.l_i_tau) * w_t - dmu_w / J * tau_t + dmu_w * coupling + tau_rate
    eqs["tau_tilde"] = (tau_t, rhs_tau)

    if log.meta.get("variant", "full") == "full":
        for j in ("alpha", "beta"):
            e_t = log[f"e_{j}"] - log[f"e_hat_{j}"]
            d_t = log[f"d_true_{j}"] - log[f"d_hat_{j}"]
            dmu_e = np.array([d_mu(x, g.l_p_e, g.e_tilde_max) for x in e_t])
            d_rate = np.gradient(log[f"d_true_{j}"], dt)
            eqs[f"e_tilde_{j}"] = (e_t, -(R / L) * e_t - d_t / L)
            # voltage is held over a tick while the back-EMF keeps turning
            v = log[f"v_{j}_d"] + log[f"e_v_{j}"]
            held[f"e_tilde_{j}"] = np.abs(_fd(v, dt)) / L
            eqs[f"d_tilde_{j}"] = (d_t, (-dmu_e * R / L + g.l_i_e) * e_t - dmu_e / L * d_t + d_rate)

    report = ConsistencyReport(samples=int(inner.sum()))
    for name, (x, rhs) in eqs.items():
        res = np.abs(_fd(x, dt) - rhs[1:-1])[inner]
        second = np.abs(x[2:] - 2.0 * x[1:-1] + x[:-2])[inner] / dt**2
        if name in held:
            second = np.maximum(second, held[name][inner])
        scale = float(second.max()) if len(second) else 0.0
        report.residuals[name] = EquationResidual(
            name=name,
            max=float(res.max()) if len(res) else 0.0,
            rms=rms(res) if len(res) else 0.0,
            scale=scale,
            bound=bound_factor * dt * scale,
        )
    return report


def compare_runs(log_a: Trajectory, log_b: Trajectory, windows: Sequence[Window]) -> dict:
    """Per-window ratios a/b of RMS ||e_ab||, peak |e_omega| and RMS |tau_tilde|."""
    fa, fb = log_a.meta.get("fingerprint"), log_b.meta.get("fingerprint")
    if fa != fb or len(log_a) != len(log_b):
        raise ScenarioMismatch("logs come from different scenarios")
    ma = compute_metrics(log_a, windows)
    mb = compute_metrics(log_b, windows)

    def ratio(a, b):
        if b == 0.0:
            return 1.0 if a == 0.0 else float("inf")
        return a / b

    rows = []
    for wa, wb in zip(ma.windows, mb.windows):
        rows.append({
            "window": list(wa.window),
            "rms_e_ab": ratio(wa.rms_e_ab, wb.rms_e_ab),
            "peak_e_omega": ratio(wa.peak_e_omega, wb.peak_e_omega),
            "rms_tau_tilde": ratio(wa.rms_tau_tilde, wb.rms_tau_tilde),
        })
    return {
        "a": log_a.meta.get("variant"),
        "b": log_b.meta.get("variant"),
        "windows": rows,
    }
