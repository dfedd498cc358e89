"""
Numerical certificates for the observer error dynamics and the mechanical loop.

Each observer error system has the form

    d' = (A0 + dmu(x) A1) d + Bvec * disturbance_rate

with d = (estimation error of the measured state, disturbance estimation
error). Quadratic Lyapunov functions V = d^T P d with A0^T P + P A0 = -Q0
give a decay-rate lower bound ``gamma_star`` valid outside the ball
||d|| >= epsilon.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import IllConditioned, NonPositiveGamma, NotHurwitz
from .outer_loop import d_mu


class Loop(str, enum.Enum):
    OUTER = "outer"
    INNER = "inner"

    @classmethod
    def parse(cls, value) -> "Loop":
        return value if isinstance(value, cls) else cls(str(value).lower())


def error_matrices(loop, p, g) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (A0, A1, Bvec) of the observer error dynamics for ``loop``."""
    loop = Loop.parse(loop)
    if loop is Loop.OUTER:
        a, b, l_i = p.B / p.J, 1.0 / p.J, g.l_i_tau
    else:
        a, b, l_i = p.R / p.L, 1.0 / p.L, g.l_i_e
    A0 = np.array([[-a, -b], [l_i, 0.0]])
    A1 = np.array([[0.0, 0.0], [-a, -b]])
    return A0, A1, np.array([0.0, 1.0])


def saturation_width(loop, g) -> Tuple[float, float]:
    """(l_p, x_max) of the nonlinear proportional term in ``loop``."""
    loop = Loop.parse(loop)
    if loop is Loop.OUTER:
        return g.l_p_tau, g.omega_tilde_max
    return g.l_p_e, g.e_tilde_max


def is_hurwitz(A) -> bool:
    """Routh test for a real 2x2 matrix: trace < 0 and det > 0."""
    A = np.asarray(A, dtype=float)
    tr = A[0, 0] + A[1, 1]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    return bool(tr < 0 and det > 0)


def solve_lyapunov(A, Q, cond_limit: float = 1e13) -> np.ndarray:
    """Solve A^T P + P A = -Q for symmetric P (2x2 only).

    The three unknowns (p11, p12, p22) satisfy a 3x3 linear system that is
    solved directly.
    """
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if A.shape != (2, 2) or Q.shape != (2, 2):
        raise ValueError("solve_lyapunov handles 2x2 matrices only")
    if not is_hurwitz(A):
        raise NotHurwitz(f"eigenvalues {np.linalg.eigvals(A)} not in the open left half-plane")
    if not np.allclose(Q, Q.T, rtol=1e-12, atol=0.0):
        raise ValueError("Q must be symmetric")
    (a, b), (c, d) = A
    M = np.array([
        [2.0 * a, 2.0 * c, 0.0],
        [b, a + d, c],
        [0.0, 2.0 * b, 2.0 * d],
    ])
    rhs = -np.array([Q[0, 0], 0.5 * (Q[0, 1] + Q[1, 0]), Q[1, 1]])
    # equilibrate columns so wildly different entry scales don't fake singularity
    col = np.max(np.abs(M), axis=0)
    col[col == 0] = 1.0
    Ms = M / col
    if not np.isfinite(np.linalg.cond(Ms)) or np.linalg.cond(Ms) > cond_limit:
        raise IllConditioned("Lyapunov system is numerically singular")
    x = np.linalg.solve(Ms, rhs) / col
    return np.array([[x[0], x[1]], [x[1], x[2]]])


def _norm(X, kind):
    return float(np.linalg.norm(X, 2 if kind == "spectral" else "fro"))


@dataclass(frozen=True)
class StabilityQuery:
    loop: Loop
    Q0: np.ndarray
    epsilon: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "loop", Loop.parse(self.loop))
        Q0 = np.array(self.Q0, dtype=float)
        if np.ndim(Q0) == 0:
            Q0 = float(Q0) * np.eye(2)
        object.__setattr__(self, "Q0", Q0)
        if Q0.shape != (2, 2) or not np.allclose(Q0, Q0.T):
            raise ValueError("Q0 must be a symmetric 2x2 matrix")
        if np.linalg.eigvalsh(Q0)[0] <= 0:
            raise ValueError("Q0 must be positive definite")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")


@dataclass(frozen=True)
class StabilityReport:
    loop: Loop
    P: np.ndarray
    Q1: np.ndarray
    gamma_star: float
    hurwitz: bool
    epsilon: float
    delta: float
    norm: str
    decay_term: float
    nonlinear_term: float
    disturbance_term: float
    rho: Optional[float] = None
    alternatives: dict = field(default_factory=dict)

    def t_f_bound(self, V0: float) -> float:
        """Time after T0 by which V decays from ``V0`` to epsilon^2."""
        return finite_time_bound(V0, self.epsilon, self.gamma_star)

    def to_dict(self) -> dict:
        out = {
            "loop": self.loop.value,
            "P": self.P.tolist(),
            "Q1": self.Q1.tolist(),
            "gamma_star": self.gamma_star,
            "certified": self.gamma_star > 0,
            "hurwitz": self.hurwitz,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "norm": self.norm,
            "terms": {
                "decay": self.decay_term,
                "nonlinear": self.nonlinear_term,
                "disturbance": self.disturbance_term,
            },
            "alternatives": dict(self.alternatives),
        }
        if self.rho is not None:
            out["rho"] = self.rho
        return out


def _gamma_terms(P, Q0, Q1, l_p, epsilon, delta, norm):
    ev = np.linalg.eigvalsh(P)
    lam_min, lam_max = float(ev[0]), float(ev[-1])
    decay = float(np.linalg.eigvalsh(Q0)[0]) / lam_max
    nonlinear = l_p * _norm(Q1, norm) / lam_min
    disturbance = 2.0 * _norm(P, norm) / epsilon * delta / lam_min
    return decay, nonlinear, disturbance


def gamma_star(q: StabilityQuery, p, g, norm: str = "spectral") -> StabilityReport:
    """Worst-case decay rate of V = d^T P d outside the epsilon-ball.

    ``|dmu|`` is bounded by ``l_p`` over the saturation domain, which turns
    the infimum over the observer error into a single evaluation.
    """
    if norm not in ("spectral", "frobenius"):
        raise ValueError("norm must be 'spectral' or 'frobenius'")
    A0, A1, _ = error_matrices(q.loop, p, g)
    P = solve_lyapunov(A0, q.Q0)
    Q1 = A1.T @ P + P @ A1
    l_p, _ = saturation_width(q.loop, g)
    terms = _gamma_terms(P, q.Q0, Q1, l_p, q.epsilon, q.delta, norm)
    gamma = terms[0] - terms[1] - terms[2]
    other = "frobenius" if norm == "spectral" else "spectral"
    t_other = _gamma_terms(P, q.Q0, Q1, l_p, q.epsilon, q.delta, other)
    rho = None
    if q.loop is Loop.INNER:
        rho = q.epsilon / (q.epsilon + g.eta2)
    return StabilityReport(
        loop=q.loop, P=P, Q1=Q1, gamma_star=float(gamma), hurwitz=True,
        epsilon=q.epsilon, delta=q.delta, norm=norm,
        decay_term=terms[0], nonlinear_term=terms[1], disturbance_term=terms[2],
        rho=rho, alternatives={f"gamma_star_{other}": t_other[0] - t_other[1] - t_other[2]},
    )


def finite_time_bound(V0: float, epsilon: float, gamma_star: float) -> float:
    """(ln V0 - 2 ln epsilon) / gamma_star."""
    if not gamma_star > 0:
        raise NonPositiveGamma(f"gamma_star = {gamma_star} gives no decay certificate")
    if V0 < epsilon * epsilon:
        raise ValueError("V0 must be at least epsilon^2")
    return (math.log(V0) - 2.0 * math.log(epsilon)) / gamma_star


def mechanical_matrix(g, p) -> Tuple[np.ndarray, bool]:
    A_m = np.array([[0.0, 1.0], [-g.k_theta / p.J, -(g.k_omega + p.B) / p.J]])
    return A_m, is_hurwitz(A_m)


def current_loop_decay(epsilon_ab: float, g, p, delta_ab: float) -> float:
    """Upper bound -(2 eta1 / L) rho + delta on dV/dt of the current error.

    rho = epsilon/(epsilon + eta2) is the infimum of x/(x + eta2) over
    x >= epsilon. ``epsilon_ab`` may be ``math.inf`` (rho = 1).
    """
    if not epsilon_ab > 0:
        raise ValueError("epsilon_ab must be positive")
    rho = 1.0 if math.isinf(epsilon_ab) else epsilon_ab / (epsilon_ab + g.eta2)
    return -(2.0 * g.eta1 / p.L) * rho + delta_ab


def gamma_grid(loop, l_p_values, l_i_values, p, g, Q0=1000.0, epsilon=0.1, delta=1.0,
               norm="spectral") -> np.ndarray:
    """gamma_star over a (l_p, l_i) grid; NaN where A0 is not Hurwitz."""
    loop = Loop.parse(loop)
    out = np.full((len(l_p_values), len(l_i_values)), np.nan)
    fields = ("l_p_tau", "l_i_tau") if loop is Loop.OUTER else ("l_p_e", "l_i_e")
    for i, lp in enumerate(l_p_values):
        for j, li in enumerate(l_i_values):
            gg = type(g)(**{**g.__dict__, fields[0]: lp, fields[1]: li})
            try:
                out[i, j] = gamma_star(StabilityQuery(loop, Q0, epsilon, delta), p, gg, norm).gamma_star
            except (NotHurwitz, IllConditioned):
                pass
    return out


def error_dynamics_rhs(loop, d, disturbance_rate: float, p, g) -> np.ndarray:
    """Right-hand side of the nonlinear observer error dynamics."""
    A0, A1, Bv = error_matrices(loop, p, g)
    l_p, x_max = saturation_width(loop, g)
    A = A0 + d_mu(d[0], l_p, x_max) * A1
    return A @ d + Bv * disturbance_rate


def integrate_error_dynamics(loop, d0, disturbance_rate: Callable[[float], float],
                             t_end: float, dt: float, p, g,
                             stop: Optional[Callable[[float, np.ndarray], bool]] = None):
    """RK4 integration of :func:`error_dynamics_rhs`.

    Returns ``(t, d)`` arrays. When ``stop(t, d)`` becomes true integration
    ends early and the arrays end at that sample.
    """
    n = int(math.ceil(t_end / dt))
    A0, A1, Bv = error_matrices(loop, p, g)
    l_p, x_max = saturation_width(loop, g)

    def f(t, x):
        return (A0 + d_mu(x[0], l_p, x_max) * A1) @ x + Bv * disturbance_rate(t)

    ts = np.empty(n + 1)
    xs = np.empty((n + 1, 2))
    x = np.asarray(d0, dtype=float).copy()
    ts[0], xs[0] = 0.0, x
    for k in range(n):
        t = k * dt
        k1 = f(t, x)
        k2 = f(t + dt / 2, x + dt / 2 * k1)
        k3 = f(t + dt / 2, x + dt / 2 * k2)
        k4 = f(t + dt, x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ts[k + 1], xs[k + 1] = t + dt, x
        if stop is not None and stop(t + dt, x):
            return ts[: k + 2], xs[: k + 2]
    return ts, xs
