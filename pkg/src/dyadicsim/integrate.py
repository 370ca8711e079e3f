"""Adaptive integration of truncated shell systems with dense output.

The primary method is an explicit Dormand-Prince 5(4) pair with a PI
step controller.  Explicit stability against the 2^(beta*n) tail is
enforced by capping the step with a Gershgorin bound on the Jacobian,
refreshed from the current state every step.  A stabilized explicit
fallback (Chebyshev family, second order) is available for truncations
where that cap starves progress.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .model import ModelParams, State

__all__ = [
    "Method",
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "detect_event",
    "residual_scan",
    "IntegrationError",
    "StepBudgetExceeded",
    "StiffnessFailure",
    "DenseStorageExceeded",
    "NonFiniteState",
]


class Method(enum.Enum):
    ERK45 = "erk45"
    ERK45_STABILIZED = "erk45_stabilized"


class IntegrationError(RuntimeError):
    """Base class for integration failures; carries the reached time."""

    def __init__(self, msg: str, t_reached: float, partial: "Trajectory | None" = None):
        super().__init__(msg)
        self.t_reached = t_reached
        self.partial = partial


class StepBudgetExceeded(IntegrationError):
    pass


class StiffnessFailure(IntegrationError):
    pass


class DenseStorageExceeded(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances, stability cap and storage policy for one integration.

    ``dense=True`` keeps every accepted step together with its quartic
    interpolation block (needed for events, occupation measures and the
    residual checks).  ``dense=False`` keeps a decimated (t, state)
    record bounded by ``max_samples``, for long decay runs where the
    dense record would not fit.
    """

    rtol: float = 1e-9
    atol: float = 1e-12
    h_init: Optional[float] = None
    cfl: float = 0.5
    h_max: Optional[float] = None
    max_steps: int = 20_000_000
    method: Method = Method.ERK45
    dense: bool = True
    max_samples: int = 400_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if not (0 < self.cfl <= 1):
            raise ValueError("cfl must lie in (0, 1]")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.max_samples < 4:
            raise ValueError("max_samples must be >= 4")
        if self.h_init is not None and self.h_init <= 0:
            raise ValueError("h_init must be positive when given")
        if self.h_max is not None and self.h_max <= 0:
            raise ValueError("h_max must be positive when given")

    def scaled(self, factor: float) -> "IntegratorConfig":
        """Copy with both tolerances multiplied by ``factor``."""
        if factor <= 0:
            raise ValueError("tolerance scale must be positive")
        return replace(self, rtol=self.rtol * factor, atol=self.atol * factor)


@dataclass(frozen=True)
class Trajectory:
    """Accepted integration record over [t0, t_end].

    ``ts``/``ys`` hold the stored samples.  With dense output, ``qs[i]``
    is the (N, 4) interpolation block of the step from ``ts[i]`` to
    ``ts[i+1]``: y(t) = ys[i] + h_i * qs[i] @ (theta, .., theta^4) with
    theta = (t - ts[i]) / h_i.
    """

    model: object
    config: IntegratorConfig
    ts: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    qs: Optional[np.ndarray] = field(repr=False, default=None)
    events: tuple = ()
    stats: dict = field(default_factory=dict, repr=False)
    sample_stride: int = 1

    @property
    def t0(self) -> float:
        return float(self.ts[0])

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    @property
    def n_max(self) -> int:
        return self.ys.shape[1]

    @property
    def has_dense(self) -> bool:
        return self.qs is not None

    def _locate(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx = np.searchsorted(self.ts, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.ts) - 2)
        h = self.ts[idx + 1] - self.ts[idx]
        theta = (t - self.ts[idx]) / h
        return idx, theta

    def dense_eval_many(self, t: Sequence[float] | np.ndarray) -> np.ndarray:
        """Interpolated states at the given times, shape (len(t), N)."""
        if not self.has_dense:
            raise ValueError("trajectory was stored without dense output")
        t = np.asarray(t, dtype=np.float64)
        if t.ndim != 1:
            raise ValueError("times must be one-dimensional")
        if t.size and (t.min() < self.t0 or t.max() > self.t_end):
            raise ValueError(
                f"requested times outside [{self.t0}, {self.t_end}]"
            )
        idx, theta = self._locate(t)
        powers = theta[:, None] ** np.arange(1, 5)[None, :]
        h = (self.ts[idx + 1] - self.ts[idx])[:, None]
        out = self.ys[idx] + h * np.einsum("tnc,tc->tn", self.qs[idx], powers)
        exact = np.searchsorted(self.ts, t)
        hit = (exact < len(self.ts)) & (self.ts[np.minimum(exact, len(self.ts) - 1)] == t)
        if np.any(hit):
            out[hit] = self.ys[exact[hit]]
        return out

    def dense_eval(self, t: float) -> State:
        """Interpolated state; exact samples are returned bit-for-bit."""
        return State(t=float(t), x=self.dense_eval_many(np.array([t]))[0])

    def derivative_eval_many(self, t: Sequence[float] | np.ndarray) -> np.ndarray:
        """Time derivative of the interpolant at the given times."""
        if not self.has_dense:
            raise ValueError("trajectory was stored without dense output")
        t = np.asarray(t, dtype=np.float64)
        idx, theta = self._locate(t)
        dpow = np.arange(1, 5)[None, :] * theta[:, None] ** np.arange(0, 4)[None, :]
        return np.einsum("tnc,tc->tn", self.qs[idx], dpow)

    def state(self, i: int) -> State:
        return State(t=float(self.ts[i]), x=self.ys[i])

    def final_state(self) -> State:
        return self.state(len(self.ts) - 1)

    def refined_times(self, per_step: int = 7) -> np.ndarray:
        """Sample times plus ``per_step`` interior points per interval."""
        if per_step < 1 or not self.has_dense:
            return self.ts
        frac = np.arange(1, per_step + 1) / (per_step + 1)
        interior = self.ts[:-1, None] + np.diff(self.ts)[:, None] * frac[None, :]
        return np.sort(np.concatenate([self.ts, interior.ravel()]))

    def energy_series(self) -> tuple[np.ndarray, np.ndarray]:
        return self.ts, np.einsum("ij,ij->i", self.ys, self.ys)


def _method_core(method: Method):
    if method is Method.ERK45:
        return _kernels.dp45_core
    return _kernels.rkc2_core


def integrate(
    p,
    cfg: IntegratorConfig,
    x0: Sequence[float] | np.ndarray,
    t_end: float,
    *,
    t0: float = 0.0,
    stop_energy_below: Optional[float] = None,
) -> Trajectory:
    """Integrate the truncated system from x0 over [t0, t_end].

    ``p`` is a ModelParams (or any object exposing ``system_arrays`` and
    ``n_max``, such as the rescaled system's parameters).  Raises
    StepBudgetExceeded / StiffnessFailure / DenseStorageExceeded with
    the reached time and the partial trajectory attached.
    """
    ca, cb, mirror = p.system_arrays()
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (p.n_max,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({p.n_max},)")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 contains non-finite entries")
    if not t_end > t0:
        raise ValueError(f"t_end ({t_end}) must exceed t0 ({t0})")

    cap = int(cfg.max_samples)
    n = p.n_max
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    if cfg.dense:
        qs = np.empty((cap, n, 4))
        hs = np.empty(cap)
    else:
        qs = np.empty((1, n, 4))
        hs = np.empty(1)

    core = _method_core(cfg.method)
    stop = -1.0 if stop_energy_below is None else float(stop_energy_below)
    h_init = 0.0 if cfg.h_init is None else float(cfg.h_init)
    h_max = np.inf if cfg.h_max is None else float(cfg.h_max)

    if cfg.method is Method.ERK45:
        res = core(
            ca, cb, mirror, x0, float(t0), float(t_end),
            cfg.rtol, cfg.atol, h_init, cfg.cfl, h_max,
            cfg.max_steps, 1 if cfg.dense else 0, stop, ts, ys, qs, hs,
        )
    else:
        res = core(
            ca, cb, mirror, x0, float(t0), float(t_end),
            cfg.rtol, cfg.atol, h_init, h_max,
            cfg.max_steps, 1 if cfg.dense else 0, stop, ts, ys, qs, hs,
        )
    n_samp, stride, n_att, n_acc, n_rej, n_rhs, status, t_reached = res

    events = ()
    if status == _kernels.STATUS_ENERGY_STOP:
        events = (("energy_threshold", float(t_reached)),)

    traj = Trajectory(
        model=p,
        config=cfg,
        ts=ts[:n_samp].copy(),
        ys=ys[:n_samp].copy(),
        qs=qs[: n_samp - 1].copy() if cfg.dense else None,
        events=events,
        stats={
            "n_attempted": int(n_att),
            "n_accepted": int(n_acc),
            "n_rejected": int(n_rej),
            "n_rhs": int(n_rhs),
            "status": int(status),
        },
        sample_stride=int(stride),
    )
    for arr in (traj.ts, traj.ys) + ((traj.qs,) if cfg.dense else ()):
        arr.setflags(write=False)

    if status == _kernels.STATUS_BUDGET:
        raise StepBudgetExceeded(
            f"step budget {cfg.max_steps} exhausted at t = {t_reached:.6g} "
            f"(target {t_end:.6g})",
            t_reached,
            traj,
        )
    if status == _kernels.STATUS_UNDERFLOW:
        raise StiffnessFailure(
            f"step size underflow at t = {t_reached:.6g}; the truncation is "
            "too stiff for the explicit pair - reduce n_max or switch to "
            "Method.ERK45_STABILIZED",
            t_reached,
            traj,
        )
    if status == _kernels.STATUS_STORAGE:
        raise DenseStorageExceeded(
            f"dense sample storage ({cfg.max_samples}) exhausted at "
            f"t = {t_reached:.6g}; raise max_samples or use dense=False",
            t_reached,
            traj,
        )
    if status == _kernels.STATUS_NONFINITE:
        raise NonFiniteState(
            f"state left the finite range at t = {t_reached:.6g}", t_reached, traj
        )
    return traj


def _bisect_crossing(
    traj: Trajectory,
    fn: Callable[[np.ndarray], float],
    lo: float,
    hi: float,
    rel_width: float,
) -> float:
    """Refine a bracketed sign change of fn(x(t)) (negative at lo)."""
    while hi - lo > rel_width * max(abs(hi), 1e-300):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fn(traj.dense_eval_many(np.array([mid]))[0]) >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def detect_event(
    traj: Trajectory,
    fn: Callable[[np.ndarray], float],
    *,
    scan_per_step: int = 7,
    rel_width: float = 1e-10,
) -> Optional[float]:
    """Earliest time at which the scalar functional becomes nonnegative.

    ``fn`` maps a state vector to a real; the event is the first time
    fn(X(t)) >= 0.  Sign changes are bracketed on the accepted grid plus
    interior dense samples and refined by bisection to the requested
    relative width.  Returns None when the event never occurs.
    """
    times = traj.refined_times(scan_per_step)
    vals = np.apply_along_axis(fn, 1, traj.dense_eval_many(times))
    nonneg = vals >= 0.0
    if nonneg[0]:
        return traj.t0
    hits = np.flatnonzero(nonneg)
    if hits.size == 0:
        return None
    j = hits[0]
    return float(_bisect_crossing(traj, fn, times[j - 1], times[j], rel_width))


def residual_scan(traj: Trajectory, p=None, points_per_step: int = 3) -> float:
    """Worst scaled defect of the dense output against the vector field.

    At interior points of every step the interpolant's derivative is
    compared with the field evaluated on the interpolant.  The defect
    is measured against the integrator's per-step error contract
    rtol ||y|| + atol:

        metric(t) = ||y'(t) - F(y(t))|| * h / (rtol ||y(t)|| + atol),

    so a healthy trajectory scores O(1) and the acceptance threshold
    of 10x the integrator tolerance is simply 10.
    """
    model = p if p is not None else traj.model
    ca, cb, mirror = model.system_arrays()
    if not traj.has_dense:
        raise ValueError("residual scan needs a dense trajectory")
    frac = np.arange(1, points_per_step + 1) / (points_per_step + 1.0)
    h = np.diff(traj.ts)
    times = (traj.ts[:-1, None] + h[:, None] * frac[None, :]).ravel()
    states = traj.dense_eval_many(times)
    derivs = traj.derivative_eval_many(times)
    fields = np.empty_like(states)
    out = np.empty(states.shape[1])
    for i in range(states.shape[0]):
        _kernels.shell_rhs(ca, cb, mirror, states[i], out)
        fields[i] = out
    defect = np.linalg.norm(derivs - fields, axis=1) * np.repeat(h, points_per_step)
    allowance = traj.config.rtol * np.linalg.norm(states, axis=1) + traj.config.atol
    metric = defect / allowance
    return float(metric.max()) if metric.size else 0.0
