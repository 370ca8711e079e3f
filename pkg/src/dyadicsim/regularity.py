"""Occupation measures, weighted sup functionals, cube integrals, gaps.

Everything here is read-only analysis of integrated trajectories:

* occupation of threshold profiles {t : X_n(t) > a_n for some n},
  measured by interval accumulation on the dense output and compared
  against the 2^(7+beta) ||x||^2 sum bound;
* per-shell occupation {t : X_n(t) > M} against the 2^(8+beta)
  constant;
* weighted sup functionals sup_n w_n X_n for the log-corrected,
  critical and supercritical weight families;
* the integral of X_n^3 (and the energy-balance companion
  X_n^2 X_{n+1}) against its closed-form bound;
* the weighted gap psi_N between two trajectories of the same model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .integrate import Trajectory, _bisect_crossing
from .model import Closure, ModelParams

__all__ = [
    "OccupationQuery",
    "OccupationResult",
    "OccupationScan",
    "occupation_measure",
    "component_occupation",
    "AlphaLog",
    "BetaCritical",
    "EpsSuper",
    "sup_weights",
    "sup_functional",
    "CubeIntegralResult",
    "cube_integral_check",
    "psi_gap",
    "psi_series",
]


# --------------------------------------------------------------------------
# occupation measures


@dataclass(frozen=True)
class OccupationQuery:
    """Threshold profile a_1 >= a_2 >= ... > 0 and a horizon T."""

    a_seq: np.ndarray
    horizon: float

    def __post_init__(self):
        a = np.asarray(self.a_seq, dtype=np.float64)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("a_seq must be a nonempty vector")
        if not np.all(a > 0):
            raise ValueError("a_seq must be strictly positive")
        if np.any(np.diff(a) > 0):
            raise ValueError("a_seq must be nonincreasing")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "a_seq", a)


@dataclass(frozen=True)
class OccupationResult:
    measured: float
    bound: float
    horizon: float
    intervals: tuple = field(repr=False, default=())

    @property
    def satisfied(self) -> bool:
        """Theorem contract with slack for dense-output error."""
        return self.measured <= self.bound + 1e-6 * self.horizon


def _component_intervals(
    traj: Trajectory,
    comp: int,
    threshold: float,
    times: np.ndarray,
    vals: np.ndarray,
    T: float,
) -> list[tuple[float, float]]:
    """Maximal intervals of {t <= T : vals(t) > threshold} on the scan grid,
    boundaries refined by bisection on the dense output."""
    g = vals - threshold
    pos = g > 0.0

    def up(lo, hi):  # crossing into the exceedance set
        f = lambda x: float(x[comp] - threshold)
        return _bisect_crossing(traj, f, lo, hi, 1e-12)

    def down(lo, hi):  # crossing out of it
        f = lambda x: float(threshold - x[comp])
        return _bisect_crossing(traj, f, lo, hi, 1e-12)

    out: list[tuple[float, float]] = []
    start: Optional[float] = None
    for i in range(len(times)):
        if pos[i] and start is None:
            start = times[0] if i == 0 else up(times[i - 1], times[i])
        elif not pos[i] and start is not None:
            out.append((start, down(times[i - 1], times[i])))
            start = None
    if start is not None:
        out.append((start, T))
    return out


def _merge_measure(intervals: list[tuple[float, float]]) -> tuple[float, tuple]:
    if not intervals:
        return 0.0, ()
    intervals.sort()
    merged = [list(intervals[0])]
    for lo, hi in intervals[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    total = sum(hi - lo for lo, hi in merged)
    return float(total), tuple((float(a), float(b)) for a, b in merged)


class OccupationScan:
    """Reusable dense scan of one trajectory up to a horizon.

    Building the refined grid and evaluating the dense output dominates
    the cost of an occupation query; this object does it once so many
    threshold queries (profiles and per-shell constants) share it.
    """

    def __init__(self, traj: Trajectory, T: Optional[float] = None, scan_per_step: int = 7):
        if not traj.has_dense:
            raise ValueError("occupation measurement needs a dense trajectory")
        T = traj.t_end if T is None else float(T)
        if T > traj.t_end * (1 + 1e-12):
            raise ValueError(f"horizon {T} exceeds trajectory span {traj.t_end}")
        times = traj.refined_times(scan_per_step)
        times = times[times <= T]
        if times[-1] < T:
            times = np.append(times, T)
        self.traj = traj
        self.horizon = T
        self.times = times
        self.X = traj.dense_eval_many(times)

    def component_intervals(self, n: int, threshold: float):
        return _component_intervals(
            self.traj, n - 1, float(threshold), self.times, self.X[:, n - 1], self.horizon
        )

    def profile_measure(self, q: OccupationQuery) -> OccupationResult:
        p: ModelParams = self.traj.model
        if q.a_seq.shape != (p.n_max,):
            raise ValueError(
                f"a_seq has length {q.a_seq.size}, model expects {p.n_max}"
            )
        if np.any(self.traj.ys[0] < 0):
            raise ValueError("occupation bound requires nonnegative initial data")
        if q.horizon > self.horizon * (1 + 1e-12):
            raise ValueError("query horizon exceeds the scanned horizon")
        pieces: list[tuple[float, float]] = []
        for n in range(1, p.n_max + 1):
            pieces.extend(self.component_intervals(n, q.a_seq[n - 1]))
        measured, merged = _merge_measure(pieces)
        norm2 = float(np.dot(self.traj.ys[0], self.traj.ys[0]))
        bound = 2.0 ** (7 + p.beta) * norm2 * float(
            np.sum(1.0 / (p.k[1 : p.n_max + 1] * q.a_seq**3))
        )
        return OccupationResult(
            measured=measured, bound=float(bound), horizon=q.horizon, intervals=merged
        )

    def component_measure(self, n: int, M: float) -> OccupationResult:
        p: ModelParams = self.traj.model
        if not 1 <= n <= p.n_max:
            raise IndexError(f"shell index {n} outside 1..{p.n_max}")
        if not M > 0:
            raise ValueError("threshold M must be positive")
        measured, merged = _merge_measure(self.component_intervals(n, M))
        norm2 = float(np.dot(self.traj.ys[0], self.traj.ys[0]))
        bound = 2.0 ** (8 + p.beta) * norm2 / (float(p.k[n]) * M**3)
        return OccupationResult(
            measured=measured, bound=float(bound), horizon=self.horizon, intervals=merged
        )


def occupation_measure(
    traj: Trajectory,
    q: OccupationQuery,
    *,
    scan_per_step: int = 7,
) -> OccupationResult:
    """Lebesgue measure of {t in (0, T] : X_n(t) > a_n for some n}
    together with its theorem bound 2^(7+beta) ||x0||^2 sum 1/(k_n a_n^3).

    The trajectory must start from nonnegative data (the hypothesis of
    the bound).  A measured value exceeding the bound beyond numerical
    slack indicates an integrator bug, not a sharpness failure.
    """
    return OccupationScan(traj, q.horizon, scan_per_step).profile_measure(q)


def component_occupation(
    traj: Trajectory,
    n: int,
    M: float,
    T: Optional[float] = None,
    *,
    scan_per_step: int = 7,
) -> OccupationResult:
    """Per-shell occupation {t <= T : X_n(t) > M} against the
    2^(8+beta) ||x0||^2 / (k_n M^3) bound."""
    return OccupationScan(traj, T, scan_per_step).component_measure(n, M)


# --------------------------------------------------------------------------
# weighted sup functionals


@dataclass(frozen=True)
class AlphaLog:
    """w_n = n^(-alpha) k_n^(1/3)."""

    alpha: float


@dataclass(frozen=True)
class BetaCritical:
    """w_n = k_n^(1/3 - 1/(3 beta)) = 2^((beta-1) n / 3)."""


@dataclass(frozen=True)
class EpsSuper:
    """w_n = k_n^(1/3 + eps); finite only before blow-up."""

    eps: float


Weight = Union[AlphaLog, BetaCritical, EpsSuper]


def sup_weights(p: ModelParams, weight: Weight) -> np.ndarray:
    n = np.arange(1, p.n_max + 1, dtype=np.float64)
    kn = p.k[1 : p.n_max + 1]
    if isinstance(weight, AlphaLog):
        return n ** (-weight.alpha) * kn ** (1.0 / 3.0)
    if isinstance(weight, BetaCritical):
        return kn ** (1.0 / 3.0 - 1.0 / (3.0 * p.beta))
    if isinstance(weight, EpsSuper):
        return kn ** (1.0 / 3.0 + weight.eps)
    raise TypeError(f"unknown weight family: {weight!r}")


def sup_functional(p: ModelParams, s, weight: Weight) -> tuple[float, int]:
    """max_n w_n X_n and the first shell achieving it (1-based)."""
    x = np.asarray(s.x if hasattr(s, "x") else s, dtype=np.float64)
    vals = sup_weights(p, weight) * x
    i = int(np.argmax(vals))
    return float(vals[i]), i + 1


# --------------------------------------------------------------------------
# cube integrals


@dataclass(frozen=True)
class CubeIntegralResult:
    n: int
    horizon: float
    integral: float
    bound: float
    hypothesis_ok: bool
    companion: float
    companion_bound: float
    cbeta: float

    @property
    def satisfied(self) -> Optional[bool]:
        """None when the bound's hypothesis fails (no claim made)."""
        if not self.hypothesis_ok:
            return None
        return self.integral <= self.bound and self.companion <= self.companion_bound


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(7)


def _dense_integrate(traj: Trajectory, T: float, f) -> float:
    """Integral of f(states) over [t0, T]; 7-point Gauss per step is exact
    for polynomials of the dense output up to degree 13 (a cubed quartic
    has degree 12)."""
    if not traj.has_dense:
        raise ValueError("cube integrals need a dense trajectory")
    ts = traj.ts
    j_end = int(np.searchsorted(ts, T, side="left"))
    nodes = []
    weights = []
    for j in range(max(j_end, 1)):
        lo = ts[j]
        hi = min(ts[j + 1], T) if j + 1 < len(ts) else T
        if hi <= lo:
            continue
        half = 0.5 * (hi - lo)
        nodes.append(lo + half * (_GAUSS_X + 1.0))
        weights.append(half * _GAUSS_W)
    if not nodes:
        return 0.0
    tq = np.concatenate(nodes)
    wq = np.concatenate(weights)
    vals = f(traj.dense_eval_many(tq))
    return float(np.dot(wq, vals))


def cube_integral_check(
    traj: Trajectory,
    n: int,
    T: float,
    *,
    cbeta: Optional[float] = None,
) -> CubeIntegralResult:
    """integral_0^T X_n^3 dt against its logarithmic bound, plus the
    energy-balance companion integral_0^T X_n^2 X_{n+1} dt <= ||x||^2/k_n.

    The bound constant defaults to 2^(8+beta), the value produced by the
    per-shell occupation estimate.  When the hypothesis k_n T > c/||x||
    fails the result is marked and no claim is attached.
    """
    p: ModelParams = traj.model
    if not 1 <= n <= p.n_max:
        raise IndexError(f"shell index {n} outside 1..{p.n_max}")
    if np.any(traj.ys[0] < 0):
        raise ValueError("cube bound requires nonnegative initial data")
    if T > traj.t_end * (1 + 1e-12):
        raise ValueError(f"horizon {T} exceeds trajectory span {traj.t_end}")
    c = 2.0 ** (8.0 + p.beta) if cbeta is None else float(cbeta)
    norm = float(np.linalg.norm(traj.ys[0]))
    kn = float(p.k[n])
    hypothesis_ok = kn * T > c / norm if norm > 0 else False

    integral = _dense_integrate(traj, T, lambda X: X[:, n - 1] ** 3)
    if n < p.n_max:
        comp = _dense_integrate(
            traj, T, lambda X: X[:, n - 1] ** 2 * X[:, n]
        )
    elif p.closure is Closure.MIRROR:
        comp = integral
    else:
        comp = 0.0

    bound = np.inf
    if hypothesis_ok:
        bound = (c * norm**2 / kn) * (
            1.0 + np.log(norm * T / c) + n * p.beta * np.log(2.0)
        )
    return CubeIntegralResult(
        n=n,
        horizon=float(T),
        integral=integral,
        bound=float(bound),
        hypothesis_ok=hypothesis_ok,
        companion=comp,
        companion_bound=norm**2 / kn,
        cbeta=c,
    )


# --------------------------------------------------------------------------
# uniqueness gap


def _check_pair(a: Trajectory, b: Trajectory) -> int:
    pa, pb = a.model, b.model
    if pa.beta != pb.beta or pa.n_max != pb.n_max:
        raise ValueError("trajectories come from different models")
    if not np.array_equal(a.ys[0], b.ys[0]):
        raise ValueError("trajectories start from different initial conditions")
    return pa.n_max


def psi_series(a: Trajectory, b: Trajectory, ts) -> np.ndarray:
    """psi_N(t) = sum_n (B_n - A_n)^2 / 2^n along the given times."""
    N = _check_pair(a, b)
    ts = np.asarray(ts, dtype=np.float64)
    Z = b.dense_eval_many(ts) - a.dense_eval_many(ts)
    w = 0.5 ** np.arange(1, N + 1)
    return (Z * Z) @ w


def psi_gap(a: Trajectory, b: Trajectory, t: float) -> float:
    """Weighted squared gap between two runs of the same model at t."""
    return float(psi_series(a, b, np.array([float(t)]))[0])
