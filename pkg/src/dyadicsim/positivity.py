"""Finite-time positivization: waiting times, schedules, measured tau.

A solution with x_1 > 0 sheds its negative components in finite time.
The machinery here builds the explicit waiting-time schedule that
upper-bounds the positivization time for finite-energy data (the
branch where the running energy constant eta_n is just ||x||^2), and
measures the actual positivization time on an integrated trajectory.

The schedule's constant C enters through a_n = C * k_n^(-(1-delta)/3);
the admissible range of C depends on an unexhibited constant, so the
resulting tau_bound is reported as conditional on the chosen C and is
never asserted against the measured tau.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .integrate import Trajectory, _bisect_crossing
from .model import ModelParams

__all__ = [
    "GammaUndefined",
    "PositivitySchedule",
    "waiting_time",
    "build_schedule",
    "measure_tau",
]


class GammaUndefined(ValueError):
    """eps * sum(a_n) reaches x_1^2: no positive retention level exists."""


def waiting_time(p: ModelParams, eta_n: float, a: float, n: int) -> float:
    """Time for shell n+1 to turn nonnegative once X_n stays above a.

    Returns (2^(2 beta) eta_n^2 + a^4) / (k_{n+1} a^4 sqrt(eta_n)).
    """
    if not a > 0:
        raise ValueError(f"level a must be positive, got {a}")
    if not eta_n > 0:
        raise ValueError(f"eta must be positive, got {eta_n}")
    if not 1 <= n <= p.n_max:
        raise IndexError(f"shell index {n} outside 1..{p.n_max}")
    a4 = a**4
    return float((2.0 ** (2 * p.beta) * eta_n**2 + a4) / (p.k[n + 1] * a4 * np.sqrt(eta_n)))


@dataclass(frozen=True)
class PositivitySchedule:
    """Waiting-time schedule for one initial condition.

    omega/eta/v/s/a_seq are the per-shell sequences (1-based shell n at
    array index n-1); tau_bound is the conditional upper estimate of
    the positivization time, including the initial wait for shell 2.
    """

    params: ModelParams
    a_level: float
    C: float
    delta: float
    eps: float
    omega: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    s: np.ndarray = field(repr=False)
    a_seq: np.ndarray = field(repr=False)
    gamma: float = 0.0
    tau_bound: float = np.inf


def build_schedule(
    p: ModelParams,
    x0: np.ndarray,
    a: float,
    C: float = 1.0,
    delta: float = 1.0 / 12.0,
    eps: float = 0.1,
) -> PositivitySchedule:
    """Populate the waiting-time schedule for finite-energy data.

    Requires x0_1 > 0.  eta_n is taken as ||x0||^2 for every n (the
    finite-energy branch); gamma = sqrt(x_1^2 - eps * sum a_i) with the
    a-series summed in closed form, and

        tau_bound = v_1(x_1) + sum_n [eps^-2 s_n + v_{n+1}(gamma)].
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (p.n_max,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({p.n_max},)")
    if not x0[0] > 0:
        raise ValueError("schedule requires x0_1 > 0")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if not a > 0:
        raise ValueError(f"level a must be positive, got {a}")

    N = p.n_max
    x1 = float(x0[0])
    norm2 = float(np.dot(x0, x0))

    omega = np.empty(N, dtype=np.int64)
    for n in range(1, N + 1):
        w = N
        for i in range(n, N):
            if x0[i] >= 0.0:  # x_{i+1} in 1-based terms
                w = i
                break
        omega[n - 1] = w
    eta = np.full(N, norm2)

    kn = p.k[1 : N + 1]
    decay = kn ** (-(1.0 - delta) / 3.0)
    s = (2.0 ** (1.0 + p.beta) / x1) * decay
    a_seq = C * decay

    # Infinite geometric tails: a_n and s_n both decay like q^n.
    q = 2.0 ** (-p.beta * (1.0 - delta) / 3.0)
    a_total = C * q / (1.0 - q)
    s_total = (2.0 ** (1.0 + p.beta) / x1) * q / (1.0 - q)

    radicand = x1**2 - eps * a_total
    if radicand <= 0:
        raise GammaUndefined(
            f"eps * sum(a_n) = {eps * a_total:.6g} >= x_1^2 = {x1**2:.6g}; "
            "reduce eps or C"
        )
    gamma = float(np.sqrt(radicand))

    v = np.array([waiting_time(p, norm2, a, n) for n in range(1, N + 1)])

    # sum_{n>=1} v_{n+1}(gamma) = coeff * sum_{j>=3} 2^(-beta j), eta constant.
    g4 = gamma**4
    coeff = (2.0 ** (2 * p.beta) * norm2**2 + g4) / (g4 * np.sqrt(norm2))
    r = 2.0**-p.beta
    v_tail = coeff * r**3 / (1.0 - r)
    tau_bound = waiting_time(p, norm2, x1, 1) + s_total / eps**2 + v_tail

    return PositivitySchedule(
        params=p,
        a_level=a,
        C=C,
        delta=delta,
        eps=eps,
        omega=omega,
        eta=eta,
        v=v,
        s=s,
        a_seq=a_seq,
        gamma=gamma,
        tau_bound=float(tau_bound),
    )


def measure_tau(
    traj: Trajectory,
    *,
    floor: Optional[float] = None,
    scan_per_step: int = 7,
) -> Optional[float]:
    """Observed positivization time of an integrated trajectory.

    Returns the earliest time after which min_n X_n stays above the
    floor (default -1e-10 * ||x0||, the numerical zero of the
    positivity invariant) at every scanned instant; 0.0 when the
    record is nonnegative throughout, None when negativity persists to
    the end of the horizon.
    """
    if floor is None:
        floor = -1e-10 * float(np.linalg.norm(traj.ys[0]))
    if traj.has_dense:
        times = traj.refined_times(scan_per_step)
        vals = traj.dense_eval_many(times).min(axis=1) - floor
    else:
        times = traj.ts
        vals = traj.ys.min(axis=1) - floor
    below = vals < 0.0
    if not below.any():
        return 0.0
    last = int(np.flatnonzero(below)[-1])
    if last == len(times) - 1:
        return None
    if not traj.has_dense:
        return float(times[last + 1])
    g = lambda x: float(x.min() - floor)
    return float(_bisect_crossing(traj, g, times[last], times[last + 1], 1e-10))
