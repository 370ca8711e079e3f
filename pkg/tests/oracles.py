"""Independent reference implementations used only by the tests.

Nothing here imports integration code from the package: the RHS and
the fixed-step classical RK4 below are written from the defining
equations so oracle agreement is meaningful.
"""

from __future__ import annotations

import numpy as np


def reference_rhs(beta: float, mirror: bool, x: np.ndarray) -> np.ndarray:
    """dX_n/dt = k_{n-1} X_{n-1}^2 - k_n X_n X_{n+1}, straight from the
    definition with k_n = 2^(beta n), k_0 = 0."""
    N = len(x)
    f = np.zeros(N)
    for n in range(1, N + 1):  # 1-based shell index
        km1 = 0.0 if n == 1 else 2.0 ** (beta * (n - 1))
        kn = 2.0 ** (beta * n)
        prev = x[n - 2] if n >= 2 else 0.0
        if n < N:
            nxt = x[n]
        else:
            nxt = x[N - 1] if mirror else 0.0
        f[n - 1] = km1 * prev * prev - kn * x[n - 1] * nxt
    return f


def rk4_reference(
    beta: float,
    mirror: bool,
    x0: np.ndarray,
    t_end: float,
    h: float,
    t0: float = 0.0,
) -> np.ndarray:
    """Classical fixed-step fourth-order Runge-Kutta endpoint state."""
    x = np.array(x0, dtype=np.float64)
    n_steps = int(round((t_end - t0) / h))
    if abs(t0 + n_steps * h - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError("t_end must be an integer number of steps away")
    for _ in range(n_steps):
        k1 = reference_rhs(beta, mirror, x)
        k2 = reference_rhs(beta, mirror, x + 0.5 * h * k1)
        k3 = reference_rhs(beta, mirror, x + 0.5 * h * k2)
        k4 = reference_rhs(beta, mirror, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def rk4_reference_fast(
    beta: float, mirror: bool, x0: np.ndarray, t_end: float, h: float
) -> np.ndarray:
    """Vectorized variant of rk4_reference for long reference runs.

    Same classical scheme, with the right-hand side written with array
    shifts instead of an index loop; cross-checked against the looped
    version in the test suite before use.
    """
    N = len(x0)
    n_idx = np.arange(1, N + 1, dtype=np.float64)
    kn = 2.0 ** (beta * n_idx)
    km1 = np.concatenate(([0.0], kn[:-1]))

    def rhs(x):
        prev = np.concatenate(([0.0], x[:-1]))
        nxt = np.concatenate((x[1:], [x[-1] if mirror else 0.0]))
        return km1 * prev * prev - kn * x * nxt

    x = np.array(x0, dtype=np.float64)
    n_steps = int(round(t_end / h))
    for _ in range(n_steps):
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h * k2)
        k4 = rhs(x + h * k3)
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def trapezoid_scan_integral(traj, fn, T: float, n_points: int = 1_000_001) -> float:
    """Trapezoid rule on a uniform dense scan; used against the
    per-step quadrature."""
    ts = np.linspace(traj.t0, T, n_points)
    vals = fn(traj.dense_eval_many(ts))
    return float(np.trapezoid(vals, ts))


def scan_occupation(traj, a_seq: np.ndarray, T: float, n_points: int = 1_000_001) -> float:
    """Occupation measure by uniform 1e6-point indicator scan."""
    ts = np.linspace(traj.t0, T, n_points)
    X = traj.dense_eval_many(ts)
    exceed = (X > np.asarray(a_seq)[None, :]).any(axis=1)
    return float(exceed.mean() * (T - traj.t0))


def scan_first_nonneg(traj, fn, n_points: int = 1_000_000) -> float | None:
    """First time fn(X(t)) >= 0 on a uniform scan."""
    ts = np.linspace(traj.t0, traj.t_end, n_points)
    X = traj.dense_eval_many(ts)
    vals = np.array([fn(row) for row in X])
    hits = np.flatnonzero(vals >= 0)
    return float(ts[hits[0]]) if hits.size else None
