"""Exact solution-to-solution transforms of the shell system.

Three maps send solutions to solutions: negating the leading nonzero
component, discarding leading zero shells with a time rescale, and the
amplitude/time scaling X -> alpha * X(alpha t).  All three act exactly
on the stored dense-output record (the interpolation blocks transform
linearly), so no resampling error is introduced.
"""

from __future__ import annotations

from dataclasses import replace as _d_replace

import numpy as np

from .integrate import Trajectory
from .model import ModelParams

__all__ = ["transform_sign_flip", "transform_shift", "transform_scale"]


def _require_model(traj: Trajectory) -> ModelParams:
    if not isinstance(traj.model, ModelParams):
        raise TypeError("transforms are defined for shell-system trajectories")
    return traj.model


def _first_nonzero(x: np.ndarray) -> int:
    nz = np.flatnonzero(x)
    if nz.size == 0:
        raise ValueError("initial condition is identically zero")
    return int(nz[0]) + 1


def _rebuild(traj: Trajectory, model, ts, ys, qs, events) -> Trajectory:
    for arr in (ts, ys) + ((qs,) if qs is not None else ()):
        arr.setflags(write=False)
    return Trajectory(
        model=model,
        config=traj.config,
        ts=ts,
        ys=ys,
        qs=qs,
        events=events,
        stats=dict(traj.stats),
        sample_stride=traj.sample_stride,
    )


def transform_sign_flip(sol: Trajectory, nbar: int) -> Trajectory:
    """Negate component nbar (1-based) at every sample.

    Only legal when nbar is the first nonzero index of the initial
    condition; all lower shells are then identically zero and the
    flipped record solves the same truncated system.
    """
    p = _require_model(sol)
    if nbar != _first_nonzero(sol.ys[0]):
        raise ValueError(
            f"nbar = {nbar} is not the first nonzero index of the initial condition"
        )
    ys = sol.ys.copy()
    ys[:, nbar - 1] = -ys[:, nbar - 1]
    qs = None
    if sol.has_dense:
        qs = sol.qs.copy()
        qs[:, nbar - 1, :] = -qs[:, nbar - 1, :]
    return _rebuild(sol, p, sol.ts.copy(), ys, qs, sol.events)


def transform_shift(sol: Trajectory, nbar: int) -> Trajectory:
    """Drop shells below nbar and rescale time by k_{nbar-1}.

    The result Z_n(t) = X_{n+nbar-1}(t / k_{nbar-1}) is a trajectory of
    the (N - nbar + 1)-shell system with the same beta and closure.
    Requires nbar >= 2 and zero initial data below nbar.
    """
    p = _require_model(sol)
    if nbar < 2:
        raise ValueError("nbar must be >= 2 (k_0 = 0 admits no time rescale)")
    if nbar > p.n_max - 1:
        raise ValueError(f"nbar = {nbar} leaves fewer than two shells")
    if np.any(sol.ys[0, : nbar - 1] != 0.0):
        raise ValueError(f"initial condition has nonzero components below {nbar}")
    kbar = float(p.k[nbar - 1])
    new_p = ModelParams(beta=p.beta, n_max=p.n_max - nbar + 1, closure=p.closure)
    ts = sol.ts * kbar
    ys = np.ascontiguousarray(sol.ys[:, nbar - 1 :])
    qs = None
    if sol.has_dense:
        # theta is invariant under the time rescale; h' = kbar * h, so the
        # interpolation block scales by 1 / kbar.
        qs = np.ascontiguousarray(sol.qs[:, nbar - 1 :, :] / kbar)
    events = tuple((kind, tt * kbar) for kind, tt in sol.events)
    return _rebuild(sol, new_p, ts, ys, qs, events)


def transform_scale(sol: Trajectory, alpha: float) -> Trajectory:
    """Amplitude/time scaling W_n(t) = alpha * X_n(alpha t)."""
    p = _require_model(sol)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    ts = sol.ts / alpha
    ys = sol.ys * alpha
    qs = None
    if sol.has_dense:
        # h' = h / alpha and amplitudes gain a factor alpha.
        qs = sol.qs * alpha**2
    events = tuple((kind, tt / alpha) for kind, tt in sol.events)
    return _rebuild(sol, p, ts, ys, qs, events)
