"""Dyadic shell cascade: parameters, states, energy functionals.

The finite system integrated here keeps shells 1..N of

    dX_n/dt = k_{n-1} X_{n-1}^2 - k_n X_n X_{n+1},      k_n = 2^(beta*n),

with X_0 = 0 and the missing top neighbour X_{N+1} supplied by a closure
rule: either zero (conservative Galerkin cut) or a mirror copy of X_N
(which turns the truncation boundary into an energy sink).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Closure",
    "ModelParams",
    "State",
    "EnergyProfile",
    "vector_field",
    "energy_profile",
    "energy_derivative",
]


class Closure(enum.Enum):
    """Rule supplying X_{N+1} for the truncated system."""

    GALERKIN_ZERO = "galerkin_zero"
    MIRROR = "mirror"

    @property
    def flag(self) -> int:
        return 1 if self is Closure.MIRROR else 0


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelParams:
    """Truncation of the shell system: growth exponent, size, closure.

    The coefficient sequence k_0 = 0, k_n = 2^(beta*n) for 1 <= n <= N+1
    is precomputed once and shared by everything downstream; it is exact
    in floating point whenever beta*n is integral.
    """

    beta: float
    n_max: int
    closure: Closure = Closure.MIRROR

    def __post_init__(self):
        if not (self.beta > 0):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.n_max < 2:
            raise ValueError(f"n_max must be >= 2, got {self.n_max}")
        if not isinstance(self.closure, Closure):
            raise TypeError("closure must be a Closure enum member")

    @property
    def k(self) -> np.ndarray:
        """Coefficients k_0..k_{N+1}; k[0] == 0."""
        cached = self.__dict__.get("_k")
        if cached is None:
            n = np.arange(self.n_max + 2, dtype=np.float64)
            k = np.exp2(self.beta * n)
            k[0] = 0.0
            cached = _readonly(k)
            self.__dict__["_k"] = cached
        return cached

    def system_arrays(self) -> tuple[np.ndarray, np.ndarray, int]:
        """Kernel-facing coefficient view: (a, b, mirror_flag).

        Row n of the field is a[n]*X_{n-1}^2 - b[n]*X_n*X_{n+1} in 0-based
        array terms, so a = k_0..k_{N-1} and b = k_1..k_N.
        """
        cached = self.__dict__.get("_sys")
        if cached is None:
            k = self.k
            cached = (
                _readonly(k[: self.n_max].copy()),
                _readonly(k[1 : self.n_max + 1].copy()),
                self.closure.flag,
            )
            self.__dict__["_sys"] = cached
        return cached


@dataclass(frozen=True)
class State:
    """One snapshot of the truncated system: time plus shell amplitudes."""

    t: float
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("state vector must be one-dimensional")
        if not np.all(np.isfinite(x)):
            raise ValueError("state vector contains non-finite entries")
        if self.t < 0 or not np.isfinite(self.t):
            raise ValueError(f"time must be a finite nonnegative real, got {self.t}")
        object.__setattr__(self, "x", _readonly(x.copy()))

    @property
    def n_max(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class EnergyProfile:
    """Block energies E_n = sum_{i<=n} X_i^2 and the total E_N."""

    E: np.ndarray = field(repr=False)
    total: float = 0.0


def _closure_value(p: ModelParams, x: np.ndarray) -> float:
    return float(x[-1]) if p.closure is Closure.MIRROR else 0.0


def _check_dim(p: ModelParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.n_max,):
        raise ValueError(
            f"state has length {x.shape}, model expects ({p.n_max},)"
        )
    return x


def vector_field(p: ModelParams, s: State | np.ndarray) -> np.ndarray:
    """Right-hand side of the truncated system at a state.

    Returns F with F_n = k_{n-1} X_{n-1}^2 - k_n X_n X~_{n+1}, where the
    top neighbour X~_{N+1} is 0 or X_N depending on ``p.closure``.
    """
    x = _check_dim(p, s.x if isinstance(s, State) else s)
    k = p.k
    n = p.n_max
    xn = np.empty(n)
    xn[:-1] = x[1:]
    xn[-1] = _closure_value(p, x)
    f = np.empty(n)
    f[0] = 0.0
    f[1:] = k[1:n] * x[:-1] ** 2
    f -= k[1 : n + 1] * x * xn
    return f


def energy_profile(s: State | np.ndarray) -> EnergyProfile:
    """Partial sums E_n = X_1^2 + ... + X_n^2, summed left to right."""
    x = np.asarray(s.x if isinstance(s, State) else s, dtype=np.float64)
    e = np.cumsum(x * x)
    return EnergyProfile(E=_readonly(e), total=float(e[-1]))


def energy_derivative(p: ModelParams, s: State | np.ndarray, n: int) -> float:
    """Exact time derivative of the block energy E_n: -2 k_n X_n^2 X~_{n+1}.

    ``n`` is the 1-based shell index; n = N uses the closure value for the
    missing neighbour.
    """
    x = _check_dim(p, s.x if isinstance(s, State) else s)
    if not 1 <= n <= p.n_max:
        raise IndexError(f"shell index {n} outside 1..{p.n_max}")
    xnp1 = x[n] if n < p.n_max else _closure_value(p, x)
    return float(-2.0 * p.k[n] * x[n - 1] ** 2 * xnp1)
