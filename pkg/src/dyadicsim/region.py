"""Invariant region of the rescaled system and its certified boundary.

Rescaling the shells by the critical weights 2^((beta-1)n/3) turns the
cascade into

    dY_n/dt = 2^(((2 beta + 1) n - (beta + 2)) / 3) (Y_{n-1}^2 - 2 Y_n Y_{n+1})

with mirror closure at the top.  For suitable boundary curves g(x) =
m x + theta and h(x) = c ((x - delta)/(1 - delta))^3 the planar region
A = {(x, y) in [0,1]^2 : h(x) <= y <= g(x)} traps every consecutive
pair of shells; the proof reduces to four univariate polynomials having
a definite sign on an interval, which is certified here by exact
rational construction plus a Lipschitz-padded grid scan.

The trapped region gives uniform-in-time control: the critical weighted
sup never exceeds 12x its initial value, and decays like t^(-1/3).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import ratpoly as rp
from .integrate import IntegratorConfig, Trajectory, integrate
from .model import ModelParams
from .regularity import BetaCritical, sup_weights

__all__ = [
    "RegionParams",
    "ControlPolynomials",
    "Verdict",
    "PolyCertificate",
    "CertificateReport",
    "YParams",
    "y_vector_field",
    "critical_rescale",
    "build_polynomials",
    "certify_signs",
    "Membership",
    "region_membership",
    "sample_in_region",
    "InvarianceReport",
    "check_invariance",
    "DecayReport",
    "decay_bounds_check",
    "REGION_TOL",
]

REGION_TOL = 1e-8  # boundary sliding allowance for invariance checks


@dataclass(frozen=True)
class RegionParams:
    """Boundary data (delta, c, theta, m) of the planar region A.

    Stored exactly as rationals so the control polynomials can be
    expanded without round-off.  Defaults are the certified values.
    """

    delta: Fraction = Fraction(1, 12)
    c: Fraction = Fraction(1, 2)
    theta: Fraction = Fraction(1, 2)
    m: Fraction = Fraction(4, 5)

    def __post_init__(self):
        for name in ("delta", "c", "theta", "m"):
            v = rp.as_fraction(getattr(self, name))
            object.__setattr__(self, name, v)
            if not 0 < v < 1:
                # c = 0 is an admissible degeneracy: h vanishes identically
                if name == "c" and v == 0:
                    continue
                raise ValueError(f"{name} must lie in (0, 1), got {v}")

    @property
    def h_poly(self) -> rp.Poly:
        u = rp.poly(-self.delta / (1 - self.delta), Fraction(1) / (1 - self.delta))
        return rp.pscale(rp.pmul(rp.pmul(u, u), u), self.c)

    @property
    def g_poly(self) -> rp.Poly:
        return rp.poly(self.theta, self.m)

    def h(self, x):
        return rp.peval_float(self.h_poly, np.asarray(x, dtype=np.float64))

    def g(self, x):
        return rp.peval_float(self.g_poly, np.asarray(x, dtype=np.float64))

    @property
    def g_domain_hi(self) -> Fraction:
        return min(Fraction(1), (1 - self.theta) / self.m)


@dataclass(frozen=True)
class ControlPolynomials:
    """Expanded sign witnesses for the two curved borders of A."""

    region: RegionParams
    phi1: rp.Poly
    phi2: rp.Poly
    phi3: rp.Poly
    phi4: rp.Poly
    dom12: tuple
    dom34: tuple

    def named(self):
        return (
            ("phi1", self.phi1, self.dom12),
            ("phi2", self.phi2, self.dom12),
            ("phi3", self.phi3, self.dom34),
            ("phi4", self.phi4, self.dom34),
        )


def build_polynomials(r: RegionParams) -> ControlPolynomials:
    """Exact expansion of the four border-control polynomials.

    phi1 = x^2 - 2 h (m h + theta)        on [delta, 1]
    phi2 = -h' (1 - 2 x h) + 2 phi1       on [delta, 1]
    phi3 = x^2 - 2 g h(g)                 on [0, (1-theta)/m]
    phi4 = -2 m x g - 2 phi3              on [0, (1-theta)/m]
    """
    h = r.h_poly
    g = r.g_poly
    x = rp.poly(0, 1)
    x2 = rp.pmul(x, x)

    g_of_h = rp.padd(rp.pscale(h, r.m), rp.poly(r.theta))
    phi1 = rp.psub(x2, rp.pscale(rp.pmul(h, g_of_h), 2))

    hp = rp.pderiv(h)
    one_minus_2xh = rp.psub(rp.poly(1), rp.pscale(rp.pmul(x, h), 2))
    phi2 = rp.padd(rp.pscale(rp.pmul(hp, one_minus_2xh), -1), rp.pscale(phi1, 2))

    h_of_g = rp.pcompose(h, g)
    phi3 = rp.psub(x2, rp.pscale(rp.pmul(g, h_of_g), 2))

    phi4 = rp.psub(
        rp.pscale(rp.pmul(x, g), -2 * r.m), rp.pscale(phi3, 2)
    )

    if rp.degree(phi1) > 6 or rp.degree(phi3) > 4:
        raise AssertionError("control polynomial degrees exceed their bounds")
    return ControlPolynomials(
        region=r,
        phi1=phi1,
        phi2=phi2,
        phi3=phi3,
        phi4=phi4,
        dom12=(r.delta, Fraction(1)),
        dom34=(Fraction(0), r.g_domain_hi),
    )


class Verdict(enum.Enum):
    CERTIFIED_POSITIVE = "CertifiedPositive"
    CERTIFIED_NEGATIVE = "CertifiedNegative"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class PolyCertificate:
    name: str
    coefficients: tuple  # exact rationals, low order first
    domain: tuple
    verdict: Verdict
    grid: int
    lipschitz: float
    min_value: float
    max_value: float
    slack: float

    def to_text(self) -> str:
        lines = [
            f"certificate {self.name}",
            f"  domain      = [{self.domain[0]}, {self.domain[1]}]",
            f"  coefficients = [{', '.join(str(c) for c in self.coefficients)}]",
            f"  verdict     = {self.verdict.value}",
            f"  grid        = {self.grid}",
            f"  lipschitz   = {self.lipschitz:.17g}",
            f"  min_value   = {self.min_value:.17g}",
            f"  max_value   = {self.max_value:.17g}",
            f"  slack       = {self.slack:.17g}",
        ]
        return "\n".join(lines)


@dataclass(frozen=True)
class CertificateReport:
    region: RegionParams
    certificates: tuple

    def verdicts(self) -> dict[str, Verdict]:
        return {c.name: c.verdict for c in self.certificates}

    @property
    def proves_invariance(self) -> bool:
        """The sign pattern the invariance proof needs: +, +, -, +."""
        v = self.verdicts()
        return (
            v["phi1"] is Verdict.CERTIFIED_POSITIVE
            and v["phi2"] is Verdict.CERTIFIED_POSITIVE
            and v["phi3"] is Verdict.CERTIFIED_NEGATIVE
            and v["phi4"] is Verdict.CERTIFIED_POSITIVE
        )

    def to_text(self) -> str:
        head = (
            f"region delta={self.region.delta} c={self.region.c} "
            f"theta={self.region.theta} m={self.region.m}"
        )
        return "\n".join([head] + [c.to_text() for c in self.certificates]) + "\n"


def _certify_one(
    name: str, p: rp.Poly, dom: tuple, grid: int, auto_refine: bool, grid_max: int
) -> PolyCertificate:
    lo, hi = float(dom[0]), float(dom[1])
    xmax = max(abs(lo), abs(hi))
    coeffs = [float(abs(c)) for c in p]
    lipschitz = sum(i * c * xmax ** (i - 1) for i, c in enumerate(coeffs) if i >= 1)
    lipschitz *= 1.0 + 1e-9
    magnitude = sum(c * xmax**i for i, c in enumerate(coeffs))
    fp_slack = 64 * np.finfo(np.float64).eps * magnitude

    g = grid
    while True:
        xs = np.linspace(lo, hi, g)
        vals = rp.peval_float(p, xs)
        vmin = float(vals.min())
        vmax = float(vals.max())
        need = lipschitz * (hi - lo) / (g - 1) + fp_slack
        if vmin > need:
            verdict = Verdict.CERTIFIED_POSITIVE
            break
        if vmax < -need:
            verdict = Verdict.CERTIFIED_NEGATIVE
            break
        if not auto_refine or g >= grid_max:
            verdict = Verdict.INCONCLUSIVE
            break
        g = min(4 * g, grid_max)
    return PolyCertificate(
        name=name,
        coefficients=tuple(p),
        domain=(dom[0], dom[1]),
        verdict=verdict,
        grid=g,
        lipschitz=float(lipschitz),
        min_value=vmin,
        max_value=vmax,
        slack=float(need),
    )


def certify_signs(
    cp: ControlPolynomials,
    *,
    grid: int = 10_000,
    auto_refine: bool = True,
    grid_max: int = 1 << 22,
) -> CertificateReport:
    """Sign certificates for the four control polynomials.

    A verdict is definite only when every grid value clears the
    Lipschitz slack L * dx (L bounded through the coefficients) plus a
    float-evaluation pad; otherwise the grid is refined up to grid_max
    and the verdict may remain Inconclusive, which is a legitimate
    outcome for user-supplied region parameters.
    """
    certs = tuple(
        _certify_one(name, p, dom, grid, auto_refine, grid_max)
        for name, p, dom in cp.named()
    )
    return CertificateReport(region=cp.region, certificates=certs)


# --------------------------------------------------------------------------
# rescaled system


@dataclass(frozen=True)
class YParams:
    """Integration-facing parameters of the rescaled system (mirror only)."""

    beta: float
    n_max: int

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")

    @classmethod
    def from_model(cls, p: ModelParams) -> "YParams":
        return cls(beta=p.beta, n_max=p.n_max)

    @property
    def lam(self) -> np.ndarray:
        cached = self.__dict__.get("_lam")
        if cached is None:
            n = np.arange(1, self.n_max + 1, dtype=np.float64)
            cached = np.exp2(((2 * self.beta + 1) * n - (self.beta + 2)) / 3.0)
            cached.setflags(write=False)
            self.__dict__["_lam"] = cached
        return cached

    def system_arrays(self):
        cached = self.__dict__.get("_sys")
        if cached is None:
            a = self.lam.copy()
            b = 2.0 * self.lam
            a.setflags(write=False)
            b.setflags(write=False)
            cached = (a, b, 1)
            self.__dict__["_sys"] = cached
        return cached


def y_vector_field(p: ModelParams | YParams, y: np.ndarray) -> np.ndarray:
    """Right-hand side of the rescaled system with mirror closure."""
    yp = p if isinstance(p, YParams) else YParams.from_model(p)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (yp.n_max,):
        raise ValueError(f"state has shape {y.shape}, expected ({yp.n_max},)")
    prev = np.concatenate(([0.0], y[:-1]))
    nxt = np.concatenate((y[1:], [y[-1]]))
    return yp.lam * (prev**2 - 2.0 * y * nxt)


def critical_rescale(p: ModelParams, x: np.ndarray) -> np.ndarray:
    """Map shell amplitudes to rescaled variables, Y_n = 2^((beta-1)n/3) X_n."""
    return sup_weights(p, BetaCritical()) * np.asarray(x, dtype=np.float64)


# --------------------------------------------------------------------------
# membership and invariance


@dataclass(frozen=True)
class Membership:
    inside: bool
    worst: tuple  # (shell index, signed margin)
    constraint: str


_CONSTRAINTS = ("lower>=0", "upper<=1", "above_h", "below_g")


def _margins(r: RegionParams, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stacked constraint margins for states Y of shape (m, N).

    Returns (margin matrix of shape (m, 4, N), with +inf padding for the
    pair constraints of the last shell)."""
    m, N = Y.shape
    out = np.full((m, 4, N), np.inf)
    out[:, 0, :] = Y
    out[:, 1, :] = 1.0 - Y
    h = r.h(Y[:, :-1])
    g = r.g(Y[:, :-1])
    out[:, 2, : N - 1] = Y[:, 1:] - h
    out[:, 3, : N - 1] = g - Y[:, 1:]
    return out


def region_membership(r: RegionParams, y) -> Membership:
    """Is y in the trapped set (all consecutive pairs inside A)?

    The worst constraint is reported as (shell index, signed margin);
    a nonnegative margin everywhere means inside (boundary included).
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("membership needs a state vector of length >= 2")
    marg = _margins(r, y[None, :])[0]
    flat = int(np.argmin(marg))
    ci, n = divmod(flat, y.size)
    worst = float(marg[ci, n])
    return Membership(
        inside=bool(worst >= 0.0),
        worst=(n + 1, worst),
        constraint=_CONSTRAINTS[ci],
    )


def sample_in_region(
    r: RegionParams, n_max: int, rng: np.random.Generator
) -> np.ndarray:
    """Random state in the trapped set, built pair by pair."""
    y = np.empty(n_max)
    y[0] = rng.uniform(0.0, 1.0)
    for i in range(1, n_max):
        lo = max(float(r.h(y[i - 1])), 0.0)
        hi = min(float(r.g(y[i - 1])), 1.0)
        if hi < lo:
            raise ValueError("region admits no continuation; check parameters")
        y[i] = rng.uniform(lo, hi)
    return y


@dataclass(frozen=True)
class InvarianceReport:
    passed: bool
    asserted: bool  # False when beta < 1 (outside the theorem hypothesis)
    min_margin: float
    argmin_time: float
    argmin_shell: int
    argmin_constraint: str
    tol: float
    t_end: float
    trajectory: Optional[Trajectory] = field(repr=False, default=None)


def check_invariance(
    p: ModelParams | YParams,
    r: RegionParams,
    y0,
    t_end: float,
    cfg: Optional[IntegratorConfig] = None,
    *,
    keep_trajectory: bool = False,
    scan_per_step: int = 3,
) -> InvarianceReport:
    """Integrate the rescaled system from y0 and track the worst margin.

    Requires y0 inside the trapped set.  PASS means the minimum margin
    over all scanned states stays above -REGION_TOL: boundary contact
    is allowed, only a genuine exit fails.  For beta < 1 the run is
    tagged as outside the theorem hypothesis and the outcome is
    recorded rather than asserted.
    """
    yp = p if isinstance(p, YParams) else YParams.from_model(p)
    y0 = np.asarray(y0, dtype=np.float64)
    member = region_membership(r, y0)
    if member.worst[1] < -1e-12:
        raise ValueError(
            f"initial condition outside the region: {member.constraint} at "
            f"shell {member.worst[0]} (margin {member.worst[1]:.3g})"
        )
    if cfg is None:
        cfg = IntegratorConfig()
    traj = integrate(yp, cfg, y0, t_end)
    times = traj.refined_times(scan_per_step) if traj.has_dense else traj.ts
    Y = traj.dense_eval_many(times) if traj.has_dense else traj.ys
    marg = _margins(r, Y)
    flat = int(np.argmin(marg))
    ti, rest = divmod(flat, marg.shape[1] * marg.shape[2])
    ci, n = divmod(rest, marg.shape[2])
    mmin = float(marg[ti, ci, n])
    return InvarianceReport(
        passed=bool(mmin >= -REGION_TOL),
        asserted=bool(yp.beta >= 1.0),
        min_margin=mmin,
        argmin_time=float(times[ti]),
        argmin_shell=n + 1,
        argmin_constraint=_CONSTRAINTS[ci],
        tol=REGION_TOL,
        t_end=float(t_end),
        trajectory=traj if keep_trajectory else None,
    )


# --------------------------------------------------------------------------
# decay bounds for the shell system


@dataclass(frozen=True)
class DecayReport:
    asserted: bool
    uniform_ok: bool
    decay_ok: bool
    initial_sup: float
    max_sup: float
    uniform_ratio: float  # max over time of sup(t) / (12 * sup(0))
    decay_ratio: float  # max over t >= t_min of sup(t) / envelope(t)
    c_decay: float
    t_min: float


def decay_bounds_check(
    traj: Trajectory,
    p: Optional[ModelParams] = None,
    *,
    t_min: float = 1e-3,
    c_mult: float = 13.0,
) -> DecayReport:
    """Uniform 12x bound and t^(-1/3) decay of the critical weighted sup.

    The decay constant is c_mult * 2^((8+beta)/3); any multiplier
    strictly above 12 witnesses the theorem, 13 is used by default.
    Hypothesis failures (beta < 1 or signed data) downgrade the report
    to recorded-not-asserted.
    """
    model: ModelParams = p if p is not None else traj.model
    w = sup_weights(model, BetaCritical())
    vals = (traj.ys * w[None, :]).max(axis=1)
    initial = float(vals[0])
    asserted = bool(model.beta >= 1.0 and np.all(traj.ys[0] >= 0))

    uniform_ok = bool(vals.max() <= 12.0 * initial * (1.0 + 1e-6))
    if initial > 0:
        uniform_ratio = float(vals.max() / (12.0 * initial))
    else:
        uniform_ratio = 0.0 if uniform_ok else np.inf

    c_decay = c_mult * 2.0 ** ((8.0 + model.beta) / 3.0)
    norm = float(np.linalg.norm(traj.ys[0]))
    mask = traj.ts >= t_min
    if mask.any() and norm > 0:
        envelope = c_decay * norm ** (2.0 / 3.0) * traj.ts[mask] ** (-1.0 / 3.0)
        ratios = vals[mask] / envelope
        decay_ratio = float(ratios.max())
        decay_ok = bool(decay_ratio <= 1.0)
    else:
        decay_ratio = 0.0
        decay_ok = True
    return DecayReport(
        asserted=asserted,
        uniform_ok=uniform_ok,
        decay_ok=decay_ok,
        initial_sup=initial,
        max_sup=float(vals.max()),
        uniform_ratio=uniform_ratio,
        decay_ratio=decay_ratio,
        c_decay=float(c_decay),
        t_min=float(t_min),
    )
