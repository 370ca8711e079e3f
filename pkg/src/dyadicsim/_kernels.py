"""Jitted integration cores shared by the X- and rescaled shell systems.

Both systems have the componentwise form

    dy_n/dt = a_n * y_{n-1}^2 - b_n * y_n * y~_{n+1}

with y_0 = 0 and y~_{N+1} either 0 or y_N (mirror flag).  The kernels
below only ever see the (a, b, mirror) triple, so one compiled loop
serves every truncation.

Status codes returned by the cores:

    0  reached t_end
    1  step budget exhausted
    2  sample storage exhausted (dense mode)
    3  step size underflow (stiffness failure)
    4  state left the finite range
    5  stopped early: energy fell below the requested threshold
"""

from __future__ import annotations

import numpy as np
from numba import njit

STATUS_DONE = 0
STATUS_BUDGET = 1
STATUS_STORAGE = 2
STATUS_UNDERFLOW = 3
STATUS_NONFINITE = 4
STATUS_ENERGY_STOP = 5

# Dormand-Prince 5(4) pair; the fifth-order solution is propagated.
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DP_A = np.zeros((7, 7))
DP_A[1, 0] = 1 / 5
DP_A[2, :2] = (3 / 40, 9 / 40)
DP_A[3, :3] = (44 / 45, -56 / 15, 32 / 9)
DP_A[4, :4] = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
DP_A[5, :5] = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
DP_A[6, :6] = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# Quartic interpolant of the pair: y(theta) = y0 + h * (K^T P) @ (theta..theta^4).
DP_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
# PI controller exponents for the order-5 pair (alpha = 1/5 - 0.75*beta).
_PI_BETA = 0.04
_PI_ALPHA = 0.2 - 0.75 * _PI_BETA

_RKC_DAMP = 2.0 / 13.0
_RKC_SMAX = 200


@njit(cache=True)
def shell_rhs(a, b, mirror, y, out):
    n = y.shape[0]
    for i in range(n):
        prev = y[i - 1] if i > 0 else 0.0
        if i < n - 1:
            nxt = y[i + 1]
        elif mirror == 1:
            nxt = y[n - 1]
        else:
            nxt = 0.0
        out[i] = a[i] * prev * prev - b[i] * y[i] * nxt


@njit(cache=True)
def gershgorin_rho(a, b, mirror, y):
    """Row-sum bound on the Jacobian spectral radius at y.

    Row n holds 2 a_n y_{n-1}, -b_n y~_{n+1} and -b_n y_n (columns n-1,
    n, n+1); the mirror closure folds the last column into the diagonal.
    """
    n = y.shape[0]
    rho = 0.0
    for i in range(n):
        prev = abs(y[i - 1]) if i > 0 else 0.0
        if i < n - 1:
            nxt = abs(y[i + 1])
            own = abs(y[i])
        elif mirror == 1:
            nxt = abs(y[n - 1])
            own = abs(y[n - 1])
        else:
            nxt = 0.0
            own = 0.0
        r = 2.0 * a[i] * prev + b[i] * (nxt + own)
        if r > rho:
            rho = r
    return rho


@njit(cache=True)
def _error_norm(y, ynew, err, rtol, atol):
    n = y.shape[0]
    s = 0.0
    for i in range(n):
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        q = err[i] / sc
        s += q * q
    return np.sqrt(s / n)


@njit(cache=True)
def _store_sample(ts, ys, n_samp, t, y):
    ts[n_samp] = t
    for i in range(y.shape[0]):
        ys[n_samp, i] = y[i]
    return n_samp + 1


@njit(cache=True)
def _compact_half(ts, ys, n_samp):
    kept = 0
    for j in range(0, n_samp, 2):
        ts[kept] = ts[j]
        for i in range(ys.shape[1]):
            ys[kept, i] = ys[j, i]
        kept += 1
    return kept


@njit(cache=True)
def dp45_core(
    a,
    b,
    mirror,
    y0,
    t0,
    t_end,
    rtol,
    atol,
    h_init,
    cfl,
    h_max,
    max_steps,
    dense,
    stop_energy,
    ts,
    ys,
    qs,
    hs,
):
    """Adaptive Dormand-Prince loop with a refreshed explicit-stability cap.

    Fills ts/ys (+ qs interpolation blocks and hs step sizes in dense
    mode) and returns

        (n_samples, stride, n_attempts, n_accepted, n_rejected, n_rhs,
         status, t_reached)
    """
    n = y0.shape[0]
    cap = ts.shape[0]
    y = y0.copy()
    ytmp = np.empty(n)
    yerr = np.empty(n)
    K = np.empty((7, n))
    t = t0
    span = t_end - t0

    shell_rhs(a, b, mirror, y, K[0])
    n_rhs = 1

    rho = gershgorin_rho(a, b, mirror, y)
    h_cap = cfl / rho if rho > 0.0 else span
    h = h_init if h_init > 0.0 else min(h_cap, 1e-3 * span)
    if h > h_max:
        h = h_max
    if h > span:
        h = span

    n_samp = _store_sample(ts, ys, 0, t, y)
    stride = 1
    acc_idx = 0
    n_att = 0
    n_acc = 0
    n_rej = 0
    facold = 1e-4
    just_rejected = False
    status = STATUS_DONE

    while t < t_end:
        if n_att >= max_steps:
            status = STATUS_BUDGET
            break
        rho = gershgorin_rho(a, b, mirror, y)
        if rho > 0.0 and h > cfl / rho:
            h = cfl / rho
        if h > h_max:
            h = h_max
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        elif t + h == t:
            # the step no longer advances time in floating point
            status = STATUS_UNDERFLOW
            break
        n_att += 1

        for s in range(1, 7):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += DP_A[s, j] * K[j, i]
                ytmp[i] = y[i] + h * acc
            shell_rhs(a, b, mirror, ytmp, K[s])
        n_rhs += 6
        # ytmp now holds the order-5 update (row 6 of A is b).

        ok = True
        for i in range(n):
            e = 0.0
            for j in range(7):
                e += DP_E[j] * K[j, i]
            yerr[i] = h * e
            if not np.isfinite(ytmp[i]):
                ok = False
        errn = _error_norm(y, ytmp, yerr, rtol, atol) if ok else np.inf

        if errn <= 1.0:
            if dense == 1 and n_samp >= cap:
                status = STATUS_STORAGE
                break
            t = t_end if last else t + h
            acc_idx += 1
            n_acc += 1
            if dense == 1:
                for i in range(n):
                    for c in range(4):
                        acc = 0.0
                        for j in range(7):
                            acc += K[j, i] * DP_P[j, c]
                        qs[n_samp - 1, i, c] = acc
                hs[n_samp - 1] = h
                n_samp = _store_sample(ts, ys, n_samp, t, ytmp)
            else:
                store = acc_idx % stride == 0 or t >= t_end
                if store and n_samp >= cap:
                    n_samp = _compact_half(ts, ys, n_samp)
                    stride *= 2
                    store = acc_idx % stride == 0 or t >= t_end
                if store:
                    n_samp = _store_sample(ts, ys, n_samp, t, ytmp)
            for i in range(n):
                y[i] = ytmp[i]
                K[0, i] = K[6, i]
            if stop_energy >= 0.0:
                en = 0.0
                for i in range(n):
                    en += y[i] * y[i]
                if en <= stop_energy:
                    status = STATUS_ENERGY_STOP
                    break
            if errn == 0.0:
                fac = _MAX_FACTOR
            else:
                fac = _SAFETY * errn ** -_PI_ALPHA * facold ** _PI_BETA
                if fac > _MAX_FACTOR:
                    fac = _MAX_FACTOR
                elif fac < _MIN_FACTOR:
                    fac = _MIN_FACTOR
            if just_rejected and fac > 1.0:
                fac = 1.0
            h = h * fac
            facold = max(errn, 1e-4)
            just_rejected = False
        else:
            n_rej += 1
            just_rejected = True
            if np.isfinite(errn):
                fac = _SAFETY * errn ** -_PI_ALPHA
                if fac < _MIN_FACTOR:
                    fac = _MIN_FACTOR
                elif fac > 1.0:
                    fac = 1.0
                h = h * fac
            else:
                h = h * 0.25

    if dense == 0 and (n_samp == 0 or ts[n_samp - 1] != t):
        if n_samp >= cap:
            n_samp = _compact_half(ts, ys, n_samp)
            stride *= 2
        n_samp = _store_sample(ts, ys, n_samp, t, y)

    return n_samp, stride, n_att, n_acc, n_rej, n_rhs, status, t


@njit(cache=True)
def _rkc_coeffs(s, w0):
    """Chebyshev recurrence values at w0 up to degree s.

    Returns (T, Tp, Tpp) arrays of T_j(w0) and its first two derivatives.
    """
    T = np.empty(s + 1)
    Tp = np.empty(s + 1)
    Tpp = np.empty(s + 1)
    T[0], Tp[0], Tpp[0] = 1.0, 0.0, 0.0
    if s >= 1:
        T[1], Tp[1], Tpp[1] = w0, 1.0, 0.0
    for j in range(2, s + 1):
        T[j] = 2.0 * w0 * T[j - 1] - T[j - 2]
        Tp[j] = 2.0 * T[j - 1] + 2.0 * w0 * Tp[j - 1] - Tp[j - 2]
        Tpp[j] = 4.0 * Tp[j - 1] + 2.0 * w0 * Tpp[j - 1] - Tpp[j - 2]
    return T, Tp, Tpp


@njit(cache=True)
def _rkc_step(a, b, mirror, y, f0, t, h, s, ynew, work):
    """One s-stage stabilized step; ynew receives Y_s.  Returns rhs count."""
    n = y.shape[0]
    w0 = 1.0 + _RKC_DAMP / (s * s)
    T, Tp, Tpp = _rkc_coeffs(s, w0)
    w1 = Tp[s] / Tpp[s]

    yjm2 = work[0]
    yjm1 = work[1]
    fj = work[2]

    b2 = Tpp[2] / (Tp[2] * Tp[2])
    bjm2 = b2  # b_0
    bjm1 = b2  # b_1
    mu1t = bjm1 * w1
    for i in range(n):
        yjm2[i] = y[i]
        yjm1[i] = y[i] + h * mu1t * f0[i]
    ajm1 = 1.0 - bjm1 * T[1]
    nf = 0
    for j in range(2, s + 1):
        bj = Tpp[j] / (Tp[j] * Tp[j])
        mu = 2.0 * bj * w0 / bjm1
        nu = -bj / bjm2
        mut = 2.0 * bj * w1 / bjm1
        gt = -ajm1 * mut
        shell_rhs(a, b, mirror, yjm1, fj)
        nf += 1
        for i in range(n):
            v = (
                (1.0 - mu - nu) * y[i]
                + mu * yjm1[i]
                + nu * yjm2[i]
                + mut * h * fj[i]
                + gt * h * f0[i]
            )
            yjm2[i] = yjm1[i]
            yjm1[i] = v
        ajm1 = 1.0 - bj * T[j]
        bjm2 = bjm1
        bjm1 = bj
    for i in range(n):
        ynew[i] = yjm1[i]
    return nf


@njit(cache=True)
def rkc2_core(
    a,
    b,
    mirror,
    y0,
    t0,
    t_end,
    rtol,
    atol,
    h_init,
    h_max,
    max_steps,
    dense,
    stop_energy,
    ts,
    ys,
    qs,
    hs,
):
    """Stabilized explicit loop (second-order Chebyshev family).

    Stage counts track h * rho so steps are not throttled by the
    explicit stability limit; dense output is the cubic Hermite of the
    step endpoints, written in the same (N, 4) block format as the
    primary pair.  Return tuple matches dp45_core.
    """
    n = y0.shape[0]
    cap = ts.shape[0]
    y = y0.copy()
    ynew = np.empty(n)
    f0 = np.empty(n)
    fnew = np.empty(n)
    est = np.empty(n)
    work = np.empty((3, n))
    t = t0
    span = t_end - t0

    shell_rhs(a, b, mirror, y, f0)
    n_rhs = 1
    rho = gershgorin_rho(a, b, mirror, y)
    h = h_init if h_init > 0.0 else min(0.1 / rho if rho > 0.0 else span, span)
    if h > h_max:
        h = h_max

    n_samp = _store_sample(ts, ys, 0, t, y)
    stride = 1
    acc_idx = 0
    n_att = 0
    n_acc = 0
    n_rej = 0
    status = STATUS_DONE

    while t < t_end:
        if n_att >= max_steps:
            status = STATUS_BUDGET
            break
        if h > h_max:
            h = h_max
        rho = gershgorin_rho(a, b, mirror, y)
        s = 2
        if rho > 0.0:
            need = np.sqrt(h * rho / 0.65) + 1.0
            if need > s:
                s = int(need) + 1
            if s > _RKC_SMAX:
                s = _RKC_SMAX
                h = 0.65 * s * s / rho
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        elif t + h == t:
            status = STATUS_UNDERFLOW
            break
        n_att += 1

        n_rhs += _rkc_step(a, b, mirror, y, f0, t, h, s, ynew, work)
        shell_rhs(a, b, mirror, ynew, fnew)
        n_rhs += 1

        ok = True
        for i in range(n):
            est[i] = 0.8 * (y[i] - ynew[i]) + 0.4 * h * (f0[i] + fnew[i])
            if not np.isfinite(ynew[i]):
                ok = False
        errn = _error_norm(y, ynew, est, rtol, atol) if ok else np.inf

        if errn <= 1.0:
            if dense == 1 and n_samp >= cap:
                status = STATUS_STORAGE
                break
            told = t
            t = t_end if last else t + h
            acc_idx += 1
            n_acc += 1
            if dense == 1:
                # Cubic Hermite in the shared y0 + h*Q@(theta..theta^4) form.
                for i in range(n):
                    d = (ynew[i] - y[i]) / h
                    qs[n_samp - 1, i, 0] = f0[i]
                    qs[n_samp - 1, i, 1] = 3.0 * d - 2.0 * f0[i] - fnew[i]
                    qs[n_samp - 1, i, 2] = f0[i] + fnew[i] - 2.0 * d
                    qs[n_samp - 1, i, 3] = 0.0
                hs[n_samp - 1] = t - told
                n_samp = _store_sample(ts, ys, n_samp, t, ynew)
            else:
                store = acc_idx % stride == 0 or t >= t_end
                if store and n_samp >= cap:
                    n_samp = _compact_half(ts, ys, n_samp)
                    stride *= 2
                    store = acc_idx % stride == 0 or t >= t_end
                if store:
                    n_samp = _store_sample(ts, ys, n_samp, t, ynew)
            for i in range(n):
                y[i] = ynew[i]
                f0[i] = fnew[i]
            if stop_energy >= 0.0:
                en = 0.0
                for i in range(n):
                    en += y[i] * y[i]
                if en <= stop_energy:
                    status = STATUS_ENERGY_STOP
                    break
            if errn == 0.0:
                fac = 10.0
            else:
                fac = 0.8 * errn ** (-1.0 / 3.0)
                if fac > 10.0:
                    fac = 10.0
                elif fac < 0.1:
                    fac = 0.1
            h = h * fac
        else:
            n_rej += 1
            if np.isfinite(errn):
                fac = 0.8 * errn ** (-1.0 / 3.0)
                h = h * max(0.1, min(fac, 1.0))
            else:
                h = h * 0.25

    if dense == 0 and (n_samp == 0 or ts[n_samp - 1] != t):
        if n_samp >= cap:
            n_samp = _compact_half(ts, ys, n_samp)
            stride *= 2
        n_samp = _store_sample(ts, ys, n_samp, t, y)

    return n_samp, stride, n_att, n_acc, n_rej, n_rhs, status, t
