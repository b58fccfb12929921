"""R^n-actions: translation, multiplicative phase, and a compactly
supported flow.

The compact action is the flow of an even vector field L supported in
[-1, 1]: on [1/2, 1) it equals ``(1-y)^2 exp(-1/(1-y))`` (so the
inverse of the flow map has the explicit tail ``exp(1/(1-y))``), on
[0, 3/8] it is the constant ``L0 = (9/16) e^{-2}``, and a smoothstep
blends the two in between.  Trajectories therefore admit closed forms
in the tails and need adaptive Runge-Kutta integration only across the
core, where the field is bounded below; derivative transport moves
truncated Taylor jets of the initial condition through the same steps,
and x-derivatives come from the exact flow recursion
``d_x tau = L(tau)``, ``d_x^2 tau = L'(tau) L(tau)``, ...
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import jets, symbols
from .jets import Jet
from .symbols import OrderProfile, SymbolFn, SymbolUsageError

__all__ = [
    "CompactTau",
    "ActionSpec",
    "GrowthEntry",
    "ActionNonConvergence",
    "tau1",
    "tau1_jet",
    "tau_n",
    "tau_partials",
    "compact_time_jet",
    "growth_exponent_fit",
    "growth_table",
    "growth_report_csv",
    "default_probe_grid",
    "act",
    "action_order_profile",
    "chi_margin",
    "gamma_value",
    "gamma_inverse",
]

E2 = math.exp(2.0)
L0 = (9.0 / 16.0) * math.exp(-2.0)


class ActionNonConvergence(ArithmeticError):
    pass


@dataclass(frozen=True)
class CompactTau:
    """Parameters of the compactly supported flow.

    ``eps`` is the margin of the bump used by the n-dimensional
    extension (1 on [-1,1], support in [-1-eps, 1+eps]); ``ode_tol`` is
    the absolute local tolerance of the adaptive integrator.
    """

    n: int = 1
    eps: float = 0.25
    ode_tol: float = 1e-10

    def __post_init__(self):
        if self.eps <= 0 or self.ode_tol <= 0:
            raise SymbolUsageError("eps and ode_tol must be positive")


# ---------------------------------------------------------------------------
# univariate truncated-series helpers (float vectors, jit-compiled)


@njit(cache=True)
def _ser_mul(a, b):
    l = len(a)
    out = np.zeros(l)
    for i in range(l):
        ai = a[i]
        if ai == 0.0:
            continue
        for j in range(l - i):
            out[i + j] += ai * b[j]
    return out


@njit(cache=True)
def _ser_recip(a):
    l = len(a)
    out = np.zeros(l)
    out[0] = 1.0 / a[0]
    for k in range(1, l):
        acc = 0.0
        for j in range(1, k + 1):
            acc += a[j] * out[k - j]
        out[k] = -acc / a[0]
    return out


@njit(cache=True)
def _ser_exp(a):
    l = len(a)
    out = np.zeros(l)
    out[0] = math.exp(a[0])
    for k in range(1, l):
        acc = 0.0
        for j in range(1, k + 1):
            acc += j * a[j] * out[k - j]
        out[k] = acc / k
    return out


@njit(cache=True)
def _ser_deriv_padded(a):
    out = np.zeros(len(a))
    for i in range(1, len(a)):
        out[i - 1] = i * a[i]
    return out


@njit(cache=True)
def _ser_log(a):
    l = len(a)
    da_over_a = _ser_mul(_ser_deriv_padded(a), _ser_recip(a))
    out = np.zeros(l)
    out[0] = math.log(a[0])
    for k in range(1, l):
        out[k] = da_over_a[k - 1] / k
    return out


@njit(cache=True)
def _ser_compose(outer, inner):
    """Compose outer (Taylor at inner[0]) with inner; truncation at the
    length of inner."""
    l = len(inner)
    hat = inner.copy()
    hat[0] = 0.0
    res = np.zeros(l)
    res[0] = outer[len(outer) - 1]
    for j in range(len(outer) - 2, -1, -1):
        res = _ser_mul(res, hat)
        res[0] += outer[j]
    return res


@njit(cache=True)
def _ser_var(value, l):
    out = np.zeros(l + 1)
    out[0] = value
    if l >= 1:
        out[1] = 1.0
    return out


# ---------------------------------------------------------------------------
# the vector field L and the tail diffeomorphism

_L0 = (9.0 / 16.0) * math.exp(-2.0)


@njit(cache=True)
def _smoothstep_series(z):
    b1 = _ser_exp(-_ser_recip(z))
    one_minus = -z.copy()
    one_minus[0] += 1.0
    b2 = _ser_exp(-_ser_recip(one_minus))
    return _ser_mul(b1, _ser_recip(b1 + b2))


@njit(cache=True)
def L_series(u0, l):
    """Taylor coefficients of the vector field at ``u0``, length l+1."""
    a = abs(u0)
    out = np.zeros(l + 1)
    if a >= 1.0:
        return out
    if a <= 0.375:
        out[0] = _L0
        return out
    t = _ser_var(a, l)
    w = -t
    w[0] += 1.0  # 1 - u
    tail = _ser_mul(_ser_mul(w, w), _ser_exp(-_ser_recip(w)))
    if a >= 0.5:
        out = tail
    else:
        z = 8.0 * t
        z[0] = 8.0 * (a - 0.375)
        psi = _smoothstep_series(z)
        one_minus_psi = -psi.copy()
        one_minus_psi[0] += 1.0
        out = _ser_mul(psi, tail) + _L0 * one_minus_psi
    if u0 < 0.0:
        for i in range(1, l + 1, 2):
            out[i] = -out[i]
    return out


def L_value(u: float) -> float:
    return float(L_series(float(u), 0)[0])


def _e_of(y: float) -> float:
    """exp(1/(1-y)) for y < 1 (the tail chart of the flow)."""
    return math.exp(1.0 / (1.0 - y))


def _e_inv(u: float) -> float:
    """Inverse of the tail chart: 1 - 1/log(u), for u > 1."""
    return 1.0 - 1.0 / math.log(u)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(60)


def _core_time(y_from: float, y_to: float) -> float:
    """Travel time ``int 1/L`` between two core points in [-1/2, 1/2]."""
    mid = 0.5 * (y_from + y_to)
    half = 0.5 * (y_to - y_from)
    pts = mid + half * _GL_NODES
    vals = np.array([1.0 / L_value(p) for p in pts])
    return float(half * np.dot(_GL_WEIGHTS, vals))


_W_CORE = None


def _w_core() -> float:
    global _W_CORE
    if _W_CORE is None:
        _W_CORE = _core_time(-0.5, 0.5)
    return _W_CORE


def gamma_value(y: float) -> float:
    """A global chart gamma with gamma' = 1/L, fixed by gamma(1/2)=e^2;
    the flow is gamma^{-1}(gamma(y) + x) on (-1, 1)."""
    if not -1.0 < y < 1.0:
        raise SymbolUsageError("gamma is defined on (-1, 1)")
    if y >= 0.5:
        return _e_of(y)
    if y <= -0.5:
        return 2.0 * E2 - _w_core() - _e_of(-y)
    return E2 - _core_time(y, 0.5)


def gamma_inverse(v: float) -> float:
    if v >= E2:
        return _e_inv(v)
    lo_val = E2 - _w_core()
    if v <= lo_val:
        return -_e_inv(2.0 * E2 - _w_core() - v)
    lo, hi = -0.5, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = gamma_value(mid)
        if abs(g - v) < 1e-13:
            return mid
        if g < v:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) on jet coefficient vectors (jit-compiled)


@njit(cache=True)
def _flow_rhs(state):
    l = len(state) - 1
    return _ser_compose(L_series(state[0], l), state)


@njit(cache=True)
def _dp_step(state, h):
    k1 = _flow_rhs(state)
    k2 = _flow_rhs(state + (h * 0.2) * k1)
    k3 = _flow_rhs(state + h * (0.075 * k1 + 0.225 * k2))
    k4 = _flow_rhs(state + h * ((44.0 / 45.0) * k1 + (-56.0 / 15.0) * k2 + (32.0 / 9.0) * k3))
    k5 = _flow_rhs(
        state
        + h
        * (
            (19372.0 / 6561.0) * k1
            + (-25360.0 / 2187.0) * k2
            + (64448.0 / 6561.0) * k3
            + (-212.0 / 729.0) * k4
        )
    )
    k6 = _flow_rhs(
        state
        + h
        * (
            (9017.0 / 3168.0) * k1
            + (-355.0 / 33.0) * k2
            + (46732.0 / 5247.0) * k3
            + (49.0 / 176.0) * k4
            + (-5103.0 / 18656.0) * k5
        )
    )
    y5 = state + h * (
        (35.0 / 384.0) * k1
        + (500.0 / 1113.0) * k3
        + (125.0 / 192.0) * k4
        + (-2187.0 / 6784.0) * k5
        + (11.0 / 84.0) * k6
    )
    k7 = _flow_rhs(y5)
    y4 = state + h * (
        (5179.0 / 57600.0) * k1
        + (7571.0 / 16695.0) * k3
        + (393.0 / 640.0) * k4
        + (-92097.0 / 339200.0) * k5
        + (187.0 / 2100.0) * k6
        + (1.0 / 40.0) * k7
    )
    err = 0.0
    for i in range(len(y5)):
        e = abs(y5[i] - y4[i])
        if e > err:
            err = e
    return y5, err


@njit(cache=True)
def _find_crossing(state, h_hi):
    """Step size within (0, h_hi] landing the base point on +1/2:
    Newton on the step using the local flow speed, bisection-bracketed."""
    lo = 0.0
    hi = h_hi
    phi0 = state[0]
    speed0 = L_series(phi0, 0)[0]
    if speed0 < 1e-12:
        speed0 = 1e-12
    h = (0.5 - phi0) / speed0
    if h <= 0.0 or h > h_hi:
        h = 0.5 * h_hi
    for _ in range(60):
        phi = _dp_step(state, h)[0][0]
        g = phi - 0.5
        if abs(g) < 1e-14:
            return h
        if g < 0.0:
            lo = h
        else:
            hi = h
        u = phi if phi < 0.999 else 0.999
        speed = L_series(u, 0)[0]
        if speed < 1e-12:
            speed = 1e-12
        h_newton = h - g / speed
        if lo < h_newton < hi:
            h = h_newton
        else:
            h = 0.5 * (lo + hi)
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)


@njit(cache=True)
def _rk_advance(state, duration, atol):
    """Advance the jet state through the core; stops early (returning
    the remaining time) when the base point crosses +1/2.  A negative
    remaining time signals step-size underflow."""
    t = 0.0
    h = duration if duration < 0.5 else 0.5
    guard = 0
    while t < duration - 1e-15:
        guard += 1
        if guard > 100000:
            return state, -1.0
        if h > duration - t:
            h = duration - t
        y_new, err = _dp_step(state, h)
        if err > atol and h > 1e-13:
            fac = 0.9 * (atol / (err + 1e-300)) ** 0.2
            if fac < 0.2:
                fac = 0.2
            h = h * fac
            if h < 1e-13:
                h = 1e-13
            continue
        if y_new[0] >= 0.5:
            h_cross = _find_crossing(state, h)
            y_cross, _ = _dp_step(state, h_cross)
            t += h_cross
            return y_cross, duration - t
        state = y_new
        t += h
        fac = 0.9 * (atol / (err + 1e-300)) ** 0.2
        if fac > 5.0:
            fac = 5.0
        if fac < 0.2:
            fac = 0.2
        h = h * fac
        if h > 1.0:
            h = 1.0
    return state, 0.0


# ---------------------------------------------------------------------------
# the one-dimensional action and its derivatives


def _identity_jet(y: float, l: int) -> np.ndarray:
    return _ser_var(y, l)


def _tail_right_jet(y: float, x: float, l: int) -> np.ndarray:
    """Series of tau_x at y >= 1/2, x >= 0:  e^{-1}(e(y) + x)."""
    t = _ser_var(y, l)
    w = -t
    w[0] += 1.0
    ex = _ser_exp(_ser_recip(w))
    ex[0] += x  # e(y) + x
    lg = _ser_log(ex)
    out = -_ser_recip(lg)
    out[0] += 1.0
    return out


def _tail_left_jet(y: float, x: float, l: int) -> np.ndarray:
    """Series of tau_x at y <= -1/2 while the trajectory stays in the
    left tail:  -e^{-1}(e(-y) - x)."""
    t = _ser_var(y, l)
    w = t.copy()
    w[0] += 1.0  # 1 + y = 1 - (-y)
    ex = _ser_exp(_ser_recip(w))
    ex[0] -= x
    lg = _ser_log(ex)
    out = _ser_recip(lg)
    out[0] -= 1.0
    return out


def _sigma_series(u0: float, c: float, l: int) -> np.ndarray:
    """Series at u0 (in the right tail) of u -> e^{-1}(e(u) + c)."""
    return _tail_right_jet(u0, c, l)


def _frozen_in_tail(u0: float, x: float) -> bool:
    """True when the time shift is below resolution in the tail chart:
    the flow displacement is ~ x e^{-u0}, negligible against 1/u0^2."""
    return u0 - math.log(max(abs(x), 1e-300)) > 45.0


def tau1_jet(x: float, y: float, l: int, tau: CompactTau | None = None) -> np.ndarray:
    """Taylor coefficients (length l+1) of ``y -> tau_x(y)`` at ``y``."""
    tau = tau if tau is not None else CompactTau()
    if abs(y) >= 1.0 or x == 0.0:
        return _identity_jet(y, l)
    if x < 0.0:
        mirrored = tau1_jet(-x, -y, l, tau)
        return mirrored * (-((-1.0) ** np.arange(l + 1)))
    if y >= 0.5:
        if _frozen_in_tail(1.0 / (1.0 - y), x):
            return _identity_jet(y, l)
        return _tail_right_jet(y, x, l)
    state = None
    remaining = x
    if y <= -0.5:
        if _frozen_in_tail(1.0 / (1.0 + y), x):
            return _identity_jet(y, l)
        t_exit = _e_of(-y) - E2
        if x <= t_exit:
            return _tail_left_jet(y, x, l)
        state = _tail_left_jet(y, t_exit, l)
        state[0] = -0.5
        remaining = x - t_exit
    else:
        state = _identity_jet(y, l)
    state, rest = _rk_advance(state, remaining, tau.ode_tol)
    if rest < 0.0:
        raise ActionNonConvergence("step-size underflow in the flow integrator")
    if rest > 0.0:
        sigma = _sigma_series(float(state[0]), rest, l)
        return _ser_compose(sigma, state)
    return state


def tau1(x: float, y: float, tau: CompactTau | None = None) -> float:
    """The one-dimensional compactly supported action ``tau_x(y)``."""
    return float(tau1_jet(float(x), float(y), 0, tau)[0])


def tau1_rk_only(x: float, y: float, tau: CompactTau | None = None) -> float:
    """Reference path: integrate the flow equation end to end with the
    adaptive Runge-Kutta scheme, never invoking the tail closed form."""
    tau = tau if tau is not None else CompactTau()
    if abs(y) >= 1.0 or x == 0.0:
        return float(y)
    state = np.array([float(y)])
    t = 0.0
    h = 0.5 if x > 0 else -0.5
    guard = 0
    while (x > 0 and t < x - 1e-15) or (x < 0 and t > x + 1e-15):
        guard += 1
        if guard > 500000:
            raise ActionNonConvergence("step-size underflow in the reference integrator")
        if x > 0:
            h = min(h, x - t)
        else:
            h = max(h, x - t)
        y_new, err = _dp_step(state, h)
        if err > tau.ode_tol and abs(h) > 1e-13:
            h = h * max(0.2, 0.9 * (tau.ode_tol / max(err, 1e-300)) ** 0.2)
            continue
        state = y_new
        t += h
        h = h * min(5.0, max(0.2, 0.9 * (tau.ode_tol / max(err, 1e-300)) ** 0.2))
    return float(state[0])


def chi_margin(t, eps: float) -> np.ndarray:
    """Bump equal to 1 on [-1, 1] with support in [-1-eps, 1+eps]."""
    t = np.asarray(t, dtype=float)
    a = (np.abs(t) - 1.0) / eps
    num = np.zeros_like(a)
    den = np.ones_like(a)
    inside = a <= 0.0
    outside = a >= 1.0
    band = ~(inside | outside)
    if np.any(band):
        ab = a[band]
        b1 = np.exp(-1.0 / (1.0 - ab))
        b2 = np.exp(-1.0 / ab)
        num[band] = b1
        den[band] = b1 + b2
    out = num / den
    out[inside] = 1.0
    out[outside] = 0.0
    return out


def _chi_margin_series(t0: float, eps: float, l: int) -> np.ndarray:
    """Series of the margin bump at t0; flat except on the two bands."""
    a0 = (abs(t0) - 1.0) / eps
    if a0 <= 0.0:
        out = np.zeros(l + 1)
        out[0] = 1.0
        return out
    if a0 >= 1.0:
        return np.zeros(l + 1)
    t = _ser_var(abs(t0), l)
    a = (t - np.concatenate(([1.0], np.zeros(l)))) / eps
    one_minus = -a.copy()
    one_minus[0] += 1.0
    b1 = _ser_exp(-_ser_recip(one_minus))
    b2 = _ser_exp(-_ser_recip(a))
    out = _ser_mul(b1, _ser_recip(b1 + b2))
    if t0 < 0.0:
        out = out * ((-1.0) ** np.arange(l + 1))
    return out


def tau_n(x, y, tau: CompactTau | None = None) -> np.ndarray:
    """The n-dimensional extension: component j flows for the rescaled
    time ``x_j chi(y_1) ... chi(y_n)``; identity outside the margin box."""
    tau = tau if tau is not None else CompactTau()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise SymbolUsageError("x and y must have matching dimensions")
    scale = float(np.prod(chi_margin(y, tau.eps)))
    if scale == 0.0:
        return y.copy()
    return np.array([tau1(float(xj) * scale, float(yj), tau) for xj, yj in zip(x, y)])


def _partial_from_jet(J: np.ndarray, k: int, l: int) -> float:
    """Extract ``d_x^k d_y^l tau`` from a y-jet of order >= l."""
    if k == 0:
        return float(J[l] * math.factorial(l))
    u0 = float(J[0])
    h = L_series(u0, l + k - 1)
    for _ in range(k - 1):
        dh = _ser_deriv_padded(h)[:-1]
        h = _ser_mul(dh, L_series(u0, len(dh) - 1))
    comp = _ser_compose(h, J[: l + 1])
    return float(comp[l] * math.factorial(l))


def tau_partials(k: int, l: int, x: float, y: float, tau: CompactTau | None = None) -> float:
    """Mixed derivative ``d_x^k d_y^l tau_x(y)`` of the 1-D action.

    y-derivatives ride along the flow as a truncated jet; x-derivatives
    come from the recursion ``h_1 = L``, ``h_{j+1} = h_j' L`` with
    ``d_x^j tau = h_j(tau)``.
    """
    if k < 0 or l < 0 or k + l > 6:
        raise SymbolUsageError("supported derivative orders: k, l >= 0 with k + l <= 6")
    tau = tau if tau is not None else CompactTau()
    J = tau1_jet(float(x), float(y), l, tau)
    return _partial_from_jet(J, k, l)


def compact_time_jet(t0: float, y0: float, order: int, tau: CompactTau | None = None) -> np.ndarray:
    """Taylor coefficients of ``t -> tau_t(y0)`` at ``t0``:
    ``d_t^j tau = h_j(tau_t(y0))`` evaluated at the flowed point."""
    tau = tau if tau is not None else CompactTau()
    u0 = tau1(t0, y0, tau)
    out = np.zeros(order + 1)
    out[0] = u0
    if order >= 1:
        h = L_series(u0, max(0, order - 1))
        out[1] = h[0]
        for j in range(2, order + 1):
            dh = _ser_deriv_padded(h)[:-1]
            h = _ser_mul(dh, L_series(u0, len(dh) - 1))
            out[j] = h[0] / math.factorial(j)
    return out


# ---------------------------------------------------------------------------
# growth certification


@dataclass(frozen=True)
class GrowthEntry:
    k: int
    l: int
    fitted_exponent: float
    target_exponent: float
    residual: float
    x_min: float
    x_max: float


def default_probe_grid(x: float, count: int = 60) -> np.ndarray:
    """Initial conditions spread uniformly in position and uniformly in
    flow time over the reach of ``tau_x``, which resolves the region
    where the stretching derivative peaks."""
    uniform = np.linspace(-0.999, 0.999, count + 1)
    span = abs(x) + E2 + 6.0
    adapted = np.array([gamma_inverse(v) for v in np.linspace(-span, span, count)])
    return np.unique(np.concatenate([uniform, adapted]))


def growth_table(
    pairs,
    x_mags,
    y_grid=None,
    tau: CompactTau | None = None,
) -> list[GrowthEntry]:
    """Fit several ``(k, l)`` exponents in one sweep, reusing the flow
    jet of each probe trajectory for every requested derivative pair."""
    tau = tau if tau is not None else CompactTau()
    pairs = [(int(k), int(l)) for k, l in pairs]
    for k, l in pairs:
        if k < 0 or l < 0 or k + l > 6:
            raise SymbolUsageError("supported derivative orders: k, l >= 0 with k + l <= 6")
    x_mags = np.asarray(sorted(float(v) for v in x_mags))
    if len(x_mags) < 2 or np.any(x_mags <= 0):
        raise SymbolUsageError("x magnitudes must be positive and at least two")
    l_max = max(l for _, l in pairs)
    sups = {pair: [] for pair in pairs}
    for x in x_mags:
        grid = default_probe_grid(x) if y_grid is None else np.asarray(y_grid)
        best = {pair: 0.0 for pair in pairs}
        for y in grid:
            J = tau1_jet(float(x), float(y), l_max, tau)
            for pair in pairs:
                val = abs(_partial_from_jet(J, *pair))
                if val > best[pair]:
                    best[pair] = val
        for pair in pairs:
            sups[pair].append(best[pair])
    logw = 0.5 * np.log1p(x_mags**2)
    entries = []
    for k, l in pairs:
        vals = np.asarray(sups[(k, l)])
        target = 0.0 if l == 0 else float(2 * l + 1)
        if np.all(vals < 1e-14):
            entries.append(GrowthEntry(k, l, 0.0, target, 0.0, float(x_mags[0]), float(x_mags[-1])))
            continue
        logs = np.log(np.maximum(vals, 1e-300))
        coeffs, residuals, *_ = np.polyfit(logw, logs, 1, full=True)
        res = float(residuals[0]) if len(residuals) else 0.0
        entries.append(
            GrowthEntry(k, l, float(coeffs[0]), target, res, float(x_mags[0]), float(x_mags[-1]))
        )
    return entries


def growth_exponent_fit(
    k: int,
    l: int,
    x_mags,
    y_grid=None,
    tau: CompactTau | None = None,
) -> GrowthEntry:
    """Least-squares slope of ``log sup_y |d_x^k d_y^l tau_x(y)|``
    against ``(1/2) log(1 + x^2)`` over the given x magnitudes."""
    return growth_table([(k, l)], x_mags, y_grid, tau)[0]


def growth_report_csv(entries) -> str:
    lines = ["k,l,fitted_exponent,target_exponent,residual,x_min,x_max"]
    for e in entries:
        lines.append(
            f"{e.k},{e.l},{e.fitted_exponent!r},{e.target_exponent!r},"
            f"{e.residual!r},{e.x_min!r},{e.x_max!r}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# actions on symbols


@dataclass(frozen=True)
class ActionSpec:
    """One of the three built-in actions on functions over R^n."""

    kind: str  # "translation" | "phase" | "compact"
    n: int
    B: np.ndarray | None = None  # bilinear form of the phase action
    tau: CompactTau | None = None

    def __post_init__(self):
        if self.kind not in ("translation", "phase", "compact"):
            raise SymbolUsageError(f"unknown action variant {self.kind!r}")
        if self.kind == "phase":
            B = np.asarray(self.B, dtype=float)
            if B.shape != (self.n, self.n):
                raise SymbolUsageError("phase action needs an n x n real form")
        if self.kind == "compact" and self.tau is None:
            object.__setattr__(self, "tau", CompactTau(n=self.n))


def act(spec: ActionSpec, x, f: SymbolFn) -> SymbolFn:
    """Pullback of ``f`` under the action element ``alpha_x``."""
    x = np.asarray(x, dtype=float).reshape(spec.n)
    if f.k != spec.n:
        raise SymbolUsageError("action dimension does not match the symbol domain")
    if spec.kind == "translation":
        return symbols.translate_pullback(f, x)
    if spec.kind == "phase":
        B = np.asarray(spec.B, dtype=float)
        phase = symbols.linear_phase_symbol(B.T @ x, spec.n)
        out = symbols.pointwise_product(phase, f, system=f.system)
        out.decay_radius = f.decay_radius
        return out
    return _compact_pullback(f, x, spec.tau)


def _compact_pullback(f: SymbolFn, x: np.ndarray, tau: CompactTau) -> SymbolFn:
    n = f.k

    def plain_fn(points):
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(n, -1)
        mapped = np.empty_like(flat)
        for idx in range(flat.shape[1]):
            mapped[:, idx] = tau_n(x, flat[:, idx], tau)
        return f(mapped.reshape(pts.shape))

    def jet_fn(center, orders):
        pts = np.asarray(center, dtype=float)
        batch = pts.shape[1:]
        flat = pts.reshape(n, -1)
        dims = tuple(o + 1 for o in orders)
        out = np.zeros(dims + (f.d,) + (flat.shape[1],), dtype=complex)
        for idx in range(flat.shape[1]):
            jloc = _compact_pullback_jet_single(f, x, flat[:, idx], orders, tau)
            out[..., idx] = jloc.coeffs
        return Jet(pts, tuple(orders), out.reshape(dims + (f.d,) + batch))

    return SymbolFn(n, f.d, jet_fn, f.profile, f.system, plain_fn=plain_fn,
                    decay_radius=f.decay_radius)


def _compact_pullback_jet_single(f, x, y0, orders, tau):
    """Jet of ``y -> f(tau_x(y))`` at one point: build the jets of the
    mapped coordinates and substitute them into f's Taylor table."""
    n = len(y0)
    total = sum(orders)
    if n == 1:
        coeffs = tau1_jet(float(x[0]), float(y0[0]), total, tau)
        inner = Jet(np.asarray(y0, float), tuple(orders), coeffs.astype(complex))
        inner_list = [inner]
        mapped0 = np.array([coeffs[0]])
    else:
        inner_list = []
        mapped0 = tau_n(x, y0, tau)
        chi_series = [_chi_margin_series(float(yj), tau.eps, total) for yj in y0]
        for j in range(n):
            # time argument t_j(y) = x_j * prod_i chi(y_i) as a jet in y
            tj = None
            for i in range(n):
                ci = np.zeros(tuple(o + 1 for o in orders), dtype=complex)
                for a_pow in range(total + 1):
                    idx = tuple(a_pow if ax == i else 0 for ax in range(n))
                    if all(v <= o for v, o in zip(idx, orders)):
                        ci[idx] = chi_series[i][a_pow]
                cj = Jet(np.asarray(y0, float), tuple(orders), ci)
                tj = cj if tj is None else jets.jet_mul(tj, cj)
            tj = jets.jet_scale(tj, float(x[j]))
            yj = jets.jet_var(j, np.asarray(y0, float), tuple(orders))
            # 2-variable Taylor table of tau1 at (t_j0, y_j0)
            t0 = float(np.real(tj.constant_term))
            table = np.zeros((total + 1, total + 1), dtype=complex)
            for kk in range(total + 1):
                for ll in range(total + 1 - kk):
                    table[kk, ll] = tau_partials(kk, ll, t0, float(y0[j]), tau) / (
                        math.factorial(kk) * math.factorial(ll)
                    )
            inner_list.append(jets.jet_poly_substitute(table, [tj, yj]))
    fj = f.jet(np.asarray(mapped0, dtype=float), (total,) * n)
    comps = []
    for a in range(f.d):
        table = fj.coeffs[(slice(None),) * n + (a,)]
        comps.append(jets.jet_poly_substitute(table, inner_list).coeffs)
    return Jet(np.asarray(y0, float), tuple(orders), np.stack(comps, axis=len(orders)))


def action_order_profile(spec: ActionSpec, base: OrderProfile, max_mu: int = 3) -> OrderProfile:
    """Declared profile of ``x -> alpha_x(f)`` on the function-space
    seminorms; the type is always 0.

    Translation acts on symbol seminorms ``(q, mu)`` with order
    ``|m(q) - rho(q) |mu||``; the phase action acts on Schwartz
    seminorms ``(m, mu)`` with order ``|mu|``; the compact action acts
    on C^infinity seminorms ``(K, l)`` with order ``b_1 + ... + b_l``,
    ``b_j = 2j + 1``.
    """
    order: dict[str, float] = {}
    if spec.kind == "translation":
        for q in base.names():
            for mu in range(max_mu + 1):
                order[f"{q}|mu={mu}"] = abs(base.order[q] - base.rho[q] * mu)
    elif spec.kind == "phase":
        for m in range(max_mu + 1):
            for mu in range(max_mu + 1):
                order[f"schwartz m={m}|mu={mu}"] = float(mu)
    else:
        for lev in range(max_mu + 1):
            order[f"K|l={lev}"] = float(sum(2 * j + 1 for j in range(1, lev + 1)))
    return OrderProfile(order, {name: 0.0 for name in order})
