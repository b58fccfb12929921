"""Deformed bilinear maps from covariant actions, with concrete
instances and property suites.

The deformed value is the oscillatory integral of the covariant symbol
``(p, x) -> mu(alpha_{theta p} v, alpha_x w)``, evaluated pointwise
through the evaluation map.  For the translation action on pointwise
products this gives the star product

    (f x_theta g)(x) = (2 pi)^{-n} int dp dy e^{i<p,y>}
                        f(x + theta p) g(x + y),

computed three independent ways: via the regularized quadrature
machinery (the path under test), via absolutely convergent direct
quadrature after substituting u = x + theta p, v = x + y (requires
invertible theta and rapidly decaying factors), and via the derivative
series ``sum (i theta)^m / m! f^(m) g^(m)`` obtained from the Fourier
kernel of the substituted integral.

Nested identities (theta-additivity, associativity, the module law)
iterate the integral: the inner deformed product is tabulated exactly
on the nodes the outer quadrature needs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import actions as actions_mod
from . import jets, oscint, symbols
from ._quadrature import gauss_panels, panels_for
from .actions import ActionSpec, CompactTau
from .oscint import IntegralResult, Pairing, QuadraturePlan
from .symbols import Bilinear, SymbolFn, SymbolUsageError

__all__ = [
    "DeformationParams",
    "CovariantBilinear",
    "PropertyRow",
    "moyal_product",
    "moyal_series",
    "moyal_direct",
    "moyal_direct_batch",
    "twisted_convolution",
    "deform_bilinear",
    "module_deform",
    "local_nc_product",
    "additivity_residual",
    "associativity_residual",
    "certify_schwartz",
    "property_suite",
    "property_report_jsonl",
    "property_report_csv",
]


@dataclass(frozen=True)
class DeformationParams:
    n: int
    theta: np.ndarray
    pairing: Pairing | None = None
    plan: QuadraturePlan | None = None

    def theta_matrix(self) -> np.ndarray:
        th = np.asarray(self.theta, dtype=float)
        if th.ndim == 0:
            th = th.reshape(1, 1)
        if th.shape != (self.n, self.n):
            raise SymbolUsageError("theta must be an n x n real matrix")
        return th

    @property
    def is_skew(self) -> bool:
        th = self.theta_matrix()
        return bool(np.allclose(th.T, -th, atol=1e-14))


@dataclass
class CovariantBilinear:
    """Covariant bilinear map: actions on both arguments plus the
    pairing of values; the certificate samples the covariance identity
    ``alpha_x(mu(v, w)) = mu(alpha_x v, beta_x w)`` on a grid."""

    left: ActionSpec
    right: ActionSpec
    bilinear: Bilinear = field(default_factory=Bilinear.scalar_multiply)

    def certify(self, v: SymbolFn, w: SymbolFn, xs, grid_pts) -> float:
        worst = 0.0
        pts = np.asarray(grid_pts, dtype=float)
        for x in xs:
            x = np.asarray(x, dtype=float).reshape(self.left.n)
            lhs_sym = symbols.pointwise_product(v, w, self.bilinear)
            lhs = act_values(self.left, x, lhs_sym, pts)
            rhs = self.bilinear.apply(
                act_values(self.left, x, v, pts), act_values(self.right, x, w, pts)
            )
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst


def act_values(spec: ActionSpec, x, f: SymbolFn, pts) -> np.ndarray:
    return actions_mod.act(spec, x, f)(pts)


# ---------------------------------------------------------------------------
# Schwartz certification gate


def certify_schwartz(f: SymbolFn, grid: symbols.GridSpec | None = None) -> bool:
    """Grid certificate that ``f`` decays faster than any tested power:
    no weighted estimate may keep growing through the boundary shell."""
    grid = grid if grid is not None else symbols.GridSpec(129, 12.0)
    mus = [tuple(int(i == j) for j in range(f.k)) for i in range(f.k)]
    rows = symbols.schwartz_report(f, (0, 2, 4), [(0,) * f.k] + mus, grid)
    return not any(r.diverging for r in rows)


def _require_schwartz(*fs: SymbolFn) -> None:
    for f in fs:
        if not certify_schwartz(f):
            raise SymbolUsageError("factor fails the rapid-decay certificate")


# ---------------------------------------------------------------------------
# the three Moyal evaluators


def _decay(f: SymbolFn, default: float = 8.0) -> float:
    return default if f.decay_radius is None else float(f.decay_radius)


def moyal_series(f: SymbolFn, g: SymbolFn, theta: float, x, terms: int = 20) -> complex:
    """Truncated derivative series ``sum_m (i theta)^m/m! f^(m) g^(m)``
    at a point (one dimension)."""
    if f.k != 1 or g.k != 1:
        raise SymbolUsageError("the series oracle is one-dimensional")
    x = np.asarray([float(np.atleast_1d(x)[0])])
    jf = f.jet(x, (terms,))
    jg = g.jet(x, (terms,))
    total = 0.0 + 0.0j
    for m_idx in range(terms + 1):
        fm = jf.coeffs[(m_idx, 0)] * math.factorial(m_idx)
        gm = jg.coeffs[(m_idx, 0)] * math.factorial(m_idx)
        total += (1j * theta) ** m_idx / math.factorial(m_idx) * fm * gm
    return complex(total)


def _uniform_grid(
    radius: float,
    freq: float,
    center: float = 0.0,
    oversample: float = 6.0,
    min_per_unit: float = 4.0,
):
    """Uniform trapezoid grid resolving oscillation frequency ``freq``
    (radians per unit) with ``oversample`` points per period."""
    per_unit = max(min_per_unit, oversample * freq / (2.0 * math.pi))
    count = int(math.ceil(2.0 * radius * per_unit)) + 1
    nodes = np.linspace(center - radius, center + radius, count)
    h = nodes[1] - nodes[0] if count > 1 else 2.0 * radius
    return nodes, h


def moyal_direct_batch(f: SymbolFn, g: SymbolFn, theta: float, xs) -> np.ndarray:
    """Direct absolutely convergent evaluation at many points (n = 1).

    After substituting the integration variables the integrand is
    jointly rapidly decreasing; the anti-diagonal sum reduction makes a
    whole batch of evaluation points as cheap as one.
    """
    if theta == 0.0:
        xs_arr = np.asarray(xs, dtype=float).reshape(1, -1)
        return (f(xs_arr) * g(xs_arr))[0]
    xs_arr = np.asarray(xs, dtype=float).ravel()
    xmax = float(np.max(np.abs(xs_arr))) if len(xs_arr) else 0.0
    ru = _decay(f) + xmax + 2.0
    rv = _decay(g) + xmax + 2.0
    un, hu = _uniform_grid(ru, rv / abs(theta))
    vn, hv = _uniform_grid(rv, ru / abs(theta))
    fu = f(un[None, :])[0] * hu
    gv = g(vn[None, :])[0] * hv
    T = np.outer(fu, gv) * np.exp(1j * np.outer(un, vn) / theta)
    phase_x = np.exp(1j * (xs_arr**2) / theta)
    right = np.exp(-1j * np.outer(vn, xs_arr) / theta)
    W = T @ right  # (u, x)
    left = np.exp(-1j * np.outer(un, xs_arr) / theta)
    vals = phase_x * np.sum(left * W, axis=0)
    return vals / (2.0 * math.pi * abs(theta))


def moyal_direct(f: SymbolFn, g: SymbolFn, theta, x) -> complex:
    """Direct absolutely convergent quadrature of the substituted
    integrand (theta invertible or zero)."""
    th = np.asarray(theta, dtype=float)
    if th.ndim == 0 or th.shape == (1, 1):
        return complex(moyal_direct_batch(f, g, float(th.reshape(-1)[0]), [x])[0])
    return _moyal_direct_nd(f, g, th, np.asarray(x, dtype=float))


def _moyal_direct_nd(f: SymbolFn, g: SymbolFn, th: np.ndarray, x: np.ndarray) -> complex:
    """Two-dimensional direct evaluator.

    The coupling phase ``exp(i (theta^{-1} U, V))`` is kept as per-pair
    matrices, which requires theta^{-1} to be diagonal or anti-diagonal
    (skew multiples of the symplectic form qualify); the contraction
    then runs as dense matrix products.
    """
    n = th.shape[0]
    if n != 2:
        raise SymbolUsageError("the direct evaluator covers n in {1, 2}")
    if f.k != n or g.k != n or x.shape != (n,):
        raise SymbolUsageError("dimension mismatch in the direct evaluator")
    det = np.linalg.det(th)
    if abs(det) < 1e-14:
        raise SymbolUsageError("direct quadrature needs invertible theta")
    inv = np.linalg.inv(th)
    diag = inv[0, 1] == 0.0 and inv[1, 0] == 0.0
    anti = inv[0, 0] == 0.0 and inv[1, 1] == 0.0
    if not (diag or anti):
        raise SymbolUsageError(
            "direct n=2 evaluation needs a diagonal or anti-diagonal theta inverse"
        )
    ru = _decay(f) + float(np.max(np.abs(x))) + 2.0
    rv = _decay(g) + float(np.max(np.abs(x))) + 2.0
    amax = float(np.max(np.abs(inv)))
    un, hu = _uniform_grid(ru, amax * rv)
    vn, hv = _uniform_grid(rv, amax * ru)
    U1, U2 = np.meshgrid(un, un, indexing="ij")
    V1, V2 = np.meshgrid(vn, vn, indexing="ij")
    # phase = (inv(U - x), V - x)
    #       = (inv U, V) - (inv^T x, U) - (inv x, V) + (inv x, x)
    pu = f(np.stack([U1.ravel(), U2.ravel()]))[0].reshape(U1.shape) * hu**2
    pu = pu * np.exp(-1j * ((inv.T @ x)[0] * U1 + (inv.T @ x)[1] * U2))
    pv = g(np.stack([V1.ravel(), V2.ravel()]))[0].reshape(V1.shape) * hv**2
    pv = pv * np.exp(-1j * ((inv @ x)[0] * V1 + (inv @ x)[1] * V2))
    phase_c = np.exp(1j * float(np.dot(inv @ x, x)))
    if diag:
        # (inv U, V) = inv00 U1 V1 + inv11 U2 V2
        Ea = np.exp(1j * inv[0, 0] * np.outer(un, vn))
        Eb = np.exp(1j * inv[1, 1] * np.outer(un, vn))
        total = np.sum((Ea.T @ pu @ Eb) * pv)
    else:
        # (inv U, V) = inv01 U2 V1 + inv10 U1 V2
        Ea = np.exp(1j * inv[0, 1] * np.outer(un, vn))  # pairs (U2, V1)
        Eb = np.exp(1j * inv[1, 0] * np.outer(un, vn))  # pairs (U1, V2)
        T1 = pu @ Ea  # (U1, V1)
        T2 = Eb @ pv.T  # (U1, V1)
        total = np.sum(T1 * T2)
    return complex(phase_c * total / ((2.0 * math.pi) ** n * abs(det)))


def _moyal_plan(f: SymbolFn, g: SymbolFn, theta_mat: np.ndarray, x: np.ndarray,
                plan: QuadraturePlan | None) -> QuadraturePlan:
    base = plan if plan is not None else QuadraturePlan()
    if plan is not None and (plan.radius_p is not None or plan.radius_x is not None):
        return base
    xmax = float(np.max(np.abs(x))) if x.size else 0.0
    sig = np.linalg.svd(theta_mat, compute_uv=False)
    smin = float(sig[-1]) if np.all(sig > 1e-14) else 0.0
    if smin > 0.0:
        rp = min(base.radius / smin, (_decay(f) + xmax + 2.0) / smin)
    else:
        rp = base.radius
    rx = _decay(g) + xmax + 2.0 if g.decay_radius is not None else base.radius
    return replace(base, radius_p=rp, radius_x=rx)


def moyal_product(
    f: SymbolFn,
    g: SymbolFn,
    theta,
    x,
    plan: QuadraturePlan | None = None,
    method: str = "oscillatory",
    series_terms: int = 20,
    certify: bool = True,
):
    """Deformed pointwise product of rapidly decaying functions.

    ``method`` selects the evaluator: "oscillatory" (the regularized
    machinery; returns an IntegralResult), "direct" (substituted
    absolutely convergent quadrature), or "series" (the derivative
    series; n = 1 only).
    """
    n = f.k
    if g.k != n:
        raise SymbolUsageError("factors must share a domain dimension")
    th = np.asarray(theta, dtype=float)
    th = th.reshape(1, 1) if th.ndim == 0 else th
    x = np.asarray(x, dtype=float).reshape(n)
    if certify:
        _require_schwartz(f, g)
    if method == "series":
        if n != 1:
            raise SymbolUsageError("the series oracle is one-dimensional")
        return moyal_series(f, g, float(th[0, 0]), x, terms=series_terms)
    if method == "direct":
        return moyal_direct(f, g, th if n > 1 else float(th[0, 0]), x)
    if method != "oscillatory":
        raise SymbolUsageError(f"unknown moyal method {method!r}")
    F = deformed_symbol_translation(f, g, th, x)
    use_plan = _moyal_plan(f, g, th, x, plan)
    return oscint.oscillatory_integral(F, use_plan, Pairing(n))


def deformed_symbol_translation(f: SymbolFn, g: SymbolFn, th: np.ndarray, x: np.ndarray) -> SymbolFn:
    """The covariant symbol ``(p, y) -> f(x + theta p) g(x + y)``.

    Both factors are declared with order 0 and type 0 (true for bounded
    rapidly decaying functions, and honest on the joint domain where
    each factor is constant along the other group of variables).
    """
    n = f.k
    k = 2 * n
    Lp = np.concatenate([th, np.zeros((n, n))], axis=1)
    Lx = np.concatenate([np.zeros((n, n)), np.eye(n)], axis=1)
    fp = symbols.affine_map_symbol(f, x, Lp, k, m=0.0, rho=0.0)
    gx = symbols.affine_map_symbol(g, x, Lx, k, m=0.0, rho=0.0)
    return symbols.pointwise_product(fp, gx)


def twisted_convolution(
    f: SymbolFn,
    g: SymbolFn,
    theta,
    x,
    certify: bool = True,
    refine: bool = True,
) -> tuple[complex, float]:
    """Convolution against the multiplicative phase:
    ``int dy e^{i<x, theta y>} f(y) g(x - y)``; plain absolutely
    convergent quadrature.  Returns (value, refinement difference)."""
    n = f.k
    th = np.asarray(theta, dtype=float)
    th = th.reshape(1, 1) if th.ndim == 0 else th
    if th.shape != (n, n):
        raise SymbolUsageError("theta must be n x n")
    if not np.allclose(th.T, -th, atol=1e-14):
        raise SymbolUsageError("twisted convolution requires skew theta")
    if certify:
        _require_schwartz(f, g)
    x = np.asarray(x, dtype=float).reshape(n)
    r = max(_decay(f), _decay(g) + float(np.max(np.abs(x)))) + 2.0
    freq = float(np.max(np.abs(th.T @ x))) if n else 0.0

    def level(mult: float) -> complex:
        nodes, h = _uniform_grid(r, freq, oversample=6.0 * mult, min_per_unit=4.0 * mult)
        mesh = np.stack(np.meshgrid(*([nodes] * n), indexing="ij")).reshape(n, -1)
        phase = np.exp(1j * (th.T @ x) @ mesh)
        vals = f(mesh)[0] * g(x[:, None] - mesh)[0] * phase
        return complex(np.sum(vals) * h**n)

    v1 = level(1.0)
    if not refine:
        return v1, 0.0
    v2 = level(1.5)
    return v2, abs(v2 - v1)


# ---------------------------------------------------------------------------
# generic deformed bilinear map


def deform_bilinear(
    cb: CovariantBilinear,
    params: DeformationParams,
    v: SymbolFn,
    w: SymbolFn,
    eval_point,
    plan: QuadraturePlan | None = None,
):
    """Deformed value ``I(mu(alpha_{theta p} v, alpha_x w))`` evaluated
    at a point of the function target (composition with the evaluation
    map).  Supports the three built-in action variants with the
    pointwise product."""
    if cb.bilinear.tensor.shape != (1, 1, 1):
        raise SymbolUsageError("deform_bilinear supports the scalar pointwise pairing")
    n = params.n
    th = params.theta_matrix()
    y0 = np.asarray(eval_point, dtype=float).reshape(n)
    kinds = (cb.left.kind, cb.right.kind)
    if kinds == ("translation", "translation"):
        return moyal_product(v, w, th, y0, plan=plan if plan is not None else params.plan,
                             certify=False)
    if kinds == ("phase", "phase"):
        return _deformed_phase_value(cb, th, v, w, y0, plan if plan is not None else params.plan)
    if kinds == ("compact", "compact"):
        return local_nc_product(v, w, cb.left.tau, th, y0,
                                plan if plan is not None else params.plan, certify=False)
    raise SymbolUsageError(f"unsupported action combination {kinds!r}")


def _deformed_phase_value(cb, th, v, w, y0, plan):
    """Phase action: the symbol is ``e^{i(theta p, B y0)} v(y0)
    e^{i(x, B y0)} w(y0)``, separable in (p, x)."""
    n = cb.left.n
    B = np.asarray(cb.left.B, dtype=float)
    c_p = th.T @ (B @ y0)
    c_x = np.asarray(cb.right.B, dtype=float) @ y0
    k = 2 * n
    phase_p = symbols.linear_phase_symbol(np.concatenate([c_p, np.zeros(n)]), k)
    phase_x = symbols.linear_phase_symbol(np.concatenate([np.zeros(n), c_x]), k)
    F = symbols.pointwise_product(phase_p, phase_x)
    vw = complex(v(y0[:, None])[0, 0] * w(y0[:, None])[0, 0])
    res = oscint.oscillatory_integral(F, plan if plan is not None else QuadraturePlan(),
                                      Pairing(n))
    return IntegralResult(res.value * vw, res.err * abs(vw), res.s, res.radius, res.panels)


# ---------------------------------------------------------------------------
# locally noncommutative product (compact action)


class _CompactOrbit(SymbolFn):
    """Scalar symbol ``z -> f(tau_{scale z_axis}(y0))`` on R^k."""

    def __init__(self, f: SymbolFn, y0: float, scale: float, k: int, axis: int, tau: CompactTau):
        if f.k != 1:
            raise SymbolUsageError("compact orbit factors are one-dimensional")
        self._f, self._y0, self._scale, self._axis, self._tau = f, float(y0), float(scale), axis, tau

        def plain_fn(points):
            t = self._scale * np.asarray(points, dtype=float)[axis]
            flat = t.ravel()
            mapped = np.array([actions_mod.tau1(tv, self._y0, tau) for tv in flat])
            return self._f(mapped.reshape((1,) + t.shape))

        def jet_fn(center, orders):
            pts = np.asarray(center, dtype=float)
            batch = pts.shape[1:]
            flat = pts.reshape(k, -1)
            dims = tuple(o + 1 for o in orders)
            out = np.zeros(dims + (1,) + flat.shape[1:], dtype=complex)
            order_t = orders[axis]
            for idx in range(flat.shape[1]):
                t0 = self._scale * flat[axis, idx]
                tj = actions_mod.compact_time_jet(t0, self._y0, order_t, tau)
                tj = tj * (self._scale ** np.arange(order_t + 1))
                fj = self._f.jet(np.array([tj[0]]), (order_t,))
                comp = _compose_complex(fj.coeffs[:, 0], tj.astype(complex))
                sl = [0] * k
                for jdx in range(order_t + 1):
                    sl[axis] = jdx
                    out[tuple(sl) + (0, idx)] = comp[jdx]
            return jets.Jet(pts, tuple(orders), out.reshape(dims + (1,) + batch))

        support = frozenset() if scale == 0.0 or abs(y0) >= 1.0 else frozenset([axis])
        super().__init__(k, 1, jet_fn, symbols.scalar_profile(0.0, 0.0),
                         axes_support=support, plain_fn=plain_fn)


def _compose_complex(outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
    l = len(inner)
    hat = inner.copy()
    hat[0] = 0.0
    res = np.zeros(l, dtype=complex)
    res[0] = outer[len(outer) - 1]
    for j in range(len(outer) - 2, -1, -1):
        full = np.zeros(l, dtype=complex)
        for i in range(l):
            if res[i] != 0.0:
                full[i:] += res[i] * hat[: l - i]
        res = full
        res[0] += outer[j]
    return res


def local_nc_product(
    f: SymbolFn,
    g: SymbolFn,
    tau: CompactTau | None,
    theta,
    y,
    plan: QuadraturePlan | None = None,
    certify: bool = True,
) -> IntegralResult:
    """Deformation of the pointwise product under the compact-support
    pullback action, n = 1: ``I[(p, x) -> f(tau_{theta p}(y))
    g(tau_x(y))]``.  Outside [-1, 1] the integrand is constant and the
    value is ``f(y) g(y)`` up to quadrature tolerance."""
    tau = tau if tau is not None else CompactTau()
    if f.k != 1 or g.k != 1:
        raise SymbolUsageError("the compact instance is one-dimensional")
    th = float(np.asarray(theta, dtype=float).reshape(-1)[0])
    y0 = float(np.asarray(y, dtype=float).reshape(-1)[0])
    if certify:
        _require_schwartz(f, g)
    A = _CompactOrbit(f, y0, th, 2, 0, tau)
    B = _CompactOrbit(g, y0, 1.0, 2, 1, tau)
    F = symbols.pointwise_product(A, B)
    return oscint.oscillatory_integral(F, plan if plan is not None else QuadraturePlan(),
                                       Pairing(1))


# ---------------------------------------------------------------------------
# nested identities: additivity, associativity, module law


def _outer_grid(theta2: float, reach_p: float, reach_x: float, gauss_order: int = 10):
    rp = reach_p / abs(theta2) if theta2 != 0.0 else 40.0
    rx = reach_x
    pn, pw = gauss_panels(rp, panels_for(rp, rx, gauss_order), gauss_order)
    xn, xw = gauss_panels(rx, panels_for(rx, rp, gauss_order), gauss_order)
    return (pn, pw), (xn, xw)


def additivity_residual(f: SymbolFn, g: SymbolFn, theta: float, theta2: float, x0: float) -> float:
    """|(mu_theta)_theta2 (f,g)(x0) - mu_{theta+theta2}(f,g)(x0)|.

    The iterated deformation integrates the inner deformed product over
    the outer (p', x') grid; the inner values are a two-variable kernel
    evaluated exactly on the outer tensor nodes.
    """
    (pn, pw), (xn, xw) = _outer_grid(theta2, _decay(f) + abs(x0) + 2.0, _decay(g) + abs(x0) + 2.0)
    # inner(p', x') = (2 pi |theta|)^{-1} iint f(u) g(v)
    #                 e^{i (u - r)(v - z)/theta} du dv
    # with r = x0 + theta2 p' and z = x0 + x'
    r_nodes = x0 + theta2 * pn
    z_nodes = x0 + xn
    ru = _decay(f) + 2.0
    rv = _decay(g) + 2.0
    rmax = float(np.max(np.abs(r_nodes))) if theta2 != 0.0 else abs(x0)
    zmax = float(np.max(np.abs(z_nodes)))
    un, hu = _uniform_grid(ru, (rv + zmax) / abs(theta))
    vn, hv = _uniform_grid(rv, (ru + rmax) / abs(theta))
    fu = f(un[None, :])[0] * hu
    gv = g(vn[None, :])[0] * hv
    E = np.exp(1j * np.outer(un, vn) / theta)
    # U[z, v] = sum_u f(u) e^{-i u z / theta} E[u, v]
    U = (np.exp(-1j * np.outer(z_nodes, un) / theta) * fu) @ E
    # inner[r, z] = e^{i r z / theta} sum_v U[z, v] g(v) e^{-i r v / theta}
    P = np.exp(-1j * np.outer(vn, r_nodes) / theta) * gv[:, None]
    inner = (U @ P).T * np.exp(1j * np.outer(r_nodes, z_nodes) / theta)
    inner /= 2.0 * math.pi * abs(theta)
    phase = np.exp(1j * np.outer(pn, xn))
    iterated = ((pw[:, None] * xw[None, :]) * phase * inner).sum() / (2.0 * math.pi)
    single = moyal_direct(f, g, theta + theta2, x0)
    return float(abs(iterated - single))


def _tabulate_inner_product(f: SymbolFn, g: SymbolFn, theta: float, z_nodes: np.ndarray):
    return moyal_direct_batch(f, g, theta, z_nodes)


def _nested_outer(left_vals, right_vals, pn, pw, xn, xw):
    phase = np.exp(1j * np.outer(pn, xn))
    return ((pw * left_vals)[:, None] * phase * (xw * right_vals)[None, :]).sum() / (2 * math.pi)


def associativity_residual(f: SymbolFn, g: SymbolFn, h: SymbolFn, theta: float, x0: float) -> float:
    """|((f x g) x h) - (f x (g x h))| at ``x0``: each side iterates the
    deformation with the inner product tabulated on the outer nodes."""
    reach_in = max(_decay(f), _decay(g)) + 2.0
    (pn, pw), (xn, xw) = _outer_grid(theta, reach_in + abs(x0) + 2.0, _decay(h) + abs(x0) + 2.0)
    A = _tabulate_inner_product(f, g, theta, x0 + theta * pn)
    lhs = _nested_outer(A, h(((x0 + xn))[None, :])[0], pn, pw, xn, xw)
    (pn2, pw2), (xn2, xw2) = _outer_grid(
        theta, _decay(f) + abs(x0) + 2.0, max(_decay(g), _decay(h)) + abs(x0) + 4.0
    )
    B = _tabulate_inner_product(g, h, theta, x0 + xn2)
    rhs = _nested_outer(f(((x0 + theta * pn2))[None, :])[0], B, pn2, pw2, xn2, xw2)
    return float(abs(lhs - rhs))


def module_deform(
    mu_algebra,
    mu_module,
    alpha: ActionSpec,
    beta: ActionSpec,
    theta: float,
    a: SymbolFn,
    b: SymbolFn,
    psi: SymbolFn,
    x0: float,
) -> "PropertyRow":
    """Residual of ``(a x_theta b)_theta psi = a_theta (b_theta psi)``
    for the concrete instance: algebra = module = rapidly decaying
    functions, pointwise product and module map, translation actions.
    The covariance of the module map is certified on samples first."""
    if alpha.kind != "translation" or beta.kind != "translation":
        raise SymbolUsageError("the module instance uses translation actions")
    pts = np.linspace(-4.0, 4.0, 41)[None, :]
    worst_cov = 0.0
    for xval in (-1.0, 0.4, 2.0):
        lhs = mu_module(a, psi)(pts + xval)
        rhs = mu_module(symbols.translate_pullback(a, [xval]),
                        symbols.translate_pullback(psi, [xval]))(pts)
        worst_cov = max(worst_cov, float(np.max(np.abs(lhs - rhs))))
    if worst_cov > 1e-10:
        raise SymbolUsageError("module covariance certificate failed")
    residual = associativity_residual(a, b, psi, theta, x0)
    return PropertyRow("module-law", "translation/pointwise", float(x0), residual, 1e-4)


def fourier_intertwining_residual_n1() -> float:
    """Convolution-theorem consistency at theta = 0 (the only skew
    theta in one dimension): the numeric Fourier transform of the
    deformed pointwise product must match the twisted convolution of
    the transforms up to the (2 pi)^{-1/2} normalization."""
    f = symbols.expr_symbol("exp(-x1^2)", m=0.0, rho=0.0, decay_radius=7.0)
    g = symbols.expr_symbol("exp(-(x1-1/2)^2)", m=0.0, rho=0.0, decay_radius=8.0)
    xgrid, h = _uniform_grid(9.0, 3.0)
    prod_vals = (f(xgrid[None, :]) * g(xgrid[None, :]))[0]
    Ff = symbols.expr_symbol("exp(-x1^2/4)/sqrt(2)", m=0.0, rho=0.0, decay_radius=14.0)
    Fg = symbols.expr_symbol(
        "exp(-x1^2/4)/sqrt(2)*(cos(x1/2)-i*sin(x1/2))", m=0.0, rho=0.0, decay_radius=14.0
    )
    worst = 0.0
    for eta in (-1.2, 0.0, 0.8):
        lhs = np.sum(prod_vals * np.exp(-1j * eta * xgrid)) * h / math.sqrt(2 * math.pi)
        rhs, _ = twisted_convolution(Ff, Fg, 0.0, eta, certify=False, refine=False)
        worst = max(worst, abs(lhs - rhs / math.sqrt(2 * math.pi)))
    return float(worst)


def fourier_intertwining_residual_n2(t: float = 0.5) -> float:
    """Skew two-dimensional intertwining: transporting the twisted
    convolution of the (closed-form) Gaussian transforms back with the
    inverse transform must reproduce the deformed product."""
    th = np.array([[0.0, t], [-t, 0.0]])
    f2 = symbols.expr_symbol("exp(-x1^2-x2^2)", m=0.0, rho=0.0, decay_radius=7.0)
    g2 = symbols.expr_symbol("(x1+i*x2)*exp(-x1^2-x2^2)", m=0.0, rho=0.0, decay_radius=8.0)
    Ff = symbols.expr_symbol("exp(-(x1^2+x2^2)/4)/2", m=0.0, rho=0.0, decay_radius=14.0)
    Fg = symbols.expr_symbol(
        "(0-i)/4*(x1+i*x2)*exp(-(x1^2+x2^2)/4)", m=0.0, rho=0.0, decay_radius=14.0
    )
    # common step so eta - y falls on a precomputed difference grid
    per_unit = max(4.0, 6.0 * abs(t) * 10.0 / (2.0 * math.pi))
    h = 1.0 / per_unit
    ny = int(math.ceil(12.0 / h))
    ne = int(math.ceil(10.0 / h))
    y_ax = h * np.arange(-ny, ny + 1)
    e_ax = h * np.arange(-ne, ne + 1)
    Y1, Y2 = np.meshgrid(y_ax, y_ax, indexing="ij")
    Ffy = Ff(np.stack([Y1.ravel(), Y2.ravel()]))[0].reshape(Y1.shape)
    d_ax = h * np.arange(-(ne + ny), ne + ny + 1)
    D1, D2 = np.meshgrid(d_ax, d_ax, indexing="ij")
    Fg_grid = Fg(np.stack([D1.ravel(), D2.ravel()]))[0].reshape(D1.shape)
    nyc = len(y_ax)
    # phase (eta, theta y) = t (eta1 y2 - eta2 y1)
    p_col = np.exp(1j * t * np.outer(e_ax, y_ax))  # index [ie1, iy2]
    p_row = np.exp(-1j * t * np.outer(e_ax, y_ax))  # index [ie2, iy1]
    tw = np.empty((len(e_ax), len(e_ax)), dtype=complex)
    for ie1 in range(len(e_ax)):
        rows = Fg_grid[ie1 + 2 * ny :: -1][:nyc]  # id1 = ie1 - iy1 + 2 ny
        for ie2 in range(len(e_ax)):
            block = rows[:, ie2 + 2 * ny :: -1][:, :nyc]
            integ = Ffy * block * (p_row[ie2][:, None] * p_col[ie1][None, :])
            tw[ie1, ie2] = integ.sum()
    tw *= h * h
    worst = 0.0
    E1g, E2g = np.meshgrid(e_ax, e_ax, indexing="ij")
    for x0 in ([0.0, 0.0], [0.4, -0.2]):
        x0 = np.asarray(x0)
        inv_ft = np.sum(tw * np.exp(1j * (x0[0] * E1g + x0[1] * E2g))) * h * h
        inv_ft /= (2.0 * math.pi) ** 2
        lhs = moyal_direct(f2, g2, th, x0)
        worst = max(worst, abs(lhs - inv_ft))
    return float(worst)


# ---------------------------------------------------------------------------
# property suites


@dataclass(frozen=True)
class PropertyRow:
    identity: str
    instance: str
    point: float
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def default_battery():
    f = symbols.expr_symbol("exp(-x1^2)", m=0.0, rho=0.0, decay_radius=7.0)
    g = symbols.expr_symbol("exp(-(x1-1/2)^2)", m=0.0, rho=0.0, decay_radius=8.0)
    h = symbols.expr_symbol("x1*exp(-x1^2)", m=0.0, rho=0.0, decay_radius=8.0)
    return f, g, h


def property_suite(
    instance: str = "moyal-n1",
    theta: float = 0.2,
    points=(-1.0, 0.0, 1.0),
    quick: bool = False,
) -> list[PropertyRow]:
    """Residuals of the deformation identities on the Gaussian battery."""
    rows: list[PropertyRow] = []
    f, g, h = default_battery()
    if instance == "moyal-n1":
        for x0 in points:
            r = moyal_product(f, g, 0.0, x0, certify=False)
            fg = complex(f(np.array([[x0]]))[0, 0] * g(np.array([[x0]]))[0, 0])
            rows.append(PropertyRow("theta-zero", instance, x0, float(abs(r.value[0] - fg)), 1e-5))
        for x0 in points:
            r = moyal_product(f, symbols.constant_symbol(1.0, 1), theta, x0, certify=False)
            fx = complex(f(np.array([[x0]]))[0, 0])
            rows.append(PropertyRow("identity", instance, x0, float(abs(r.value[0] - fx)), 1e-5))
        for x0 in (points if not quick else points[:1]):
            rows.append(
                PropertyRow(
                    "additivity", instance, x0,
                    additivity_residual(f, g, 0.1, 0.15, x0), 1e-4,
                )
            )
        for x0 in (points if not quick else points[:1]):
            rows.append(
                PropertyRow(
                    "associativity", instance, x0,
                    associativity_residual(f, g, h, theta, x0), 1e-4,
                )
            )
        # covariance of the deformed product under simultaneous translation
        for x0 in points:
            shift = 0.7
            lhs = moyal_direct(f, g, theta, x0 + shift)
            rhs = moyal_direct(
                symbols.translate_pullback(f, [shift]), symbols.translate_pullback(g, [shift]),
                theta, x0,
            )
            rows.append(PropertyRow("covariance", instance, x0, float(abs(lhs - rhs)), 1e-8))
        return rows
    if instance == "moyal-n2-star":
        t = theta
        th = np.array([[0.0, t], [-t, 0.0]])
        f2 = symbols.expr_symbol("exp(-x1^2-x2^2)", m=0.0, rho=0.0, decay_radius=7.0)
        g2 = symbols.expr_symbol("(x1+i*x2)*exp(-x1^2-x2^2)", m=0.0, rho=0.0, decay_radius=8.0)
        f2c = symbols.expr_symbol("exp(-x1^2-x2^2)", m=0.0, rho=0.0, decay_radius=7.0)
        g2c = symbols.expr_symbol("(x1-i*x2)*exp(-x1^2-x2^2)", m=0.0, rho=0.0, decay_radius=8.0)
        coarse = QuadraturePlan(gauss_order=8)
        x0v = np.zeros(2)
        lhs = np.conj(
            moyal_product(f2, g2, th, x0v, plan=coarse, certify=False).value[0]
        )
        rhs = moyal_product(g2c, f2c, th, x0v, plan=coarse, certify=False).value[0]
        rows.append(PropertyRow("star", instance, 0.0, float(abs(lhs - rhs)), 1e-3))
        if not quick:
            x0v = np.array([0.5, -0.3])
            lhs = np.conj(moyal_direct(f2, g2, th, x0v))
            rhs = moyal_direct(g2c, f2c, th, x0v)
            rows.append(
                PropertyRow("star", instance, float(x0v[0]), float(abs(lhs - rhs)), 1e-3)
            )
        return rows
    raise SymbolUsageError(f"unknown property instance {instance!r}")


def property_report_jsonl(rows) -> str:
    out = []
    for r in rows:
        out.append(
            json.dumps(
                {
                    "identity": r.identity,
                    "instance": r.instance,
                    "point": r.point,
                    "residual": r.residual,
                    "tolerance": r.tolerance,
                    "pass": r.passed,
                }
            )
        )
    return "\n".join(out) + "\n"


def property_report_csv(rows) -> str:
    lines = ["identity,instance,point,residual,tolerance,pass"]
    for r in rows:
        lines.append(
            f"{r.identity},{r.instance},{r.point!r},{r.residual!r},{r.tolerance!r},{r.passed}"
        )
    return "\n".join(lines) + "\n"
