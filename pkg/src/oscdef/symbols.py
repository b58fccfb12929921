"""Symbols with per-seminorm order/type profiles and their calculus.

A :class:`SymbolFn` is an evaluatable smooth function ``R^k -> C^d``
together with a declared growth profile: for each seminorm ``q`` of the
target an order ``m(q)`` and a type ``rho(q)``, asserting
``q(partial^mu F(x)) <= C (1+|x|^2)^((m - rho|mu|)/2)``.  Grid-based
estimators bound the corresponding weighted suprema from below and flag
declared profiles whose estimates keep growing through the boundary
shell of the grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import exprdsl, jets
from .exprdsl import Expr, VarLayout
from .jets import Jet

__all__ = [
    "SeminormSystem",
    "OrderProfile",
    "SymbolFn",
    "GridSpec",
    "SymbolUsageError",
    "SymbolDomainError",
    "EstimateRow",
    "scalar_system",
    "scalar_profile",
    "expr_symbol",
    "constant_symbol",
    "affine_image_symbol",
    "affine_map_symbol",
    "linear_phase_symbol",
    "seminorm_estimate",
    "check_symbol",
    "differentiate",
    "pointwise_product",
    "outer_product",
    "apply_linear",
    "scalar_power",
    "cutoff_mollify",
    "translate_pullback",
    "gl_pullback",
    "curry",
    "schwartz_seminorm",
    "schwartz_report",
    "bump_chi",
    "report_to_jsonl",
]

DIVERGENCE_SLOPE = 0.05


class SymbolUsageError(ValueError):
    pass


class SymbolDomainError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SeminormSystem:
    """Finite family of weighted max seminorms on C^d.

    Each entry is ``(name, weights)`` with positive weights of length d;
    the seminorm is ``q_w(v) = max_j w_j |v_j|``.
    """

    entries: tuple[tuple[str, np.ndarray], ...]

    def __post_init__(self):
        if not self.entries:
            raise SymbolUsageError("seminorm system must be non-empty")
        for name, w in self.entries:
            if np.any(np.asarray(w) <= 0):
                raise SymbolUsageError(f"seminorm {name!r} has non-positive weights")

    @classmethod
    def make(cls, entries: Iterable[tuple[str, Sequence[float]]]) -> "SeminormSystem":
        return cls(tuple((name, np.asarray(w, dtype=float)) for name, w in entries))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    @property
    def dim(self) -> int:
        return len(self.entries[0][1])

    def weights(self, name: str) -> np.ndarray:
        for n, w in self.entries:
            if n == name:
                return w
        raise SymbolUsageError(f"unknown seminorm {name!r}")

    def value(self, name: str, vecs: np.ndarray) -> np.ndarray:
        """Apply seminorm ``name`` to vectors of shape ``(d,) + batch``."""
        w = self.weights(name)
        return np.max(np.abs(vecs) * w.reshape((-1,) + (1,) * (vecs.ndim - 1)), axis=0)


def scalar_system() -> SeminormSystem:
    return SeminormSystem.make([("abs", [1.0])])


@dataclass(frozen=True)
class OrderProfile:
    """Order map ``m(q)`` and type map ``rho(q)`` over seminorm names."""

    order: Mapping[str, float]
    rho: Mapping[str, float]

    def __post_init__(self):
        if set(self.order) != set(self.rho):
            raise SymbolUsageError("order and type maps must share seminorm names")

    def names(self) -> tuple[str, ...]:
        return tuple(self.order)

    def admissible(self) -> bool:
        return all(-1.0 < r <= 1.0 for r in self.rho.values())

    def le(self, other: "OrderProfile") -> bool:
        return all(self.order[q] <= other.order[q] for q in self.order)

    def map(self, f_order, f_rho) -> "OrderProfile":
        return OrderProfile(
            {q: f_order(m) for q, m in self.order.items()},
            {q: f_rho(r) for q, r in self.rho.items()},
        )


def scalar_profile(m: float, rho: float) -> OrderProfile:
    return OrderProfile({"abs": float(m)}, {"abs": float(rho)})


@dataclass(frozen=True)
class GridSpec:
    """Sampling grid for sup estimation: per-axis counts over a box."""

    counts: tuple[int, ...] | int = 129
    radius: float = 10.0
    mode: str = "uniform"  # or "tanh"

    def __post_init__(self):
        if self.radius <= 0:
            raise SymbolUsageError("grid radius must be positive")
        counts = self.counts if isinstance(self.counts, tuple) else (self.counts,)
        if any(c < 1 for c in counts):
            raise SymbolUsageError("grid needs at least one point per axis")

    def axis_counts(self, k: int) -> tuple[int, ...]:
        if isinstance(self.counts, int):
            return (self.counts,) * k
        if len(self.counts) != k:
            raise SymbolUsageError("grid counts do not match dimension")
        return self.counts

    def axes(self, k: int) -> list[np.ndarray]:
        out = []
        for c in self.axis_counts(k):
            u = np.linspace(-1.0, 1.0, c)
            if self.mode == "tanh":
                stretch = 0.995
                t = np.arctanh(stretch * u) / np.arctanh(stretch)
            else:
                t = u
            out.append(self.radius * t)
        return out

    def points(self, k: int) -> np.ndarray:
        """Full tensor grid, shape (k, total)."""
        axes = self.axes(k)
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh])


class SymbolFn:
    """Evaluatable symbol with jets, a profile, and structure metadata.

    ``jet_fn(center, orders) -> Jet`` must return coefficient tables
    with tail shape ``(d,) + batch`` and be pure; ``axes_support`` lists
    the axes the function actually depends on, which the oscillatory
    quadrature uses to detect separable products.
    """

    def __init__(
        self,
        k: int,
        d: int,
        jet_fn: Callable[[np.ndarray, tuple[int, ...]], Jet],
        profile: OrderProfile,
        system: SeminormSystem | None = None,
        axes_support: frozenset[int] | None = None,
        decay_radius: float | None = None,
        plain_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    ):
        self.k = int(k)
        self.d = int(d)
        self._jet_fn = jet_fn
        self.profile = profile
        self.system = system if system is not None else scalar_system()
        self.axes_support = axes_support if axes_support is not None else frozenset(range(k))
        self.decay_radius = decay_radius
        self._plain_fn = plain_fn
        if self.system.dim != self.d:
            raise SymbolUsageError("seminorm system dimension does not match target")

    @property
    def admissible(self) -> bool:
        return self.profile.admissible()

    def jet(self, center, orders) -> Jet:
        center = np.asarray(center, dtype=float)
        orders = tuple(int(o) for o in orders)
        if center.shape[0] != self.k or len(orders) != self.k:
            raise SymbolUsageError("jet request does not match domain dimension")
        return self._jet_fn(center, orders)

    def __call__(self, points) -> np.ndarray:
        """Plain values, shape ``(d,) + batch``."""
        points = np.asarray(points, dtype=float)
        if self._plain_fn is not None:
            return self._plain_fn(points)
        j = self.jet(points, (0,) * self.k)
        return j.constant_term.reshape((self.d,) + points.shape[1:])

    def product_terms(self) -> list["SymbolFn"]:
        return [self]


def expr_symbol(
    text_or_expr: str | Expr,
    layout: VarLayout | None = None,
    m: float = 0.0,
    rho: float = 0.0,
    decay_radius: float | None = None,
) -> SymbolFn:
    """Scalar symbol backed by a DSL expression."""
    e = exprdsl.parse(text_or_expr) if isinstance(text_or_expr, str) else text_or_expr
    lay = layout if layout is not None else VarLayout.infer(e)
    k = lay.dimension
    support = frozenset(lay.axis(kind, idx) for kind, idx in exprdsl.variables_used(e))

    def jet_fn(center, orders):
        j = exprdsl.eval_jet(e, center, orders, lay)
        return Jet(j.center, j.orders, np.expand_dims(j.coeffs, axis=len(orders)))

    def plain_fn(points):
        return exprdsl.eval_plain(e, points, lay)[None, ...]

    sym = SymbolFn(
        k,
        1,
        jet_fn,
        scalar_profile(m, rho),
        axes_support=support,
        decay_radius=decay_radius,
        plain_fn=plain_fn,
    )
    sym.expr = e
    return sym


def constant_symbol(value, k: int, system: SeminormSystem | None = None) -> SymbolFn:
    value = np.atleast_1d(np.asarray(value, dtype=complex))
    d = value.shape[0]
    sysq = system if system is not None else (
        scalar_system() if d == 1 else SeminormSystem.make([("max", [1.0] * d)])
    )
    profile = OrderProfile({q: 0.0 for q in sysq.names}, {q: 0.0 for q in sysq.names})

    def jet_fn(center, orders):
        batch = center.shape[1:]
        val = value.reshape((d,) + (1,) * len(batch))
        val = np.broadcast_to(val, (d,) + batch)
        return jets.jet_const(val, center, orders)

    return SymbolFn(k, d, jet_fn, profile, sysq, axes_support=frozenset())


def affine_image_symbol(
    f: SymbolFn,
    shift: float,
    direction: Sequence[float],
    k: int,
    m: float | None = None,
    rho: float | None = None,
) -> SymbolFn:
    """Scalar symbol ``z -> f(shift + direction . z)`` on R^k.

    ``f`` must be a one-dimensional scalar symbol.  Jets are exact: the
    chain rule for a linear inner map sends the 1-D Taylor coefficient
    ``t_j`` to ``t_|kappa| * multinomial(|kappa|; kappa) * direction^kappa``.
    """
    if f.k != 1 or f.d != 1:
        raise SymbolUsageError("affine_image_symbol needs a scalar symbol on R^1")
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (k,):
        raise SymbolUsageError("direction length must match dimension")
    support = frozenset(int(i) for i in np.nonzero(direction)[0])
    prof = scalar_profile(
        f.profile.order["abs"] if m is None else m,
        f.profile.rho["abs"] if rho is None else rho,
    )

    def inner_value(points):
        return shift + np.tensordot(direction, points, axes=(0, 0))

    def jet_fn(center, orders):
        total = sum(orders)
        u0 = inner_value(center)
        fj = f.jet(u0[None, ...], (total,))
        batch = center.shape[1:]
        dims = tuple(o + 1 for o in orders)
        coeffs = np.zeros(dims + (1,) + batch, dtype=complex)
        for kappa in np.ndindex(dims):
            s = sum(kappa)
            w = math.factorial(s)
            for ki, Li in zip(kappa, direction):
                if ki and Li == 0.0:
                    w = 0.0
                    break
                w = w / math.factorial(ki) * (Li**ki)
            if w != 0.0:
                coeffs[kappa] = fj.coeffs[s] * w
        return Jet(center, tuple(orders), coeffs)

    def plain_fn(points):
        return f(inner_value(points)[None, ...])

    return SymbolFn(
        k, 1, jet_fn, prof, axes_support=support,
        decay_radius=f.decay_radius, plain_fn=plain_fn,
    )


def affine_map_symbol(
    f: SymbolFn,
    shift: Sequence[float],
    L: np.ndarray,
    k: int,
    m: float | None = None,
    rho: float | None = None,
) -> SymbolFn:
    """Symbol ``z -> f(shift + L z)`` for ``f`` on R^g and ``L`` of shape
    (g, k).

    When every row of ``L`` has at most one nonzero entry the chain rule
    reduces to a reindexing with scale powers; otherwise the jet of
    ``f`` is requested at total order and composed with the linear
    forms.
    """
    shift = np.asarray(shift, dtype=float)
    L = np.asarray(L, dtype=float)
    g = f.k
    if L.shape != (g, k) or shift.shape != (g,):
        raise SymbolUsageError("affine data does not match the symbol domain")
    if f.d != 1:
        raise SymbolUsageError("affine_map_symbol needs a scalar symbol")
    support = frozenset(int(j) for j in range(k) if np.any(L[:, j] != 0.0))
    prof = scalar_profile(
        list(f.profile.order.values())[0] if m is None else m,
        list(f.profile.rho.values())[0] if rho is None else rho,
    )
    monomial = all(np.count_nonzero(L[row]) <= 1 for row in range(g)) and all(
        np.count_nonzero(L[:, col]) <= 1 for col in range(k)
    )
    row_to_col = None
    if monomial:
        row_to_col = [int(np.nonzero(L[row])[0][0]) if np.any(L[row]) else None for row in range(g)]

    def inner_value(points):
        return shift.reshape((g,) + (1,) * (points.ndim - 1)) + np.tensordot(L, points, axes=(1, 0))

    def jet_fn(center, orders):
        u0 = inner_value(center)
        dims = tuple(o + 1 for o in orders)
        batch = center.shape[1:]
        if monomial:
            f_orders = [0] * g
            for row, col in enumerate(row_to_col):
                if col is not None:
                    f_orders[row] = orders[col]
            fj = f.jet(u0, tuple(f_orders))
            out = np.zeros(dims + (1,) + batch, dtype=complex)
            for kappa in np.ndindex(dims):
                idx = [0] * g
                scale = 1.0
                ok = True
                for col, kv in enumerate(kappa):
                    if kv == 0:
                        continue
                    rows = np.nonzero(L[:, col])[0]
                    if len(rows) != 1:
                        ok = False
                        break
                    row = int(rows[0])
                    idx[row] += kv
                    scale *= L[row, col] ** kv
                if not ok or any(i > o for i, o in zip(idx, f_orders)):
                    continue
                out[kappa] = fj.coeffs[tuple(idx)] * scale
            return Jet(center, tuple(orders), out)
        total = sum(orders)
        fj = f.jet(u0, (total,) * g)
        inner_jets = []
        for row in range(g):
            lin = None
            for col in range(k):
                if L[row, col] == 0.0:
                    continue
                term = jets.jet_scale(jets.jet_var(col, center, orders), L[row, col])
                lin = term if lin is None else jets.jet_add(lin, term)
            if lin is None:
                lin = jets.jet_const(0.0, center, orders)
            inner_jets.append(lin)
        table = fj.coeffs[(slice(None),) * g + (0,)]
        return Jet(center, tuple(orders),
                   np.expand_dims(jets.jet_poly_substitute(table, inner_jets).coeffs, axis=k))

    def plain_fn(points):
        return f(inner_value(points))

    return SymbolFn(k, 1, jet_fn, prof, axes_support=support,
                    decay_radius=f.decay_radius, plain_fn=plain_fn)


def linear_phase_symbol(c: Sequence[float], k: int) -> SymbolFn:
    """Scalar symbol ``z -> exp(i c . z)``: order 0, type 0."""
    c = np.asarray(c, dtype=float)
    if c.shape != (k,):
        raise SymbolUsageError("phase vector length must match dimension")
    support = frozenset(int(i) for i in np.nonzero(c)[0])

    def jet_fn(center, orders):
        lin = None
        for axis in range(k):
            if c[axis] == 0.0:
                continue
            term = jets.jet_scale(jets.jet_var(axis, center, orders), 1j * c[axis])
            lin = term if lin is None else lin + term
        if lin is None:
            lin = jets.jet_const(0.0, center, orders)
        j = jets.jet_apply_unary("exp", lin)
        return Jet(j.center, j.orders, np.expand_dims(j.coeffs, axis=len(orders)))

    def plain_fn(points):
        return np.exp(1j * np.tensordot(c, points, axes=(0, 0)))[None, ...]

    return SymbolFn(k, 1, jet_fn, scalar_profile(0.0, 0.0), axes_support=support, plain_fn=plain_fn)


# ---------------------------------------------------------------------------
# grid estimators


@dataclass(frozen=True)
class EstimateRow:
    seminorm: str
    mu: tuple[int, ...]
    m: float
    rho: float
    estimate: float
    diverging: bool


def _weighted_values(F: SymbolFn, mu, m: float, rho: float, grid: GridSpec, qname: str):
    mu = tuple(int(v) for v in mu)
    pts = grid.points(F.k)
    if pts.shape[1] == 0:
        raise SymbolUsageError("empty grid")
    j = F.jet(pts, mu)
    deriv = jets.extract_partial(j, mu)
    qvals = F.system.value(qname, deriv)
    r2 = np.sum(pts**2, axis=0)
    weight = (1.0 + r2) ** (-0.5 * (m - rho * sum(mu)))
    return pts, weight * qvals


def seminorm_estimate(
    F: SymbolFn, q: str, mu, m: float, rho: float, grid: GridSpec | None = None
) -> float:
    """Grid maximum of ``(1+|x|^2)^(-(m-rho|mu|)/2) q(partial^mu F)``.

    A lower bound for the true supremum.
    """
    grid = grid if grid is not None else GridSpec()
    _, vals = _weighted_values(F, mu, m, rho, grid, q)
    return float(np.max(vals))


def _divergence_flag(pts: np.ndarray, vals: np.ndarray) -> bool:
    """Boundary-shell heuristic: flag when the shell maxima of the
    weighted values still grow with radius at the edge of the grid."""
    r = np.sqrt(np.sum(pts**2, axis=0))
    rmax = float(np.max(r))
    if rmax == 0.0:
        return False
    edges = np.array([0.70, 0.80, 0.90, 1.0]) * rmax
    lo = 0.60 * rmax
    maxima, radii = [], []
    for hi in edges:
        sel = (r > lo) & (r <= hi)
        if np.any(sel):
            maxima.append(np.max(vals[sel]))
            radii.append(hi)
        lo = hi
    if len(maxima) < 2 or max(maxima) < 1e-12:
        return False
    logs = np.log(np.maximum(maxima, 1e-300))
    logr = 0.5 * np.log1p(np.asarray(radii) ** 2)
    slope = np.polyfit(logr, logs, 1)[0]
    increasing = all(b > a for a, b in zip(maxima, maxima[1:]))
    return bool(increasing and slope > DIVERGENCE_SLOPE)


def check_symbol(F: SymbolFn, L: int, grid: GridSpec | None = None) -> list[EstimateRow]:
    """Estimate every ``(q, mu)`` with ``|mu| <= L`` against the declared
    profile and flag entries whose grid maxima keep growing through the
    boundary shell."""
    if L < 0:
        raise SymbolUsageError("max derivative order must be >= 0")
    grid = grid if grid is not None else GridSpec()
    rows = []
    for mu in _multi_indices_upto(F.k, L):
        for qname in F.profile.names():
            m = F.profile.order[qname]
            rho = F.profile.rho[qname]
            pts, vals = _weighted_values(F, mu, m, rho, grid, qname)
            rows.append(
                EstimateRow(qname, mu, m, rho, float(np.max(vals)), _divergence_flag(pts, vals))
            )
    return rows


def _multi_indices_upto(k: int, L: int):
    def rec(prefix, remaining, axes_left):
        if axes_left == 0:
            yield tuple(prefix)
            return
        for v in range(remaining + 1):
            yield from rec(prefix + [v], remaining - v, axes_left - 1)

    for total in range(L + 1):
        for mu in rec([], total, k):
            if sum(mu) == total:
                yield mu


def schwartz_seminorm(F: SymbolFn, m: int, mu, grid: GridSpec | None = None, q: str | None = None) -> float:
    """Grid maximum of ``(1+|x|^2)^(m/2) q(partial^mu F)``."""
    grid = grid if grid is not None else GridSpec()
    qname = q if q is not None else F.system.names[0]
    pts, vals = _weighted_values(F, mu, -float(m), 0.0, grid, qname)
    return float(np.max(vals))


def schwartz_report(F: SymbolFn, m_list, mu_list, grid: GridSpec | None = None) -> list[EstimateRow]:
    grid = grid if grid is not None else GridSpec()
    qname = F.system.names[0]
    rows = []
    for m in m_list:
        for mu in mu_list:
            pts, vals = _weighted_values(F, mu, -float(m), 0.0, grid, qname)
            rows.append(
                EstimateRow(qname, tuple(mu), -float(m), 0.0, float(np.max(vals)), _divergence_flag(pts, vals))
            )
    return rows


def report_to_jsonl(rows: list[EstimateRow]) -> str:
    out = []
    for r in rows:
        out.append(
            json.dumps(
                {
                    "seminorm": r.seminorm,
                    "mu": list(r.mu),
                    "m": r.m,
                    "rho": r.rho,
                    "estimate": r.estimate,
                    "diverging": r.diverging,
                }
            )
        )
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# calculus operations


def differentiate(F: SymbolFn, nu) -> SymbolFn:
    """Derivative symbol with profile ``(m - rho |nu|, rho)``."""
    nu = tuple(int(v) for v in nu)
    absnu = sum(nu)

    def jet_fn(center, orders):
        base = F.jet(center, tuple(o + v for o, v in zip(orders, nu)))
        return jets.jet_derivative(base, nu)

    profile = OrderProfile(
        {q: F.profile.order[q] - F.profile.rho[q] * absnu for q in F.profile.names()},
        dict(F.profile.rho),
    )
    return SymbolFn(F.k, F.d, jet_fn, profile, F.system, F.axes_support, F.decay_radius)


@dataclass(frozen=True)
class Bilinear:
    """Continuous bilinear pairing C^{d1} x C^{d2} -> C^{d3}.

    ``tensor[r, a, b]`` gives the coefficient of ``v_a w_b`` in output
    coordinate ``r``; ``constants`` optionally records the continuity
    constants c per output seminorm name used in product estimates.
    """

    tensor: np.ndarray
    constants: Mapping[str, float] | None = None

    @classmethod
    def scalar_multiply(cls) -> "Bilinear":
        return cls(np.ones((1, 1, 1), dtype=complex))

    def apply(self, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        return np.einsum("rab,a...,b...->r...", self.tensor, v, w)


def _product_profile(F: SymbolFn, G: SymbolFn) -> OrderProfile:
    names = [q for q in F.profile.names() if q in set(G.profile.names())]
    if not names:
        names_f, names_g = F.profile.names(), G.profile.names()
        return OrderProfile(
            {"prod": F.profile.order[names_f[0]] + G.profile.order[names_g[0]]},
            {"prod": min(F.profile.rho[names_f[0]], G.profile.rho[names_g[0]])},
        )
    return OrderProfile(
        {q: F.profile.order[q] + G.profile.order[q] for q in names},
        {q: min(F.profile.rho[q], G.profile.rho[q]) for q in names},
    )


class _ProductSymbol(SymbolFn):
    def __init__(self, F, G, bilinear, profile, system):
        self._F, self._G, self._bilinear = F, G, bilinear
        d3 = bilinear.tensor.shape[0]

        def jet_fn(center, orders):
            jf = F.jet(center, orders)
            jg = G.jet(center, orders)
            return _bilinear_jet(bilinear, jf, jg)

        def plain_fn(points):
            return bilinear.apply(F(points), G(points))

        super().__init__(
            F.k, d3, jet_fn, profile, system,
            axes_support=F.axes_support | G.axes_support,
            decay_radius=_min_or_none(F.decay_radius, G.decay_radius),
            plain_fn=plain_fn,
        )

    def product_terms(self):
        if self._bilinear.tensor.shape == (1, 1, 1) and self._bilinear.tensor[0, 0, 0] == 1:
            return self._F.product_terms() + self._G.product_terms()
        return [self]


def _min_or_none(a, b):
    vals = [v for v in (a, b) if v is not None]
    return min(vals) if vals else None


def _bilinear_jet(bilinear: Bilinear, jf: Jet, jg: Jet) -> Jet:
    d3, d1, d2 = bilinear.tensor.shape
    if d1 == d2 == d3 == 1 and bilinear.tensor[0, 0, 0] == 1:
        return jets.jet_mul(jf, jg)
    k = jf.nvars
    comps = []
    for r in range(d3):
        acc = None
        for a in range(d1):
            for b in range(d2):
                c = bilinear.tensor[r, a, b]
                if c == 0:
                    continue
                fa = Jet(jf.center, jf.orders, jf.coeffs[(slice(None),) * k + (a,)])
                gb = Jet(jg.center, jg.orders, jg.coeffs[(slice(None),) * k + (b,)])
                term = jets.jet_scale(jets.jet_mul(fa, gb), c)
                acc = term if acc is None else jets.jet_add(acc, term)
        if acc is None:
            acc = jets.jet_const(np.zeros(jf.tail_shape[1:]), jf.center, jf.orders)
        comps.append(acc.coeffs)
    coeffs = np.stack(comps, axis=k)
    return Jet(jf.center, jf.orders, coeffs)


def pointwise_product(
    F: SymbolFn,
    G: SymbolFn,
    bilinear: Bilinear | None = None,
    system: SeminormSystem | None = None,
) -> SymbolFn:
    """Pointwise pairing of two symbols on the same domain.

    Declared order adds per matching seminorm name; declared type is the
    minimum.
    """
    if F.k != G.k:
        raise SymbolUsageError("pointwise product needs a common domain dimension")
    bilinear = bilinear if bilinear is not None else Bilinear.scalar_multiply()
    if bilinear.tensor.shape[1] != F.d or bilinear.tensor.shape[2] != G.d:
        raise SymbolUsageError("pairing dimensions do not match the factors")
    profile = _product_profile(F, G)
    d3 = bilinear.tensor.shape[0]
    sysq = system if system is not None else (
        scalar_system() if d3 == 1 else SeminormSystem.make([("max", [1.0] * d3)])
    )
    prof_named = OrderProfile(
        {q: list(profile.order.values())[0] for q in sysq.names},
        {q: list(profile.rho.values())[0] for q in sysq.names},
    ) if set(profile.names()) != set(sysq.names) else profile
    return _ProductSymbol(F, G, bilinear, prof_named, sysq)


def outer_product(
    F: SymbolFn,
    G: SymbolFn,
    bilinear: Bilinear | None = None,
    system: SeminormSystem | None = None,
) -> SymbolFn:
    """Symbol ``(x, y) -> pairing(F(x), G(y))`` on the concatenated domain.

    Declared order is ``max(m, m', m+m')``; declared type is
    ``min(0, rho, rho')``.
    """
    bilinear = bilinear if bilinear is not None else Bilinear.scalar_multiply()
    if bilinear.tensor.shape[1] != F.d or bilinear.tensor.shape[2] != G.d:
        raise SymbolUsageError("pairing dimensions do not match the factors")
    k = F.k + G.k
    d3 = bilinear.tensor.shape[0]
    sysq = system if system is not None else (
        scalar_system() if d3 == 1 else SeminormSystem.make([("max", [1.0] * d3)])
    )
    mf = list(F.profile.order.values())[0]
    mg = list(G.profile.order.values())[0]
    rf = list(F.profile.rho.values())[0]
    rg = list(G.profile.rho.values())[0]
    profile = OrderProfile(
        {q: max(mf, mg, mf + mg) for q in sysq.names},
        {q: min(0.0, rf, rg) for q in sysq.names},
    )

    kf = F.k

    def jet_fn(center, orders):
        jf = F.jet(center[:kf], tuple(orders[:kf]))
        jg = G.jet(center[kf:], tuple(orders[kf:]))
        # outer tensor of coefficient tables, paired in the target
        dims_f, dims_g = jf.dims, jg.dims
        batch = center.shape[1:]
        out = np.zeros(dims_f + dims_g + (d3,) + batch, dtype=complex)
        for ka in np.ndindex(dims_f):
            ca = jf.coeffs[ka]
            if not np.any(ca):
                continue
            for kb in np.ndindex(dims_g):
                cb = jg.coeffs[kb]
                if not np.any(cb):
                    continue
                out[ka + kb] = bilinear.apply(ca, cb)
        return Jet(center, tuple(orders), out)

    def plain_fn(points):
        return bilinear.apply(F(points[:kf]), G(points[kf:]))

    sym = SymbolFn(
        k, d3, jet_fn, profile, sysq,
        axes_support=frozenset(F.axes_support) | frozenset(a + kf for a in G.axes_support),
        decay_radius=_min_or_none(F.decay_radius, G.decay_radius),
        plain_fn=plain_fn,
    )
    sym.outer_factors = ((tuple(range(kf)), F), (tuple(range(kf, k)), G))
    return sym


def apply_linear(A: np.ndarray, F: SymbolFn, system: SeminormSystem | None = None,
                 profile: OrderProfile | None = None) -> SymbolFn:
    """Postcompose with a linear map on the target: ``x -> A F(x)``."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[1] != F.d:
        raise SymbolUsageError("matrix shape does not match the symbol target")
    d2 = A.shape[0]
    sysq = system if system is not None else (
        scalar_system() if d2 == 1 else SeminormSystem.make([("max", [1.0] * d2)])
    )
    if profile is None:
        m0 = list(F.profile.order.values())[0]
        r0 = list(F.profile.rho.values())[0]
        profile = OrderProfile({q: m0 for q in sysq.names}, {q: r0 for q in sysq.names})

    def jet_fn(center, orders):
        j = F.jet(center, orders)
        k = j.nvars
        coeffs = np.moveaxis(
            np.tensordot(A, np.moveaxis(j.coeffs, k, 0), axes=(1, 0)), 0, k
        )
        return Jet(j.center, j.orders, coeffs)

    def plain_fn(points):
        return np.tensordot(A, F(points), axes=(1, 0))

    return SymbolFn(F.k, d2, jet_fn, profile, sysq, F.axes_support, F.decay_radius, plain_fn)


def scalar_power(f: SymbolFn, alpha: complex) -> SymbolFn:
    """Power ``f^alpha`` via the principal branch; requires Re(alpha) >= 0
    and values off the cut [0, -inf).  Declared order is Re(alpha) m."""
    alpha = complex(alpha)
    if f.d != 1:
        raise SymbolUsageError("scalar_power needs a scalar symbol")
    if alpha.real < 0:
        raise SymbolUsageError("scalar_power requires Re(alpha) >= 0")

    def jet_fn(center, orders):
        base = f.jet(center, orders)
        k = base.nvars
        comp = Jet(base.center, base.orders, base.coeffs[(slice(None),) * k + (0,)])
        try:
            powered = jets.jet_apply_unary("power", comp, alpha=alpha)
        except jets.JetDomainError as exc:
            raise SymbolDomainError(str(exc)) from exc
        return Jet(powered.center, powered.orders,
                   np.expand_dims(powered.coeffs, axis=len(orders)))

    profile = f.profile.map(lambda m: alpha.real * m, lambda r: r)
    return SymbolFn(f.k, 1, jet_fn, profile, f.system, f.axes_support, f.decay_radius)


def bump_chi(k: int) -> SymbolFn:
    """Radial bump: 1 on the unit ball, supported in the ball of radius 2.

    Built from ``b(u) = exp(-1/u)`` on ``u > 0`` as
    ``chi(x) = b(2 - |x|) / (b(2 - |x|) + b(|x| - 1))``.
    """

    def plain_fn(points):
        r = np.sqrt(np.sum(points**2, axis=0))
        return _chi_radial(r)[None, ...]

    def jet_fn(center, orders):
        batch = center.shape[1:]
        dims = tuple(o + 1 for o in orders)
        r0 = np.sqrt(np.sum(center**2, axis=0))
        if batch:
            out = np.zeros(dims + (1,) + batch, dtype=complex)
            inner = r0 <= 1.0
            mid = (r0 > 1.0) & (r0 < 2.0)
            out[(0,) * k + (0,)][inner] = 1.0
            if np.any(mid):
                idx = np.nonzero(mid)
                jm = _chi_band_jet(center[(slice(None),) + idx], orders)
                for kappa in np.ndindex(dims):
                    out[kappa + (0,)][idx] = jm.coeffs[kappa + (0,)]
            return Jet(center, tuple(orders), out)
        out = np.zeros(dims + (1,), dtype=complex)
        r0s = float(r0)
        if r0s <= 1.0:
            out[(0,) * k + (0,)] = 1.0
            return Jet(center, tuple(orders), out)
        if r0s >= 2.0:
            return Jet(center, tuple(orders), out)
        return _chi_band_jet(center, orders)

    return SymbolFn(
        k, 1, jet_fn, scalar_profile(0.0, 0.0), axes_support=frozenset(range(k)),
        decay_radius=2.0, plain_fn=plain_fn,
    )


def _b_exp(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u, dtype=float)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def _chi_radial(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    num = _b_exp(2.0 - r)
    den = num + _b_exp(r - 1.0)
    with np.errstate(invalid="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    out[r <= 1.0] = 1.0
    return out


def _chi_band_jet(center: np.ndarray, orders) -> Jet:
    """Jet of the bump for centers with radius strictly inside (1, 2)."""
    k = center.shape[0]
    r2 = None
    for axis in range(k):
        v = jets.jet_var(axis, center, orders)
        sq = jets.jet_mul(v, v)
        r2 = sq if r2 is None else jets.jet_add(r2, sq)
    r = jets.jet_apply_unary("sqrt", r2)
    two_minus_r = jets.jet_scale(r, -1.0) + 2.0
    r_minus_one = r - 1.0
    b1 = jets.jet_apply_unary("exp", jets.jet_scale(jets.jet_apply_unary("reciprocal", two_minus_r), -1.0))
    b2 = jets.jet_apply_unary("exp", jets.jet_scale(jets.jet_apply_unary("reciprocal", r_minus_one), -1.0))
    den = jets.jet_add(b1, b2)
    chi = jets.jet_mul(b1, jets.jet_apply_unary("reciprocal", den))
    return Jet(chi.center, chi.orders, np.expand_dims(chi.coeffs, axis=len(orders)))


def cutoff_mollify(F: SymbolFn, eps: float, shift=None) -> SymbolFn:
    """Multiply by the built-in bump ``chi(eps (x - shift))``.

    The result vanishes outside radius ``2/eps`` around ``shift`` and
    equals ``F`` inside radius ``1/eps``.
    """
    if eps <= 0:
        raise SymbolUsageError("mollifier scale must be positive")
    k = F.k
    y = np.zeros(k) if shift is None else np.asarray(shift, dtype=float)
    chi = bump_chi(k)

    base_scaled = _scaled_shifted(chi, eps, y)
    prod = pointwise_product(base_scaled, F, system=F.system) if F.d == 1 else None
    if prod is None:
        # vector targets: multiply every component by the scalar bump
        def jet_fn(center, orders):
            jc = base_scaled.jet(center, orders)
            jf = F.jet(center, orders)
            kv = jc.nvars
            chis = Jet(jc.center, jc.orders, jc.coeffs[(slice(None),) * kv + (0,)])
            comps = []
            for a in range(F.d):
                fa = Jet(jf.center, jf.orders, jf.coeffs[(slice(None),) * kv + (a,)])
                comps.append(jets.jet_mul(chis, fa).coeffs)
            return Jet(jf.center, jf.orders, np.stack(comps, axis=kv))

        def plain_fn(points):
            return base_scaled(points) * F(points)

        prod = SymbolFn(k, F.d, jet_fn, F.profile, F.system, plain_fn=plain_fn)
    prod.decay_radius = 2.0 / eps + float(np.linalg.norm(y))
    return prod


def _scaled_shifted(chi: SymbolFn, eps: float, y: np.ndarray) -> SymbolFn:
    k = chi.k

    def jet_fn(center, orders):
        inner_center = eps * (center - y.reshape((k,) + (1,) * (center.ndim - 1)))
        j = chi.jet(inner_center, orders)
        dims = j.dims
        scale = np.ones(dims)
        for kappa in np.ndindex(dims):
            scale[kappa] = eps ** sum(kappa)
        return Jet(center, j.orders, j.coeffs * scale.reshape(dims + (1,) * len(j.tail_shape)))

    def plain_fn(points):
        return chi(eps * (points - y.reshape((k,) + (1,) * (points.ndim - 1))))

    return SymbolFn(k, 1, jet_fn, chi.profile, chi.system, plain_fn=plain_fn)


def translate_pullback(F: SymbolFn, y) -> SymbolFn:
    """Pullback ``x -> F(x + y)``; declared profile is unchanged."""
    y = np.asarray(y, dtype=float)
    if y.shape != (F.k,):
        raise SymbolUsageError("translation vector must match the domain dimension")

    def jet_fn(center, orders):
        shifted = center + y.reshape((F.k,) + (1,) * (center.ndim - 1))
        j = F.jet(shifted, orders)
        return Jet(center, j.orders, j.coeffs)

    def plain_fn(points):
        return F(points + y.reshape((F.k,) + (1,) * (points.ndim - 1)))

    return SymbolFn(F.k, F.d, jet_fn, F.profile, F.system,
                    axes_support=F.axes_support, plain_fn=plain_fn)


def gl_pullback(F: SymbolFn, A) -> SymbolFn:
    """Pullback ``x -> F(A x)`` for invertible ``A``; profile unchanged."""
    A = np.asarray(A, dtype=float)
    if A.shape != (F.k, F.k):
        raise SymbolUsageError("matrix must be square of the domain dimension")
    if abs(np.linalg.det(A)) < 1e-300:
        raise SymbolUsageError("pullback matrix must be invertible")

    def jet_fn(center, orders):
        total = sum(orders)
        inner_center = np.tensordot(A, center, axes=(1, 0))
        base = F.jet(inner_center, (total,) * F.k)
        inner_jets = []
        for row in range(F.k):
            lin = None
            for col in range(F.k):
                if A[row, col] == 0.0:
                    continue
                term = jets.jet_scale(jets.jet_var(col, center, orders), A[row, col])
                lin = term if lin is None else jets.jet_add(lin, term)
            if lin is None:
                lin = jets.jet_const(0.0, center, orders)
            inner_jets.append(lin)
        comps = []
        kb = base.nvars
        for a in range(F.d):
            table = base.coeffs[(slice(None),) * kb + (a,)]
            comps.append(jets.jet_poly_substitute(table, inner_jets).coeffs)
        return Jet(center, tuple(orders), np.stack(comps, axis=len(orders)))

    def plain_fn(points):
        return F(np.tensordot(A, points, axes=(1, 0)))

    return SymbolFn(F.k, F.d, jet_fn, F.profile, F.system, plain_fn=plain_fn)


def curry(F: SymbolFn, k1: int):
    """Slice a symbol on ``R^{k1+k2}`` into a family over the first block.

    Requires declared type >= 0.  Returns ``(slice_at, induced_profile)``
    where ``slice_at(x1)`` is the symbol ``x2 -> F(x1, x2)`` and the
    induced profile on the slice family has order ``max(0, m(q))`` and
    type 0.
    """
    if any(r < 0 for r in F.profile.rho.values()):
        raise SymbolUsageError("currying requires non-negative declared type")
    if not 0 < k1 < F.k:
        raise SymbolUsageError("block dimension must split the domain")
    k2 = F.k - k1

    def slice_at(x1) -> SymbolFn:
        x1 = np.asarray(x1, dtype=float).reshape(k1)

        def jet_fn(center, orders):
            full_center = np.concatenate(
                [np.broadcast_to(x1.reshape((k1,) + (1,) * (center.ndim - 1)),
                                 (k1,) + center.shape[1:]), center]
            )
            j = F.jet(full_center, (0,) * k1 + tuple(orders))
            coeffs = j.coeffs[(0,) * k1]
            return Jet(center, tuple(orders), coeffs)

        def plain_fn(points):
            full = np.concatenate(
                [np.broadcast_to(x1.reshape((k1,) + (1,) * (points.ndim - 1)),
                                 (k1,) + points.shape[1:]), points]
            )
            return F(full)

        return SymbolFn(k2, F.d, jet_fn, F.profile, F.system, plain_fn=plain_fn)

    induced = F.profile.map(lambda m: max(0.0, m), lambda r: 0.0)
    return slice_at, induced
