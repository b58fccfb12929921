"""Truncated multivariate Taylor (jet) arithmetic.

A jet stores the Taylor coefficients of a function at a point, truncated
at a per-axis order bound.  All arithmetic (sums, truncated Cauchy
products, composition with elementary functions) is exact at the
truncation order, so mixed partials extracted from a jet are exact up to
floating point roundoff.

Coefficient tables are dense numpy arrays over the box of multi-indices
bounded componentwise by the order bound.  A trailing "tail" shape on
the coefficient array carries vector targets and/or evaluation batches;
all operations broadcast over it, which is what makes quadrature over
millions of points affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Jet",
    "JetDomainError",
    "JetUsageError",
    "jet_var",
    "jet_const",
    "jet_add",
    "jet_sub",
    "jet_scale",
    "jet_mul",
    "jet_apply_unary",
    "jet_apply_series",
    "jet_derivative",
    "jet_poly_substitute",
    "extract_partial",
]


class JetUsageError(ValueError):
    """Raised for structurally invalid jet operations (mismatched
    centers or order bounds, out-of-range indices)."""


class JetDomainError(ArithmeticError):
    """Raised when a series composition hits its domain boundary, e.g.
    a power or logarithm whose constant term lies on the cut [0, -inf)."""


@dataclass(frozen=True)
class Jet:
    """Taylor table of a function at ``center``.

    Parameters
    ----------
    center : ndarray, shape (k,) + batch
        Expansion point(s).
    orders : tuple of int
        Per-axis truncation bound; coefficients exist exactly for
        multi-indices ``mu`` with ``mu <= orders`` componentwise.
    coeffs : complex ndarray, shape ``(orders[0]+1, ..., orders[k-1]+1) + tail``
        Entry at index ``mu`` is the Taylor coefficient
        ``partial^mu f(center) / mu!``.
    """

    center: np.ndarray
    orders: tuple[int, ...]
    coeffs: np.ndarray

    @property
    def nvars(self) -> int:
        return len(self.orders)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(o + 1 for o in self.orders)

    @property
    def tail_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[len(self.orders):]

    @property
    def constant_term(self) -> np.ndarray:
        return self.coeffs[(0,) * self.nvars]

    # Operator sugar; the module-level functions are the primary API.
    def __add__(self, other):
        if isinstance(other, Jet):
            return jet_add(self, other)
        return _add_const(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return jet_sub(self, other)
        return _add_const(self, -np.asarray(other))

    def __rsub__(self, other):
        return _add_const(jet_scale(self, -1.0), other)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return jet_scale(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return jet_scale(self, -1.0)


def _check_same_frame(a: Jet, b: Jet) -> None:
    if a.orders != b.orders:
        raise JetUsageError(f"order bounds differ: {a.orders} vs {b.orders}")
    if a.center.shape != b.center.shape or not np.array_equal(a.center, b.center):
        raise JetUsageError("jets are centered at different points")


def jet_var(axis: int, center, orders) -> Jet:
    """Jet of the coordinate function ``x -> x[axis]``."""
    center = np.asarray(center, dtype=float)
    orders = tuple(int(o) for o in orders)
    k = len(orders)
    if center.shape[0] != k:
        raise JetUsageError("center dimension does not match order bounds")
    if not 0 <= axis < k:
        raise JetUsageError(f"axis {axis} out of range for dimension {k}")
    batch = center.shape[1:]
    dims = tuple(o + 1 for o in orders)
    coeffs = np.zeros(dims + batch, dtype=complex)
    coeffs[(0,) * k] = center[axis]
    if orders[axis] >= 1:
        idx = tuple(1 if j == axis else 0 for j in range(k))
        coeffs[idx] = 1.0
    return Jet(center, orders, coeffs)


def jet_const(value, center, orders) -> Jet:
    """Jet of a constant; scalar values broadcast over the center's
    batch, array values supply the tail shape themselves."""
    center = np.asarray(center, dtype=float)
    orders = tuple(int(o) for o in orders)
    value = np.asarray(value, dtype=complex)
    if value.ndim == 0:
        value = np.broadcast_to(value, center.shape[1:])
    dims = tuple(o + 1 for o in orders)
    coeffs = np.zeros(dims + value.shape, dtype=complex)
    coeffs[(0,) * len(orders)] = value
    return Jet(center, orders, coeffs)


def _add_const(a: Jet, value) -> Jet:
    coeffs = a.coeffs.copy()
    coeffs[(0,) * a.nvars] = coeffs[(0,) * a.nvars] + np.asarray(value)
    return Jet(a.center, a.orders, coeffs)


def jet_add(a: Jet, b: Jet) -> Jet:
    _check_same_frame(a, b)
    return Jet(a.center, a.orders, a.coeffs + b.coeffs)


def jet_sub(a: Jet, b: Jet) -> Jet:
    _check_same_frame(a, b)
    return Jet(a.center, a.orders, a.coeffs - b.coeffs)


def jet_scale(a: Jet, c) -> Jet:
    return Jet(a.center, a.orders, a.coeffs * c)


def jet_mul(a: Jet, b: Jet) -> Jet:
    """Truncated Cauchy product of two jets sharing center and bounds.

    Splits are accumulated over unordered index pairs in a canonical
    order, which makes the product exactly commutative in floating
    point; all-zero coefficient slices are skipped, which pays off for
    the sparse jets (coordinates, linear phases) that dominate."""
    _check_same_frame(a, b)
    dims = a.dims
    tail = np.broadcast_shapes(a.tail_shape, b.tail_shape)
    out = np.zeros(dims + tail, dtype=complex)
    a_nz = {ia for ia in np.ndindex(dims) if np.any(a.coeffs[ia])}
    b_nz = {ib for ib in np.ndindex(dims) if np.any(b.coeffs[ib])}
    for kappa in np.ndindex(dims):
        acc = out[kappa]
        for alpha in np.ndindex(tuple(v + 1 for v in kappa)):
            beta = tuple(kv - av for kv, av in zip(kappa, alpha))
            if alpha > beta:
                continue
            if alpha == beta:
                if alpha in a_nz and alpha in b_nz:
                    acc += a.coeffs[alpha] * b.coeffs[alpha]
                continue
            left = a.coeffs[alpha] * b.coeffs[beta] if (alpha in a_nz and beta in b_nz) else None
            right = a.coeffs[beta] * b.coeffs[alpha] if (beta in a_nz and alpha in b_nz) else None
            if left is not None and right is not None:
                acc += left + right
            elif left is not None:
                acc += left
            elif right is not None:
                acc += right
        out[kappa] = acc
    return Jet(a.center, a.orders, out)


def jet_apply_series(dcoeffs, a: Jet) -> Jet:
    """Compose a univariate Taylor series with a jet.

    ``dcoeffs`` is a sequence of arrays ``d_j = g^(j)(a0)/j!`` for the
    outer function ``g`` expanded at the constant term ``a0`` of ``a``.
    The composition is evaluated by Horner's scheme on the non-constant
    part of ``a`` and is exact at the truncation order.
    """
    ahat = a.coeffs.copy()
    ahat[(0,) * a.nvars] = 0.0
    ahat = Jet(a.center, a.orders, ahat)
    n = len(dcoeffs) - 1
    result = jet_const(np.asarray(dcoeffs[n], dtype=complex), a.center, a.orders)
    for j in range(n - 1, -1, -1):
        result = jet_mul(result, ahat)
        result = _add_const(result, dcoeffs[j])
    return result


def _on_log_cut(z: np.ndarray) -> bool:
    return bool(np.any((z.imag == 0.0) & (z.real <= 0.0)))


def jet_apply_unary(f: str, a: Jet, alpha: complex | None = None) -> Jet:
    """Jet of an elementary function composed with ``a``.

    ``f`` is one of ``exp``, ``sin``, ``cos``, ``reciprocal``, ``log``
    (principal branch), ``sqrt`` or ``power`` (with exponent ``alpha``).
    For ``log``, ``sqrt`` and ``power`` the constant term must avoid the
    cut [0, -inf); ``reciprocal`` only needs it nonzero.
    """
    a0 = np.asarray(a.constant_term)
    n = sum(a.orders)
    j = np.arange(n + 1)
    fact = _factorials(n).reshape((-1,) + (1,) * a0.ndim)
    jcol = j.reshape((-1,) + (1,) * a0.ndim)
    if f == "exp":
        d = np.broadcast_to(np.exp(a0)[None, ...], (n + 1,) + a0.shape) / fact
    elif f == "sin":
        d = np.sin(a0[None, ...] + jcol * (np.pi / 2)) / fact
    elif f == "cos":
        d = np.cos(a0[None, ...] + jcol * (np.pi / 2)) / fact
    elif f == "reciprocal":
        if np.any(a0 == 0):
            raise JetDomainError("reciprocal of a jet with zero constant term")
        d = (-1.0) ** jcol * a0[None, ...] ** (-(jcol + 1))
    elif f == "log":
        if _on_log_cut(a0):
            raise JetDomainError(f"log constant term on the cut [0,-inf): {_cut_point(a0)}")
        d = [np.log(a0)]
        for m in range(1, n + 1):
            d.append((-1.0) ** (m - 1) / (m * a0**m))
        d = np.stack(np.broadcast_arrays(*d)) if n >= 1 else np.asarray(d)
    elif f in ("sqrt", "power"):
        exponent = 0.5 if f == "sqrt" else complex(alpha)
        if _on_log_cut(a0):
            raise JetDomainError(f"power base on the cut [0,-inf): {_cut_point(a0)}")
        loga0 = np.log(a0)
        d = []
        coef = np.ones_like(a0)
        for m in range(0, n + 1):
            d.append(coef * np.exp((exponent - m) * loga0))
            coef = coef * (exponent - m) / (m + 1)
        d = np.stack(np.broadcast_arrays(*d)) if n >= 1 else np.asarray(d)
    else:
        raise JetUsageError(f"unknown elementary function tag {f!r}")
    return jet_apply_series(list(d), a)


def _cut_point(a0: np.ndarray):
    bad = (a0.imag == 0.0) & (a0.real <= 0.0)
    return complex(np.asarray(a0)[bad].flat[0]) if a0.ndim else complex(a0)


_FACT_CACHE: dict[int, np.ndarray] = {}


def _factorials(n: int) -> np.ndarray:
    arr = _FACT_CACHE.get(n)
    if arr is None:
        arr = np.array([math.factorial(j) for j in range(n + 1)], dtype=float)
        _FACT_CACHE[n] = arr
    return arr


def jet_derivative(a: Jet, nu) -> Jet:
    """Jet of ``partial^nu f`` with order bounds reduced by ``nu``."""
    nu = tuple(int(v) for v in nu)
    if len(nu) != a.nvars or any(v < 0 for v in nu):
        raise JetUsageError("derivative multi-index has wrong shape")
    if any(v > o for v, o in zip(nu, a.orders)):
        raise JetUsageError(f"derivative {nu} exceeds order bounds {a.orders}")
    new_orders = tuple(o - v for o, v in zip(a.orders, nu))
    sl = tuple(slice(v, v + no + 1) for v, no in zip(nu, new_orders))
    sub = a.coeffs[sl]
    new_dims = tuple(o + 1 for o in new_orders)
    scale = np.ones(new_dims)
    for kappa in np.ndindex(new_dims):
        r = 1.0
        for ki, vi in zip(kappa, nu):
            r *= math.factorial(ki + vi) / math.factorial(ki)
        scale[kappa] = r
    scale = scale.reshape(new_dims + (1,) * len(a.tail_shape))
    return Jet(a.center, new_orders, sub * scale)


def jet_poly_substitute(coeff_table: np.ndarray, inner: list[Jet]) -> Jet:
    """Evaluate a truncated Taylor polynomial on jets.

    ``coeff_table`` holds Taylor coefficients ``c_kappa`` of an outer
    function expanded at the constant terms of the ``inner`` jets, whose
    box shape leads the array (a tail may follow).  Returns
    ``sum_kappa c_kappa * prod_i (inner[i] - inner[i].const)^kappa_i``.
    """
    if not inner:
        raise JetUsageError("need at least one inner jet")
    frame = inner[0]
    dims_f = coeff_table.shape[: len(inner)]
    powers: list[list[Jet]] = []
    for i, J in enumerate(inner):
        hat = J.coeffs.copy()
        hat[(0,) * J.nvars] = 0.0
        hat = Jet(J.center, J.orders, hat)
        p = [jet_const(1.0, frame.center, frame.orders)]
        for _ in range(1, dims_f[i]):
            p.append(jet_mul(p[-1], hat))
        powers.append(p)
    total = None
    for kappa in np.ndindex(dims_f):
        c = coeff_table[kappa]
        if not np.any(c):
            continue
        term = powers[0][kappa[0]]
        for i in range(1, len(inner)):
            term = jet_mul(term, powers[i][kappa[i]])
        term = jet_scale(term, c)
        total = term if total is None else jet_add(total, term)
    if total is None:
        total = jet_const(np.zeros(coeff_table.shape[len(inner):]), frame.center, frame.orders)
    return total


def extract_partial(a: Jet, mu) -> np.ndarray:
    """Mixed partial ``partial^mu f(center)``, i.e. ``mu! * coeff[mu]``."""
    mu = tuple(int(v) for v in mu)
    if len(mu) != a.nvars or any(v < 0 for v in mu):
        raise JetUsageError("multi-index has wrong shape")
    if any(v > o for v, o in zip(mu, a.orders)):
        raise JetUsageError(f"multi-index {mu} exceeds order bounds {a.orders}")
    fact = 1.0
    for v in mu:
        fact *= math.factorial(v)
    return a.coeffs[mu] * fact
