"""Exact construction of the phase-regularizing differential operator.

For the phase ``exp(i (p, M x))`` and the polynomial
``P(t) = (i + t_1) ... (i + t_n)`` there is a constant-coefficient
operator ``Q_s = sum a^{mu nu} d_x^mu d_p^nu`` with
``Q_s e^{i(p,Mx)} = P^s(x) P^s(p) e^{i(p,Mx)}``.  The coefficients are
found by matching monomials against the recursively generated
polynomials ``D(mu, nu)`` with
``d_x^mu d_p^nu e^{i(p,Mx)} = D(mu,nu)(p,x) e^{i(p,Mx)}``.

For the identity pairing everything is solved exactly over Q[i] (the
certificate in the test suite is an exact polynomial identity); for a
general pairing matrix the same system is solved in floating point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = ["QI", "QsSolveError", "QsTable", "solve_qs", "apply_to_phase", "target_polynomial"]


class QsSolveError(ArithmeticError):
    """Monomial-matching system is singular for the requested pairing."""


@dataclass(frozen=True)
class QI:
    """Gaussian rational ``re + im*i`` with exact Fraction parts."""

    re: Fraction
    im: Fraction

    @classmethod
    def of(cls, re=0, im=0) -> "QI":
        return cls(Fraction(re), Fraction(im))

    def __add__(self, o: "QI") -> "QI":
        return QI(self.re + o.re, self.im + o.im)

    def __sub__(self, o: "QI") -> "QI":
        return QI(self.re - o.re, self.im - o.im)

    def __mul__(self, o: "QI") -> "QI":
        return QI(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    def __neg__(self) -> "QI":
        return QI(-self.re, -self.im)

    def inv(self) -> "QI":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("inverse of zero Gaussian rational")
        return QI(self.re / n, -self.im / n)

    def __truediv__(self, o: "QI") -> "QI":
        return self * o.inv()

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def to_complex(self) -> complex:
        return complex(self.re) + 1j * complex(self.im)


QI_ZERO = QI.of(0)
QI_ONE = QI.of(1)
QI_I = QI.of(0, 1)


# Polynomials in (p_1..p_n, x_1..x_n): dict monomial-exponent-tuple -> QI.
Poly = dict


def _poly_add_term(poly: Poly, mono: tuple, c: QI) -> None:
    cur = poly.get(mono)
    s = c if cur is None else cur + c
    if s.is_zero():
        poly.pop(mono, None)
    else:
        poly[mono] = s


def _poly_mul_mono(poly: Poly, mono: tuple, c: QI) -> Poly:
    out: Poly = {}
    for m, v in poly.items():
        _poly_add_term(out, tuple(a + b for a, b in zip(m, mono)), v * c)
    return out


def _poly_add(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for m, v in b.items():
        _poly_add_term(out, m, v)
    return out


def _poly_diff(poly: Poly, var: int) -> Poly:
    out: Poly = {}
    for m, v in poly.items():
        if m[var] == 0:
            continue
        mono = m[:var] + (m[var] - 1,) + m[var + 1:]
        _poly_add_term(out, mono, v * QI.of(m[var]))
    return out


def _unit(n2: int, var: int) -> tuple:
    return tuple(1 if j == var else 0 for j in range(n2))


def _phase_gradient_polys(n: int, M) -> tuple[list[Poly], list[Poly]]:
    """Polynomials multiplying the phase under one derivative.

    ``d_{x_j} e^{i(p,Mx)} = i (M^T p)_j e^{...}`` and
    ``d_{p_j} e^{i(p,Mx)} = i (M x)_j e^{...}``.  Variables are ordered
    ``(p_1..p_n, x_1..x_n)``.
    """
    n2 = 2 * n
    gx, gp = [], []
    for j in range(n):
        poly_x: Poly = {}
        poly_p: Poly = {}
        for kcol in range(n):
            cx = M[kcol][j]
            if not cx.is_zero():
                _poly_add_term(poly_x, _unit(n2, kcol), QI_I * cx)
            cp = M[j][kcol]
            if not cp.is_zero():
                _poly_add_term(poly_p, _unit(n2, n + kcol), QI_I * cp)
        gx.append(poly_x)
        gp.append(poly_p)
    return gx, gp


def _d_polys(n: int, s: int, M) -> dict[tuple, Poly]:
    """All ``D(mu, nu)`` with per-coordinate degrees <= s, built by the
    recursion ``D(mu+e_j, nu) = d_{x_j} D + i (M^T p)_j D`` etc."""
    gx, gp = _phase_gradient_polys(n, M)
    n2 = 2 * n
    box = list(itertools.product(range(s + 1), repeat=n))
    table: dict[tuple, Poly] = {((0,) * n, (0,) * n): {(0,) * n2: QI_ONE}}

    def get(mu: tuple, nu: tuple) -> Poly:
        key = (mu, nu)
        if key in table:
            return table[key]
        for j in range(n):
            if mu[j] > 0:
                prev = get(mu[:j] + (mu[j] - 1,) + mu[j + 1:], nu)
                out = _poly_diff(prev, n + j)
                for mono, c in gx[j].items():
                    out = _poly_add(out, _poly_mul_mono(prev, mono, c))
                table[key] = out
                return out
        for j in range(n):
            if nu[j] > 0:
                prev = get(mu, nu[:j] + (nu[j] - 1,) + nu[j + 1:])
                out = _poly_diff(prev, j)
                for mono, c in gp[j].items():
                    out = _poly_add(out, _poly_mul_mono(prev, mono, c))
                table[key] = out
                return out
        raise AssertionError("unreachable")

    for mu in box:
        for nu in box:
            get(mu, nu)
    return {k: v for k, v in table.items()}


def target_polynomial(n: int, s: int) -> Poly:
    """``P^s(x) P^s(p)`` expanded exactly; P(t) = prod_k (i + t_k)."""
    n2 = 2 * n
    poly: Poly = {(0,) * n2: QI_ONE}
    for var in range(n2):
        factor: Poly = {(0,) * n2: QI_I, _unit(n2, var): QI_ONE}
        for _ in range(s):
            out: Poly = {}
            for m, v in poly.items():
                for mf, vf in factor.items():
                    _poly_add_term(out, tuple(a + b for a, b in zip(m, mf)), v * vf)
            poly = out
    return poly


@dataclass(frozen=True)
class QsTable:
    """Solved coefficients ``a^{mu nu}`` of ``Q_s``.

    ``mu`` indexes x-derivatives and ``nu`` p-derivatives; both run over
    the box of per-coordinate degree <= s.  ``exact`` holds the QI table
    when the pairing was rational (always kept for the identity pairing).
    """

    n: int
    s: int
    table: dict[tuple, complex]
    exact: dict[tuple, QI] | None = None

    def transposed_weights(self) -> dict[tuple, complex]:
        """Coefficients of ``Q_s^T``: ``(-1)^{|mu|+|nu|} a^{mu nu}``."""
        out = {}
        for (mu, nu), a in self.table.items():
            sign = -1.0 if (sum(mu) + sum(nu)) % 2 else 1.0
            out[(mu, nu)] = sign * a
        return out


def _identity_m(n: int) -> list[list[QI]]:
    return [[QI_ONE if i == j else QI_ZERO for j in range(n)] for i in range(n)]


def solve_qs(n: int, s: int, M=None) -> QsTable:
    """Solve the monomial-matching system for ``Q_s``.

    ``M`` is the pairing matrix (defaults to the identity).  With the
    identity pairing and n >= 2 the solution is assembled as the tensor
    product of one-dimensional tables, which the exact certificate in
    the tests cross-checks against the direct solve.
    """
    if s < 0:
        raise ValueError("regularization order must be >= 0")
    identity_pairing = M is None or _is_identity(M)
    if s == 0:
        key = ((0,) * n, (0,) * n)
        return QsTable(n, 0, {key: 1.0 + 0j}, {key: QI_ONE})
    if identity_pairing and n > 1:
        one = solve_qs(1, s)
        table: dict[tuple, QI] = {}
        for items in itertools.product(one.exact.items(), repeat=n):
            mu = tuple(k[0][0][0] for k in items)
            nu = tuple(k[0][1][0] for k in items)
            val = QI_ONE
            for k in items:
                val = val * k[1]
            table[(mu, nu)] = val
        return QsTable(n, s, {k: v.to_complex() for k, v in table.items()}, table)
    Mq = _identity_m(n) if identity_pairing else [[QI.of(Fraction(x).limit_denominator(10**12)) if not isinstance(x, QI) else x for x in row] for row in _as_rows(M, n)]
    return _solve_direct(n, s, Mq)


def _as_rows(M, n):
    arr = np.asarray(M, dtype=float)
    if arr.shape != (n, n):
        raise ValueError("pairing matrix has wrong shape")
    return [[arr[i, j] for j in range(n)] for i in range(n)]


def _is_identity(M) -> bool:
    arr = np.asarray(M, dtype=float)
    return arr.shape[0] == arr.shape[1] and np.array_equal(arr, np.eye(arr.shape[0]))


def _solve_direct(n: int, s: int, Mq) -> QsTable:
    box = list(itertools.product(range(s + 1), repeat=n))
    unknowns = [(mu, nu) for mu in box for nu in box]
    dtab = _d_polys(n, s, Mq)
    target = target_polynomial(n, s)
    monos = sorted({m for poly in dtab.values() for m in poly} | set(target))
    if len(monos) != len(unknowns):
        raise QsSolveError(
            f"monomial space ({len(monos)}) does not match unknowns ({len(unknowns)})"
        )
    mono_index = {m: i for i, m in enumerate(monos)}
    size = len(unknowns)
    A = [[QI_ZERO] * size for _ in range(size)]
    for col, key in enumerate(unknowns):
        for mono, c in dtab[key].items():
            A[mono_index[mono]][col] = c
    b = [QI_ZERO] * size
    for mono, c in target.items():
        b[mono_index[mono]] = c
    sol = _gauss_solve(A, b)
    table = {key: sol[i] for i, key in enumerate(unknowns)}
    return QsTable(n, s, {k: v.to_complex() for k, v in table.items()}, table)


def _gauss_solve(A: list[list[QI]], b: list[QI]) -> list[QI]:
    size = len(b)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if not M[r][col].is_zero()), None)
        if pivot is None:
            raise QsSolveError("singular monomial-matching system")
        M[col], M[pivot] = M[pivot], M[col]
        inv = M[col][col].inv()
        M[col] = [v * inv for v in M[col]]
        for r in range(size):
            if r == col or M[r][col].is_zero():
                continue
            factor = M[r][col]
            M[r] = [vr - factor * vc for vr, vc in zip(M[r], M[col])]
    return [M[r][size] for r in range(size)]


def apply_to_phase(table: QsTable, M=None) -> Poly:
    """Exact polynomial ``sum a^{mu nu} D(mu, nu)``; equals
    ``P^s(x) P^s(p)`` iff the table is correct for the pairing."""
    if table.exact is None:
        raise QsSolveError("exact certificate requires a rational table")
    Mq = _identity_m(table.n) if M is None else M
    dtab = _d_polys(table.n, table.s, Mq)
    out: Poly = {}
    for key, a in table.exact.items():
        if a.is_zero():
            continue
        for mono, c in dtab[key].items():
            _poly_add_term(out, mono, c * a)
    return out
