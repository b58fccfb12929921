"""Small expression language for defining symbols without recompilation.

Grammar (EBNF)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('-')? power
    power  := atom ('^' number)?
    atom   := number | 'i' | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
    number := decimal with optional exponent
    ident  := [a-z][a-z0-9]*

Variables are fixed-name: ``p1..pn`` then ``x1..xk``.  ``gauss(a, b,
...)`` is sugar for ``exp(-(a^2 + b^2 + ...)/2)``.  Evaluation targets
plain complex numbers (vectorized over trailing point batches) or jets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .jets import Jet

__all__ = [
    "Expr",
    "Num",
    "ImagUnit",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "ParseDiagnostic",
    "ExprParseError",
    "ExprEvalError",
    "VarLayout",
    "parse",
    "try_parse",
    "pretty",
    "variables_used",
    "eval_plain",
    "eval_jet",
]

_FUNCTIONS = {"exp": 1, "sin": 1, "cos": 1, "sqrt": 1, "gauss": None}


@dataclass(frozen=True)
class ParseDiagnostic:
    offset: int
    message: str


class ExprParseError(ValueError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"parse error at offset {offset}: {message}")
        self.diagnostic = ParseDiagnostic(offset, message)

    @property
    def offset(self) -> int:
        return self.diagnostic.offset


class ExprEvalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class ImagUnit:
    pass


@dataclass(frozen=True)
class Var:
    kind: str  # 'p' or 'x'
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*', '/'
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: float


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


Expr = Num | ImagUnit | Var | Neg | BinOp | Pow | Call


@dataclass
class _Scanner:
    text: str
    pos: int = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r\n":
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self) -> str:
        ch = self.peek()
        self.pos += 1
        return ch


def _scan_number(sc: _Scanner) -> float:
    start = sc.pos
    while sc.peek().isdigit():
        sc.pos += 1
    if sc.peek() == ".":
        sc.pos += 1
        while sc.peek().isdigit():
            sc.pos += 1
    if sc.peek() in "eE":
        mark = sc.pos
        sc.pos += 1
        if sc.peek() in "+-":
            sc.pos += 1
        if sc.peek().isdigit():
            while sc.peek().isdigit():
                sc.pos += 1
        else:
            sc.pos = mark
    return float(sc.text[start:sc.pos])


def _scan_ident(sc: _Scanner) -> str:
    start = sc.pos
    sc.pos += 1
    while sc.peek().isdigit() or ("a" <= sc.peek() <= "z"):
        sc.pos += 1
    return sc.text[start:sc.pos]


def _parse_atom(sc: _Scanner) -> Expr:
    sc.skip_ws()
    ch = sc.peek()
    if ch == "":
        raise ExprParseError(sc.pos, "expected expression, found end of input")
    if ch.isdigit():
        return Num(_scan_number(sc))
    if ch == "(":
        sc.take()
        e = _parse_expr(sc)
        sc.skip_ws()
        if sc.peek() != ")":
            raise ExprParseError(sc.pos, "expected ')'")
        sc.take()
        return e
    if "a" <= ch <= "z":
        start = sc.pos
        name = _scan_ident(sc)
        if name == "i":
            return ImagUnit()
        sc.skip_ws()
        if sc.peek() == "(":
            if name not in _FUNCTIONS:
                raise ExprParseError(start, f"unknown function '{name}'")
            sc.take()
            args = [_parse_expr(sc)]
            sc.skip_ws()
            while sc.peek() == ",":
                sc.take()
                args.append(_parse_expr(sc))
                sc.skip_ws()
            if sc.peek() != ")":
                raise ExprParseError(sc.pos, "expected ')' or ','")
            sc.take()
            arity = _FUNCTIONS[name]
            if arity is not None and len(args) != arity:
                raise ExprParseError(start, f"'{name}' takes {arity} argument(s)")
            return Call(name, tuple(args))
        if name[0] in "px" and len(name) > 1 and name[1:].isdigit():
            idx = int(name[1:])
            if idx < 1:
                raise ExprParseError(start, "variable index starts at 1")
            return Var(name[0], idx)
        raise ExprParseError(start, f"unknown identifier '{name}'")
    raise ExprParseError(sc.pos, f"unexpected character {ch!r}")


def _parse_power(sc: _Scanner) -> Expr:
    base = _parse_atom(sc)
    sc.skip_ws()
    if sc.peek() == "^":
        sc.take()
        sc.skip_ws()
        if not sc.peek().isdigit():
            raise ExprParseError(sc.pos, "exponent must be a numeric literal")
        return Pow(base, _scan_number(sc))
    return base


def _parse_factor(sc: _Scanner) -> Expr:
    sc.skip_ws()
    if sc.peek() == "-":
        sc.take()
        return Neg(_parse_power(sc))
    return _parse_power(sc)


def _parse_term(sc: _Scanner) -> Expr:
    left = _parse_factor(sc)
    while True:
        sc.skip_ws()
        if sc.peek() in ("*", "/"):
            op = sc.take()
            left = BinOp(op, left, _parse_factor(sc))
        else:
            return left


def _parse_expr(sc: _Scanner) -> Expr:
    left = _parse_term(sc)
    while True:
        sc.skip_ws()
        if sc.peek() in ("+", "-"):
            op = sc.take()
            left = BinOp(op, left, _parse_term(sc))
        else:
            return left


def parse(text: str) -> Expr:
    """Parse ``text``; raises :class:`ExprParseError` with a byte offset."""
    sc = _Scanner(text)
    e = _parse_expr(sc)
    sc.skip_ws()
    if sc.pos != len(text):
        raise ExprParseError(sc.pos, "unexpected trailing input")
    return e


def try_parse(text: str) -> Expr | ParseDiagnostic:
    try:
        return parse(text)
    except ExprParseError as exc:
        return exc.diagnostic


def pretty(e: Expr) -> str:
    """Canonical rendering; ``parse(pretty(parse(s)))`` is a fixpoint."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, ImagUnit):
        return "i"
    if isinstance(e, Var):
        return f"{e.kind}{e.index}"
    if isinstance(e, Neg):
        return f"-{_wrap(e.operand, 2)}"
    if isinstance(e, Pow):
        return f"{_wrap(e.base, 3)}^{repr(e.exponent)}"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(pretty(a) for a in e.args)})"
    if isinstance(e, BinOp):
        lvl = 0 if e.op in "+-" else 1
        left = _wrap(e.left, lvl)
        right = _wrap(e.right, lvl + 1)
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an Expr: {e!r}")


def _level(e: Expr) -> int:
    if isinstance(e, BinOp):
        return 0 if e.op in "+-" else 1
    if isinstance(e, Neg):
        return 2
    if isinstance(e, Pow):
        return 3
    return 4


def _wrap(e: Expr, minimum: int) -> str:
    s = pretty(e)
    return f"({s})" if _level(e) < minimum else s


def variables_used(e: Expr) -> set[tuple[str, int]]:
    out: set[tuple[str, int]] = set()

    def walk(node: Expr):
        if isinstance(node, Var):
            out.add((node.kind, node.index))
        elif isinstance(node, Neg):
            walk(node.operand)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Pow):
            walk(node.base)
        elif isinstance(node, Call):
            for a in node.args:
                walk(a)

    walk(e)
    return out


@dataclass(frozen=True)
class VarLayout:
    """Maps variable names to axes of the evaluation point.

    Axis order is ``p1..p{n_p}`` then ``x1..x{n_x}``, matching the
    (p, x) convention of the oscillatory integrals.
    """

    n_p: int
    n_x: int

    @property
    def dimension(self) -> int:
        return self.n_p + self.n_x

    def axis(self, kind: str, index: int) -> int:
        if kind == "p":
            if not 1 <= index <= self.n_p:
                raise ExprEvalError(f"p{index} out of range (n_p={self.n_p})")
            return index - 1
        if not 1 <= index <= self.n_x:
            raise ExprEvalError(f"x{index} out of range (n_x={self.n_x})")
        return self.n_p + index - 1

    @classmethod
    def infer(cls, e: Expr) -> "VarLayout":
        used = variables_used(e)
        n_p = max((i for k, i in used if k == "p"), default=0)
        n_x = max((i for k, i in used if k == "x"), default=0)
        return cls(n_p, n_x)


def eval_plain(e: Expr, point, layout: VarLayout) -> np.ndarray:
    """Evaluate at ``point`` of shape ``(k,) + batch``; complex result."""
    point = np.asarray(point, dtype=float)
    if point.shape[0] != layout.dimension:
        raise ExprEvalError(
            f"point dimension {point.shape[0]} does not match layout {layout.dimension}"
        )

    def ev(node: Expr) -> np.ndarray:
        if isinstance(node, Num):
            return np.asarray(complex(node.value))
        if isinstance(node, ImagUnit):
            return np.asarray(1j)
        if isinstance(node, Var):
            return point[layout.axis(node.kind, node.index)].astype(complex)
        if isinstance(node, Neg):
            return -ev(node.operand)
        if isinstance(node, BinOp):
            a, b = ev(node.left), ev(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if np.any(b == 0):
                raise ExprEvalError("division by zero")
            return a / b
        if isinstance(node, Pow):
            base = ev(node.base)
            if node.exponent == int(node.exponent):
                return base ** int(node.exponent)
            return np.exp(node.exponent * _checked_log(base))
        if isinstance(node, Call):
            if node.name == "exp":
                return np.exp(ev(node.args[0]))
            if node.name == "sin":
                return np.sin(ev(node.args[0]))
            if node.name == "cos":
                return np.cos(ev(node.args[0]))
            if node.name == "sqrt":
                return np.exp(0.5 * _checked_log(ev(node.args[0])))
            if node.name == "gauss":
                s = sum(ev(a) ** 2 for a in node.args)
                return np.exp(-s / 2.0)
        raise ExprEvalError(f"cannot evaluate {node!r}")

    return np.broadcast_to(ev(e), point.shape[1:]).astype(complex)


def _checked_log(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if np.any((z.imag == 0.0) & (z.real <= 0.0)):
        raise ExprEvalError("argument on the cut [0,-inf)")
    return np.log(z)


def eval_jet(e: Expr, center, orders, layout: VarLayout) -> Jet:
    """Jet of the expression at ``center`` with per-axis ``orders``."""
    center = np.asarray(center, dtype=float)
    orders = tuple(int(o) for o in orders)
    if center.shape[0] != layout.dimension or len(orders) != layout.dimension:
        raise ExprEvalError("center/orders do not match the variable layout")

    def ev(node: Expr) -> Jet:
        if isinstance(node, Num):
            return jets.jet_const(complex(node.value), center, orders)
        if isinstance(node, ImagUnit):
            return jets.jet_const(1j, center, orders)
        if isinstance(node, Var):
            return jets.jet_var(layout.axis(node.kind, node.index), center, orders)
        if isinstance(node, Neg):
            return -ev(node.operand)
        if isinstance(node, BinOp):
            a = ev(node.left)
            if node.op == "+":
                return a + ev(node.right)
            if node.op == "-":
                return a - ev(node.right)
            if node.op == "*":
                return a * ev(node.right)
            return a * jets.jet_apply_unary("reciprocal", ev(node.right))
        if isinstance(node, Pow):
            base = ev(node.base)
            if node.exponent == int(node.exponent) and node.exponent >= 0:
                n = int(node.exponent)
                result = jets.jet_const(1.0, center, orders)
                for _ in range(n):
                    result = result * base
                return result
            return jets.jet_apply_unary("power", base, alpha=node.exponent)
        if isinstance(node, Call):
            if node.name in ("exp", "sin", "cos", "sqrt"):
                return jets.jet_apply_unary(node.name, ev(node.args[0]))
            if node.name == "gauss":
                s = None
                for a in node.args:
                    ja = ev(a)
                    sq = ja * ja
                    s = sq if s is None else s + sq
                return jets.jet_apply_unary("exp", jets.jet_scale(s, -0.5))
        raise ExprEvalError(f"cannot evaluate {node!r}")

    return ev(e)
