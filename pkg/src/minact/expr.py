"""Scalar expression trees in the time variable t and coordinates z1..zD.

Model data (metric entries, gyroscopic components, potential, constraint
functions) is stored as small expression trees.  The same trees are evaluated
pointwise on arrays of quadrature nodes and differentiated symbolically, so
the derivative of any model quantity is again a tree that evaluates exactly.
Second derivatives are obtained by differentiating twice.

The grammar (documented in docs/expr-grammar.md) supports +, -, *, /, ^ with
a constant exponent, the functions sin, cos, exp, log, sqrt, unary minus,
parentheses, the constant pi, and the variables t, z1..zD.  There is no abs,
sign, min or max: all admissible model data must be twice continuously
differentiable, and those functions are not.

Evaluation refuses to return non-finite numbers silently: division by zero,
log or sqrt of a nonpositive argument, and overflow raise EvalDomainError
carrying the offending subtree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Unary", "Binary", "Power",
    "ExprError", "ParseError", "EvalDomainError",
    "parse", "evaluate", "differentiate", "to_text",
    "const", "var", "t_var", "add", "sub", "mul", "div", "neg", "power",
    "sin", "cos", "exp", "log", "sqrt",
    "max_var_index", "references_time",
]


class ExprError(Exception):
    """Base class for expression failures."""


class ParseError(ExprError):
    """Raised on malformed expression text; carries the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EvalDomainError(ExprError):
    """Raised when evaluation leaves the real domain (1/0, log(-1), ...)."""

    def __init__(self, message: str, node: "Expr"):
        super().__init__(f"{message} in subexpression '{to_text(node)}'")
        self.node = node


class Expr:
    """Base node.  Concrete nodes are Const, Var, Unary, Binary, Power."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    # index 0 is the time variable t, index d >= 1 is the coordinate z^d
    index: int


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # one of: neg sin cos exp log sqrt
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # one of: + - * /
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Power(Expr):
    # exponent is a literal real constant, which keeps d/dz u^c = c*u^(c-1)*u'
    # closed-form for the singular-potential terms |z - s|^(-n)
    base: Expr
    exponent: float


_UNARY_OPS = ("neg", "sin", "cos", "exp", "log", "sqrt")

# ---------------------------------------------------------------------------
# smart constructors (constant folding and 0/1 identities; best effort only)
# ---------------------------------------------------------------------------


def const(value: float) -> Const:
    return Const(float(value))


def var(d: int) -> Var:
    if d < 1:
        raise ValueError("coordinate index must be >= 1")
    return Var(d)


def t_var() -> Var:
    return Var(0)


ZERO = Const(0.0)
ONE = Const(1.0)


def _is_const(e: Expr, v: float | None = None) -> bool:
    return isinstance(e, Const) and (v is None or e.value == v)


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Binary("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Binary("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Binary("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return Const(a.value / b.value)
    if _is_const(b, 1.0):
        return a
    return Binary("/", a, b)


def neg(a: Expr) -> Expr:
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def power(base: Expr, exponent: float) -> Expr:
    exponent = float(exponent)
    if exponent == 0.0:
        return ONE
    if exponent == 1.0:
        return base
    if _is_const(base):
        folded = _pow_value(base.value, exponent)
        if folded is not None:
            return Const(folded)
    return Power(base, exponent)


def _pow_value(base: float, exponent: float) -> float | None:
    # fold only when the result is a finite real; otherwise keep the node so
    # evaluation reports a proper domain error
    try:
        v = base ** exponent
    except (OverflowError, ZeroDivisionError, ValueError):
        return None
    if isinstance(v, complex) or not math.isfinite(v):
        return None
    return v


def _unary(op: str, a: Expr) -> Expr:
    if _is_const(a):
        try:
            v = getattr(math, op)(a.value)
            if math.isfinite(v):
                return Const(v)
        except (ValueError, OverflowError):
            pass
    return Unary(op, a)


def sin(a: Expr) -> Expr:
    return _unary("sin", a)


def cos(a: Expr) -> Expr:
    return _unary("cos", a)


def exp(a: Expr) -> Expr:
    return _unary("exp", a)


def log(a: Expr) -> Expr:
    return _unary("log", a)


def sqrt(a: Expr) -> Expr:
    return _unary("sqrt", a)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_NUM_CHARS = set("0123456789.")


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str | float, int]] = []
        self._scan()
        self.cursor = 0

    def _scan(self) -> None:
        text, i, n = self.text, 0, len(self.text)
        while i < n:
            c = text[i]
            if c.isspace():
                i += 1
                continue
            if c in "+-*/^(),":
                self.tokens.append((c, c, i))
                i += 1
                continue
            if c in _NUM_CHARS:
                j = i
                while j < n and text[j] in _NUM_CHARS:
                    j += 1
                if j < n and text[j] in "eE":
                    k = j + 1
                    if k < n and text[k] in "+-":
                        k += 1
                    if k < n and text[k].isdigit():
                        j = k
                        while j < n and text[j].isdigit():
                            j += 1
                try:
                    value = float(text[i:j])
                except ValueError:
                    raise ParseError(f"bad number '{text[i:j]}'", i)
                self.tokens.append(("num", value, i))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("ident", text[i:j], i))
                i = j
                continue
            raise ParseError(f"unexpected character '{c}'", i)
        self.tokens.append(("end", "", n))

    def peek(self) -> tuple[str, str | float, int]:
        return self.tokens[self.cursor]

    def next(self) -> tuple[str, str | float, int]:
        tok = self.tokens[self.cursor]
        self.cursor += 1
        return tok


_FUNCTIONS = {"sin": sin, "cos": cos, "exp": exp, "log": log, "sqrt": sqrt}


class _Parser:
    """Recursive descent with precedence ^  >  unary -  >  * /  >  + -."""

    def __init__(self, text: str, dim: int):
        self.toks = _Tokenizer(text)
        self.dim = dim

    def parse(self) -> Expr:
        e = self._expr()
        kind, _, pos = self.toks.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing token '{kind}'", pos)
        return e

    def _expr(self) -> Expr:
        e = self._term()
        while True:
            kind, _, _ = self.toks.peek()
            if kind == "+":
                self.toks.next()
                e = add(e, self._term())
            elif kind == "-":
                self.toks.next()
                e = sub(e, self._term())
            else:
                return e

    def _term(self) -> Expr:
        e = self._unary()
        while True:
            kind, _, _ = self.toks.peek()
            if kind == "*":
                self.toks.next()
                e = mul(e, self._unary())
            elif kind == "/":
                self.toks.next()
                e = div(e, self._unary())
            else:
                return e

    def _unary(self) -> Expr:
        kind, _, _ = self.toks.peek()
        if kind == "-":
            self.toks.next()
            return neg(self._unary())
        if kind == "+":
            self.toks.next()
            return self._unary()
        return self._power()

    def _power(self) -> Expr:
        base = self._atom()
        kind, _, pos = self.toks.peek()
        if kind != "^":
            return base
        self.toks.next()
        exponent = self._unary()  # allows z1^-2 and z1^(1/2)
        if not isinstance(exponent, Const):
            raise ParseError("exponent must reduce to a numeric constant", pos)
        return power(base, exponent.value)

    def _atom(self) -> Expr:
        kind, value, pos = self.toks.next()
        if kind == "num":
            return Const(float(value))
        if kind == "(":
            e = self._expr()
            k, _, p = self.toks.next()
            if k != ")":
                raise ParseError("expected ')'", p)
            return e
        if kind == "ident":
            name = str(value)
            nk, _, _ = self.toks.peek()
            if nk == "(":
                fn = _FUNCTIONS.get(name)
                if fn is None:
                    raise ParseError(f"unknown function '{name}'", pos)
                self.toks.next()
                arg = self._expr()
                k, _, p = self.toks.next()
                if k != ")":
                    raise ParseError("expected ')'", p)
                return fn(arg)
            if name == "t":
                return Var(0)
            if name == "pi":
                return Const(math.pi)
            if name.startswith("z") and name[1:].isdigit():
                d = int(name[1:])
                if not 1 <= d <= self.dim:
                    raise ParseError(
                        f"variable {name} out of range (dim = {self.dim})", pos)
                return Var(d)
            raise ParseError(f"unknown identifier '{name}'", pos)
        raise ParseError(f"unexpected token '{kind}'", pos)


def parse(text: str, dim: int) -> Expr:
    """Parse expression text over variables t, z1..z{dim} into a tree.

    Parameters
    ----------
    text : str
        Expression source, e.g. ``"1/((z1-1)^2 + z2^2)"``.
    dim : int
        Number of coordinates; variables z1..z{dim} are in scope.

    Returns
    -------
    Expr
        Root of the parsed tree, lightly simplified (constants folded).

    Raises
    ------
    ParseError
        On syntax errors, unknown identifiers, out-of-range coordinate
        indices, or a non-constant exponent after ``^``.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text, dim).parse()


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def evaluate(e: Expr, t, z):
    """Evaluate a tree at time(s) t and coordinate value(s) z.

    Parameters
    ----------
    e : Expr
    t : float or ndarray of shape (M,)
    z : sequence of dim floats, or ndarray of shape (M, dim)

    Returns
    -------
    float or ndarray
        Scalar for scalar input, array of shape (M,) for node arrays.

    Raises
    ------
    EvalDomainError
        If any node divides by zero, takes log or sqrt outside the domain,
        raises 0 to a negative power, a negative base to a fractional power,
        or overflows to a non-finite value.
    """
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    if t.ndim == 0 and z.ndim == 2:
        t = np.full(z.shape[0], float(t))
    out = _ev(e, t, z)
    if t.ndim == 0:
        return float(np.asarray(out))
    if np.ndim(out) == 0:
        return np.full(t.shape, float(out))
    return np.asarray(out, dtype=float)


def _ev(e: Expr, t, z):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        if e.index == 0:
            return t
        return z[..., e.index - 1]
    if isinstance(e, Unary):
        a = _ev(e.arg, t, z)
        if e.op == "neg":
            return -a
        if e.op == "sin":
            return np.sin(a)
        if e.op == "cos":
            return np.cos(a)
        if e.op == "exp":
            with np.errstate(over="ignore"):
                v = np.exp(a)
            if not np.all(np.isfinite(v)):
                raise EvalDomainError("exp overflow", e)
            return v
        if e.op == "log":
            if np.any(np.asarray(a) <= 0.0):
                raise EvalDomainError("log of nonpositive value", e)
            return np.log(a)
        if e.op == "sqrt":
            if np.any(np.asarray(a) < 0.0):
                raise EvalDomainError("sqrt of negative value", e)
            return np.sqrt(a)
        raise EvalDomainError(f"unknown unary op {e.op}", e)
    if isinstance(e, Binary):
        a = _ev(e.lhs, t, z)
        b = _ev(e.rhs, t, z)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if np.any(np.asarray(b) == 0.0):
                raise EvalDomainError("division by zero", e)
            return a / b
        raise EvalDomainError(f"unknown binary op {e.op}", e)
    if isinstance(e, Power):
        a = np.asarray(_ev(e.base, t, z))
        c = e.exponent
        if c != round(c) and np.any(a < 0.0):
            raise EvalDomainError("negative base under fractional power", e)
        if c < 0 and np.any(a == 0.0):
            raise EvalDomainError("zero base under negative power", e)
        with np.errstate(over="ignore", divide="ignore"):
            v = a ** c
        if not np.all(np.isfinite(v)):
            raise EvalDomainError("power overflow", e)
        return v
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------


def differentiate(e: Expr, v: int) -> Expr:
    """Exact symbolic derivative of e with respect to variable index v.

    Index 0 differentiates in t, index d >= 1 in the coordinate z^d.  The
    result is a tree; differentiating it again yields second derivatives.
    Constant folding and 0/1 identities keep the trees small, but no deeper
    simplification is attempted.
    """
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == v else ZERO
    if isinstance(e, Unary):
        da = differentiate(e.arg, v)
        if e.op == "neg":
            return neg(da)
        if e.op == "sin":
            return mul(cos(e.arg), da)
        if e.op == "cos":
            return neg(mul(sin(e.arg), da))
        if e.op == "exp":
            return mul(exp(e.arg), da)
        if e.op == "log":
            return div(da, e.arg)
        if e.op == "sqrt":
            return div(da, mul(Const(2.0), sqrt(e.arg)))
        raise ValueError(f"unknown unary op {e.op}")
    if isinstance(e, Binary):
        da = differentiate(e.lhs, v)
        db = differentiate(e.rhs, v)
        if e.op == "+":
            return add(da, db)
        if e.op == "-":
            return sub(da, db)
        if e.op == "*":
            return add(mul(da, e.rhs), mul(e.lhs, db))
        if e.op == "/":
            num = sub(mul(da, e.rhs), mul(e.lhs, db))
            return div(num, power(e.rhs, 2.0))
        raise ValueError(f"unknown binary op {e.op}")
    if isinstance(e, Power):
        du = differentiate(e.base, v)
        return mul(mul(Const(e.exponent), power(e.base, e.exponent - 1.0)), du)
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_LEVEL_ADD, _LEVEL_MUL, _LEVEL_NEG, _LEVEL_POW, _LEVEL_ATOM = 1, 2, 3, 4, 5


def _level(e: Expr) -> int:
    if isinstance(e, Const):
        return _LEVEL_ATOM if e.value >= 0 else _LEVEL_NEG
    if isinstance(e, Var):
        return _LEVEL_ATOM
    if isinstance(e, Unary):
        return _LEVEL_NEG if e.op == "neg" else _LEVEL_ATOM
    if isinstance(e, Binary):
        return _LEVEL_ADD if e.op in "+-" else _LEVEL_MUL
    return _LEVEL_POW


def _fmt_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _wrap(e: Expr, min_level: int) -> str:
    s = to_text(e)
    return f"({s})" if _level(e) < min_level else s


def to_text(e: Expr) -> str:
    """Render a tree back to grammar text; parse(to_text(e)) equals e."""
    if isinstance(e, Const):
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return "t" if e.index == 0 else f"z{e.index}"
    if isinstance(e, Unary):
        if e.op == "neg":
            return "-" + _wrap(e.arg, _LEVEL_POW)
        return f"{e.op}({to_text(e.arg)})"
    if isinstance(e, Binary):
        if e.op == "+":
            return f"{_wrap(e.lhs, _LEVEL_ADD)} + {_wrap(e.rhs, _LEVEL_MUL)}"
        if e.op == "-":
            return f"{_wrap(e.lhs, _LEVEL_ADD)} - {_wrap(e.rhs, _LEVEL_MUL)}"
        if e.op == "*":
            return f"{_wrap(e.lhs, _LEVEL_MUL)}*{_wrap(e.rhs, _LEVEL_NEG)}"
        return f"{_wrap(e.lhs, _LEVEL_MUL)}/{_wrap(e.rhs, _LEVEL_NEG)}"
    if isinstance(e, Power):
        base = _wrap(e.base, _LEVEL_ATOM)
        exponent = _fmt_number(e.exponent)
        if e.exponent < 0:
            exponent = f"({exponent})"
        return f"{base}^{exponent}"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# tree queries
# ---------------------------------------------------------------------------


def max_var_index(e: Expr) -> int:
    """Largest coordinate index referenced (0 if none)."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Unary):
        return max_var_index(e.arg)
    if isinstance(e, Binary):
        return max(max_var_index(e.lhs), max_var_index(e.rhs))
    if isinstance(e, Power):
        return max_var_index(e.base)
    return 0


def references_time(e: Expr) -> bool:
    """True if the tree mentions the time variable t anywhere."""
    if isinstance(e, Var):
        return e.index == 0
    if isinstance(e, Unary):
        return references_time(e.arg)
    if isinstance(e, Binary):
        return references_time(e.lhs) or references_time(e.rhs)
    if isinstance(e, Power):
        return references_time(e.base)
    return False
