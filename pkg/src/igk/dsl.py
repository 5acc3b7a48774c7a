"""A small expression language for densities and their parameter derivatives.

Grammar (lowest to highest precedence)::

    expression  := additive (('<' | '<=' | '>' | '>=' | '==') additive)?
    additive    := multiplicative (('+' | '-') multiplicative)*
    multiplicative := unary (('*' | '/') unary)*
    unary       := '-' unary | power
    power       := primary ('^' unary)?          (right associative)
    primary     := NUMBER | variable | call | '(' expression ')'
    variable    := 'x' digits | 't' digits       (1-based indices)
    call        := ('exp'|'log'|'sin'|'cos'|'abs'|'sign') '(' expression ')'
                 | ('min'|'max') '(' expression ',' expression ')'
                 | 'if' '(' expression ',' expression ',' expression ')'

``x``-variables are atom coordinates, ``t``-variables are model parameters.
Comparisons evaluate to 0.0/1.0 and are meant as ``if`` conditions; ``if``
treats any nonzero condition as true, so a ``>=`` comparison selects the
first branch on the boundary.

Evaluation is strict about domains: ``log`` of a nonpositive value, division
by zero, and ``0^negative`` raise :class:`~igk.errors.DomainError` rather
than producing NaN or infinity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    ExprSyntaxError,
    UnknownIdentifierError,
    UnsupportedError,
)

__all__ = [
    "Num",
    "Var",
    "Neg",
    "Bin",
    "Cmp",
    "Call",
    "If",
    "parse",
    "eval_expr",
    "eval_on_grid",
    "differentiate",
    "print_expr",
    "references_param",
]


# ---------------------------------------------------------------------------
# syntax tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # 'x' or 't'
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    left: object
    right: object


@dataclass(frozen=True)
class Cmp:
    op: str  # < <= > >= ==
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


@dataclass(frozen=True)
class If:
    cond: object
    then: object
    other: object


_FUNCTIONS = {
    "exp": 1,
    "log": 1,
    "sin": 1,
    "cos": 1,
    "abs": 1,
    "sign": 1,
    "min": 2,
    "max": 2,
}

_SMOOTH_CALLS = {"exp", "log", "sin", "cos"}


# ---------------------------------------------------------------------------
# lexer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op><=|>=|==|[-+*/^(),<>])"
    r")"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == m.start():
            # skip leading whitespace manually to report the true offset
            stripped = len(text) - len(text[pos:].lstrip())
            if stripped >= len(text):
                break
            raise ExprSyntaxError(
                "unexpected character {!r} at offset {}".format(text[stripped], stripped),
                offset=stripped,
                expected=("number", "identifier", "operator"),
            )
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, n_coords=None, n_params=None):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.n_coords = n_coords
        self.n_params = n_params

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected):
        kind, value, offset = self.peek()
        got = repr(value) if kind != "eof" else "end of input"
        raise ExprSyntaxError(
            "expected {} but found {} at offset {}".format(
                " or ".join(expected), got, offset
            ),
            offset=offset,
            expected=expected,
        )

    def expect_op(self, op):
        kind, value, _ = self.peek()
        if kind == "op" and value == op:
            return self.advance()
        self.fail(("'" + op + "'",))

    def parse(self):
        e = self.expression()
        kind, value, offset = self.peek()
        if kind != "eof":
            self.fail(("end of input",))
        return e

    def expression(self):
        left = self.additive()
        kind, value, _ = self.peek()
        if kind == "op" and value in ("<", "<=", ">", ">=", "=="):
            self.advance()
            right = self.additive()
            left = Cmp(value, left, right)
            kind, value, _ = self.peek()
            if kind == "op" and value in ("<", "<=", ">", ">=", "=="):
                self.fail(("end of comparison (chained comparisons are not allowed)",))
        return left

    def additive(self):
        left = self.multiplicative()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in ("+", "-"):
                self.advance()
                left = Bin(value, left, self.multiplicative())
            else:
                return left

    def multiplicative(self):
        left = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in ("*", "/"):
                self.advance()
                left = Bin(value, left, self.unary())
            else:
                return left

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return Bin("^", base, self.unary())
        return base

    def primary(self):
        kind, value, offset = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(value))
        if kind == "op" and value == "(":
            self.advance()
            e = self.expression()
            self.expect_op(")")
            return e
        if kind == "ident":
            self.advance()
            if value == "if":
                self.expect_op("(")
                cond = self.expression()
                self.expect_op(",")
                then = self.expression()
                self.expect_op(",")
                other = self.expression()
                self.expect_op(")")
                return If(cond, then, other)
            if value in _FUNCTIONS:
                arity = _FUNCTIONS[value]
                self.expect_op("(")
                args = [self.expression()]
                while len(args) < arity:
                    self.expect_op(",")
                    args.append(self.expression())
                self.expect_op(")")
                return Call(value, tuple(args))
            return self.variable(value, offset)
        self.fail(("number", "identifier", "'('", "'-'"))

    def variable(self, name, offset):
        m = re.fullmatch(r"([xt])([0-9]+)", name)
        if m is None:
            raise UnknownIdentifierError(
                "unknown identifier {!r} at offset {} (known functions: {})".format(
                    name, offset, ", ".join(sorted(_FUNCTIONS) + ["if"])
                )
            )
        kind, idx = m.group(1), int(m.group(2))
        if idx < 1:
            raise UnknownIdentifierError(
                "variable indices are 1-based, got {!r}".format(name)
            )
        limit = self.n_coords if kind == "x" else self.n_params
        if limit is not None and idx > limit:
            raise UnknownIdentifierError(
                "{!r} is out of range: only {} {}-variable(s) declared".format(
                    name, limit, kind
                )
            )
        return Var(kind, idx)


def parse(text, n_coords=None, n_params=None):
    """Parse expression text into a syntax tree.

    ``n_coords``/``n_params`` optionally bound the allowed variable indices
    (``x1..xm`` and ``t1..td``); out-of-range indices raise
    :class:`UnknownIdentifierError`.
    """
    return _Parser(text, n_coords, n_params).parse()


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _masked_any(mask, cond):
    return bool(np.any(cond[mask])) if cond.shape else bool(mask.any() and cond)


def _eval(e, coords, params, mask):
    n = mask.shape[0]
    if isinstance(e, Num):
        return np.full(n, e.value)
    if isinstance(e, Var):
        if e.kind == "t":
            if e.index > params.shape[0]:
                raise DomainError(
                    "expression references t{} but only {} parameter(s) were supplied".format(
                        e.index, params.shape[0]
                    )
                )
            return np.full(n, params[e.index - 1])
        if coords is None:
            raise DomainError(
                "expression references x{} but the sample space has no coordinates".format(
                    e.index
                )
            )
        if e.index > coords.shape[1]:
            raise DomainError(
                "expression references x{} but coordinates have dimension {}".format(
                    e.index, coords.shape[1]
                )
            )
        return coords[:, e.index - 1].astype(float, copy=True)
    if isinstance(e, Neg):
        return -_eval(e.arg, coords, params, mask)
    if isinstance(e, Bin):
        left = _eval(e.left, coords, params, mask)
        right = _eval(e.right, coords, params, mask)
        if e.op == "+":
            return left + right
        if e.op == "-":
            return left - right
        if e.op == "*":
            return left * right
        if e.op == "/":
            if _masked_any(mask, right == 0):
                raise DomainError(
                    "division by zero in {}".format(print_expr(e))
                )
            with np.errstate(all="ignore"):
                out = left / right
            return np.where(mask, out, 0.0)
        if e.op == "^":
            frac = right != np.floor(right)
            if _masked_any(mask, (left < 0) & frac):
                raise DomainError(
                    "negative base with non-integer exponent in {}".format(print_expr(e))
                )
            if _masked_any(mask, (left == 0) & (right < 0)):
                raise DomainError(
                    "zero base with negative exponent in {}".format(print_expr(e))
                )
            with np.errstate(all="ignore"):
                out = np.power(left, right)
            return np.where(mask, out, 0.0)
        raise AssertionError("unreachable operator " + e.op)
    if isinstance(e, Cmp):
        left = _eval(e.left, coords, params, mask)
        right = _eval(e.right, coords, params, mask)
        op = e.op
        if op == "<":
            res = left < right
        elif op == "<=":
            res = left <= right
        elif op == ">":
            res = left > right
        elif op == ">=":
            res = left >= right
        else:
            res = left == right
        return res.astype(float)
    if isinstance(e, Call):
        if e.name in ("min", "max"):
            a = _eval(e.args[0], coords, params, mask)
            b = _eval(e.args[1], coords, params, mask)
            return np.minimum(a, b) if e.name == "min" else np.maximum(a, b)
        arg = _eval(e.args[0], coords, params, mask)
        if e.name == "exp":
            with np.errstate(all="ignore"):
                return np.exp(arg)
        if e.name == "log":
            if _masked_any(mask, arg <= 0):
                raise DomainError(
                    "log of nonpositive value in {}".format(print_expr(e))
                )
            with np.errstate(all="ignore"):
                out = np.log(arg)
            return np.where(mask, out, 0.0)
        if e.name == "sin":
            return np.sin(arg)
        if e.name == "cos":
            return np.cos(arg)
        if e.name == "abs":
            return np.abs(arg)
        if e.name == "sign":
            return np.sign(arg)
        raise AssertionError("unreachable function " + e.name)
    if isinstance(e, If):
        cond = _eval(e.cond, coords, params, mask)
        take = cond != 0
        m_then = mask & take
        m_other = mask & ~take
        out = np.zeros(n)
        if m_then.any():
            out = np.where(m_then, _eval(e.then, coords, params, m_then), out)
        if m_other.any():
            out = np.where(m_other, _eval(e.other, coords, params, m_other), out)
        return out
    raise TypeError("not an expression node: {!r}".format(e))


def eval_on_grid(e, coords, params):
    """Evaluate an expression at every atom of a coordinate grid.

    Parameters
    ----------
    e : Expr
    coords : ndarray of shape (n, m) or None
        Atom coordinates (None if the expression uses no x-variables).
    params : array-like of shape (d,)
        Parameter values bound to ``t1..td``.

    Returns
    -------
    ndarray of shape (n,)
    """
    params = np.atleast_1d(np.asarray(params, dtype=float))
    if coords is not None:
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        n = coords.shape[0]
    else:
        n = 1
    mask = np.ones(n, dtype=bool)
    with np.errstate(all="ignore"):
        out = _eval(e, coords, params, mask)
    if not np.all(np.isfinite(out)):
        raise DomainError(
            "expression evaluated to a non-finite value in {}".format(print_expr(e))
        )
    return out


def eval_expr(e, coords=(), params=()):
    """Evaluate an expression at a single point; returns a float."""
    coords = np.atleast_1d(np.asarray(coords, dtype=float))
    c = coords[None, :] if coords.size else None
    return float(eval_on_grid(e, c, params)[0])


# ---------------------------------------------------------------------------
# symbolic differentiation
# ---------------------------------------------------------------------------

def references_param(e, j):
    """Does the expression mention the parameter variable ``t_j``?"""
    if isinstance(e, Var):
        return e.kind == "t" and e.index == j
    if isinstance(e, Num):
        return False
    if isinstance(e, Neg):
        return references_param(e.arg, j)
    if isinstance(e, (Bin, Cmp)):
        return references_param(e.left, j) or references_param(e.right, j)
    if isinstance(e, Call):
        return any(references_param(a, j) for a in e.args)
    if isinstance(e, If):
        return any(references_param(x, j) for x in (e.cond, e.then, e.other))
    raise TypeError("not an expression node: {!r}".format(e))


_ZERO = Num(0.0)
_ONE = Num(1.0)


def _is_zero(e):
    return isinstance(e, Num) and e.value == 0.0


def _is_one(e):
    return isinstance(e, Num) and e.value == 1.0


def _num(v):
    # keep literals nonnegative so printed trees re-parse structurally
    return Neg(Num(-v)) if v < 0 else Num(float(v))


def _add(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return Bin("+", a, b)


def _sub(a, b):
    if _is_zero(b):
        return a
    if _is_zero(a):
        return Neg(b)
    return Bin("-", a, b)


def _mul(a, b):
    if _is_zero(a) or _is_zero(b):
        return _ZERO
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    return Bin("*", a, b)


def _div(a, b):
    if _is_zero(a):
        return _ZERO
    if _is_one(b):
        return a
    return Bin("/", a, b)


def differentiate(e, j):
    """Exact partial derivative of ``e`` with respect to ``t_j``.

    Only smooth operators are differentiated. Subtrees that do not mention
    ``t_j`` contribute a zero derivative regardless of their contents, so
    ``abs``/``sign``/``min``/``max`` over pure coordinate expressions are
    fine. On a path that does mention ``t_j`` those four raise
    :class:`UnsupportedError` (callers then fall back to finite
    differences). ``if`` differentiates branchwise with the condition kept
    verbatim; at a condition boundary the value follows whichever branch the
    condition selects there. A power with a non-literal exponent is handled
    through the identity ``a^b = exp(b*log(a))``.
    """
    if not references_param(e, j):
        return _ZERO
    if isinstance(e, Var):
        return _ONE  # must be t_j, by the reference check
    if isinstance(e, Neg):
        return Neg(differentiate(e.arg, j))
    if isinstance(e, Bin):
        if e.op == "+":
            return _add(differentiate(e.left, j), differentiate(e.right, j))
        if e.op == "-":
            return _sub(differentiate(e.left, j), differentiate(e.right, j))
        if e.op == "*":
            return _add(
                _mul(differentiate(e.left, j), e.right),
                _mul(e.left, differentiate(e.right, j)),
            )
        if e.op == "/":
            num = _sub(
                _mul(differentiate(e.left, j), e.right),
                _mul(e.left, differentiate(e.right, j)),
            )
            return _div(num, _mul(e.right, e.right))
        if e.op == "^":
            if isinstance(e.right, Num):
                c = e.right.value
                if c == 0.0:
                    return _ZERO
                da = differentiate(e.left, j)
                power = Bin("^", e.left, _num(c - 1.0))
                return _mul(_mul(_num(c), power), da)
            # general exponent: a^b = exp(b*log(a))
            rewritten = Call("exp", (_mul(e.right, Call("log", (e.left,))),))
            return differentiate(rewritten, j)
        raise AssertionError("unreachable operator " + e.op)
    if isinstance(e, Cmp):
        raise UnsupportedError(
            "comparison {} depends on t{} and is not differentiable".format(
                print_expr(e), j
            )
        )
    if isinstance(e, Call):
        if e.name in ("abs", "sign", "min", "max"):
            raise UnsupportedError(
                "non-smooth call {} on a path that depends on t{}".format(
                    print_expr(e), j
                )
            )
        arg = e.args[0]
        da = differentiate(arg, j)
        if e.name == "exp":
            return _mul(e, da)
        if e.name == "log":
            return _div(da, arg)
        if e.name == "sin":
            return _mul(Call("cos", (arg,)), da)
        if e.name == "cos":
            return _mul(Neg(Call("sin", (arg,))), da)
        raise AssertionError("unreachable function " + e.name)
    if isinstance(e, If):
        return If(e.cond, differentiate(e.then, j), differentiate(e.other, j))
    raise TypeError("not an expression node: {!r}".format(e))


# ---------------------------------------------------------------------------
# printer
# ---------------------------------------------------------------------------

def print_expr(e):
    """Normalized, fully parenthesized text form; re-parses to an equal tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return "{}{}".format(e.kind, e.index)
    if isinstance(e, Neg):
        return "(-{})".format(print_expr(e.arg))
    if isinstance(e, (Bin, Cmp)):
        return "({} {} {})".format(print_expr(e.left), e.op, print_expr(e.right))
    if isinstance(e, Call):
        return "{}({})".format(e.name, ", ".join(print_expr(a) for a in e.args))
    if isinstance(e, If):
        return "if({}, {}, {})".format(
            print_expr(e.cond), print_expr(e.then), print_expr(e.other)
        )
    raise TypeError("not an expression node: {!r}".format(e))
