"""Parser and evaluator for the textual symbol-expression language.

Expressions are real-valued functions of the torus variables x1..xn,
the frequency variables xi1..xin and, inside angular parts, the unit
direction variables theta1..thetan.  Grammar:

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-'? atom ('^' factor)?
    atom   := number | 'pi' | variable
            | func '(' expr ')' | '(' expr ')' | '|xi|' | '<xi>'

'^' is right associative and binds tighter than unary minus, so
``-x1^2`` means -(x1^2) while ``(-x1)^2`` needs the parentheses.
Functions: cos, sin, exp, abs.  ``|xi|`` is the euclidean norm of the
frequency vector and ``<xi>`` the bracket (1+|xi|^2)^(1/2).  There is
no implicit multiplication.  The unicode minus sign is accepted as a
synonym for '-'.

Evaluation is plain double precision and numpy-broadcasting: variables
may be bound to arrays (last axis = coordinate axis) and the result
broadcasts accordingly.  Complex-valued symbols are entered as two
real expressions (re, im); conjugation is supplied by the flip map,
not by the grammar.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import UsageError

FUNCTIONS = {"cos": np.cos, "sin": np.sin, "exp": np.exp, "abs": np.abs}
VAR_KINDS = ("x", "xi", "theta")


class ParseError(Exception):
    """Raised for any malformed input; never lets a panic escape.

    offset is the character offset into the source (equal to the byte
    offset for ASCII input) and satisfies 0 <= offset <= len(source).
    """

    def __init__(self, offset: int, expected: str, source: str):
        self.offset = offset
        self.expected = expected
        lo, hi = max(0, offset - 12), min(len(source), offset + 12)
        self.excerpt = source[lo:hi]
        super().__init__(f"expected {expected} at offset {offset}: {self.excerpt!r}")


class DimensionError(ParseError):
    """A variable index exceeds the declared dimension."""


class EvalError(ArithmeticError):
    """Evaluation produced a non-finite value (division by zero,
    0^negative, overflow).  Carries the offending subexpression."""

    def __init__(self, subexpr: str, reason: str):
        self.subexpr = subexpr
        super().__init__(f"{reason} in {subexpr!r}")


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Var:
    kind: str  # "x", "xi" or "theta"
    index: int  # 1-based


@dataclass(frozen=True)
class FreqNorm:
    """|xi|"""


@dataclass(frozen=True)
class Bracket:
    """<xi> = (1+|xi|^2)^(1/2)"""


@dataclass(frozen=True)
class Neg:
    arg: "SymbolExpr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "SymbolExpr"
    right: "SymbolExpr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "SymbolExpr"


SymbolExpr = Union[Num, Pi, Var, FreqNorm, Bracket, Neg, BinOp, Call]


def walk(e: SymbolExpr):
    """Yield every node of the tree."""
    yield e
    if isinstance(e, Neg):
        yield from walk(e.arg)
    elif isinstance(e, BinOp):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, Call):
        yield from walk(e.arg)


# ---------------------------------------------------------------------------
# Tokenizer

_MINUS = {"-", "−"}  # ASCII hyphen and unicode minus


@dataclass(frozen=True)
class _Token:
    kind: str  # NUM NAME OP NORM BRACKET EOF
    text: str
    pos: int
    value: float = 0.0


def _tokenize(text: str) -> list[_Token]:
    toks: list[_Token] = []
    i, L = 0, len(text)
    while i < L:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _MINUS:
            toks.append(_Token("OP", "-", i))
            i += 1
            continue
        if c in "+*/^()":
            toks.append(_Token("OP", c, i))
            i += 1
            continue
        if c == "|":
            if text[i : i + 4] == "|xi|":
                toks.append(_Token("NORM", "|xi|", i))
                i += 4
                continue
            raise ParseError(i, "'|xi|'", text)
        if c == "<":
            if text[i : i + 4] == "<xi>":
                toks.append(_Token("BRACKET", "<xi>", i))
                i += 4
                continue
            raise ParseError(i, "'<xi>'", text)
        if c.isdigit() or (c == "." and i + 1 < L and text[i + 1].isdigit()):
            j = i
            while j < L and text[j].isdigit():
                j += 1
            if j < L and text[j] == ".":
                j += 1
                while j < L and text[j].isdigit():
                    j += 1
            # optional exponent, only if it is actually followed by digits
            if j < L and text[j] in "eE":
                k = j + 1
                if k < L and (text[k] in "+-" or text[k] in _MINUS):
                    k += 1
                if k < L and text[k].isdigit():
                    while k < L and text[k].isdigit():
                        k += 1
                    j = k
            try:
                val = float(text[i:j].replace("−", "-"))
            except ValueError:
                raise ParseError(i, "number", text) from None
            toks.append(_Token("NUM", text[i:j], i, val))
            i = j
            continue
        if c.isalpha():
            j = i
            while j < L and text[j].isalpha():
                j += 1
            while j < L and text[j].isdigit():
                j += 1
            toks.append(_Token("NAME", text[i:j], i))
            i = j
            continue
        raise ParseError(i, "expression character", text)
    toks.append(_Token("EOF", "", L))
    return toks


# ---------------------------------------------------------------------------
# Recursive-descent parser


class _Parser:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.toks[self.i]

    def take(self) -> _Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_op(self, op: str):
        t = self.peek()
        if t.kind == "OP" and t.text == op:
            return self.take()
        raise ParseError(t.pos, f"'{op}'", self.text)

    def at_op(self, *ops: str) -> bool:
        t = self.peek()
        return t.kind == "OP" and t.text in ops

    def parse(self) -> SymbolExpr:
        e = self.expr()
        t = self.peek()
        if t.kind != "EOF":
            raise ParseError(t.pos, "end of input", self.text)
        return e

    def expr(self) -> SymbolExpr:
        e = self.term()
        while self.at_op("+", "-"):
            op = self.take().text
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> SymbolExpr:
        e = self.factor()
        while self.at_op("*", "/"):
            op = self.take().text
            e = BinOp(op, e, self.factor())
        return e

    def factor(self) -> SymbolExpr:
        # '-'? atom ('^' factor)?   with '^' binding tighter than the minus
        neg = False
        if self.at_op("-"):
            self.take()
            neg = True
        e = self.atom()
        if self.at_op("^"):
            self.take()
            e = BinOp("^", e, self.factor())
        return Neg(e) if neg else e

    def atom(self) -> SymbolExpr:
        t = self.peek()
        if t.kind == "NUM":
            self.take()
            return Num(t.value)
        if t.kind == "NORM":
            self.take()
            return FreqNorm()
        if t.kind == "BRACKET":
            self.take()
            return Bracket()
        if t.kind == "OP" and t.text == "(":
            self.take()
            e = self.expr()
            self.expect_op(")")
            return e
        if t.kind == "NAME":
            self.take()
            return self.name_atom(t)
        raise ParseError(t.pos, "expression", self.text)

    def name_atom(self, t: _Token) -> SymbolExpr:
        name = t.text
        if name == "pi":
            return Pi()
        if name in FUNCTIONS:
            self.expect_op("(")
            arg = self.expr()
            self.expect_op(")")
            return Call(name, arg)
        for kind in ("theta", "xi", "x"):  # longest prefix first
            if name.startswith(kind) and name[len(kind) :].isdigit():
                idx = int(name[len(kind) :])
                if not 1 <= idx <= self.n:
                    raise DimensionError(t.pos, f"variable index <= {self.n}", self.text)
                return Var(kind, idx)
        raise ParseError(t.pos, "variable, 'pi' or function name", self.text)


def parse(text: str, n: int) -> SymbolExpr:
    """Parse an expression over dimension n; raises ParseError on any
    malformed input (never aborts)."""
    if n < 1:
        raise UsageError(f"dimension must be >= 1, got {n}")
    return _Parser(text, n).parse()


# ---------------------------------------------------------------------------
# Evaluation


def _vec(arr):
    a = np.asarray(arr, dtype=float)
    return a[None] if a.ndim == 0 else a  # bare scalar acts as a 1-vector


def _coord(arr, index: int, what: str):
    if arr is None:
        raise EvalError(what, "variable not available in this context")
    return _vec(arr)[..., index - 1]


def eval_expr(e: SymbolExpr, first, x, theta=None):
    """Evaluate over frequency-like first argument, torus point x and
    optional unit direction theta.  Arguments broadcast; the last axis
    is the coordinate axis."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Pi):
        return np.pi
    if isinstance(e, Var):
        if e.kind == "x":
            return _coord(x, e.index, "x")
        if e.kind == "xi":
            return _coord(first, e.index, "xi")
        return _coord(theta, e.index, "theta")
    if isinstance(e, FreqNorm):
        if first is None:
            raise EvalError("|xi|", "variable not available in this context")
        return np.sqrt(np.sum(_vec(first) ** 2, axis=-1))
    if isinstance(e, Bracket):
        if first is None:
            raise EvalError("<xi>", "variable not available in this context")
        return np.sqrt(1.0 + np.sum(_vec(first) ** 2, axis=-1))
    if isinstance(e, Neg):
        return -eval_expr(e.arg, first, x, theta)
    if isinstance(e, Call):
        with np.errstate(over="ignore", invalid="ignore"):
            out = FUNCTIONS[e.fn](eval_expr(e.arg, first, x, theta))
        _check_finite(out, e)
        return out
    # BinOp
    lv = eval_expr(e.left, first, x, theta)
    rv = eval_expr(e.right, first, x, theta)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if e.op == "+":
            out = lv + rv
        elif e.op == "-":
            out = lv - rv
        elif e.op == "*":
            out = lv * rv
        elif e.op == "/":
            out = np.divide(lv, rv)
        else:
            out = np.power(lv, rv)
    _check_finite(out, e)
    return out


def _check_finite(out, node):
    if not np.all(np.isfinite(out)):
        if isinstance(node, BinOp) and node.op == "/":
            reason = "division by zero"
        elif isinstance(node, BinOp) and node.op == "^":
            reason = "invalid power (zero or negative base)"
        else:
            reason = "non-finite result"
        raise EvalError(unparse(node), reason)


# ---------------------------------------------------------------------------
# Pretty-printing (round-trips through parse)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "NEG": 3, "^": 4, "ATOM": 5}


def _prec(e: SymbolExpr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["NEG"]
    return _PREC["ATOM"]


def unparse(e: SymbolExpr) -> str:
    """Render the tree; parse(unparse(parse(t))) == parse(t)."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Var):
        return f"{e.kind}{e.index}"
    if isinstance(e, FreqNorm):
        return "|xi|"
    if isinstance(e, Bracket):
        return "<xi>"
    if isinstance(e, Call):
        return f"{e.fn}({unparse(e.arg)})"
    if isinstance(e, Neg):
        inner = unparse(e.arg)
        # the grammar's unary minus applies to an atom-with-power only
        if isinstance(e.arg, (BinOp,)) and e.arg.op != "^":
            inner = f"({inner})"
        elif isinstance(e.arg, Neg):
            inner = f"({inner})"
        return f"-{inner}"
    # BinOp
    left, right = unparse(e.left), unparse(e.right)
    if e.op == "^":
        if _prec(e.left) < _PREC["ATOM"]:
            left = f"({left})"
        # right side of '^' is a factor: a bare unary or power is fine
        if isinstance(e.right, BinOp) and e.right.op != "^":
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < _PREC[e.op]:
        left = f"({left})"
    if _prec(e.right) <= _PREC[e.op]:
        right = f"({right})"
    return f"{left}{e.op}{right}"


def references(e: SymbolExpr, kinds: tuple[str, ...]) -> bool:
    """True if the tree uses any variable of the given kinds (with
    'xi' covering |xi| and <xi> as well)."""
    for node in walk(e):
        if isinstance(node, Var) and node.kind in kinds:
            return True
        if isinstance(node, (FreqNorm, Bracket)) and "xi" in kinds:
            return True
    return False


# ---------------------------------------------------------------------------
# Expression -> Symbol assembly


def _as_ast(expr, n: int) -> SymbolExpr:
    return parse(expr, n) if isinstance(expr, str) else expr


def to_symbol(
    main,
    *,
    n: int,
    order: float,
    rho: float = 1.0,
    delta: float = 0.0,
    main_im=None,
    classical_terms=None,
    cutoff_radius: float = 1.0,
    side: str = "discrete",
):
    """Assemble a Symbol from expression text (or parsed trees).

    classical_terms is a list of (degree, angular_expr) pairs whose
    degrees must descend by exactly 1 from `order`; angular expressions
    use theta1..thetan and x1..xn (no xi).  The main expression may be
    complex-valued via the optional imaginary part main_im.
    """
    from . import symbols as sym  # local import keeps dsl importable standalone

    main_ast = _as_ast(main, n)
    im_ast = _as_ast(main_im, n) if main_im is not None else None
    for ast in (main_ast, im_ast):
        if ast is not None and references(ast, ("theta",)):
            raise UsageError("main expression must not reference theta variables")

    def func(first, x):
        re = eval_expr(main_ast, first, x)
        if im_ast is None:
            return re
        return re + 1j * eval_expr(im_ast, first, x)

    classical = None
    if classical_terms:
        terms = []
        for j, (degree, angular_expr) in enumerate(classical_terms):
            if abs(float(degree) - (order - j)) > 1e-9:
                raise UsageError(
                    f"classical degree ladder violated: term {j} has degree "
                    f"{degree}, expected {order - j}"
                )
            ast = _as_ast(angular_expr, n)
            if references(ast, ("xi",)):
                raise UsageError("angular parts must use theta, not xi")
            terms.append(sym.ClassicalTerm(float(degree), _angular_fn(ast)))
        classical = sym.ClassicalStructure(tuple(terms), float(cutoff_radius))

    return sym.Symbol(func, float(order), float(rho), float(delta), side, classical)


def _angular_fn(ast: SymbolExpr):
    def angular(x, theta):
        return eval_expr(ast, None, x, theta)

    return angular
