"""Infix expressions in the single variable ``lambda``.

Grammar (lowest to highest binding)::

    expr    := term (('+' | '-') term)*
    term    := power (('*' | '/') power)*
    power   := unary ('^' power)?          # right associative
    unary   := '-' unary | atom
    atom    := NUMBER | 'lambda' | 'pi' | 'e'
             | FUNC '(' expr ')' | '(' expr ')'

so unary minus binds tighter than ``^``: ``-2^2`` is 4.
"""

import math
import re
from dataclasses import dataclass

from .errors import ExpressionError, ExpressionSyntaxError, UnknownIdentifierError

FUNCTIONS = ("sin", "cos", "tan", "sqrt", "exp", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLE = "lambda"


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    end = len(text)
    while pos < end:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(f"unexpected character {text[bad]!r}", _byte_offset(text, bad))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte_offset(text, index):
    return len(text[:index].encode("utf-8"))


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok):
        return ExpressionSyntaxError(message, _byte_offset(self.text, tok[2]))

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] == "end":
            raise self.error(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok)

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(f"unexpected {tok[1]!r}", tok)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.power()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.power())
        return node

    def power(self):
        base = self.unary()
        if self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.power())
        return base

    def unary(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.unary())
        return self.atom()

    def atom(self):
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if value == VARIABLE:
                return Var()
            if value in CONSTANTS:
                return Const(value)
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            raise UnknownIdentifierError(f"unknown identifier {value!r}", _byte_offset(self.text, tok[2]))
        if value == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise self.error(f"unexpected {value or 'end of input'!r}", tok)


def parse_expression(text):
    """Parse ``text`` into an expression tree; raises ExpressionSyntaxError."""
    return _Parser(text).parse()


def evaluate(node, lam):
    """Evaluate a tree at ``lambda = lam``."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return float(lam)
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.operand, lam)
    if isinstance(node, Call):
        x = evaluate(node.arg, lam)
        if node.func == "sqrt":
            if x < 0:
                raise ExpressionError(f"sqrt of negative value {x}")
            return math.sqrt(x)
        if node.func == "abs":
            return abs(x)
        try:
            return getattr(math, node.func)(x)
        except OverflowError:
            return math.inf
    if isinstance(node, BinOp):
        a = evaluate(node.left, lam)
        b = evaluate(node.right, lam)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if b == 0:
                raise ExpressionError("division by zero")
            return a / b
        try:
            r = a**b
        except ZeroDivisionError:
            raise ExpressionError("zero raised to a negative power") from None
        except OverflowError:
            return math.inf
        if isinstance(r, complex):
            raise ExpressionError(f"{a} ^ {b} is not real")
        return r
    raise TypeError(f"not an expression node: {node!r}")


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 4
    return 5


def _fmt_num(x):
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def to_text(node):
    """Print with the fewest parentheses that re-parse to the same tree."""
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return VARIABLE
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        return "-" + (inner if _prec(node.operand) >= 4 else f"({inner})")
    p = _PREC[node.op]
    left = to_text(node.left)
    right = to_text(node.right)
    if node.op == "^":
        if _prec(node.left) < 4:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
    else:
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
    return f"{left} {node.op} {right}"


class Expression:
    """Parsed expression bundled with its canonical text."""

    __slots__ = ("source", "tree")

    def __init__(self, source):
        self.source = source
        self.tree = parse_expression(source)

    def __call__(self, lam):
        return evaluate(self.tree, lam)

    @property
    def canonical(self):
        return to_text(self.tree)

    def __eq__(self, other):
        return isinstance(other, Expression) and self.tree == other.tree

    def __hash__(self):
        return hash(self.tree)

    def __repr__(self):
        return f"Expression({self.canonical!r})"
