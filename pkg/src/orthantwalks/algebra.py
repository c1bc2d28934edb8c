"""Prime-field arithmetic, seeded evaluation points and rational expressions.

Every identity test in this package is done by evaluation at random points of
a prime field, so nothing here does symbolic simplification.  Field elements
are plain Python ints in ``[0, p)``; a :class:`PrimeField` carries the modulus.

Expressions follow a small explicit grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' signed-int)?
    base   := number | identifier | '(' expr ')' | '-' base

Juxtaposition is not multiplication; write ``w*x`` rather than ``w x``.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

MERSENNE61 = (1 << 61) - 1
DEFAULT_PRIME = MERSENNE61


class SingularEvaluation(ZeroDivisionError):
    """An expression or map hit a division by zero at the sampled point."""


def is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for q in small:
        if n % q == 0:
            return n == q
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    # deterministic for n < 3.3e24
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeField:
    p: int = DEFAULT_PRIME

    def __post_init__(self):
        if not is_probable_prime(self.p):
            raise ValueError(f"modulus {self.p} is not prime")

    def __call__(self, value: int) -> int:
        return value % self.p

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def neg(self, a: int) -> int:
        return -a % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise SingularEvaluation("inverse of zero")
        return pow(a, -1, self.p)

    def div(self, a: int, b: int) -> int:
        return a * self.inv(b) % self.p

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return pow(self.inv(a), -e, self.p)
        return pow(a, e, self.p)

    def zero_test_error_bound(self, degree: int, n_points: int) -> float:
        """Upper bound on P(nonzero expression of ``degree`` vanishes at all points)."""
        return (degree / (self.p - 1)) ** n_points


def random_points(count: int, seed: int, D: int, p: int = DEFAULT_PRIME) -> list[tuple[int, ...]]:
    """Deterministic points with every coordinate in ``[1, p-1]``."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = random.Random(seed)
    return [tuple(rng.randrange(1, p) for _ in range(D)) for _ in range(count)]


def derive_seed(seed: int, salt: int) -> int:
    """Child seed for resampling; stable across runs and platforms."""
    return random.Random(f"{seed}:{salt}").getrandbits(63)


# --------------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


Expr = Union[Num, Var, Neg, BinOp, Pow]


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unknown character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            raise ExprSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        node = self.base()
        if self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] in ("-", "+") and self.peek()[0] == "op":
                sign = -1 if self.take()[1] == "-" else 1
            kind, val, pos = self.take()
            if kind != "num":
                raise ExprSyntaxError("exponent must be an integer literal", pos)
            node = Pow(node, sign * int(val))
        return node

    def base(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Num(int(val))
        if kind == "ident":
            return Var(val)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if val == "-":
            return Neg(self.base())
        raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", pos)


def parse_rational_expr(text: str) -> Expr:
    parser = _Parser(text)
    node = parser.expr()
    kind, val, pos = parser.peek()
    if kind != "end":
        raise ExprSyntaxError(f"trailing input {val!r}", pos)
    return node


def render_expr(e: Expr) -> str:
    """Fully parenthesised text that parses back to an equal tree."""
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"-({render_expr(e.operand)})"
    if isinstance(e, Pow):
        return f"({render_expr(e.base)})^{e.exponent}"
    return f"({render_expr(e.left)} {e.op} {render_expr(e.right)})"


def expr_variables(e: Expr) -> set[str]:
    if isinstance(e, Num):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return expr_variables(e.operand)
    if isinstance(e, Pow):
        return expr_variables(e.base)
    return expr_variables(e.left) | expr_variables(e.right)


def eval_expr(e: Expr, assignment: Mapping[str, int], field: PrimeField = PrimeField()) -> int:
    """Value of ``e`` in the field; raises :class:`SingularEvaluation` on x/0."""
    p = field.p
    if isinstance(e, Num):
        return e.value % p
    if isinstance(e, Var):
        try:
            return assignment[e.name] % p
        except KeyError:
            raise KeyError(f"unbound identifier {e.name!r}") from None
    if isinstance(e, Neg):
        return -eval_expr(e.operand, assignment, field) % p
    if isinstance(e, Pow):
        return field.pow(eval_expr(e.base, assignment, field), e.exponent)
    a = eval_expr(e.left, assignment, field)
    b = eval_expr(e.right, assignment, field)
    if e.op == "+":
        return (a + b) % p
    if e.op == "-":
        return (a - b) % p
    if e.op == "*":
        return a * b % p
    return field.div(a, b)


def laurent_monomial(point: Sequence[int], exponents: Sequence[int], field: PrimeField) -> int:
    """Product of ``point[i] ** exponents[i]`` with negative powers inverted."""
    num, den = 1, 1
    p = field.p
    for x, e in zip(point, exponents):
        if e > 0:
            num = num * pow(x, e, p) % p
        elif e < 0:
            den = den * pow(x, -e, p) % p
    return field.div(num, den)
