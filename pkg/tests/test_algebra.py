import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from orthantwalks.algebra import (
    MERSENNE61,
    BinOp,
    ExprSyntaxError,
    Neg,
    Num,
    Pow,
    PrimeField,
    SingularEvaluation,
    Var,
    eval_expr,
    expr_variables,
    is_probable_prime,
    parse_rational_expr,
    random_points,
    render_expr,
)

F = PrimeField()
P = MERSENNE61
elements = st.integers(0, P - 1)
nonzero = st.integers(1, P - 1)


@given(elements, elements, elements)
def test_field_axioms(a, b, c):
    assert F.add(F.add(a, b), c) == F.add(a, F.add(b, c))
    assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
    assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    assert F.add(a, F.neg(a)) == 0
    assert F.sub(a, b) == F.add(a, F.neg(b))


@given(nonzero, st.integers(-50, 50))
def test_inverse_and_powers(a, e):
    assert F.mul(a, F.inv(a)) == 1
    assert F.mul(F.pow(a, e), F.pow(a, -e)) == 1


def test_inverse_of_zero():
    with pytest.raises(SingularEvaluation):
        F.inv(0)


def test_field_rejects_composites():
    assert is_probable_prime(MERSENNE61) and is_probable_prime((1 << 31) - 1)
    with pytest.raises(ValueError):
        PrimeField(2**61 + 1)


def test_parse_printed_orbit_sum_shape():
    e = parse_rational_expr("(w^2 - y)*(w*y - x)/(w^4*x^4*y^4*z^4)")
    assert isinstance(e, BinOp) and e.op == "/"
    num = e.left
    assert isinstance(num, BinOp) and num.op == "*"
    assert all(isinstance(side, BinOp) and side.op == "-" for side in (num.left, num.right))
    assert expr_variables(e) == {"w", "x", "y", "z"}


def test_small_expressions():
    assert parse_rational_expr("x") == Var("x")
    assert eval_expr(parse_rational_expr("1/(1 - 0)"), {}) == 1
    assert eval_expr(parse_rational_expr("x + y"), {"x": 2, "y": 3}) == 5
    assert eval_expr(parse_rational_expr("x^-1"), {"x": 2}) == pow(2, -1, P)
    assert eval_expr(parse_rational_expr("-x - -3"), {"x": 5}) == P - 2
    assert eval_expr(parse_rational_expr("2*x^3 / x"), {"x": 7}) == 98


@pytest.mark.parametrize("text,pos", [("x + ", 4), ("(x", 2), ("x $ y", 2), ("x y", 2), ("x^y", 2)])
def test_syntax_errors_carry_position(text, pos):
    with pytest.raises(ExprSyntaxError) as info:
        parse_rational_expr(text)
    assert info.value.position == pos


def test_eval_errors():
    with pytest.raises(SingularEvaluation):
        eval_expr(parse_rational_expr("1/(x - x)"), {"x": 3})
    with pytest.raises(KeyError, match="unbound"):
        eval_expr(parse_rational_expr("x + q"), {"x": 1})


_leaves = st.one_of(st.integers(0, 50).map(Num), st.sampled_from("wxyz").map(Var))
exprs = st.recursive(
    _leaves,
    lambda kids: st.one_of(
        kids.map(Neg),
        st.tuples(st.sampled_from("+-*/"), kids, kids).map(lambda t: BinOp(*t)),
        st.tuples(kids, st.integers(-4, 4)).map(lambda t: Pow(*t)),
    ),
    max_leaves=12,
)


@given(exprs, st.integers(0, 2**32))
def test_render_parse_round_trip(e, seed):
    back = parse_rational_expr(render_expr(e))
    assert back == e
    pt = dict(zip("wxyz", random_points(1, seed, 4)[0]))
    try:
        value = eval_expr(e, pt)
    except SingularEvaluation:
        return
    assert eval_expr(back, pt) == value


def test_random_points_are_reproducible_and_nonzero():
    assert random_points(5, 42, 4) == random_points(5, 42, 4)
    pts = random_points(250_000, 7, 4)
    assert all(0 < c < P for pt in pts for c in pt)
    firsts = {random_points(1, s, 4)[0] for s in range(100)}
    assert len(firsts) == 100


def test_random_points_small_prime_range():
    pts = random_points(10_000, 3, 2, p=5)
    assert {c for pt in pts for c in pt} == {1, 2, 3, 4}


def test_planted_nonzero_expression_detected():
    # (x - y)^3 * z is nonzero; it must not vanish at four random points
    e = parse_rational_expr("(x - y)^3 * z + 0*w")
    rng = random.Random(5)
    for _ in range(20):
        pts = [dict(zip("wxyz", pt)) for pt in random_points(4, rng.getrandbits(32), 4)]
        assert any(eval_expr(e, pt) for pt in pts)
    assert F.zero_test_error_bound(10_000, 4) < 2.0**-180
