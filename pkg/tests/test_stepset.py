import math
import random
import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_canonical_mask, mask_of, naive_step_poly, perm_orbit_count
from strategies import nonzero_steps, permutations_of, step_sets

from orthantwalks.algebra import PrimeField, SingularEvaluation
from orthantwalks.stepset import (
    CoordinatePermutation,
    StepSet,
    StepSetParseError,
    all_steps,
    canonical_form,
    enumerate_step_sets,
    enumeration_chunks,
    is_canonical,
    parse_step_set,
    raw_count,
    render_step_set,
    step_index,
    step_polynomial_eval,
)


def test_parse_table_row():
    s = parse_step_set("---0,--0-,--++,-+00,+0--,+00+,+0+0", 4)
    assert s.cardinality == 7
    assert (-1, -1, -1, 0) in s
    assert (1, 0, 1, 0) in s


def test_parse_singleton_and_five_step_model():
    assert parse_step_set("+000", 4).steps == ((1, 0, 0, 0),)
    assert len(parse_step_set("0-00,00-0,000-,+000,-+++", 4)) == 5


def test_duplicates_collapse():
    assert parse_step_set("+000,+000,-+++") == parse_step_set("-+++,+000")


@pytest.mark.parametrize("text,needle", [("+00,--0", "'+00'"), ("+0x0", "'x'"), ("0000", "'0000'"),
                                         ("+000,-0-", "'-0-'")])
def test_parse_errors_name_the_token(text, needle):
    with pytest.raises(StepSetParseError, match=re.escape(needle)):
        parse_step_set(text, 4)


def test_render_round_trip_and_order():
    assert render_step_set(parse_step_set("---0,-+00")) == "---0,-+00"
    assert render_step_set(parse_step_set("+0+0,---0")) == render_step_set(parse_step_set("---0,+0+0"))
    assert render_step_set(StepSet(4, 0)) == ""
    assert parse_step_set("", 4) == StepSet(4, 0)


@pytest.mark.parametrize("D", [2, 3, 4])
def test_bit_index_is_a_bijection(D):
    steps = all_steps(D)
    assert len(steps) == 3**D - 1
    assert [step_index(s) for s in steps] == list(range(3**D - 1))
    # the ordering is the ternary code, first coordinate most significant
    assert steps == tuple(sorted(steps))


@given(step_sets(min_size=0))
def test_text_and_json_round_trip(s):
    assert parse_step_set(render_step_set(s), s.D) == s
    assert StepSet.from_json(s.to_json()) == s
    assert s.mask == mask_of(s.steps)


@given(step_sets(), st.data())
def test_permutation_inverse(s, data):
    perm = CoordinatePermutation(data.draw(permutations_of(s.D)))
    assert perm.inverse().apply(perm.apply(s)) == s
    assert perm.apply(s) == StepSet.from_steps([perm.apply_step(x) for x in s.steps], s.D)


@given(step_sets(), st.data())
def test_canonical_form_orbit_invariant(s, data):
    perm = CoordinatePermutation(data.draw(permutations_of(s.D)))
    c, witness = canonical_form(s)
    assert canonical_form(perm.apply(s))[0] == c
    assert canonical_form(c)[0] == c
    assert witness.apply(s) == c
    assert c.mask == brute_canonical_mask(s.steps, s.D)


def test_canonical_examples_from_text():
    a = StepSet.from_steps([(1, 0, 1, 1), (-1, 1, 0, 0), (0, 0, 0, 1)])
    b = StepSet.from_steps([(0, 1, 1, 1), (1, 0, -1, 0), (0, 1, 0, 0)])
    assert canonical_form(a)[0] == canonical_form(b)[0]
    axes = StepSet.from_steps([(1, 0), (-1, 0), (0, 1), (0, -1)])
    assert canonical_form(axes)[0] == axes


def test_small_and_cofinite_raw_count():
    total = sum(raw_count(4, k) for k in list(range(8)) + list(range(73, 81)))
    assert total == 7_005_847_194


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_enumeration_raw_counts_d4(k):
    assert enumerate_step_sets(4, k).raw == math.comb(80, k)


def test_enumeration_d4_singletons_match_orbit_count():
    count = enumerate_step_sets(4, 1)
    assert count.raw == 80
    assert count.canonical == perm_orbit_count(4, 1) == 14


@pytest.mark.parametrize("k", range(9))
def test_enumeration_d2_every_cardinality(k):
    seen = []
    count = enumerate_step_sets(2, k, seen.append)
    assert count.raw == math.comb(8, k)
    assert count.canonical == len(seen) == perm_orbit_count(2, k)
    assert all(is_canonical(s) for s in seen)
    assert [s.mask for s in seen] == sorted(s.mask for s in seen)


def test_enumeration_d3_pairs_match_orbit_count():
    assert enumerate_step_sets(3, 2).canonical == perm_orbit_count(3, 2)


def test_chunks_partition_the_enumeration():
    chunks = enumeration_chunks(3, 3)
    half = len(chunks) // 2
    a = enumerate_step_sets(3, 3, chunks=chunks[:half])
    b = enumerate_step_sets(3, 3, chunks=chunks[half:])
    total = enumerate_step_sets(3, 3)
    assert a.raw + b.raw == total.raw == math.comb(26, 3)
    assert a.canonical + b.canonical == total.canonical


def test_full_set_d2():
    count = enumerate_step_sets(2, 8)
    assert (count.raw, count.canonical) == (1, 1)


def test_step_polynomial_examples():
    f = PrimeField()
    p = f.p
    assert step_polynomial_eval(parse_step_set("+000"), (5, 6, 7, 8), f) == 5
    axes = StepSet.from_steps([s for s in nonzero_steps(4) if sum(map(abs, s)) == 1])
    pt = (3, 5, 7, 11)
    expected = sum(x + pow(x, -1, p) for x in pt) % p
    assert step_polynomial_eval(axes, pt, f) == expected
    s5 = parse_step_set("0-00,00-0,000-,+000,-+++")
    assert step_polynomial_eval(s5, (2, 3, 5, 7), f) == naive_step_poly(s5.steps, (2, 3, 5, 7))


def test_step_polynomial_matches_naive_oracle():
    rng = random.Random(11)
    f = PrimeField()
    for _ in range(1000):
        D = rng.choice((2, 3, 4))
        steps = rng.sample(nonzero_steps(D), rng.randint(1, 8))
        pt = tuple(rng.randrange(1, f.p) for _ in range(D))
        assert step_polynomial_eval(StepSet.from_steps(steps, D), pt, f) == naive_step_poly(steps, pt)


def test_step_polynomial_zero_coordinate():
    with pytest.raises(SingularEvaluation):
        step_polynomial_eval(parse_step_set("+000"), (1, 0, 1, 1))
