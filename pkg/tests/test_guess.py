import json
import random
from math import comb, factorial

import pytest

from orthantwalks.algebra import MERSENNE61
from orthantwalks.counting import count_walks
from orthantwalks.guess import (
    InsufficientTerms,
    OdeCandidate,
    RecurrenceCandidate,
    guess_ode,
    guess_recurrence,
    nullspace_mod,
    required_terms,
    verify_relation,
)
from orthantwalks.stepset import parse_step_set

P = MERSENNE61
Q = (1 << 31) - 1


def catalan(n):
    return [comb(2 * k, k) // (k + 1) for k in range(n)]


def motzkin(n):
    out = [1, 1]
    for k in range(1, n - 1):
        out.append(((2 * k + 3) * out[k] + 3 * k * out[k - 1]) // (k + 3))
    return out[:n]


def kreweras_excursions(n):
    return [4**k * factorial(3 * k) // (factorial(k + 1) * factorial(2 * k + 1)) for k in range(n)]


D_FINITE = {
    "catalan": catalan(80),
    "central": [comb(2 * k, k) for k in range(80)],
    "motzkin": motzkin(80),
    "factorial": [factorial(k) for k in range(80)],
    "kreweras_excursions": kreweras_excursions(80),
}


def scaled(coeffs, p):
    """Coefficient table normalised so the first nonzero entry is 1."""
    flat = [c % p for row in coeffs for c in row]
    lead = next(c for c in flat if c)
    inv = pow(lead, -1, p)
    return [c * inv % p for c in flat]


def test_catalan_recurrence():
    c = guess_recurrence(catalan(60))
    assert (c.order, c.degree) == (1, 1)
    # (4n+2) a_n - (n+2) a_{n+1} = 0, coefficients c[i][j] of n^j a_{n+i}
    assert scaled(c.coeffs, P) == scaled([[2, 4], [-2, -1]], P)
    assert verify_relation(c, catalan(500))


def test_constant_sequence():
    c = guess_recurrence([1] * 60)
    assert (c.order, c.degree) == (1, 0)
    assert scaled(c.coeffs, P) == scaled([[1], [-1]], P)


def test_geometric_series_ode():
    c = guess_ode([1] * 60)
    assert (c.order, c.degree) == (1, 1)
    # (1 - t) f' - f = 0: c[0] = [-1, 0], c[1] = [1, -1]
    assert scaled(c.coeffs, P) == scaled([[-1, 0], [1, -1]], P)


def test_catalan_ode():
    c = guess_ode(catalan(60))
    assert c.order <= 2 and c.degree <= 2
    assert verify_relation(c, catalan(300))


def test_random_sequences_rejected():
    for seed in range(50):
        rng = random.Random(seed)
        seq = [rng.randrange(P) for _ in range(200)]
        assert guess_recurrence(seq) is None
        assert guess_ode(seq) is None


def test_insufficient_terms_reports_requirement():
    need = required_terms(4, 4, 20)
    assert need == 25 + 20 + 4
    with pytest.raises(InsufficientTerms, match=str(need)):
        guess_recurrence(catalan(need - 1))
    assert guess_recurrence(catalan(need)) is not None


def test_large_operator_out_of_desk_reach():
    # the order-12 / degree-135 ODE of the "recurrence" model needs far more terms than desk scale allows
    s = parse_step_set("-0-0,0--+,-00+,0-0-,++00,-0+-,0-+0")
    seq = count_walks(s, 39, "modular").terms
    with pytest.raises(InsufficientTerms) as info:
        guess_ode(seq, 12, 135)
    assert info.value.need == 13 * 136 + 20 + 12 > 200


def test_verify_relation_fresh_terms_and_mutation():
    c = guess_recurrence(catalan(60))
    assert verify_relation(c, catalan(500))
    coeffs = [list(r) for r in c.coeffs]
    coeffs[1][0] = (coeffs[1][0] + 1) % P
    bad = RecurrenceCandidate(c.order, c.degree, tuple(map(tuple, coeffs)), c.prime, c.start)
    assert not verify_relation(bad, catalan(500))
    assert verify_relation(bad, [0] * 100)
    ode = guess_ode(catalan(60))
    assert verify_relation(ode, [0] * 50)


@pytest.mark.parametrize("name", sorted(D_FINITE))
def test_accepted_candidates_annihilate_everything(name):
    seq = D_FINITE[name]
    for guess in (guess_recurrence, guess_ode):
        c = guess(seq)
        assert c is not None
        terms = [t % P for t in seq]
        assert all(c.residual(terms, n) == 0 for n in c.indices(len(terms)))


@pytest.mark.parametrize("name", sorted(D_FINITE))
def test_acceptance_stable_across_primes(name):
    seq = D_FINITE[name]
    for guess in (guess_recurrence, guess_ode):
        a, b = guess(seq, prime=P), guess(seq, prime=Q)
        assert (a.order, a.degree) == (b.order, b.degree)


@pytest.mark.parametrize("name", sorted(D_FINITE))
def test_returned_cell_is_minimal(name):
    seq = D_FINITE[name]
    c = guess_recurrence(seq)
    total = c.order + c.degree
    for r in range(1, total):
        for d in range(0, total - r):
            cell = guess_recurrence(seq, r, d)
            assert cell is None or cell.order + cell.degree >= total


def test_modular_sequence_prime_must_match():
    # walks on a half-line: central binomial numbers, order 2 degree 1
    seq = count_walks(parse_step_set("-0,+0"), 59, "modular", prime=Q)
    assert guess_recurrence(seq, prime=Q) is not None
    with pytest.raises(ValueError):
        guess_recurrence(seq, prime=P)


def test_nullspace_mod():
    basis = nullspace_mod([[1, 2, 3], [2, 4, 6]], 3, 7)
    assert len(basis) == 2
    for v in basis:
        assert (v[0] + 2 * v[1] + 3 * v[2]) % 7 == 0
    assert nullspace_mod([[1, 0], [0, 1]], 2, 7) == []


def test_candidate_json():
    c = guess_recurrence(catalan(60))
    obj = json.loads(json.dumps(c.to_json()))
    assert obj["kind"] == "recurrence" and obj["order"] == 1 and obj["prime"] == P
    assert obj["coeffs"] == [list(r) for r in c.coeffs]
    o = guess_ode([1] * 60)
    assert isinstance(o, OdeCandidate) and o.to_json()["kind"] == "ode"
