"""The group of a walk model, handled through evaluation fingerprints.

For coordinate ``i`` write the inventory as
``P = x_i A_plus + A_zero + x_i^{-1} A_minus`` with ``A_plus``, ``A_minus`` free of
``x_i``.  The involution ``phi_i`` replaces ``x_i`` by
``A_minus / (x_i A_plus)`` and fixes the other coordinates.  A group element
is known only through the images of a few random points of a prime field,
which is enough to tell elements apart except with negligible probability.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

from .algebra import (
    DEFAULT_PRIME,
    Expr,
    PrimeField,
    SingularEvaluation,
    derive_seed,
    eval_expr,
    random_points,
)
from .stepset import CoordinatePermutation, Step, StepSet, permutations

MAX_RETRIES = 5


class GroupUndefined(ValueError):
    """Some coordinate lacks a +1 or a -1 step."""


class ParityConflict(ArithmeticError):
    """One element was reached by words of both parities."""


@dataclass(frozen=True)
class BirationalGenerator:
    index: int
    numerator_steps: tuple[Step, ...]  # steps with s_i = -1
    denominator_steps: tuple[Step, ...]  # steps with s_i = +1

    def _scaled_sum(self, steps, x, p):
        # A-sum times prod_{d != i} x_d: exponents shift from {-1,0,1} to {0,1,2}
        total = 0
        i = self.index
        for s in steps:
            term = 1
            for d, c in enumerate(s):
                if d == i or c == -1:
                    continue
                term = term * x[d] % p
                if c == 1:
                    term = term * x[d] % p
            total += term
        return total % p

    def apply(self, point: Sequence[int], field: PrimeField) -> tuple[int, ...]:
        p = field.p
        num = self._scaled_sum(self.numerator_steps, point, p)
        den = point[self.index] * self._scaled_sum(self.denominator_steps, point, p) % p
        if num == 0 or den == 0 or any(x % p == 0 for x in point):
            raise SingularEvaluation(f"phi_{self.index + 1} is singular at this point")
        out = list(point)
        out[self.index] = num * field.inv(den) % p
        return tuple(out)


def generators(s: StepSet) -> list[BirationalGenerator]:
    gens = []
    for i in range(s.D):
        minus = tuple(st for st in s.steps if st[i] == -1)
        plus = tuple(st for st in s.steps if st[i] == 1)
        if not minus or not plus:
            raise GroupUndefined(f"group undefined for this model: coordinate {i + 1} lacks a "
                                 f"{'-1' if not minus else '+1'} step")
        gens.append(BirationalGenerator(i, minus, plus))
    return gens


@dataclass(frozen=True)
class GroupElement:
    fingerprint: tuple[tuple[int, ...], ...]
    word: tuple[int, ...]  # generator indices in order of application

    @property
    def sign(self) -> int:
        return -1 if len(self.word) % 2 else 1


@dataclass
class GroupResult:
    model: StepSet
    bound: int
    finite: bool
    elements: list[GroupElement]
    points: list[tuple[int, ...]]
    prime: int
    seed: int
    parity_conflict: bool = False
    _histogram: Optional[dict[int, int]] = field(default=None, repr=False)

    @property
    def order(self) -> Optional[int]:
        return len(self.elements) if self.finite else None

    @property
    def exceeds_bound(self) -> bool:
        return not self.finite

    @cached_property
    def field(self) -> PrimeField:
        return PrimeField(self.prime)

    @cached_property
    def generators(self) -> list[BirationalGenerator]:
        return generators(self.model)

    @property
    def order_histogram(self) -> Optional[dict[int, int]]:
        if not self.finite:
            return None
        if self._histogram is None:
            self._histogram = group_signature(self)
        return self._histogram

    def to_json(self, orbit_sum_zero: Optional[dict] = None) -> dict:
        hist = self.order_histogram
        return {
            "order": self.order,
            "exceeds_bound": self.exceeds_bound,
            "orbit_sum_zero": orbit_sum_zero,
            "order_histogram": None if hist is None else {str(k): v for k, v in sorted(hist.items())},
        }


def apply_word(gens: Sequence[BirationalGenerator], word: Sequence[int], point, field: PrimeField):
    for i in word:
        point = gens[i].apply(point, field)
    return point


def element_images(g: GroupResult, e: GroupElement, point) -> tuple[int, ...]:
    return apply_word(g.generators, e.word, tuple(point), g.field)


def orbit_images(g: GroupResult, point) -> list[tuple[int, ...]]:
    """Images of ``point`` under every element, in element order.

    Each element's word extends an earlier element's word by one generator,
    so this costs one generator application per element.
    """
    gens, field = g.generators, g.field
    position = {e.word: q for q, e in enumerate(g.elements)}
    out = [tuple(point)]
    for e in g.elements[1:]:
        parent = out[position[e.word[:-1]]]
        out.append(gens[e.word[-1]].apply(parent, field))
    return out


def _closure(gens, points, bound, field):
    identity = GroupElement(tuple(points), ())
    index = {identity.fingerprint: identity}
    elements = [identity]
    queue = deque([identity])
    conflict = False
    while queue:
        e = queue.popleft()
        for gen in gens:
            fp = tuple(gen.apply(x, field) for x in e.fingerprint)
            known = index.get(fp)
            if known is not None:
                if len(known.word) % 2 != (len(e.word) + 1) % 2:
                    conflict = True
                continue
            if len(elements) >= bound:
                return elements, False, conflict
            new = GroupElement(fp, e.word + (gen.index,))
            index[fp] = new
            elements.append(new)
            queue.append(new)
    return elements, True, conflict


def group_bfs(s: StepSet, bound: int = 800, k_points: int = 4, seed: int = 0,
              prime: int = DEFAULT_PRIME) -> GroupResult:
    """Breadth-first closure of the identity under the generators.

    Finite when the closure completes with at most ``bound`` elements.
    Singular points trigger a resample with a derived seed.
    """
    if bound < 1:
        raise ValueError("bound must be positive")
    if k_points < 2:
        raise ValueError("need at least two fingerprint points")
    gens = generators(s)
    field = PrimeField(prime)
    for attempt in range(MAX_RETRIES + 1):
        pts = random_points(k_points, derive_seed(seed, attempt), s.D, prime)
        try:
            elements, finite, conflict = _closure(gens, pts, bound, field)
        except SingularEvaluation:
            continue
        return GroupResult(s, bound, finite, elements if finite else [], pts, prime, seed, conflict)
    raise SingularEvaluation(f"group evaluation stayed singular after {MAX_RETRIES} retries")


def _monomial(point, p):
    out = 1
    for x in point:
        out = out * x % p
    return out


def orbit_sum_eval(g: GroupResult, point: Sequence[int], signed: bool = True) -> int:
    """``sum_g (sign g) * prod(g(point))`` over the group elements."""
    if not g.finite:
        raise ValueError("orbit sum needs a finite group")
    if signed and g.parity_conflict:
        raise ParityConflict("signs are not well defined for this group")
    p = g.prime
    total = 0
    for e, y in zip(g.elements, orbit_images(g, point)):
        value = _monomial(y, p)
        total += -value if signed and e.sign < 0 else value
    return total % p


def _orbit_sums_at(g: GroupResult, point) -> tuple[int, int]:
    """(signed, unsigned) orbit sums at one point."""
    p = g.prime
    signed = unsigned = 0
    for e, y in zip(g.elements, orbit_images(g, point)):
        value = _monomial(y, p)
        unsigned += value
        signed += value * e.sign
    return signed % p, unsigned % p


@dataclass(frozen=True)
class OrbitSumVerdict:
    signed: Optional[bool]  # None when signs are ill defined
    unsigned: bool
    n_points: int
    log2_error_bound: float

    def to_json(self) -> dict:
        return {"signed": self.signed, "unsigned": self.unsigned}


# degree bound for the orbit sums handled here (rational functions of modest size)
ZERO_TEST_DEGREE = 10_000


def orbit_sum_zero_test(g: GroupResult, n_points: int = 8, seed: int = 1) -> OrbitSumVerdict:
    """Zero verdict per sign convention from ``n_points`` random evaluations.

    A nonzero orbit sum of degree at most ``ZERO_TEST_DEGREE`` is reported
    zero with probability at most ``2**log2_error_bound``.
    """
    if not g.finite:
        raise ValueError("orbit sum needs a finite group")
    signed_zero = unsigned_zero = True
    used = 0
    salt = 0
    while used < n_points:
        pt = random_points(1, derive_seed(seed, salt), g.model.D, g.prime)[0]
        salt += 1
        if salt > 10 * n_points + MAX_RETRIES:
            raise SingularEvaluation("too many singular points")
        try:
            sv, uv = _orbit_sums_at(g, pt)
        except SingularEvaluation:
            continue
        used += 1
        signed_zero &= sv == 0
        unsigned_zero &= uv == 0
    log2_bound = n_points * (math.log2(ZERO_TEST_DEGREE) - math.log2(g.prime - 1))
    return OrbitSumVerdict(None if g.parity_conflict else signed_zero, unsigned_zero, n_points, log2_bound)


@dataclass(frozen=True)
class ExpressionMatch:
    assignment: dict[str, int]  # variable name -> coordinate index
    permutation: CoordinatePermutation  # variable position -> coordinate
    signed: bool


def verify_orbit_sum_expression(g: GroupResult, e: Expr, var_names: Sequence[str], n_points: int = 12,
                                seed: int = 2) -> Optional[ExpressionMatch]:
    """Find an assignment of ``var_names`` to coordinates making ``e`` the orbit sum."""
    if not g.finite:
        raise ValueError("orbit sum needs a finite group")
    D = g.model.D
    if len(var_names) != D:
        raise ValueError(f"expected {D} variable names")
    field = g.field
    points, sums = [], []
    salt = 0
    while len(points) < n_points:
        pt = random_points(1, derive_seed(seed, salt), D, g.prime)[0]
        salt += 1
        if salt > 10 * n_points + MAX_RETRIES:
            raise SingularEvaluation("too many singular points")
        try:
            sums.append(_orbit_sums_at(g, pt))
            values = [eval_expr(e, {v: pt[c] for v, c in zip(var_names, perm)}, field)
                      for perm in permutations(D)]
        except SingularEvaluation:
            if len(sums) > len(points):
                sums.pop()
            continue
        points.append(values)
    conventions = [(True, 0), (False, 1)] if not g.parity_conflict else [(False, 1)]
    for q, perm in enumerate(permutations(D)):
        for signed, slot in conventions:
            if all(values[q] == sm[slot] for values, sm in zip(points, sums)):
                return ExpressionMatch(dict(zip(var_names, perm)), CoordinatePermutation(perm), signed)
    return None


def element_order(g: GroupResult, e: GroupElement) -> int:
    gens, field = g.generators, g.field
    base = g.elements[0].fingerprint
    cur = e.fingerprint
    order = 1
    cap = len(g.elements)
    while cur != base and order < cap:
        cur = tuple(apply_word(gens, e.word, x, field) for x in cur)
        order += 1
    return order


def group_signature(g: GroupResult) -> dict[int, int]:
    """Histogram element order -> number of elements."""
    if not g.finite:
        raise ValueError("signature needs a finite group")
    return dict(sorted(Counter(element_order(g, e) for e in g.elements).items()))


# --------------------------------------------------------------------------
# reference profiles of abstract groups, by brute force over permutations


def _perm_group_profile(gens: list[tuple[int, ...]]) -> dict[int, int]:
    n = len(gens[0])
    ident = tuple(range(n))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for a in frontier:
            for b in gens:
                c = tuple(b[a[i]] for i in range(n))
                if c not in seen:
                    seen.add(c)
                    nxt.append(c)
        frontier = nxt
    hist = Counter()
    for a in seen:
        k, cur = 1, a
        while cur != ident:
            cur = tuple(a[cur[i]] for i in range(n))
            k += 1
        hist[k] += 1
    return dict(sorted(hist.items()))


def _direct_sum_gens(*blocks: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    sizes = [len(b[0]) for b in blocks]
    total = sum(sizes)
    out = []
    offset = 0
    for b, size in zip(blocks, sizes):
        for perm in b:
            full = list(range(total))
            for i, j in enumerate(perm):
                full[offset + i] = offset + j
            out.append(tuple(full))
        offset += size
    return out


_C2 = [(1, 0)]
_S3 = [(1, 0, 2), (0, 2, 1)]
_S5 = [(1, 0, 2, 3, 4), (1, 2, 3, 4, 0)]


def known_group_profiles() -> dict[str, tuple[int, dict[int, int]]]:
    """Order and element-order histogram of the group types met in 4D."""
    profiles = {}
    for name, gens in (
        ("C2xC2xS3", _direct_sum_gens(_C2, _C2, _S3)),
        ("S3xS3", _direct_sum_gens(_S3, _S3)),
        ("S5", _S5),
    ):
        hist = _perm_group_profile(gens)
        profiles[name] = (sum(hist.values()), hist)
    return profiles


def identify_group(g: GroupResult) -> Optional[str]:
    if not g.finite:
        return None
    hist = g.order_histogram
    for name, (order, profile) in known_group_profiles().items():
        if order == g.order and profile == hist:
            return name
    return None
