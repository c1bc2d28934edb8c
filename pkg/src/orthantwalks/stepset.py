"""Small-step sets in {-1,0,1}^D minus the origin, as bitmasks.

Bit ``i`` of a mask stands for the step whose ternary code
``(s_1+1, ..., s_D+1)`` (first coordinate most significant) equals ``i``,
with codes above the all-zero step shifted down by one.  For ``D = 4`` the
80 steps therefore occupy bits 0..79.

Text format: comma separated tokens over ``-``, ``0``, ``+``, for example
``"---0,--0-,--++"``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

from .algebra import PrimeField, SingularEvaluation

DIMENSIONS = (2, 3, 4)

Step = tuple[int, ...]

_CHAR_TO_COORD = {"-": -1, "0": 0, "+": 1}
_COORD_TO_CHAR = {-1: "-", 0: "0", 1: "+"}


class StepSetParseError(ValueError):
    pass


def n_steps(D: int) -> int:
    return 3**D - 1


def _check_dimension(D: int) -> None:
    if D not in DIMENSIONS:
        raise ValueError(f"dimension must be one of {DIMENSIONS}, got {D}")


def validate_step(step: Sequence[int]) -> Step:
    step = tuple(int(c) for c in step)
    if any(c not in (-1, 0, 1) for c in step):
        raise ValueError(f"step {step} has a coordinate outside {{-1,0,1}}")
    if not any(step):
        raise ValueError("the zero step is not a step")
    return step


def step_index(step: Sequence[int]) -> int:
    code = 0
    for c in step:
        code = 3 * code + c + 1
    zero = (3 ** len(step) - 1) // 2
    if code == zero:
        raise ValueError("the zero step has no index")
    return code if code < zero else code - 1


@lru_cache(maxsize=None)
def all_steps(D: int) -> tuple[Step, ...]:
    """Steps in bit-index order."""
    _check_dimension(D)
    return tuple(s for s in itertools.product((-1, 0, 1), repeat=D) if any(s))


@lru_cache(maxsize=None)
def step_array(D: int) -> np.ndarray:
    return np.array(all_steps(D), dtype=np.int8)


def format_step(step: Sequence[int]) -> str:
    return "".join(_COORD_TO_CHAR[c] for c in step)


@dataclass(frozen=True)
class CoordinatePermutation:
    """Moves coordinate ``i`` of a step to position ``perm[i]``."""

    perm: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"{self.perm} is not a permutation")

    @classmethod
    def identity(cls, D: int) -> "CoordinatePermutation":
        return cls(tuple(range(D)))

    def inverse(self) -> "CoordinatePermutation":
        inv = [0] * len(self.perm)
        for i, j in enumerate(self.perm):
            inv[j] = i
        return CoordinatePermutation(tuple(inv))

    def compose(self, other: "CoordinatePermutation") -> "CoordinatePermutation":
        """``self`` after ``other``."""
        return CoordinatePermutation(tuple(self.perm[j] for j in other.perm))

    def apply_step(self, step: Sequence[int]) -> Step:
        out = [0] * len(step)
        for i, c in enumerate(step):
            out[self.perm[i]] = c
        return tuple(out)

    def apply_point(self, point: Sequence) -> tuple:
        """Move the coordinates of any tuple the way step coordinates move."""
        out = [None] * len(point)
        for i, c in enumerate(point):
            out[self.perm[i]] = c
        return tuple(out)

    def apply(self, s: "StepSet") -> "StepSet":
        table = _perm_bit_table(s.D)[_perm_rank(self.perm)]
        mask = 0
        for i in s.indices():
            mask |= 1 << int(table[i])
        return StepSet(s.D, mask)


@lru_cache(maxsize=None)
def permutations(D: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.permutations(range(D)))


def _perm_rank(perm: tuple[int, ...]) -> int:
    return permutations(len(perm)).index(perm)


@lru_cache(maxsize=None)
def _perm_bit_table(D: int) -> np.ndarray:
    """``table[k, i]`` is the bit index of step ``i`` under permutation ``k``."""
    steps = all_steps(D)
    perms = permutations(D)
    table = np.empty((len(perms), len(steps)), dtype=np.int64)
    for k, perm in enumerate(perms):
        cp = CoordinatePermutation(perm)
        for i, s in enumerate(steps):
            table[k, i] = step_index(cp.apply_step(s))
    return table


@dataclass(frozen=True, order=True)
class StepSet:
    D: int
    mask: int

    def __post_init__(self):
        _check_dimension(self.D)
        if self.mask < 0 or self.mask >> n_steps(self.D):
            raise ValueError("mask out of range")

    @classmethod
    def from_steps(cls, steps: Iterable[Sequence[int]], D: Optional[int] = None) -> "StepSet":
        steps = [validate_step(s) for s in steps]
        if D is None:
            if not steps:
                raise ValueError("cannot infer the dimension of an empty step set")
            D = len(steps[0])
        mask = 0
        for s in steps:
            if len(s) != D:
                raise ValueError(f"step {s} does not have dimension {D}")
            mask |= 1 << step_index(s)
        return cls(D, mask)

    @classmethod
    def from_indices(cls, D: int, indices: Iterable[int]) -> "StepSet":
        mask = 0
        for i in indices:
            mask |= 1 << int(i)
        return cls(D, mask)

    @classmethod
    def parse(cls, text: str, D: Optional[int] = None) -> "StepSet":
        return parse_step_set(text, D)

    def indices(self) -> list[int]:
        out, m, i = [], self.mask, 0
        while m:
            if m & 1:
                out.append(i)
            m >>= 1
            i += 1
        return out

    @property
    def steps(self) -> tuple[Step, ...]:
        table = all_steps(self.D)
        return tuple(table[i] for i in self.indices())

    @property
    def cardinality(self) -> int:
        return bin(self.mask).count("1")

    def __len__(self) -> int:
        return self.cardinality

    def __iter__(self) -> Iterator[Step]:
        return iter(self.steps)

    def __contains__(self, step) -> bool:
        return bool(self.mask >> step_index(step) & 1)

    def __str__(self) -> str:
        return render_step_set(self)

    def without(self, steps: Iterable[Sequence[int]]) -> "StepSet":
        mask = self.mask
        for s in steps:
            mask &= ~(1 << step_index(s))
        return StepSet(self.D, mask)

    def to_json(self) -> dict:
        return {"D": self.D, "steps": [format_step(s) for s in self.steps]}

    @classmethod
    def from_json(cls, obj: dict) -> "StepSet":
        return cls.from_steps([[_CHAR_TO_COORD[c] for c in tok] for tok in obj["steps"]], obj["D"])


def parse_step_set(text: str, D: Optional[int] = None) -> StepSet:
    """Parse ``"---0,-+00"`` style text; duplicate tokens collapse."""
    tokens = [t.strip() for t in text.split(",")] if text.strip() else []
    if D is None:
        if not tokens:
            raise StepSetParseError("cannot infer the dimension of an empty step set")
        D = len(tokens[0])
    if D not in DIMENSIONS:
        raise StepSetParseError(f"unsupported dimension {D}")
    mask = 0
    for tok in tokens:
        if len(tok) != D:
            raise StepSetParseError(f"token {tok!r} does not have length {D}")
        bad = [c for c in tok if c not in _CHAR_TO_COORD]
        if bad:
            raise StepSetParseError(f"token {tok!r} contains invalid character {bad[0]!r}")
        step = tuple(_CHAR_TO_COORD[c] for c in tok)
        if not any(step):
            raise StepSetParseError(f"token {tok!r} is the zero step")
        mask |= 1 << step_index(step)
    return StepSet(D, mask)


def render_step_set(s: StepSet) -> str:
    return ",".join(format_step(step) for step in s.steps)


def canonical_form(s: StepSet) -> tuple[StepSet, CoordinatePermutation]:
    """Smallest mask (as an integer) over all coordinate permutations of ``s``."""
    table = _perm_bit_table(s.D)
    idx = s.indices()
    best_mask, best_k = None, 0
    for k in range(table.shape[0]):
        mask = 0
        for i in idx:
            mask |= 1 << int(table[k, i])
        if best_mask is None or mask < best_mask:
            best_mask, best_k = mask, k
    return StepSet(s.D, best_mask), CoordinatePermutation(permutations(s.D)[best_k])


def is_canonical(s: StepSet) -> bool:
    return canonical_form(s)[0].mask == s.mask


@dataclass(frozen=True)
class EnumerationCount:
    raw: int
    canonical: int


def raw_count(D: int, cardinality: int) -> int:
    return math.comb(n_steps(D), cardinality)


def enumerate_step_sets(
    D: int,
    cardinality: int,
    visitor: Optional[Callable[[StepSet], None]] = None,
    *,
    chunks: Optional[Iterable[tuple[int, ...]]] = None,
) -> EnumerationCount:
    """Call ``visitor`` once per canonical step set of the given size.

    Sets are visited in ascending mask order.  ``chunks`` restricts the run
    to some of the work units from :func:`enumeration_chunks` (for splitting a
    run across processes); the counts then cover only those chunks.
    """
    from . import _kernels

    _check_dimension(D)
    n = n_steps(D)
    if not 0 <= cardinality <= n:
        raise ValueError(f"cardinality must lie in [0, {n}]")
    tables = _kernels.tables(D)
    raw = canonical = 0
    for top in enumeration_chunks(D, cardinality) if chunks is None else chunks:
        n_raw, combos = _kernels.canonical_combos(tables, cardinality, np.asarray(top, dtype=np.int64))
        raw += n_raw
        canonical += len(combos)
        if visitor is not None:
            for row in combos:
                visitor(StepSet.from_indices(D, row))
    return EnumerationCount(raw, canonical)


def enumeration_chunks(D: int, cardinality: int) -> list[tuple[int, ...]]:
    """Work units: the (up to two) largest indices, ascending in colex order."""
    n = n_steps(D)
    if cardinality == 0:
        return [()]
    if cardinality == 1:
        return [(t,) for t in range(n)]
    return [(a, b) for a in range(cardinality - 1, n) for b in range(cardinality - 2, a)]


def step_polynomial_eval(s: StepSet, point: Sequence[int], field: PrimeField = PrimeField()) -> int:
    """Inventory ``sum_{step} x^step`` at ``point``; coordinates must be nonzero."""
    if len(point) != s.D:
        raise ValueError("point has the wrong dimension")
    if any(x % field.p == 0 for x in point):
        raise SingularEvaluation("step polynomial evaluated at a zero coordinate")
    p = field.p
    inv = [field.inv(x) for x in point]
    total = 0
    for step in s.steps:
        term = 1
        for x, xi, c in zip(point, inv, step):
            if c == 1:
                term = term * x % p
            elif c == -1:
                term = term * xi % p
        total += term
    return total % p
