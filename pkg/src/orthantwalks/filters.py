"""Structural filters on step sets: unused steps, model dimension, Hadamard splits."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence

from . import _kernels
from .stepset import Step, StepSet


class UnusedStepsUnstable(UserWarning):
    """The unused-step verdict changed when the search box was doubled."""


def unused_steps(s: StepSet, box_bound: int = 8, check_stability: bool = True) -> frozenset[Step]:
    """Steps that no walk confined to the orthant can ever take.

    Reachability is explored inside ``[0, box_bound]^D``; a step counts as
    used as soon as it is applicable at a reachable point.  Steps never
    applied are dropped and the search repeated until nothing changes.
    """
    if box_bound < 1:
        raise ValueError("box_bound must be at least 1")
    result = _unused_at(s, box_bound)
    if check_stability:
        wider = _unused_at(s, 2 * box_bound)
        if wider != result:
            warnings.warn(
                f"unused steps of {s} differ between box bounds {box_bound} and {2 * box_bound}",
                UnusedStepsUnstable,
                stacklevel=2,
            )
    return result


def _unused_at(s: StepSet, bound: int) -> frozenset[Step]:
    idx = s.indices()
    if not idx:
        return frozenset()
    kept = _kernels.kept_steps(_kernels.tables(s.D), idx, bound)
    steps = s.steps
    return frozenset(steps[j] for j in range(len(idx)) if not kept[j])


# --------------------------------------------------------------------------
# dimension


@dataclass(frozen=True)
class DimensionCertificate:
    redundant_coords: frozenset[int]
    # coordinate -> multipliers lambda_j (entry i itself is 0)
    multipliers: dict[int, tuple[Fraction, ...]] = field(default_factory=dict)
    # coordinate -> counting depth used by the heuristic
    heuristic: dict[int, int] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return "heuristic" if self.heuristic else "certified"

    def verify(self, s: StepSet) -> bool:
        """Re-check every multiplier witness by exact substitution."""
        for i, lam in self.multipliers.items():
            if any(x < 0 for x in lam) or lam[i] != 0:
                return False
            for step in s.steps:
                if step[i] < sum(l * c for l, c in zip(lam, step)):
                    return False
        return True

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "redundant": sorted(self.redundant_coords),
            "multipliers": {str(i): [str(x) for x in lam] for i, lam in sorted(self.multipliers.items())},
            "heuristic_depth": {str(i): d for i, d in sorted(self.heuristic.items())},
        }


def _fourier_motzkin(rows: list[tuple[list[Fraction], Fraction]], n_vars: int) -> Optional[list[Fraction]]:
    """A point with ``a . x <= b`` for all rows, or None if infeasible."""
    levels = [rows]
    for v in range(n_vars - 1, -1, -1):
        cur = levels[-1]
        pos = [r for r in cur if r[0][v] > 0]
        neg = [r for r in cur if r[0][v] < 0]
        nxt = [r for r in cur if r[0][v] == 0]
        for a_p, b_p in pos:
            for a_n, b_n in neg:
                cp, cn = a_p[v], -a_n[v]
                coeffs = [cn * x + cp * y for x, y in zip(a_p, a_n)]
                nxt.append((coeffs, cn * b_p + cp * b_n))
        levels.append(nxt)
    if any(b < 0 for _, b in levels[-1]):
        return None
    point = [Fraction(0)] * n_vars
    for v in range(n_vars):
        system = levels[n_vars - v - 1]
        lo, hi = None, None
        for a, b in system:
            if a[v] == 0:
                continue
            rest = b - sum(a[u] * point[u] for u in range(v))
            bound = rest / a[v]
            if a[v] > 0:
                hi = bound if hi is None else min(hi, bound)
            else:
                lo = bound if lo is None else max(lo, bound)
        if lo is not None and lo > 0:
            point[v] = lo
        elif hi is not None and hi < 0:
            point[v] = hi
    return point


def redundancy_multipliers(s: StepSet, i: int) -> Optional[tuple[Fraction, ...]]:
    """Nonnegative ``lambda`` with ``s_i >= sum_j lambda_j s_j`` on every step.

    Such multipliers show that coordinate ``i`` stays nonnegative whenever
    the other coordinates do.
    """
    others = [j for j in range(s.D) if j != i]
    rows = []
    for step in s.steps:
        rows.append(([Fraction(step[j]) for j in others], Fraction(step[i])))
    for u in range(len(others)):
        rows.append(([Fraction(-1 if w == u else 0) for w in range(len(others))], Fraction(0)))
    sol = _fourier_motzkin(rows, len(others))
    if sol is None:
        return None
    lam = [Fraction(0)] * s.D
    for j, x in zip(others, sol):
        lam[j] = x
    return tuple(lam)


def _same_counts_without(s: StepSet, i: int, depth: int) -> bool:
    from .counting import iter_endpoint_tables

    full = (1 << s.D) - 1
    a = iter_endpoint_tables(s, depth, mode="exact", restricted=full)
    b = iter_endpoint_tables(s, depth, mode="exact", restricted=full & ~(1 << i))
    for ta, tb in zip(a, b):
        if ta.total() != tb.total():
            return False
    return True


def model_dimension(s: StepSet, check_depth: int = 12) -> tuple[int, DimensionCertificate]:
    """Number of coordinates whose nonnegativity constraint matters."""
    if check_depth < 4:
        raise ValueError("check_depth must be at least 4")
    redundant, mult, heur = set(), {}, {}
    for i in range(s.D):
        lam = redundancy_multipliers(s, i)
        if lam is not None:
            redundant.add(i)
            mult[i] = lam
        elif _same_counts_without(s, i, check_depth):
            redundant.add(i)
            heur[i] = check_depth
    cert = DimensionCertificate(frozenset(redundant), mult, heur)
    return s.D - len(redundant), cert


# --------------------------------------------------------------------------
# Hadamard decomposition


@dataclass(frozen=True)
class HadamardSplit:
    part1: tuple[int, ...]
    V: frozenset[Step]
    U: frozenset[Step]
    W: frozenset[Step]

    def reconstruct(self, D: int) -> StepSet:
        part2 = [d for d in range(D) if d not in self.part1]

        def join(u, w):
            out = [0] * D
            for d, c in zip(self.part1, u):
                out[d] = c
            for d, c in zip(part2, w):
                out[d] = c
            return tuple(out)

        zero = (0,) * len(part2)
        steps = {join(v, zero) for v in self.V} | {join(u, w) for u, w in product(self.U, self.W)}
        return StepSet.from_steps(steps, D)


def hadamard_split(s: StepSet, part1: Sequence[int]) -> Optional[HadamardSplit]:
    """The split with the given first block, if ``s = (V x 0) u (U x W)``."""
    part1 = tuple(sorted(part1))
    part2 = [d for d in range(s.D) if d not in part1]
    if not part1 or not part2:
        raise ValueError("part1 must be a nonempty proper subset of the coordinates")
    V, rest = set(), []
    for step in s.steps:
        head = tuple(step[d] for d in part1)
        tail = tuple(step[d] for d in part2)
        if any(tail):
            rest.append((head, tail))
        else:
            V.add(head)
    U = {u for u, _ in rest}
    W = {w for _, w in rest}
    # an empty product block only says some coordinates never move,
    # which the dimension filter handles
    if not rest or len(rest) != len(U) * len(W):
        return None
    split = HadamardSplit(part1, frozenset(V), frozenset(U), frozenset(W))
    assert split.reconstruct(s.D) == s
    return split


def hadamard_decomposition(s: StepSet) -> Optional[HadamardSplit]:
    """First valid split, trying first blocks in ascending subset-mask order."""
    for bits in range(1, (1 << s.D) - 1):
        split = hadamard_split(s, [d for d in range(s.D) if bits >> d & 1])
        if split is not None:
            return split
    return None
