"""Guessing P-recurrences and linear ODEs from sequence prefixes modulo a prime.

For each shape ``(order, degree)``, in increasing ``order + degree``, the
ansatz coefficients are a nullspace vector of the linear system set up from
the first part of the data; the last ``holdout`` equations are kept back
and must also vanish before a candidate is reported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .algebra import DEFAULT_PRIME, PrimeField
from .counting import CountingSequence


class InsufficientTerms(ValueError):
    def __init__(self, have: int, need: int):
        super().__init__(f"guessing needs at least {need} terms, got {have}")
        self.have = have
        self.need = need


def nullspace_mod(rows: Sequence[Sequence[int]], ncols: int, p: int) -> list[list[int]]:
    """Basis of ``{v : rows . v = 0}`` over GF(p), one vector per free column."""
    mat = [[x % p for x in row] for row in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(mat)) if mat[i][c]), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = pow(mat[r][c], -1, p)
        mat[r] = [x * inv % p for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c]:
                f = mat[i][c]
                mat[i] = [(x - f * y) % p for x, y in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * ncols
        v[fc] = 1
        for row, pc in zip(mat, pivots):
            v[pc] = -row[fc] % p
        basis.append(v)
    return basis


def _normalize(vec: list[int], p: int) -> list[int]:
    lead = next(x for x in vec if x)
    inv = pow(lead, -1, p)
    return [x * inv % p for x in vec]


def _falling(k: int, i: int) -> int:
    out = 1
    for t in range(i):
        out *= k - t
    return out


@dataclass(frozen=True)
class RecurrenceCandidate:
    """``sum_{i,j} c[i][j] n^j a_{n+i} = 0`` for ``n >= start``."""

    order: int
    degree: int
    coeffs: tuple[tuple[int, ...], ...]
    prime: int
    start: int = 0

    kind = "recurrence"

    def row(self, terms: Sequence[int], n: int) -> list[int]:
        p = self.prime
        return [pow(n, j, p) * terms[n + i] % p for i in range(self.order + 1) for j in range(self.degree + 1)]

    def residual(self, terms: Sequence[int], n: int) -> int:
        flat = [c for row in self.coeffs for c in row]
        return sum(a * b for a, b in zip(flat, self.row(terms, n))) % self.prime

    def indices(self, length: int) -> range:
        return range(self.start, length - self.order)

    def to_json(self) -> dict:
        return {"kind": self.kind, "order": self.order, "degree": self.degree, "prime": self.prime,
                "coeffs": [list(r) for r in self.coeffs]}


@dataclass(frozen=True)
class OdeCandidate:
    """``sum_{i,j} c[i][j] t^j f^(i)(t) = 0`` checked coefficientwise from ``t^start``."""

    order: int
    degree: int
    coeffs: tuple[tuple[int, ...], ...]
    prime: int
    start: int = 0

    kind = "ode"

    def row(self, terms: Sequence[int], m: int) -> list[int]:
        p = self.prime
        out = []
        for i in range(self.order + 1):
            for j in range(self.degree + 1):
                k = m - j + i
                out.append(_falling(k, i) * terms[k] % p if k >= 0 else 0)
        return out

    def residual(self, terms: Sequence[int], m: int) -> int:
        flat = [c for row in self.coeffs for c in row]
        return sum(a * b for a, b in zip(flat, self.row(terms, m))) % self.prime

    def indices(self, length: int) -> range:
        return range(self.start, length - self.order)

    def to_json(self) -> dict:
        return {"kind": self.kind, "order": self.order, "degree": self.degree, "prime": self.prime,
                "coeffs": [list(r) for r in self.coeffs]}


Candidate = Union[RecurrenceCandidate, OdeCandidate]
SequenceLike = Union[CountingSequence, Sequence[int]]


def _terms(seq: SequenceLike, p: int) -> list[int]:
    terms = seq.terms if isinstance(seq, CountingSequence) else seq
    if isinstance(seq, CountingSequence) and seq.mode == "modular" and seq.prime != p:
        raise ValueError("sequence was computed modulo a different prime")
    return [int(t) % p for t in terms]


def required_terms(max_order: int, max_degree: int, holdout: int) -> int:
    return (max_order + 1) * (max_degree + 1) + holdout + max_order


def _shapes(max_order: int, max_degree: int):
    for total in range(1, max_order + max_degree + 1):
        for r in range(1, max_order + 1):
            d = total - r
            if 0 <= d <= max_degree:
                yield r, d


def _guess(cls, seq, max_order, max_degree, holdout, prime, start):
    PrimeField(prime)
    terms = _terms(seq, prime)
    need = required_terms(max_order, max_degree, holdout)
    if len(terms) < need:
        raise InsufficientTerms(len(terms), need)
    for r, d in _shapes(max_order, max_degree):
        c = cls(r, d, (), prime, start)
        idx = list(c.indices(len(terms)))
        unknowns = (r + 1) * (d + 1)
        fit, held = idx[: len(idx) - holdout], idx[len(idx) - holdout:]
        if len(fit) < unknowns:
            continue
        basis = nullspace_mod([c.row(terms, n) for n in fit], unknowns, prime)
        if not basis:
            continue
        vec = _normalize(basis[0], prime)
        cand = cls(r, d, tuple(tuple(vec[i * (d + 1):(i + 1) * (d + 1)]) for i in range(r + 1)), prime, start)
        if all(cand.residual(terms, n) == 0 for n in held):
            return cand
    return None


def guess_recurrence(seq: SequenceLike, max_order: int = 4, max_degree: int = 4, holdout: int = 20,
                     prime: int = DEFAULT_PRIME) -> Optional[RecurrenceCandidate]:
    """Smallest ``(order, degree)`` P-recurrence that survives the holdout, if any.

    Equations start at ``n = max_degree`` so that relations which only
    fail at a few initial indices are not rejected.
    """
    return _guess(RecurrenceCandidate, seq, max_order, max_degree, holdout, prime, max_degree)


def guess_ode(seq: SequenceLike, max_order: int = 4, max_degree: int = 4, holdout: int = 20,
              prime: int = DEFAULT_PRIME) -> Optional[OdeCandidate]:
    """Smallest linear ODE with polynomial coefficients for ``sum a_n t^n``."""
    return _guess(OdeCandidate, seq, max_order, max_degree, holdout, prime, 0)


def verify_relation(candidate: Candidate, seq: SequenceLike) -> bool:
    """True iff the relation vanishes at every index the sequence covers."""
    terms = _terms(seq, candidate.prime)
    return all(candidate.residual(terms, n) == 0 for n in candidate.indices(len(terms)))


def candidate_json(candidate: Candidate) -> str:
    return json.dumps(candidate.to_json())
