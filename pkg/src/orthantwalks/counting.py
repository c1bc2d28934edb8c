"""Walk counting by the one-slice-per-length recurrence.

Slice ``n`` is a dense array over the endpoints reachable in ``n`` steps:
``[0, n]`` on coordinates confined to the nonnegative half-line and
``[-n, n]`` on free coordinates.  Only two slices are alive at a time.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterator, Optional, Sequence

import numpy as np

from . import _kernels
from .algebra import DEFAULT_PRIME, PrimeField, SingularEvaluation, random_points
from .stepset import StepSet, render_step_set, step_polynomial_eval

DEFAULT_MEMORY_BUDGET = 2 * 1024**3

_MAGIC = b"WCT1"


class MemoryBudgetExceeded(MemoryError):
    def __init__(self, required: int, budget: int):
        super().__init__(f"counting needs about {required} bytes, budget is {budget} bytes")
        self.required = required
        self.budget = budget


def _full_mask(D: int) -> int:
    return (1 << D) - 1


def memory_estimate(D: int, N: int, mode: str = "modular", restricted: Optional[int] = None,
                    in_place: bool = False) -> int:
    """Bytes for the slice buffers at length ``N``.

    ``2 * (N+1)^D * 8`` for the usual pair of buffers over the nonnegative
    box; free coordinates contribute ``2N+1`` instead of ``N+1``.  With
    ``in_place`` a single buffer is assumed.
    """
    if mode not in ("exact", "modular"):
        raise ValueError(f"unknown mode {mode!r}")
    restricted = _full_mask(D) if restricted is None else restricted
    cells = 1
    for d in range(D):
        cells *= N + 1 if restricted >> d & 1 else 2 * N + 1
    return (1 if in_place else 2) * cells * 8


@dataclass
class CountTable:
    """Endpoint-resolved counts of walks of length ``n``."""

    n: int
    D: int
    restricted: int
    mode: str
    data: np.ndarray
    prime: Optional[int] = None

    @property
    def low(self) -> tuple[int, ...]:
        return tuple(0 if self.restricted >> d & 1 else -self.n for d in range(self.D))

    @property
    def box(self) -> tuple[tuple[int, int], ...]:
        return tuple((lo, lo + size - 1) for lo, size in zip(self.low, self.data.shape))

    def __getitem__(self, endpoint: Sequence[int]):
        pos = tuple(e - lo for e, lo in zip(endpoint, self.low))
        if any(q < 0 or q >= size for q, size in zip(pos, self.data.shape)):
            return 0
        return int(self.data[pos])

    def total(self) -> int:
        if self.mode == "modular":
            return int(self.data.sum(dtype=object) % self.prime)
        return int(self.data.sum(dtype=object))

    def nonzero(self) -> dict[tuple[int, ...], int]:
        low = self.low
        return {
            tuple(int(q) + lo for q, lo in zip(pos, low)): int(self.data[tuple(pos)])
            for pos in np.argwhere(self.data != 0)
        }

    def residues(self, p: int) -> np.ndarray:
        if self.mode == "modular":
            if self.prime != p:
                raise ValueError("table was computed modulo a different prime")
            return self.data
        return (self.data.astype(object) % p).astype(np.uint64)

    # binary export: header then row-major little-endian cells
    def write_binary(self, fh: BinaryIO) -> None:
        values = [int(v) for v in self.data.reshape(-1)]
        width = max(1, (max(values, default=0).bit_length() + 7) // 8)
        fh.write(_MAGIC)
        fh.write(struct.pack("<BIBBQ", self.D, self.n, 0 if self.mode == "exact" else 1, width,
                             self.prime or 0))
        for lo, hi in self.box:
            fh.write(struct.pack("<ii", lo, hi))
        fh.write(b"".join(v.to_bytes(width, "little") for v in values))

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.write_binary(buf)
        return buf.getvalue()

    @classmethod
    def read_binary(cls, fh: BinaryIO) -> "CountTable":
        if fh.read(4) != _MAGIC:
            raise ValueError("not a count table dump")
        D, n, mode, width, prime = struct.unpack("<BIBBQ", fh.read(struct.calcsize("<BIBBQ")))
        box = [struct.unpack("<ii", fh.read(8)) for _ in range(D)]
        shape = tuple(hi - lo + 1 for lo, hi in box)
        restricted = sum(1 << d for d, (lo, _) in enumerate(box) if lo == 0)
        count = int(np.prod(shape))
        raw = fh.read(count * width)
        values = [int.from_bytes(raw[i * width:(i + 1) * width], "little") for i in range(count)]
        if mode == 1:
            data = np.array(values, dtype=np.uint64).reshape(shape)
            return cls(n, D, restricted, "modular", data, prime)
        dtype = np.int64 if width <= 7 else object
        data = np.array(values, dtype=dtype).reshape(shape)
        return cls(n, D, restricted, "exact", data)


@dataclass(frozen=True)
class CountingSequence:
    terms: tuple[int, ...]
    model: StepSet
    restricted: int
    mode: str
    prime: Optional[int] = None

    def __len__(self) -> int:
        return len(self.terms)

    def __getitem__(self, i):
        return self.terms[i]

    def to_json(self) -> dict:
        out = {"model": render_step_set(self.model), "terms": list(self.terms), "mode": self.mode}
        if self.prime is not None:
            out["prime"] = self.prime
        return out

    def to_text(self) -> str:
        return "".join(f"{t}\n" for t in self.terms)


def _shift_slices(step, restricted, shape_old, D):
    src, dst = [], []
    for d in range(D):
        c = int(step[d])
        m = shape_old[d]
        if restricted >> d & 1:
            lo = max(0, -c)
            src.append(slice(lo, m))
            dst.append(slice(lo + c, m + c))
        else:
            src.append(slice(0, m))
            dst.append(slice(c + 1, c + 1 + m))
    return tuple(src), tuple(dst)


def iter_endpoint_tables(
    s: StepSet,
    N: int,
    mode: str = "exact",
    restricted: Optional[int] = None,
    prime: int = DEFAULT_PRIME,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> Iterator[CountTable]:
    """Tables for lengths ``0..N``; each yielded table is not touched afterwards."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    if mode not in ("exact", "modular"):
        raise ValueError(f"unknown mode {mode!r}")
    D = s.D
    restricted = _full_mask(D) if restricted is None else restricted
    need = memory_estimate(D, N, mode, restricted)
    if need > memory_budget:
        raise MemoryBudgetExceeded(need, memory_budget)
    steps = s.steps
    k = len(steps)
    if mode == "modular":
        dtype = np.uint64
        _kernels.check_kernel_prime(prime)
    else:
        dtype = np.int64
    cur = np.zeros((1,) * D, dtype=dtype)
    cur[(0,) * D] = 1
    n = 0
    while True:
        yield CountTable(n, D, restricted, mode, cur, prime if mode == "modular" else None)
        if n == N:
            return
        if mode == "exact" and dtype is np.int64 and k ** (n + 1) >= 1 << 62:
            dtype = object
            cur = cur.astype(object)
        shape_new = tuple(m + 1 if restricted >> d & 1 else m + 2 for d, m in enumerate(cur.shape))
        nxt = np.zeros(shape_new, dtype=dtype)
        for step in steps:
            src, dst = _shift_slices(step, restricted, cur.shape, D)
            if mode == "modular":
                view = nxt[dst]
                view += cur[src]
                view[view >= prime] -= np.uint64(prime)
            else:
                nxt[dst] += cur[src]
        cur = nxt
        n += 1


def count_walks(
    s: StepSet,
    N: int,
    mode: str = "exact",
    restricted: Optional[int] = None,
    prime: int = DEFAULT_PRIME,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> CountingSequence:
    """Terms ``a_0..a_N``: walks from the origin confined on the ``restricted`` coordinates."""
    restricted = _full_mask(s.D) if restricted is None else restricted
    terms = tuple(t.total() for t in iter_endpoint_tables(s, N, mode, restricted, prime, memory_budget))
    return CountingSequence(terms, s, restricted, mode, prime if mode == "modular" else None)


def endpoint_table(s: StepSet, n: int, mode: str = "exact", restricted: Optional[int] = None,
                   prime: int = DEFAULT_PRIME, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> CountTable:
    table = None
    for table in iter_endpoint_tables(s, n, mode, restricted, prime, memory_budget):
        pass
    return table


# --------------------------------------------------------------------------
# orbit identity, one power of t at a time


def shifted_series_eval(table: CountTable, point: Sequence[int], p: int) -> int:
    """``sum_e a_e * x^(e+1)`` for the table's length, modulo ``p``."""
    field = PrimeField(p)
    vectors = []
    for d, (lo, size) in enumerate(zip(table.low, table.data.shape)):
        x = point[d] % p
        first = field.pow(x, lo + 1)
        vec = np.empty(size, dtype=np.uint64)
        cur = first
        for q in range(size):
            vec[q] = cur
            cur = cur * x % p
        vectors.append(vec)
    return _kernels.contract_mod(table.residues(p), vectors, p)


def orbit_identity_holds(table: CountTable, s: StepSet, images: Sequence[Sequence[tuple[int, ...]]],
                         signs: Sequence[int], orbit_sums: Sequence[int], points: Sequence[tuple[int, ...]],
                         p: int) -> bool:
    """Check ``sum_g sign(g) F_n(g(x)) == OS(x) P(x)^n`` at every point.

    ``images[k][g]`` is the image of ``points[k]`` under element ``g``.
    """
    field = PrimeField(p)
    for x, imgs, os_value in zip(points, images, orbit_sums):
        lhs = 0
        for y, sgn in zip(imgs, signs):
            lhs += sgn * shifted_series_eval(table, y, p)
        rhs = os_value * pow(step_polynomial_eval(s, x, field), table.n, p)
        if (lhs - rhs) % p:
            return False
    return True


def verify_orbit_identity(s: StepSet, g, N: int = 30, n_points: int = 4, signed: bool = True,
                          seed: int = 0, prime: int = DEFAULT_PRIME,
                          memory_budget: int = DEFAULT_MEMORY_BUDGET) -> list[bool]:
    """Per-length verdicts of the unextracted orbit-sum identity for ``n = 0..N``.

    ``g`` is the finite :class:`~orthantwalks.group.GroupResult` of ``s``.
    """
    from .algebra import derive_seed
    from .group import orbit_images

    if not g.finite:
        raise ValueError("orbit identity needs a finite group")
    field = PrimeField(prime)
    signs = [e.sign if signed else 1 for e in g.elements]
    for attempt in range(6):
        pts = random_points(n_points, derive_seed(seed, attempt), s.D, prime)
        try:
            images = [orbit_images(g, x) for x in pts]
            orbit = []
            for imgs in images:
                orbit.append(sum(sg * _prod(y, prime) for y, sg in zip(imgs, signs)) % prime)
            for x in pts:
                step_polynomial_eval(s, x, field)
            for imgs in images:
                for y in imgs:
                    if any(c % prime == 0 for c in y):
                        raise SingularEvaluation("image with a zero coordinate")
        except SingularEvaluation:
            continue
        break
    else:
        raise SingularEvaluation("no nonsingular evaluation points found")
    return [
        orbit_identity_holds(t, s, images, signs, orbit, pts, prime)
        for t in iter_endpoint_tables(s, N, "modular", None, prime, memory_budget)
    ]


def _prod(values, p):
    out = 1
    for v in values:
        out = out * v % p
    return out


def sequence_json(seq: CountingSequence) -> str:
    return json.dumps(seq.to_json())
