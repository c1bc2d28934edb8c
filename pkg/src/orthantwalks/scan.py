"""The search pipeline: enumerate canonical step sets and keep those that pass
every filter, in this order:

1. no unused steps,
2. one representative per symmetry class,
3. no Hadamard decomposition,
4. full dimension,
5. a group with at most ``group_bound`` elements.

A compiled screen runs the cheap parts of these filters over each
enumeration chunk and only discards sets the exact checks would also
discard; whatever it lets through is classified in Python.
"""

from __future__ import annotations

import hashlib
import json
import multiprocessing
import os
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernels
from .algebra import DEFAULT_PRIME, derive_seed, random_points
from .counting import count_walks, verify_orbit_identity
from .filters import UnusedStepsUnstable, hadamard_decomposition, model_dimension, unused_steps
from .group import GroupUndefined, group_bfs, identify_group, orbit_sum_zero_test
from .guess import InsufficientTerms, guess_ode, guess_recurrence
from .stepset import (StepSet, canonical_form, enumeration_chunks, format_step, parse_step_set,
                      raw_count, render_step_set)

STAGES = ("symmetry", "unused", "hadamard", "dimension", "group")
SURVIVOR = "survivor"

# sets beyond this raw count need ``long_running``
LONG_SCAN_RAW = 50_000_000

_KERNEL_STAGE = {
    _kernels.STAGE_CANONICAL: "symmetry",
    _kernels.STAGE_UNUSED: "unused",
    _kernels.STAGE_HADAMARD: "hadamard",
    _kernels.STAGE_DIMENSION: "dimension",
    _kernels.STAGE_GROUP: "group",
}


class ResumeMismatch(ValueError):
    """The resume state was written by a scan with a different configuration."""


@dataclass(frozen=True)
class ScanConfig:
    D: int = 4
    cardinalities: tuple[int, ...] = (5,)
    group_bound: int = 800
    k_points: int = 4
    prime: int = DEFAULT_PRIME
    seed: int = 0
    threads: int = 1
    output: Optional[str] = None
    resume: Optional[str] = None
    box_bound: int = 8
    prefix_terms: int = 16
    verbose: bool = False
    long_running: bool = False

    def __post_init__(self):
        object.__setattr__(self, "cardinalities", tuple(sorted(set(self.cardinalities))))

    def to_json(self) -> dict:
        out = asdict(self)
        out["cardinalities"] = list(self.cardinalities)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ScanConfig":
        obj = dict(obj)
        obj["cardinalities"] = tuple(obj["cardinalities"])
        return cls(**obj)

    def fingerprint(self) -> str:
        """Hash of the fields that can change the results (not threads or paths)."""
        keep = {k: v for k, v in self.to_json().items() if k not in ("threads", "output", "resume")}
        return hashlib.sha256(json.dumps(keep, sort_keys=True).encode()).hexdigest()


@dataclass
class ModelReport:
    model: str
    canonical: str
    cardinality: int
    verdict: str  # SURVIVOR or the name of the first failing filter
    unused_removed: list[str] = field(default_factory=list)
    hadamard: Optional[bool] = None
    dimension: Optional[int] = None
    dimension_certificate: Optional[str] = None
    group: Optional[dict] = None
    group_type: Optional[str] = None
    orbit_sum_zero: Optional[dict] = None
    orbit_sum_log2_error: Optional[float] = None
    sequence_prefix: Optional[list[int]] = None
    orbit_identity: Optional[list[bool]] = None
    guess: Optional[dict] = None
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def survivor(self) -> bool:
        return self.verdict == SURVIVOR

    def to_json(self, timings: bool = False) -> dict:
        out = asdict(self)
        if not timings:
            del out["timings"]
        return out


def classify(
    model: Union[str, StepSet],
    *,
    group_bound: int = 800,
    k_points: int = 4,
    seed: int = 0,
    prime: int = DEFAULT_PRIME,
    box_bound: int = 8,
    prefix_terms: int = 16,
    identity_terms: Optional[int] = None,
    guess_terms: Optional[int] = None,
    guess_bounds: tuple[int, int] = (4, 4),
    stop_at_rejection: bool = False,
) -> ModelReport:
    """Run every filter on one model and collect the results.

    The verdict is the first failing filter in pipeline order.  Membership
    of a symmetry class is not a verdict here: the model is analysed as
    given and its canonical form reported alongside.  With
    ``stop_at_rejection`` nothing further is computed once a filter fails.
    """
    s = parse_step_set(model) if isinstance(model, str) else model
    canon, _ = canonical_form(s)
    report = ModelReport(render_step_set(s), render_step_set(canon), s.cardinality, SURVIVOR)
    clock = report.timings

    def reject(stage):
        if report.verdict == SURVIVOR:
            report.verdict = stage
        return stop_at_rejection

    t = time.perf_counter()
    removed = unused_steps(s, box_bound)
    report.unused_removed = sorted(format_step(x) for x in removed)
    clock["unused"] = time.perf_counter() - t
    if removed and reject("unused"):
        return report

    t = time.perf_counter()
    report.hadamard = hadamard_decomposition(s) is not None
    clock["hadamard"] = time.perf_counter() - t
    if report.hadamard and reject("hadamard"):
        return report

    t = time.perf_counter()
    dim, cert = model_dimension(s)
    report.dimension, report.dimension_certificate = dim, cert.kind
    clock["dimension"] = time.perf_counter() - t
    if dim < s.D and reject("dimension"):
        return report

    t = time.perf_counter()
    try:
        g = group_bfs(s, group_bound, k_points, seed, prime)
    except GroupUndefined:
        g = None
    clock["group"] = time.perf_counter() - t
    if g is None or not g.finite:
        report.group = None if g is None else g.to_json()
        if reject("group"):
            return report
    else:
        t = time.perf_counter()
        verdict = orbit_sum_zero_test(g, seed=derive_seed(seed, 1))
        report.orbit_sum_zero = verdict.to_json()
        report.orbit_sum_log2_error = verdict.log2_error_bound
        report.group = g.to_json(report.orbit_sum_zero)
        report.group_type = identify_group(g)
        clock["orbit_sum"] = time.perf_counter() - t
        if identity_terms is not None and verdict.signed is False:
            t = time.perf_counter()
            report.orbit_identity = verify_orbit_identity(s, g, identity_terms, seed=seed, prime=prime)
            clock["orbit_identity"] = time.perf_counter() - t

    t = time.perf_counter()
    report.sequence_prefix = list(count_walks(s, prefix_terms - 1, "modular", prime=prime).terms)
    clock["prefix"] = time.perf_counter() - t
    if guess_terms is not None:
        t = time.perf_counter()
        seq = count_walks(s, guess_terms - 1, "modular", prime=prime)
        order, degree = guess_bounds
        try:
            rec = guess_recurrence(seq, order, degree, prime=prime)
            ode = guess_ode(seq, order, degree, prime=prime)
            report.guess = {"recurrence": rec and rec.to_json(), "ode": ode and ode.to_json()}
        except InsufficientTerms as exc:
            report.guess = {"error": str(exc)}
        clock["guess"] = time.perf_counter() - t
    return report


# --------------------------------------------------------------------------
# chunked scan


@dataclass
class CardinalityStats:
    cardinality: int
    raw: int = 0
    canonical: int = 0
    rejected: dict[str, int] = field(default_factory=lambda: {s: 0 for s in STAGES})
    survivors: int = 0

    def merge(self, other: "CardinalityStats") -> None:
        self.raw += other.raw
        self.canonical += other.canonical
        for k, v in other.rejected.items():
            self.rejected[k] += v
        self.survivors += other.survivors


@dataclass
class ScanResult:
    config: ScanConfig
    survivors: list[ModelReport]
    stats: dict[int, CardinalityStats]
    rejections: list[dict]
    complete: bool = True

    def survivor_set(self) -> set[str]:
        return {r.canonical for r in self.survivors}

    def survivor_lines(self) -> str:
        return "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in self.survivors)

    def summary_tsv(self) -> str:
        head = ["cardinality", "raw", "canonical", *(f"rejected_{s}" for s in STAGES[1:]), "survivors"]
        lines = ["\t".join(head)]
        for k in sorted(self.stats):
            st = self.stats[k]
            row = [k, st.raw, st.canonical, *(st.rejected[s] for s in STAGES[1:]), st.survivors]
            lines.append("\t".join(str(x) for x in row))
        return "\n".join(lines) + "\n"


def _screen_start(config: ScanConfig) -> np.ndarray:
    return np.array(random_points(1, derive_seed(config.seed, 7), config.D, _kernels.SCREEN_PRIME)[0],
                    dtype=np.int64)


def _tasks(config: ScanConfig) -> list[tuple[int, tuple[int, ...]]]:
    return [(k, top) for k in config.cardinalities for top in enumeration_chunks(config.D, k)]


def _run_task(config: ScanConfig, task) -> tuple[CardinalityStats, list[ModelReport], list[dict]]:
    k, top = task
    tab = _kernels.tables(config.D)
    counts, rows, codes = _kernels.screen_chunk(tab, k, top, config.box_bound, config.group_bound,
                                                _screen_start(config), config.verbose)
    stats = CardinalityStats(k, raw=int(counts[0]))
    stats.canonical = stats.raw - int(counts[1 + _kernels.STAGE_CANONICAL])
    for code, name in _KERNEL_STAGE.items():
        if name != "symmetry":
            stats.rejected[name] += int(counts[1 + code])
    stats.rejected["symmetry"] = int(counts[1 + _kernels.STAGE_CANONICAL])
    survivors, rejections = [], []
    for q, row in enumerate(rows):
        s = StepSet.from_indices(config.D, row)
        if config.verbose and codes[q] != _kernels.STAGE_PASSED:
            rejections.append({"model": render_step_set(s), "rejected_by": _KERNEL_STAGE[int(codes[q])]})
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UnusedStepsUnstable)
            rep = classify(s, group_bound=config.group_bound, k_points=config.k_points, seed=config.seed,
                           prime=config.prime, box_bound=config.box_bound, prefix_terms=config.prefix_terms,
                           stop_at_rejection=True)
        if rep.survivor:
            stats.survivors += 1
            survivors.append(rep)
        else:
            stats.rejected[rep.verdict] += 1
            if config.verbose:
                rejections.append({"model": rep.model, "rejected_by": rep.verdict})
    return stats, survivors, rejections


def _worker(args):
    config, task = args
    return _run_task(config, task)


def _load_state(config: ScanConfig):
    if not config.resume or not os.path.exists(config.resume):
        return 0, {}, [], []
    with open(config.resume) as fh:
        state = json.load(fh)
    if state["config"] != config.fingerprint():
        raise ResumeMismatch(f"resume state {config.resume} belongs to a different scan configuration")
    stats = {}
    for obj in state["stats"]:
        st = CardinalityStats(obj["cardinality"], obj["raw"], obj["canonical"], obj["rejected"], obj["survivors"])
        stats[st.cardinality] = st
    survivors = [ModelReport(**obj) for obj in state["survivors"]]
    return state["done"], stats, survivors, state["rejections"]


def _save_state(config: ScanConfig, done, stats, survivors, rejections) -> None:
    state = {
        "config": config.fingerprint(),
        "done": done,
        "stats": [asdict(st) for st in stats.values()],
        "survivors": [r.to_json(timings=True) for r in survivors],
        "rejections": rejections,
    }
    tmp = config.resume + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(state, fh)
    os.replace(tmp, config.resume)


def check_scan_size(config: ScanConfig) -> int:
    total = sum(raw_count(config.D, k) for k in config.cardinalities)
    if total > LONG_SCAN_RAW and not config.long_running:
        raise ValueError(f"scan covers {total} raw sets; pass long_running to allow scans above "
                         f"{LONG_SCAN_RAW}")
    return total


def scan(config: ScanConfig, *, stop_after: Optional[int] = None, checkpoint_every: int = 200) -> ScanResult:
    """Run the pipeline over every requested cardinality.

    Work is split into enumeration chunks that are processed in order (or
    by a process pool whose results are merged in order) so the output
    does not depend on ``threads``.  With a resume path the progress is
    saved every ``checkpoint_every`` chunks; ``stop_after`` ends the run
    early after that many chunks, as an interruption would.
    """
    check_scan_size(config)
    tasks = _tasks(config)
    done, stats, survivors, rejections = _load_state(config)
    for k in config.cardinalities:
        stats.setdefault(k, CardinalityStats(k))
    end = len(tasks) if stop_after is None else min(len(tasks), done + stop_after)

    def absorb(result):
        st, surv, rej = result
        stats[st.cardinality].merge(st)
        survivors.extend(surv)
        rejections.extend(rej)

    pending = tasks[done:end]
    pool = None
    if config.threads > 1 and pending:
        pool = multiprocessing.get_context("fork").Pool(config.threads)
        results = pool.imap(_worker, [(config, t) for t in pending], chunksize=4)
    else:
        results = (_run_task(config, t) for t in pending)
    try:
        for result in results:
            absorb(result)
            done += 1
            if config.resume and done % checkpoint_every == 0:
                _save_state(config, done, stats, survivors, rejections)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    if config.resume:
        _save_state(config, done, stats, survivors, rejections)
    order = {k: q for q, k in enumerate(config.cardinalities)}
    survivors.sort(key=lambda r: (order[r.cardinality], parse_step_set(r.model, config.D).mask))
    result = ScanResult(config, survivors, stats, rejections, complete=done == len(tasks))
    if config.output and result.complete:
        write_outputs(result, config.output)
    return result


def write_outputs(result: ScanResult, output: str) -> list[Path]:
    """Survivors as JSON lines, a TSV summary next to it, rejections when verbose."""
    base = Path(output)
    base.parent.mkdir(parents=True, exist_ok=True)
    paths = [base, base.with_name(base.name + ".summary.tsv")]
    paths[0].write_text(result.survivor_lines())
    paths[1].write_text(result.summary_tsv())
    if result.config.verbose:
        rej = base.with_name(base.name + ".rejections.jsonl")
        rej.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in result.rejections))
        paths.append(rej)
    return paths
