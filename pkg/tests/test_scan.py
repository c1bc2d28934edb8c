import json
import random
from collections import Counter

import pytest

from strategies import nonzero_steps

from orthantwalks import _kernels
from orthantwalks.scan import (
    ResumeMismatch,
    ScanConfig,
    check_scan_size,
    classify,
    scan,
)
from orthantwalks.filters import model_dimension
from orthantwalks.stepset import StepSet, canonical_form, enumeration_chunks, parse_step_set, render_step_set

STAGE_NAMES = {_kernels.STAGE_UNUSED: "unused", _kernels.STAGE_HADAMARD: "hadamard",
               _kernels.STAGE_DIMENSION: "dimension", _kernels.STAGE_GROUP: "group"}
KREWERAS = StepSet.from_steps([(-1, 0), (0, -1), (1, 1)])


def test_classify_table_examples():
    rep = classify("-0-0,0--+,-00+,0-0-,++00,-0+-,0-+0")
    assert rep.survivor
    assert rep.group["order"] == 36 and rep.group_type == "S3xS3"
    assert rep.orbit_sum_zero["signed"] is True
    assert rep.sequence_prefix[:6] == [1, 1, 3, 9, 27, 117]
    assert len(rep.sequence_prefix) == 16

    rep = classify("-0-0,-00+,-0+-,+--+,+-0-,++00,+-+0")
    assert rep.survivor and rep.group["order"] == 24
    assert rep.orbit_sum_zero["signed"] is False
    assert rep.sequence_prefix[:6] == [1, 1, 3, 9, 35, 125]


def test_classify_single_step():
    rep = classify("+000")
    # every coordinate constraint is redundant; the frozen coordinates also split off as a product
    assert rep.dimension == 0 and rep.dimension_certificate == "certified"
    assert not rep.survivor
    assert rep.verdict in ("hadamard", "dimension")
    assert rep.group is None


def test_classify_rejects_unused_first():
    rep = classify(StepSet.from_steps([(1, 0, -1, 0), (0, 1, 0, -1), (1, 1, 0, 0), (0, 0, 0, 1)]))
    assert rep.verdict == "unused"
    # 000+ lifts the fourth coordinate, so only the step needing a positive third one is dead
    assert rep.unused_removed == ["+0-0"]


def test_classify_optional_parts():
    rep = classify("000-,+0-0,-+00,00+0,0-0+", identity_terms=6, guess_terms=60)
    assert rep.orbit_identity == [True] * 7
    assert set(rep.guess) == {"recurrence", "ode"}


def test_d2_scan_contains_kreweras():
    result = scan(ScanConfig(D=2, cardinalities=tuple(range(1, 9))))
    assert render_step_set(canonical_form(KREWERAS)[0]) in result.survivor_set()
    for k, st in result.stats.items():
        assert st.canonical == st.raw - st.rejected["symmetry"]
        assert st.canonical == sum(st.rejected[s] for s in ("unused", "hadamard", "dimension", "group")) + st.survivors


def test_d2_survivors_are_the_seven_classical_finite_group_models():
    # tandem, double tandem, Gouyou-Beauchamps (nonzero orbit sum), Kreweras, reverse and double
    # Kreweras, Gessel (zero orbit sum), each up to swapping the coordinates
    classical = {
        "+0,-+,0-": False, "+0,-+,0-,-0,+-,0+": False, "+0,-0,-+,+-": False,
        "-0,0-,++": True, "+0,0+,--": True, "-0,0-,++,+0,0+,--": True, "+0,-0,++,--": True,
    }
    expected = {render_step_set(canonical_form(StepSet.from_steps(
        [tuple({"+": 1, "-": -1, "0": 0}[c] for c in x) for x in steps.split(",")]))[0]): zero
        for steps, zero in classical.items()}
    result = scan(ScanConfig(D=2, cardinalities=tuple(range(1, 9))))
    assert {r.canonical: r.orbit_sum_zero["signed"] for r in result.survivors} == expected


@pytest.mark.parametrize("D,k", [(2, 3), (2, 4), (3, 3), (3, 4)])
def test_screen_agrees_with_exact_classification(D, k):
    tab = _kernels.tables(D)
    start = [12345, 67890, 13579, 24680][:D]
    for top in enumeration_chunks(D, k):
        counts, rows, codes = _kernels.screen_chunk(tab, k, top, 8, 800, start, True)
        for row, code in zip(rows, codes):
            rep = classify(StepSet.from_indices(D, row), stop_at_rejection=True)
            if code != _kernels.STAGE_PASSED:
                assert rep.verdict == STAGE_NAMES[int(code)]


def test_scan_counts_match_exact_classification():
    result = scan(ScanConfig(D=3, cardinalities=(4,)))
    st = result.stats[4]
    tally = Counter()
    for top in enumeration_chunks(3, 4):
        for row in _kernels.screen_chunk(_kernels.tables(3), 4, top, 8, 800, [1, 2, 3], True)[1]:
            tally[classify(StepSet.from_indices(3, row), stop_at_rejection=True).verdict] += 1
    assert tally["survivor"] == st.survivors
    for stage in ("unused", "hadamard", "dimension", "group"):
        assert tally[stage] == st.rejected[stage]


def test_screen_agrees_on_random_d4_sets():
    rng = random.Random(2)
    tab = _kernels.tables(4)
    checked = 0
    while checked < 300:
        idx = sorted(rng.sample(range(80), rng.choice((4, 5, 6))))
        s = StepSet.from_indices(4, idx)
        if canonical_form(s)[0] != s:
            continue
        checked += 1
        kept = _kernels.kept_steps(tab, idx, 8)
        rep = classify(s, stop_at_rejection=True)
        assert (rep.verdict == "unused") == (not kept.all())
        if rep.verdict not in ("unused", "hadamard"):
            assert (rep.verdict == "dimension") == _kernels.dimension_reduced(tab, idx)


def test_dimension_kernel_matches_exact_filter():
    rng = random.Random(12)
    for _ in range(1500):
        D = rng.choice((2, 3, 4))
        s = StepSet.from_steps(rng.sample(nonzero_steps(D), rng.randint(1, 8)), D)
        dim, _ = model_dimension(s)
        assert _kernels.dimension_reduced(_kernels.tables(D), s.indices()) == (dim < D)


def test_scan_restartable(tmp_path):
    base = dict(D=3, cardinalities=(3, 4))
    full = scan(ScanConfig(**base))
    state = str(tmp_path / "state.json")
    part = scan(ScanConfig(**base, resume=state), stop_after=100, checkpoint_every=30)
    assert not part.complete
    rest = scan(ScanConfig(**base, resume=state))
    assert rest.complete
    assert rest.survivor_lines() == full.survivor_lines()
    assert rest.summary_tsv() == full.summary_tsv()


def test_resume_mismatch(tmp_path):
    state = str(tmp_path / "state.json")
    scan(ScanConfig(D=2, cardinalities=(3,), resume=state), stop_after=2)
    with pytest.raises(ResumeMismatch):
        scan(ScanConfig(D=2, cardinalities=(3,), group_bound=100, resume=state))


def test_thread_count_does_not_change_output():
    one = scan(ScanConfig(D=3, cardinalities=(3,)))
    two = scan(ScanConfig(D=3, cardinalities=(3,), threads=2))
    assert one.survivor_lines() == two.survivor_lines()
    assert one.summary_tsv() == two.summary_tsv()


def test_survivor_reports_match_standalone_classify():
    result = scan(ScanConfig(D=3, cardinalities=(4,), seed=5))
    assert result.survivors
    for rep in result.survivors:
        assert rep.to_json() == classify(rep.model, seed=5).to_json()


def test_outputs_and_verbose_rejections(tmp_path):
    out = tmp_path / "scan.jsonl"
    result = scan(ScanConfig(D=2, cardinalities=(3,), output=str(out), verbose=True))
    lines = out.read_text().splitlines()
    assert len(lines) == len(result.survivors)
    assert all(json.loads(x)["verdict"] == "survivor" for x in lines)
    tsv = (tmp_path / "scan.jsonl.summary.tsv").read_text().splitlines()
    assert tsv[0].startswith("cardinality\traw\tcanonical")
    rejections = [json.loads(x) for x in (tmp_path / "scan.jsonl.rejections.jsonl").read_text().splitlines()]
    st = result.stats[3]
    assert len(rejections) + st.survivors == st.canonical
    assert {r["rejected_by"] for r in rejections} <= {"unused", "hadamard", "dimension", "group"}


def test_config_round_trip_and_guard():
    cfg = ScanConfig(D=4, cardinalities=(7, 5), seed=3, threads=4)
    assert cfg.cardinalities == (5, 7)
    assert ScanConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg
    assert cfg.fingerprint() == ScanConfig(D=4, cardinalities=(5, 7), seed=3).fingerprint()
    assert cfg.fingerprint() != ScanConfig(D=4, cardinalities=(5, 7), seed=4).fingerprint()
    with pytest.raises(ValueError, match="long_running"):
        check_scan_size(ScanConfig(D=4, cardinalities=(7,)))
    assert check_scan_size(ScanConfig(D=4, cardinalities=(7,), long_running=True)) == 3_176_716_400


def test_dimension_kernel_heuristic_branch():
    # no step is possible from the origin; only the count comparison shows the third constraint is idle
    s = parse_step_set("-+-,-+0,+-0")
    dim, cert = model_dimension(s)
    assert cert.kind == "heuristic" and cert.redundant_coords == {2} and not cert.multipliers
    assert _kernels.dimension_reduced(_kernels.tables(3), s.indices())
