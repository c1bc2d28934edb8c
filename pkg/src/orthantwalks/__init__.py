"""Classification of small-step lattice walk models in the orthant."""

from .algebra import DEFAULT_PRIME, PrimeField, parse_rational_expr, render_expr
from .counting import CountTable, CountingSequence, count_walks, memory_estimate, verify_orbit_identity
from .filters import hadamard_decomposition, model_dimension, unused_steps
from .group import group_bfs, identify_group, orbit_sum_zero_test, verify_orbit_sum_expression
from .guess import guess_ode, guess_recurrence, verify_relation
from .scan import ModelReport, ScanConfig, classify, scan
from .stepset import StepSet, canonical_form, enumerate_step_sets, parse_step_set, render_step_set

__all__ = [
    "DEFAULT_PRIME", "PrimeField", "parse_rational_expr", "render_expr",
    "CountTable", "CountingSequence", "count_walks", "memory_estimate", "verify_orbit_identity",
    "hadamard_decomposition", "model_dimension", "unused_steps",
    "group_bfs", "identify_group", "orbit_sum_zero_test", "verify_orbit_sum_expression",
    "guess_ode", "guess_recurrence", "verify_relation",
    "ModelReport", "ScanConfig", "classify", "scan",
    "StepSet", "canonical_form", "enumerate_step_sets", "parse_step_set", "render_step_set",
]
