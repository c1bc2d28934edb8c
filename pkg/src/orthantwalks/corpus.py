"""The 58 four-dimensional models with finite group, as shipped fixtures.

Each JSON line holds the model label, its step string, the group type and
order, the first six counting terms, the orbit sum (``"0"`` when it
vanishes) and the expected-zero flag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from .algebra import Expr, parse_rational_expr
from .stepset import StepSet, parse_step_set

ORBIT_SUM_VARIABLES = ("w", "x", "y", "z")


@dataclass(frozen=True)
class ModelRecord:
    label: str
    steps: str
    group: str
    group_order: int
    prefix: tuple[int, ...]
    orbit_sum: str
    orbit_sum_zero: bool

    @property
    def stepset(self) -> StepSet:
        return parse_step_set(self.steps, 4)

    @property
    def orbit_sum_expr(self) -> Expr:
        return parse_rational_expr(self.orbit_sum)


def load_models(path: Optional[Union[str, Path]] = None) -> list[ModelRecord]:
    if path is None:
        text = resources.files("orthantwalks.data").joinpath("models.jsonl").read_text()
    else:
        text = Path(path).read_text()
    records = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        obj["prefix"] = tuple(obj["prefix"])
        records.append(ModelRecord(**obj))
    return records
