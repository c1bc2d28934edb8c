"""
Scanning all quadrant models
============================

The same pipeline that handles four dimensions runs on the quarter plane
in about a second, and finds the usual finite-group models.
"""

from orthantwalks import ScanConfig, scan

result = scan(ScanConfig(D=2, cardinalities=tuple(range(1, 9))))
print(result.summary_tsv())

for rep in result.survivors:
    print(rep.canonical, rep.group["order"], "zero" if rep.orbit_sum_zero["signed"] else "nonzero",
          rep.sequence_prefix[:8])

# Kreweras walks, up to the coordinate swap
assert "-0,0-,++" in result.survivor_set()
