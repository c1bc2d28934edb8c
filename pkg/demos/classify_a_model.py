"""
Classifying one four-dimensional model
======================================

Run every filter on a single step set and print the report.
"""

from orthantwalks import classify, parse_step_set

# a five-step model whose group is the symmetric group S5
model = parse_step_set("0-00,00-0,000-,+000,-+++")
print(model.steps)

report = classify(model, prefix_terms=10)
print("verdict:", report.verdict)
print("group order:", report.group["order"], report.group_type)
print("orbit sum is zero:", report.orbit_sum_zero["signed"])
print("first terms:", report.sequence_prefix)

# a single step freezes three coordinates, so the model splits off a product
print(classify("+000").verdict)
