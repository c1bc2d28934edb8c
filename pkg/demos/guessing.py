"""
Guessing recurrences and differential equations
===============================================

Fit a linear relation with polynomial coefficients to a counting sequence,
modulo a large prime, and check it on terms that were held back.
"""

from math import comb

from orthantwalks import count_walks, guess_ode, guess_recurrence, parse_step_set, verify_relation

catalan = [comb(2 * n, n) // (n + 1) for n in range(60)]
rec = guess_recurrence(catalan)
print("order", rec.order, "degree", rec.degree)
print(rec.coeffs)
print("holds on 400 fresh terms:", verify_relation(rec, [comb(2 * n, n) // (n + 1) for n in range(400)]))

ode = guess_ode(catalan)
print("ODE order", ode.order, "degree", ode.degree)

# walks on the half-line x >= 0 with steps +1 and -1
seq = count_walks(parse_step_set("-0,+0"), 59, "modular")
print(guess_recurrence(seq).to_json())
