"""Nesting a narrow cone inside a wider one.

A frequency xi in the inner cone stays inside the outer cone after a
perturbation of size c|xi| exactly when c <= sin(b - a), with a and b the
half-angles. The Monte-Carlo check below finds no escape just under that
constant and finds one just above it.
"""
import math

from wfscope import Cone, fattening_sample_check, max_nesting_constant

axis = (math.cos(0.3), math.sin(0.3))
for a, b in ((math.pi / 8, math.pi / 4), (0.2, 0.5), (0.5, 1.4)):
    inner, outer = Cone(2, axis, a), Cone(2, axis, b)
    c = max_nesting_constant(inner, outer)
    lo, _ = fattening_sample_check(inner, outer, c - 1e-3, 200_000, seed=1)
    hi, _ = fattening_sample_check(inner, outer, c + 5e-2, 200_000, seed=1)
    print(f"a={a:.3f} b={b:.3f}  c={c:.4f}  holds below: {lo}  holds above: {hi}")
