"""Escape probability and residence time fields on the southern eddy.

Solves the two complementary escape problems and the mean residence
time at beta = 1/3, writes the three contour plots, and checks that
the escape fields are pointwise complementary.
"""

import os

import numpy as np

from jetexit import make_params, build_eddy_domain, solve_domain_suite, Resolution
from jetexit import contours

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

p = make_params(1.0 / 3.0)
eddy = build_eddy_domain(p)
print(f"eddy area = {eddy.area:.6f}, boundary level = {eddy.levels['gamma_upper']:.6f}")

suite = solve_domain_suite(p, eddy, Resolution(eddy=(24, 160), refinements=1))

print(f"average P(exit into jet core)   = {suite.escape_upper.average:.6f}")
print(f"average P(exit into retrograde) = {suite.escape_lower.average:.6f}")
print(f"sum of averages                 = {suite.escape_upper.average + suite.escape_lower.average:.8f}")
resid = suite.escape_upper.field.values + suite.escape_lower.field.values - 1.0
print(f"pointwise |P_up + P_low - 1| max = {np.abs(resid).max():.3e}")
x, y = suite.mrt_argmax
print(f"max residence time = {suite.mrt_max:.4f} at ({x:.4f}, {y:.4f})")
print(f"refinement stability = {suite.stability:.2e}")

levels = np.linspace(0.0, 1.0, 11)
jobs = [
    ("eddy_escape_upper.svg", suite.escape_upper.field, levels, "P(exit through the upper boundary)"),
    ("eddy_escape_lower.svg", suite.escape_lower.field, levels, "P(exit through the lower boundary)"),
    ("eddy_mrt.svg", suite.mrt, None, "mean residence time"),
]
for fname, field, lev, title in jobs:
    svg = contours.field_svg(field, domain=eddy, levels=lev, title=title)
    with open(os.path.join(OUT, fname), "w") as f:
        f.write(svg)
    print(f"wrote {os.path.join(OUT, fname)}")
