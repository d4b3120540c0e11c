"""Portrait of the steady flow: stagnation points and the separatrix web.

Evaluates the stream function on a rectangle covering two meander
periods, renders it as a filled-contour SVG, and prints the saddle /
center skeleton that the domain construction is built on.
"""

import os

import numpy as np

from jetexit import make_params, find_stagnation_points, stream_function
from jetexit.domains import make_strip_domain
from jetexit.meshing import mesh_jet_core
from jetexit.fem import ScalarField
from jetexit import contours

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

beta = 1.0 / 3.0
p = make_params(beta)
print(f"beta = {beta:.4f}: c = {p.c:.6f}, k = {p.k:.6f}, period = {p.period:.6f}")

pts = find_stagnation_points(p, window=(0.0, 2.0 * p.period, -2.0, 2.0))
print(f"\n{len(pts)} stagnation points over two periods:")
for s in pts:
    print(f"  {s.kind:6s} at ({s.x: .6f}, {s.y: .6f})  psi = {s.stream_value: .6f}")

# background field on a rectangle (reusing the strip mesh as a plot grid)
box = make_strip_domain(0.0, 2.0 * p.period, -1.8, 1.8)
grid = mesh_jet_core(box, 160, 90)
psi = stream_function(p, grid.vertices[:, 0], grid.vertices[:, 1])
field = ScalarField(grid, psi, name="stream_function")

svg = contours.field_svg(field, title=f"stream function, beta = {beta:.4g}")
path = os.path.join(OUT, "flow_portrait.svg")
with open(path, "w") as f:
    f.write(svg)
print(f"\nwrote {path}")
