"""Heat kernel on an interval and a circle, and how it compares to free space."""
import math

import numpy as np

from heatctl.domain import build_circle_domain, build_interval_domain
from heatctl.kernel import kernel_eval, kernel_mass, kernel_matrix

line = build_interval_domain(math.pi, 64, 512)

# At short times the Dirichlet kernel looks like the free-space Gaussian
# away from the walls.
for t in (0.01, 0.05, 0.2):
    g = kernel_eval(line, t, math.pi / 2, math.pi / 2)
    gauss = 1 / math.sqrt(4 * math.pi * t)
    print(f"t={t:<5} G(mid, mid)={g:.6f}  free space={gauss:.6f}")

# Composing two kernels gives the kernel at the summed time.
g1 = kernel_matrix(line, 0.1)
err = np.max(np.abs((g1 * line.weights) @ g1 - kernel_matrix(line, 0.2)))
print(f"\nreproducing property error at t=s=0.1: {err:.2e}")

# Heat leaks through the walls on the interval but not on the circle.
ring = build_circle_domain(2 * math.pi, 33, 256)
print("\n   t   mass(interval)   mass(circle)")
for t in (0.1, 1.0, 5.0):
    print(f"{t:5.1f}   {kernel_mass(line, t, math.pi / 2):.6f}        {kernel_mass(ring, t, 1.0):.6f}")
