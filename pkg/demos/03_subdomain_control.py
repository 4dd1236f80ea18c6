"""Null control acting only on a window inside the interval.

The control lives in the span of the first m backward modes. Its
coefficients solve a small SPD system whose conditioning worsens fast as
the window shrinks or m grows.
"""
import math

from heatctl.domain import SubdomainWindow, build_interval_domain
from heatctl.lcg import random_band_limited
from heatctl.subctl import galerkin_verify, solve_control

d = build_interval_domain(math.pi, 64, 512)
u0 = random_band_limited(d, 8, 21)

print(" m   width   condition    energy      RK4 terminal")
for width in (1.0, 0.5):
    w = SubdomainWindow(0.5, 0.5 + width)
    for m in (2, 4, 8):
        sy = solve_control(d, w, 1.0, m, u0)
        rk = galerkin_verify(sy, u0, 2000).integrated
        print(f"{m:2d}   {width:4.2f}   {sy.condition:10.3e}   {sy.energy:.5f}   {rk:.2e}")
