"""Kosmann lifts on flat and curved frames, and where they stop preserving brackets."""

import numpy as np

from lorentzlie.kosmann import killing_residual, kosmann_defect_residual, kosmann_lift_at, kosmann_routes_at
from lorentzlie.scenes import builtin_scene, random_polynomial_vector

flat = builtin_scene("minkowski-cartesian")
lift = kosmann_lift_at(flat.vectors["boost01"], flat.frame, np.zeros(4))
print("boost x1 d0 + x0 d1 at the origin, vertical part:")
print(lift.vertical)

bh = builtin_scene("schwarzschild")
p = np.array([0.0, 6.0, 1.2, 0.4])
routes = kosmann_routes_at(bh.vectors["rot_x"], bh.frame, p)
spread = max(np.abs(a - b).max() for a in routes.values() for b in routes.values())
print(f"\nrot_x on Schwarzschild at r=6: the three lift routes agree to {spread:.1e}")

pts = bh.sample_points(10, 1)
t, rot = bh.vectors["killing_t"], bh.vectors["rot_z"]
print(f"Killing residuals: killing_t {killing_residual(t, bh.frame, pts):.1e}, rot_z {killing_residual(rot, bh.frame, pts):.1e}")
d = kosmann_defect_residual(t, rot, bh.frame, p)
print(f"bracket defect for two Killing fields: |lhs| = {np.abs(d.lhs).max():.1e}")

rng = np.random.default_rng(7)
xi, zeta = random_polynomial_vector(rng, 4, 2, 0.5), random_polynomial_vector(rng, 4, 2, 0.5)
d = kosmann_defect_residual(xi, zeta, bh.frame, p)
print(f"two random polynomial fields: |lhs| = {np.abs(d.lhs).max():.3e}, "
      f"metric formula matches to {d.residual:.1e}")
