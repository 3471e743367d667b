"""Surface charges: Gauss's law for a Coulomb potential and the Komar integral of Schwarzschild."""

import math

import numpy as np

from lorentzlie import noether as no
from lorentzlie.scenes import builtin_scene

flat = builtin_scene("minkowski-spherical")
gauge = no.EMGaugeGenerator.from_strings(["0"] * 4, "1", flat.scope, 4)
print("Coulomb potential q/r, rigid gauge generator:")
for r in (1.0, 2.0, 5.0):
    s = no.SurfaceQuadrature({0: 0.0, 1: r}, {2: flat.domain[2], 3: flat.domain[3]}, (16, 32))
    q, res = no.gauss_charge(flat.em["coulomb"], gauge, flat.frame, s, flat.domain)
    print(f"  r = {r}: charge {q.value:.12f}  (Maxwell residual {res:.1e})")
print(f"  the polar caps are cut at 0.3, so the expected value is -4 pi cos(0.3) = {-4 * math.pi * math.cos(0.3):.12f}")

bh = builtin_scene("schwarzschild")
xi = bh.vectors["killing_t"]
grav = bh.gravity()
print("\nKomar superpotential 4 e nabla^[mu xi^nu] for d/dt:")
for r in (4.0, 8.0, 16.0):
    s = no.SurfaceQuadrature({0: 0.0, 1: r}, {2: bh.domain[2], 3: bh.domain[3]}, (64, 128))
    q = no.surface_charge(lambda p: no.komar_superpotential_at(xi, bh.frame, p).U, s, bh.domain)
    print(f"  r = {r:4}: {q.value:.12f}  (quadrature error estimate {q.error_estimate:.1e})")

p = np.array([0.0, 6.0, 1.0, 0.0])
ut = no.tA_superpotential_at(grav, no.kosmann_vertical_generator_jet(xi, bh.frame, p), p).U
uk = no.komar_superpotential_at(xi, bh.frame, p).U
print(f"\ntetrad-affine superpotential with the Kosmann generator at r=6: U^tr = {ut[0, 1]:.6f}")
print(f"Komar form at the same point:                                  U^tr = {uk[0, 1]:.6f}")
print("they agree up to an overall sign under these conventions")
