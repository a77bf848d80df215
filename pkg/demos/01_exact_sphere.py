"""
The exact homogeneous-sphere solution and its angular moments.

A sphere of radius R = 6 with absorption opacity kappa and equilibrium
level B = 1 sits in vacuum.  The stationary transport solution is known in
closed form; its moments J (energy density), H (flux) and K (pressure)
follow by angular quadrature.  This script walks through the pieces the
rest of the package treats as ground truth.
"""

import numpy as np

from idsa_lab import (
    ProblemSpec,
    exact_distribution,
    exact_moments,
    flux_factors_infinite,
    free_streaming_flux_ratio,
    limit_moments_infinite_kappa,
    make_uniform_grid,
    neutrinosphere_radius,
    special_values,
)

spec = ProblemSpec(B=1.0, R=6.0, kappa=1.0)
print("scenario:", spec)

print("\n-- the distribution is angle dependent: chords through the sphere --")
for mu in (-1.0, -0.5, 0.0, 0.5, 0.999):
    f = exact_distribution(3.0, mu, spec)
    print(f"   f(r=3, mu={mu:+.3f}) = {f:.6f}")
print("   (ingoing rays at r < R saw only a short emitting chord, hence f < B)")

print("\n-- closed-form center and edge values --")
sv = special_values(spec)
print(f"   J(0) = {sv.J0:.7f}   J(R) = {sv.JR:.7f}   H(0) = {sv.H0}   H(R) = {sv.HR:.7f}")
print(f"   neutrinosphere radius (optical depth 2/3): {neutrinosphere_radius(spec):.4f}")

print("\n-- moment profiles by adaptive quadrature --")
grid = make_uniform_grid(18.0, 36)
m = exact_moments(grid, spec, tol=1e-10)
ff = m.flux_factors()
print(f"   {'r':>6} {'J':>9} {'H':>9} {'K':>9} {'h=H/J':>8} {'k=K/J':>8}")
for i in range(0, 36, 4):
    r = grid.r_centers[i]
    print(
        f"   {r:6.2f} {m.J.values[i]:9.5f} {m.H.values[i]:9.5f} "
        f"{m.K.values[i]:9.5f} {ff.h.values[i]:8.4f} {ff.k.values[i]:8.4f}"
    )
print("   note k dips slightly below 1/3 just inside the edge: the deficit")
print("   from isotropy there is carried by radially ingoing directions.")

print("\n-- the infinitely opaque sphere --")
spec_hi = ProblemSpec(B=1.0, R=6.0, kappa=200.0)
m_hi = exact_moments(grid, spec_hi, tol=1e-10)
lim = limit_moments_infinite_kappa(grid, 6.0, 1.0)
gap = np.abs(m_hi.J.values - lim.J.values)
print(f"   kappa = 200 on this grid (nearest center 0.25 from the edge):")
print(f"   max |J - J_limit| = {gap.max():.2e}  -- essentially converged ...")
from idsa_lab import moments_at

probes = np.array([5.9, 5.995, 6.05])
J_probe, _, _ = moments_at(probes, spec_hi, tol=1e-10)
J_lim = np.array([1.0, 1.0, 0.5 * (1.0 - np.sqrt(1.0 - (6.0 / 6.05) ** 2))])
print("   ... but the limit is not uniform: sampling the edge layer gives")
for r, J, JL in zip(probes, J_probe, J_lim):
    depth = (6.0 - r) * 200.0
    where = f"{depth:+5.0f} mean free paths deep" if r < 6.0 else "just outside"
    print(f"      r = {r:6.3f} ({where}): |J - J_limit| = {abs(J - JL):.2e}")
ffl = flux_factors_infinite(grid, 6.0)
i2R = int(np.argmin(np.abs(grid.r_centers - 12.0)))
print(f"   limiting flux ratio at r = {grid.r_centers[i2R]:.2f}: "
      f"{ffl.h.values[i2R]:.5f} (geometric factor at exactly 2R: "
      f"{free_streaming_flux_ratio(12.0, 6.0):.5f})")
