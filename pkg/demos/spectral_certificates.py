"""Measuring the constants of geometric ergodicity.

A chain is geometrically ergodic when ||P^n f - Pi f|| <= kappa theta^n ||f||.
For a finite chain theta is the modulus of the second eigenvalue and kappa
is measured on a set of probe functions. Interval maps are handled through
their Ulam discretisation.
"""

import numpy as np

from ergomoment import doeblin_chain
from ergomoment.spectral import decay_fit_theta, subdominant_radius, theta_kappa, ulam
from ergomoment.systems import beta_map, doubling_map, gauss_map

for P in ([[0.75, 0.25], [0.25, 0.75]], [[0.9, 0.1], [0.5, 0.5]]):
    m = doeblin_chain(P)
    cert = theta_kappa(m, probes=[[1.0, -1.0], [0.0, 1.0]])
    print(f"P={P}: nu={m.nu}, theta={cert.theta:.12f}, kappa={cert.kappa:.4f}, "
          f"decay-fit theta={decay_fit_theta(m):.6f}")
    print(f"  worst excess over the defining inequalities: {cert.violations(m)}")

# The certificate under the other norms uses the state labels.
walk = doeblin_chain([[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]], states=[0.0, 0.5, 1.0])
for kind in ("sup", "lipschitz", "bv"):
    c = theta_kappa(walk, kind, probes=[[1.0, 0.0, -1.0]])
    print(f"reflected walk, {kind:9s}: theta={c.theta:.4f} kappa={c.kappa:.4f}")

# Ulam matrices of the doubling map: dyadic grids give a nilpotent deflated
# operator, other grids see the eigenvalue 1/2 of the discretisation.
print("\nUlam discretisations")
for k in (16, 32, 12, 24):
    U = ulam(doubling_map(), k)
    r, info = subdominant_radius(U.P, U.nu)
    print(f"  doubling, k={k:3d}: radius {r:.6f} nilpotent={info['nilpotent']}")
for name, tmap in (("beta(1.5)", beta_map(1.5)), ("gauss", gauss_map())):
    U = ulam(tmap, 128)
    mids = (np.arange(128) + 0.5) / 128
    print(f"  {name:9s} k=128: radius {subdominant_radius(U.P, U.nu)[0]:.4f}, "
          f"stationary mean {U.nu @ mids:.4f} ({U.meta['ulam']['method']})")
