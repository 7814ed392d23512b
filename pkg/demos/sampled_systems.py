"""Monte Carlo moments for systems without an exact oracle.

Every sampler draws replicate r from its own counter-based stream keyed by
seed + r, so estimates are reproducible and independent of how replicates
are batched or threaded.
"""

import numpy as np

from ergomoment import center, estimate_s4
from ergomoment.core import Observable
from ergomoment.systems import (LinearProcessSpec, Noise, ar_model, expanding_map, linear_process,
                                random_lipschitz, shift_observable, subshift)

n, reps, seed = 32, 20_000, 7

# A scalar autoregression with bounded noise stays in [-1, 1].
ar = ar_model(0.5, {"kind": "uniform", "low": -0.5, "high": 0.5}, seed=seed)
x = center(Observable(func=lambda v: np.asarray(v, dtype=float), sup_bound=1.0, banach_norm=2.0),
           mean=0.0, note="symmetric noise")
print(f"AR(1), burn-in {ar.burn_in}: {estimate_s4(ar, x, n, reps, seed)}")

# A linear process with geometric coefficients, truncated where the tail is below 1e-10.
spec = LinearProcessSpec(coefficients=lambda i: 0.5 ** i, C=1.0, rho=0.5, innovations=Noise())
lp = linear_process(spec, seed)
print(f"linear process, L={spec.truncation}: {estimate_s4(lp, x, n, reps, seed)}")

# Random iteration of two contractions; the invariant law is the Cantor measure.
cantor = random_lipschitz([(1 / 3, 0.0), (1 / 3, 2 / 3)], seed=seed)
y = center(Observable(func=lambda v: np.asarray(v, dtype=float), sup_bound=1.0, banach_norm=2.0),
           mean=0.5, note="symmetry of the Cantor measure")
print(f"Cantor iteration, rate {cantor.rate:.3f}: {estimate_s4(cantor, y, n, reps, seed)}")

# The doubling map, followed exactly through its binary expansion.
dbl = expanding_map("doubling", seed=seed)
z = center(Observable(func=lambda v: np.asarray(v, dtype=float), sup_bound=1.0, banach_norm=2.0),
           mean=0.5, note="Lebesgue measure is invariant")
print(f"doubling map: {estimate_s4(dbl, z, n, reps, seed)}")

# The golden-mean shift never shows two consecutive ones.
gm = subshift([[1, 1], [1, 0]], seed=seed)
f = shift_observable(2.0 ** -np.arange(48))
w = gm.trajectory(20)
print("golden mean shift, first symbols:", "".join(str(s) for s in w[:, 0]))
print(f"geometric functional: Lipschitz part {f.banach_norm - f.sup_bound:.3f}, values {np.round(f(w[:4]), 4)}")
