"""Normal limit of S_n / sqrt(n) and the moment inequality behind tightness.

The standardised sums of a sticky two-state chain are compared with the
standard normal law, using the exact long-run variance. For interval
counts of i.i.d. uniforms the fourth central moment is checked against
C (n delta + n^2 delta^2).
"""

from ergomoment import Observable, center, doeblin_chain
from ergomoment.systems import IIDUniformSampler
from ergomoment.verify import binomial_fourth_central, clt_check, empirical_tightness

m = doeblin_chain([[0.75, 0.25], [0.25, 0.75]])
phi = center(Observable.from_values([1.0, -1.0]), m)
d = clt_check(m, phi, n=10_000, reps=10_000, seed=2024)
print(f"sigma^2 = {d.sigma2:.6f} from {d.sigma2_source}")
print(f"Z: mean {d.mean:.4f} var {d.var:.4f} skew {d.skew:.4f} kurt {d.kurt:.4f} sup CDF distance {d.ks:.4f}")

intervals = [(0.25, 0.25 + delta) for delta in (0.01, 0.05, 0.1, 0.5)]
res = empirical_tightness(IIDUniformSampler(), intervals, n=100, reps=40_000, seed=8)
print(f"\n{'delta':>6s} {'estimate':>10s} {'binomial':>10s} {'3(n d + n^2 d^2)':>18s}")
for r in res.rows:
    print(f"{r['delta']:6.2f} {r['value']:10.2f} {binomial_fourth_central(100, r['delta']):10.2f} {r['bound']:18.1f}")
print(f"fitted C = {res.fitted_C:.3f}")
