"""Exact fourth moments of partial sums on small Markov chains.

For a finite chain the quantity E[S_n^4] is a finite sum of products of
matrix powers, so it can be computed exactly. This script compares that
gap expansion with the i.i.d. closed form, with brute force enumeration of
every path, and shows how correlations inflate the moment.
"""

from ergomoment import Observable, center, doeblin_chain, iid_chain
from ergomoment.oracle import exact_covariance, exact_fourth_moments, green_kubo_sigma2, path_enumeration_fourth_moment

# Fair coin flips: S_n is a simple random walk and E[S_n^4] = 3n^2 - 2n.
coin = iid_chain([0.5, 0.5], states=[1, -1])
sign = center(Observable.from_values([1.0, -1.0]), coin)
ns = [1, 2, 10, 64]
print("i.i.d. signs")
for n, v in exact_fourth_moments(coin, sign, ns).items():
    print(f"  n={n:3d}  E[S_n^4]={v:10.1f}  3n^2-2n={3 * n * n - 2 * n}")

# A sticky two-state chain: the sign keeps its value for a while.
sticky = doeblin_chain([[0.75, 0.25], [0.25, 0.75]])
phi = center(Observable.from_values([1.0, -1.0]), sticky)
print("\nsticky chain, covariances decay like 0.5^k")
for k in range(5):
    print(f"  cov({k}) = {exact_covariance(sticky, phi, k)}")
gk = green_kubo_sigma2(sticky, phi)
print(f"  long-run variance sigma^2 = {gk.sigma2:.12f} ({gk.lags} lags)")

print("\nexact moment vs enumeration of all 2^n paths")
exact = exact_fourth_moments(sticky, phi, range(1, 9))
for n in range(1, 9):
    brute = path_enumeration_fourth_moment(sticky, phi, n)
    print(f"  n={n}  gap expansion {exact[n]:12.6f}  paths {brute:12.6f}")

# For large n the moment grows like 3 sigma^4 n^2, three times faster than for coins
n = 512
big = exact_fourth_moments(sticky, phi, [n])[n]
print(f"\nn={n}: E[S_n^4] / (3 sigma^4 n^2) = {big / (3 * gk.sigma2 ** 2 * n * n):.4f}")
