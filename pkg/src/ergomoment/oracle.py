"""Exact moments of partial sums on finite-state stationary chains.

Everything here is linear algebra with the transition matrix. For a centred
table ``phi`` and ``D = diag(phi)``, the stationary cross moment is

    E[phi(X_0) phi(X_i) phi(X_{i+j}) phi(X_{i+j+k})] = nu' D P^i D P^j D P^k D 1,

and ``E[S_n^4]`` is a weighted sum of these over gap triples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (CENTER_TOL, ErgodicityCertificate, FiniteMarkovModel, ModelError, Observable,
                   array_key, function_norm, norm_profile)

DEFAULT_CAP = 512
PATH_LIMIT = 2 ** 20


class CapExceededError(ModelError):
    code = "E_CAP"


def phi_vector(model: FiniteMarkovModel, phi, *, check_center: bool = True) -> np.ndarray:
    """Table of ``phi`` on the states of ``model``, checked to be centred under ``nu``."""
    v = phi.table(model) if isinstance(phi, Observable) else np.asarray(phi, dtype=float)
    if v.shape != (model.size,):
        raise ModelError(f"observable has shape {v.shape}, model has {model.size} states")
    if check_center:
        nu = model.require_nu()
        mean = math.fsum(nu * v)
        if abs(mean) > CENTER_TOL * max(1.0, float(np.abs(v).max(initial=0.0))):
            raise ModelError(f"observable is not centred: stationary mean {mean:.3e}")
    return v


def multiplicity(i: int, j: int, k: int) -> int:
    """Ordered index 4-tuples whose sorted gaps are ``(i, j, k)``, per starting time.

    A sorted tuple with tie blocks of sizes ``b_1, b_2, ...`` comes from
    ``4! / (b_1! b_2! ...)`` ordered tuples.
    """
    blocks, size = [], 1
    for g in (i, j, k):
        if g == 0:
            size += 1
        else:
            blocks.append(size)
            size = 1
    blocks.append(size)
    return 24 // math.prod(math.factorial(b) for b in blocks)


class MomentOracle:
    """Cached exact moments for one ``(model, phi)`` pair.

    Powers ``P^k`` are built once by repeated multiplication and kept up to
    the largest exponent requested.
    """

    def __init__(self, model: FiniteMarkovModel, phi, *, cap: int = DEFAULT_CAP,
                 check_center: bool = True):
        self.model = model
        self.nu = model.require_nu()
        self.phi = phi_vector(model, phi, check_center=check_center)
        self.cap = int(cap)
        self._powers = [np.eye(model.size)]

    # -- powers ---------------------------------------------------------------
    def power(self, k: int) -> np.ndarray:
        if k < 0:
            raise ModelError("negative gap")
        while len(self._powers) <= k:
            self._powers.append(self._powers[-1] @ self.model.P)
        return self._powers[k]

    # -- moments ------------------------------------------------------------------
    def cross_moment(self, i: int, j: int, k: int) -> float:
        """``E[phi(X_0) phi(X_i) phi(X_{i+j}) phi(X_{i+j+k})]``."""
        if min(i, j, k) < 0:
            raise ModelError(f"gaps must be nonnegative, got {(i, j, k)}")
        f = self.phi
        v = f * (self.power(k) @ f)
        v = f * (self.power(j) @ v)
        v = f * (self.power(i) @ v)
        return math.fsum(self.nu * v)

    def covariance(self, k: int) -> float:
        """``E[phi(X_0) phi(X_k)]``."""
        if k < 0:
            raise ModelError("negative lag")
        return math.fsum(self.nu * self.phi * (self.power(k) @ self.phi))

    def fourth_moments(self, ns) -> dict[int, float]:
        """``E[S_n^4]`` for every ``n`` in ``ns`` in one O(n^2 s^2) sweep.

        With ``R_i = (nu phi)' P^i``, ``U_k = phi P^k phi`` and
        ``W_{j,k} = phi P^j U_k``, the moment is
        ``sum_{i+j+k <= n-1} (n - i - j - k) mult(i, j, k) R_i . W_{j,k}``.
        The i >= 1 part is folded into ``G_m = sum_{i=1}^{m-1} (m - i) R_i``,
        since its multiplicity depends on ``(j, k)`` only.
        """
        ns = sorted({int(n) for n in ns})
        if not ns:
            return {}
        if ns[0] < 1:
            raise ModelError("n must be >= 1")
        N = ns[-1]
        if N > self.cap:
            raise CapExceededError(
                f"n = {N} exceeds the exact-oracle cap {self.cap}; use Monte Carlo estimation")
        P, f, s = self.model.P, self.phi, self.model.size
        R = np.empty((N, s))
        R[0] = self.nu * f
        for i in range(1, N):
            R[i] = R[i - 1] @ P
        G = np.zeros((N + 1, s))
        H = np.zeros(s)
        for m in range(1, N):
            H = H + R[m]
            G[m + 1] = G[m] + H
        U = np.empty((s, N))
        g = f.copy()
        for k in range(N):
            if k:
                g = P @ g
            U[:, k] = f * g
        parts = {n: [] for n in ns}
        V = U
        for j in range(N):
            if j:
                V = P @ V
            W = f[:, None] * V
            kk = np.arange(N - j)
            m1 = np.where(kk == 0, 4 if j == 0 else 12, 12 if j == 0 else 24)
            m0 = np.where(kk == 0, 1 if j == 0 else 6, 4 if j == 0 else 12)
            for n in ns:
                if j > n - 1:
                    continue
                kn = kk[: n - j]
                Wn = W[:, : n - j]
                lead = R[0] @ Wn
                rest = np.einsum("ks,sk->k", G[n - j - kn], Wn)
                parts[n].append(float(np.dot(m0[: n - j] * (n - j - kn), lead)))
                parts[n].append(float(np.dot(m1[: n - j], rest)))
        return {n: math.fsum(parts[n]) for n in ns}

    def fourth_moment(self, n: int) -> float:
        return self.fourth_moments([n])[n]

    def overcount_sum(self, n: int) -> float:
        """``4! n sum_{i+j+k <= n} E[...]``, the over-counting upper bound on ``E[S_n^4]``."""
        return 24.0 * n * math.fsum(self.cross_moment(i, j, k)
                                    for i in range(n + 1) for j in range(n + 1 - i)
                                    for k in range(n + 1 - i - j))

    def case_sums(self, n: int) -> dict:
        """Sums of ``|E[...]|`` grouped by the largest gap, ``1 <= max <= n``.

        ``CASE1`` collects ``i, j <= k``, ``CASE2`` ``i, k <= j`` and ``CASE3``
        ``j, k <= i``; triples with tied maxima count in every case they meet.
        """
        out = {"CASE1": [], "CASE2": [], "CASE3": []}
        for a in range(1, n + 1):
            for b in range(a + 1):
                for c in range(a + 1):
                    out["CASE1"].append(abs(self.cross_moment(b, c, a)))
                    out["CASE2"].append(abs(self.cross_moment(b, a, c)))
                    out["CASE3"].append(abs(self.cross_moment(a, b, c)))
        return {key: math.fsum(v) for key, v in out.items()}


_ORACLES: dict = {}


def oracle_for(model: FiniteMarkovModel, phi, cap: int = DEFAULT_CAP) -> MomentOracle:
    """Shared oracle keyed by the bytes of ``P``, ``nu`` and the phi table."""
    v = phi_vector(model, phi)
    key = (array_key(model.P), array_key(model.require_nu()), array_key(v), cap)
    orc = _ORACLES.get(key)
    if orc is None:
        if len(_ORACLES) > 64:
            _ORACLES.clear()
        orc = _ORACLES[key] = MomentOracle(model, v, cap=cap)
    return orc


def exact_cross_moment(model: FiniteMarkovModel, phi, i: int, j: int, k: int) -> float:
    return oracle_for(model, phi).cross_moment(i, j, k)


def exact_fourth_moment(model: FiniteMarkovModel, phi, n: int, cap: int = DEFAULT_CAP) -> float:
    """``E_nu[S_n^4]`` with ``S_n = phi(X_1) + ... + phi(X_n)``.

    Raises :class:`CapExceededError` for ``n > cap``.
    """
    return oracle_for(model, phi, cap).fourth_moment(n)


def exact_fourth_moments(model: FiniteMarkovModel, phi, ns, cap: int = DEFAULT_CAP) -> dict[int, float]:
    return oracle_for(model, phi, cap).fourth_moments(ns)


def exact_covariance(model: FiniteMarkovModel, phi, k: int) -> float:
    return oracle_for(model, phi).covariance(k)


def path_enumeration_fourth_moment(model: FiniteMarkovModel, phi, n: int) -> float:
    """``E[S_n^4]`` by summing over every path ``(X_1, ..., X_n)`` with its probability.

    Independent of the gap expansion; limited to ``states^n <= 2^20``.
    """
    v = phi_vector(model, phi)
    s = model.size
    if s ** n > PATH_LIMIT:
        raise ModelError(f"{s}^{n} paths exceed the enumeration limit")
    paths = np.array(list(itertools.product(range(s), repeat=n)), dtype=np.intp).reshape(-1, n)
    prob = model.require_nu()[paths[:, 0]].copy()
    for t in range(1, n):
        prob *= model.P[paths[:, t - 1], paths[:, t]]
    S = v[paths].sum(axis=1)
    return math.fsum(prob * S ** 4)


def direct_fourth_moment(model: FiniteMarkovModel, phi, n: int) -> float:
    """``E[S_n^4]`` as the plain sum over all ``n^4`` time tuples of stationary cross moments."""
    orc = oracle_for(model, phi)
    terms = []
    for t in itertools.product(range(1, n + 1), repeat=4):
        a, b, c, d = sorted(t)
        terms.append(orc.cross_moment(b - a, c - b, d - c))
    return math.fsum(terms)


class GreenKubo(NamedTuple):
    sigma2: float
    lags: int
    error_bound: float


def green_kubo_sigma2(model: FiniteMarkovModel, phi, tol: float = 1e-12,
                      cert: ErgodicityCertificate | None = None, max_lags: int = 100_000) -> GreenKubo:
    """Long-run variance ``E[phi^2] + 2 sum_{k>=1} E[phi(X_0) phi(X_k)]``.

    Lags are added until ``C kappa theta^k ||phi|| ||phi||_q < tol``; the
    reported ``error_bound`` is the geometric tail of twice that envelope.
    """
    from .spectral import theta_kappa

    orc = oracle_for(model, phi)
    if cert is None:
        cert = theta_kappa(model, probes=[orc.phi])
    ob = phi if isinstance(phi, Observable) else Observable.from_values(orc.phi)
    prof = norm_profile(ob.on_states(model), model, q=ob.q)
    nphi = function_norm(orc.phi, cert.norm_kind, model.labels)
    env = cert.C * cert.kappa * nphi * prof.phi_lq
    terms = [orc.covariance(0)]
    k = 0
    g = orc.phi
    w = model.require_nu() * orc.phi
    while k < max_lags:
        if env * cert.theta ** (k + 1) < tol:
            break
        k += 1
        g = model.P @ g
        terms.append(2.0 * math.fsum(w * g))
    err = 2.0 * env * cert.theta ** (k + 1) / (1.0 - cert.theta)
    return GreenKubo(math.fsum(terms), k, err)


__all__ = [
    "CapExceededError", "GreenKubo", "MomentOracle", "direct_fourth_moment", "exact_covariance",
    "exact_cross_moment", "exact_fourth_moment", "exact_fourth_moments", "green_kubo_sigma2",
    "multiplicity", "oracle_for", "path_enumeration_fourth_moment", "phi_vector",
]
