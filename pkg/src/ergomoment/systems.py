"""Constructors for the example systems: finite chains and stationary samplers.

Every sampler is vectorised over replicates. Replicate ``r`` draws all of its
randomness from its own counter-based Philox stream keyed by ``seed + r``, in
a fixed order (initial state, burn-in, then one block of uniforms per step),
so a trajectory depends only on ``(seed, r)`` and never on how the work is
chunked or how many replicates run alongside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.special import ndtri

from .core import FiniteMarkovModel, ModelError, NormKind, Observable
from .spectral import check_ergodic, stationary

DEFAULT_BURN_TOL = 1e-8
DEFAULT_DEPTH = 48
_CHUNK_BUDGET = 4_000_000
_MANTISSA = 53


class NotContractingError(ModelError):
    """Specification is not contracting; ``estimate`` is the measured rate."""

    code = "E_NOT_CONTRACTING"

    def __init__(self, what: str, estimate: float):
        self.estimate = float(estimate)
        super().__init__(f"{what} is not contracting: measured contraction {estimate:.6g} >= 1")


def replicate_rng(seed: int, r: int) -> np.random.Generator:
    """Philox generator of replicate ``r``: key ``seed + r``."""
    return np.random.Generator(np.random.Philox(key=int(seed) + int(r)))


def burn_in_for(rate: float, tol: float = DEFAULT_BURN_TOL) -> int:
    """Steps needed for a geometric rate to push the initial bias below ``tol``."""
    if not (0 <= rate < 1):
        raise ValueError(f"rate must lie in [0, 1), got {rate}")
    if rate == 0:
        return 0
    return int(math.ceil(math.log(tol) / math.log(rate)))


# -- noise -------------------------------------------------------------------

@dataclass(frozen=True)
class Noise:
    """Scalar innovation law given through its quantile function.

    kinds: ``uniform`` on [low, high], ``choice`` over ``values`` with
    ``probs``, ``normal`` with ``scale`` (unbounded).
    """

    kind: str = "uniform"
    low: float = -0.5
    high: float = 0.5
    values: tuple = ()
    probs: tuple = ()
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "choice", "normal"):
            raise ModelError(f"unknown noise kind {self.kind!r}")
        if self.kind == "uniform" and not self.high > self.low:
            raise ModelError("uniform noise needs high > low")
        if self.kind == "choice":
            if not self.values:
                raise ModelError("choice noise needs values")
            probs = self.probs or tuple([1.0 / len(self.values)] * len(self.values))
            if len(probs) != len(self.values) or abs(sum(probs) - 1) > 1e-12 or min(probs) < 0:
                raise ModelError("choice noise probabilities must be a probability vector")
            object.__setattr__(self, "probs", tuple(float(p) for p in probs))
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def from_dict(cls, d: dict | None) -> "Noise":
        d = dict(d or {})
        kind = d.pop("kind", "uniform")
        if "values" in d:
            d["values"] = tuple(d["values"])
        if "probs" in d:
            d["probs"] = tuple(d["probs"])
        return cls(kind=kind, **d)

    @property
    def bound(self) -> float:
        if self.kind == "uniform":
            return max(abs(self.low), abs(self.high))
        if self.kind == "choice":
            return max(abs(v) for v in self.values)
        return math.inf

    @property
    def mean(self) -> float:
        if self.kind == "uniform":
            return 0.5 * (self.low + self.high)
        if self.kind == "choice":
            return float(np.dot(self.values, self.probs))
        return 0.0

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "uniform":
            return self.low + (self.high - self.low) * u
        if self.kind == "choice":
            cum = np.cumsum(self.probs)
            cum[-1] = 1.0
            idx = np.searchsorted(cum, u, side="right")
            return np.asarray(self.values)[np.minimum(idx, len(self.values) - 1)]
        return self.scale * ndtri(np.clip(u, 1e-300, None))

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform", "low": self.low, "high": self.high}
        if self.kind == "choice":
            return {"kind": "choice", "values": list(self.values), "probs": list(self.probs)}
        return {"kind": "normal", "scale": self.scale}


# -- samplers ----------------------------------------------------------------

class StationarySampler:
    """Seeded generator of stationary trajectories.

    Subclasses define ``init_width`` and ``noise_width`` (uniforms consumed by
    the initial draw and by each step) and implement ``_init``, ``_step`` and
    ``_emit``. ``burn_in`` steps are taken and discarded before emission.
    """

    name = "sampler"
    state_space = ""
    init_width = 1
    noise_width = 1
    tolerance = DEFAULT_BURN_TOL

    def __init__(self, seed: int = 0, burn_in: int = 0):
        if burn_in < 0:
            raise ModelError("burn_in must be >= 0")
        self.seed = int(seed)
        self.burn_in = int(burn_in)

    # subclasses -------------------------------------------------------------
    def _init(self, u):
        raise NotImplementedError

    def _step(self, state, u):
        raise NotImplementedError

    def _emit(self, state):
        return state

    def cdf(self, x):
        """Stationary CDF of :meth:`coordinate`, when known in closed form."""
        raise NotImplementedError(f"{self.name} has no closed-form stationary CDF")

    def coordinate(self, emitted):
        """Real-valued position of an emitted state (used by indicators)."""
        return np.asarray(emitted, dtype=float)

    def describe(self) -> dict:
        return {"kind": self.name, "seed": self.seed, "burn_in": self.burn_in}

    # driver -----------------------------------------------------------------
    def _draw(self, rngs, rows, width):
        if width == 0 or rows == 0:
            return np.empty((len(rngs), rows, width))
        return np.stack([g.random((rows, width)) for g in rngs])

    def paths(self, n: int, reps: int, seed: int | None = None, first: int = 0,
              emit_size: int = 1) -> Iterator[np.ndarray]:
        """Yield emitted states of replicates ``first .. first+reps-1`` in time blocks.

        Each yielded array has shape ``(reps, c, ...)``; the blocks cover
        times ``0 .. n-1`` in order.
        """
        seed = self.seed if seed is None else int(seed)
        rngs = [replicate_rng(seed, first + r) for r in range(reps)]
        state = self._init(self._draw(rngs, 1, self.init_width)[:, 0, :])
        width = max(1, self.noise_width, emit_size)
        chunk = max(1, _CHUNK_BUDGET // (max(reps, 1) * width))
        left = self.burn_in
        while left:
            c = min(chunk, left)
            u = self._draw(rngs, c, self.noise_width)
            for t in range(c):
                state = self._step(state, u[:, t, :])
            left -= c
        done = 0
        while done < n:
            c = min(chunk, n - done)
            u = self._draw(rngs, c, self.noise_width)
            out = []
            for t in range(c):
                if done + t:
                    state = self._step(state, u[:, t, :])
                out.append(self._emit(state))
            done += c
            yield np.stack(out, axis=1)

    def trajectory(self, n: int, seed: int | None = None, replicate: int = 0) -> np.ndarray:
        """Emitted states ``X_0 .. X_{n-1}`` of one replicate."""
        blocks = list(self.paths(n, 1, seed=seed, first=replicate))
        return np.concatenate(blocks, axis=1)[0]

    def partial_sums(self, phi: Callable, n: int, reps: int, seed: int | None = None,
                     first: int = 0) -> np.ndarray:
        """``S_n = sum_t phi(X_t)`` for each replicate."""
        total = np.zeros(reps)
        for block in self.paths(n, reps, seed=seed, first=first):
            total += np.asarray(phi(block), dtype=float).reshape(reps, -1).sum(axis=1)
        return total


class ChainSampler(StationarySampler):
    """Finite Markov chain started from its exact stationary vector; emits state indices."""

    name = "finite"

    def __init__(self, model: FiniteMarkovModel, seed: int = 0, burn_in: int = 0):
        super().__init__(seed, burn_in)
        if model.nu is None:
            model = model.with_stationary(stationary(model.P))
        self.model = model
        self.state_space = f"{model.size} states"
        self._cum_nu = np.cumsum(model.nu)
        self._cum_nu[-1] = 1.0
        cum = np.cumsum(model.P, axis=1)
        cum[:, -1] = 1.0
        self._cum = cum

    def _init(self, u):
        return np.searchsorted(self._cum_nu, u[:, 0], side="right").clip(0, self.model.size - 1)

    def _step(self, state, u):
        rows = self._cum[state]
        return (u[:, :1] >= rows).sum(axis=1).clip(0, self.model.size - 1)

    def coordinate(self, emitted):
        return self.model.labels[np.asarray(emitted, dtype=np.intp)]

    def cdf(self, x):
        lab = self.model.labels
        return float(self.model.nu[lab <= x].sum())

    def describe(self):
        return {**super().describe(), "model": self.model.to_dict()}


class IIDUniformSampler(StationarySampler):
    """I.i.d. uniform draws on [0, 1)."""

    name = "iid_uniform"
    state_space = "[0, 1)"

    def _init(self, u):
        return u[:, 0].copy()

    def _step(self, state, u):
        return u[:, 0].copy()

    def cdf(self, x):
        return float(np.clip(x, 0.0, 1.0))


# -- interval maps -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IntervalMap:
    """Map of [0, 1) to itself.

    ``branches`` lists affine pieces ``(a, b, slope, intercept)`` when the map
    is piecewise linear; ``monotone`` declares piecewise monotonicity for maps
    without that list. ``density`` and ``cdf`` describe the invariant law
    when known in closed form.
    """

    name: str
    func: Callable
    branches: tuple = ()
    monotone: bool = False
    density: Callable | None = None
    cdf: Callable | None = None
    mixing_rate: float = 0.5

    def __call__(self, x):
        return self.func(x)

    def orbit(self, x0: float, n: int) -> np.ndarray:
        """Floating point orbit ``x0, T x0, ..., T^{n-1} x0``."""
        out = np.empty(n)
        x = float(x0)
        for t in range(n):
            out[t] = x
            x = float(self.func(x))
        return out


def doubling_map() -> IntervalMap:
    return IntervalMap(
        name="doubling", func=lambda x: np.mod(2.0 * np.asarray(x, dtype=float), 1.0),
        branches=((0.0, 0.5, 2.0, 0.0), (0.5, 1.0, 2.0, -1.0)), monotone=True,
        density=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        cdf=lambda x: np.clip(x, 0.0, 1.0), mixing_rate=0.5,
    )


def beta_map(beta: float) -> IntervalMap:
    beta = float(beta)
    if not beta > 1:
        raise ModelError(f"beta transformation needs beta > 1, got {beta}")
    pieces = []
    k = 0
    while k / beta < 1:
        pieces.append((k / beta, min((k + 1) / beta, 1.0), beta, -float(k)))
        k += 1
    return IntervalMap(
        name=f"beta({beta:g})", func=lambda x: np.mod(beta * np.asarray(x, dtype=float), 1.0),
        branches=tuple(pieces), monotone=True, mixing_rate=1.0 / beta,
    )


def _gauss(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        y = np.mod(1.0 / x, 1.0)
    return np.where(x > 0, y, 0.0)


def gauss_map() -> IntervalMap:
    ln2 = math.log(2.0)
    return IntervalMap(
        name="gauss", func=_gauss, monotone=True,
        density=lambda x: 1.0 / ((1.0 + np.asarray(x, dtype=float)) * ln2),
        cdf=lambda x: np.log2(1.0 + np.clip(x, 0.0, 1.0)),
        mixing_rate=0.30366300289873265,  # Gauss-Kuzmin-Wirsing constant
    )


class MapSampler(StationarySampler):
    """Orbit ``x, T x, T^2 x, ...`` of an interval map from an invariant-law draw."""

    noise_width = 0
    state_space = "[0, 1)"

    def __init__(self, tmap: IntervalMap, seed: int = 0, burn_in: int = 0):
        super().__init__(seed, burn_in)
        self.map = tmap
        self.name = tmap.name

    def _init(self, u):
        return u[:, 0].copy()

    def _step(self, state, u):
        return self.map.func(state)

    def cdf(self, x):
        if self.map.cdf is None:
            return super().cdf(x)
        return float(self.map.cdf(x))


class DoublingSampler(MapSampler):
    """Doubling map orbit carried as a 53-bit binary expansion.

    Floating point iteration of ``2x mod 1`` reaches 0 within 53 steps, so
    the state is the integer ``m = x 2^53``: a step shifts it left and appends
    a fresh uniform bit, which is exactly the orbit of a uniformly drawn point
    read to 53 binary digits.
    """

    noise_width = 1
    _mask = (1 << _MANTISSA) - 1

    def __init__(self, seed: int = 0, burn_in: int = 0):
        super().__init__(doubling_map(), seed, burn_in)

    def _init(self, u):
        return np.floor(u[:, 0] * 2.0 ** _MANTISSA).astype(np.uint64)

    def _step(self, state, u):
        bit = (u[:, 0] >= 0.5).astype(np.uint64)
        return ((state << np.uint64(1)) & np.uint64(self._mask)) | bit

    def _emit(self, state):
        return state.astype(float) * 2.0 ** -_MANTISSA


class GaussSampler(MapSampler):
    """Gauss map started exactly from its invariant law via ``x = 2^u - 1``."""

    def __init__(self, seed: int = 0, burn_in: int = 0):
        super().__init__(gauss_map(), seed, burn_in)

    def _init(self, u):
        return np.exp2(u[:, 0]) - 1.0

    def _step(self, state, u):
        y = self.map.func(state)
        # an orbit that lands on 0 (rounding) is restarted at the median
        return np.where(state > 0, y, math.sqrt(2.0) - 1.0)


def expanding_map(kind: str, beta: float | None = None, seed: int = 0,
                  burn_in: int | str = "auto") -> MapSampler:
    """Sampler for the doubling map, a beta transformation or the Gauss map.

    Doubling and Gauss start exactly from the invariant law. The beta map
    starts from a uniform draw and, with ``burn_in="auto"``, discards
    ``ceil(ln 1e-8 / ln(1/beta))`` steps.
    """
    if kind == "doubling":
        return DoublingSampler(seed, 0 if burn_in == "auto" else int(burn_in))
    if kind == "gauss":
        return GaussSampler(seed, 0 if burn_in == "auto" else int(burn_in))
    if kind == "beta":
        if beta is None:
            raise ModelError("beta kind needs beta")
        m = beta_map(beta)
        b = burn_in_for(m.mixing_rate) if burn_in == "auto" else int(burn_in)
        return MapSampler(m, seed, b)
    raise ModelError(f"unknown expanding map kind {kind!r}")


# -- Markov chains ---------------------------------------------------------------

def doeblin_chain(P, states=None) -> FiniteMarkovModel:
    """Uniformly ergodic finite chain with its exact stationary vector attached.

    On the bounded functions with the uniform norm such a chain is
    geometrically ergodic with embedding and algebra constants equal to 1.
    """
    P = np.asarray(P, dtype=float)
    m = FiniteMarkovModel.from_matrix(P, states=states)
    check_ergodic(P)
    nu = stationary(P)
    return FiniteMarkovModel(states=m.states, P=m.P, nu=nu,
                             meta={"ergodicity": "uniform (sup norm)", "C": 1.0, "M": 1.0})


def iid_chain(probs, states=None) -> FiniteMarkovModel:
    """Chain whose rows all equal ``probs`` (an i.i.d. sequence)."""
    probs = np.asarray(probs, dtype=float)
    return doeblin_chain(np.tile(probs, (len(probs), 1)), states)


# -- subshifts -----------------------------------------------------------------

class SubshiftSampler(StationarySampler):
    """Markov measure on a one-sided subshift of finite type.

    The emitted state at time t is the window ``(x_t, ..., x_{t+D-1})`` of the
    symbol sequence; the tail beyond depth D is dropped, which moves a
    function with Lipschitz constant L (for ``d(x, y) = 2^-k``, k the first
    disagreement) by at most ``L 2^-D``.
    """

    name = "subshift"
    noise_width = 1

    def __init__(self, A, Q, seed: int = 0, depth: int = DEFAULT_DEPTH):
        super().__init__(seed, 0)
        self.A = np.asarray(A, dtype=int)
        self.Q = np.asarray(Q, dtype=float)
        self.depth = int(depth)
        self.init_width = self.depth
        self.pi = stationary(self.Q)
        self._cum_pi = np.cumsum(self.pi)
        self._cum_pi[-1] = 1.0
        cum = np.cumsum(self.Q, axis=1)
        cum[:, -1] = 1.0
        self._cum = cum
        self.state_space = f"{len(self.A)} symbols, depth {self.depth}"

    def _next(self, prev, u):
        return (u[:, None] >= self._cum[prev]).sum(axis=1).clip(0, len(self.Q) - 1)

    def _init(self, u):
        x = np.empty((u.shape[0], self.depth), dtype=np.int64)
        x[:, 0] = np.searchsorted(self._cum_pi, u[:, 0], side="right").clip(0, len(self.Q) - 1)
        for k in range(1, self.depth):
            x[:, k] = self._next(x[:, k - 1], u[:, k])
        return x

    def _step(self, state, u):
        nxt = self._next(state[:, -1], u[:, 0])
        return np.concatenate([state[:, 1:], nxt[:, None]], axis=1)

    def coordinate(self, emitted):
        e = np.asarray(emitted)
        base = float(len(self.A))
        w = base ** -(np.arange(e.shape[-1]) + 1.0)
        return e @ w

    def describe(self):
        return {**super().describe(), "A": self.A.tolist(), "Q": self.Q.tolist(), "depth": self.depth}


def subshift(A, Q=None, seed: int = 0, depth: int = DEFAULT_DEPTH) -> SubshiftSampler:
    """Markov measure with transition matrix ``Q`` on the subshift defined by the 0/1 matrix ``A``.

    ``Q`` defaults to the uniform choice among allowed successors. Mass on a
    forbidden pair ``A[i, j] = 0`` is rejected, as are reducible or periodic
    transition structures.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or not np.isin(A, (0, 1)).all():
        raise ModelError("A must be a square 0/1 matrix")
    if Q is None:
        if (A.sum(axis=1) == 0).any():
            raise ModelError("A has a symbol with no allowed successor")
        Q = A / A.sum(axis=1, keepdims=True)
    Q = np.asarray(Q, dtype=float)
    if Q.shape != A.shape:
        raise ModelError("Q and A shapes differ")
    bad = np.argwhere((A == 0) & (Q > 0))
    if len(bad):
        i, j = bad[0]
        raise ModelError(f"probability mass on forbidden pair ({i}, {j})")
    FiniteMarkovModel.from_matrix(Q)
    check_ergodic(Q)
    return SubshiftSampler(A, Q, seed=seed, depth=depth)


def shift_observable(coeffs, symbols: Sequence[float] | None = None, q: float = 2.0,
                     offset: float = 0.0, alphabet_size: int | None = None) -> Observable:
    """Linear functional ``f(x) = offset + sum_k c_k s(x_k)`` on subshift windows.

    ``symbols`` maps each letter to a real value (identity by default). The
    Lipschitz constant for ``d(x, y) = 2^-k`` is
    ``sup_K 2^K sum_{k>=K} |c_k| * spread`` with ``spread`` the range of the
    symbol values; the declared norm is ``sup + Lip``.
    """
    c = np.asarray(coeffs, dtype=float)
    if alphabet_size is None:
        alphabet_size = len(symbols) if symbols is not None else 2
    sym = np.asarray(symbols if symbols is not None else np.arange(alphabet_size), dtype=float)
    spread = float(sym.max() - sym.min())
    tails = np.cumsum(np.abs(c)[::-1])[::-1] * spread
    lip = float(np.max(tails * 2.0 ** np.arange(len(c))))
    hi = offset + np.sum(np.maximum(c * sym.max(), c * sym.min()))
    lo = offset + np.sum(np.minimum(c * sym.max(), c * sym.min()))
    sup = float(max(abs(hi), abs(lo)))

    def func(w):
        w = np.asarray(w)
        v = sym[w[..., : len(c)]]
        return offset + v @ c[: v.shape[-1]]

    return Observable(func=func, q=q, sup_bound=sup, banach_norm=sup + lip,
                      norm_kind=NormKind.LIPSCHITZ, note=f"shift functional, Lip {lip:g}",
                      spec={"kind": "shift", "coeffs": c.tolist(), "offset": offset,
                            "symbols": sym.tolist(), "q": q})


def lipschitz_constant(obs: Observable) -> float:
    """Lipschitz part of a declared ``sup + Lip`` norm."""
    return float(obs.banach_norm - (obs.sup_bound or 0.0))


# -- linear processes ------------------------------------------------------------

@dataclass(frozen=True)
class LinearProcessSpec:
    """Coefficients ``a_i`` with ``|a_i| <= C rho^i`` and bounded innovations.

    ``coefficients`` is a callable ``i -> a_i`` or a finite sequence (zero
    beyond its end). The truncation length L is the smallest integer with
    ``C rho^(L+1) / (1 - rho) < tol``.
    """

    coefficients: Callable | Sequence[float]
    C: float
    rho: float
    innovations: Noise = Noise()
    tol: float = 1e-10

    def __post_init__(self):
        if not (0 < self.rho < 1) or not self.C > 0:
            raise ModelError("need C > 0 and 0 < rho < 1")
        if not math.isfinite(self.innovations.bound):
            raise ModelError("innovations must be bounded")

    @property
    def truncation(self) -> int:
        L = 0
        while self.C * self.rho ** (L + 1) / (1 - self.rho) >= self.tol:
            L += 1
        return L

    def tail_bound(self, L: int | None = None) -> float:
        L = self.truncation if L is None else L
        return self.C * self.rho ** (L + 1) / (1 - self.rho)

    def coefficient_array(self) -> np.ndarray:
        L = self.truncation
        if callable(self.coefficients):
            a = np.array([float(self.coefficients(i)) for i in range(L + 1)])
        else:
            a = np.zeros(L + 1)
            given = np.asarray(self.coefficients, dtype=float)[: L + 1]
            a[: len(given)] = given
        env = self.C * self.rho ** np.arange(L + 1)
        bad = np.flatnonzero(np.abs(a) > env * (1 + 1e-12))
        if len(bad):
            raise ModelError(f"|a_{bad[0]}| exceeds the declared envelope C rho^i")
        return a


class LinearProcessSampler(StationarySampler):
    """``X_k = sum_{i<=L} a_i xi_{k-i}``; the state is the innovation window, newest first."""

    name = "linear"
    init_width = 0

    def __init__(self, spec: LinearProcessSpec, seed: int = 0):
        self.spec = spec
        self.a = spec.coefficient_array()
        # filling the window from zeros is the burn-in
        super().__init__(seed, burn_in=len(self.a))
        self.state_space = "real line (window of %d innovations)" % len(self.a)
        self.tolerance = spec.tol

    def _init(self, u):
        return np.zeros((u.shape[0], len(self.a)))

    def _step(self, state, u):
        xi = self.spec.innovations.ppf(u[:, 0])
        return np.concatenate([xi[:, None], state[:, :-1]], axis=1)

    def _emit(self, state):
        return state @ self.a


def linear_process(spec: LinearProcessSpec, seed: int = 0) -> LinearProcessSampler:
    return LinearProcessSampler(spec, seed)


def sequence_distance(x, y, rho: float) -> float:
    """``d(x, y) = sum_i rho^i |x_i - y_i|`` on innovation sequences (newest first)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return float(np.sum(rho ** np.arange(len(x)) * np.abs(x - y)))


def linear_contraction(spec: LinearProcessSpec, k: int, pairs: int = 200, seed: int = 0) -> float:
    """Largest observed ratio ``|X_k(y) - X_k(x)| / (C rho^k d(x, y))``.

    Two pasts ``x, y`` share the innovations ``xi_1..xi_k``; only the old
    part of the window differs, so the ratio is at most 1 when the declared
    envelope holds.
    """
    a = spec.coefficient_array()
    L = len(a)
    if k >= L:
        return 0.0
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        px = spec.innovations.ppf(rng.random(L - k))
        py = spec.innovations.ppf(rng.random(L - k))
        common = spec.innovations.ppf(rng.random(k))
        xs = np.concatenate([common, px])
        ys = np.concatenate([common, py])
        d = sequence_distance(px, py, spec.rho)
        if d == 0:
            continue
        worst = max(worst, abs(a @ ys - a @ xs) / (spec.C * spec.rho ** k * d))
    return worst


# -- autoregressive and random Lipschitz models -----------------------------------

class ARSampler(StationarySampler):
    """``X_n = A X_{n-1} + Y_n`` started at 0 and burnt in."""

    name = "ar"

    def __init__(self, A, noise: Noise, seed: int = 0, burn_in: int = 0, rate: float = 0.0):
        super().__init__(seed, burn_in)
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.dim = self.A.shape[0]
        self.noise = noise
        self.noise_width = self.dim
        self.init_width = 0
        self.rate = rate
        self.state_space = f"R^{self.dim}"

    def _init(self, u):
        return np.zeros((u.shape[0], self.dim))

    def _step(self, state, u):
        return state @ self.A.T + self.noise.ppf(u)

    def _emit(self, state):
        return state[:, 0] if self.dim == 1 else state.copy()

    def describe(self):
        return {**super().describe(), "A": self.A.tolist(), "noise": self.noise.to_dict(),
                "contraction": self.rate}


def ar_model(A, noise: Noise | dict | None = None, seed: int = 0,
             burn_in: int | str = "auto", tol: float = DEFAULT_BURN_TOL) -> ARSampler:
    """Autoregressive sampler; rejects ``||A||_2 >= 1``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise ModelError("A must be square")
    noise = noise if isinstance(noise, Noise) else Noise.from_dict(noise)
    rate = float(np.linalg.norm(A, 2))
    if rate >= 1:
        raise NotContractingError("AR matrix", rate)
    b = burn_in_for(rate, tol) if burn_in == "auto" else int(burn_in)
    return ARSampler(A, noise, seed=seed, burn_in=b, rate=rate)


class LipschitzIFSSampler(StationarySampler):
    """``X_n = g_n(X_{n-1})`` with ``g_n`` drawn i.i.d. from a finite family."""

    name = "random_lipschitz"
    init_width = 0

    def __init__(self, maps, weights, x0: float, seed: int = 0, burn_in: int = 0,
                 rate: float = 0.0, affine=None):
        super().__init__(seed, burn_in)
        self.maps = list(maps)
        self.weights = np.asarray(weights, dtype=float)
        self._cum = np.cumsum(self.weights)
        self._cum[-1] = 1.0
        self.x0 = float(x0)
        self.rate = rate
        self.affine = affine
        self.state_space = "real line"

    def _init(self, u):
        return np.full(u.shape[0], self.x0)

    def _step(self, state, u):
        idx = np.searchsorted(self._cum, u[:, 0], side="right").clip(0, len(self.maps) - 1)
        out = np.empty_like(state)
        for m, g in enumerate(self.maps):
            sel = idx == m
            if sel.any():
                out[sel] = g(state[sel])
        return out

    def describe(self):
        d = {**super().describe(), "weights": self.weights.tolist(), "contraction": self.rate}
        if self.affine is not None:
            d["maps"] = [list(ab) for ab in self.affine]
        return d


def random_lipschitz(maps, weights=None, seed: int = 0, domain=(0.0, 1.0), x0: float | None = None,
                     burn_in: int | str = "auto", tol: float = DEFAULT_BURN_TOL,
                     pairs: int = 4096) -> LipschitzIFSSampler:
    """Random iteration of Lipschitz maps of the line.

    ``maps`` holds affine pairs ``(a, b)`` for ``x -> a x + b`` or vectorised
    callables. The average contraction ``sum_g w_g Lip(g)`` is exact for
    affine maps and otherwise the largest slope over ``pairs`` seeded random
    pairs in ``domain``; a value >= 1 is rejected.
    """
    if weights is None:
        weights = [1.0 / len(maps)] * len(maps)
    w = np.asarray(weights, dtype=float)
    if len(w) != len(maps) or abs(w.sum() - 1) > 1e-12 or (w < 0).any():
        raise ModelError("weights must be a probability vector matching maps")
    funcs, lips, affine = [], [], []
    rng = np.random.default_rng(seed)
    lo, hi = domain
    for g in maps:
        if callable(g):
            x, y = rng.uniform(lo, hi, pairs), rng.uniform(lo, hi, pairs)
            keep = x != y
            ratio = np.abs(g(x[keep]) - g(y[keep])) / np.abs(x[keep] - y[keep])
            lips.append(float(ratio.max()))
            funcs.append(g)
        else:
            a, b = map(float, g)
            lips.append(abs(a))
            funcs.append(lambda x, a=a, b=b: a * x + b)
            affine.append((a, b))
    if len(affine) < len(maps):
        affine = None
    rate = float(np.dot(w, lips))
    if rate >= 1:
        raise NotContractingError("random Lipschitz model", rate)
    b = burn_in_for(rate, tol) if burn_in == "auto" else int(burn_in)
    start = 0.5 * (lo + hi) if x0 is None else x0
    return LipschitzIFSSampler(funcs, w, start, seed=seed, burn_in=b, rate=rate, affine=affine)


# -- model zoo -------------------------------------------------------------------

SYSTEM_KINDS = ("finite", "doeblin", "iid", "iid_uniform", "doubling", "beta", "gauss",
                "subshift", "linear", "ar", "random_lipschitz", "ulam")


def build_system(cfg: dict):
    """Build a model or sampler from a zoo configuration dictionary.

    Returns a :class:`FiniteMarkovModel` for ``finite``, ``doeblin``, ``iid``
    and ``ulam`` kinds and a :class:`StationarySampler` otherwise.
    """
    from .spectral import ulam

    kind = cfg.get("kind", "finite" if "P" in cfg else None)
    seed = int(cfg.get("seed", 0))
    burn = cfg.get("burn_in", "auto")
    if kind in ("finite", "doeblin"):
        if "P" not in cfg:
            raise ModelError("finite system needs P")
        P = np.asarray(cfg["P"], dtype=float)
        FiniteMarkovModel.from_matrix(P, nu=cfg.get("nu"), states=cfg.get("states"))
        return doeblin_chain(P, states=cfg.get("states"))
    if kind == "iid":
        return iid_chain(cfg["probs"], states=cfg.get("states"))
    if kind == "ulam":
        m = cfg.get("map", "doubling")
        tmap = {"doubling": doubling_map, "gauss": gauss_map}.get(m)
        tmap = beta_map(cfg["beta"]) if m == "beta" else (tmap() if tmap else None)
        if tmap is None:
            raise ModelError(f"unknown map {m!r}")
        return ulam(tmap, int(cfg.get("cells", 64)), int(cfg.get("samples_per_cell", 4096)))
    if kind == "iid_uniform":
        return IIDUniformSampler(seed)
    if kind in ("doubling", "beta", "gauss"):
        return expanding_map(kind, beta=cfg.get("beta"), seed=seed, burn_in=burn)
    if kind == "subshift":
        return subshift(cfg["A"], cfg.get("Q"), seed=seed, depth=int(cfg.get("depth", DEFAULT_DEPTH)))
    if kind == "linear":
        spec = LinearProcessSpec(coefficients=cfg["coefficients"] if "coefficients" in cfg
                                 else (lambda i, r=float(cfg["rho"]): r ** i),
                                 C=float(cfg.get("C", 1.0)), rho=float(cfg["rho"]),
                                 innovations=Noise.from_dict(cfg.get("noise")),
                                 tol=float(cfg.get("tol", 1e-10)))
        return linear_process(spec, seed)
    if kind == "ar":
        return ar_model(cfg["A"], cfg.get("noise"), seed=seed, burn_in=burn)
    if kind == "random_lipschitz":
        return random_lipschitz([tuple(m) for m in cfg["maps"]], cfg.get("weights"), seed=seed,
                                domain=tuple(cfg.get("domain", (0.0, 1.0))), burn_in=burn)
    raise ModelError(f"unknown system kind {kind!r}")


__all__ = [
    "ARSampler", "ChainSampler", "DoublingSampler", "GaussSampler", "IIDUniformSampler",
    "IntervalMap", "LinearProcessSampler", "LinearProcessSpec", "LipschitzIFSSampler",
    "MapSampler", "Noise", "NotContractingError", "StationarySampler", "SubshiftSampler",
    "ar_model", "beta_map", "build_system", "burn_in_for", "doeblin_chain", "doubling_map",
    "expanding_map", "gauss_map", "iid_chain", "linear_contraction", "linear_process",
    "lipschitz_constant", "random_lipschitz", "replicate_rng", "sequence_distance",
    "shift_observable", "subshift",
]
