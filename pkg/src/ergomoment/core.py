"""Domain types shared by every other module.

A finite chain is a :class:`FiniteMarkovModel`; a function of the state is an
:class:`Observable` carrying the metadata the moment bounds need (its Banach
norm, the Hölder exponent ``q`` and, once centred, the tolerance on its mean).
:class:`NormProfile` collects every stationary norm that enters the fourth
moment bound, and :class:`ErgodicityCertificate` holds the constants of
geometric ergodicity together with the probe functions they were measured on.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

STOCHASTIC_TOL = 1e-12
STATIONARY_TOL = 1e-10
CENTER_TOL = 1e-12


class ModelError(ValueError):
    """Invalid model or observable input."""

    code = "E_MODEL"


class NotStochasticError(ModelError):
    code = "E_NOT_STOCHASTIC"


class NoMeasureError(ModelError):
    code = "E_NO_MEASURE"


class NormKind(str, Enum):
    SUP = "SUP"
    LIPSCHITZ = "LIPSCHITZ"
    BV = "BV"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str) and value.upper() in cls.__members__:
            return cls[value.upper()]
        return None


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def array_key(a) -> bytes:
    """Exact byte key of a float vector, used for probe bookkeeping."""
    return hashlib.sha1(np.ascontiguousarray(a, dtype=float).tobytes()).digest()


def _check_stochastic(P):
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise NotStochasticError(f"P must be a non-empty square matrix, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise NotStochasticError("P not stochastic: non-finite entries")
    neg = np.argwhere(P < 0)
    if len(neg):
        raise NotStochasticError(f"P not stochastic: row {neg[0][0]} has a negative entry")
    dev = np.abs(P.sum(axis=1) - 1.0)
    bad = np.flatnonzero(dev > STOCHASTIC_TOL)
    if len(bad):
        raise NotStochasticError(f"P not stochastic: row {bad[0]}")


def _check_stationary(P, nu):
    if nu.shape != (P.shape[0],):
        raise ModelError(f"nu has shape {nu.shape}, expected ({P.shape[0]},)")
    if np.any(nu < 0):
        raise ModelError("nu has negative entries")
    if abs(nu.sum() - 1.0) > STOCHASTIC_TOL:
        raise ModelError(f"nu sums to {nu.sum():.16g}, not 1")
    res = np.abs(nu @ P - nu).sum()
    if res >= STATIONARY_TOL:
        raise ModelError(f"nu is not stationary: residual {res:.3e}")


@dataclass(frozen=True, eq=False)
class FiniteMarkovModel:
    """Finite-state homogeneous Markov chain.

    Parameters
    ----------
    states : sequence
        State labels, in the order of the rows of ``P``.
    P : (s, s) array_like
        Row-stochastic transition matrix.
    nu : (s,) array_like, optional
        Stationary probability vector.
    """

    states: tuple
    P: np.ndarray
    nu: np.ndarray | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        P = _readonly(self.P)
        _check_stochastic(P)
        object.__setattr__(self, "P", P)
        states = tuple(self.states) if self.states is not None else tuple(range(P.shape[0]))
        if len(states) != P.shape[0]:
            raise ModelError(f"{len(states)} state labels for a {P.shape[0]}-state matrix")
        object.__setattr__(self, "states", states)
        if self.nu is not None:
            nu = _readonly(self.nu)
            _check_stationary(P, nu)
            object.__setattr__(self, "nu", nu)

    @classmethod
    def from_matrix(cls, P, nu=None, states=None) -> "FiniteMarkovModel":
        P = np.asarray(P, dtype=float)
        return cls(states=tuple(range(len(P))) if states is None else tuple(states), P=P, nu=nu)

    @property
    def size(self) -> int:
        return self.P.shape[0]

    @property
    def labels(self) -> np.ndarray:
        """State labels as floats (indices when the labels are not numeric)."""
        try:
            return np.array(self.states, dtype=float)
        except (TypeError, ValueError):
            return np.arange(self.size, dtype=float)

    def with_stationary(self, nu) -> "FiniteMarkovModel":
        return FiniteMarkovModel(states=self.states, P=self.P, nu=nu, meta=self.meta)

    def require_nu(self) -> np.ndarray:
        if self.nu is None:
            raise NoMeasureError("no measure: model has no stationary vector attached")
        return self.nu

    def to_dict(self) -> dict:
        d = {"states": list(self.states), "P": self.P.tolist()}
        if self.nu is not None:
            d["nu"] = self.nu.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteMarkovModel":
        if "P" not in d:
            raise ModelError("model JSON needs a 'P' field")
        P = np.asarray(d["P"], dtype=float)
        states = d.get("states") or list(range(len(P)))
        return cls(states=tuple(states), P=P, nu=d.get("nu"))


@dataclass(frozen=True)
class Quadrature:
    """Discrete stand-in for a continuous stationary law: nodes and weights.

    ``coarse`` holds the half-resolution rule used by :meth:`expect` for its
    error estimate; ``note`` records how the rule was produced.
    """

    nodes: np.ndarray
    weights: np.ndarray
    note: str
    coarse: "Quadrature | None" = None

    def expect(self, f: Callable) -> tuple[float, float]:
        """Return ``(E f, error estimate)``; the estimate compares against half resolution."""
        val = float(np.dot(self.weights, f(self.nodes)))
        if self.coarse is None:
            return val, float("nan")
        coarse = float(np.dot(self.coarse.weights, f(self.coarse.nodes)))
        # midpoint rule is second order: Richardson error of the fine value
        return val, abs(val - coarse) / 3.0


def midpoint_quadrature(density: Callable, cells: int, a: float = 0.0, b: float = 1.0) -> Quadrature:
    """Composite midpoint rule for the probability density ``density`` on [a, b]."""
    if cells < 2:
        raise ValueError("cells must be >= 2")

    def build(m):
        h = (b - a) / m
        x = a + h * (np.arange(m) + 0.5)
        w = np.asarray(density(x), dtype=float) * h
        return x, w

    x, w = build(cells)
    xc, wc = build(cells // 2)
    note = f"composite midpoint, {cells} cells on [{a}, {b}], raw mass {w.sum():.15g}"
    coarse = Quadrature(xc, wc / wc.sum(), note="coarse")
    return Quadrature(x, w / w.sum(), note=note, coarse=coarse)


def function_norm(f, kind: NormKind = NormKind.SUP, labels=None) -> float:
    """Banach norm of a function on a finite state space.

    SUP is the uniform norm. LIPSCHITZ is ``sup + Lip`` against the distance
    between numeric labels, BV is ``sup + total variation`` along the label
    order.
    """
    f = np.asarray(f, dtype=float)
    sup = float(np.max(np.abs(f))) if f.size else 0.0
    kind = NormKind(kind)
    if kind is NormKind.SUP or f.size < 2:
        return sup
    if labels is None:
        raise ModelError(f"{kind.value} norm needs numeric state labels")
    x = np.asarray(labels, dtype=float)
    order = np.argsort(x, kind="stable")
    xs, fs = x[order], f[order]
    if kind is NormKind.BV:
        return sup + float(np.abs(np.diff(fs)).sum())
    dx = np.abs(xs[:, None] - xs[None, :])
    df = np.abs(fs[:, None] - fs[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dx > 0, df / dx, 0.0)
    return sup + float(ratio.max())


@dataclass(frozen=True, eq=False)
class Observable:
    """Real function of the state with the norm metadata used by the bounds.

    Exactly one of ``values`` (a table indexed by state number) or ``func``
    (a vectorised callable on emitted states) is given. ``banach_norm`` is the
    norm of the function in the chosen Banach space; it defaults to the
    uniform norm for finite tables and must be declared otherwise.
    ``mean_tol`` is set by :func:`center`; ``None`` means the observable is
    not known to be centred.
    """

    func: Callable | None = None
    values: np.ndarray | None = None
    q: float = 2.0
    sup_bound: float | None = None
    banach_norm: float | None = None
    norm_kind: NormKind = NormKind.SUP
    mean_tol: float | None = None
    note: str = ""
    spec: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if (self.func is None) == (self.values is None):
            raise ModelError("give exactly one of func or values")
        q = float(self.q)
        if not (1.0 <= q < math.inf):
            raise ModelError(f"q must satisfy 1 <= q < inf, got {self.q}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "norm_kind", NormKind(self.norm_kind))
        if self.values is not None:
            v = _readonly(self.values)
            if v.ndim != 1 or not np.all(np.isfinite(v)):
                raise ModelError("observable values must be a finite 1-d array")
            object.__setattr__(self, "values", v)
            sup = float(np.max(np.abs(v))) if v.size else 0.0
            if self.sup_bound is None:
                object.__setattr__(self, "sup_bound", sup)
            if self.banach_norm is None:
                if self.norm_kind is not NormKind.SUP:
                    raise ModelError(f"{self.norm_kind.value} norm must be declared")
                object.__setattr__(self, "banach_norm", sup)
            slack = 1e-12 * max(1.0, sup)
            if sup > self.sup_bound + slack:
                raise ModelError(f"|phi| reaches {sup}, above sup_bound {self.sup_bound}")
            if sup > self.banach_norm + slack:
                raise ModelError(f"banach_norm {self.banach_norm} below sup |phi| = {sup}")
        elif self.banach_norm is None:
            if self.norm_kind is NormKind.SUP and self.sup_bound is not None:
                object.__setattr__(self, "banach_norm", float(self.sup_bound))
            else:
                raise ModelError("banach_norm must be declared for function observables")
        if self.banach_norm < 0 or (self.sup_bound is not None and self.sup_bound < 0):
            raise ModelError("norms must be nonnegative")

    # -- construction -------------------------------------------------------
    @classmethod
    def from_values(cls, values, q=2.0, norm_kind=NormKind.SUP, banach_norm=None, **kw) -> "Observable":
        return cls(values=np.asarray(values, dtype=float), q=q, norm_kind=norm_kind,
                   banach_norm=banach_norm, **kw)

    @classmethod
    def hat(cls, s: float, t: float, eps: float, q: float = 2.0) -> "Observable":
        """Lipschitz ramp approximating the indicator of (s, t] from below.

        Equal to 1 on [s + eps, t - eps], 0 outside (s, t), linear in between;
        its norm is ``sup + Lip = 1 + 1/eps``.
        """
        if not (eps > 0 and t - s >= 2 * eps):
            raise ModelError("hat needs eps > 0 and t - s >= 2 eps")

        def func(x):
            x = np.asarray(x, dtype=float)
            return np.clip(np.minimum(x - s, t - x) / eps, 0.0, 1.0)

        return cls(func=func, q=q, sup_bound=1.0, banach_norm=1.0 + 1.0 / eps,
                   norm_kind=NormKind.LIPSCHITZ, note=f"hat on ({s}, {t}], ramp {eps}",
                   spec={"kind": "hat", "s": s, "t": t, "eps": eps, "q": q})

    @classmethod
    def indicator(cls, s: float, t: float, q: float = 2.0) -> "Observable":
        """Indicator of (s, t] on real-valued states (uniform norm)."""

        def func(x):
            x = np.asarray(x, dtype=float)
            return ((x > s) & (x <= t)).astype(float)

        return cls(func=func, q=q, sup_bound=1.0, banach_norm=1.0, norm_kind=NormKind.SUP,
                   note=f"indicator of ({s}, {t}]",
                   spec={"kind": "indicator", "s": s, "t": t, "q": q})

    # -- evaluation ---------------------------------------------------------
    @property
    def centered(self) -> bool:
        return self.mean_tol is not None

    @property
    def is_finite(self) -> bool:
        return self.values is not None

    def __call__(self, x):
        if self.values is not None:
            return self.values[np.asarray(x, dtype=np.intp)]
        return np.asarray(self.func(x), dtype=float)

    def on_states(self, model: FiniteMarkovModel) -> "Observable":
        """Tabulate a function observable at the (numeric) states of ``model``."""
        if self.values is not None:
            if self.values.shape != (model.size,):
                raise ModelError(f"observable has {self.values.size} values for {model.size} states")
            return self
        v = np.asarray(self.func(model.labels), dtype=float)
        return dataclasses.replace(self, func=None, values=v,
                                   sup_bound=self.sup_bound if self.sup_bound is not None else None)

    def table(self, model: FiniteMarkovModel) -> np.ndarray:
        return self.on_states(model).values

    def scaled(self, c: float) -> "Observable":
        c = float(c)
        mt = None if self.mean_tol is None else abs(c) * self.mean_tol
        sb = None if self.sup_bound is None else abs(c) * self.sup_bound
        if self.values is not None:
            return dataclasses.replace(self, values=c * self.values, sup_bound=sb,
                                       banach_norm=abs(c) * self.banach_norm, mean_tol=mt)
        f = self.func
        return dataclasses.replace(self, func=lambda x: c * np.asarray(f(x), dtype=float),
                                   sup_bound=sb, banach_norm=abs(c) * self.banach_norm,
                                   mean_tol=mt, spec=None)

    def to_dict(self) -> dict:
        if self.values is not None:
            d = {"values": self.values.tolist()}
        elif self.spec is not None:
            d = dict(self.spec)
        else:
            d = {"kind": "callable", "note": self.note}
        d.update(q=self.q, norm_kind=self.norm_kind.value, banach_norm=self.banach_norm)
        if self.mean_tol is not None:
            d["mean_tol"] = self.mean_tol
        return d


def center(phi: Observable, measure: "FiniteMarkovModel | Quadrature | None" = None, *,
           mean: float | None = None, tol: float | None = None, note: str = "") -> Observable:
    """Subtract the stationary mean from ``phi``.

    The mean comes from the exact stationary vector of a finite model, from a
    quadrature rule, or from a declared closed form (``mean`` with its
    tolerance ``tol``). On a finite model the result has
    ``|E_nu phi| < 1e-12`` and re-centring returns it unchanged.
    """
    if measure is None and mean is None:
        raise NoMeasureError("no measure: pass a model with nu, a quadrature, or a declared mean")
    if isinstance(measure, FiniteMarkovModel):
        nu = measure.require_nu()
        phi = phi.on_states(measure)
        v = phi.values
        mu = math.fsum(nu * v)
        scale = max(1.0, float(np.max(np.abs(v))) if v.size else 0.0)
        if abs(mu) < 1e-14 * scale:
            return dataclasses.replace(phi, mean_tol=max(abs(mu), phi.mean_tol or 0.0))
        vc = v - mu
        resid = abs(math.fsum(nu * vc))
        if resid >= CENTER_TOL * scale:
            raise ModelError(f"centring left a residual mean {resid:.3e}")
        sup = float(np.max(np.abs(vc)))
        if phi.norm_kind is NormKind.SUP:
            banach = sup
        else:
            banach = phi.banach_norm + abs(mu)
        return dataclasses.replace(phi, values=vc, sup_bound=sup, banach_norm=banach,
                                   mean_tol=max(resid, 1e-16), spec=None,
                                   note=(phi.note + " centred").strip())
    if isinstance(measure, Quadrature):
        if phi.values is not None:
            raise ModelError("quadrature centring needs a function observable")
        mu, err = measure.expect(phi.func)
        err = 0.0 if math.isnan(err) else err
        note = note or measure.note
    else:
        mu = float(mean)
        err = float(tol) if tol is not None else 0.0
        if not note:
            raise ModelError("a declared mean needs a provenance note")
    if mu == 0.0:
        return dataclasses.replace(phi, mean_tol=err)
    f = phi.func if phi.values is None else None
    sb = None if phi.sup_bound is None else phi.sup_bound + abs(mu)
    banach = phi.banach_norm + abs(mu)
    spec = None
    if phi.spec is not None:
        spec = dict(phi.spec, mean=mu)
    if f is None:
        return dataclasses.replace(phi, values=phi.values - mu, sup_bound=sb, banach_norm=banach,
                                   mean_tol=err, spec=spec, note=f"{phi.note} centred ({note})")
    return dataclasses.replace(phi, func=lambda x: np.asarray(f(x), dtype=float) - mu,
                               sup_bound=sb, banach_norm=banach, mean_tol=err, spec=spec,
                               note=f"{phi.note} centred ({note})")


@dataclass(frozen=True)
class NormProfile:
    """Stationary norms of an observable entering the fourth moment bound.

    ``phi*_lq`` are L^q(nu) norms of powers of phi, ``phi*_l1`` are plain
    expectations, ``banach`` the Banach norm and ``m = max(1, sup |phi|)``.
    """

    phi4_l1: float
    phi3_lq: float
    phi2_lq: float
    phi2_l1: float
    phi_lq: float
    banach: float
    m: float
    q: float = 2.0
    source: str = "exact"

    def __post_init__(self):
        vals = dataclasses.astuple(self)[:7]
        if any(not (v >= 0) for v in vals):
            raise ModelError(f"norm profile has negative or NaN fields: {vals}")
        if self.m < 1:
            raise ModelError("m must be >= 1")
        tol = 1e-12
        if self.phi_lq > self.m * (1 + tol):
            raise ModelError("phi_lq exceeds m")
        if self.phi2_l1 > self.m ** 2 * (1 + tol):
            raise ModelError("phi2_l1 exceeds m^2")
        if self.phi_lq > math.sqrt(self.phi2_lq) * (1 + 1e-9) + 1e-15:
            raise ModelError("Lyapunov inequality ||phi||_q <= ||phi^2||_q^(1/2) violated")

    @classmethod
    def declared(cls, note: str, **fields) -> "NormProfile":
        """Profile from closed forms; ``note`` records where the values come from."""
        if not note:
            raise ModelError("declared profiles need a provenance note")
        return cls(source=f"declared: {note}", **fields)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _lq(weights, absvals, power, q):
    return float(np.dot(weights, absvals ** (power * q))) ** (1.0 / q)


def norm_profile(phi: Observable, measure: "FiniteMarkovModel | Quadrature", q: float | None = None) -> NormProfile:
    """Compute every stationary norm of ``phi`` used by the bounds.

    On a finite model the norms are exact sums against ``nu`` and ``m`` is
    taken over all states. On a quadrature the moments are midpoint sums and
    ``m`` uses the declared ``sup_bound`` when present.
    """
    q = phi.q if q is None else float(q)
    if not (1.0 <= q < math.inf):
        raise ModelError(f"q must satisfy 1 <= q < inf, got {q}")
    if isinstance(measure, FiniteMarkovModel):
        w = measure.require_nu()
        a = np.abs(phi.table(measure))
        sup = float(a.max()) if a.size else 0.0
        source = "exact"
    elif isinstance(measure, Quadrature):
        w = measure.weights
        a = np.abs(np.asarray(phi(measure.nodes), dtype=float))
        sup = float(phi.sup_bound) if phi.sup_bound is not None else float(a.max())
        source = f"quadrature: {measure.note}"
    else:
        raise NoMeasureError("no measure: norm_profile needs a finite model or a quadrature")
    return NormProfile(
        phi4_l1=float(np.dot(w, a ** 4)),
        phi3_lq=_lq(w, a, 3, q),
        phi2_lq=_lq(w, a, 2, q),
        phi2_l1=float(np.dot(w, a ** 2)),
        phi_lq=_lq(w, a, 1, q),
        banach=float(phi.banach_norm),
        m=max(1.0, sup),
        q=q,
        source=source,
    )


def conjugate(q: float) -> float:
    """Hölder conjugate exponent p with 1/p + 1/q = 1."""
    return math.inf if q == 1 else q / (q - 1.0)


@dataclass(frozen=True, eq=False)
class ErgodicityCertificate:
    """Constants of geometric ergodicity measured on a probe set.

    ``kappa`` and ``theta`` satisfy ``||P^n f - Pi f|| <= kappa theta^n ||f||``
    for every stored probe and ``0 <= n <= horizon``; ``C`` and ``M`` are the
    embedding and algebra constants. ``spectral_radius`` is the measured
    subdominant radius; ``theta`` is that radius raised to ``theta_floor``
    when the radius falls below the floor. Residuals below ``noise_tol``
    times ``||f||`` count as rounding noise.
    """

    kappa: float
    theta: float
    p: float
    C: float = 1.0
    M: float = 1.0
    norm_kind: NormKind = NormKind.SUP
    probes: tuple = ()
    horizon: int = 0
    spectral_radius: float | None = None
    theta_floor: float = 0.0
    noise_tol: float = 0.0
    closure: dict | None = None
    probe_keys: frozenset = field(default=frozenset(), repr=False)

    def __post_init__(self):
        if not (self.kappa > 0):
            raise ModelError(f"kappa must be > 0, got {self.kappa}")
        if not (0 < self.theta < 1):
            raise ModelError(f"theta must lie in (0, 1), got {self.theta}")
        if not (self.p >= 1):
            raise ModelError(f"p must be >= 1, got {self.p}")
        if not (self.C > 0 and self.M > 0):
            raise ModelError("C and M must be positive")
        object.__setattr__(self, "norm_kind", NormKind(self.norm_kind))
        probes = tuple(_readonly(f) for f in self.probes)
        object.__setattr__(self, "probes", probes)
        object.__setattr__(self, "probe_keys", frozenset(array_key(f) for f in probes))

    def has_probe(self, f) -> bool:
        return array_key(f) in self.probe_keys

    def violations(self, model: FiniteMarkovModel) -> dict:
        """Largest excess over each defining inequality on the stored probes.

        Keys ``decay`` (geometric decay), ``embedding`` (``||f||_p <= C ||f||``)
        and ``algebra`` (``||f P^n f|| <= M ||f|| ||P^n f||``); a value <= 0
        means the inequality holds on every probe.
        """
        nu = model.require_nu()
        labels = model.labels
        P = model.P
        worst = {"decay": -math.inf, "embedding": -math.inf, "algebra": -math.inf}
        for f in self.probes:
            nf = function_norm(f, self.norm_kind, labels)
            mean = float(nu @ f)
            g = f.copy()
            lp = (float(np.max(np.abs(f))) if math.isinf(self.p)
                  else float(nu @ np.abs(f) ** self.p) ** (1 / self.p))
            worst["embedding"] = max(worst["embedding"], lp - self.C * nf)
            for n in range(self.horizon + 1):
                if n:
                    g = P @ g
                r = function_norm(g - mean, self.norm_kind, labels)
                bound = self.kappa * self.theta ** n * nf
                worst["decay"] = max(worst["decay"], r - bound - self.noise_tol * nf)
                lhs = function_norm(f * g, self.norm_kind, labels)
                worst["algebra"] = max(worst["algebra"],
                                       lhs - self.M * nf * function_norm(g, self.norm_kind, labels))
        return worst

    def to_dict(self, include_probes: bool = True) -> dict:
        d = {
            "kappa": self.kappa, "theta": self.theta,
            "p": "inf" if math.isinf(self.p) else self.p,
            "C": self.C, "M": self.M, "norm": self.norm_kind.value, "horizon": self.horizon,
            "spectral_radius": self.spectral_radius, "theta_floor": self.theta_floor,
            "n_probes": len(self.probes),
        }
        if self.closure is not None:
            d["closure"] = self.closure
        if include_probes:
            d["probes"] = [f.tolist() for f in self.probes]
        return d


__all__ = [
    "CENTER_TOL", "STATIONARY_TOL", "STOCHASTIC_TOL",
    "ErgodicityCertificate", "FiniteMarkovModel", "ModelError", "NoMeasureError",
    "NormKind", "NormProfile", "NotStochasticError", "Observable", "Quadrature",
    "array_key", "center", "conjugate", "function_norm", "midpoint_quadrature", "norm_profile",
]
