"""Stationary vectors, geometric-ergodicity constants and Ulam discretisation."""

from __future__ import annotations

import math
import warnings
from functools import reduce

import numpy as np
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .core import (
    ErgodicityCertificate,
    FiniteMarkovModel,
    ModelError,
    NormKind,
    Observable,
    STATIONARY_TOL,
    conjugate,
    function_norm,
)

NOISE_TOL = 1e-13


class NotStronglyErgodicError(ModelError):
    """Chain fails irreducibility or aperiodicity; ``check`` names which."""

    code = "E_NOT_ERGODIC"

    def __init__(self, check: str, detail: str = ""):
        self.check = check
        super().__init__(f"not strongly ergodic: {check}" + (f" ({detail})" if detail else ""))


class NoSpectralGapError(ModelError):
    code = "E_NO_GAP"


class ClosureError(ModelError):
    code = "E_CLOSURE"


def _matrix(P) -> np.ndarray:
    if isinstance(P, FiniteMarkovModel):
        return P.P
    return np.asarray(P, dtype=float)


def is_irreducible(P) -> bool:
    P = _matrix(P)
    n, _ = connected_components(P > 0, directed=True, connection="strong")
    return n == 1


def period(P) -> int:
    """Period of an irreducible chain (gcd of cycle lengths through state 0)."""
    P = _matrix(P)
    adj = P > 0
    order, pred = breadth_first_order(adj, 0, directed=True, return_predecessors=True)
    level = np.full(len(P), -1)
    for v in order:
        level[v] = 0 if v == 0 else level[pred[v]] + 1
    src, dst = np.nonzero(adj)
    diffs = (level[src] + 1 - level[dst]).tolist()
    return int(reduce(math.gcd, diffs, 0)) or 1


def check_ergodic(P) -> None:
    """Raise :class:`NotStronglyErgodicError` unless P is irreducible and aperiodic."""
    if not is_irreducible(P):
        raise NotStronglyErgodicError("reducible", "transition graph is not strongly connected")
    d = period(P)
    if d != 1:
        raise NotStronglyErgodicError("periodic", f"period {d}")


def stationary(P) -> np.ndarray:
    """Stationary probability vector of an irreducible aperiodic stochastic matrix.

    Solved as a linear system with the normalisation replacing one balance
    equation; the result satisfies ``||nu P - nu||_1 < 1e-10``.
    """
    P = _matrix(P)
    check_ergodic(P)
    s = len(P)
    A = P.T - np.eye(s)
    A[-1, :] = 1.0
    b = np.zeros(s)
    b[-1] = 1.0
    try:
        nu = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NotStronglyErgodicError("singular", str(exc)) from None
    nu[np.abs(nu) < 1e-300] = 0.0
    if np.any(nu < -1e-12):
        raise NotStronglyErgodicError("singular", "negative stationary mass")
    nu = np.clip(nu, 0.0, None)
    nu /= nu.sum()
    res = np.abs(nu @ P - nu).sum()
    if res >= STATIONARY_TOL:
        raise NotStronglyErgodicError("singular", f"stationarity residual {res:.2e}")
    return nu


def deflated(P, nu) -> np.ndarray:
    """The operator ``P - 1 nu^T``, which kills constants and keeps the rest of the spectrum."""
    P = _matrix(P)
    return P - np.outer(np.ones(len(P)), nu)


def subdominant_radius(P, nu=None, tol: float = 1e-12, maxiter: int = 100_000, seed: int = 0):
    """Modulus of the largest eigenvalue of ``P - 1 nu^T`` by block power iteration.

    A three-column orthogonal iteration is used so that complex pairs and
    eigenvalues of equal modulus are captured through their Ritz values.
    The start block is the first coordinate vector completed by columns drawn
    from ``seed`` (coordinate vectors alone can span an invariant subspace
    that misses the dominant mode). If the iterates collapse the block is
    restarted once from a fully random start; a second collapse means the
    deflated operator is nilpotent (radius 0).

    Returns
    -------
    radius : float
    info : dict
        ``iterations``, ``converged``, ``nilpotent`` and ``restarted``.
    """
    P = _matrix(P)
    if nu is None:
        nu = stationary(P)
    B = deflated(P, nu)
    s = len(B)
    info = {"iterations": 0, "converged": True, "nilpotent": False, "restarted": False}
    scale = np.linalg.norm(B)
    if s == 1 or scale == 0.0:
        info["nilpotent"] = True
        return 0.0, info
    b = min(3, s)
    rng = np.random.default_rng(seed)
    Q = np.column_stack([np.eye(s)[:, 0], rng.standard_normal((s, b - 1))])
    Q, _ = np.linalg.qr(Q)
    prev, stable = None, 0
    for it in range(1, maxiter + 1):
        Z = B @ Q
        Qn, R = np.linalg.qr(Z)
        keep = np.abs(np.diag(R)) > NOISE_TOL * scale
        if not keep.any():
            if info["restarted"]:
                info.update(iterations=it, nilpotent=True)
                return 0.0, info
            info["restarted"] = True
            Q, _ = np.linalg.qr(rng.standard_normal((s, b)))
            prev, stable = None, 0
            continue
        Q = Qn[:, keep]
        ritz = np.linalg.eigvals(Q.T @ B @ Q)
        radius = float(np.max(np.abs(ritz)))
        if prev is not None and abs(radius - prev) <= tol:
            stable += 1
            if stable >= 3:
                info["iterations"] = it
                return radius, info
        else:
            stable = 0
        prev = radius
    info.update(iterations=maxiter, converged=False)
    return float(prev), info


def closure_functions(model: FiniteMarkovModel, phi, cutoff: int) -> list[np.ndarray]:
    """Functions the moment-bound argument feeds to the decay inequality.

    ``phi``, ``phi * P^k phi`` and ``phi * P^j (phi * P^k phi)`` for
    ``0 <= j, k <= cutoff``, in a fixed order.
    """
    phi = np.asarray(phi.values if isinstance(phi, Observable) else phi, dtype=float)
    P = model.P
    out = [phi.copy()]
    g = phi.copy()
    u = []
    for k in range(cutoff + 1):
        if k:
            g = P @ g
        u.append(phi * g)
    out.extend(u)
    for uk in u:
        h = uk.copy()
        for j in range(cutoff + 1):
            if j:
                h = P @ h
            out.append(phi * h)
    return out


def theta_kappa(model: FiniteMarkovModel, norm_kind: NormKind | str = NormKind.SUP,
                probes=None, horizon: int = 50, *, closure=None, p: float | None = None,
                theta_floor: float = 0.1, seed: int = 0) -> ErgodicityCertificate:
    """Measure the constants of geometric ergodicity of a finite chain.

    ``theta`` is the subdominant spectral radius of P (raised to
    ``theta_floor`` when smaller, since a certificate needs ``theta > 0``);
    ``kappa`` is the largest ratio ``||P^n f - Pi f|| / (theta^n ||f||)`` over
    the probes and ``0 <= n <= horizon``, so the decay inequality holds on the
    probe set by construction.

    Parameters
    ----------
    model : FiniteMarkovModel
    norm_kind : NormKind
        Norm of the Banach space; LIPSCHITZ and BV use the numeric state labels.
    probes : list of array_like, optional
        Extra test functions. Coordinate indicators are always included.
    horizon : int
        Largest power checked, >= 2.
    closure : (Observable or array, int), optional
        ``(phi, cutoff)``: add every function produced by
        :func:`closure_functions` so that a proof ledger up to ``cutoff`` can
        use the certificate.
    p : float, optional
        Integrability exponent; defaults to the conjugate of ``phi.q`` when a
        closure observable is given, else 2.
    """
    if horizon < 2:
        raise ModelError("horizon must be >= 2")
    norm_kind = NormKind(norm_kind)
    nu = model.nu if model.nu is not None else stationary(model.P)
    P = model.P
    s = model.size
    radius, info = subdominant_radius(P, nu, seed=seed)
    if not info["converged"]:
        dense = float(np.sort(np.abs(np.linalg.eigvals(deflated(P, nu))))[-1])
        warnings.warn(f"power iteration did not converge; using max with dense estimate {dense:.3e}")
        radius = max(radius, dense)
    if radius >= 1 - 1e-12:
        raise NoSpectralGapError(f"no spectral gap detected (subdominant radius {radius:.15g})")
    theta = max(radius, theta_floor)
    funcs = [np.eye(s)[i] for i in range(s)]
    funcs += [np.asarray(f, dtype=float) for f in (probes or [])]
    closure_rec = None
    if closure is not None:
        phi, cutoff = closure
        if cutoff > horizon:
            raise ModelError(f"closure cutoff {cutoff} exceeds horizon {horizon}")
        if isinstance(phi, Observable):
            if p is None:
                p = conjugate(phi.q)
            phi = phi.table(model)
        phi = np.asarray(phi, dtype=float)
        funcs += closure_functions(model, phi, cutoff)
        closure_rec = {"cutoff": int(cutoff), "phi": phi.tolist()}
    if p is None:
        p = 2.0
    labels = model.labels
    kappa = 0.0
    for f in funcs:
        nf = function_norm(f, norm_kind, labels)
        if nf == 0.0:
            continue
        mean = float(nu @ f)
        g = f
        for n in range(horizon + 1):
            if n:
                g = P @ g
            r = function_norm(g - mean, norm_kind, labels)
            if r <= NOISE_TOL * nf:
                continue
            kappa = max(kappa, r / (theta ** n * nf))
    if kappa == 0.0:
        kappa = 1.0
    return ErgodicityCertificate(
        kappa=kappa, theta=theta, p=p, C=1.0, M=1.0, norm_kind=norm_kind, probes=tuple(funcs),
        horizon=int(horizon), spectral_radius=radius, theta_floor=theta_floor,
        noise_tol=NOISE_TOL, closure=closure_rec,
    )


def decay_fit_theta(model: FiniteMarkovModel, probes=None, horizon: int = 30,
                    norm_kind: NormKind | str = NormKind.SUP) -> float:
    """Cross-check estimate of theta from the log-linear decay of ``||P^n f - Pi f||``.

    Uses the worst normalised residual over the probes at each n and a least
    squares fit of its logarithm; points at rounding level are dropped.
    Returns 0 when fewer than two points survive.
    """
    nu = model.nu if model.nu is not None else stationary(model.P)
    funcs = [np.eye(model.size)[i] for i in range(model.size)] + list(probes or [])
    worst = np.zeros(horizon + 1)
    for f in funcs:
        f = np.asarray(f, dtype=float)
        nf = function_norm(f, norm_kind, model.labels)
        if nf == 0:
            continue
        g, mean = f, float(nu @ f)
        for n in range(horizon + 1):
            if n:
                g = model.P @ g
            worst[n] = max(worst[n], function_norm(g - mean, norm_kind, model.labels) / nf)
    n = np.flatnonzero(worst > 1e-12)
    if len(n) < 2:
        return 0.0
    slope = np.polyfit(n, np.log(worst[n]), 1)[0]
    return float(np.exp(slope))


def ulam(tmap, cells: int, samples_per_cell: int = 4096) -> FiniteMarkovModel:
    """Ulam discretisation of an interval map on [0, 1].

    ``U[i, j] = Leb(cell_i & T^-1 cell_j) / Leb(cell_i)`` over ``cells``
    equal cells. When ``tmap.branches`` lists the affine pieces
    ``(a, b, slope, intercept)`` the intersections are computed exactly;
    otherwise ``tmap`` must be declared piecewise monotone and each cell is
    sampled at ``samples_per_cell`` stratified midpoints.

    The returned model has the cell midpoints as states, the stationary vector
    attached, and provenance in ``meta["ulam"]``.
    """
    k = int(cells)
    if k < 2:
        raise ModelError("Ulam discretisation needs at least 2 cells")
    U = np.zeros((k, k))
    branches = getattr(tmap, "branches", None)
    if branches:
        for a, b, slope, icpt in branches:
            if slope == 0 or b <= a:
                raise ModelError("degenerate affine branch")
            for i in range(max(0, int(math.floor(a * k))), min(k, int(math.ceil(b * k)))):
                x0, x1 = max(a, i / k), min(b, (i + 1) / k)
                if x1 <= x0:
                    continue
                y0, y1 = sorted((slope * x0 + icpt, slope * x1 + icpt))
                for j in range(max(0, int(math.floor(y0 * k))), min(k, int(math.ceil(y1 * k)))):
                    ov = min(y1, (j + 1) / k) - max(y0, j / k)
                    if ov > 0:
                        U[i, j] += ov / abs(slope) * k
        meta = {"method": "exact", "branches": len(branches)}
    else:
        if not getattr(tmap, "monotone", False):
            raise ModelError("map has no affine branches and is not declared piecewise monotone")
        m = int(samples_per_cell)
        offs = (np.arange(m) + 0.5) / m
        for i in range(k):
            y = np.asarray(tmap((i + offs) / k), dtype=float)
            j = np.clip(np.floor(y * k).astype(int), 0, k - 1)
            U[i] = np.bincount(j, minlength=k) / m
        meta = {"method": "stratified", "samples_per_cell": m, "samples": m * k}
    U /= U.sum(axis=1, keepdims=True)
    meta.update(cells=k, map=getattr(tmap, "name", "custom"))
    mids = (np.arange(k) + 0.5) / k
    nu = stationary(U)
    return FiniteMarkovModel(states=tuple(mids.tolist()), P=U, nu=nu, meta={"ulam": meta})


__all__ = [
    "ClosureError", "NoSpectralGapError", "NotStronglyErgodicError", "check_ergodic",
    "closure_functions", "decay_fit_theta", "deflated", "is_irreducible", "period",
    "stationary", "subdominant_radius", "theta_kappa", "ulam",
]
