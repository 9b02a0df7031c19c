"""The boundary-law map ``G(v) = k F(v)`` as a discrete dynamical system."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exactrec import ratio_map, ratio_map_jacobian
from .model import ModelParams
from .tisgm import (
    THETA_TOL,
    TisgmDescriptor,
    branch_values,
    canonical,
    enumerate_tisgms,
    theta_crit,
)

MARGINAL_TOL = 1e-8
MATCH_RADIUS = 1e-6


class ConvergenceError(RuntimeError):
    """Fixed-point iteration hit ``max_iter``; keeps the last two iterates."""

    def __init__(self, n_iter, last, previous):
        self.n_iter = n_iter
        self.last = last
        self.previous = previous
        gap = float(np.max(np.abs(last - previous)))
        super().__init__(f"no convergence after {n_iter} steps (last step {gap:.3e})")


class NotAFixedPointError(ValueError):
    pass


def step_G(params: ModelParams, v) -> np.ndarray:
    return params.k * ratio_map(params.J, v)


def jacobian_G(params: ModelParams, v) -> np.ndarray:
    return params.k * ratio_map_jacobian(params.J, v)


def residual(params: ModelParams, v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(step_G(params, v) - v), initial=0.0))


@dataclass
class IterationResult:
    limit: np.ndarray
    n_iter: int
    residual: float


def iterate(params: ModelParams, v0, tol: float = 1e-12, max_iter: int = 10**5) -> IterationResult:
    """Iterate ``G`` until successive iterates differ by less than ``tol`` (sup norm)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    v = prev = np.asarray(v0, dtype=float)
    for n in range(1, max_iter + 1):
        nxt = step_G(params, v)
        if np.max(np.abs(nxt - v), initial=0.0) < tol:
            return IterationResult(nxt, n, residual(params, nxt))
        prev, v = v, nxt
    raise ConvergenceError(max_iter, v, prev)


def iterate_batch(params: ModelParams, starts, tol: float = 1e-12, max_iter: int = 10**5):
    """Vectorized ``iterate`` over the rows of ``starts``.

    Returns ``(limits, n_iter, converged)``; unconverged rows keep their last iterate.
    """
    v = np.array(starts, dtype=float)
    n_iter = np.full(len(v), max_iter)
    converged = np.zeros(len(v), dtype=bool)
    active = np.arange(len(v))
    cur = v.copy()
    for n in range(1, max_iter + 1):
        if not active.size:
            break
        nxt = step_G(params, cur)
        done = np.max(np.abs(nxt - cur), axis=1) < tol
        v[active] = nxt
        if done.any():
            converged[active[done]] = True
            n_iter[active[done]] = n
            active = active[~done]
            nxt = nxt[~done]
        cur = nxt
    return v, n_iter, converged


def on_line(q: int, m: int, value: float) -> np.ndarray:
    """The point of ``I_m`` whose first ``m`` coordinates equal ``value``."""
    v = np.zeros(q - 1)
    v[:m] = value
    return v


@dataclass(frozen=True)
class BasinRegime:
    case: str  # "theta_m", "between", "theta_c", "above"
    h1: float
    h2: float


def basin_regime(params: ModelParams, m: int) -> BasinRegime | None:
    """Which of the four on-line regimes applies; ``None`` below ``theta_m``."""
    params.require_classifiable()
    q, theta = params.q, params.theta
    if not 1 <= m <= q // 2:
        raise ValueError(f"m={m} outside 1..{q // 2}")
    tm = theta_crit(q, m)
    if theta < tm - THETA_TOL:
        return None
    if abs(theta - (q + 1)) <= THETA_TOL:
        case = "theta_c"
    elif abs(theta - tm) <= THETA_TOL:
        case = "theta_m"
    elif theta < q + 1:
        case = "between"
    else:
        case = "above"
    if case == "theta_m":
        h = 2.0 * math.log((theta - 1.0) / (2.0 * m))
        return BasinRegime(case, h, h)
    if case == "theta_c":
        vals = dict(branch_values(q, theta, m))
        return BasinRegime(case, 0.0, vals.get("high", 0.0))
    vals = dict(branch_values(q, theta, m))
    return BasinRegime(case, vals["low"], vals["high"])


def basin_predict(params: ModelParams, m: int, v0_first: float, tie_tol: float = 1e-12) -> TisgmDescriptor:
    """Limit of ``G^n(v0)`` for ``v0`` on ``I_m`` with first coordinates ``v0_first``."""
    q = params.q
    reg = basin_regime(params, m)
    support = tuple(range(1, m + 1))
    free = TisgmDescriptor.free()

    def mu(branch, h):
        if abs(h) <= 1e-12:
            return free
        return canonical(TisgmDescriptor(m, branch, support, h), q)

    if reg is None:
        return free
    x = v0_first
    if reg.case == "theta_m":
        return mu("low", reg.h1) if x >= reg.h1 - tie_tol else free
    if reg.case == "between":
        if abs(x - reg.h1) <= tie_tol:
            return mu("low", reg.h1)
        return mu("high", reg.h2) if x > reg.h1 else free
    if reg.case == "theta_c":
        return mu("high", reg.h2) if x > tie_tol else free
    if abs(x) <= tie_tol:
        return free
    return mu("high", reg.h2) if x > 0 else mu("low", reg.h1)


# ---------------------------------------------------------------- stability


@dataclass
class FixedPointInfo:
    location: np.ndarray
    residual: float
    stability: str
    spectral_radius: float
    moduli: np.ndarray
    descriptor: TisgmDescriptor | None = field(default=None)


def _probe(params, v, direction, eps=1e-4, n_steps=2000) -> str:
    """Nonlinear test along a marginal eigendirection: both sides return -> stable."""
    outcomes = []
    for sign in (1.0, -1.0):
        w = v + sign * eps * direction
        for _ in range(n_steps):
            w = step_G(params, w)
        dist = float(np.max(np.abs(w - v)))
        if dist < eps * (1 - 1e-9):
            outcomes.append("stable")
        elif dist > eps * (1 + 1e-9):
            outcomes.append("unstable")
        else:
            outcomes.append("marginal")
    if "unstable" in outcomes:
        return "unstable"
    if outcomes == ["stable", "stable"]:
        return "stable"
    return "marginal"


def stability_label(params: ModelParams, v, jac=None) -> tuple[str, np.ndarray]:
    """Classify a fixed point from Jacobian eigenvalues.

    Eigenvalues with modulus within ``MARGINAL_TOL`` of 1 are settled by
    iterating from small offsets along their eigenvectors.
    """
    v = np.asarray(v, dtype=float)
    if jac is None:
        jac = jacobian_G(params, v)
    eigval, eigvec = np.linalg.eig(jac)
    moduli = np.abs(eigval)
    kinds = []
    for i, mod in enumerate(moduli):
        if mod < 1 - MARGINAL_TOL:
            kinds.append("stable")
        elif mod > 1 + MARGINAL_TOL:
            kinds.append("unstable")
        else:
            d = np.real(eigvec[:, i])
            d = d / np.max(np.abs(d))
            kinds.append(_probe(params, v, d))
    if "marginal" in kinds:
        label = "marginal"
    elif all(kd == "stable" for kd in kinds):
        label = "attractor"
    elif all(kd == "unstable" for kd in kinds):
        label = "repeller"
    else:
        label = "saddle"
    return label, moduli


def classify_fixed_point(params: ModelParams, v, max_residual: float = 1e-8) -> FixedPointInfo:
    v = np.asarray(v, dtype=float)
    res = residual(params, v)
    if res > max_residual:
        raise NotAFixedPointError(f"residual {res:.3e} exceeds {max_residual:.1e}")
    label, moduli = stability_label(params, v)
    return FixedPointInfo(v, res, label, float(moduli.max()), np.sort(moduli))


def find_all_fixed_points(params: ModelParams) -> list[FixedPointInfo]:
    """Every translation-invariant boundary law (all supports), classified."""
    params.require_classifiable()
    out = []
    for desc in enumerate_tisgms(params.q, params.theta).descriptors:
        info = classify_fixed_point(params, desc.vector(params.q))
        info.descriptor = desc
        out.append(info)
    return out


def nearest_fixed_point(point, fixed_points, radius: float = MATCH_RADIUS) -> int | None:
    """Index of the fixed point within ``radius`` (sup norm) of ``point``, if any."""
    locs = np.array([fp.location for fp in fixed_points])
    dist = np.max(np.abs(locs - np.asarray(point)), axis=1)
    i = int(np.argmin(dist))
    return i if dist[i] < radius else None


# ---------------------------------------------------------------- field sampling


@dataclass
class FieldSample:
    starts: np.ndarray
    displacement: np.ndarray
    limit_id: list
    limits: np.ndarray
    fixed_points: list[FixedPointInfo]

    header = ["v1_start", "v2_start", "dv1", "dv2", "limit_id", "limit_x", "limit_y"]

    def rows(self) -> list[list]:
        out = []
        for s, d, lid, lim in zip(self.starts, self.displacement, self.limit_id, self.limits):
            out.append([s[0], s[1], d[0], d[1], lid, lim[0], lim[1]])
        return out


def grid_points(lo: float = -4.0, hi: float = 4.0, n: int = 41) -> np.ndarray:
    """Row-major grid (v2 outer, v1 inner) as an ``(n*n, 2)`` array."""
    axis = np.linspace(lo, hi, n)
    v2, v1 = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([v1.ravel(), v2.ravel()])


def field_sample(
    params: ModelParams,
    lo: float = -4.0,
    hi: float = 4.0,
    n: int = 41,
    n_steps: int = 10**4,
    tol: float = 1e-12,
) -> FieldSample:
    """One-step displacement and iterated limit on a grid of the (v1, v2) plane.

    For ``q > 3`` the remaining coordinates are held at 0.
    """
    if params.q < 3:
        raise ValueError("the plane needs q >= 3")
    fps = find_all_fixed_points(params)
    plane = grid_points(lo, hi, n)
    starts = np.zeros((len(plane), params.q - 1))
    starts[:, :2] = plane
    disp = step_G(params, starts) - starts
    limits, _, conv = iterate_batch(params, starts, tol=tol, max_iter=n_steps)
    ids = []
    for lim, ok in zip(limits, conv):
        idx = nearest_fixed_point(lim, fps) if ok else None
        ids.append("unresolved" if idx is None else idx)
    return FieldSample(plane, disp[:, :2], ids, limits[:, :2], fps)
