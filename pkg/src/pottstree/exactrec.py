"""Exact finite-volume Gibbs computations on the Cayley tree.

Everything runs on normalized log-ratios ``Y^l = ln(W(l) / W(q))``,
``l = 1..q-1``; raw subtree partition functions grow doubly exponentially
and are never formed. ``brute_force_distribution`` enumerates the finite
Gibbs measure directly and serves as the independent check.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping

import numpy as np
from scipy.special import logsumexp

from .model import (
    Addr,
    Configuration,
    ModelParams,
    ROOT,
    ball,
    boundary,
    direct_successors,
    edges,
    format_addr,
    sphere,
)

if TYPE_CHECKING:
    from .bcond import SuccessorRule

DEFAULT_STATE_CAP = 10**7
HOMOGENEITY_TOL = 1e-9


class EnumerationCapError(RuntimeError):
    pass


def ratio_map(J: float, x) -> np.ndarray:
    """One-edge transfer of log-ratios, ``F`` applied along the last axis.

    ``F_l(x) = ln[((e^J - 1) e^{x_l} + sum_p e^{x_p} + 1) / (e^J + sum_p e^{x_p})]``
    evaluated after subtracting ``max(0, max x)`` from every exponent.
    """
    x = np.asarray(x, dtype=float)
    shift = np.maximum(np.max(x, axis=-1, initial=0.0), 0.0)[..., None]
    e = np.exp(x - shift)
    e_q = np.exp(-shift)
    s = e.sum(axis=-1, keepdims=True) + e_q
    tm1 = math.expm1(J)
    num = tm1 * e + s
    den = tm1 * e_q + s
    return np.log(num) - np.log(den)


def ratio_map_jacobian(J: float, x) -> np.ndarray:
    """Analytic derivative ``dF_l/dx_p`` at a single point ``x``."""
    x = np.asarray(x, dtype=float)
    shift = max(float(np.max(x, initial=0.0)), 0.0)
    e = np.exp(x - shift)
    e_q = math.exp(-shift)
    s = e.sum() + e_q
    tm1 = math.expm1(J)
    num = tm1 * e + s
    den = tm1 * e_q + s
    jac = e[None, :] / num[:, None] - (e / den)[None, :]
    jac[np.diag_indices_from(jac)] += tm1 * e / num
    return jac


def log_ratios_to_probs(y) -> np.ndarray:
    """``(y_1..y_{q-1})`` -> normalized probability vector of length q."""
    full = np.append(np.asarray(y, dtype=float), 0.0)
    return np.exp(full - logsumexp(full))


# ---------------------------------------------------------------- oracle


def energy(
    params: ModelParams,
    region: Iterable[Addr],
    sigma: Configuration,
    omega: Configuration,
) -> float:
    """Potts energy of ``sigma`` on ``region`` with boundary condition ``omega``."""
    region = sorted(set(region))
    sigma.require(region)
    bnd = boundary(params, region)
    omega.require(bnd)
    inside = set(region)
    mono = sum(sigma[a] == sigma[b] for a, b in edges(region))
    for y in bnd:
        nbrs = [c for c in direct_successors(params, y) if c in inside]
        if y and y[:-1] in inside:
            nbrs.append(y[:-1])
        mono += sum(sigma[x] == omega[y] for x in nbrs)
    return -params.J * mono


@dataclass(frozen=True)
class BruteForceTable:
    """Exact Gibbs distribution over all colorings of ``vertices``.

    State ``i`` encodes colors as base-``q`` digits, vertex 0 most significant.
    """

    q: int
    vertices: tuple[Addr, ...]
    log_weights: np.ndarray
    probs: np.ndarray

    @property
    def n_states(self) -> int:
        return self.probs.size

    def colors(self, j: int, index=None) -> np.ndarray:
        """Color (1..q) of vertex number ``j`` in every state (or in ``index``)."""
        if index is None:
            index = np.arange(self.n_states)
        power = self.q ** (len(self.vertices) - 1 - j)
        return (index // power) % self.q + 1

    def state(self, i: int) -> Configuration:
        return Configuration(
            self.q, {v: int(self.colors(j, i)) for j, v in enumerate(self.vertices)}
        )

    def marginal(self, v: Addr) -> np.ndarray:
        col = self.colors(self.vertices.index(v))
        return np.bincount(col - 1, weights=self.probs, minlength=self.q)

    def cylinder(self, eta: Configuration) -> float:
        mask = np.ones(self.n_states, dtype=bool)
        for j, v in enumerate(self.vertices):
            if v in eta:
                mask &= self.colors(j) == eta[v]
        return float(self.probs[mask].sum())

    def cylinder_masses(self, vertices) -> dict[tuple[int, ...], float]:
        """Joint law of the colors on ``vertices``, keyed by color tuple."""
        code = np.zeros(self.n_states, dtype=np.int64)
        for v in vertices:
            code = code * self.q + self.colors(self.vertices.index(v)) - 1
        mass = np.bincount(code, weights=self.probs, minlength=self.q ** len(vertices))
        keys = itertools.product(range(1, self.q + 1), repeat=len(vertices))
        return dict(zip(keys, mass.tolist()))

    def to_json(self) -> dict:
        keys = (
            ".".join(map(str, c))
            for c in itertools.product(range(1, self.q + 1), repeat=len(self.vertices))
        )
        return {
            "vertices": [format_addr(v) for v in self.vertices],
            "probabilities": {key: float(p) for key, p in zip(keys, self.probs)},
        }


def brute_force_distribution(
    params: ModelParams,
    n: int,
    omega: Configuration,
    cap: int = DEFAULT_STATE_CAP,
) -> BruteForceTable:
    """Enumerate ``P_{V_n}^omega`` over all ``q^|V_n|`` configurations."""
    q = params.q
    vertices = tuple(ball(params, n))
    n_states = q ** len(vertices)
    if n_states > cap:
        raise EnumerationCapError(
            f"{n_states} states (q={q}, |V_{n}|={len(vertices)}) exceed cap {cap}"
        )
    outer = sphere(params, n + 1)
    omega.require(outer)
    pos = {v: j for j, v in enumerate(vertices)}
    index = np.arange(n_states)
    digits = [(index // q ** (len(vertices) - 1 - j)) % q + 1 for j in range(len(vertices))]
    mono = np.zeros(n_states, dtype=np.int64)
    for a, b in edges(vertices):
        mono += digits[pos[a]] == digits[pos[b]]
    for y in outer:
        mono += digits[pos[y[:-1]]] == omega[y]
    log_w = params.J * mono
    probs = np.exp(log_w - logsumexp(log_w))
    return BruteForceTable(q, vertices, log_w, probs)


# ---------------------------------------------------------------- recursion


@dataclass(frozen=True)
class LevelRatios:
    """Per-vertex log-ratio vectors on one sphere."""

    depth: int
    values: Mapping[Addr, np.ndarray]

    def __getitem__(self, v: Addr) -> np.ndarray:
        return self.values[v]

    def spread(self) -> float:
        """Sup-norm diameter of the set of vectors at this level."""
        arr = np.array(list(self.values.values()))
        return float(np.max(arr.max(axis=0) - arr.min(axis=0), initial=0.0))

    def is_homogeneous(self, tol: float = HOMOGENEITY_TOL) -> bool:
        return self.spread() < tol


def _child_count_ratios(params: ModelParams, colors: Iterable[int]) -> np.ndarray:
    counts = np.bincount(np.fromiter(colors, dtype=int) - 1, minlength=params.q)
    return params.J * (counts[:-1] - counts[-1]).astype(float)


def base_log_ratios(params: ModelParams, n: int, omega: Configuration) -> LevelRatios:
    """Log-ratios on ``A_n``: ``Y^l(s) = J (#children colored l - #children colored q)``."""
    values = {}
    for s in sphere(params, n):
        children = direct_successors(params, s)
        omega.require(children)
        values[s] = _child_count_ratios(params, (omega[c] for c in children))
    return LevelRatios(n, values)


def lift_ratios(params: ModelParams, lower: LevelRatios) -> LevelRatios:
    """Move log-ratios one level up: ``Y(s) = sum_{u child of s} F(Y(u))``."""
    d = lower.depth
    if d < 2:
        raise ValueError("lift_ratios stops at depth 1; use root_marginal for the root")
    values = {}
    for s in sphere(params, d - 1):
        children = direct_successors(params, s)
        values[s] = ratio_map(params.J, np.array([lower[u] for u in children])).sum(axis=0)
    return LevelRatios(d - 1, values)


def level_ratios(params: ModelParams, n: int, omega: Configuration, depth: int) -> LevelRatios:
    """Log-ratios ``Y_{n,s}`` for all ``s`` on ``A_depth``, ``1 <= depth <= n``."""
    if not 1 <= depth <= n:
        raise ValueError(f"need 1 <= depth <= n, got depth={depth}, n={n}")
    level = base_log_ratios(params, n, omega)
    while level.depth > depth:
        level = lift_ratios(params, level)
    return level


def root_log_ratios(params: ModelParams, n: int, omega: Configuration) -> np.ndarray:
    if n == 0:
        return base_log_ratios(params, 0, omega)[ROOT]
    level1 = level_ratios(params, n, omega, 1)
    children = direct_successors(params, ROOT)
    return ratio_map(params.J, np.array([level1[u] for u in children])).sum(axis=0)


def root_marginal(params: ModelParams, n: int, omega: Configuration) -> np.ndarray:
    """Distribution of the root spin under ``P_{V_n}^omega``."""
    return log_ratios_to_probs(root_log_ratios(params, n, omega))


@dataclass(frozen=True)
class CylinderQuery:
    m: int
    eta: Configuration

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"cylinder depth must be >= 1, got {self.m}")


def _cylinder_setup(params, n, omega, m):
    if not 1 <= m < n:
        raise ValueError(f"cylinder depth m={m} must satisfy 1 <= m < n={n}")
    level = level_ratios(params, n, omega, m)
    padded = {s: np.append(y, 0.0) for s, y in level.values.items()}
    return padded


def _log_weight(params, inner, padded, eta: Configuration) -> float:
    mono = sum(eta[a] == eta[b] for a, b in edges(inner))
    return params.J * mono + sum(padded[s][eta[s] - 1] for s in padded)


def _log_normalizer(params: ModelParams, m: int, padded) -> float:
    J = params.J
    coupling = J * np.eye(params.q)
    msg = dict(padded)
    for d in range(m - 1, -1, -1):
        for v in sphere(params, d):
            msg[v] = sum(
                logsumexp(coupling + msg[u][None, :], axis=1)
                for u in direct_successors(params, v)
            )
    return float(logsumexp(msg[ROOT]))


def cylinder_probability(
    params: ModelParams, n: int, omega: Configuration, query: CylinderQuery
) -> float:
    """``P_{V_n}^omega(sigma = eta on V_m)`` from level-``m`` log-ratios."""
    padded = _cylinder_setup(params, n, omega, query.m)
    inner = ball(params, query.m)
    query.eta.require(inner)
    log_z = _log_normalizer(params, query.m, padded)
    return math.exp(_log_weight(params, inner, padded, query.eta) - log_z)


def cylinder_table(params: ModelParams, n: int, omega: Configuration, m: int) -> dict:
    """Every cylinder mass on ``V_m``, keyed by the color tuple in ball order."""
    padded = _cylinder_setup(params, n, omega, m)
    inner = ball(params, m)
    log_z = _log_normalizer(params, m, padded)
    out = {}
    for colors in itertools.product(range(1, params.q + 1), repeat=len(inner)):
        eta = Configuration(params.q, dict(zip(inner, colors)))
        out[colors] = math.exp(_log_weight(params, inner, padded, eta) - log_z)
    return out


def color_census(params: ModelParams, n: int, i: int, sigma: Configuration) -> np.ndarray:
    """Counts ``N^{(p)}_{n,i}`` of each color on ``A_n`` inside root subtree ``i``."""
    if n < 1:
        raise ValueError("census needs n >= 1")
    if not 1 <= i <= params.k + 1:
        raise ValueError(f"subtree index {i} outside 1..{params.k + 1}")
    verts = [v for v in sphere(params, n) if v[0] == i]
    sigma.require(verts)
    return np.bincount([sigma[v] - 1 for v in verts], minlength=params.q)


# ---------------------------------------------------------------- rule-driven limits


@dataclass(frozen=True)
class Trajectory:
    """Log-ratios at the designated level-1 vertex ``(1,)`` for ``n = 1..n_max``."""

    q: int
    ys: np.ndarray
    homogeneous: np.ndarray | None

    @property
    def n_max(self) -> int:
        return len(self.ys)

    def successive_diff(self) -> float:
        if len(self.ys) < 2:
            return math.inf
        return float(np.max(np.abs(self.ys[-1] - self.ys[-2])))

    def csv_rows(self) -> list[list]:
        rows = []
        for n, y in enumerate(self.ys, start=1):
            flag = "" if self.homogeneous is None else int(self.homogeneous[n - 1])
            rows.append([n, *(float(v) for v in y), flag])
        return rows

    def csv_header(self) -> list[str]:
        return ["n", *(f"y_{l}" for l in range(1, self.q)), "homogeneous"]


def rule_level_colors(rule: "SuccessorRule", depth: int) -> list[frozenset[int]]:
    """Colors occurring on each sphere ``A_0..A_depth`` of the generated configuration."""
    present = [frozenset([rule.root_color])]
    if depth >= 1:
        present.append(frozenset(rule.root_children()))
    while len(present) <= depth:
        present.append(frozenset(c for a in present[-1] for c in rule.table[a]))
    return present


def ratio_trajectory(
    params: ModelParams,
    rule: "SuccessorRule",
    n_max: int,
    check_homogeneity: bool = True,
    tol: float = HOMOGENEITY_TOL,
) -> Trajectory:
    """Run the exact recursion under the configuration generated by ``rule``.

    All vertices of one color on one sphere root identical subtrees, so a
    single vector per (color, remaining depth) covers the whole level.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    colors = sorted(rule.reachable())
    slot = {c: i for i, c in enumerate(colors)}
    children = [[slot[b] for b in rule.table[a]] for a in colors]
    z = np.array([_child_count_ratios(params, rule.table[a]) for a in colors])
    by_depth = [z]
    for _ in range(n_max - 1):
        f = ratio_map(params.J, z)
        z = np.array([f[ch].sum(axis=0) for ch in children])
        by_depth.append(z)
    first = slot[rule.root_children()[0]]
    ys = np.array([zr[first] for zr in by_depth])

    homogeneous = None
    if check_homogeneity:
        z_all = np.array(by_depth)  # (remaining depth, color slot, q-1)
        levels = [frozenset(slot[c] for c in p) for p in rule_level_colors(rule, n_max)]
        groups = sorted(set(levels[1:]), key=sorted)
        ok = np.empty((n_max, len(groups)), dtype=bool)
        for g, members in enumerate(groups):
            sub = z_all[:, sorted(members), :]
            ok[:, g] = np.max(sub.max(axis=1) - sub.min(axis=1), axis=-1) < tol
        group_of = np.array([groups.index(levels[d]) for d in range(1, n_max + 1)])
        # depth-n run is broken iff some level d has a spread at remaining depth n - d
        broken = np.zeros(n_max, dtype=np.int64)
        for g in range(len(groups)):
            at_level = (group_of == g).astype(np.int64)  # index d - 1
            spread = (~ok[:, g]).astype(np.int64)  # index r = n - d
            broken += np.convolve(at_level, spread)[:n_max]
        homogeneous = broken == 0
    return Trajectory(params.q, ys, homogeneous)
