"""Boundary conditions and the measures they select in the limit.

A boundary configuration is described either by an explicit finite
:class:`~pottstree.model.Configuration`, by a :class:`SuccessorRule` (the
colors of a vertex's children as a function of its own color), or by a
:class:`SuccessorProfile` (how many children of every vertex carry each
color).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import brentq

from . import exactrec
from .dynamics import basin_regime
from .model import (
    Addr,
    Configuration,
    ConfigurationError,
    ModelParams,
    ROOT,
    ball,
    direct_successors,
    parse_addr,
)
from .tisgm import (
    RegimeError,
    TisgmDescriptor,
    canonical,
    enumerate_tisgms,
    solve_branch,
    theta_crit,
)

EQ_TOL = 1e-12


class OutsideTheoremError(ValueError):
    """Profile has three or more distinct child counts."""


class BoundarySpecError(ValueError):
    pass


@dataclass(frozen=True)
class SuccessorProfile:
    """Number ``c[l-1]`` of direct successors colored ``l``, equal at every vertex."""

    c: tuple[int, ...]
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(int(x) for x in self.c))
        if any(x < 0 for x in self.c):
            raise ValueError(f"negative count in {self.c}")

    @property
    def q(self) -> int:
        return len(self.c)

    def check(self, k: int):
        if self.strict and sum(self.c) != k:
            raise ValueError(f"strict profile {self.c} must sum to k={k}")

    def permuted(self, perm: Mapping[int, int]) -> "SuccessorProfile":
        """Relabel colors, ``perm`` maps old color -> new color."""
        c = [0] * self.q
        for old, val in enumerate(self.c, start=1):
            c[perm[old] - 1] = val
        return SuccessorProfile(tuple(c), self.strict)

    def rule(self, root_color: int = 1) -> "SuccessorRule":
        """A rule realizing the profile: every vertex gets the same children."""
        children = tuple(l for l, n in enumerate(self.c, start=1) for _ in range(n))
        return SuccessorRule(self.q, {a: children for a in range(1, self.q + 1)}, root_color)


@dataclass(frozen=True)
class SuccessorRule:
    """Deterministic generator: a vertex colored ``a`` gets children ``table[a]``.

    The root's extra (k+1)-th child reuses ``table[root_color]`` cyclically.
    """

    q: int
    table: Mapping[int, tuple[int, ...]]
    root_color: int
    name: str = ""

    def __post_init__(self):
        table = {int(a): tuple(int(c) for c in ch) for a, ch in self.table.items()}
        object.__setattr__(self, "table", table)
        sizes = {len(ch) for ch in table.values()}
        if len(sizes) != 1:
            raise ValueError(f"all children tuples must have the same length, got {sizes}")
        for a, ch in table.items():
            for c in (a, *ch):
                if not 1 <= c <= self.q:
                    raise ValueError(f"color {c} outside 1..{self.q}")
        missing = self.reachable() - set(table)
        if missing:
            raise ValueError(f"rule does not define children for colors {sorted(missing)}")

    @property
    def k(self) -> int:
        return len(next(iter(self.table.values())))

    def root_children(self) -> tuple[int, ...]:
        ch = self.table[self.root_color]
        return tuple(ch[i % len(ch)] for i in range(len(ch) + 1))

    def reachable(self) -> set[int]:
        seen = {self.root_color}
        todo = [self.root_color]
        while todo:
            a = todo.pop()
            for c in self.table.get(a, ()):
                if c not in seen:
                    seen.add(c)
                    todo.append(c)
        return seen

    def to_json(self) -> dict:
        return {
            "type": "rule",
            "table": {str(a): list(ch) for a, ch in sorted(self.table.items())},
            "root": self.root_color,
        }


def generate_config(params: ModelParams, rule: SuccessorRule, depth: int) -> Configuration:
    """Configuration on ``V_depth`` and its boundary generated by ``rule``."""
    if rule.k != params.k:
        raise ValueError(f"rule has {rule.k} children per vertex, model has k={params.k}")
    if rule.q != params.q:
        raise ValueError(f"rule is for q={rule.q}, model has q={params.q}")
    colors = {ROOT: rule.root_color}
    for v in ball(params, depth):
        kids = rule.root_children() if v == ROOT else rule.table[colors[v]]
        for child, col in zip(direct_successors(params, v), kids):
            colors[child] = col
    return Configuration(params.q, colors)


@dataclass
class CValues:
    """Child-color counts measured on a finite configuration."""

    per_vertex: dict[Addr, np.ndarray]
    strict: bool
    profile: SuccessorProfile | None
    diagonal: dict[int, list[int]]

    def diagonal_values(self) -> dict[int, int | None]:
        """Own-color child count per color; ``None`` where it varies between vertices."""
        return {a: (v[0] if len(set(v)) == 1 else None) for a, v in self.diagonal.items()}


def measure_c_values(params: ModelParams, source, depth: int) -> CValues:
    """Count child colors at every non-root vertex of ``V_depth``.

    ``source`` is a Configuration (covering ``V_{depth+1}``) or a SuccessorRule.
    """
    if isinstance(source, SuccessorRule):
        source = generate_config(params, source, depth)
    if depth < 1:
        raise ValueError("need depth >= 1 to see a non-root vertex")
    source.require(ball(params, depth + 1))
    per_vertex = {}
    diagonal: dict[int, list[int]] = {}
    for t in ball(params, depth):
        if t == ROOT:
            continue
        kids = [source[c] for c in direct_successors(params, t)]
        counts = np.bincount(np.array(kids) - 1, minlength=params.q)
        per_vertex[t] = counts
        own = source[t]
        diagonal.setdefault(own, []).append(int(counts[own - 1]))
    vals = list(per_vertex.values())
    strict = all(np.array_equal(vals[0], v) for v in vals[1:])
    profile = SuccessorProfile(tuple(int(x) for x in vals[0])) if strict else None
    return CValues(per_vertex, strict, profile, {a: diagonal[a] for a in sorted(diagonal)})


def initial_Y(params: ModelParams, profile: SuccessorProfile) -> np.ndarray:
    """Starting log-ratios ``J (c^l - c^q)`` of a strict profile."""
    if not profile.strict:
        raise ValueError("initial log-ratios are defined for strict profiles only")
    profile.check(params.k)
    c = np.array(profile.c, dtype=float)
    return params.J * (c[:-1] - c[-1])


@dataclass(frozen=True)
class BSetMembership:
    m: int
    in_B: bool
    plus_0: bool
    zero_0: bool
    minus_0: bool
    drive: float  # J (c^1 - c^q)
    h1: float | None

    def _need_h1(self):
        if self.h1 is None:
            raise RegimeError(f"h1 undefined: theta below theta_{self.m}")

    @property
    def plus_1(self) -> bool:
        self._need_h1()
        return self.in_B and self.drive > self.h1 + EQ_TOL

    @property
    def zero_1(self) -> bool:
        self._need_h1()
        return self.in_B and abs(self.drive - self.h1) <= EQ_TOL

    @property
    def minus_1(self) -> bool:
        self._need_h1()
        return self.in_B and self.drive < self.h1 - EQ_TOL

    def sets(self) -> list[str]:
        out = []
        if self.in_B:
            out.append(f"B_{self.m}")
            for name, flag in (("+", self.plus_0), ("0", self.zero_0), ("-", self.minus_0)):
                if flag:
                    out.append(f"B^{name}_{{{self.m},0}}")
            if self.h1 is not None:
                for name, flag in (("+", self.plus_1), ("0", self.zero_1), ("-", self.minus_1)):
                    if flag:
                        out.append(f"B^{name}_{{{self.m},1}}")
        return out


def bset_membership(params: ModelParams, profile: SuccessorProfile, m: int) -> BSetMembership:
    params.require_classifiable()
    profile.check(params.k)
    q = params.q
    if profile.q != q:
        raise ValueError(f"profile has {profile.q} colors, model has q={q}")
    c = profile.c
    in_B = len(set(c[:m])) == 1 and len(set(c[m:])) == 1
    reg = basin_regime(params, m)
    h1 = None if reg is None else reg.h1
    return BSetMembership(
        m=m,
        in_B=in_B,
        plus_0=in_B and c[0] > c[-1],
        zero_0=in_B and c[0] == c[-1],
        minus_0=in_B and c[0] < c[-1],
        drive=params.J * (c[0] - c[-1]),
        h1=h1,
    )


def normal_form(profile: SuccessorProfile) -> tuple[int, dict[int, int]]:
    """Class size ``m`` and a relabelling putting the profile in ``B_m`` form.

    The smaller class of equal counts moves to colors ``1..m``; on a tie the
    class holding color 1 goes first. Returns ``(m, perm)`` with perm old -> new.
    """
    c = profile.c
    q = len(c)
    values = sorted(set(c))
    if len(values) > 2:
        raise OutsideTheoremError(f"profile {c} has {len(values)} distinct counts")
    if len(values) == 1:
        return 0, {a: a for a in range(1, q + 1)}
    classes = [[a for a in range(1, q + 1) if c[a - 1] == v] for v in values]
    classes.sort(key=lambda cl: (len(cl), cl[0] != 1))
    first, rest = classes
    order = first + rest
    return len(first), {old: new for new, old in enumerate(order, start=1)}


def classify_boundary(params: ModelParams, profile: SuccessorProfile) -> TisgmDescriptor:
    """Limiting measure selected by a strict boundary profile (k = 2, J > 0)."""
    params.require_classifiable()
    profile.check(params.k)
    if not profile.strict:
        raise ValueError("classification needs a strict profile")
    m, perm = normal_form(profile)
    free = TisgmDescriptor.free()
    if m == 0:
        return free
    nf = profile.permuted(perm)
    mem = bset_membership(params, nf, m)
    reg = basin_regime(params, m)
    if reg is None:
        return free
    support = tuple(range(1, m + 1))
    if reg.case == "theta_m":
        result = ("low", reg.h1) if (mem.plus_1 or mem.zero_1) else None
    elif reg.case == "between":
        if mem.plus_1:
            result = ("high", reg.h2)
        elif mem.zero_1:
            result = ("low", reg.h1)
        else:
            result = None
    elif reg.case == "theta_c":
        result = ("high", reg.h2) if mem.plus_0 else None
    else:
        if mem.plus_0:
            result = ("high", reg.h2)
        elif mem.minus_0:
            result = ("low", reg.h1)
        else:
            result = None
    if result is None or abs(result[1]) <= EQ_TOL:
        return free
    inverse = {new: old for old, new in perm.items()}
    desc = TisgmDescriptor(m, result[0], support, result[1]).permuted(inverse)
    return canonical(desc, params.q)


def feasible_profiles(params: ModelParams, m: int) -> list[SuccessorProfile]:
    """Strict profiles of the form ``(c1 x m, cq x (q-m))`` with ``m c1 + (q-m) cq = k``."""
    q, k = params.q, params.k
    out = []
    for c1 in range(k // m + 1):
        rest = k - m * c1
        if rest % (q - m) == 0:
            cq = rest // (q - m)
            out.append(SuccessorProfile((c1,) * m + (cq,) * (q - m)))
    return out


@dataclass(frozen=True)
class QmResult:
    holds: bool
    lower: float
    upper: float
    direct: bool


def qm_condition(q: int, m: int) -> QmResult:
    """Whether ``ln theta_m >= h1(theta_m)``, via the closed bounds on ``q``.

    Both the bounds and the direct comparison are evaluated; they must agree.
    """
    if not 1 <= m <= q // 2:
        raise ValueError(f"m={m} outside 1..{q // 2}")
    s = math.sqrt(m * m + 1)
    lower = 2 * m * s * (s - m)
    upper = 2 * m * s * (s + m)
    holds = lower <= q <= upper
    direct = math.log(theta_crit(q, m)) >= math.log((q - m) / m)
    if holds != direct:
        raise AssertionError(f"bound form and direct form disagree at q={q}, m={m}")
    return QmResult(holds, lower, upper, direct)


def h1_of_theta(q: int, theta: float, m: int) -> float:
    roots = solve_branch(q, theta, m)
    if not roots:
        raise RegimeError(f"no branch below theta_{m}")
    return roots[0][1]


def solve_theta_star(q: int, m: int, n_scan: int = 10**4) -> list[float]:
    """All ``theta`` in ``(theta_m, q+1)`` with ``ln theta = h1(theta)``."""
    lo, hi = theta_crit(q, m), q + 1.0
    if not hi > lo:
        return []

    def g(t):
        return math.log(t) - h1_of_theta(q, t, m)

    grid = np.linspace(lo, hi, n_scan + 2)[1:-1]
    vals = np.array([g(t) for t in grid])
    roots = []
    for a, b, ga, gb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if ga == 0.0:
            roots.append(float(a))
        elif ga * gb < 0:
            roots.append(brentq(g, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps))
    return roots


FIGURE_RULES = {
    # q=5, m=2: colors 1, 2 never repeat on a child; 3, 4, 5 repeat exactly once
    "fig5": (5, {1: (2, 3), 2: (1, 4), 3: (3, 5), 4: (4, 1), 5: (5, 2)}),
    # q=15, m=3: colors 1..3 repeat once, 4..15 on both children
    "fig6": (15, {1: (1, 2), 2: (2, 3), 3: (3, 4), **{j: (j, j) for j in range(4, 16)}}),
    # q=5: every vertex has one child colored 1 and one colored 2
    "fig7": (5, {a: (1, 2) for a in range(1, 6)}),
    # q=10, m=4: colors 1..4 repeat once, 5..10 never
    "fig8": (10, {1: (1, 5), 2: (2, 6), 3: (3, 7), 4: (4, 8), 5: (2, 9),
                  6: (3, 10), 7: (4, 1), 8: (1, 2), 9: (3, 4), 10: (1, 3)}),
}


def figure_rule(name: str) -> SuccessorRule:
    try:
        q, table = FIGURE_RULES[name]
    except KeyError:
        raise ValueError(f"unknown figure rule {name!r}; choose from {sorted(FIGURE_RULES)}") from None
    return SuccessorRule(q, table, root_color=1, name=name)


@dataclass
class EmpiricalResult:
    descriptor: TisgmDescriptor | None
    trajectory: exactrec.Trajectory
    converged: bool
    distance: float

    @property
    def resolved(self) -> bool:
        return self.descriptor is not None

    @property
    def limit(self) -> np.ndarray:
        return self.trajectory.ys[-1]


def candidate_measures(params: ModelParams) -> list[TisgmDescriptor]:
    if params.theta > 1:
        return enumerate_tisgms(params.q, params.theta).descriptors
    # J <= 0: the translation-invariant boundary law is unique
    return [TisgmDescriptor.free()]


def empirical_classify(
    params: ModelParams,
    rule: SuccessorRule,
    n_max: int = 200,
    tol: float = 1e-9,
    radius: float = 1e-6,
    check_homogeneity: bool = True,
) -> EmpiricalResult:
    """Follow the exact recursion to depth ``n_max`` and name the limit it reaches."""
    traj = exactrec.ratio_trajectory(params, rule, n_max, check_homogeneity=check_homogeneity)
    y = traj.ys[-1]
    converged = traj.successive_diff() < tol or (n_max == 1 and not np.any(y))
    best, best_d = None, math.inf
    for d in candidate_measures(params):
        dist = float(np.max(np.abs(d.vector(params.q) - y)))
        if dist < best_d:
            best, best_d = d, dist
    if not (converged and best_d < radius):
        best = None
    return EmpiricalResult(best, traj, converged, best_d)


# ---------------------------------------------------------------- boundary specs


def parse_boundary_spec(spec, params: ModelParams):
    """Decode a boundary JSON spec into a profile, rule or explicit configuration."""
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as err:
            raise BoundarySpecError(
                f"invalid JSON at line {err.lineno} column {err.colno}: {err.msg}"
            ) from None
    if not isinstance(spec, dict) or "type" not in spec:
        raise BoundarySpecError("boundary spec must be an object with a 'type' key")
    kind = spec["type"]
    try:
        if kind == "profile":
            prof = SuccessorProfile(tuple(spec["c"]))
            if prof.q != params.q:
                raise BoundarySpecError(f"$.c has {prof.q} entries, expected q={params.q}")
            prof.check(params.k)
            return prof
        if kind == "rule":
            table = {int(a): tuple(ch) for a, ch in spec["table"].items()}
            return SuccessorRule(params.q, table, int(spec.get("root", 1)))
        if kind == "figure":
            rule = figure_rule(spec["name"])
            if rule.q != params.q:
                raise BoundarySpecError(f"$.name: {rule.name} needs q={rule.q}, got q={params.q}")
            return rule
        if kind == "explicit":
            assign = {}
            for key, col in spec["assign"].items():
                try:
                    assign[parse_addr(key)] = int(col)
                except ValueError as err:
                    raise BoundarySpecError(f"$.assign[{key!r}]: {err}") from None
            return Configuration(params.q, assign)
    except KeyError as err:
        raise BoundarySpecError(f"$: missing key {err.args[0]!r} for type {kind!r}") from None
    except (ValueError, ConfigurationError) as err:
        if isinstance(err, BoundarySpecError):
            raise
        raise BoundarySpecError(f"$: {err}") from None
    raise BoundarySpecError(f"$.type: unknown boundary type {kind!r}")
