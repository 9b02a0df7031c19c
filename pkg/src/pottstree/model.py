"""Cayley tree geometry, vertex addresses and spin configurations.

Vertices are addressed by their path from the root: ``()`` is the root,
``(2,)`` its second direct successor, ``(2, 1)`` the first successor of
``(2,)``. The root has ``k + 1`` successors, every other vertex ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

Addr = tuple[int, ...]

ROOT: Addr = ()


class ConfigurationError(ValueError):
    """A configuration lookup or assignment is invalid."""


@dataclass(frozen=True)
class ModelParams:
    """Potts model on the Cayley tree of order ``k``.

    Give either ``J`` or ``theta``; the other is derived.
    """

    q: int
    k: int = 2
    J: float | None = None
    theta: float | None = None

    def __post_init__(self):
        if self.q < 2:
            raise ValueError(f"q must be >= 2, got {self.q}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        J, theta = self.J, self.theta
        if J is None and theta is None:
            raise ValueError("one of J or theta is required")
        if J is None:
            if not theta > 0:
                raise ValueError(f"theta must be positive, got {theta}")
            J = math.log(theta)
        elif theta is None:
            theta = math.exp(J)
        elif not math.isclose(theta, math.exp(J), rel_tol=1e-12):
            raise ValueError(f"inconsistent J={J} and theta={theta}")
        object.__setattr__(self, "J", float(J))
        object.__setattr__(self, "theta", float(theta))

    @classmethod
    def from_theta(cls, q: int, theta: float, k: int = 2) -> "ModelParams":
        return cls(q=q, k=k, theta=theta)

    def require_classifiable(self):
        """Raise unless ``k == 2`` and ``J > 0`` (the ferromagnetic k=2 case)."""
        if self.k != 2:
            raise ValueError(f"classification needs k=2, got k={self.k}")
        if not self.J > 0:
            raise ValueError(f"classification needs J > 0, got J={self.J}")


def n_children(params: ModelParams, v: Addr) -> int:
    return params.k + 1 if len(v) == 0 else params.k


def direct_successors(params: ModelParams, v: Addr) -> list[Addr]:
    return [v + (i,) for i in range(1, n_children(params, v) + 1)]


def parent(v: Addr) -> Addr:
    if not v:
        raise ValueError("the root has no parent")
    return v[:-1]


def is_valid(params: ModelParams, v: Addr) -> bool:
    if not v:
        return True
    if not 1 <= v[0] <= params.k + 1:
        return False
    return all(1 <= i <= params.k for i in v[1:])


def sphere_size(params: ModelParams, n: int) -> int:
    if n == 0:
        return 1
    return (params.k + 1) * params.k ** (n - 1)


def ball_size(params: ModelParams, n: int) -> int:
    k = params.k
    if k == 1:
        return 1 + 2 * n
    return 1 + (k + 1) * (k**n - 1) // (k - 1)


def _walk(params: ModelParams, v: Addr, depth: int) -> Iterator[Addr]:
    # preorder DFS == lexicographic order on paths
    yield v
    if len(v) < depth:
        for child in direct_successors(params, v):
            yield from _walk(params, child, depth)


def ball(params: ModelParams, n: int) -> list[Addr]:
    """All vertices with ``|v| <= n`` in lexicographic order (the set V_n)."""
    if n < 0:
        raise ValueError(f"depth must be >= 0, got {n}")
    return list(_walk(params, ROOT, n))


def sphere(params: ModelParams, n: int) -> list[Addr]:
    """All vertices with ``|v| == n`` in lexicographic order (the set A_n)."""
    if n < 0:
        raise ValueError(f"depth must be >= 0, got {n}")
    return [v for v in _walk(params, ROOT, n) if len(v) == n]


def subtree_ball(params: ModelParams, n: int, s: Addr) -> list[Addr]:
    """``V_{n,s}``: ``s`` and its descendants up to depth ``n``."""
    if len(s) > n:
        return []
    return list(_walk(params, s, n))


def rotate(v: Addr, i: int, j: int) -> Addr:
    """Map a vertex of the subtree under root child ``i`` onto the one under ``j``."""
    if not v or v[0] != i:
        raise ValueError(f"{format_addr(v)} is not in subtree {i}")
    return (j,) + v[1:]


def boundary(params: ModelParams, region: Iterable[Addr]) -> list[Addr]:
    """Outer vertex boundary of a finite region, sorted."""
    region = set(region)
    out = set()
    for v in region:
        if v and parent(v) not in region:
            out.add(parent(v))
        for c in direct_successors(params, v):
            if c not in region:
                out.add(c)
    return sorted(out)


def edges(region: Iterable[Addr]) -> list[tuple[Addr, Addr]]:
    """Edges ``(parent, child)`` with both ends in ``region``."""
    region = set(region)
    return sorted((parent(v), v) for v in region if v and parent(v) in region)


def format_addr(v: Addr) -> str:
    return ".".join(["0", *map(str, v)])


def parse_addr(text: str) -> Addr:
    parts = text.strip().split(".")
    if parts[0] != "0":
        raise ValueError(f"address must start with '0': {text!r}")
    try:
        path = tuple(int(p) for p in parts[1:])
    except ValueError:
        raise ValueError(f"malformed address {text!r}") from None
    if any(i < 1 for i in path):
        raise ValueError(f"child indices start at 1: {text!r}")
    return path


@dataclass(frozen=True)
class Configuration:
    """Colors ``1..q`` on an explicit finite set of vertices."""

    q: int
    assignment: Mapping[Addr, int] = field(default_factory=dict)

    def __post_init__(self):
        assignment = dict(self.assignment)
        for v, c in assignment.items():
            if not 1 <= c <= self.q:
                raise ConfigurationError(
                    f"color {c} at {format_addr(v)} outside 1..{self.q}"
                )
        object.__setattr__(self, "assignment", MappingProxyType(assignment))

    def __getitem__(self, v: Addr) -> int:
        try:
            return self.assignment[v]
        except KeyError:
            raise ConfigurationError(f"no color assigned at {format_addr(v)}") from None

    def __contains__(self, v: Addr) -> bool:
        return v in self.assignment

    def __len__(self) -> int:
        return len(self.assignment)

    @property
    def domain(self) -> frozenset[Addr]:
        return frozenset(self.assignment)

    def restrict(self, vertices: Iterable[Addr]) -> "Configuration":
        return Configuration(self.q, {v: self[v] for v in vertices})

    def require(self, vertices: Iterable[Addr]):
        for v in vertices:
            if v not in self.assignment:
                raise ConfigurationError(f"no color assigned at {format_addr(v)}")

    def permute(self, perm: Mapping[int, int]) -> "Configuration":
        """Relabel colors, ``perm`` maps old color -> new color."""
        return Configuration(self.q, {v: perm[c] for v, c in self.assignment.items()})

    def to_json(self) -> dict[str, int]:
        return {format_addr(v): c for v, c in sorted(self.assignment.items())}

    @classmethod
    def from_json(cls, q: int, data: Mapping[str, int]) -> "Configuration":
        return cls(q, {parse_addr(a): int(c) for a, c in data.items()})

    @classmethod
    def constant(cls, q: int, vertices: Iterable[Addr], color: int) -> "Configuration":
        return cls(q, {v: color for v in vertices})
