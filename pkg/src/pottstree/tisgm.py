"""Translation-invariant splitting Gibbs measures (TISGMs) for k = 2.

A TISGM is labelled by a class size ``m``, a branch of the scalar fixed-point
equation ``h = f_m(h)`` and a support: the set of ``m`` colors whose boundary
law carries ``h`` (all other colors carry 0).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.optimize import brentq, minimize_scalar

THETA_TOL = 1e-9
DISC_TOL = 1e-12
TANGENT_TOL = 1e-14
BRANCHES = ("zero", "low", "high")


class RegimeError(ValueError):
    """Requested object does not exist at this temperature."""


def theta_crit(q: int, m: int) -> float:
    """Critical ``theta_m = 1 + 2 sqrt(m (q - m))`` at which the m-branch pair appears."""
    if not 1 <= m <= q - 1:
        raise ValueError(f"m={m} outside 1..{q - 1}")
    return 1.0 + 2.0 * math.sqrt(m * (q - m))


def _check_m(q: int, m: int):
    if not 1 <= m <= q // 2:
        raise ValueError(f"m={m} outside 1..{q // 2} (normal form)")


def solve_branch(q: int, theta: float, m: int, k: int = 2) -> list[tuple[float, float]]:
    """Closed-form roots ``(x, h)`` with ``h = 2 ln x`` of ``h = f_m(h)``, k = 2.

    Returns ``[]`` below ``theta_m``, one double root at ``theta_m`` and
    ``[(x1, h1), (x2, h2)]`` with ``x1 < x2`` above.
    """
    if k != 2:
        raise NotImplementedError("closed form exists only for k=2; use fixed_points_numeric")
    _check_m(q, m)
    if not theta > 1:
        raise ValueError(f"theta must exceed 1, got {theta}")
    disc = (theta - 1.0) ** 2 - 4.0 * m * (q - m)
    if abs(disc) <= DISC_TOL * max(1.0, (theta - 1.0) ** 2):
        x = (theta - 1.0) / (2.0 * m)
        return [(x, 2.0 * math.log(x))]
    if disc < 0:
        return []
    r = math.sqrt(disc)
    x1 = (theta - 1.0 - r) / (2.0 * m)
    x2 = (theta - 1.0 + r) / (2.0 * m)
    return [(x1, 2.0 * math.log(x1)), (x2, 2.0 * math.log(x2))]


def fm(q: int, theta: float, m: int, k: int, h):
    """``f_m(h) = k ln[((theta+m-1) e^h + q-m) / (m e^h + q-m-1+theta)]``."""
    h = np.asarray(h, dtype=float)
    num = np.logaddexp(math.log(theta + m - 1) + h, math.log(q - m))
    den = np.logaddexp(math.log(m) + h, math.log(q - m - 1 + theta))
    out = k * (num - den)
    return float(out) if out.ndim == 0 else out


def fm_derivative(q: int, theta: float, m: int, k: int, h):
    h = np.asarray(h, dtype=float)
    eh = np.exp(h)
    out = (
        k * (theta - 1) * (theta + q - 1) * eh
        / ((m * eh + theta + q - m - 1) * ((theta + m - 1) * eh + q - m))
    )
    return float(out) if out.ndim == 0 else out


def fm_bounds(q: int, theta: float, m: int, k: int) -> tuple[float, float]:
    """Range ``(a, A)`` of ``f_m`` over the real line."""
    a = k * math.log((q - m) / (q + theta - m - 1))
    A = k * math.log((theta + m - 1) / m)
    return min(a, A), max(a, A)


def _critical_point(q, theta, m, k, lo, hi, sign, g) -> float:
    """Extremum of ``g = f_m - id`` in ``[lo, hi]``: a simple root of ``f_m' - 1``."""

    def dg(h):
        return fm_derivative(q, theta, m, k, h) - 1.0

    if dg(lo) * dg(hi) < 0:
        return brentq(dg, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    res = minimize_scalar(
        lambda h: sign * g(h), bounds=(lo, hi), method="bounded", options={"xatol": 1e-13}
    )
    return float(res.x)


def fixed_points_numeric(
    q: int, theta: float, m: int, k: int = 2, n_grid: int = 4001, xtol: float = 1e-12
) -> list[float]:
    """All roots of ``f_m(h) = h`` by sign scanning plus bracketed refinement.

    Works for any ``k``. Tangential roots (no sign change) are picked up at
    local extrema of ``f_m(h) - h``, located as roots of ``f_m'(h) = 1``.
    """
    if not 1 <= m <= q - 1:
        raise ValueError(f"m={m} outside 1..{q - 1}")

    def g(h):
        return fm(q, theta, m, k, h) - h

    a, A = fm_bounds(q, theta, m, k)
    grid = np.linspace(a - 1.0, A + 1.0, n_grid)
    vals = g(grid)
    roots = [0.0]
    for i in range(n_grid - 1):
        lo, hi, glo, ghi = grid[i], grid[i + 1], vals[i], vals[i + 1]
        if glo == 0.0:
            roots.append(float(lo))
        elif glo * ghi < 0:
            roots.append(brentq(g, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps))
    # look for pairs of close roots / tangencies hiding inside one cell
    for i in range(1, n_grid - 1):
        gl, gc, gr = vals[i - 1], vals[i], vals[i + 1]
        if not (gl * gc > 0 and gc * gr > 0):
            continue
        sign = 1.0 if gc > 0 else -1.0
        if not (sign * gc <= sign * gl and sign * gc <= sign * gr):
            continue
        hmin = _critical_point(q, theta, m, k, grid[i - 1], grid[i + 1], sign, g)
        gmin = float(g(hmin))
        if abs(gmin) < TANGENT_TOL:
            roots.append(hmin)
        elif gmin * gc < 0:
            roots.append(brentq(g, grid[i - 1], hmin, xtol=xtol))
            roots.append(brentq(g, hmin, grid[i + 1], xtol=xtol))
    roots.sort()
    merged: list[float] = []
    for r in roots:
        if merged and abs(r - merged[-1]) < 1e-7:
            if r == 0.0:
                merged[-1] = 0.0
            continue
        merged.append(r)
    return merged


@dataclass(frozen=True, order=True)
class TisgmDescriptor:
    """One TISGM: branch ``h`` on the colors in ``support``, 0 elsewhere."""

    m: int
    branch: str
    support: tuple[int, ...] = field(default=())
    h: float = 0.0

    def __post_init__(self):
        if self.branch not in BRANCHES:
            raise ValueError(f"unknown branch {self.branch!r}")
        if (self.branch == "zero") != (self.m == 0):
            raise ValueError("branch 'zero' goes with m=0 only")
        if len(self.support) != self.m:
            raise ValueError(f"support {self.support} does not have size {self.m}")
        if self.m == 0 and self.h != 0.0:
            raise ValueError("the free measure has h=0")

    @classmethod
    def free(cls) -> "TisgmDescriptor":
        return cls(0, "zero", (), 0.0)

    def full_vector(self, q: int) -> np.ndarray:
        u = np.zeros(q)
        u[[c - 1 for c in self.support]] = self.h
        return u

    def vector(self, q: int) -> np.ndarray:
        """Boundary law as a (q-1)-vector of log-ratios against color ``q``."""
        u = self.full_vector(q)
        return u[:-1] - u[-1]

    def label(self) -> str:
        if self.m == 0:
            return "mu0"
        idx = {"low": 1, "high": 2}[self.branch]
        return f"mu{idx}(m={self.m},support={list(self.support)})"

    def permuted(self, perm) -> "TisgmDescriptor":
        """Apply a color relabelling ``perm`` (old -> new) to the support."""
        return TisgmDescriptor(self.m, self.branch, tuple(sorted(perm[c] for c in self.support)), self.h)

    def to_json(self, q: int, theta: float, **extra) -> dict:
        return {
            "m": self.m,
            "branch": self.branch,
            "support": list(self.support),
            "h": self.h,
            "theta": theta,
            "q": q,
            **extra,
        }


def canonical(desc: TisgmDescriptor, q: int) -> TisgmDescriptor:
    """Pick one representative when two descriptors name the same boundary law.

    With ``q = 2m`` the low branch on S equals the high branch on the
    complement of S (``f_m`` is odd there); the high form is kept.
    """
    if desc.m and 2 * desc.m == q and desc.h < 0:
        comp = tuple(c for c in range(1, q + 1) if c not in desc.support)
        return TisgmDescriptor(desc.m, "high", comp, -desc.h)
    return desc


def _regime(q: int, theta: float, tol: float = THETA_TOL) -> tuple[str, int]:
    """Return (label, m) locating ``theta`` among the critical values."""
    half = q // 2
    crit = [theta_crit(q, m) for m in range(1, half + 1)]
    if abs(theta - (q + 1)) <= tol:
        return "theta_c", 0
    if theta < crit[0] - tol:
        return "unique", 0
    for m, t in enumerate(crit, start=1):
        if abs(theta - t) <= tol:
            return "critical", m
    if theta > crit[-1]:
        return "generic", half
    for m in range(1, half):
        if crit[m - 1] < theta < crit[m]:
            return "ladder", m
    raise AssertionError("unreachable")


def regime_label(q: int, theta: float) -> str:
    label, m = _regime(q, theta)
    return f"{label}_{m}" if label in ("critical", "ladder") else label


def count_tisgms(q: int, theta: float) -> int:
    """Number of TISGMs for k = 2, J > 0, piecewise by temperature regime."""
    if not theta > 1:
        raise ValueError(f"theta must exceed 1, got {theta}")
    label, m = _regime(q, theta)
    if label == "unique":
        return 1
    if label == "ladder":
        return 1 + 2 * sum(comb(q, s) for s in range(1, m + 1))
    if label == "critical":
        return 1 + comb(q, m) + 2 * sum(comb(q, s) for s in range(1, m))
    if label == "generic":
        return 2**q - 1
    if q % 2:
        return 2 ** (q - 1)
    return 2 ** (q - 1) - comb(q - 1, q // 2)


def branch_values(q: int, theta: float, m: int) -> list[tuple[str, float]]:
    """Distinct non-trivial ``(branch, h)`` for class size ``m`` at ``theta``."""
    label, mc = _regime(q, theta)
    tc = theta_crit(q, m)
    if theta < tc - THETA_TOL:
        return []
    if abs(theta - tc) <= THETA_TOL:
        x = (theta - 1.0) / (2.0 * m)
        out = [("low", 2.0 * math.log(x))]
    else:
        roots = solve_branch(q, theta, m)
        out = [(b, h) for b, (_, h) in zip(("low", "high"), roots)]
        if len(out) == 1:
            out = [("low", out[0][1])]
    return [(b, h) for b, h in out if abs(h) > 1e-12 and not (label == "theta_c" and abs(h) < 1e-7)]


@dataclass
class RegimeReport:
    q: int
    theta: float
    regime: str
    count: int
    descriptors: list[TisgmDescriptor]
    multiplicity: dict[tuple[int, str], int]


def enumerate_tisgms(q: int, theta: float) -> RegimeReport:
    """Every TISGM at ``theta`` (k = 2, J > 0), coincident boundary laws merged."""
    if not theta > 1:
        raise ValueError(f"enumeration needs J > 0 (theta > 1), got theta={theta}")
    descs = [TisgmDescriptor.free()]
    for m in range(1, q // 2 + 1):
        for branch, h in branch_values(q, theta, m):
            for support in itertools.combinations(range(1, q + 1), m):
                descs.append(TisgmDescriptor(m, branch, support, h))
    # after canonical() the only coincidences left are exact repeats
    kept = list({(d.m, d.branch, d.support): d for d in (canonical(d, q) for d in descs)}.values())
    kept.sort(key=lambda d: (d.m, BRANCHES.index(d.branch), d.support))
    mult: dict[tuple[int, str], int] = {}
    for d in kept:
        mult[(d.m, d.branch)] = mult.get((d.m, d.branch), 0) + 1
    return RegimeReport(q, theta, regime_label(q, theta), len(kept), kept, mult)


def rm_residual(q: int, theta: float, m: int, h: float, k: int = 2) -> float:
    return abs(fm(q, theta, m, k, h) - h)
