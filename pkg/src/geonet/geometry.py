"""Planar geometry over integer grid points.

Directional widths, direction sets, extreme points and kernel summaries are
used inside node logic; the hull, diameter and closest-pair routines are exact
brute-force oracles used as ground truth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

# Relative tolerance for width / distance comparisons, scaled by grid size.
REL_TOL = 1e-9


class GeometryError(ValueError):
    pass


class EmptyInputError(GeometryError):
    pass


class ParameterError(GeometryError):
    pass


class ContainmentError(GeometryError):
    pass


class GridPoint(NamedTuple):
    x: int
    y: int


def _as_points(points: Iterable) -> list[GridPoint]:
    pts = [p if isinstance(p, GridPoint) else GridPoint(*p) for p in points]
    if not pts:
        raise EmptyInputError("empty point set")
    return pts


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def directional_width(angle: float, points: Iterable) -> float:
    """Spread of the projections of ``points`` onto ``(cos angle, sin angle)``."""
    pts = _as_points(points)
    ux, uy = math.cos(angle), math.sin(angle)
    proj = [p.x * ux + p.y * uy for p in pts]
    return max(proj) - min(proj)


def _extremes(ux: float, uy: float, pts: Sequence[GridPoint]) -> tuple[GridPoint, GridPoint]:
    # Ties on the projection go to the lexicographically smallest point in
    # both roles, so the answer depends only on the set.
    best_hi = best_lo = pts[0]
    hi = lo = best_hi.x * ux + best_hi.y * uy
    for p in pts[1:]:
        d = p.x * ux + p.y * uy
        if d > hi or (d == hi and p < best_hi):
            hi, best_hi = d, p
        if d < lo or (d == lo and p < best_lo):
            lo, best_lo = d, p
    return best_hi, best_lo


def extreme_points_for_line(angle: float, points: Iterable) -> tuple[GridPoint, GridPoint]:
    """Return ``(argmax, argmin)`` of the projection onto the line at ``angle``."""
    pts = _as_points(points)
    return _extremes(math.cos(angle), math.sin(angle), pts)


@dataclass(frozen=True)
class DirectionSet:
    """Lines through the origin at angles ``delta * i`` for ``i = 1..ceil(pi/delta)``."""

    epsilon: float
    delta: float
    angles: tuple[float, ...]
    units: tuple[tuple[float, float], ...] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.angles)


def make_direction_set(epsilon: float) -> DirectionSet:
    if not (0.0 < epsilon < 1.0):
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    delta = math.sqrt(2.0 * epsilon)
    count = math.ceil(math.pi / delta)
    angles = tuple(delta * i for i in range(1, count + 1))
    # A line is unoriented: the last angle may pass pi and folds back.
    units = tuple((math.cos(a % math.pi), math.sin(a % math.pi)) for a in angles)
    return DirectionSet(epsilon, delta, angles, units)


@dataclass(frozen=True)
class KernelSet:
    """Per-line ``(max_point, min_point)`` pairs over some point set."""

    directions: DirectionSet
    extremes: tuple[tuple[GridPoint, GridPoint], ...]

    @property
    def points(self) -> tuple[GridPoint, ...]:
        """Distinct stored points in lexicographic order."""
        return tuple(sorted({p for pair in self.extremes for p in pair}))

    def __len__(self) -> int:
        return len(self.points)


def build_kernel(points: Iterable, dirs: DirectionSet) -> KernelSet:
    pts = _as_points(points)
    return KernelSet(dirs, tuple(_extremes(ux, uy, pts) for ux, uy in dirs.units))


def combine_kernels(
    kernels: Sequence[KernelSet],
    extra: Optional[GridPoint] = None,
    dirs: Optional[DirectionSet] = None,
) -> KernelSet:
    """Kernel of the union of the kernels' points and ``extra``.

    Since every kernel point is the argmax/argmin of its own subset under a
    fixed total order, the result equals the kernel built over the union of
    the underlying sets.
    """
    if dirs is None:
        if not kernels:
            raise ParameterError("direction set required when no kernels are given")
        dirs = kernels[0].directions
    for k in kernels:
        if k.directions != dirs:
            raise ParameterError("kernels built over different direction sets")
    pool = {p for k in kernels for p in k.points}
    if extra is not None:
        pool.add(GridPoint(*extra))
    if not pool:
        raise EmptyInputError("nothing to combine")
    return build_kernel(sorted(pool), dirs)


@dataclass(frozen=True)
class KernelReport:
    ok: bool
    worst_ratio: float
    worst_angle: float
    directions_checked: int


def verify_eps_kernel(candidate, points: Iterable, epsilon: float, sample_factor: int = 8) -> KernelReport:
    """Check ``(1 - eps) w(u, P) <= w(u, Q)`` over a dense set of directions.

    Directions tested: ``sample_factor * ceil(pi/delta)`` evenly spaced angles
    in ``[0, pi)`` plus the normal of every segment joining two hull vertices
    of ``points``.  ``candidate`` may be a :class:`KernelSet` or any iterable of
    points.
    """
    if sample_factor < 1:
        raise ParameterError("sample_factor must be >= 1")
    dirs = make_direction_set(epsilon)
    pts = _as_points(points)
    cand = candidate.points if isinstance(candidate, KernelSet) else _as_points(candidate)
    universe = set(pts)
    stray = [q for q in cand if q not in universe]
    if stray:
        raise ContainmentError(f"candidate points not in the point set: {stray[:3]}")

    count = sample_factor * len(dirs)
    angles = [math.pi * j / count for j in range(count)]
    hull = convex_hull(pts).vertices
    for p, q in combinations(hull, 2):
        angles.append(math.atan2(q.y - p.y, q.x - p.x) + math.pi / 2)
    theta = np.array(angles)
    u = np.stack([np.cos(theta), np.sin(theta)])

    P = np.array(pts, dtype=float)
    Q = np.array(cand, dtype=float)
    proj_p = P @ u
    proj_q = Q @ u
    w_p = proj_p.max(axis=0) - proj_p.min(axis=0)
    w_q = proj_q.max(axis=0) - proj_q.min(axis=0)

    scale = max(1.0, float(np.abs(P).max()))
    tol = REL_TOL * scale
    passed = w_q >= (1.0 - epsilon) * w_p - tol
    ratio = np.where(w_p <= tol, 1.0, w_q / np.where(w_p <= tol, 1.0, w_p))
    worst = int(np.argmin(ratio))
    return KernelReport(bool(passed.all()), float(ratio[worst]), float(theta[worst] % math.pi), len(angles))


@dataclass(frozen=True)
class HullPolygon:
    """Counterclockwise, strictly convex, starting at the lexicographic minimum."""

    vertices: tuple[GridPoint, ...]

    @property
    def degenerate(self) -> bool:
        return len(self.vertices) < 3

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def contains(self, p) -> bool:
        """True when ``p`` lies inside or on the boundary."""
        return distance_to_hull(p, self) == 0.0


def convex_hull(points: Iterable) -> HullPolygon:
    """Monotone-chain hull with collinear points removed."""
    pts = sorted(set(_as_points(points)))
    if len(pts) <= 2:
        return HullPolygon(tuple(pts))
    lower: list[GridPoint] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[GridPoint] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return HullPolygon(tuple(lower[:-1] + upper[:-1]))


def _segment_distance(p, a, b) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    length2 = dx * dx + dy * dy
    if length2 == 0:
        return math.hypot(p[0] - a[0], p[1] - a[1])
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / length2
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - (a[0] + t * dx), p[1] - (a[1] + t * dy))


def distance_to_hull(p, hull: HullPolygon) -> float:
    """Euclidean distance from ``p`` to the polygon; 0 inside or on it."""
    v = hull.vertices
    if not v:
        raise EmptyInputError("empty hull")
    if len(v) == 1:
        return math.hypot(p[0] - v[0].x, p[1] - v[0].y)
    if len(v) == 2:
        return _segment_distance(p, v[0], v[1])
    edges = list(zip(v, v[1:] + v[:1]))
    if all(_cross(a, b, p) >= 0 for a, b in edges):
        return 0.0
    return min(_segment_distance(p, a, b) for a, b in edges)


def _pair_table(points: Iterable) -> tuple[list[GridPoint], np.ndarray]:
    pts = sorted(set(_as_points(points)))
    if len(pts) < 2:
        raise EmptyInputError("need at least two distinct points")
    arr = np.array(pts, dtype=np.int64)
    diff = arr[:, None, :] - arr[None, :, :]
    return pts, (diff * diff).sum(axis=2)


def diameter_oracle(points: Iterable) -> tuple[GridPoint, GridPoint, float]:
    """Farthest pair by brute force; ties go to the lexicographically smallest pair."""
    pts, d2 = _pair_table(points)
    best = int(d2.max())
    # Row-major scan over the sorted points yields the smallest pair first.
    i, j = map(int, np.argwhere(np.triu(d2 == best, k=1))[0])
    return pts[i], pts[j], math.sqrt(best)


def closest_pair_oracle(points: Iterable) -> tuple[GridPoint, GridPoint, float]:
    """Closest pair by brute force; ties go to the lexicographically smallest pair."""
    pts, d2 = _pair_table(points)
    n = len(pts)
    d2 = d2.copy()
    d2[np.tril_indices(n)] = np.iinfo(np.int64).max
    best = int(d2.min())
    i, j = map(int, np.argwhere(d2 == best)[0])
    return pts[i], pts[j], math.sqrt(best)


def farthest_pair(points: Iterable) -> tuple[GridPoint, GridPoint, float]:
    """Exact farthest pair over a small set; same tie-break as the oracle."""
    pts = sorted(set(_as_points(points)))
    if len(pts) == 1:
        return pts[0], pts[0], 0.0
    best = None
    for p, q in combinations(pts, 2):
        d2 = (p.x - q.x) ** 2 + (p.y - q.y) ** 2
        if best is None or d2 > best[0]:
            best = (d2, p, q)
    return best[1], best[2], math.sqrt(best[0])
