import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geonet.geometry import (
    ContainmentError,
    EmptyInputError,
    GridPoint,
    ParameterError,
    build_kernel,
    closest_pair_oracle,
    combine_kernels,
    convex_hull,
    diameter_oracle,
    directional_width,
    distance_to_hull,
    extreme_points_for_line,
    farthest_pair,
    make_direction_set,
    verify_eps_kernel,
)

coords = st.integers(min_value=1, max_value=200)
point_sets = st.lists(st.tuples(coords, coords), min_size=1, max_size=40, unique=True)


def brute_extremes(angle, pts):
    ux, uy = math.cos(angle % math.pi), math.sin(angle % math.pi)
    key = [(p[0] * ux + p[1] * uy, p) for p in pts]
    hi = max(v for v, _ in key)
    lo = min(v for v, _ in key)
    return min(p for v, p in key if v == hi), min(p for v, p in key if v == lo)


def brute_hull(pts):
    """Hull vertices by the O(n^3) interiority test: a point is a vertex iff it
    is not inside or on any triangle / segment of the other points."""
    pts = sorted(set(pts))
    if len(pts) <= 2:
        return set(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def on_segment(p, a, b):
        return (cross(a, b, p) == 0 and min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))

    def in_triangle(p, a, b, c):
        d = [cross(a, b, p), cross(b, c, p), cross(c, a, p)]
        return not (min(d) < 0 < max(d))

    verts = set()
    for p in pts:
        others = [q for q in pts if q != p]
        covered = any(on_segment(p, a, b) for a, b in itertools.combinations(others, 2))
        if not covered:
            covered = any(cross(a, b, c) != 0 and in_triangle(p, a, b, c)
                          for a, b, c in itertools.combinations(others, 3))
        if not covered:
            verts.add(p)
    return verts


# -- directional width and extreme points --------------------------------------

def test_width_examples():
    assert directional_width(0.0, [(1, 1), (4, 5)]) == pytest.approx(3)
    assert directional_width(math.pi / 2, [(1, 1), (4, 5)]) == pytest.approx(4)
    assert directional_width(math.pi / 4, [(1, 1), (3, 3), (2, 1)]) == pytest.approx(2 * math.sqrt(2))


def test_width_empty():
    with pytest.raises(EmptyInputError):
        directional_width(0.0, [])


def test_extreme_examples():
    assert extreme_points_for_line(0.0, [(1, 1), (4, 5), (2, 2)]) == ((4, 5), (1, 1))
    assert extreme_points_for_line(0.0, [(1, 1), (1, 5)]) == ((1, 1), (1, 1))
    assert extreme_points_for_line(math.pi / 2, [(3, 7), (5, 2), (4, 4)]) == ((3, 7), (5, 2))
    with pytest.raises(EmptyInputError):
        extreme_points_for_line(0.0, [])


@given(point_sets, st.floats(min_value=0, max_value=math.pi, allow_nan=False))
def test_extremes_order_independent(pts, angle):
    a = extreme_points_for_line(angle, pts)
    b = extreme_points_for_line(angle, list(reversed(pts)))
    assert a == b


@given(point_sets, st.floats(min_value=0, max_value=2 * math.pi, allow_nan=False), st.data())
def test_width_monotone(pts, angle, data):
    sub = data.draw(st.lists(st.sampled_from(pts), min_size=1, unique=True))
    assert directional_width(angle, sub) <= directional_width(angle, pts) + 1e-9


@given(st.lists(st.tuples(coords, coords), min_size=2, max_size=30, unique=True),
       st.floats(min_value=0, max_value=math.pi, allow_nan=False))
def test_diameter_dominates_every_width(pts, angle):
    assert diameter_oracle(pts)[2] >= directional_width(angle, pts) - 1e-9


# -- direction sets and kernels ------------------------------------------------

@pytest.mark.parametrize("eps,delta,count", [(0.5, 1.0, 4), (0.02, 0.2, 16), (0.125, 0.5, 7)])
def test_direction_set_sizes(eps, delta, count):
    d = make_direction_set(eps)
    assert d.delta == pytest.approx(delta)
    assert len(d) == count


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1, 1.5])
def test_direction_set_rejects(eps):
    with pytest.raises(ParameterError):
        make_direction_set(eps)


@given(st.floats(min_value=1e-4, max_value=0.999))
def test_direction_gaps(eps):
    d = make_direction_set(eps)
    assert len(d) == math.ceil(math.pi / math.sqrt(2 * eps))
    folded = sorted(a % math.pi for a in d.angles)
    gaps = [b - a for a, b in zip(folded, folded[1:])] + [folded[0] + math.pi - folded[-1]]
    assert max(gaps) <= d.delta + 1e-12


def test_kernel_matches_brute_force():
    rng = random.Random(4)
    dirs = make_direction_set(0.1)
    pts = [GridPoint(rng.randint(1, 99), rng.randint(1, 99)) for _ in range(60)]
    k = build_kernel(pts, dirs)
    for angle, pair in zip(dirs.angles, k.extremes):
        assert pair == brute_extremes(angle, pts)
    assert len(k) <= 2 * len(dirs)
    assert set(k.points) <= set(pts)


def test_combine_examples():
    dirs = make_direction_set(0.5)
    k = build_kernel([(1, 1), (9, 1), (5, 9)], dirs)
    assert combine_kernels([k]) == k
    assert combine_kernels([k, k]) == k
    single = combine_kernels([], (3, 3), dirs)
    assert all(pair == ((3, 3), (3, 3)) for pair in single.extremes)
    merged = combine_kernels([build_kernel([(1, 1), (9, 1)], dirs), build_kernel([(5, 9)], dirs)])
    assert merged == build_kernel([(1, 1), (9, 1), (5, 9)], dirs)


def test_combine_errors():
    with pytest.raises(ParameterError):
        combine_kernels([build_kernel([(1, 1)], make_direction_set(0.5)),
                         build_kernel([(2, 2)], make_direction_set(0.1))])
    with pytest.raises(EmptyInputError):
        combine_kernels([], None, make_direction_set(0.5))


def _two_block_splits(items):
    """The whole set, then every split of ``items`` into two non-empty blocks."""
    yield [list(items)]
    for r in range(1, len(items)):
        for left in itertools.combinations(items, r):
            if items[0] not in left:
                continue  # each split once
            right = [x for x in items if x not in left]
            yield [list(left), right]


def test_combine_partition_independence_exhaustive():
    rng = random.Random(11)
    dirs = make_direction_set(0.1)
    for size in range(1, 13):
        pts = [GridPoint(*p) for p in rng.sample([(x, y) for x in range(1, 30) for y in range(1, 30)], size)]
        whole = build_kernel(pts, dirs)
        # each block is folded in one point at a time, then the blocks are merged
        for parts in _two_block_splits(pts):
            kernels = []
            for block in parts:
                acc = build_kernel([block[0]], dirs)
                for p in block[1:]:
                    acc = combine_kernels([acc], p)
                kernels.append(acc)
            assert combine_kernels(kernels) == whole


@given(st.lists(st.tuples(coords, coords), min_size=1, max_size=25, unique=True), st.data())
def test_combine_associative_commutative(pts, data):
    dirs = make_direction_set(0.2)
    cuts = sorted(data.draw(st.lists(st.integers(0, len(pts)), max_size=3)))
    blocks = [pts[a:b] for a, b in zip([0] + cuts, cuts + [len(pts)]) if pts[a:b]]
    kernels = [build_kernel(b, dirs) for b in blocks]
    perm = data.draw(st.permutations(kernels))
    assert combine_kernels(kernels) == combine_kernels(list(perm)) == build_kernel(pts, dirs)


def test_verify_examples():
    pts = [(1, 1), (100, 1), (50, 80)]
    rep = verify_eps_kernel(pts, pts, 0.1)
    assert rep.ok and rep.worst_ratio == pytest.approx(1.0)
    bad = verify_eps_kernel([(1, 1), (100, 1)], pts, 0.01)
    assert not bad.ok
    assert bad.worst_ratio < 0.05
    circle = {GridPoint(round(500 + 100 * math.cos(2 * math.pi * j / 64)),
                        round(500 + 100 * math.sin(2 * math.pi * j / 64))) for j in range(64)}
    k = build_kernel(list(circle), make_direction_set(0.1))
    assert verify_eps_kernel(k, circle, 0.1).ok


def test_verify_errors():
    with pytest.raises(ContainmentError):
        verify_eps_kernel([(7, 7)], [(1, 1), (2, 2)], 0.1)
    with pytest.raises(ParameterError):
        verify_eps_kernel([(1, 1)], [(1, 1)], 0.1, sample_factor=0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 10_000), st.integers(1, 10_000)), min_size=1, max_size=500, unique=True),
       st.sampled_from([0.5, 0.1, 0.02]))
def test_kernel_additive_guarantee(pts, eps):
    # what line rounding does guarantee: every point within (D/2) tan(delta/2)
    # of the kernel hull, so widths shrink by at most D tan(delta/2)
    dirs = make_direction_set(eps)
    k = build_kernel(pts, dirs)
    D = diameter_oracle(pts)[2] if len(pts) > 1 else 0.0
    slack = D / 2 * math.tan(dirs.delta / 2)
    hull = convex_hull(k.points)
    assert max(distance_to_hull(p, hull) for p in pts) <= slack * (1 + 1e-9) + 1e-9
    for j in range(64):
        a = math.pi * j / 64
        assert directional_width(a, k.points) >= directional_width(a, pts) - 2 * slack - 1e-6


def test_kernel_relative_width_counterexample():
    # nearly collinear points: the middle one is extreme for no line, so the
    # width across the thin direction is lost entirely
    pts = [(21, 25), (33, 30), (50, 36)]
    k = build_kernel(pts, make_direction_set(0.02))
    assert set(k.points) == {(21, 25), (50, 36)}
    rep = verify_eps_kernel(k, pts, 0.02)
    assert not rep.ok and rep.worst_ratio < 1e-9


# -- hull and oracles ----------------------------------------------------------

def test_hull_examples():
    sq = convex_hull([(0, 0), (4, 0), (4, 4), (0, 4), (2, 2)])
    assert sq.vertices == ((0, 0), (4, 0), (4, 4), (0, 4))
    one = convex_hull([(1, 1)])
    assert one.degenerate and one.vertices == ((1, 1),)
    line = convex_hull([(1, 1), (2, 2), (3, 3)])
    assert line.vertices == ((1, 1), (3, 3)) and line.degenerate


def test_hull_matches_interiority_20_points():
    rng = random.Random(2)
    for _ in range(20):
        pts = {(rng.randint(1, 50), rng.randint(1, 50)) for _ in range(20)}
        assert set(convex_hull(pts).vertices) == brute_hull(pts)


def test_hull_small_sets_sampled():
    rng = random.Random(7)
    cells = [(x, y) for x in range(1, 6) for y in range(1, 6)]
    for _ in range(1000):
        pts = rng.sample(cells, rng.randint(1, 8))
        assert set(convex_hull(pts).vertices) == brute_hull(pts)


@given(point_sets)
def test_hull_canonical_and_covering(pts):
    hull = convex_hull(pts)
    v = hull.vertices
    assert v[0] == min(v)
    if len(v) >= 3:
        for a, b, c in zip(v, v[1:] + v[:1], v[2:] + v[:2]):
            assert (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) > 0
    assert all(distance_to_hull(p, hull) <= 1e-9 for p in pts)


def test_pair_oracles():
    pts = [(0, 0), (3, 4), (1, 1)]
    assert diameter_oracle(pts) == ((0, 0), (3, 4), 5.0)
    p, q, d = closest_pair_oracle(pts)
    assert (p, q) == ((0, 0), (1, 1)) and d == pytest.approx(math.sqrt(2))
    with pytest.raises(EmptyInputError):
        diameter_oracle([(1, 1)])
    with pytest.raises(EmptyInputError):
        closest_pair_oracle([])


def test_pair_oracle_tiebreak():
    # four corners of a square: two diagonals tie, smallest pair wins
    pts = [(5, 5), (1, 5), (5, 1), (1, 1)]
    assert diameter_oracle(pts)[:2] == ((1, 1), (5, 5))
    assert closest_pair_oracle(pts)[:2] == ((1, 1), (1, 5))


@given(st.lists(st.tuples(coords, coords), min_size=2, max_size=30, unique=True))
def test_farthest_pair_agrees_with_oracle(pts):
    assert farthest_pair(pts) == diameter_oracle(pts)


def test_distance_to_hull():
    sq = convex_hull([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert distance_to_hull((2, 2), sq) == pytest.approx(math.sqrt(2))
    assert distance_to_hull((0, 0), sq) == 0.0
    assert sq.contains((1, 1))
    seg = convex_hull([(0, 0), (4, 0)])
    assert distance_to_hull((2, 3), seg) == pytest.approx(3)
    assert distance_to_hull((7, 4), convex_hull([(4, 0)])) == pytest.approx(5)
