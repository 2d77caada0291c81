"""Set-Disjointness reduction gadgets for diameter, hull and closest pair.

Every gadget has ``3N`` nodes: ``w_1..w_N`` (ids ``0..N-1``, Alice's side),
``h_1..h_N`` (ids ``N..2N-1``) and ``u_1..u_N`` (ids ``2N..3N-1``, Bob's side),
wired into a single path.  The generators only build the instances; the claims
are checked by :func:`verify_gadget` using the brute-force oracles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

from ..geometry import GridPoint, ParameterError, closest_pair_oracle, convex_hull, diameter_oracle
from ..netsim import GeoNetwork, grid_side

_SNAP = 1e-9


class GadgetKind(str, Enum):
    DIAMETER = "diameter"
    HULL = "hull"
    CLOSEST_BASE = "closest-base"
    CLOSEST_SPREAD = "closest-spread"
    CLOSEST_GROUPED = "closest-grouped"


CLOSEST_VARIANTS = {"base": GadgetKind.CLOSEST_BASE, "spread": GadgetKind.CLOSEST_SPREAD,
                    "grouped": GadgetKind.CLOSEST_GROUPED}


@dataclass(frozen=True)
class CharVector:
    """Characteristic vector of a subset of ``{1..N}``."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ParameterError("characteristic vector entries must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    @classmethod
    def from_set(cls, members: Iterable[int], size: int) -> "CharVector":
        members = set(members)
        if any(not (1 <= i <= size) for i in members):
            raise ParameterError(f"set members must lie in 1..{size}")
        return cls(tuple(int(i in members) for i in range(1, size + 1)))

    @classmethod
    def parse(cls, text: str) -> "CharVector":
        """Accepts ``"1010"`` or ``"1,0,1,0"``."""
        cleaned = text.replace(",", "").strip()
        if not cleaned or set(cleaned) - {"0", "1"}:
            raise ParameterError(f"not a 0/1 vector: {text!r}")
        return cls(tuple(int(ch) for ch in cleaned))

    def members(self) -> set[int]:
        return {i + 1 for i, b in enumerate(self.bits) if b}

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


def _vectors(a, b) -> tuple[CharVector, CharVector]:
    a = a if isinstance(a, CharVector) else CharVector(tuple(a))
    b = b if isinstance(b, CharVector) else CharVector(tuple(b))
    if len(a) != len(b):
        raise ParameterError(f"vectors differ in length ({len(a)} vs {len(b)})")
    return a, b


def _witness(a: CharVector, b: CharVector) -> Optional[int]:
    for i, (x, y) in enumerate(zip(a, b), start=1):
        if x and y:
            return i
    return None


@dataclass(frozen=True)
class GadgetInstance:
    network: GeoNetwork
    kind: GadgetKind
    a: CharVector
    b: CharVector
    params: dict
    expected_answer: bool
    witness: Optional[int]
    # hull gadget only: rounded slot positions, slots[i-1][j] = p^i_j
    slots: Optional[tuple[tuple[GridPoint, ...], ...]] = field(default=None, compare=False)

    @property
    def N(self) -> int:
        return len(self.a)

    def w(self, i: int) -> int:
        return i - 1

    def h(self, i: int) -> int:
        return self.N + i - 1

    def u(self, i: int) -> int:
        return 2 * self.N + i - 1

    def metadata(self) -> dict:
        return {
            "kind": self.kind.value,
            "a": str(self.a),
            "b": str(self.b),
            "expected_answer": self.expected_answer,
            "witness": self.witness,
            "params": self.params,
        }


def _path_edges(order: Sequence[int]) -> list[tuple[int, int]]:
    return list(zip(order, order[1:]))


def _snap(v: float) -> float:
    r = round(v)
    return float(r) if abs(v - r) < _SNAP else v


def _corner(x: float, y: float, right: bool, up: bool) -> GridPoint:
    x, y = _snap(x), _snap(y)
    return GridPoint(math.ceil(x) if right else math.floor(x), math.ceil(y) if up else math.floor(y))


def _disk_points(center: float, radius: float, count: int) -> list[GridPoint]:
    """First ``count`` lattice points strictly inside the disk, row-major."""
    lo, hi = math.floor(center - radius), math.ceil(center + radius)
    limit = radius * radius
    found = []
    for y in range(lo, hi + 1):
        for x in range(lo, hi + 1):
            if (x - center) ** 2 + (y - center) ** 2 < limit:
                found.append(GridPoint(x, y))
                if len(found) == count:
                    return found
    raise AssertionError(f"only {len(found)} lattice points inside radius {radius}")


def _check_on_grid(points: Sequence[GridPoint], side: int, what: str) -> None:
    for p in points:
        if not (1 <= p.x <= side and 1 <= p.y <= side):
            raise ParameterError(f"{what}: point {tuple(p)} falls outside [1..{side}]^2; raise c")


def diameter_min_c(N: int) -> float:
    return 2 + 2 / math.log2(3 * N)


def closest_min_c(N: int) -> float:
    """The hull and closest-pair gadgets need ``c > 1 + 1/(2 lg n)``."""
    return 1 + 1 / (2 * math.log2(3 * N))


def gen_diameter_gadget(a, b, c: Optional[float] = None) -> GadgetInstance:
    """Long points at distance ``R = 2N^2`` on the rays of ``N`` lines, short ones at ``r = N``."""
    a, b = _vectors(a, b)
    N = len(a)
    if N < 2:
        raise ParameterError("diameter gadget needs N >= 2")
    if c is None:
        c = diameter_min_c(N)
    elif c < diameter_min_c(N) - 1e-12:
        raise ParameterError(f"diameter gadget needs c >= 2 + 2/lg(3N) = {diameter_min_c(N):.4f}")
    G = grid_side(3 * N, c)
    r, R = N, 2 * N * N
    center = (G + 1) / 2
    W, U = [], []
    for i in range(1, N + 1):
        theta = math.pi * (i - 0.5) / N
        cx, sy = math.cos(theta), math.sin(theta)
        dw = R if a[i - 1] else r
        du = R if b[i - 1] else r
        # upper ray: top-right up to pi/2, top-left beyond
        W.append(_corner(center + dw * cx, center + dw * sy, right=theta <= math.pi / 2, up=True))
        # lower ray at theta + pi: bottom-left up to 3pi/2, bottom-right beyond
        U.append(_corner(center - du * cx, center - du * sy, right=theta + math.pi > 3 * math.pi / 2, up=False))
    H = _disk_points(center, r, N)
    positions = W + H + U
    _check_on_grid(positions, G, "diameter gadget")
    order = list(range(3 * N))  # w_1..w_N, h_1..h_N, u_1..u_N
    net = GeoNetwork(tuple(positions), tuple(_path_edges(order)), c=c)
    wit = _witness(a, b)
    return GadgetInstance(net, GadgetKind.DIAMETER, a, b,
                          {"N": N, "n": 3 * N, "r": r, "R": R, "G": G, "c": c},
                          wit is not None, wit)


def gen_hull_gadget(a, b, c: Optional[float] = None) -> GadgetInstance:
    """``4N`` slots on a circle of radius ``2N``; ``w_i`` uses slot 0 or 1, ``u_i`` slot 2 or 3."""
    a, b = _vectors(a, b)
    N = len(a)
    if N < 3:
        raise ParameterError("hull gadget needs N >= 3")
    if c is None:
        c = 2.0
    elif c <= closest_min_c(N):
        raise ParameterError(f"hull gadget needs c > 1 + 1/(2 lg(3N)) = {closest_min_c(N):.4f}")
    G = grid_side(3 * N, c)
    r, R = N, 2 * N
    center = (G + 1) / 2
    slots = []
    for i in range(1, N + 1):
        row = []
        for j in range(4):
            phi = 2 * math.pi * (4 * (i - 1) + j) / (4 * N)
            ux, uy = math.cos(phi), math.sin(phi)
            row.append(_corner(center + R * ux, center + R * uy, right=ux >= 0, up=uy >= 0))
        slots.append(tuple(row))
    W = [slots[i][1 if a[i] else 0] for i in range(N)]
    U = [slots[i][3 if b[i] else 2] for i in range(N)]
    H = _disk_points(center, r, N)
    positions = W + H + U
    _check_on_grid(positions, G, "hull gadget")
    # path w_N .. w_1, h_1 .. h_N, u_N .. u_1
    order = list(range(N - 1, -1, -1)) + list(range(N, 2 * N)) + list(range(3 * N - 1, 2 * N - 1, -1))
    net = GeoNetwork(tuple(positions), tuple(_path_edges(order)), c=c)
    wit = _witness(a, b)
    return GadgetInstance(net, GadgetKind.HULL, a, b,
                          {"N": N, "n": 3 * N, "r": r, "R": R, "G": G, "c": c},
                          wit is not None, wit, tuple(slots))


def spread_factor(N: int, c: float) -> int:
    return math.ceil(N ** (c - 1) / 2)


def gen_closest_gadget(a, b, variant: str = "base", c: Optional[float] = None) -> GadgetInstance:
    """Points on four horizontal rows; a close ``w_i, u_i`` pair exists iff ``a_i = b_i = 1``.

    ``base`` uses unit spacing, ``spread`` scales by ``k = ceil(N^(c-1)/2)`` and
    ``grouped`` stacks ``ceil(sqrt N)`` copies of the spread layout, each
    holding ``ceil(sqrt N)`` indices, with vertical pitch ``3k + 1``.
    """
    a, b = _vectors(a, b)
    N = len(a)
    try:
        kind = CLOSEST_VARIANTS[str(variant).lower()]
    except KeyError:
        raise ParameterError(f"unknown closest-pair variant {variant!r}") from None
    if N < (1 if kind is GadgetKind.CLOSEST_BASE else 2):
        raise ParameterError(f"{kind.value} gadget needs a longer vector")
    if c is None:
        c = 2.0
    elif c <= closest_min_c(N):
        raise ParameterError(f"closest-pair gadget needs c > 1 + 1/(2 lg(3N)) = {closest_min_c(N):.4f}")
    G = grid_side(3 * N, c)
    params = {"N": N, "n": 3 * N, "G": G, "c": c}

    if kind is GadgetKind.CLOSEST_BASE:
        k, per_group = 1, N
        # base rows y = 0, 1 | 2, 3 with x pitch 2 (one more than the spread form)
        step, lo_hi, up_lo, top = 2, 1, 2, 3
    else:
        k = spread_factor(N, c)
        if k < 2:
            raise ParameterError(f"spread factor k = {k} < 2; raise c or N")
        per_group = N if kind is GadgetKind.CLOSEST_SPREAD else math.isqrt(N - 1) + 1
        step, lo_hi, up_lo, top = k, k, k + 1, 2 * k + 1
    params["k"] = k
    pitch = 3 * k + 1 if kind is GadgetKind.CLOSEST_GROUPED else 0
    if kind is GadgetKind.CLOSEST_GROUPED:
        params["groups"] = -(-N // per_group)
        params["pitch"] = pitch

    W, U, H = [], [], []
    for i in range(1, N + 1):
        g, j = divmod(i - 1, per_group)
        j += 1
        base = g * pitch
        W.append(GridPoint(step * j + 1, base + (lo_hi if a[i - 1] else 0) + 1))
        U.append(GridPoint(step * j + 1, base + (up_lo if b[i - 1] else top) + 1))
        # h positions follow the index layout of the group they sit in
        size = min(per_group, N - g * per_group)
        hy = 0 if j <= size // 2 else top
        H.append(GridPoint(step * (j + per_group) + 1, base + hy + 1))
    positions = W + H + U
    _check_on_grid(positions, G, f"{kind.value} gadget")
    order = list(range(3 * N))
    net = GeoNetwork(tuple(positions), tuple(_path_edges(order)), c=c)
    wit = _witness(a, b)
    return GadgetInstance(net, kind, a, b, params, wit is not None, wit)


def generate(kind, a, b, c: Optional[float] = None) -> GadgetInstance:
    kind = GadgetKind(kind)
    if kind is GadgetKind.DIAMETER:
        return gen_diameter_gadget(a, b, c)
    if kind is GadgetKind.HULL:
        return gen_hull_gadget(a, b, c)
    return gen_closest_gadget(a, b, kind.value.split("-", 1)[1], c)


@dataclass(frozen=True)
class GadgetReport:
    claim_holds: bool
    oracle_value: float
    threshold: float
    detected: bool
    notes: tuple[str, ...] = ()


def hull_detector(inst: GadgetInstance) -> tuple[bool, list[str]]:
    """Whether some ``w_i`` sits at ``p^i_1`` with its CCW hull neighbour at ``p^i_3``.

    Also reports whether every ``w_i, u_i`` is a hull vertex and no ``h_i`` is.
    """
    pos = inst.network.positions
    hull = convex_hull(pos).vertices
    at = {p: k for k, p in enumerate(hull)}
    notes = []
    N = inst.N
    for i in range(1, N + 1):
        for v, name in ((inst.w(i), "w"), (inst.u(i), "u")):
            if pos[v] not in at:
                notes.append(f"{name}_{i} is not a hull vertex")
        if pos[inst.h(i)] in at:
            notes.append(f"h_{i} is a hull vertex")
    fired = False
    for i in range(1, N + 1):
        p = pos[inst.w(i)]
        if p != inst.slots[i - 1][1] or p not in at:
            continue
        succ = hull[(at[p] + 1) % len(hull)]
        if succ == inst.slots[i - 1][3]:
            fired = True
    return fired, notes


def verify_gadget(inst: GadgetInstance) -> GadgetReport:
    pos = inst.network.positions
    if inst.kind is GadgetKind.DIAMETER:
        R = inst.params["R"]
        p, q, d = diameter_oracle(pos)
        d2 = (p.x - q.x) ** 2 + (p.y - q.y) ** 2
        detected = d2 >= 4 * R * R
        return GadgetReport(detected == inst.expected_answer, d, 2.0 * R, detected)
    if inst.kind is GadgetKind.HULL:
        detected, notes = hull_detector(inst)
        return GadgetReport(detected == inst.expected_answer, float(len(convex_hull(pos))), 0.0,
                            detected, tuple(notes))
    _, _, d = closest_pair_oracle(pos)
    detected = d <= 1.0
    return GadgetReport(detected == inst.expected_answer, d, 1.0, detected)
