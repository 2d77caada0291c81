"""Distributed epsilon-kernel, approximate diameter, hull and closest pair.

Each algorithm runs as one simulation: the spanning-tree bootstrap (phase
``spanning_tree``) followed by the algorithm's own phases.  Node logic only
uses ports, positions and ``n``, so everything after the bootstrap also works
under KT0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

from .geometry import (
    DirectionSet,
    GridPoint,
    HullPolygon,
    KernelSet,
    ParameterError,
    build_kernel,
    closest_pair_oracle,
    convex_hull,
    diameter_oracle,
    distance_to_hull,
    farthest_pair,
    make_direction_set,
    verify_eps_kernel,
)
from .netsim import GeoNetwork, Ledger, run
from .tree import LEADER, ST_PHASE, Gather, SpanningTree, TreeNode, TreeProtocol, tree_from_nodes


@dataclass(frozen=True)
class CellGrid:
    """Row-major partition of ``[1..G]^2`` into ``cols x rows`` cells.

    Column ``j`` covers ``x`` in ``((j-1)G/cols, jG/cols]``, so a point on a
    boundary belongs to the lower-indexed cell.  Indices run ``1..cols*rows``.
    """

    side: int
    cols: int
    rows: int

    @property
    def count(self) -> int:
        return self.cols * self.rows

    @property
    def cell_width(self) -> float:
        return self.side / self.cols

    @property
    def cell_height(self) -> float:
        return self.side / self.rows

    @property
    def diagonal(self) -> float:
        return math.hypot(self.cell_width, self.cell_height)

    def index(self, p) -> int:
        col = min(self.cols, max(1, -(-p[0] * self.cols // self.side)))
        row = min(self.rows, max(1, -(-p[1] * self.rows // self.side)))
        return (row - 1) * self.cols + col

    @classmethod
    def for_network(cls, n: int, side: int, k: Optional[int] = None) -> "CellGrid":
        """Square ``s x s`` grid with ``s = ceil(sqrt(k))`` and ``s*s < n``.

        The default ``k`` is the largest one whose grid still has fewer cells
        than nodes, ``floor(sqrt(n-1))**2``; an explicit ``k`` must satisfy
        ``2 <= k`` and ``ceil(sqrt(k))**2 <= n - 1``.
        """
        if n < 2:
            raise ParameterError("closest pair needs at least two nodes")
        if k is None:
            s = math.isqrt(n - 1)
        else:
            if k < 2 or k > n - 1:
                raise ParameterError(f"k must lie in [2, n-1] = [2, {n - 1}], got {k}")
            s = math.isqrt(k - 1) + 1
            if s * s > n - 1:
                raise ParameterError(
                    f"k={k} needs a {s}x{s} grid, which has no fewer cells than n={n} nodes")
        return cls(side, s, s)


# -- answers ------------------------------------------------------------------


@dataclass(frozen=True)
class PairAnswer:
    first: GridPoint
    second: GridPoint
    distance: float
    ids: Optional[tuple[int, int]] = None


@dataclass(frozen=True)
class HullAnswer:
    hull: HullPolygon
    ids: tuple[int, ...]


@dataclass(frozen=True)
class HullView:
    """What one node knows after the hull broadcast."""

    member: bool
    ccw: Optional[int]
    cw: Optional[int]


@dataclass
class AlgorithmResult:
    algorithm: str
    answer: Any
    nodes: list
    tree: SpanningTree
    ledger: Ledger
    trace: list
    params: dict = field(default_factory=dict)

    @property
    def algorithm_messages(self) -> int:
        return self.ledger.messages_excluding(ST_PHASE)

    def node_answers(self) -> list:
        return [node.snapshot() for node in self.nodes]


# -- epsilon-kernel -------------------------------------------------------------

KERNEL_KINDS = {"start": (), "kpt": ("point", "node"), "kpt_last": ("point", "node")}


class KernelNode(TreeNode):
    """Convergecast of per-line extreme points up the tree."""

    KINDS = KERNEL_KINDS

    def __init__(self, *args, dirs: DirectionSet, **kw):
        super().__init__(*args, **kw)
        self.dirs = dirs
        self.kernel: Optional[KernelSet] = None
        self.ids = {self.position: self.id}
        self._gather: Optional[Gather] = None

    def on_tree_complete(self, ctx):
        self._start(ctx)

    def _start(self, ctx):
        self.phase = "kernel"
        self.send_children(ctx, "start")
        self._gather = Gather(self.children)
        if not self.children:
            self._finish(ctx)

    def handle(self, ctx, msg):
        kind = msg.kind
        if kind == "start":
            self._start(ctx)
        elif kind in ("kpt", "kpt_last"):
            point = GridPoint(*msg.payload[0])
            self.ids[point] = msg.payload[1]
            if self._gather.add(msg.port, point, kind == "kpt_last"):
                self._finish(ctx)
        else:
            self.handle_next(ctx, msg)

    def _finish(self, ctx):
        pool = [self.position]
        for stream in self._gather.streams():
            pool.extend(stream)
        self.kernel = build_kernel(sorted(set(pool)), self.dirs)
        if self.is_leader:
            self.on_kernel(ctx)
        else:
            items = [(p, self.ids[p]) for p in self.kernel.points]
            self.send_stream(ctx, [self.parent], "kpt", items, phase="kernel")

    def on_kernel(self, ctx):
        pass

    def handle_next(self, ctx, msg):
        raise NotImplementedError(f"unexpected message {msg.kind!r}")

    def snapshot(self):
        return self.kernel.points if self.is_leader and self.kernel else None


class DiameterNode(KernelNode):
    KINDS = {**KERNEL_KINDS, "dpt": ("point", "node")}

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self.pair: list[tuple[GridPoint, int]] = []
        self.answer: Optional[PairAnswer] = None

    def on_kernel(self, ctx):
        r, s, _ = farthest_pair(self.kernel.points)
        self.phase = "diameter"
        for p in (r, s):
            self.pair.append((p, self.ids[p]))
            self.send_children(ctx, "dpt", p, self.ids[p])
        self._settle()

    def handle_next(self, ctx, msg):
        self.phase = "diameter"
        self.pair.append((GridPoint(*msg.payload[0]), msg.payload[1]))
        self.send_children(ctx, "dpt", *msg.payload)
        self._settle()

    def _settle(self):
        if len(self.pair) == 2:
            (r, ir), (s, is_) = self.pair
            self.answer = PairAnswer(r, s, math.dist(r, s), (ir, is_))

    def snapshot(self):
        return self.answer


class HullNode(KernelNode):
    KINDS = {**KERNEL_KINDS, "hv": ("point", "node"), "hv_last": ("point", "node")}

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self.sequence: list[tuple[GridPoint, int]] = []
        self.view: Optional[HullView] = None
        self.hull: Optional[HullAnswer] = None

    def on_kernel(self, ctx):
        hull = convex_hull(self.kernel.points)
        self.phase = "hull"
        self.sequence = [(p, self.ids[p]) for p in hull.vertices]
        self.send_stream(ctx, self.children, "hv", self.sequence)
        self._settle()

    def handle_next(self, ctx, msg):
        self.phase = "hull"
        self.sequence.append((GridPoint(*msg.payload[0]), msg.payload[1]))
        self.send_children(ctx, msg.kind, *msg.payload)
        if msg.kind == "hv_last":
            self._settle()

    def _settle(self):
        ids = [i for _, i in self.sequence]
        self.hull = HullAnswer(HullPolygon(tuple(p for p, _ in self.sequence)), tuple(ids))
        if self.id in ids and len(ids) > 1:
            k = ids.index(self.id)
            self.view = HullView(True, ids[(k + 1) % len(ids)], ids[k - 1])
        else:
            self.view = HullView(self.id in ids, None, None)

    def snapshot(self):
        return (self.hull, self.view)


# -- closest pair ---------------------------------------------------------------

CLOSEST_KINDS = {
    "start": ("cell", "cell"),
    "cnt": ("cell", "cell", "count"),
    "cell": ("cell",),
    "decision": ("point",),
    "pair": ("point",),
}
CP_PHASE = "closest_pair"


class ClosestNode(TreeNode):
    """Binary search for a cell holding two nodes, then collect two of them.

    Besides the per-round sums each node remembers how many nodes of each
    child's subtree lie in the active index interval.  That lets it wait for
    exactly ``min(2, count)`` decisions per child in the final cell and forward
    the two lexicographically smallest locations, so the answer does not depend
    on message timing.
    """

    KINDS = CLOSEST_KINDS

    def __init__(self, *args, grid: CellGrid, **kw):
        super().__init__(*args, **kw)
        self.phase = CP_PHASE
        self.grid = grid
        self.index = grid.index(self.position)
        self.active = (1, grid.count)
        self.child_count: dict[int, int] = {}
        self._query = None  # (s, mid, e, {port: x}, own_x)
        self._expect: dict[int, int] = {}
        self._found: list[GridPoint] = []
        self.cell: Optional[int] = None
        self.pair: list[GridPoint] = []
        self.answer: Optional[PairAnswer] = None
        # leader bookkeeping
        self.interval_count = 0
        self.rounds: list[tuple[int, int, int]] = []  # (s, e, nodes in [s, e])

    @property
    def subtree_count(self) -> int:
        return (self.active[0] <= self.index <= self.active[1]) + sum(self.child_count.values())

    def on_tree_complete(self, ctx):
        self.child_count = dict(self.child_sizes)
        self.interval_count = self.n
        self._advance(ctx)

    def _narrow(self, s, e):
        if (s, e) == self.active:
            return
        qs, qm, qe, xs, _ = self._query
        if (s, e) == (qs, qm):
            self.child_count = dict(xs)
        elif (s, e) == (qm + 1, qe):
            self.child_count = {p: self.child_count[p] - xs[p] for p in self.child_count}
        else:
            raise AssertionError(f"interval {(s, e)} does not halve {(qs, qe)}")
        self.active = (s, e)
        self._query = None

    # leader: pick the next interval or the final cell
    def _advance(self, ctx):
        s, e = self.active
        self.rounds.append((s, e, self.interval_count))
        if s == e:
            self._open_cell(ctx, s)
        else:
            self.send_children(ctx, "start", s, e)
            self._begin_round(ctx, s, e)

    def _begin_round(self, ctx, s, e):
        mid = (s + e) // 2
        own = int(s <= self.index <= mid)
        self._query = (s, mid, e, {}, own)
        if not self.children:
            self._close_round(ctx)

    def _close_round(self, ctx):
        s, mid, e, xs, own = self._query
        total = own + sum(xs.values())
        if not self.is_leader:
            ctx.send(self.parent, "cnt", s, e, total)
            return
        # pigeonhole: more nodes than cells on the left, or else on the right
        if total > mid - s + 1:
            self._narrow(s, mid)
            self.interval_count = total
        else:
            self._narrow(mid + 1, e)
            self.interval_count -= total
        self._advance(ctx)

    def _open_cell(self, ctx, ce):
        self._narrow(ce, ce)
        self.cell = ce
        self.send_children(ctx, "cell", ce)
        self._expect = {p: min(2, c) for p, c in self.child_count.items() if c > 0}
        self._found = [self.position] if self.index == ce else []
        self._try_decide(ctx)

    def _try_decide(self, ctx):
        if any(self._expect.values()):
            return
        chosen = sorted(self._found)[:2]
        if self.is_leader:
            self.pair = chosen
            for p in chosen:
                self.send_children(ctx, "pair", p)
            self._settle()
        else:
            for p in chosen:
                ctx.send(self.parent, "decision", p)

    def handle(self, ctx, msg):
        kind = msg.kind
        if not self.child_count and self.child_sizes:
            self.child_count = dict(self.child_sizes)
        if kind == "start":
            s, e = msg.payload
            self._narrow(s, e)
            self.send_children(ctx, "start", s, e)
            self._begin_round(ctx, s, e)
        elif kind == "cnt":
            self._query[3][msg.port] = msg.payload[2]
            if len(self._query[3]) == len(self.children):
                self._close_round(ctx)
        elif kind == "cell":
            self._open_cell(ctx, msg.payload[0])
        elif kind == "decision":
            self._found.append(GridPoint(*msg.payload[0]))
            self._expect[msg.port] -= 1
            self._try_decide(ctx)
        elif kind == "pair":
            self.pair.append(GridPoint(*msg.payload[0]))
            self.send_children(ctx, "pair", *msg.payload)
            self._settle()
        else:
            raise NotImplementedError(kind)

    def _settle(self):
        if len(self.pair) == 2:
            a, b = self.pair
            self.answer = PairAnswer(a, b, math.dist(a, b))

    def snapshot(self):
        return self.answer


class _ClosestProtocol(TreeProtocol):
    def __init__(self, network, grid: CellGrid, preset=None):
        super().__init__(ClosestNode, network, preset=preset, grid=grid)
        self._cells = grid.count

    def cells(self, network):
        return self._cells


# -- entry points ---------------------------------------------------------------


def _execute(network, protocol, policy, seed):
    result = run(network, protocol, policy, seed)
    tree = tree_from_nodes(network, result.nodes)
    return result, tree


def run_eps_kernel(network: GeoNetwork, epsilon: float, policy=None, seed: int = 0,
                   preset: Optional[SpanningTree] = None) -> AlgorithmResult:
    """Algorithm: build the tree, then convergecast extreme points to the leader."""
    dirs = make_direction_set(epsilon)
    proto = TreeProtocol(KernelNode, network, preset=preset, dirs=dirs)
    result, tree = _execute(network, proto, policy, seed)
    leader = result.nodes[LEADER]
    return AlgorithmResult("kernel", leader.kernel, result.nodes, tree, result.ledger, result.trace,
                           {"epsilon": epsilon, "lines": len(dirs)})


def run_eps_diameter(network: GeoNetwork, epsilon: float, policy=None, seed: int = 0,
                     preset: Optional[SpanningTree] = None) -> AlgorithmResult:
    if network.n < 2:
        raise ParameterError("diameter needs at least two nodes")
    dirs = make_direction_set(epsilon)
    proto = TreeProtocol(DiameterNode, network, preset=preset, dirs=dirs)
    result, tree = _execute(network, proto, policy, seed)
    leader = result.nodes[LEADER]
    return AlgorithmResult("diameter", leader.answer, result.nodes, tree, result.ledger, result.trace,
                           {"epsilon": epsilon, "lines": len(dirs), "kernel": leader.kernel})


def run_eps_hull(network: GeoNetwork, epsilon: float, policy=None, seed: int = 0,
                 preset: Optional[SpanningTree] = None) -> AlgorithmResult:
    dirs = make_direction_set(epsilon)
    proto = TreeProtocol(HullNode, network, preset=preset, dirs=dirs)
    result, tree = _execute(network, proto, policy, seed)
    leader = result.nodes[LEADER]
    return AlgorithmResult("hull", leader.hull, result.nodes, tree, result.ledger, result.trace,
                           {"epsilon": epsilon, "lines": len(dirs), "kernel": leader.kernel})


def run_closest_pair(network: GeoNetwork, k: Optional[int] = None, policy=None, seed: int = 0,
                     preset: Optional[SpanningTree] = None) -> AlgorithmResult:
    grid = CellGrid.for_network(network.n, network.grid_side, k)
    proto = _ClosestProtocol(network, grid, preset=preset)
    result, tree = _execute(network, proto, policy, seed)
    leader = result.nodes[LEADER]
    return AlgorithmResult("closest", leader.answer, result.nodes, tree, result.ledger, result.trace,
                           {"k": k, "grid": grid, "cells": grid.count, "rounds": list(leader.rounds),
                            "cell": leader.cell})


# -- budgets and records ----------------------------------------------------------


def kernel_message_budget(n: int, epsilon: float) -> int:
    return (2 * len(make_direction_set(epsilon)) + 2) * n


def kernel_depth_budget(tree_diameter: int, epsilon: float) -> int:
    return tree_diameter * (2 * len(make_direction_set(epsilon)) + 2)


def closest_message_budget(n: int, cells: int) -> int:
    """Nominal search cap n(ceil(lg cells) + 3) + 3n, excluding the bootstrap; see the count bound below."""
    return n * (max(0, math.ceil(math.log2(cells))) + 3) + 3 * n if cells > 1 else 6 * n


def closest_message_count_bound(n: int, cells: int) -> int:
    """Exact worst case of this implementation: per round one broadcast and one
    convergecast over ``n - 1`` tree edges, then the cell broadcast, at most
    two decisions per edge and the two-point result broadcast."""
    rounds = max(0, math.ceil(math.log2(cells))) if cells > 1 else 0
    return (n - 1) * (2 * rounds + 5)


def evaluate(result: AlgorithmResult, network: GeoNetwork) -> dict:
    """Flat record comparing a result with the exact oracles."""
    pts = network.positions
    phases = result.ledger.phases
    rec = {
        "algorithm": result.algorithm,
        "n": network.n,
        "m": network.m,
        "messages_by_phase": {k: v.messages for k, v in sorted(phases.items())},
        "bits_by_phase": {k: v.bits for k, v in sorted(phases.items())},
        "depth_by_phase": {k: v.causal_depth for k, v in sorted(phases.items())},
        "causal_depth": result.ledger.max_causal_depth,
        "tree_diameter": result.tree.tree_diameter,
    }
    algo = result.algorithm
    if algo in ("kernel", "diameter", "hull"):
        eps = result.params["epsilon"]
        rec["epsilon"] = eps
        kernel = result.answer if algo == "kernel" else result.params["kernel"]
        report = verify_eps_kernel(kernel, pts, eps)
        budget = kernel_message_budget(network.n, eps)
        rec["kernel_ok"] = report.ok
        rec["kernel_worst_ratio"] = report.worst_ratio
        rec["kernel_messages"] = result.ledger.phase("kernel").messages
        rec["kernel_budget"] = budget
        ok = report.ok and rec["kernel_messages"] <= budget
        if algo == "kernel":
            rec["answer"] = [list(p) for p in kernel.points]
            rec["exact_oracle_value"] = 1.0
            rec["ratio"] = report.worst_ratio
        else:
            exact = diameter_oracle(pts)[2] if network.n > 1 else 0.0
            rec["exact_oracle_value"] = exact
            if algo == "diameter":
                ans = result.answer
                rec["answer"] = {"pair": [list(ans.first), list(ans.second)], "ids": list(ans.ids),
                                 "distance": ans.distance}
                rec["ratio"] = ans.distance / exact if exact else 1.0
                ok = ok and rec["ratio"] >= 1 - eps - 1e-12
            else:
                hull = result.answer.hull
                gap = max(distance_to_hull(p, hull) for p in pts)
                rec["answer"] = {"hull": [list(p) for p in hull.vertices], "ids": list(result.answer.ids),
                                 "max_distance": gap}
                rec["ratio"] = gap / exact if exact else 0.0
                ok = ok and gap <= eps * exact * (1 + 1e-9) + 1e-9
    else:
        ans, grid = result.answer, result.params["grid"]
        exact = closest_pair_oracle(pts)[2]
        rec["k"] = result.params["k"]
        rec["cells"] = grid.count
        rec["answer"] = {"pair": [list(ans.first), list(ans.second)], "distance": ans.distance,
                         "cell": result.params["cell"]}
        rec["exact_oracle_value"] = exact
        rec["ratio"] = ans.distance / exact
        rec["cell_diagonal"] = grid.diagonal
        ok = exact - 1e-9 <= ans.distance <= grid.diagonal + 1e-9
    rec["ok"] = bool(ok)
    return rec
