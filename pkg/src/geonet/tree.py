"""Spanning-tree bootstrap and tree broadcast / convergecast fragments.

The bootstrap is the classical flood: node 0 floods ``join``; every node adopts
the sender of the first ``join`` it sees as parent, answers every ``join`` with
``accept`` or ``reject``, forwards ``join`` to its other ports, and reports
``done`` (with its subtree size) once all its ports have answered and all its
children are done.  The leader is node 0.  Cost is ``4m - n + 1`` messages and
it works under KT0, since nodes only use port numbers.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

from .geometry import DirectionSet, GridPoint, KernelSet, build_kernel, combine_kernels
from .netsim import GeoNetwork, Node, Protocol, RunResult, run

LEADER = 0
ST_PHASE = "spanning_tree"
ST_KINDS = {"join": (), "accept": (), "reject": (), "done": ("count",)}


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class SpanningTree:
    leader: int
    parent: tuple[int, ...]  # parent[leader] == leader
    children: tuple[tuple[int, ...], ...]
    tree_diameter: int

    @property
    def n(self) -> int:
        return len(self.parent)

    @classmethod
    def from_parents(cls, parent: Sequence[int], leader: int = LEADER) -> "SpanningTree":
        n = len(parent)
        if not (0 <= leader < n) or parent[leader] != leader:
            raise TreeError("leader must be its own parent")
        children: list[list[int]] = [[] for _ in range(n)]
        for v, p in enumerate(parent):
            if v != leader:
                if not (0 <= p < n) or p == v:
                    raise TreeError(f"bad parent {p} for node {v}")
                children[p].append(v)
        # every node must reach the leader
        order = [leader]
        for u in order:
            order.extend(children[u])
        if len(order) != n:
            raise TreeError("parent array does not form a tree rooted at the leader")
        return cls(leader, tuple(parent), tuple(tuple(sorted(c)) for c in children),
                   _tree_diameter(children, parent, leader))

    def validate(self, network: GeoNetwork) -> None:
        if self.n != network.n:
            raise TreeError("tree and network sizes differ")
        edges = set(network.edges)
        for v, p in enumerate(self.parent):
            if v == self.leader:
                continue
            if (min(v, p), max(v, p)) not in edges:
                raise TreeError(f"tree edge ({v}, {p}) is not a network edge")
            if v not in self.children[p]:
                raise TreeError(f"node {v} missing from children of {p}")
        if sum(len(c) for c in self.children) != self.n - 1:
            raise TreeError("children lists are inconsistent with parents")
        SpanningTree.from_parents(self.parent, self.leader)

    def depth(self) -> int:
        """Height of the tree below the leader."""
        best, frontier = 0, [(self.leader, 0)]
        while frontier:
            u, d = frontier.pop()
            best = max(best, d)
            frontier.extend((c, d + 1) for c in self.children[u])
        return best

    def to_document(self) -> str:
        return json.dumps({"leader": self.leader, "parent": list(self.parent)})

    @classmethod
    def from_document(cls, text: str) -> "SpanningTree":
        doc = json.loads(text)
        return cls.from_parents(doc["parent"], doc["leader"])


def _tree_diameter(children, parent, leader) -> int:
    n = len(parent)
    adj = [list(children[v]) for v in range(n)]
    for v in range(n):
        if v != leader:
            adj[v].append(parent[v])

    def farthest(src):
        dist = [-1] * n
        dist[src] = 0
        queue = deque([src])
        last = src
        while queue:
            u = queue.popleft()
            last = u
            for w in adj[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return last, dist[last]

    far, _ = farthest(leader)
    return farthest(far)[1]


class TreeNode(Node):
    """Node that bootstraps (or is handed) a spanning tree.

    ``parent`` is a port number (``None`` at the leader) and ``children`` a
    sorted list of ports.  Subclasses put their algorithm in ``handle`` and
    ``on_tree_complete``; the latter fires at the leader once every node has
    reported done.
    """

    def __init__(self, *args, preset: Optional[tuple[Optional[int], list[int], dict]] = None):
        super().__init__(*args)
        self.is_leader = self.id == LEADER
        self.parent: Optional[int] = None
        self.children: list[int] = []
        self.child_sizes: dict[int, int] = {}
        self.subtree_size = 1
        self._preset = preset is not None
        if preset is not None:
            self.parent, self.children, self.child_sizes = preset[0], sorted(preset[1]), dict(preset[2])
            self.subtree_size = 1 + sum(self.child_sizes.values())
        self._adopted = self.is_leader or self._preset
        self._awaiting = 0
        self._accepted: list[int] = []
        self._finished = 0
        self._reported = self._preset

    # -- bootstrap ---------------------------------------------------------

    def on_wakeup(self, ctx):
        if self._preset:
            if self.is_leader:
                self.on_tree_complete(ctx)
            return
        if self.is_leader:
            self._flood(ctx, exclude=None)

    def _flood(self, ctx, exclude):
        for port in range(self.degree):
            if port != exclude:
                ctx.send(port, "join", phase=ST_PHASE)
                self._awaiting += 1
        self._check_done(ctx)

    def _check_done(self, ctx):
        if self._reported or self._awaiting or self._finished < len(self._accepted):
            return
        self._reported = True
        self.children = sorted(self._accepted)
        if self.is_leader:
            self.on_tree_complete(ctx)
        else:
            ctx.send(self.parent, "done", self.subtree_size, phase=ST_PHASE)

    def on_receive(self, ctx, msg):
        kind = msg.kind
        if kind == "join":
            if self._adopted:
                ctx.send(msg.port, "reject", phase=ST_PHASE)
            else:
                self._adopted = True
                self.parent = msg.port
                ctx.send(msg.port, "accept", phase=ST_PHASE)
                self._flood(ctx, exclude=msg.port)
        elif kind == "accept":
            self._awaiting -= 1
            self._accepted.append(msg.port)
            self._check_done(ctx)
        elif kind == "reject":
            self._awaiting -= 1
            self._check_done(ctx)
        elif kind == "done":
            self._finished += 1
            self.child_sizes[msg.port] = msg.payload[0]
            self.subtree_size += msg.payload[0]
            self._check_done(ctx)
        else:
            self.handle(ctx, msg)

    # -- hooks and helpers -------------------------------------------------

    def on_tree_complete(self, ctx) -> None:
        pass

    def handle(self, ctx, msg) -> None:
        raise NotImplementedError(f"unexpected message {msg.kind!r}")

    def send_children(self, ctx, kind, *payload, phase=None):
        for port in self.children:
            ctx.send(port, kind, *payload, phase=phase)

    def send_stream(self, ctx, ports, kind, items, phase=None):
        """Send payloads one per message; the final one uses ``kind + '_last'``."""
        last = len(items) - 1
        for port in ports:
            for i, item in enumerate(items):
                ctx.send(port, kind + "_last" if i == last else kind, *item, phase=phase)


class TreeProtocol(Protocol):
    """Runs ``node_cls``; with ``preset`` the tree is installed instead of built."""

    def __init__(self, node_cls, network: GeoNetwork, preset: Optional[SpanningTree] = None,
                 extra_kinds: Optional[dict] = None, **node_kwargs):
        self.node_cls = node_cls
        self.kinds = {**ST_KINDS, **(extra_kinds or getattr(node_cls, "KINDS", {}))}
        self.node_kwargs = node_kwargs
        self._presets = _port_presets(network, preset) if preset is not None else None

    def create(self, node_id, position, degree, n, grid, neighbor_ids):
        preset = self._presets[node_id] if self._presets is not None else None
        return self.node_cls(node_id, position, degree, n, grid, neighbor_ids, preset=preset,
                             **self.node_kwargs)


def _port_presets(network: GeoNetwork, tree: SpanningTree):
    tree.validate(network)
    sizes = [1] * tree.n
    order = [tree.leader]
    for u in order:
        order.extend(tree.children[u])
    for u in reversed(order):
        if u != tree.leader:
            sizes[tree.parent[u]] += sizes[u]
    presets = []
    for v in range(network.n):
        port_of = {w: i for i, w in enumerate(network.adjacency[v])}
        parent = None if v == tree.leader else port_of[tree.parent[v]]
        kids = [port_of[c] for c in tree.children[v]]
        presets.append((parent, kids, {port_of[c]: sizes[c] for c in tree.children[v]}))
    return presets


def tree_from_nodes(network: GeoNetwork, nodes: Sequence[TreeNode]) -> SpanningTree:
    parent = []
    for v, node in enumerate(nodes):
        if node.is_leader:
            parent.append(v)
        elif node.parent is None:
            raise TreeError(f"node {v} never joined the tree")
        else:
            parent.append(network.adjacency[v][node.parent])
    tree = SpanningTree.from_parents(parent, LEADER)
    for v, node in enumerate(nodes):
        if tuple(sorted(network.adjacency[v][p] for p in node.children)) != tree.children[v]:
            raise TreeError(f"node {v} holds an inconsistent child list")
    return tree


def build_spanning_tree(network: GeoNetwork, policy=None, seed: int = 0):
    """Run the bootstrap alone; returns ``(tree, ledger)``."""
    result = run(network, TreeProtocol(TreeNode, network, extra_kinds={}), policy, seed)
    tree = tree_from_nodes(network, result.nodes)
    tree.validate(network)
    return tree, result.ledger


# -- broadcast ---------------------------------------------------------------


class BroadcastNode(TreeNode):
    KINDS = {"bpt": ("point",), "bpt_last": ("point",)}

    def __init__(self, *args, points=(), phase="broadcast", **kw):
        super().__init__(*args, **kw)
        self.phase = phase
        self.received: list[GridPoint] = []
        self.complete = False
        self._points = [GridPoint(*p) for p in points]

    def on_tree_complete(self, ctx):
        # the leader already holds the payload
        self.received = list(self._points)
        self.complete = True
        self.send_stream(ctx, self.children, "bpt", [(p,) for p in self._points])

    def handle(self, ctx, msg):
        self.received.append(GridPoint(*msg.payload[0]))
        self.complete = msg.kind == "bpt_last"
        self.send_children(ctx, msg.kind, *msg.payload)

    def snapshot(self):
        return tuple(self.received)


def broadcast(network: GeoNetwork, tree: SpanningTree, points: Sequence, policy=None, seed: int = 0,
              phase: str = "broadcast") -> RunResult:
    """Deliver ``points`` from the leader to every node, one point per message."""
    if not points:
        raise ValueError("nothing to broadcast")
    proto = TreeProtocol(BroadcastNode, network, preset=tree, points=tuple(points), phase=phase)
    return run(network, proto, policy, seed)


# -- convergecast -------------------------------------------------------------


@dataclass(frozen=True)
class Aggregate:
    """How a convergecast value is produced, merged and split into messages.

    ``pack`` turns a value into unit payloads, each a tuple matching ``fields``;
    ``unpack`` inverts it.  ``combine`` must be associative and commutative.
    """

    fields: tuple[str, ...]
    local: Callable[[Node], Any]
    combine: Callable[[Sequence[Any]], Any]
    pack: Callable[[Any], list]
    unpack: Callable[[list], Any]


COUNT = Aggregate(("count",), lambda node: 1, sum, lambda v: [(v,)], lambda units: units[0][0])


def kernel_aggregate(dirs: DirectionSet) -> Aggregate:
    return Aggregate(
        ("point",),
        lambda node: build_kernel([node.position], dirs),
        lambda values: combine_kernels(list(values), None, dirs),
        lambda k: [(p,) for p in k.points],
        lambda units: build_kernel([GridPoint(*u[0]) for u in units], dirs),
    )


class Gather:
    """Collects one streamed value from each child port."""

    def __init__(self, ports):
        self.waiting = set(ports)
        self.units: dict[int, list] = {p: [] for p in ports}

    @property
    def complete(self) -> bool:
        return not self.waiting

    def add(self, port, unit, last: bool) -> bool:
        self.units[port].append(unit)
        if last:
            self.waiting.discard(port)
        return not self.waiting

    def streams(self):
        return [self.units[p] for p in sorted(self.units)]


class ConvergecastNode(TreeNode):
    def __init__(self, *args, aggregate: Aggregate, phase="convergecast", **kw):
        super().__init__(*args, **kw)
        self.aggregate = aggregate
        self.phase = phase
        self.value = None
        self._gather = Gather(self.children)

    def on_wakeup(self, ctx):
        super().on_wakeup(ctx)
        if not self.children and not self.is_leader:
            self._finish(ctx)

    def on_tree_complete(self, ctx):
        if not self.children:
            self._finish(ctx)

    def handle(self, ctx, msg):
        if self._gather.add(msg.port, msg.payload, msg.kind.endswith("_last")):
            self._finish(ctx)

    def _finish(self, ctx):
        agg = self.aggregate
        parts = [agg.local(self)] + [agg.unpack(units) for units in self._gather.streams()]
        self.value = agg.combine(parts)
        if not self.is_leader:
            self.send_stream(ctx, [self.parent], "cv", agg.pack(self.value))

    def snapshot(self):
        return self.value


def convergecast(network: GeoNetwork, tree: SpanningTree, aggregate: Aggregate, policy=None,
                 seed: int = 0, phase: str = "convergecast"):
    """Fold per-node values up the tree; returns ``(leader_value, run_result)``."""
    kinds = {"cv": aggregate.fields, "cv_last": aggregate.fields}
    proto = TreeProtocol(ConvergecastNode, network, preset=tree, extra_kinds=kinds,
                         aggregate=aggregate, phase=phase)
    result = run(network, proto, policy, seed)
    return result.nodes[tree.leader].value, result
