"""Event-driven simulator for asynchronous CONGEST message passing.

A run wakes every node at time zero, then delivers messages one at a time in
the order chosen by a scheduler policy until no message is pending.  All
randomness (delays and node coins) is derived from explicit seeds, so a run is
a pure function of ``(network, protocol, policy, seed)``.

Time is reported as causal depth: a wake-up handler has depth 0 and a
delivered message has depth one more than the handler that sent it.  All sends
issued by one handler are siblings of equal depth.
"""
from __future__ import annotations

import heapq
import json
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional, Sequence

from .geometry import GridPoint

KT0 = "KT0"
KT1 = "KT1"

DEFAULT_EVENT_CAP = 10**9


class SimulationError(RuntimeError):
    pass


class NetworkError(ValueError):
    pass


class BudgetError(SimulationError):
    def __init__(self, kind: str, bits: int, budget: int):
        super().__init__(f"message {kind!r} has {bits} bits, budget is {budget}")
        self.kind = kind
        self.bits = bits
        self.budget = budget


class LivelockError(SimulationError):
    pass


class SchemaError(ValueError):
    pass


def ceil_log2(x: int) -> int:
    """``ceil(log2(x))`` for a positive integer, with ``ceil_log2(1) == 0``."""
    if x < 1:
        raise ValueError("ceil_log2 needs a positive integer")
    return (x - 1).bit_length()


def grid_side(n: int, c: float) -> int:
    """``ceil(n ** c)``, exact for integral exponents."""
    if float(c).is_integer():
        return max(1, n ** int(c))
    return max(1, math.ceil(n ** c - 1e-9))


def default_b_factor(c: float) -> int:
    # Enough for one point, one node id and a tag at any n >= 2.
    return 4 * math.ceil(c) + 4


@dataclass(frozen=True)
class GeoNetwork:
    """Connected graph whose nodes sit at distinct points of ``[1..G]^2``."""

    positions: tuple[GridPoint, ...]
    edges: tuple[tuple[int, int], ...]
    c: float = 2.0
    knowledge: str = KT1
    b_factor: Optional[int] = None
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        positions = tuple(GridPoint(int(p[0]), int(p[1])) for p in self.positions)
        n = len(positions)
        if n < 1:
            raise NetworkError("network needs at least one node")
        if self.knowledge not in (KT0, KT1):
            raise NetworkError(f"unknown knowledge level {self.knowledge!r}")
        if self.c < 1:
            raise NetworkError("grid exponent c must be >= 1")
        side = grid_side(n, self.c)
        for v, p in enumerate(positions):
            if not (1 <= p.x <= side and 1 <= p.y <= side):
                raise NetworkError(f"node {v} at {tuple(p)} is outside [1..{side}]^2")
        if len(set(positions)) != n:
            raise NetworkError("node positions must be distinct")

        edges = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v or not (0 <= u < n and 0 <= v < n):
                raise NetworkError(f"bad edge ({u}, {v})")
            edges.add((min(u, v), max(u, v)))
        edges = tuple(sorted(edges))
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        adjacency = tuple(tuple(sorted(a)) for a in adj)

        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for w in adjacency[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        if len(seen) != n:
            raise NetworkError(f"network is disconnected ({len(seen)} of {n} nodes reachable from 0)")

        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "adjacency", adjacency)

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def grid_side(self) -> int:
        return grid_side(self.n, self.c)

    @property
    def budget(self) -> int:
        """Per-message bit budget ``B = b_factor * ceil(log2 n)``."""
        factor = self.b_factor if self.b_factor is not None else default_b_factor(self.c)
        return factor * max(1, ceil_log2(self.n))


class BitSchema:
    """Canonical bit sizes of message payloads.

    ``kinds`` maps each message kind to its tuple of field types.  Field types:
    ``node`` and ``count`` and ``cell`` and ``point`` and ``pivot`` have fixed
    widths derived from ``n``, the number of cells and the grid side; ``bits``
    is a raw bit string measured by its length.  A message costs a kind tag of
    ``ceil(log2 #kinds)`` bits plus the sum of its fields.
    """

    def __init__(self, n: int, grid_side: int, kinds: dict[str, tuple[str, ...]], cells: int = 1):
        self.kinds = dict(kinds)
        self.tag_bits = ceil_log2(max(1, len(self.kinds)))
        self.widths = {
            "node": ceil_log2(max(1, n)),
            "cell": ceil_log2(max(1, cells)),
            "point": 2 * ceil_log2(max(1, grid_side)),
            "count": ceil_log2(n + 1),
            "pivot": ceil_log2(max(1, n - 1)),
        }

    def measure(self, kind: str, payload: Sequence = ()) -> int:
        try:
            fields = self.kinds[kind]
        except KeyError:
            raise SchemaError(f"unknown message kind {kind!r}") from None
        if len(payload) != len(fields):
            raise SchemaError(f"{kind!r} expects {len(fields)} fields, got {len(payload)}")
        bits = self.tag_bits
        for ftype, value in zip(fields, payload):
            if ftype == "bits":
                bits += len(value)
            else:
                try:
                    bits += self.widths[ftype]
                except KeyError:
                    raise SchemaError(f"unknown field type {ftype!r}") from None
        return bits


def measure_bits(kind: str, payload: Sequence, schema: BitSchema) -> int:
    return schema.measure(kind, payload)


class Message:
    __slots__ = ("src", "dst", "port", "kind", "payload", "bits", "phase", "depth", "phase_depth", "seq")

    def __init__(self, src, dst, port, kind, payload, bits, phase, depth, phase_depth, seq):
        self.src = src
        self.dst = dst
        self.port = port  # receiving port at dst
        self.kind = kind
        self.payload = payload
        self.bits = bits
        self.phase = phase
        self.depth = depth
        self.phase_depth = phase_depth
        self.seq = seq

    def __repr__(self):
        return f"Message({self.src}->{self.dst} {self.kind} {self.payload!r})"


@dataclass
class PhaseTotals:
    messages: int = 0
    bits: int = 0
    causal_depth: int = 0


@dataclass
class Ledger:
    total_messages: int = 0
    total_bits: int = 0
    max_causal_depth: int = 0
    per_edge_bits: dict = field(default_factory=dict)
    phases: dict = field(default_factory=dict)
    max_message_bits: int = 0

    def record(self, msg: Message) -> None:
        self.total_messages += 1
        self.total_bits += msg.bits
        if msg.bits > self.max_message_bits:
            self.max_message_bits = msg.bits
        u, v = msg.src, msg.dst
        key = (u, v) if u < v else (v, u)
        slot = self.per_edge_bits.get(key)
        if slot is None:
            slot = self.per_edge_bits[key] = [0, 0]
        slot[0 if u < v else 1] += msg.bits
        ph = self.phases.get(msg.phase)
        if ph is None:
            ph = self.phases[msg.phase] = PhaseTotals()
        ph.messages += 1
        ph.bits += msg.bits
        if msg.phase_depth > ph.causal_depth:
            ph.causal_depth = msg.phase_depth
        if msg.depth > self.max_causal_depth:
            self.max_causal_depth = msg.depth

    def phase(self, name: str) -> PhaseTotals:
        return self.phases.get(name, PhaseTotals())

    def messages_excluding(self, *names: str) -> int:
        return sum(p.messages for k, p in self.phases.items() if k not in names)

    def edge_load(self, u: int, v: int) -> int:
        """Bits over edge ``{u, v}`` in both directions."""
        return sum(self.per_edge_bits.get((min(u, v), max(u, v)), (0, 0)))

    def to_flat(self) -> dict:
        out = {
            "total_messages": self.total_messages,
            "total_bits": self.total_bits,
            "max_causal_depth": self.max_causal_depth,
            "max_message_bits": self.max_message_bits,
        }
        for name in sorted(self.phases):
            p = self.phases[name]
            out[f"phase.{name}.messages"] = p.messages
            out[f"phase.{name}.bits"] = p.bits
            out[f"phase.{name}.causal_depth"] = p.causal_depth
        for (u, v) in sorted(self.per_edge_bits):
            fwd, bwd = self.per_edge_bits[(u, v)]
            out[f"edge.{u}-{v}.forward_bits"] = fwd
            out[f"edge.{u}-{v}.backward_bits"] = bwd
        return out


TRACE_FIELDS = ("event_index", "src", "dst", "kind", "bits", "causal_depth", "phase")


def dump_trace(trace: Iterable[tuple]) -> str:
    """Line-delimited JSON, one object per delivered message."""
    return "".join(json.dumps(dict(zip(TRACE_FIELDS, rec))) + "\n" for rec in trace)


def audit_trace(trace: Iterable[tuple], budget: int) -> list[tuple]:
    """Records whose bit size exceeds ``budget``."""
    return [rec for rec in trace if rec[4] > budget]


# Scheduler policies.  Each builds a fresh delay function per run so that
# repeated runs see the same delay sequence.


@dataclass(frozen=True)
class RestrictedFifo:
    """Unit delay; simultaneous deliveries ordered by lower sender id."""

    def make_delay(self) -> Callable:
        return lambda msg, trace: 1

    def describe(self) -> str:
        return "restricted"


@dataclass(frozen=True)
class RandomDelay:
    seed: int = 0
    max_delay: int = 8

    def __post_init__(self):
        if self.max_delay < 1:
            raise ValueError("max_delay must be >= 1")

    def make_delay(self) -> Callable:
        rng = random.Random(self.seed)
        hi = self.max_delay
        return lambda msg, trace: rng.randint(1, hi)

    def describe(self) -> str:
        return f"random:{self.max_delay}"


@dataclass(frozen=True)
class AdversarialHook:
    """Delay chosen by ``delay_fn(message, trace_so_far)``; must return an int >= 1.

    The hook sees the trace prefix at send time and nothing else, so it cannot
    depend on coins that have not been flipped yet.  It must not mutate the
    trace.
    """

    delay_fn: Callable

    def make_delay(self) -> Callable:
        fn = self.delay_fn

        def delay(msg, trace):
            d = int(fn(msg, trace))
            if d < 1:
                raise SimulationError("adversarial delay must be >= 1")
            return d

        return delay

    def describe(self) -> str:
        return "adversarial"


def parse_policy(text: str, seed: int = 0):
    """``restricted`` or ``random:<max_delay>``."""
    if text == "restricted":
        return RestrictedFifo()
    if text.startswith("random"):
        _, _, hi = text.partition(":")
        return RandomDelay(seed=seed, max_delay=int(hi) if hi else 8)
    raise ValueError(f"unknown policy {text!r}")


class Node:
    """Base per-node state machine.

    A node sees its own id, position, degree, ``n`` and the grid side.  Under
    KT1 ``neighbor_ids[port]`` names the neighbour behind each port; under KT0
    it is ``None`` and the node only knows port numbers.
    """

    def __init__(self, node_id: int, position: GridPoint, degree: int, n: int, grid: int,
                 neighbor_ids: Optional[tuple[int, ...]]):
        self.id = node_id
        self.position = position
        self.degree = degree
        self.n = n
        self.grid = grid
        self.neighbor_ids = neighbor_ids
        self.phase = "main"

    def on_wakeup(self, ctx: "Context") -> None:
        pass

    def on_receive(self, ctx: "Context", msg: Message) -> None:
        pass

    def snapshot(self) -> Any:
        """Order-insensitive summary of the node's final answer."""
        return None


class Protocol:
    """Node factory plus the message kinds it may send."""

    kinds: dict[str, tuple[str, ...]] = {}

    def cells(self, network: GeoNetwork) -> int:
        return 1

    def create(self, node_id: int, position: GridPoint, degree: int, n: int, grid: int,
               neighbor_ids) -> Node:
        raise NotImplementedError


class Context:
    """Handle a node uses to send messages and flip coins."""

    __slots__ = ("_sim", "node_id", "rng")

    def __init__(self, sim: "_Simulation", node_id: int, rng: random.Random):
        self._sim = sim
        self.node_id = node_id
        self.rng = rng

    def send(self, port: int, kind: str, *payload, phase: Optional[str] = None) -> None:
        self._sim.send(self.node_id, port, kind, payload, phase)


@dataclass
class RunResult:
    nodes: list
    ledger: Ledger
    trace: list
    events: int

    def trace_text(self) -> str:
        return dump_trace(self.trace)


class _Simulation:
    def __init__(self, network: GeoNetwork, protocol: Protocol, policy, seed: int, event_cap: int):
        self.network = network
        self.schema = BitSchema(network.n, network.grid_side, protocol.kinds, protocol.cells(network))
        self.budget = network.budget
        self.delay = policy.make_delay()
        self.event_cap = event_cap
        self.ledger = Ledger()
        self.trace: list[tuple] = []
        self.heap: list = []
        self.seq = 0
        self.link_last: dict = {}
        self.adj = network.adjacency
        # reverse port lookup: back_port[v][i] is the port of v at adj[v][i]
        index = [{w: i for i, w in enumerate(a)} for a in self.adj]
        self.back_port = [tuple(index[w][v] for w in self.adj[v]) for v in range(network.n)]
        knows = network.knowledge == KT1
        side = network.grid_side
        self.nodes = [
            protocol.create(v, network.positions[v], len(self.adj[v]), network.n, side,
                            self.adj[v] if knows else None)
            for v in range(network.n)
        ]
        self.contexts = [Context(self, v, random.Random(f"{seed}/{v}")) for v in range(network.n)]
        self.now = 0
        self.cur_depth = 0
        self.cur_phase = None
        self.cur_phase_depth = 0

    def send(self, src: int, port: int, kind: str, payload: tuple, phase: Optional[str]) -> None:
        try:
            dst = self.adj[src][port]
        except IndexError:
            raise SimulationError(f"node {src} has no port {port}") from None
        bits = self.schema.measure(kind, payload)
        if bits > self.budget:
            raise BudgetError(kind, bits, self.budget)
        if phase is None:
            phase = self.nodes[src].phase
        phase_depth = self.cur_phase_depth + 1 if phase == self.cur_phase else 1
        msg = Message(src, dst, self.back_port[src][port], kind, payload, bits, phase,
                      self.cur_depth + 1, phase_depth, self.seq)
        self.seq += 1
        delay = self.delay(msg, self.trace)
        at = self.now + delay
        link = (src, dst)
        last = self.link_last.get(link)
        if last is not None and last > at:
            at = last  # per-link FIFO
        self.link_last[link] = at
        self.ledger.record(msg)
        heapq.heappush(self.heap, (at, src, msg.seq, msg))

    def run(self) -> RunResult:
        nodes, contexts = self.nodes, self.contexts
        for v in range(len(nodes)):
            self.cur_depth = 0
            self.cur_phase = None
            self.cur_phase_depth = 0
            nodes[v].on_wakeup(contexts[v])
        heap = self.heap
        trace = self.trace
        events = 0
        cap = self.event_cap
        while heap:
            if events >= cap:
                raise LivelockError(f"no quiescence after {cap} deliveries")
            at, _, _, msg = heapq.heappop(heap)
            self.now = at
            self.cur_depth = msg.depth
            self.cur_phase = msg.phase
            self.cur_phase_depth = msg.phase_depth
            trace.append((events, msg.src, msg.dst, msg.kind, msg.bits, msg.depth, msg.phase))
            events += 1
            nodes[msg.dst].on_receive(contexts[msg.dst], msg)
        if events != self.ledger.total_messages:
            raise SimulationError("sent and delivered message counts differ")
        return RunResult(nodes, self.ledger, trace, events)


def run(network: GeoNetwork, protocol: Protocol, policy=None, seed: int = 0,
        event_cap: int = DEFAULT_EVENT_CAP) -> RunResult:
    """Execute ``protocol`` on ``network`` until quiescence."""
    if policy is None:
        policy = RestrictedFifo()
    return _Simulation(network, protocol, policy, seed, event_cap).run()
