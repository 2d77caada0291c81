"""Randomised pivot simulation of a two-party protocol over a path.

A path protocol that relays a two-party transcript between the endpoints is
simulated as follows: node 0 draws a pivot ``a`` in ``{0..m-1}`` and sends it
down the path; node 0 then plays every node in ``[0, a]`` and node ``m`` every
node in ``[a+1, m]``, so the only messages that must physically cross the path
are those the original protocol sends over the edge ``{a, a+1}``.  The
intermediate nodes relay in both directions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from ..geometry import GridPoint, ParameterError
from ..netsim import GeoNetwork, Node, Protocol, ceil_log2, run

PIVOT_PHASE = "pivot"
PIVOT_KINDS = {
    "pivot": ("pivot",),
    "alice": ("bits",),
    "alice_end": ("bits",),
    "bob": ("bits",),
    "bob_end": ("bits",),
}
DEFAULT_ROUND_CAP = 10_000


class ProtocolError(RuntimeError):
    pass


class TwoPartyProtocol:
    """Alternating two-party protocol, Alice speaking first.

    ``alice_step(x, transcript)`` and ``bob_step(y, transcript)`` return the
    next message as a bit string, or ``None`` once that party is done.  The
    transcript is the list of messages so far.  ``output(transcript)`` reads the
    answer off a finished transcript.
    """

    name = "abstract"

    def alice_step(self, x: Sequence[int], transcript: list[str]) -> Optional[str]:
        raise NotImplementedError

    def bob_step(self, y: Sequence[int], transcript: list[str]) -> Optional[str]:
        raise NotImplementedError

    def output(self, transcript: list[str]) -> bool:
        raise NotImplementedError


class TrivialDisjointness(TwoPartyProtocol):
    """Alice sends her whole vector; Bob answers with one bit (1 = disjoint)."""

    name = "trivial-disj"

    def alice_step(self, x, transcript):
        return "".join(map(str, x)) if not transcript else None

    def bob_step(self, y, transcript):
        if len(transcript) != 1:
            return None
        xs = transcript[0]
        if len(xs) != len(y):
            raise ProtocolError("vectors differ in length")
        disjoint = not any(a == "1" and b for a, b in zip(xs, y))
        return "1" if disjoint else "0"

    def output(self, transcript):
        return transcript[-1] == "1"

    def transcript_bits(self, N: int) -> int:
        return N + 1


def run_two_party(proto: TwoPartyProtocol, x, y, cap: int = DEFAULT_ROUND_CAP) -> tuple[bool, list[str]]:
    """Sequential reference evaluation; returns ``(answer, transcript)``."""
    transcript: list[str] = []
    turn = 0
    for _ in range(cap):
        msg = proto.alice_step(x, transcript) if turn == 0 else proto.bob_step(y, transcript)
        if msg is None:
            return proto.output(transcript), transcript
        transcript.append(msg)
        turn ^= 1
    raise ProtocolError(f"two-party protocol did not finish within {cap} messages")


def _chunks(bits: str, size: int) -> list[str]:
    if size < 1:
        raise ParameterError("message budget too small for any payload bit")
    return [bits[i:i + size] for i in range(0, len(bits), size)] or [""]


class PivotNode(Node):
    def __init__(self, *args, proto: TwoPartyProtocol, m: int, x, y, chunk: int,
                 fixed_pivot: Optional[int], cap: int):
        super().__init__(*args)
        self.phase = PIVOT_PHASE
        self.proto, self.m, self.x, self.y = proto, m, x, y
        self.chunk, self.fixed_pivot, self.cap = chunk, fixed_pivot, cap
        self.pivot: Optional[int] = None
        self.transcript: list[str] = []
        self._buffer = ""
        self.answer: Optional[bool] = None
        self._pending_alice: list[str] = []

    # ports on a path: node v < m has its right neighbour at port 0 if v == 0,
    # else at port 1; the left neighbour is always port 0 for v > 0
    def _right(self):
        return 0 if self.id == 0 else 1

    def on_wakeup(self, ctx):
        if self.id != 0:
            return
        a = self.fixed_pivot if self.fixed_pivot is not None else ctx.rng.randrange(self.m)
        self.pivot = a
        ctx.send(self._right(), "pivot", a)
        self._speak(ctx, alice=True)

    def _send_bits(self, ctx, port, who, bits):
        parts = _chunks(bits, self.chunk)
        for i, part in enumerate(parts):
            ctx.send(port, f"{who}_end" if i == len(parts) - 1 else who, part)

    def _speak(self, ctx, alice: bool):
        if len(self.transcript) >= self.cap:
            raise ProtocolError("two-party protocol exceeded the message cap")
        if alice:
            msg = self.proto.alice_step(self.x, self.transcript)
        else:
            msg = self.proto.bob_step(self.y, self.transcript)
        if msg is None:
            self.answer = self.proto.output(self.transcript)
            return
        self.transcript.append(msg)
        if alice:
            self._send_bits(ctx, self._right(), "alice", msg)
        else:
            self._send_bits(ctx, 0, "bob", msg)

    def on_receive(self, ctx, msg):
        first, last = self.id == 0, self.id == self.m
        if not first and not last:
            # relay onward in the direction of travel
            port = 1 if msg.port == 0 else 0
            ctx.send(port, msg.kind, *msg.payload)
            if msg.kind == "pivot":
                self.pivot = msg.payload[0]
            return
        if msg.kind == "pivot":
            self.pivot = msg.payload[0]
            self._drain(ctx)
            return
        self._buffer += msg.payload[0]
        if msg.kind.endswith("_end"):
            whole, self._buffer = self._buffer, ""
            self.transcript.append(whole)
            if last:
                self._pending_alice.append(whole)
                self._drain(ctx)
            else:
                self._speak(ctx, alice=True)

    def _drain(self, ctx):
        # Bob only replies after the pivot arrived, as in the simulation
        # node m cannot play [a+1, m] before it knows a.
        if self.id != self.m or self.pivot is None:
            return
        while self._pending_alice:
            self._pending_alice.pop(0)
            self._speak(ctx, alice=False)

    def snapshot(self):
        return self.answer


class _PivotProtocol(Protocol):
    kinds = PIVOT_KINDS

    def __init__(self, **kw):
        self.kw = kw

    def create(self, node_id, position, degree, n, grid, neighbor_ids):
        return PivotNode(node_id, position, degree, n, grid, neighbor_ids, **self.kw)


@dataclass
class PivotOutcome:
    answer: bool
    pivot: int
    ledger: object
    edge_bits: list[int]  # total bits per edge {i, i+1}, tags included
    edge_payload_bits: list[int]  # the same without message tags
    reference_answer: bool
    reference_transcript_bits: int

    @property
    def max_edge_bits(self) -> int:
        return max(self.edge_bits)

    @property
    def max_edge_payload_bits(self) -> int:
        return max(self.edge_payload_bits)


def path_network(m: int, c: float = 2.0) -> GeoNetwork:
    if m < 1:
        raise ParameterError("path needs at least one edge")
    pts = tuple(GridPoint(v + 1, 1) for v in range(m + 1))
    return GeoNetwork(pts, tuple((v, v + 1) for v in range(m)), c=c)


def run_path_pivot_protocol(m: int, proto: TwoPartyProtocol, x, y, seed: int = 0,
                            fixed_pivot: Optional[int] = None, policy=None,
                            cap: int = DEFAULT_ROUND_CAP) -> PivotOutcome:
    x, y = tuple(int(v) for v in x), tuple(int(v) for v in y)
    if len(x) != len(y):
        raise ParameterError("inputs differ in length")
    if fixed_pivot is not None and not (0 <= fixed_pivot < m):
        raise ParameterError(f"pivot must lie in 0..{m - 1}")
    net = path_network(m)
    tag = ceil_log2(len(PIVOT_KINDS))
    chunk = net.budget - tag
    result = run(net, _PivotProtocol(proto=proto, m=m, x=x, y=y, chunk=chunk,
                                     fixed_pivot=fixed_pivot, cap=cap), policy, seed)
    ledger = result.ledger
    messages = [0] * m
    for rec in result.trace:
        messages[min(rec[1], rec[2])] += 1
    edge_bits = [ledger.edge_load(i, i + 1) for i in range(m)]
    payload = [edge_bits[i] - tag * messages[i] for i in range(m)]
    ends = result.nodes[0], result.nodes[m]
    if ends[0].answer is None and ends[1].answer is None:
        raise ProtocolError("neither endpoint produced an answer")
    answers = {e.answer for e in ends if e.answer is not None}
    if len(answers) != 1:
        raise ProtocolError("endpoints disagree")
    ref_answer, ref_transcript = run_two_party(proto, x, y, cap)
    return PivotOutcome(answers.pop(), result.nodes[0].pivot, ledger, edge_bits, payload,
                        ref_answer, sum(map(len, ref_transcript)))


def expected_edge_bound(path_cost: float, m: int) -> float:
    """Per-edge expectation bound ``C_P / m + ceil(lg m)`` for a path protocol of total cost ``C_P``."""
    return path_cost / m + math.ceil(math.log2(m)) if m > 1 else path_cost


def relay_path_cost(proto: TwoPartyProtocol, x, y, m: int) -> int:
    """Total bits of the plain relay path protocol: every transcript bit crosses all ``m`` edges."""
    _, transcript = run_two_party(proto, x, y)
    return m * sum(map(len, transcript))
