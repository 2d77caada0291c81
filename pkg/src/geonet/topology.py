"""Network generators and the text network-file format.

File layout::

    geonet v1 n=<n> c=<c> kt=<0|1>
    <id> <x> <y>          one line per node, ids 0..n-1 in order
    e <u> <v>             one line per edge, u < v, sorted
    m <key> <json>        optional metadata, sorted by key

Blank lines and lines starting with ``#`` are ignored on input.  Output is
canonical, so writing a parsed file reproduces it byte for byte.
"""
from __future__ import annotations

import json
import random
import re
from typing import Optional

from .geometry import GridPoint, ParameterError
from .netsim import KT0, KT1, GeoNetwork, NetworkError, grid_side

TOPOLOGIES = ("path", "cycle", "complete", "random_connected", "star", "grid")


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def random_positions(n: int, side: int, rng: random.Random) -> list[GridPoint]:
    """``n`` distinct points drawn uniformly without replacement from ``[1..side]^2``."""
    if n > side * side:
        raise ParameterError(f"cannot place {n} distinct points on a {side}x{side} grid")
    return [GridPoint(k % side + 1, k // side + 1) for k in rng.sample(range(side * side), n)]


def topology_edges(kind: str, n: int, rng: random.Random, p: float = 0.1) -> list[tuple[int, int]]:
    if kind == "path":
        return [(v, v + 1) for v in range(n - 1)]
    if kind == "cycle":
        edges = [(v, v + 1) for v in range(n - 1)]
        if n > 2:
            edges.append((0, n - 1))
        return edges
    if kind == "complete":
        return [(u, v) for u in range(n) for v in range(u + 1, n)]
    if kind == "star":
        return [(0, v) for v in range(1, n)]
    if kind == "random_connected":
        if not (0.0 <= p <= 1.0):
            raise ParameterError("edge probability must lie in [0, 1]")
        edges = {(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p}
        # a random spanning path guarantees connectivity
        order = list(range(n))
        rng.shuffle(order)
        for u, v in zip(order, order[1:]):
            edges.add((min(u, v), max(u, v)))
        return sorted(edges)
    if kind == "grid":
        width = max(1, int(round(n ** 0.5)))
        edges = []
        for v in range(n):
            if (v + 1) % width and v + 1 < n:
                edges.append((v, v + 1))
            if v + width < n:
                edges.append((v, v + width))
        return edges
    raise ParameterError(f"unknown topology {kind!r}; choose from {', '.join(TOPOLOGIES)}")


def parse_topology(text: str) -> tuple[str, float]:
    """``random_connected(0.1)`` -> ``("random_connected", 0.1)``; plain names keep ``p = 0.1``."""
    m = re.fullmatch(r"\s*([a-z_]+)\s*(?:\(\s*([0-9.eE+-]+)\s*\))?\s*", text)
    if not m or m.group(1) not in TOPOLOGIES:
        raise ParameterError(f"unknown topology {text!r}")
    return m.group(1), float(m.group(2)) if m.group(2) else 0.1


def make_network(n: int, topology: str = "random_connected", c: float = 2.0, seed: int = 0,
                 p: Optional[float] = None, knowledge: str = KT1, positions=None) -> GeoNetwork:
    """Random positions on ``[1..ceil(n^c)]^2`` wired by ``topology``."""
    if n < 1:
        raise ParameterError("n must be positive")
    kind, parsed_p = parse_topology(topology)
    rng = random.Random(f"net/{seed}/{n}/{kind}")
    side = grid_side(n, c)
    pts = positions if positions is not None else random_positions(n, side, rng)
    edges = topology_edges(kind, n, rng, parsed_p if p is None else p)
    return GeoNetwork(tuple(pts), tuple(edges), c=c, knowledge=knowledge)


def _fmt_c(c: float) -> str:
    return str(int(c)) if float(c).is_integer() else repr(float(c))


def dumps_network(net: GeoNetwork, metadata: Optional[dict] = None) -> str:
    kt = 1 if net.knowledge == KT1 else 0
    lines = [f"geonet v1 n={net.n} c={_fmt_c(net.c)} kt={kt}"]
    lines += [f"{v} {p.x} {p.y}" for v, p in enumerate(net.positions)]
    lines += [f"e {u} {v}" for u, v in net.edges]
    for key in sorted(metadata or {}):
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.-]*", key):
            raise ParameterError(f"bad metadata key {key!r}")
        lines.append(f"m {key} {json.dumps(metadata[key], sort_keys=True, separators=(',', ':'))}")
    return "\n".join(lines) + "\n"


_HEADER = re.compile(r"geonet v1 n=(\d+) c=([0-9.eE+-]+) kt=([01])")


def loads_network(text: str) -> tuple[GeoNetwork, dict]:
    header = None
    nodes: list[GridPoint] = []
    edges: list[tuple[int, int]] = []
    meta: dict = {}
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        last_line = lineno
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            m = _HEADER.fullmatch(line)
            if not m:
                raise ParseError(lineno, f"expected header 'geonet v1 n=<n> c=<c> kt=<0|1>', got {line!r}")
            header = (int(m.group(1)), float(m.group(2)), KT1 if m.group(3) == "1" else KT0)
            continue
        parts = line.split(None, 2)
        try:
            if parts[0] == "e":
                u, v = map(int, line.split()[1:])
                edges.append((u, v))
            elif parts[0] == "m":
                if len(parts) != 3:
                    raise ValueError("metadata needs a key and a JSON value")
                meta[parts[1]] = json.loads(parts[2])
            else:
                vid, x, y = map(int, line.split())
                if vid != len(nodes):
                    raise ValueError(f"node ids must run 0..n-1 in order; expected {len(nodes)}, got {vid}")
                nodes.append(GridPoint(x, y))
        except (ValueError, json.JSONDecodeError) as exc:
            raise ParseError(lineno, f"{exc} in {line!r}") from None
    if header is None:
        raise ParseError(last_line or 1, "missing header")
    n, c, kt = header
    if len(nodes) != n:
        raise ParseError(last_line, f"header says n={n} but {len(nodes)} nodes were listed")
    try:
        net = GeoNetwork(tuple(nodes), tuple(edges), c=c, knowledge=kt)
    except NetworkError as exc:
        raise ParseError(last_line, str(exc)) from None
    return net, meta


def write_network(path, net: GeoNetwork, metadata: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_network(net, metadata))


def read_network(path) -> tuple[GeoNetwork, dict]:
    with open(path, encoding="utf-8") as fh:
        return loads_network(fh.read())
