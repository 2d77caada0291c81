"""Command-line harness: ``geonet <command> ...``.

Records are single-line JSON on stdout (or ``--out``); ``bench`` writes CSV by
default.  The exit code is 0 only when every checked bound held.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import random
import sys
from typing import Optional, Sequence

from . import algorithms as alg
from .geometry import GeometryError
from .hardness import gadgets as gd
from .hardness.pivot import TrivialDisjointness, expected_edge_bound, relay_path_cost, run_path_pivot_protocol
from .netsim import KT0, KT1, NetworkError, SimulationError, parse_policy
from .topology import ParseError, make_network, read_network, write_network, dumps_network

BENCH_COLUMNS = ("algorithm", "n", "m", "eps_or_k", "seed", "phase", "messages", "bits", "causal_depth",
                 "ratio", "budget", "ok")


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _network_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--network", help="network file; otherwise one is generated")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--topology", default="random_connected(0.1)",
                   help="path, cycle, complete, star, grid or random_connected(p)")
    p.add_argument("--kt", type=int, choices=(0, 1), default=1)


def _common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", default="restricted", help="restricted or random:<maxdelay>")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="json")


def _load_network(args):
    if args.network:
        net, meta = read_network(args.network)
        return net, {"network": args.network, **({"metadata": meta} if meta else {})}
    kt = KT1 if args.kt == 1 else KT0
    net = make_network(args.n, args.topology, args.c, args.seed, knowledge=kt)
    return net, {"n": args.n, "c": args.c, "topology": args.topology, "kt": args.kt, "G": net.grid_side}


def _run_algorithm(name: str, net, param, policy, seed):
    if name == "kernel":
        return alg.run_eps_kernel(net, param, policy, seed)
    if name == "diameter":
        return alg.run_eps_diameter(net, param, policy, seed)
    if name == "hull":
        return alg.run_eps_hull(net, param, policy, seed)
    if name == "closest":
        return alg.run_closest_pair(net, param, policy, seed)
    raise ValueError(f"unknown algorithm {name!r}")


def run_budget(name: str, net, param, result) -> tuple[int, int]:
    """``(messages, cap)`` for the algorithm's messages outside the bootstrap."""
    n = net.n
    if name == "kernel":
        return result.ledger.phase("kernel").messages, alg.kernel_message_budget(n, param)
    msgs = result.algorithm_messages
    if name == "closest":
        return msgs, alg.closest_message_count_bound(n, result.params["grid"].count)
    lines = len(alg.make_direction_set(param))
    extra = 2 * n if name == "diameter" else 2 * lines * n
    return msgs, alg.kernel_message_budget(n, param) + extra


def cmd_gen_network(args) -> int:
    net, _ = _load_network(args)
    _emit(dumps_network(net), args.out)
    return 0


def cmd_run(args, name: str) -> int:
    net, config = _load_network(args)
    policy = parse_policy(args.policy, args.seed)
    param = args.k if name == "closest" else args.eps
    result = _run_algorithm(name, net, param, policy, args.seed)
    rec = alg.evaluate(result, net)
    msgs, cap = run_budget(name, net, param, result)
    rec["budget"] = cap
    rec["ok"] = bool(rec["ok"] and msgs <= cap)
    rec["config"] = {**config, "algorithm": name, "policy": args.policy, "seed": args.seed,
                     ("k" if name == "closest" else "epsilon"): param}
    _emit(json.dumps(rec, sort_keys=True) + "\n", args.out)
    return 0 if rec["ok"] else 1


def cmd_gen_gadget(args) -> int:
    a, b = gd.CharVector.parse(args.a), gd.CharVector.parse(args.b)
    inst = gd.generate(args.kind, a, b, args.c)
    text = dumps_network(inst.network, {"gadget": inst.metadata()})
    _emit(text, args.out)
    return 0


def _sweep(kind: str, pairs) -> tuple[int, int, list]:
    held, total, failures = 0, 0, []
    for a, b in pairs:
        rep = gd.verify_gadget(gd.generate(kind, a, b))
        total += 1
        held += rep.claim_holds
        if not rep.claim_holds:
            failures.append({"a": "".join(map(str, a)), "b": "".join(map(str, b)),
                             "oracle_value": rep.oracle_value})
    return held, total, failures


def cmd_verify_gadget(args) -> int:
    if args.network:
        net, meta = read_network(args.network)
        info = meta.get("gadget")
        if info is None:
            raise ParseError(1, "network file carries no gadget metadata")
        inst = gd.generate(info["kind"], gd.CharVector.parse(info["a"]), gd.CharVector.parse(info["b"]),
                           info["params"]["c"])
        if inst.network.positions != net.positions or inst.network.edges != net.edges:
            print("file does not match the regenerated gadget", file=sys.stderr)
            return 1
        rep = gd.verify_gadget(inst)
        print(json.dumps({"claim_holds": rep.claim_holds, "oracle_value": rep.oracle_value,
                          "threshold": rep.threshold, "expected_answer": inst.expected_answer}))
        return 0 if rep.claim_holds else 1
    if args.exhaustive:
        vecs = list(itertools.product((0, 1), repeat=args.N))
        pairs = itertools.product(vecs, vecs)
    else:
        rng = random.Random(f"gadget/{args.seed}/{args.N}")
        pairs = [([rng.randint(0, 1) for _ in range(args.N)], [rng.randint(0, 1) for _ in range(args.N)])
                 for _ in range(args.samples)]
    held, total, failures = _sweep(args.kind, pairs)
    print(f"{held}/{total} claims hold")
    for f in failures[:10]:
        print(json.dumps(f), file=sys.stderr)
    return 0 if held == total else 1


def cmd_path_pivot(args) -> int:
    proto = TrivialDisjointness()
    rows = []
    ok = True
    rng = random.Random(f"pivot/{args.seed}")
    for s in range(args.seeds):
        if args.x is not None:
            x, y = gd.CharVector.parse(args.x).bits, gd.CharVector.parse(args.y).bits
        else:
            x = tuple(rng.randint(0, 1) for _ in range(args.N))
            y = tuple(rng.randint(0, 1) for _ in range(args.N))
        out = run_path_pivot_protocol(args.m, proto, x, y, seed=args.seed + s, fixed_pivot=args.pivot)
        truth = not any(p and q for p, q in zip(x, y))
        ok &= out.answer == truth == out.reference_answer
        rows.append((out.max_edge_bits, out.max_edge_payload_bits, relay_path_cost(proto, x, y, args.m)))
    mean_total = sum(r[0] for r in rows) / len(rows)
    mean_payload = sum(r[1] for r in rows) / len(rows)
    mean_cost = sum(r[2] for r in rows) / len(rows)
    rec = {"m": args.m, "N": len(x), "seeds": args.seeds, "answers_correct": ok,
           "mean_max_edge_bits": mean_total, "mean_max_edge_payload_bits": mean_payload,
           "path_protocol_cost": mean_cost, "edge_bound": expected_edge_bound(mean_cost, args.m)}
    rec["within_bound"] = mean_payload <= rec["edge_bound"] + 1e-9
    _emit(json.dumps(rec, sort_keys=True) + "\n", args.out)
    return 0 if ok and rec["within_bound"] else 1


def cmd_bench(args) -> int:
    name = args.algo
    params = _int_list(args.k) if name == "closest" else _float_list(args.eps)
    if name == "closest" and not params:
        params = [None]
    rows = []
    for n in _int_list(args.n):
        for param in params:
            for s in range(args.seeds):
                seed = args.seed + s
                net = make_network(n, args.topology, args.c, seed)
                policy = parse_policy(args.policy, seed)
                result = _run_algorithm(name, net, param, policy, seed)
                rec = alg.evaluate(result, net)
                msgs, cap = run_budget(name, net, param, result)
                phase = "kernel" if name == "kernel" else "algorithm"
                bits = (result.ledger.phase("kernel").bits if name == "kernel"
                        else result.ledger.total_bits - result.ledger.phase("spanning_tree").bits)
                depth = (result.ledger.phase("kernel").causal_depth if name == "kernel"
                         else result.ledger.max_causal_depth)
                rows.append({"algorithm": name, "n": n, "m": net.m,
                             "eps_or_k": result.params["grid"].count if name == "closest" and param is None
                             else param,
                             "seed": seed, "phase": phase, "messages": msgs, "bits": bits,
                             "causal_depth": depth, "ratio": rec["ratio"], "budget": cap,
                             "ok": bool(rec["ok"] and msgs <= cap)})
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
    _emit(text, args.out)
    bad = [r for r in rows if not r["ok"]]
    for r in bad:
        print("bound violated: " + json.dumps(r, sort_keys=True), file=sys.stderr)
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geonet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-network", help="write a network file")
    _network_args(p)
    _common_args(p)
    p.set_defaults(func=cmd_gen_network)

    for name in ("kernel", "diameter", "hull"):
        p = sub.add_parser(f"run-{name}", help=f"run the epsilon-{name} algorithm")
        _network_args(p)
        _common_args(p)
        p.add_argument("--eps", type=float, default=0.1)
        p.set_defaults(func=lambda a, _n=name: cmd_run(a, _n))

    p = sub.add_parser("run-closest", help="run the approximate closest-pair search")
    _network_args(p)
    _common_args(p)
    p.add_argument("--k", type=int, default=None, help="target cell count (default: largest below n)")
    p.set_defaults(func=lambda a: cmd_run(a, "closest"))

    p = sub.add_parser("gen-gadget", help="write a reduction gadget as a network file")
    p.add_argument("--kind", required=True, choices=[k.value for k in gd.GadgetKind])
    p.add_argument("--a", required=True, help="0/1 string")
    p.add_argument("--b", required=True, help="0/1 string")
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_gadget)

    p = sub.add_parser("verify-gadget", help="check gadget claims against the oracles")
    p.add_argument("--kind", choices=[k.value for k in gd.GadgetKind], default="diameter")
    p.add_argument("--network", help="verify a single gadget file")
    p.add_argument("--exhaustive", action="store_true", help="all (a, b) pairs of length N")
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_gadget)

    p = sub.add_parser("path-pivot", help="run the pivot simulation of trivial disjointness on a path")
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--N", type=int, default=64)
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--pivot", type=int, default=None)
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_path_pivot)

    p = sub.add_parser("bench", help="sweep n and epsilon (or k); one row per run")
    p.add_argument("--algo", required=True, choices=("kernel", "diameter", "hull", "closest"))
    p.add_argument("--n", default="50,100,200")
    p.add_argument("--eps", default="0.1")
    p.add_argument("--k", default="")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--topology", default="random_connected(0.1)")
    p.add_argument("--policy", default="restricted")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "x", None) is not None and getattr(args, "y", None) is None:
        parser.error("--x needs --y")
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except (GeometryError, NetworkError, SimulationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
