"""Acceptance suite: one test, and one PASS/FAIL summary line, per criterion.

Criteria 1 to 4 share one batch of runs, which is computed once per session.
Every simulated run is audited against its per-message budget for criterion 8.
"""
import itertools
import math
import random
import time
from functools import lru_cache

from geonet.algorithms import (
    closest_message_budget,
    evaluate,
    kernel_depth_budget,
    kernel_message_budget,
    run_closest_pair,
    run_eps_diameter,
    run_eps_hull,
    run_eps_kernel,
)
from geonet.geometry import closest_pair_oracle, verify_eps_kernel
from geonet.hardness import GadgetKind, TrivialDisjointness, generate, run_path_pivot_protocol, verify_gadget
from geonet.hardness.pivot import path_network
from geonet.netsim import RandomDelay, audit_trace, dump_trace
from geonet.topology import make_network

TOPOLOGY = "random_connected(0.1)"
SIZES = (50, 200)
EPSILONS = (0.5, 0.1, 0.02)
INSTANCES = 50

AUDIT = {"runs": 0, "messages": 0, "over": 0}


def audited(result, net):
    AUDIT["runs"] += 1
    AUDIT["messages"] += len(result.trace)
    AUDIT["over"] += len(audit_trace(result.trace, net.budget))
    return result


def report(record_property, number, ok, detail):
    line = f"C{number} {'PASS' if ok else 'FAIL'}  {detail}"
    record_property("acceptance", line)
    print(line)
    assert ok, line


@lru_cache(maxsize=None)
def kernel_batch():
    """Kernel, diameter and hull runs on the shared instances."""
    rows = []
    kernel_seconds = 0.0
    for n in SIZES:
        for i in range(INSTANCES):
            net = make_network(n, TOPOLOGY, seed=i)
            for eps in EPSILONS:
                t0 = time.perf_counter()
                ker = run_eps_kernel(net, eps)
                kernel_seconds += time.perf_counter() - t0
                audited(ker, net)
                diam = evaluate(audited(run_eps_diameter(net, eps), net), net)
                hull = evaluate(audited(run_eps_hull(net, eps), net), net)
                phase = ker.ledger.phase("kernel")
                kreport = verify_eps_kernel(ker.answer, net.positions, eps)
                rows.append({
                    "n": n, "seed": i, "eps": eps,
                    "kernel_ok": kreport.ok,
                    "kernel_ratio": kreport.worst_ratio,
                    "kernel_messages": phase.messages,
                    "kernel_budget": kernel_message_budget(n, eps),
                    "kernel_depth": phase.causal_depth,
                    "depth_budget": kernel_depth_budget(ker.tree.tree_diameter, eps),
                    "diameter_ratio": diam["ratio"],
                    "hull_gap": hull["answer"]["max_distance"],
                    "diameter": hull["exact_oracle_value"],
                })
    return rows, kernel_seconds


def test_c1_kernel_correctness(record_property):
    rows, seconds = kernel_batch()
    bad = [r for r in rows if not r["kernel_ok"]]
    ok = not bad and seconds < 60
    by_eps = {eps: sum(r["eps"] == eps for r in bad) for eps in EPSILONS}
    worst = min(r["kernel_ratio"] for r in rows)
    report(record_property, 1, ok,
           f"eps-kernel valid on {len(rows) - len(bad)}/{len(rows)} runs (failures by eps {by_eps}, "
           f"worst width ratio {worst:.4f}); kernel runs took {seconds:.1f}s (< 60s)")


def test_c2_kernel_cost(record_property):
    rows, _ = kernel_batch()
    over_msgs = [r for r in rows if r["kernel_messages"] > r["kernel_budget"]]
    over_depth = [r for r in rows if r["kernel_depth"] > r["depth_budget"]]
    worst = max(r["kernel_messages"] / r["kernel_budget"] for r in rows)
    worst_depth = max(r["kernel_depth"] / r["depth_budget"] for r in rows)
    report(record_property, 2, not over_msgs and not over_depth,
           f"messages over cap on {len(over_msgs)} runs (worst {worst:.3f} of cap), "
           f"depth over cap on {len(over_depth)} runs (worst {worst_depth:.3f} of cap)")


def test_c3_diameter_ratio(record_property):
    rows, _ = kernel_batch()
    bad = [r for r in rows if r["diameter_ratio"] < (1 - r["eps"]) * (1 - 1e-9)]
    slack = min(r["diameter_ratio"] - (1 - r["eps"]) for r in rows)
    report(record_property, 3, not bad,
           f"ratio >= 1 - eps on {len(rows) - len(bad)}/{len(rows)} runs (min slack {slack:.4f})")


def test_c4_hull_guarantee(record_property):
    rows, _ = kernel_batch()
    bad = [r for r in rows if r["hull_gap"] > r["eps"] * r["diameter"] * (1 + 1e-9)]
    worst = max(r["hull_gap"] / (r["eps"] * r["diameter"]) for r in rows)
    # the bound line rounding does give: (D/2) tan(delta/2)
    additive = sum(r["hull_gap"] <= r["diameter"] / 2 * math.tan(math.sqrt(2 * r["eps"]) / 2) * (1 + 1e-9)
                   for r in rows)
    report(record_property, 4, not bad,
           f"max distance to hull <= eps*diam on {len(rows) - len(bad)}/{len(rows)} runs "
           f"(worst {worst:.3f} of the allowance); within (D/2)tan(delta/2) on {additive}/{len(rows)}")


def test_c5_closest_pair(record_property):
    guarantee_bad, message_bad, runs = [], [], 0
    worst_msgs = 0.0
    fixed_k = 0
    for n in SIZES:
        ks = [None] * INSTANCES + [k for k in (4, 16, 64) if k <= n - 1]
        for i, k in enumerate(ks):
            net = make_network(n, TOPOLOGY, c=2.0, seed=10_000 + i)
            res = audited(run_closest_pair(net, k), net)
            runs += 1
            fixed_k += k is not None
            cells = res.params["grid"].count
            if k is not None and cells != k:
                guarantee_bad.append((n, i, "cells", cells))
            d = res.answer.distance
            exact = closest_pair_oracle(net.positions)[2]
            cap = math.sqrt(2) * net.grid_side / math.sqrt(cells)
            if not (exact - 1e-9 <= d <= cap + 1e-9):
                guarantee_bad.append((n, i, d, exact, cap))
            msgs = res.algorithm_messages
            budget = closest_message_budget(n, cells)
            worst_msgs = max(worst_msgs, msgs / budget)
            if msgs > budget:
                message_bad.append((n, i, msgs, budget))
    ok = not guarantee_bad and not message_bad
    report(record_property, 5, ok,
           f"distance guarantee held on {runs - len(guarantee_bad)}/{runs} runs ({fixed_k} with fixed k); "
           f"search messages within n(ceil(lg cells)+3)+3n on {runs - len(message_bad)}/{runs} "
           f"(worst {worst_msgs:.3f} of cap)")


def test_c6_gadget_claims(record_property):
    t0 = time.perf_counter()
    held = total = 0
    failures = []
    vecs = list(itertools.product((0, 1), repeat=4))
    rng = random.Random("acceptance/gadgets")
    for kind in GadgetKind:
        pairs = list(itertools.product(vecs, vecs))
        for N in (8, 16, 32):
            pairs += [([rng.randint(0, 1) for _ in range(N)], [rng.randint(0, 1) for _ in range(N)])
                      for _ in range(100)]
        for a, b in pairs:
            total += 1
            if verify_gadget(generate(kind, a, b)).claim_holds:
                held += 1
            else:
                failures.append((kind.value, a, b))
    seconds = time.perf_counter() - t0
    failed = sorted({f"{kind}@N={len(a)}" for kind, a, _ in failures})
    report(record_property, 6, held == total and seconds < 120,
           f"{held}/{total} gadget claims hold over {len(GadgetKind)} kinds in {seconds:.1f}s (< 120s)"
           + (f"; failures at {', '.join(failed)}" if failed else ""))


def test_c7_pivot_load(record_property):
    m, N, seeds = 16, 64, 1000
    proto = TrivialDisjointness()
    rng = random.Random("acceptance/pivot")
    budget = path_network(m).budget
    totals, payloads, framing = [], [], []
    wrong = over = 0
    for s in range(seeds):
        x = [rng.randint(0, 1) for _ in range(N)]
        y = [rng.randint(0, 1) for _ in range(N)]
        if s % 2:
            y = [q & (1 - p) for p, q in zip(x, y)]  # force a disjoint instance
        out = run_path_pivot_protocol(m, proto, x, y, seed=s)
        truth = not any(p and q for p, q in zip(x, y))
        wrong += out.answer != truth
        over += out.ledger.max_message_bits > budget
        AUDIT["runs"] += 1
        AUDIT["messages"] += out.ledger.total_messages
        AUDIT["over"] += out.ledger.max_message_bits > budget
        edge = max(range(m), key=lambda e: out.edge_bits[e])
        totals.append(out.edge_bits[edge])
        payloads.append(out.edge_payload_bits[edge])
        framing.append(out.edge_bits[edge] - out.edge_payload_bits[edge])
    mean_total = sum(totals) / seeds
    mean_framing = sum(framing) / seeds
    lg = math.ceil(math.log2(m))
    target = (N + 1) / m + lg + mean_framing
    ok = not wrong and not over and mean_total <= 1.1 * target
    report(record_property, 7, ok,
           f"answers correct on {seeds - wrong}/{seeds} seeds; mean max-edge bits {mean_total:.2f} "
           f"(payload {sum(payloads) / seeds:.2f}, framing {mean_framing:.2f}) vs "
           f"(N+1)/m + ceil(lg m) + framing = {target:.2f}, allowed {1.1 * target:.2f}")


def test_c8_determinism_and_budget(record_property):
    mismatches = 0
    checked = 0
    for n in SIZES:
        for i in range(3):
            net = make_network(n, TOPOLOGY, seed=i)
            for policy in (None, RandomDelay(i, 8)):
                for run_fn, param in ((run_eps_kernel, 0.1), (run_eps_diameter, 0.1),
                                      (run_eps_hull, 0.1), (run_closest_pair, None)):
                    a = audited(run_fn(net, param, policy, i), net)
                    b = audited(run_fn(net, param, policy, i), net)
                    checked += 1
                    same = (dump_trace(a.trace) == dump_trace(b.trace)
                            and a.ledger.to_flat() == b.ledger.to_flat())
                    mismatches += not same
    report(record_property, 8, mismatches == 0 and AUDIT["over"] == 0,
           f"{checked - mismatches}/{checked} reruns byte-identical; {AUDIT['over']} of "
           f"{AUDIT['messages']} messages over budget across {AUDIT['runs']} audited runs")


def test_c9_schedule_confluence(record_property):
    algos = ((run_eps_kernel, 0.1), (run_eps_diameter, 0.1), (run_eps_hull, 0.1), (run_closest_pair, None))
    differing = []
    checked = 0
    for i in range(20):
        net = make_network(50, TOPOLOGY, seed=20_000 + i)
        for run_fn, param in algos:
            base = audited(run_fn(net, param), net).answer
            for s in range(10):
                res = audited(run_fn(net, param, RandomDelay(s, 8), s), net)
                checked += 1
                if res.answer != base:
                    differing.append((i, run_fn.__name__, s))
    report(record_property, 9, not differing,
           f"{checked - len(differing)}/{checked} randomized schedules matched the restricted answer "
           f"(20 instances x 4 algorithms x 10 seeds)")
