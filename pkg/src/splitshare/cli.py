"""Command-line front end: scenario I/O, solvers, simulation, comparison
tables and sweep experiments.

Exit codes: 0 success, 1 input/validation error, 2 infeasibility,
3 enumeration guard exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from importlib import resources
from typing import List, Optional

from . import __version__
from .errors import (PlacementInfeasible, SearchSpaceTooLarge,
                     SplitShareError)
from .instance_gen import GenParams, generate
from .placement import (Placement, brute_force_place, centralized_place,
                        greedy_place, placed_memory_per_device,
                        placed_memory_total, replicate_leftover)
from .routing import analytic_latency, make_capacity_counters, route_request
from .scenario import Request, Scenario, emit_scenario, parse_scenario, \
    validate_scenario
from .sharing import (build_shared_catalog, memory_accounting,
                      render_memory_csv, render_memory_table, unshare)
from .simengine import (SimOptions, render_gantt, render_timeline_csv,
                        route_trace, run_trace)
from .routing import trace_objective

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_GUARD = 3

SCENARIO_DIR_ENV = "SPLITSHARE_SCENARIO_DIR"


def _resolve_scenario_path(name: str) -> str:
    if os.path.exists(name):
        return name
    env_dir = os.environ.get(SCENARIO_DIR_ENV)
    if env_dir:
        candidate = os.path.join(env_dir, name)
        if os.path.exists(candidate):
            return candidate
    bundled = resources.files("splitshare") / "scenarios" / name
    if bundled.is_file():
        return str(bundled)
    raise FileNotFoundError(name)


def load_scenario(name: str) -> Scenario:
    with open(_resolve_scenario_path(name)) as f:
        return parse_scenario(f.read())


def _load_placement(s: Scenario, path: str) -> Placement:
    with open(path) as f:
        doc = json.load(f)
    by_key = {}
    for m in s.modules:
        by_key.setdefault(m.function_key, m)
    residual = {d.device_id: d.memory_capacity for d in s.devices}
    assign = {}
    for fk, devs in doc["assign"].items():
        assign[fk] = tuple(devs)
        for dev in devs:
            residual[dev] -= by_key[fk].memory_req
    return Placement(assign=assign, residual_memory=residual)


def _emit_rows(rows: List[dict], fmt: str, out) -> None:
    if not rows:
        return
    if fmt == "json":
        json.dump(rows, out, indent=2)
        out.write("\n")
        return
    header = list(rows[0].keys())
    if fmt == "csv":
        w = csv.DictWriter(out, fieldnames=header)
        w.writeheader()
        w.writerows(rows)
        return
    cells = [header] + [[str(r[h]) for h in header] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    for row in cells:
        out.write("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
                  + "\n")


def _fmt_params(n: int) -> str:
    if n >= 1_000_000_000:
        return f"{n / 1e9:.1f}B"
    return f"{round(n / 1e6)}M"


# ---------------------------------------------------------------------------
# Subcommands

def cmd_validate(args) -> int:
    try:
        s = load_scenario(args.scenario)
    except SplitShareError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    violations = validate_scenario(s)
    for v in violations:
        print(f"{v.kind}({v.subject}): {v.message}")
    if not violations:
        print(f"ok: {len(s.devices)} devices, {len(s.modules)} modules, "
              f"{len(s.models)} models, {len(s.trace)} requests")
    return EXIT_OK if not violations else EXIT_INPUT


def cmd_place(args) -> int:
    s = load_scenario(args.scenario)
    catalog = build_shared_catalog(s)
    if args.upper:
        try:
            p, obj = brute_force_place(s, catalog, list(s.trace))
        except SearchSpaceTooLarge as e:
            print(f"guard exceeded: {e}", file=sys.stderr)
            return EXIT_GUARD
        except PlacementInfeasible as e:
            print(f"infeasible: {e}", file=sys.stderr)
            return EXIT_INFEASIBLE
        print(f"brute-force objective: {obj:.6f} s")
    else:
        try:
            p, trace = greedy_place(s, catalog)
        except PlacementInfeasible as e:
            print(f"infeasible module: {e.function_key}", file=sys.stderr)
            return EXIT_INFEASIBLE
        if args.replicate:
            p = replicate_leftover(s, p, catalog)
        print(trace.render(), end="")
    if args.format == "json":
        print(json.dumps({"assign": p.to_json_dict()}, indent=2))
    else:
        for fk, devs in p.assign.items():
            print(f"{fk} -> {', '.join(devs)}")
    if args.out:
        with open(args.out, "w") as f:
            json.dump({"assign": p.to_json_dict()}, f, indent=2)
        print(f"placement written to {args.out}")
    return EXIT_OK


def _placement_for(s: Scenario, args) -> Placement:
    if getattr(args, "placement", None):
        return _load_placement(s, args.placement)
    p, _ = greedy_place(s, build_shared_catalog(s))
    return p


def cmd_route(args) -> int:
    s = load_scenario(args.scenario)
    try:
        p = _placement_for(s, args)
    except PlacementInfeasible as e:
        print(f"infeasible module: {e.function_key}", file=sys.stderr)
        return EXIT_INFEASIBLE
    counters = make_capacity_counters(s)
    rows = []
    for q in s.trace:
        r = route_request(q, p, s, counters)
        b = analytic_latency(q, r, s)
        rows.append({
            "request": q.request_id,
            "routes": "; ".join(f"{mod}->{dev}" for mod, dev
                                in sorted(r.encoder_route.items()))
            + f"; head->{r.head_device}",
            "t_enc": f"{b.t_enc:.6f}", "t_head": f"{b.t_head:.6f}",
            "t_total": f"{b.t_total:.6f}"})
    _emit_rows(rows, args.format, sys.stdout)
    return EXIT_OK


def cmd_simulate(args) -> int:
    s = load_scenario(args.scenario)
    if args.no_share:
        s = unshare(s)
    try:
        p = _placement_for(s, args)
    except PlacementInfeasible as e:
        print(f"infeasible module: {e.function_key}", file=sys.stderr)
        return EXIT_INFEASIBLE
    opts = SimOptions(parallel_encoders=not args.sequential,
                      admission=args.admission,
                      end_to_end=args.end_to_end)
    results = []
    for rep in range(max(args.repeat, 1)):
        if rep == 0:
            s_run = s
        else:
            rng = random.Random(args.seed + rep)
            jitter = [Request(q.request_id, q.model_id, q.source_device,
                              q.arrival_time + rng.uniform(0.0, args.jitter))
                      for q in s.trace]
            s_run = Scenario(devices=s.devices, modules=s.modules,
                             models=s.models, compute=s.compute,
                             network=s.network, trace=tuple(jitter),
                             capacity=s.capacity, notes=s.notes)
        results.append(run_trace(s_run, p, opts))
    res = results[0]
    rows = [{"request": rid,
             "t_enc": f"{m.t_enc:.6f}", "t_head": f"{m.t_head:.6f}",
             "t_total": f"{m.t_total:.6f}",
             "queue_wait": f"{m.queue_wait:.6f}"}
            for rid, m in res.per_request.items()]
    _emit_rows(rows, args.format, sys.stdout)
    lat_means = [
        (sum(m.t_total for m in r.per_request.values())
         / len(r.per_request)) if r.per_request else 0.0
        for r in results]
    print(f"mean latency: {sum(lat_means) / len(lat_means):.6f} s "
          f"({len(results)} run(s))")
    print(f"makespan: {res.makespan:.6f} s")
    report = memory_accounting(s, build_shared_catalog(s))
    placed = placed_memory_per_device(s, p)
    print(f"placed memory: total {placed_memory_total(s, p)} "
          f"(max single device "
          f"{max(placed.values()) if placed else 0})")
    if args.format == "csv":
        print(render_memory_csv(report, s), end="")
    else:
        print(render_memory_table(report, s), end="")
    if args.timeline:
        if args.format == "csv":
            print(render_timeline_csv(res), end="")
        else:
            print(render_gantt(res, s), end="")
    return EXIT_OK


def _restrict_to_model(s: Scenario, model_id: str,
                       requester: str) -> Scenario:
    k = s.model(model_id)
    keep_ids = set(k.encoder_ids) | {k.head_id}
    modules = tuple(m for m in s.modules if m.module_id in keep_ids)
    keys = {m.function_key for m in modules}
    compute = type(s.compute)(
        {kd: e for kd, e in s.compute.entries.items() if kd[0] in keys})
    trace = (Request(request_id=f"probe-{model_id}", model_id=model_id,
                     source_device=requester, arrival_time=0.0),)
    return Scenario(devices=s.devices, modules=modules, models=(k,),
                    compute=compute, network=s.network, trace=trace,
                    capacity={kd: v for kd, v in s.capacity.items()
                              if kd[0] in keys})


def _sim_mean(s: Scenario, p: Placement) -> float:
    res = run_trace(s, p, SimOptions())
    vals = [m.t_total for m in res.per_request.values()]
    return sum(vals) / len(vals) if vals else 0.0


def cmd_compare(args) -> int:
    s = load_scenario(args.scenario)
    requester = args.requester or (
        s.trace[0].source_device if s.trace else s.devices[0].device_id)
    cloud = args.cloud or max(
        s.devices, key=lambda d: d.memory_capacity).device_id
    local = args.local or requester

    rows = []
    for k in s.models:
        sub = _restrict_to_model(s, k.model_id, requester)
        mods = sub.model_modules(k.model_id)
        mono = sum(m.memory_req for m in mods)
        worst = max(m.memory_req for m in mods)
        saving = round((1 - worst / mono) * 100) if mono else 0

        def centr(dev: str) -> str:
            cp = centralized_place(sub, dev, share=True)
            if cp is None:
                return "--"
            return f"{_sim_mean(sub, cp):.2f}"

        try:
            gp, _ = greedy_place(sub, build_shared_catalog(sub))
            split_lat = f"{_sim_mean(sub, gp):.2f}"
        except PlacementInfeasible:
            split_lat = "--"
        rows.append({
            "model": k.model_id,
            "centralized_params": _fmt_params(mono),
            "split_params": _fmt_params(worst),
            "saving": f"-{saving}%",
            "cloud_latency": centr(cloud),
            "local_latency": centr(local),
            "split_latency": split_lat})
    _emit_rows(rows, args.format, sys.stdout)
    return EXIT_OK


def _parse_range(text: str, lo_default: int) -> tuple:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return (int(lo), int(hi))
    v = int(text)
    return (v, v)


def cmd_sweep(args) -> int:
    params_base = dict(
        n_devices=_parse_range(args.devices, 3),
        n_models=_parse_range(args.models, 1),
        encoders_per_model=_parse_range(args.encoders, 1),
        heterogeneity=(args.het_lo, args.het_hi),
        share_probability=args.share_prob,
        n_requests=_parse_range(args.requests, 1),
        comm_scale=args.comm_scale)
    rows = []
    optimal = 0
    evaluated = 0
    skipped = 0
    for i in range(args.seeds):
        seed = args.seed + i
        s = generate(GenParams(seed=seed, **params_base))
        if args.emit:
            path = os.path.join(args.emit, f"instance-{seed}.json")
            with open(path, "w") as f:
                f.write(emit_scenario(s))
        catalog = build_shared_catalog(s)
        gp, _ = greedy_place(s, catalog)
        greedy_obj = trace_objective(s, gp, s.trace)
        try:
            _, brute_obj = brute_force_place(s, catalog, list(s.trace))
        except SearchSpaceTooLarge:
            skipped += 1
            rows.append({"seed": seed, "greedy": f"{greedy_obj:.6f}",
                         "brute": "skipped", "gap": ""})
            continue
        evaluated += 1
        gap = greedy_obj - brute_obj
        if gap <= 1e-9:
            optimal += 1
        rows.append({"seed": seed, "greedy": f"{greedy_obj:.6f}",
                     "brute": f"{brute_obj:.6f}", "gap": f"{gap:.6f}"})
    _emit_rows(rows, args.format, sys.stdout)
    if evaluated:
        rate = optimal / evaluated
        print(f"optimality rate: {optimal}/{evaluated} = {rate:.3f} "
              f"({skipped} skipped by guard)")
        gaps = [float(r["gap"]) for r in rows if r["gap"]]
        hist = _gap_histogram(gaps)
        for line in hist:
            print(line)
    return EXIT_OK


def _gap_histogram(gaps, bins: int = 8) -> List[str]:
    if not gaps:
        return []
    top = max(gaps)
    if top <= 0:
        return ["gap histogram: all zero"]
    width = top / bins
    out = ["gap histogram:"]
    for b in range(bins):
        lo, hi = b * width, (b + 1) * width
        n = sum(1 for g in gaps if lo <= g < hi or (b == bins - 1 and g == top))
        out.append(f"  [{lo:.4f}, {hi:.4f}): {'#' * n} {n}")
    return out


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="splitshare",
        description="Plan and evaluate split-and-share module deployments "
                    "over heterogeneous edge devices.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--format", choices=["table", "csv", "json"],
                       default="table")

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    add_common(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("place", help="compute a module placement")
    p.add_argument("scenario")
    p.add_argument("--upper", action="store_true",
                   help="brute-force optimal instead of greedy")
    p.add_argument("--replicate", action="store_true",
                   help="spend leftover memory on replicas")
    p.add_argument("--out", help="write placement JSON here")
    add_common(p)
    p.set_defaults(fn=cmd_place)

    p = sub.add_parser("route", help="route the trace over a placement")
    p.add_argument("scenario")
    p.add_argument("--placement", help="placement JSON (default: greedy)")
    add_common(p)
    p.set_defaults(fn=cmd_route)

    p = sub.add_parser("simulate", help="simulate the request trace")
    p.add_argument("scenario")
    p.add_argument("--placement", help="placement JSON (default: greedy)")
    p.add_argument("--share", dest="no_share", action="store_false",
                   default=False, help="shared modules (default)")
    p.add_argument("--no-share", dest="no_share", action="store_true",
                   help="dedicated module copies per model")
    p.add_argument("--sequential", action="store_true",
                   help="disable per-request parallel encoding")
    p.add_argument("--admission", choices=["fine", "coarse", "serial"],
                   default="fine")
    p.add_argument("--end-to-end", action="store_true",
                   help="charge module load times")
    p.add_argument("--timeline", action="store_true",
                   help="print the event timeline")
    p.add_argument("--repeat", type=int, default=1,
                   help="rerun with arrival jitter, report mean")
    p.add_argument("--jitter", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    add_common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare",
                       help="per-model memory/latency comparison table")
    p.add_argument("scenario")
    p.add_argument("--cloud", help="cloud device id")
    p.add_argument("--local", help="local device id")
    p.add_argument("--requester", help="request source device id")
    add_common(p)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("sweep",
                       help="greedy vs brute-force over random instances")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--devices", default="3..5")
    p.add_argument("--models", default="1..2")
    p.add_argument("--encoders", default="1..3")
    p.add_argument("--het-lo", type=float, default=10.0)
    p.add_argument("--het-hi", type=float, default=20.0)
    p.add_argument("--share-prob", type=float, default=0.5)
    p.add_argument("--requests", default="1..4")
    p.add_argument("--comm-scale", type=float, default=1.0)
    p.add_argument("--emit", help="directory for generated scenario files")
    add_common(p)
    p.set_defaults(fn=cmd_sweep)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SearchSpaceTooLarge as e:
        print(f"guard exceeded: {e}", file=sys.stderr)
        return EXIT_GUARD
    except PlacementInfeasible as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SplitShareError, FileNotFoundError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
