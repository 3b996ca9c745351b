"""Discrete-event simulation of a request trace over a placement.

Models device compute slots with FIFO queuing, source-uplink serialization
with longest-encoding-first send ordering, per-request parallel encoding,
and inter-request pipelining. Single-threaded deterministic event loop;
logical parallelism is simulated time.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .errors import RouteInvalid
from .netcost import transfer_time
from .placement import (Placement, centralized_place, greedy_place,
                        placed_memory_per_device, placed_memory_total)
from .routing import Route, make_capacity_counters, route_request
from .scenario import Request, Scenario

SEND_START = "SendStart"
SEND_END = "SendEnd"
ENCODE_START = "EncodeStart"
ENCODE_END = "EncodeEnd"
FORWARD_START = "ForwardStart"
FORWARD_END = "ForwardEnd"
HEAD_START = "HeadStart"
HEAD_END = "HeadEnd"

_KIND_RANK = {k: i for i, k in enumerate(
    [SEND_START, SEND_END, ENCODE_START, ENCODE_END,
     FORWARD_START, FORWARD_END, HEAD_START, HEAD_END])}


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    request_id: str
    function_key: str
    device_id: str


@dataclass(frozen=True)
class RequestMetrics:
    t_enc: float  # all encoder outputs at the head device, since arrival
    t_head: float  # head queue wait + head compute
    t_total: float  # completion - arrival
    queue_wait: float  # total time spent waiting for compute slots


@dataclass(frozen=True)
class SimOptions:
    parallel_encoders: bool = True
    # "fine": admit each request at its arrival (pipelining);
    # "coarse": gate on the previous request's encoders all finishing;
    # "serial": strict one-request-at-a-time execution
    admission: str = "fine"
    end_to_end: bool = False  # charge module load times at start


@dataclass(frozen=True)
class SimResult:
    timeline: Tuple[Event, ...]
    per_request: Dict[str, RequestMetrics]
    makespan: float
    utilization: Dict[Tuple[str, str], float]  # (function_key, device)
    mean_queue_len: Dict[Tuple[str, str], float]


class _Job:
    __slots__ = ("ready", "req_order", "fk", "rank", "seq", "duration",
                 "on_start", "on_end")

    def __init__(self, ready, req_order, fk, rank, seq, duration,
                 on_start, on_end):
        self.ready = ready
        self.req_order = req_order
        self.fk = fk
        self.rank = rank
        self.seq = seq
        self.duration = duration
        self.on_start = on_start
        self.on_end = on_end

    def key(self):
        return (self.ready, self.req_order, self.rank, self.fk, self.seq)


class _Resource:
    """FIFO multi-slot resource: jobs start in (ready, request, rank) order."""

    def __init__(self, slots: int):
        self.slots = slots
        self.busy = 0
        self.wait: List[Tuple[tuple, _Job]] = []

    def enqueue(self, job: _Job):
        heapq.heappush(self.wait, (job.key(), job))

    def dispatch(self, now: float, engine: "_Engine"):
        while self.busy < self.slots and self.wait:
            _, job = heapq.heappop(self.wait)
            self.busy += 1
            if job.on_start:
                job.on_start(now)
            end = now + job.duration

            def finish(t, job=job):
                self.busy -= 1
                if job.on_end:
                    job.on_end(t)
                self.dispatch(t, engine)

            engine.push(end, 0, job.req_order, finish)


class _Engine:
    def __init__(self):
        self.heap: List[tuple] = []
        self.seq = 0

    def push(self, time: float, phase: int, req_order: int,
             fn: Callable[[float], None]):
        self.seq += 1
        heapq.heappush(self.heap, (time, phase, req_order, self.seq, fn))

    def run(self):
        while self.heap:
            time, _, _, _, fn = heapq.heappop(self.heap)
            fn(time)


@dataclass
class _ReqState:
    q: Request
    order: int
    route: Route
    encoders: List[Tuple[object, str]]  # (ModuleSpec, device)
    pending_outputs: int = 0
    head_ready: float = 0.0
    head_start: float = 0.0
    head_end: float = 0.0
    queue_wait: float = 0.0
    last_encode_end: float = 0.0
    encodes_left: int = 0


def simulate(s: Scenario, p: Placement, routes: Dict[str, Route],
             opts: SimOptions = SimOptions()) -> SimResult:
    """Event-driven execution of s.trace over placement p with the given
    per-request routes. Deterministic given its inputs."""
    if opts.admission not in ("fine", "coarse", "serial"):
        raise ValueError(f"unknown admission mode '{opts.admission}'")
    dev_pos = {d.device_id: i for i, d in enumerate(s.devices)}
    events: List[Event] = []

    def record(time, kind, rid, fk, dev):
        events.append(Event(time, kind, rid, fk, dev))

    # validate routes against the placement
    states: List[_ReqState] = []
    order = sorted(range(len(s.trace)),
                   key=lambda i: (s.trace[i].arrival_time, i))
    for rank, i in enumerate(order):
        q = s.trace[i]
        route = routes.get(q.request_id)
        if route is None:
            raise RouteInvalid(f"no route for request '{q.request_id}'")
        model = s.model(q.model_id)
        encs = []
        for mid in model.encoder_ids:
            m = s.module(mid)
            dev = route.encoder_route.get(m.modality)
            if dev is None or dev not in p.hosts(m.function_key):
                raise RouteInvalid(
                    f"request '{q.request_id}': module '{m.function_key}' "
                    f"routed to a non-hosting device")
            if s.compute.get(m.function_key, dev) is None:
                raise RouteInvalid(
                    f"request '{q.request_id}': device '{dev}' cannot "
                    f"execute '{m.function_key}'")
            encs.append((m, dev))
        head = s.module(model.head_id)
        if route.head_device not in p.hosts(head.function_key) or \
                s.compute.get(head.function_key, route.head_device) is None:
            raise RouteInvalid(
                f"request '{q.request_id}': head routed to a non-hosting "
                f"device")
        states.append(_ReqState(q=q, order=rank, route=route, encoders=encs,
                                pending_outputs=len(encs),
                                encodes_left=len(encs)))

    # module load, charged once per (module, device) at time 0
    load_ready: Dict[str, float] = {d.device_id: 0.0 for d in s.devices}
    if opts.end_to_end:
        for fk, devs in p.assign.items():
            for dev in devs:
                entry = s.compute.get(fk, dev)
                if entry is not None:
                    load_ready[dev] += entry.load_time

    engine = _Engine()
    devres: Dict[str, _Resource] = {
        d.device_id: _Resource(d.compute_slots) for d in s.devices}
    uplinks: Dict[str, _Resource] = {
        d.device_id: _Resource(1) for d in s.devices if d.uplink_serialized}

    busy_time: Dict[Tuple[str, str], float] = {}
    wait_time: Dict[Tuple[str, str], float] = {}

    def enqueue_compute(st: _ReqState, fk: str, dev: str, ready: float,
                        duration: float, start_kind: str, end_kind: str,
                        on_done):
        ready = max(ready, load_ready[dev])

        def on_start(t):
            st.queue_wait += t - ready
            wait_time[(fk, dev)] = wait_time.get((fk, dev), 0.0) \
                + (t - ready)
            if start_kind == HEAD_START:
                st.head_start = t
            record(t, start_kind, st.q.request_id, fk, dev)

        def on_end(t):
            busy_time[(fk, dev)] = busy_time.get((fk, dev), 0.0) + duration
            record(t, end_kind, st.q.request_id, fk, dev)
            on_done(t)

        job = _Job(ready, st.order, fk, 0, engine.seq, duration,
                   on_start, on_end)

        def arrive(t):
            devres[dev].enqueue(job)
            devres[dev].dispatch(t, engine)

        engine.push(ready, 1, st.order, arrive)

    def output_available(st: _ReqState, t: float):
        st.pending_outputs -= 1
        st.head_ready = max(st.head_ready, t)
        if st.pending_outputs == 0:
            head = s.module(s.model(st.q.model_id).head_id)
            entry = s.compute.get(head.function_key, st.route.head_device)
            enqueue_compute(
                st, head.function_key, st.route.head_device, st.head_ready,
                entry.comp_time, HEAD_START, HEAD_END,
                lambda tt: finish_request(st, tt))

    def finish_request(st: _ReqState, t: float):
        st.head_end = t
        if opts.admission == "serial" and st.order + 1 < len(states):
            nxt = states[st.order + 1]
            admit(nxt, max(nxt.q.arrival_time, t))

    def encode_done(st: _ReqState, m, dev: str, t: float, chain_next):
        st.last_encode_end = max(st.last_encode_end, t)
        st.encodes_left -= 1
        if opts.admission == "coarse" and st.encodes_left == 0 \
                and st.order + 1 < len(states):
            nxt = states[st.order + 1]
            admit(nxt, max(nxt.q.arrival_time, t))
        hd = st.route.head_device
        if dev == hd:
            output_available(st, t)
        else:
            dur = transfer_time(s.network, dev, hd, m.output_size)
            record(t, FORWARD_START, st.q.request_id, m.function_key, dev)

            def arrive(tt):
                record(tt, FORWARD_END, st.q.request_id, m.function_key, hd)
                output_available(st, tt)

            engine.push(t + dur, 1, st.order, arrive)
        if chain_next is not None:
            chain_next(t)

    def launch_encoder(st: _ReqState, idx: int, send_ready: float,
                       rank: int, chain: bool):
        m, dev = st.encoders[idx]
        src = st.q.source_device
        entry = s.compute.get(m.function_key, dev)
        chain_next = None
        if chain and idx + 1 < len(st.encoders):
            chain_next = lambda t: launch_encoder(st, idx + 1, t,
                                                  rank + 1, chain)

        def input_at(t):
            enqueue_compute(
                st, m.function_key, dev, t, entry.comp_time,
                ENCODE_START, ENCODE_END,
                lambda tt: encode_done(st, m, dev, tt, chain_next))

        if dev == src:
            input_at(send_ready)
            return
        dur = transfer_time(s.network, src, dev, m.input_size)
        if src in uplinks:
            def on_start(t):
                record(t, SEND_START, st.q.request_id, m.function_key, src)

            def on_end(t):
                record(t, SEND_END, st.q.request_id, m.function_key, dev)
                input_at(t)

            job = _Job(send_ready, st.order, m.function_key, rank,
                       engine.seq, dur, on_start, on_end)

            def arrive(t):
                uplinks[src].enqueue(job)
                uplinks[src].dispatch(t, engine)

            engine.push(send_ready, 1, st.order, arrive)
        else:
            record(send_ready, SEND_START, st.q.request_id,
                   m.function_key, src)

            def arrive(t):
                record(t, SEND_END, st.q.request_id, m.function_key, dev)
                input_at(t)

            engine.push(send_ready + dur, 1, st.order, arrive)

    def admit(st: _ReqState, t0: float):
        if opts.parallel_encoders:
            # serialized sends go longest destination encoding first
            ranked = sorted(
                range(len(st.encoders)),
                key=lambda i: (-s.compute.get(
                    st.encoders[i][0].function_key,
                    st.encoders[i][1]).comp_time, i))
            for rank, idx in enumerate(ranked):
                launch_encoder(st, idx, t0, rank, chain=False)
        else:
            launch_encoder(st, 0, t0, 0, chain=True)

    if states:
        if opts.admission == "fine":
            for st in states:
                engine.push(st.q.arrival_time, 1, st.order,
                            lambda t, st=st: admit(st, t))
        else:
            st = states[0]
            engine.push(st.q.arrival_time, 1, st.order,
                        lambda t, st=st: admit(st, t))
    engine.run()

    per_request = {}
    for st in states:
        arrival = st.q.arrival_time
        per_request[st.q.request_id] = RequestMetrics(
            t_enc=st.head_ready - arrival,
            t_head=st.head_end - st.head_ready,
            t_total=st.head_end - arrival,
            queue_wait=st.queue_wait)
    if states:
        first = min(st.q.arrival_time for st in states)
        last = max(st.head_end for st in states)
        makespan = last - first
        horizon = makespan if makespan > 0 else 1.0
    else:
        makespan = 0.0
        horizon = 1.0
    utilization = {k: v / horizon for k, v in sorted(busy_time.items())}
    mean_queue_len = {k: v / horizon for k, v in sorted(wait_time.items())}
    req_order = {st.q.request_id: st.order for st in states}
    events.sort(key=lambda e: (e.time, req_order[e.request_id],
                               e.function_key, dev_pos[e.device_id],
                               _KIND_RANK[e.kind]))
    return SimResult(timeline=tuple(events), per_request=per_request,
                     makespan=makespan, utilization=utilization,
                     mean_queue_len=mean_queue_len)


# ---------------------------------------------------------------------------
# Trace helpers and mode comparison

def route_trace(s: Scenario, p: Placement) -> Dict[str, Route]:
    counters = make_capacity_counters(s)
    return {q.request_id: route_request(q, p, s, counters)
            for q in s.trace}


def run_trace(s: Scenario, p: Placement,
              opts: SimOptions = SimOptions()) -> SimResult:
    return simulate(s, p, route_trace(s, p), opts)


@dataclass(frozen=True)
class ModeResult:
    mode: str
    feasible: bool
    mean_latency: float = 0.0
    makespan: float = 0.0
    max_device_memory: int = 0
    total_memory: int = 0


@dataclass(frozen=True)
class ComparisonReport:
    rows: Tuple[ModeResult, ...]

    def row(self, mode: str) -> ModeResult:
        for r in self.rows:
            if r.mode == mode:
                return r
        raise KeyError(mode)


def _mode_result(name: str, s: Scenario, p: Placement,
                 opts: SimOptions) -> ModeResult:
    res = run_trace(s, p, opts)
    lats = [m.t_total for m in res.per_request.values()]
    per_dev = placed_memory_per_device(s, p)
    return ModeResult(
        mode=name, feasible=True,
        mean_latency=sum(lats) / len(lats) if lats else 0.0,
        makespan=res.makespan,
        max_device_memory=max(per_dev.values()) if per_dev else 0,
        total_memory=placed_memory_total(s, p))


def compare_modes(s: Scenario, p: Placement) -> ComparisonReport:
    """Run the trace under parallel, sequential-encoding, per-device
    centralized and no-share deployments; infeasible modes get '--' rows."""
    from .sharing import unshare
    rows = [
        _mode_result("split-parallel", s, p, SimOptions()),
        _mode_result("split-sequential", s, p,
                     SimOptions(parallel_encoders=False)),
    ]
    for d in s.devices:
        name = f"centralized:{d.device_id}"
        cp = centralized_place(s, d.device_id, share=True)
        if cp is None:
            rows.append(ModeResult(mode=name, feasible=False))
        else:
            rows.append(_mode_result(name, s, cp, SimOptions()))
    s2 = unshare(s)
    try:
        p2, _ = greedy_place(s2, _catalog(s2))
        rows.append(_mode_result("no-share", s2, p2, SimOptions()))
    except Exception:
        rows.append(ModeResult(mode="no-share", feasible=False))
    return ComparisonReport(rows=tuple(rows))


def _catalog(s: Scenario):
    from .sharing import build_shared_catalog
    return build_shared_catalog(s)


# ---------------------------------------------------------------------------
# Rendering

def render_timeline_csv(res: SimResult) -> str:
    lines = ["time,kind,request,module,device"]
    for e in res.timeline:
        lines.append(f"{e.time:.9f},{e.kind},{e.request_id},"
                     f"{e.function_key},{e.device_id}")
    return "\n".join(lines) + "\n"


def render_gantt(res: SimResult, s: Scenario, width: int = 72) -> str:
    """Text timeline grouped by device: one line per busy interval."""
    spans = []  # (device, start, end, label)
    open_jobs: Dict[tuple, Event] = {}
    for e in res.timeline:
        if e.kind in (ENCODE_START, HEAD_START, SEND_START, FORWARD_START):
            open_jobs[(e.kind, e.request_id, e.function_key)] = e
    ends = {(SEND_END): SEND_START, (ENCODE_END): ENCODE_START,
            (FORWARD_END): FORWARD_START, (HEAD_END): HEAD_START}
    for e in res.timeline:
        start_kind = ends.get(e.kind)
        if start_kind is None:
            continue
        st = open_jobs.pop((start_kind, e.request_id, e.function_key), None)
        if st is None:
            continue
        phase = start_kind.replace("Start", "").lower()
        spans.append((st.device_id, st.time, e.time,
                      f"{phase} {e.function_key} [{e.request_id}]"))
    if not spans:
        return "(empty timeline)\n"
    t_max = max(end for _, _, end, _ in spans) or 1.0
    lines = []
    for d in s.devices:
        dev_spans = [sp for sp in spans if sp[0] == d.device_id]
        if not dev_spans:
            continue
        lines.append(f"{d.device_id}:")
        for _, a, b, label in sorted(dev_spans, key=lambda x: (x[1], x[3])):
            lo = int(a / t_max * width)
            hi = max(lo + 1, int(b / t_max * width))
            bar = " " * lo + "#" * (hi - lo)
            lines.append(f"  |{bar.ljust(width)}| {a:8.3f}-{b:8.3f}s {label}")
    return "\n".join(lines) + "\n"
