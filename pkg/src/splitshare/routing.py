"""Per-request routing and the analytic end-to-end latency evaluator, plus
a brute-force routing oracle.

Routing picks, for every required module, the hosting device with the
smallest compute time (ties: scenario device order). The analytic latency
of a routed request is max over encoder paths (input transfer + compute +
output transfer to the head) plus the head compute time.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (CapacityExhausted, ModuleUnplaced, RouteInvalid,
                     SearchSpaceTooLarge)
from .netcost import transfer_time
from .placement import Placement
from .scenario import Request, Scenario

ROUTE_GUARD = 1_000_000


@dataclass(frozen=True)
class Route:
    request_id: str
    encoder_route: Dict[str, str]  # modality -> device_id
    head_device: str


@dataclass(frozen=True)
class EncoderPath:
    modality: str
    device: str
    input_comm: float
    comp: float
    output_comm: float
    path_total: float


@dataclass(frozen=True)
class LatencyBreakdown:
    request_id: str
    encoders: Tuple[EncoderPath, ...]
    t_enc: float  # max over encoder path totals
    t_head: float
    t_total: float  # t_enc + t_head


class EncoderContentionWarning(UserWarning):
    """Two encoders of one request share a device; the analytic max ignores
    the resulting contention (the simulator accounts for it)."""


def make_capacity_counters(s: Scenario) -> Dict[Tuple[str, str], int]:
    """Fresh per-(function_key, device) counters for one evaluation run."""
    return dict(s.capacity)


def route_request(q: Request, p: Placement, s: Scenario,
                  counters: Optional[Dict[Tuple[str, str], int]] = None
                  ) -> Route:
    """Route q to the compute-fastest host of each required module,
    encoders then head. Decrements finite capacity counters in place."""
    if counters is None:
        counters = make_capacity_counters(s)
    model = s.model(q.model_id)
    dev_pos = {d.device_id: i for i, d in enumerate(s.devices)}

    def pick(module) -> str:
        hosts = p.hosts(module.function_key)
        if not hosts:
            raise ModuleUnplaced(
                f"module '{module.function_key}' has no hosting device")
        hostable = [h for h in hosts
                    if s.compute.get(module.function_key, h) is not None]
        if not hostable:
            raise ModuleUnplaced(
                f"no host can execute module '{module.function_key}'")
        usable = [h for h in hostable
                  if counters.get((module.function_key, h), 1) > 0]
        if not usable:
            raise CapacityExhausted(
                f"capacity exhausted for module '{module.function_key}'")
        best = min(usable,
                   key=lambda h: (s.compute.get(module.function_key,
                                                h).comp_time, dev_pos[h]))
        key = (module.function_key, best)
        if key in counters:
            counters[key] -= 1
        return best

    encoder_route = {}
    for mid in model.encoder_ids:
        m = s.module(mid)
        encoder_route[m.modality] = pick(m)
    head_device = pick(s.module(model.head_id))
    return Route(request_id=q.request_id, encoder_route=encoder_route,
                 head_device=head_device)


def _breakdown(q: Request, r: Route, s: Scenario) -> LatencyBreakdown:
    model = s.model(q.model_id)
    paths = []
    for mid in model.encoder_ids:
        m = s.module(mid)
        n = r.encoder_route[m.modality]
        entry = s.compute.get(m.function_key, n)
        if entry is None:
            raise RouteInvalid(
                f"device '{n}' cannot execute module '{m.function_key}'")
        input_comm = transfer_time(s.network, q.source_device, n,
                                   m.input_size)
        output_comm = transfer_time(s.network, n, r.head_device,
                                    m.output_size)
        path = input_comm + entry.comp_time + output_comm
        paths.append(EncoderPath(
            modality=m.modality, device=n, input_comm=input_comm,
            comp=entry.comp_time, output_comm=output_comm, path_total=path))
    head = s.module(model.head_id)
    head_entry = s.compute.get(head.function_key, r.head_device)
    if head_entry is None:
        raise RouteInvalid(
            f"device '{r.head_device}' cannot execute head "
            f"'{head.function_key}'")
    t_enc = max(p.path_total for p in paths)
    t_head = head_entry.comp_time
    return LatencyBreakdown(
        request_id=q.request_id, encoders=tuple(paths),
        t_enc=t_enc, t_head=t_head, t_total=t_enc + t_head)


def analytic_latency(q: Request, r: Route, s: Scenario) -> LatencyBreakdown:
    """End-to-end latency of a routed request under the analytic model.
    Warns (does not fail) when two encoders share a device."""
    devices = list(r.encoder_route.values())
    if len(set(devices)) < len(devices):
        warnings.warn(
            f"request '{q.request_id}': encoders share a device; the "
            f"analytic max ignores contention", EncoderContentionWarning,
            stacklevel=2)
    return _breakdown(q, r, s)


def brute_force_route(q: Request, p: Placement, s: Scenario
                      ) -> Tuple[Route, float]:
    """Jointly enumerate all host choices per required module and return the
    route minimizing analytic total latency (first-in-order wins ties)."""
    model = s.model(q.model_id)
    mods = [s.module(mid) for mid in model.encoder_ids] \
        + [s.module(model.head_id)]
    host_lists: List[Tuple[str, ...]] = []
    space = 1
    for m in mods:
        hosts = p.hosts(m.function_key)
        if not hosts:
            raise ModuleUnplaced(
                f"module '{m.function_key}' has no hosting device")
        host_lists.append(hosts)
        space *= len(hosts)
    if space > ROUTE_GUARD:
        raise SearchSpaceTooLarge(
            f"{space} route combinations exceed the {ROUTE_GUARD} guard")
    best: Optional[Tuple[float, Route]] = None
    for combo in itertools.product(*host_lists):
        route = Route(
            request_id=q.request_id,
            encoder_route={m.modality: dev
                           for m, dev in zip(mods[:-1], combo[:-1])},
            head_device=combo[-1])
        t = _breakdown(q, route, s).t_total
        if best is None or t < best[0]:
            best = (t, route)
    assert best is not None
    return best[1], best[0]


def trace_objective(s: Scenario, p: Placement,
                    requests: Sequence[Request]) -> float:
    """Total analytic latency over requests under greedy per-module routing
    (the objective the brute-force placement search minimizes)."""
    counters = make_capacity_counters(s)
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EncoderContentionWarning)
        for q in requests:
            r = route_request(q, p, s, counters)
            total += analytic_latency(q, r, s).t_total
    return total
