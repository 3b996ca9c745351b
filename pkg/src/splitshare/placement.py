"""Module-to-device placement solvers: greedy by completion time,
brute-force optimal, centralized and no-share baselines, and the optional
replication pass."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import kernels
from .errors import PlacementInfeasible, SearchSpaceTooLarge
from .netcost import comp_time
from .scenario import (ENCODER, ComputeProfile, DeviceSpec, ModuleSpec,
                       Request, Scenario)
from .sharing import SharedCatalog

BRUTE_FORCE_GUARD = 10_000_000


@dataclass
class Placement:
    # function_key -> device_ids hosting a replica, in scenario device order
    assign: Dict[str, Tuple[str, ...]]
    residual_memory: Dict[str, int]

    def hosts(self, function_key: str) -> Tuple[str, ...]:
        return self.assign.get(function_key, ())

    def modules_on(self, device_id: str) -> List[str]:
        return [fk for fk, devs in self.assign.items() if device_id in devs]

    def to_json_dict(self) -> Dict[str, List[str]]:
        return {fk: list(devs) for fk, devs in self.assign.items()}


@dataclass(frozen=True)
class PlacementStep:
    function_key: str
    # feasible-compute devices sorted ascending by completion time
    candidates: Tuple[Tuple[str, float], ...]
    chosen: Optional[str]  # None when infeasible


@dataclass
class PlacementTrace:
    steps: List[PlacementStep] = field(default_factory=list)

    def render(self) -> str:
        out = []
        for i, st in enumerate(self.steps, 1):
            cand = ", ".join(f"{d}={t:.4g}s" for d, t in st.candidates)
            chosen = st.chosen if st.chosen is not None else "<infeasible>"
            out.append(f"step {i}: {st.function_key} -> {chosen}  [{cand}]")
        return "\n".join(out) + ("\n" if out else "")


def _accumulated(placed_on: Sequence[str], device: DeviceSpec,
                 profile: ComputeProfile, heads: set,
                 accumulate_heads: bool) -> float:
    total = 0.0
    for fk in placed_on:
        if not accumulate_heads and fk in heads:
            continue
        entry = profile.get(fk, device.device_id)
        if entry is not None:
            total += entry.comp_time
    return total


def completion_time_encoder(m: ModuleSpec, n: DeviceSpec, partial: Placement,
                            profile: ComputeProfile, *,
                            accumulate_heads: bool = True,
                            head_keys: Optional[set] = None
                            ) -> Optional[float]:
    """Greedy ranking score for an encoder: its compute time plus the
    accumulated compute times of modules already placed on the device.
    None when the device has no compute entry for the module."""
    t = comp_time(m, n, profile)
    if t is None:
        return None
    return t + _accumulated(partial.modules_on(n.device_id), n, profile,
                            head_keys or set(), accumulate_heads)


def completion_time_head(m: ModuleSpec, n: DeviceSpec,
                         profile: ComputeProfile) -> Optional[float]:
    """Heads rank by bare compute time; no accumulation term."""
    return comp_time(m, n, profile)


def _module_order(catalog: SharedCatalog) -> List[ModuleSpec]:
    # descending memory, ties broken by function_key ascending
    return sorted(catalog.distinct_modules,
                  key=lambda m: (-m.memory_req, m.function_key))


def greedy_place(s: Scenario, catalog: SharedCatalog, *,
                 accumulate_heads: bool = True
                 ) -> Tuple[Placement, PlacementTrace]:
    """Place every distinct module on the feasible device with the shortest
    completion time, processing modules in descending memory order."""
    head_keys = {m.function_key for m in catalog.distinct_modules
                 if m.kind != ENCODER}
    placement = Placement(
        assign={},
        residual_memory={d.device_id: d.memory_capacity for d in s.devices})
    trace = PlacementTrace()
    for m in _module_order(catalog):
        candidates: List[Tuple[float, int, str]] = []
        for idx, d in enumerate(s.devices):
            if m.kind == ENCODER:
                t = completion_time_encoder(
                    m, d, placement, s.compute,
                    accumulate_heads=accumulate_heads, head_keys=head_keys)
            else:
                t = completion_time_head(m, d, s.compute)
            if t is not None:
                candidates.append((t, idx, d.device_id))
        candidates.sort()
        chosen = None
        for t, _, dev in candidates:
            if placement.residual_memory[dev] >= m.memory_req:
                chosen = dev
                break
        trace.steps.append(PlacementStep(
            function_key=m.function_key,
            candidates=tuple((dev, t) for t, _, dev in candidates),
            chosen=chosen))
        if chosen is None:
            raise PlacementInfeasible(m.function_key)
        placement.assign[m.function_key] = (chosen,)
        placement.residual_memory[chosen] -= m.memory_req
    return placement, trace


def replicate_leftover(s: Scenario, p: Placement,
                       catalog: Optional[SharedCatalog] = None, *,
                       accumulate_heads: bool = True) -> Placement:
    """Spend leftover memory on replicas, largest modules first; each replica
    lands on the device with the shortest completion time. Disabled by
    default in the solvers; callers opt in."""
    from .sharing import build_shared_catalog
    if catalog is None:
        catalog = build_shared_catalog(s)
    head_keys = {m.function_key for m in catalog.distinct_modules
                 if m.kind != ENCODER}
    dev_pos = {d.device_id: i for i, d in enumerate(s.devices)}
    out = Placement(assign=dict(p.assign),
                    residual_memory=dict(p.residual_memory))
    for m in _module_order(catalog):
        while True:
            candidates: List[Tuple[float, int, str]] = []
            hosts = set(out.hosts(m.function_key))
            for idx, d in enumerate(s.devices):
                if d.device_id in hosts:
                    continue
                if out.residual_memory[d.device_id] < m.memory_req:
                    continue
                if m.kind == ENCODER:
                    t = completion_time_encoder(
                        m, d, out, s.compute,
                        accumulate_heads=accumulate_heads,
                        head_keys=head_keys)
                else:
                    t = completion_time_head(m, d, s.compute)
                if t is not None:
                    candidates.append((t, idx, d.device_id))
            if not candidates:
                break
            candidates.sort()
            _, _, dev = candidates[0]
            devs = sorted(hosts | {dev}, key=lambda x: dev_pos[x])
            out.assign[m.function_key] = tuple(devs)
            out.residual_memory[dev] -= m.memory_req
    return out


def brute_force_place(s: Scenario, catalog: SharedCatalog,
                      request_set: Sequence[Request]
                      ) -> Tuple[Placement, float]:
    """Enumerate every memory- and compute-feasible single-replica placement
    and return one minimizing the total analytic latency over request_set
    under best routing. First-in-enumeration-order wins ties."""
    n_codes = len(s.devices) ** len(catalog.distinct_modules)
    if n_codes > BRUTE_FORCE_GUARD:
        raise SearchSpaceTooLarge(
            f"{n_codes} candidates exceed the {BRUTE_FORCE_GUARD} guard")
    problem = kernels.pack_problem(s, catalog, list(request_set))
    obj, code = kernels.search_best_placement(problem)
    if code < 0 or not math.isfinite(obj):
        raise PlacementInfeasible("<any>", "no feasible placement exists")
    assignment = kernels.decode_assignment(problem, code)
    residual = {d.device_id: d.memory_capacity for d in s.devices}
    assign = {}
    for j, m in enumerate(catalog.distinct_modules):
        dev = s.devices[int(assignment[j])].device_id
        assign[m.function_key] = (dev,)
        residual[dev] -= m.memory_req
    return Placement(assign=assign, residual_memory=residual), obj


def centralized_place(s: Scenario, device: str,
                      share: bool = True) -> Optional[Placement]:
    """All modules on the one device, deduplicated when share is set, one
    copy per model reference otherwise. None when memory or compute
    feasibility fails (Infeasible is a value, not an error)."""
    dev = s.device(device)
    if share:
        from .sharing import build_shared_catalog
        mods = list(build_shared_catalog(s).distinct_modules)
    else:
        mods = [m for k in s.models for m in s.model_modules(k.model_id)]
    needed = sum(m.memory_req for m in mods)
    if needed > dev.memory_capacity:
        return None
    for m in mods:
        if comp_time(m, dev, s.compute) is None:
            return None
    assign = {m.function_key: (device,) for m in mods}
    residual = {d.device_id: d.memory_capacity for d in s.devices}
    residual[device] -= needed
    return Placement(assign=assign, residual_memory=residual)


def placed_memory_total(s: Scenario, p: Placement) -> int:
    """Total parameters resident across all devices (replicas counted)."""
    by_key = {}
    for m in s.modules:
        by_key.setdefault(m.function_key, m)
    return sum(by_key[fk].memory_req * len(devs)
               for fk, devs in p.assign.items())


def placed_memory_per_device(s: Scenario, p: Placement) -> Dict[str, int]:
    by_key = {}
    for m in s.modules:
        by_key.setdefault(m.function_key, m)
    out = {d.device_id: 0 for d in s.devices}
    for fk, devs in p.assign.items():
        for dev in devs:
            out[dev] += by_key[fk].memory_req
    return out
