"""Domain types for devices, modules, models, network and request traces,
plus scenario file parsing, emission and validation.

All types are immutable values after construction; parsing and validation
are pure functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import DanglingReferenceError, ScenarioSyntaxError, SchemaError

ENCODER = "encoder"
HEAD = "head"

UNLIMITED = None  # capacity sentinel


@dataclass(frozen=True)
class DeviceSpec:
    device_id: str
    memory_capacity: int  # parameter-count units
    compute_slots: int = 1
    uplink_serialized: bool = True


@dataclass(frozen=True)
class ModuleSpec:
    module_id: str
    function_key: str  # sharing identity: architecture + parameter version
    kind: str  # ENCODER or HEAD
    memory_req: int  # parameter-count units
    output_size: float  # embedding size for encoders, answer size for heads
    input_size: float = 0.0  # raw modality payload; 0 for heads
    modality: Optional[str] = None  # encoders only


@dataclass(frozen=True)
class ComputeEntry:
    comp_time: float  # seconds, > 0
    load_time: float = 0.0  # seconds, >= 0


@dataclass(frozen=True)
class ComputeProfile:
    # absent entry means the device cannot host/execute that module
    entries: Dict[Tuple[str, str], ComputeEntry]  # (function_key, device_id)

    def get(self, function_key: str, device_id: str) -> Optional[ComputeEntry]:
        return self.entries.get((function_key, device_id))


@dataclass(frozen=True)
class Link:
    latency: float  # seconds
    bandwidth: float  # data-units / second, > 0


@dataclass(frozen=True)
class NetworkProfile:
    links: Dict[Tuple[str, str], Link]  # self-links implicitly {0, inf}

    def get(self, from_id: str, to_id: str) -> Optional[Link]:
        if from_id == to_id:
            return Link(0.0, math.inf)
        return self.links.get((from_id, to_id))


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    encoder_ids: Tuple[str, ...]
    head_id: str


@dataclass(frozen=True)
class Request:
    request_id: str
    model_id: str
    source_device: str
    arrival_time: float = 0.0


@dataclass(frozen=True)
class Scenario:
    devices: Tuple[DeviceSpec, ...]
    modules: Tuple[ModuleSpec, ...]
    models: Tuple[ModelSpec, ...]
    compute: ComputeProfile
    network: NetworkProfile
    trace: Tuple[Request, ...] = ()
    # cap on requests routed to (function_key, device) over the whole trace
    capacity: Dict[Tuple[str, str], int] = field(default_factory=dict)
    notes: str = ""

    def device(self, device_id: str) -> DeviceSpec:
        return self._device_index[device_id]

    def module(self, module_id: str) -> ModuleSpec:
        return self._module_index[module_id]

    def model(self, model_id: str) -> ModelSpec:
        return self._model_index[model_id]

    def module_by_key(self, function_key: str) -> ModuleSpec:
        return self._key_index[function_key]

    def model_modules(self, model_id: str) -> List[ModuleSpec]:
        k = self.model(model_id)
        return [self.module(i) for i in k.encoder_ids] + [self.module(k.head_id)]

    @property
    def _device_index(self):
        return {d.device_id: d for d in self.devices}

    @property
    def _module_index(self):
        return {m.module_id: m for m in self.modules}

    @property
    def _model_index(self):
        return {k.model_id: k for k in self.models}

    @property
    def _key_index(self):
        idx = {}
        for m in self.modules:
            idx.setdefault(m.function_key, m)
        return idx


@dataclass(frozen=True)
class Violation:
    kind: str  # e.g. FunctionKeyConflict, DuplicateModality
    subject: str  # offending id
    message: str


# ---------------------------------------------------------------------------
# Parsing

_TOP_KEYS = {"devices", "modules", "models", "compute", "network", "trace",
             "capacity", "notes"}


def _check_fields(obj: dict, required: set, optional: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object, got {type(obj).__name__}")
    missing = required - obj.keys()
    if missing:
        raise SchemaError(f"{where}: missing required field(s) {sorted(missing)}")
    unknown = obj.keys() - required - optional
    if unknown:
        raise SchemaError(f"{where}: unknown field(s) {sorted(unknown)}")


def _num(obj, key, where, default=None):
    v = obj.get(key, default)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise SchemaError(f"{where}: field '{key}' must be a number")
    return v


def parse_scenario(text: str) -> Scenario:
    """Parse a scenario JSON document. Raises ScenarioSyntaxError on malformed
    JSON, SchemaError on schema violations, DanglingReferenceError on ids that
    resolve to nothing. The returned scenario passes validate_scenario."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioSyntaxError(e.msg, line=e.lineno, column=e.colno) from e
    _check_fields(doc, {"devices", "modules", "models", "compute", "network"},
                  _TOP_KEYS, "document")

    devices = []
    for i, d in enumerate(doc["devices"]):
        where = f"devices[{i}]"
        _check_fields(d, {"device_id", "memory_capacity"},
                      {"compute_slots", "uplink_serialized"}, where)
        devices.append(DeviceSpec(
            device_id=str(d["device_id"]),
            memory_capacity=int(_num(d, "memory_capacity", where)),
            compute_slots=int(_num(d, "compute_slots", where, 1)),
            uplink_serialized=bool(d.get("uplink_serialized", True)),
        ))

    modules = []
    for i, m in enumerate(doc["modules"]):
        where = f"modules[{i}]"
        _check_fields(m, {"module_id", "function_key", "kind", "memory_req",
                          "output_size"}, {"input_size", "modality"}, where)
        kind = m["kind"]
        if kind not in (ENCODER, HEAD):
            raise SchemaError(f"{where}: kind must be '{ENCODER}' or '{HEAD}'")
        if kind == ENCODER and not m.get("modality"):
            raise SchemaError(f"{where}: encoder modules require a modality")
        modules.append(ModuleSpec(
            module_id=str(m["module_id"]),
            function_key=str(m["function_key"]),
            kind=kind,
            memory_req=int(_num(m, "memory_req", where)),
            output_size=float(_num(m, "output_size", where)),
            input_size=float(_num(m, "input_size", where, 0.0)),
            modality=m.get("modality"),
        ))

    models = []
    for i, k in enumerate(doc["models"]):
        where = f"models[{i}]"
        _check_fields(k, {"model_id", "encoder_ids", "head_id"}, set(), where)
        if not k["encoder_ids"]:
            raise SchemaError(f"{where}: encoder_ids must be non-empty")
        models.append(ModelSpec(
            model_id=str(k["model_id"]),
            encoder_ids=tuple(str(e) for e in k["encoder_ids"]),
            head_id=str(k["head_id"]),
        ))

    compute = _parse_compute(doc["compute"], devices, modules)

    links = {}
    for i, ln in enumerate(doc["network"]):
        where = f"network[{i}]"
        _check_fields(ln, {"from", "to", "latency", "bandwidth"}, set(), where)
        links[(str(ln["from"]), str(ln["to"]))] = Link(
            latency=float(_num(ln, "latency", where)),
            bandwidth=float(_num(ln, "bandwidth", where)),
        )

    trace = []
    for i, q in enumerate(doc.get("trace", [])):
        where = f"trace[{i}]"
        _check_fields(q, {"request_id", "model_id", "source_device"},
                      {"arrival_time"}, where)
        trace.append(Request(
            request_id=str(q["request_id"]),
            model_id=str(q["model_id"]),
            source_device=str(q["source_device"]),
            arrival_time=float(_num(q, "arrival_time", where, 0.0)),
        ))

    capacity = {}
    for i, c in enumerate(doc.get("capacity", [])):
        where = f"capacity[{i}]"
        _check_fields(c, {"function_key", "device_id", "limit"}, set(), where)
        limit = int(_num(c, "limit", where))
        if limit < 1:
            raise SchemaError(f"{where}: limit must be a positive integer")
        capacity[(str(c["function_key"]), str(c["device_id"]))] = limit

    s = Scenario(
        devices=tuple(devices),
        modules=tuple(modules),
        models=tuple(models),
        compute=compute,
        network=NetworkProfile(links),
        trace=tuple(trace),
        capacity=capacity,
        notes=str(doc.get("notes", "")),
    )
    _resolve_references(s)
    violations = validate_scenario(s)
    if violations:
        raise SchemaError("scenario violates invariants: "
                          + "; ".join(f"{v.kind}({v.subject}): {v.message}"
                                      for v in violations))
    return s


def _parse_compute(raw, devices, modules) -> ComputeProfile:
    entries: Dict[Tuple[str, str], ComputeEntry] = {}
    if isinstance(raw, dict):
        # derived sugar: comp_time = work[function_key] / speed[device_id]
        _check_fields(raw, {"derived"}, set(), "compute")
        derived = raw["derived"]
        _check_fields(derived, {"module_work", "device_speed"}, {"load_time"},
                      "compute.derived")
        for fk, work in derived["module_work"].items():
            for dev, speed in derived["device_speed"].items():
                if speed <= 0:
                    raise SchemaError("compute.derived: device_speed must be > 0")
                entries[(fk, dev)] = ComputeEntry(comp_time=work / speed)
        return ComputeProfile(entries)
    for i, c in enumerate(raw):
        where = f"compute[{i}]"
        _check_fields(c, {"function_key", "device_id", "comp_time"},
                      {"load_time"}, where)
        ct = float(_num(c, "comp_time", where))
        if ct <= 0:
            raise SchemaError(f"{where}: comp_time must be > 0")
        entries[(str(c["function_key"]), str(c["device_id"]))] = ComputeEntry(
            comp_time=ct, load_time=float(_num(c, "load_time", where, 0.0)))
    return ComputeProfile(entries)


def _resolve_references(s: Scenario) -> None:
    device_ids = {d.device_id for d in s.devices}
    module_ids = {m.module_id for m in s.modules}
    model_ids = {k.model_id for k in s.models}
    function_keys = {m.function_key for m in s.modules}
    for k in s.models:
        for e in k.encoder_ids:
            if e not in module_ids:
                raise DanglingReferenceError(
                    f"model '{k.model_id}' references unknown encoder '{e}'")
        if k.head_id not in module_ids:
            raise DanglingReferenceError(
                f"model '{k.model_id}' references unknown head '{k.head_id}'")
    for (fk, dev) in s.compute.entries:
        if dev not in device_ids:
            raise DanglingReferenceError(
                f"compute entry references unknown device '{dev}'")
        if fk not in function_keys:
            raise DanglingReferenceError(
                f"compute entry references unknown function_key '{fk}'")
    for (a, b) in s.network.links:
        for dev in (a, b):
            if dev not in device_ids:
                raise DanglingReferenceError(
                    f"network link references unknown device '{dev}'")
    for q in s.trace:
        if q.model_id not in model_ids:
            raise DanglingReferenceError(
                f"request '{q.request_id}' references unknown model "
                f"'{q.model_id}'")
        if q.source_device not in device_ids:
            raise DanglingReferenceError(
                f"request '{q.request_id}' references unknown device "
                f"'{q.source_device}'")
    for (fk, dev) in s.capacity:
        if fk not in function_keys:
            raise DanglingReferenceError(
                f"capacity entry references unknown function_key '{fk}'")
        if dev not in device_ids:
            raise DanglingReferenceError(
                f"capacity entry references unknown device '{dev}'")


def emit_scenario(s: Scenario) -> str:
    """Serialize a Scenario back to the JSON document format; parse(emit(s))
    is structurally equal to s."""
    doc = {
        "devices": [
            {"device_id": d.device_id, "memory_capacity": d.memory_capacity,
             "compute_slots": d.compute_slots,
             "uplink_serialized": d.uplink_serialized}
            for d in s.devices],
        "modules": [
            {k: v for k, v in (
                ("module_id", m.module_id), ("function_key", m.function_key),
                ("kind", m.kind), ("modality", m.modality),
                ("memory_req", m.memory_req), ("output_size", m.output_size),
                ("input_size", m.input_size)) if v is not None}
            for m in s.modules],
        "models": [
            {"model_id": k.model_id, "encoder_ids": list(k.encoder_ids),
             "head_id": k.head_id}
            for k in s.models],
        "compute": [
            {"function_key": fk, "device_id": dev, "comp_time": e.comp_time,
             "load_time": e.load_time}
            for (fk, dev), e in s.compute.entries.items()],
        "network": [
            {"from": a, "to": b, "latency": ln.latency,
             "bandwidth": ln.bandwidth}
            for (a, b), ln in s.network.links.items()],
        "trace": [
            {"request_id": q.request_id, "model_id": q.model_id,
             "source_device": q.source_device, "arrival_time": q.arrival_time}
            for q in s.trace],
        "capacity": [
            {"function_key": fk, "device_id": dev, "limit": lim}
            for (fk, dev), lim in s.capacity.items()],
    }
    if s.notes:
        doc["notes"] = s.notes
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# Validation

def validate_scenario(s: Scenario) -> List[Violation]:
    """Collect every invariant violation across all types; ordering is
    deterministic by (kind, subject). Violations are data, not failures."""
    out: List[Violation] = []

    seen = set()
    for d in s.devices:
        if d.device_id in seen:
            out.append(Violation("DuplicateDeviceId", d.device_id,
                                 "device_id not unique"))
        seen.add(d.device_id)
        if d.memory_capacity < 0:
            out.append(Violation("NegativeMemory", d.device_id,
                                 "memory_capacity must be >= 0"))
        if d.compute_slots < 1:
            out.append(Violation("BadComputeSlots", d.device_id,
                                 "compute_slots must be >= 1"))

    seen = set()
    by_key: Dict[str, ModuleSpec] = {}
    for m in s.modules:
        if m.module_id in seen:
            out.append(Violation("DuplicateModuleId", m.module_id,
                                 "module_id not unique"))
        seen.add(m.module_id)
        if m.memory_req < 0:
            out.append(Violation("NegativeMemory", m.module_id,
                                 "memory_req must be >= 0"))
        prior = by_key.get(m.function_key)
        if prior is None:
            by_key[m.function_key] = m
        elif (prior.kind, prior.memory_req, prior.output_size) != \
                (m.kind, m.memory_req, m.output_size):
            out.append(Violation(
                "FunctionKeyConflict", m.function_key,
                f"modules '{prior.module_id}' and '{m.module_id}' share "
                f"function_key but disagree on kind/memory_req/output_size"))

    module_index = {m.module_id: m for m in s.modules}
    seen = set()
    for k in s.models:
        if k.model_id in seen:
            out.append(Violation("DuplicateModelId", k.model_id,
                                 "model_id not unique"))
        seen.add(k.model_id)
        modalities = set()
        for e in k.encoder_ids:
            m = module_index.get(e)
            if m is None:
                out.append(Violation("DanglingReference", k.model_id,
                                     f"unknown encoder '{e}'"))
                continue
            if m.kind != ENCODER:
                out.append(Violation("KindMismatch", k.model_id,
                                     f"'{e}' is not an encoder"))
            elif m.modality in modalities:
                out.append(Violation("DuplicateModality", k.model_id,
                                     f"two encoders share modality "
                                     f"'{m.modality}'"))
            modalities.add(m.modality)
        head = module_index.get(k.head_id)
        if head is None:
            out.append(Violation("DanglingReference", k.model_id,
                                 f"unknown head '{k.head_id}'"))
        elif head.kind != HEAD:
            out.append(Violation("KindMismatch", k.model_id,
                                 f"'{k.head_id}' is not a head"))

    for (fk, dev), e in s.compute.entries.items():
        if e.comp_time <= 0:
            out.append(Violation("BadComputeEntry", f"{fk}@{dev}",
                                 "comp_time must be > 0"))
        if e.load_time < 0:
            out.append(Violation("BadComputeEntry", f"{fk}@{dev}",
                                 "load_time must be >= 0"))

    for (a, b), ln in s.network.links.items():
        if ln.latency < 0 or ln.bandwidth <= 0:
            out.append(Violation("BadLink", f"{a}->{b}",
                                 "latency must be >= 0 and bandwidth > 0"))

    model_ids = {k.model_id for k in s.models}
    device_ids = {d.device_id for d in s.devices}
    for q in s.trace:
        if q.model_id not in model_ids:
            out.append(Violation("DanglingReference", q.request_id,
                                 f"unknown model '{q.model_id}'"))
        if q.source_device not in device_ids:
            out.append(Violation("DanglingReference", q.request_id,
                                 f"unknown device '{q.source_device}'"))
        if not math.isfinite(q.arrival_time) or q.arrival_time < 0:
            out.append(Violation("BadArrival", q.request_id,
                                 "arrival_time must be finite and >= 0"))

    for (fk, dev) in s.capacity:
        if s.compute.get(fk, dev) is None:
            out.append(Violation("CapacityNotHostable", f"{fk}@{dev}",
                                 "capacity entry for a pair with no compute "
                                 "entry"))

    out.sort(key=lambda v: (v.kind, v.subject))
    return out
