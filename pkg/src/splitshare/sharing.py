"""Deduplicated global module catalog (the "share" step) and split/share
memory accounting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Set, Tuple

from .errors import FunctionKeyConflict
from .scenario import ModuleSpec, Scenario


@dataclass(frozen=True)
class SharedCatalog:
    distinct_modules: Tuple[ModuleSpec, ...]  # deduplicated by function_key
    owners: Dict[str, Set[str]]  # function_key -> model_ids using it

    @property
    def c(self) -> int:
        return len(self.distinct_modules)

    def module(self, function_key: str) -> ModuleSpec:
        for m in self.distinct_modules:
            if m.function_key == function_key:
                return m
        raise KeyError(function_key)


def build_shared_catalog(s: Scenario) -> SharedCatalog:
    """One entry per distinct function_key, in first-occurrence scenario
    order; owners maps every key to the models that reference it."""
    distinct: List[ModuleSpec] = []
    by_key: Dict[str, ModuleSpec] = {}
    for m in s.modules:
        prior = by_key.get(m.function_key)
        if prior is None:
            by_key[m.function_key] = m
            distinct.append(m)
        elif (prior.kind, prior.memory_req, prior.output_size) != \
                (m.kind, m.memory_req, m.output_size):
            raise FunctionKeyConflict(
                f"function_key '{m.function_key}': modules "
                f"'{prior.module_id}' and '{m.module_id}' disagree")
    owners: Dict[str, Set[str]] = {fk: set() for fk in by_key}
    for k in s.models:
        for mid in list(k.encoder_ids) + [k.head_id]:
            owners[s.module(mid).function_key].add(k.model_id)
    return SharedCatalog(distinct_modules=tuple(distinct), owners=owners)


@dataclass(frozen=True)
class ModelMemory:
    model_id: str
    monolithic: int  # sum of module memory
    split_worst: int  # max module memory = worst single-device cost
    saving_pct: float  # (1 - split/monolithic), percent, 0.1% rounding


@dataclass(frozen=True)
class MemoryReport:
    per_model: Tuple[ModelMemory, ...]
    no_share_total: int  # sum over all model references
    shared_total: int  # sum over distinct modules
    saving_pct: float  # (1 - shared/no_share), percent, 0.1% rounding
    # cumulative totals model-by-model in scenario order
    cumulative_no_share: Tuple[int, ...]
    cumulative_shared: Tuple[int, ...]


def _pct(shared: float, baseline: float) -> float:
    if baseline == 0:
        return 0.0
    return round((1.0 - shared / baseline) * 1000) / 10


def memory_accounting(s: Scenario, catalog: SharedCatalog) -> MemoryReport:
    per_model = []
    cum_no_share: List[int] = []
    cum_shared: List[int] = []
    seen_keys: Set[str] = set()
    running_no_share = 0
    running_shared = 0
    for k in s.models:
        mods = s.model_modules(k.model_id)
        mono = sum(m.memory_req for m in mods)
        worst = max(m.memory_req for m in mods)
        per_model.append(ModelMemory(
            model_id=k.model_id, monolithic=mono, split_worst=worst,
            saving_pct=_pct(worst, mono)))
        running_no_share += mono
        for m in mods:
            if m.function_key not in seen_keys:
                seen_keys.add(m.function_key)
                running_shared += catalog.module(m.function_key).memory_req
        cum_no_share.append(running_no_share)
        cum_shared.append(running_shared)
    shared_total = sum(m.memory_req for m in catalog.distinct_modules)
    return MemoryReport(
        per_model=tuple(per_model),
        no_share_total=running_no_share,
        shared_total=shared_total,
        cumulative_no_share=tuple(cum_no_share),
        cumulative_shared=tuple(cum_shared),
        saving_pct=_pct(shared_total, running_no_share),
    )


def unshare(s: Scenario) -> Scenario:
    """No-share baseline: every model gets dedicated copies of its modules
    (function keys suffixed per model, compute/capacity entries cloned)."""
    from .scenario import ModelSpec, ModuleSpec, Scenario as _S
    modules = []
    models = []
    compute_entries = {}
    capacity = {}
    for k in s.models:
        new_enc = []
        for mid in list(k.encoder_ids) + [k.head_id]:
            m = s.module(mid)
            fk = f"{m.function_key}@{k.model_id}"
            clone = ModuleSpec(
                module_id=f"{mid}@{k.model_id}", function_key=fk,
                kind=m.kind, memory_req=m.memory_req,
                output_size=m.output_size, input_size=m.input_size,
                modality=m.modality)
            modules.append(clone)
            if mid != k.head_id:
                new_enc.append(clone.module_id)
            for d in s.devices:
                e = s.compute.get(m.function_key, d.device_id)
                if e is not None:
                    compute_entries[(fk, d.device_id)] = e
                cap = s.capacity.get((m.function_key, d.device_id))
                if cap is not None:
                    capacity[(fk, d.device_id)] = cap
        models.append(ModelSpec(model_id=k.model_id,
                                encoder_ids=tuple(new_enc),
                                head_id=f"{k.head_id}@{k.model_id}"))
    return _S(devices=s.devices, modules=tuple(modules),
              models=tuple(models),
              compute=type(s.compute)(compute_entries),
              network=s.network, trace=s.trace, capacity=capacity,
              notes=s.notes)


# ---------------------------------------------------------------------------
# Rendering

def _fmt_params(n: int) -> str:
    if n >= 1_000_000_000:
        return f"{n / 1e9:.1f}B"
    return f"{round(n / 1e6)}M"


def render_memory_csv(report: MemoryReport, s: Scenario) -> str:
    lines = ["model,no_share_cumulative,shared_cumulative,delta,saving_pct"]
    for k, ns, sh in zip(s.models, report.cumulative_no_share,
                         report.cumulative_shared):
        lines.append(f"{k.model_id},{ns},{sh},{ns - sh},{_pct(sh, ns)}")
    return "\n".join(lines) + "\n"


def render_memory_table(report: MemoryReport, s: Scenario) -> str:
    rows = [("model/task", "no-share", "shared", "delta", "saving")]
    for k, ns, sh in zip(s.models, report.cumulative_no_share,
                         report.cumulative_shared):
        rows.append((k.model_id, _fmt_params(ns), _fmt_params(sh),
                     _fmt_params(ns - sh), f"{_pct(sh, ns):.1f}%"))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    out = []
    for r in rows:
        out.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(out) + "\n"
