import pytest

from splitshare.errors import FunctionKeyConflict
from splitshare.scenario import ModuleSpec, Scenario
from splitshare.sharing import (build_shared_catalog, memory_accounting,
                                render_memory_csv, render_memory_table,
                                unshare)


def test_catalog_dedupes_by_function_key(multitask):
    cat = build_shared_catalog(multitask)
    assert cat.c == 7  # 3 encoders + 4 heads, all distinct keys
    assert cat.owners["vitb16-vision"] == {
        "retrieval", "encoder-vqa", "alignment", "classification"}
    assert cat.owners["cls-52k-head"] == {"classification"}


def test_catalog_first_occurrence_order(multitask):
    keys = [m.function_key for m in
            build_shared_catalog(multitask).distinct_modules]
    assert keys[:3] == ["vitb16-vision", "clip-trf-text", "vitb-audio"]


def test_catalog_conflicting_key_raises(tiny):
    bad = Scenario(
        devices=tiny.devices,
        modules=tiny.modules + (ModuleSpec(
            module_id="e1b", function_key="e1", kind="encoder",
            modality="depth", memory_req=123, output_size=1.0),),
        models=tiny.models, compute=tiny.compute, network=tiny.network)
    with pytest.raises(FunctionKeyConflict):
        build_shared_catalog(bad)


def test_memory_accounting_multitask(multitask):
    rep = memory_accounting(multitask, build_shared_catalog(multitask))
    assert rep.cumulative_no_share == (
        124_000_000, 248_001_000, 457_001_000, 543_053_000)
    assert rep.cumulative_shared == (
        124_000_000, 124_001_000, 209_001_000, 209_053_000)
    assert rep.saving_pct == 61.5


def test_per_model_split_savings(variants):
    rep = memory_accounting(variants, build_shared_catalog(variants))
    savings = {m.model_id: round(m.saving_pct) for m in rep.per_model}
    assert savings == {
        "clip-rn50": 50, "clip-rn101": 40, "clip-rn50x4": 40,
        "clip-rn50x16": 34, "clip-rn50x64": 26, "clip-vitb32": 30,
        "clip-vitb16": 31, "clip-vitl14": 22, "clip-vitl14-336": 22}


def test_imagebind_saving(imagebind):
    rep = memory_accounting(imagebind, build_shared_catalog(imagebind))
    (m,) = rep.per_model
    assert m.monolithic == 1_000_000_000
    assert m.split_worst == 630_000_000
    assert round(m.saving_pct) == 37


def test_unshare_duplicates_shared_modules(multitask):
    u = unshare(multitask)
    keys = {m.function_key for m in u.modules}
    assert len(keys) == len(u.modules)  # every module now unique
    total = sum(m.memory_req for m in u.modules)
    assert total == 543_053_000
    # unshared scenario still parses as referentially sound
    for k in u.models:
        for mid in list(k.encoder_ids) + [k.head_id]:
            u.module(mid)


def test_unshare_keeps_compute_entries(multitask):
    u = unshare(multitask)
    for m in u.modules:
        for d in u.devices:
            assert u.compute.get(m.function_key, d.device_id) is not None


def test_renderers_smoke(multitask):
    rep = memory_accounting(multitask, build_shared_catalog(multitask))
    table = render_memory_table(rep, multitask)
    csv_text = render_memory_csv(rep, multitask)
    assert "retrieval" in table
    assert "61.5" in table
    assert csv_text.count("\n") == 5  # header + 4 models
