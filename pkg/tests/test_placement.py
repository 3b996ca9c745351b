import json

import pytest

from splitshare.errors import PlacementInfeasible, SearchSpaceTooLarge
from splitshare.placement import (brute_force_place, centralized_place,
                                  completion_time_encoder, greedy_place,
                                  placed_memory_per_device,
                                  placed_memory_total, replicate_leftover)
from splitshare.routing import trace_objective
from splitshare.scenario import parse_scenario
from splitshare.sharing import build_shared_catalog

from conftest import tiny_doc


def test_greedy_testbed_placement(testbed):
    p, trace = greedy_place(testbed, build_shared_catalog(testbed))
    assert p.assign == {"vitb16-vision": ("server",),
                        "clip-trf-text": ("laptop",),
                        "cosine-head": ("server",)}
    assert len(trace.steps) == 3
    # modules processed in descending memory order
    assert [st.function_key for st in trace.steps] == [
        "vitb16-vision", "clip-trf-text", "cosine-head"]


def test_greedy_accumulation_pushes_second_module(testbed):
    # with vision (2.33s) on the server, the text encoder's server score is
    # 0.10 + 2.33 = 2.43, losing to the laptop's bare 0.55
    _, trace = greedy_place(testbed, build_shared_catalog(testbed))
    step = trace.steps[1]
    scores = dict(step.candidates)
    assert scores["server"] == pytest.approx(2.43)
    assert scores["laptop"] == pytest.approx(0.55)
    assert step.chosen == "laptop"


def test_greedy_head_scores_have_no_accumulation(testbed):
    _, trace = greedy_place(testbed, build_shared_catalog(testbed))
    head_step = trace.steps[2]
    assert all(t == pytest.approx(0.01) for _, t in head_step.candidates)
    assert head_step.chosen == "server"  # tie broken by device order


def test_greedy_respects_memory():
    doc = tiny_doc()
    doc["devices"][0]["memory_capacity"] = 150  # a holds only one encoder
    s = parse_scenario(json.dumps(doc))
    p, _ = greedy_place(s, build_shared_catalog(s))
    per_dev = placed_memory_per_device(s, p)
    for d in s.devices:
        assert per_dev[d.device_id] <= d.memory_capacity


def test_greedy_infeasible_names_module():
    doc = tiny_doc()
    for d in doc["devices"]:
        d["memory_capacity"] = 50
    s = parse_scenario(json.dumps(doc))
    with pytest.raises(PlacementInfeasible) as ei:
        greedy_place(s, build_shared_catalog(s))
    assert ei.value.function_key in {"e1", "e2"}


def test_completion_time_none_without_compute_entry(tiny):
    cat = build_shared_catalog(tiny)
    p, _ = greedy_place(tiny, cat)
    stripped = type(tiny.compute)({k: v for k, v in
                                   tiny.compute.entries.items()
                                   if k != ("e1", "b")})
    assert completion_time_encoder(tiny.module("e1"), tiny.devices[1],
                                   p, stripped) is None


def test_brute_force_matches_greedy_on_testbed(testbed):
    cat = build_shared_catalog(testbed)
    gp, _ = greedy_place(testbed, cat)
    bp, obj = brute_force_place(testbed, cat, list(testbed.trace))
    assert obj == pytest.approx(2.393)
    assert obj <= trace_objective(testbed, gp, testbed.trace) + 1e-12


def test_brute_force_guard():
    doc = tiny_doc()
    # 2 devices ** 24 modules > 10^7
    for i in range(21):
        doc["modules"].append({
            "module_id": f"x{i}", "function_key": f"x{i}",
            "kind": "encoder", "modality": "vision", "memory_req": 1,
            "input_size": 1.0, "output_size": 1.0})
        doc["compute"] += [
            {"function_key": f"x{i}", "device_id": d, "comp_time": 1.0}
            for d in ("a", "b")]
    s = parse_scenario(json.dumps(doc))
    with pytest.raises(SearchSpaceTooLarge):
        brute_force_place(s, build_shared_catalog(s), list(s.trace))


def test_centralized_place(testbed):
    p = centralized_place(testbed, "server")
    assert all(devs == ("server",) for devs in p.assign.values())
    assert placed_memory_total(testbed, p) == 124_000_000


def test_centralized_place_infeasible_is_none(imagebind):
    assert centralized_place(imagebind, "jetson-a") is None  # 1.0B > 950M


def test_replicate_leftover_adds_replicas(testbed):
    cat = build_shared_catalog(testbed)
    p, _ = greedy_place(testbed, cat)
    r = replicate_leftover(testbed, p, cat)
    # plenty of memory everywhere: every module ends up fully replicated
    for fk, devs in r.assign.items():
        assert set(p.assign[fk]) <= set(devs)
        assert len(devs) == len(testbed.devices)
    for dev, left in r.residual_memory.items():
        assert left >= 0


def test_replicate_leftover_respects_memory():
    doc = tiny_doc()
    doc["devices"][0]["memory_capacity"] = 210
    doc["devices"][1]["memory_capacity"] = 110
    s = parse_scenario(json.dumps(doc))
    cat = build_shared_catalog(s)
    p, _ = greedy_place(s, cat)
    r = replicate_leftover(s, p, cat)
    per_dev = placed_memory_per_device(s, r)
    for d in s.devices:
        assert per_dev[d.device_id] <= d.memory_capacity


def test_placement_deterministic(testbed):
    cat = build_shared_catalog(testbed)
    a, _ = greedy_place(testbed, cat)
    b, _ = greedy_place(testbed, cat)
    assert a.assign == b.assign
