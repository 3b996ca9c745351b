import json

import pytest

from splitshare.errors import (DanglingReferenceError, ScenarioSyntaxError,
                               SchemaError)
from splitshare.scenario import (Link, emit_scenario, parse_scenario,
                                 validate_scenario)

from conftest import tiny_doc


def test_parse_tiny(tiny):
    assert [d.device_id for d in tiny.devices] == ["a", "b"]
    assert tiny.module("e1").modality == "vision"
    assert tiny.model("m").head_id == "h"
    assert tiny.compute.get("e1", "b").comp_time == 2.0
    assert tiny.trace[0].request_id == "r"


def test_malformed_json_reports_position():
    with pytest.raises(ScenarioSyntaxError) as ei:
        parse_scenario("{\n  broken\n}")
    assert ei.value.line == 2


def test_unknown_field_rejected():
    doc = tiny_doc()
    doc["devices"][0]["gpu_count"] = 2
    with pytest.raises(SchemaError, match="gpu_count"):
        parse_scenario(json.dumps(doc))


def test_missing_top_key_rejected():
    doc = tiny_doc()
    del doc["network"]
    with pytest.raises(SchemaError, match="network"):
        parse_scenario(json.dumps(doc))


def test_encoder_requires_modality():
    doc = tiny_doc()
    del doc["modules"][0]["modality"]
    with pytest.raises(SchemaError, match="modality"):
        parse_scenario(json.dumps(doc))


def test_dangling_model_reference():
    doc = tiny_doc()
    doc["models"][0]["head_id"] = "nope"
    with pytest.raises(DanglingReferenceError, match="nope"):
        parse_scenario(json.dumps(doc))


def test_dangling_trace_reference():
    doc = tiny_doc()
    doc["trace"][0]["source_device"] = "zz"
    with pytest.raises(DanglingReferenceError, match="zz"):
        parse_scenario(json.dumps(doc))


def test_nonpositive_comp_time_rejected():
    doc = tiny_doc()
    doc["compute"][0]["comp_time"] = 0.0
    with pytest.raises(SchemaError):
        parse_scenario(json.dumps(doc))


def test_derived_compute_sugar():
    doc = tiny_doc()
    doc["compute"] = {"derived": {
        "module_work": {"e1": 2.0, "e2": 1.0, "h": 0.5},
        "device_speed": {"a": 2.0, "b": 1.0}}}
    s = parse_scenario(json.dumps(doc))
    assert s.compute.get("e1", "a").comp_time == 1.0
    assert s.compute.get("e2", "b").comp_time == 1.0


def test_self_link_is_free(tiny):
    link = tiny.network.get("a", "a")
    assert link.latency == 0.0
    assert link.bandwidth == float("inf")
    assert tiny.network.get("a", "b") == Link(0.01, 100.0)


def test_round_trip(tiny, multitask):
    for s in (tiny, multitask):
        assert parse_scenario(emit_scenario(s)) == s


def test_validate_clean_bundled(testbed, multitask, variants, imagebind):
    for s in (testbed, multitask, variants, imagebind):
        assert validate_scenario(s) == []


def test_validate_function_key_conflict(tiny):
    doc = tiny_doc()
    doc["modules"].append({
        "module_id": "e1b", "function_key": "e1", "kind": "encoder",
        "modality": "vision", "memory_req": 999, "input_size": 10.0,
        "output_size": 1.0})
    with pytest.raises(SchemaError, match="FunctionKeyConflict"):
        parse_scenario(json.dumps(doc))


def test_validate_duplicate_modality():
    doc = tiny_doc()
    doc["modules"][1]["modality"] = "vision"
    with pytest.raises(SchemaError, match="DuplicateModality"):
        parse_scenario(json.dumps(doc))


def test_capacity_requires_compute_entry():
    doc = tiny_doc()
    doc["compute"] = [c for c in doc["compute"]
                      if not (c["function_key"] == "e1"
                              and c["device_id"] == "b")]
    doc["capacity"] = [{"function_key": "e1", "device_id": "b", "limit": 1}]
    with pytest.raises(SchemaError, match="CapacityNotHostable"):
        parse_scenario(json.dumps(doc))
