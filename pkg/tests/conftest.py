import json

import pytest

from splitshare.cli import _resolve_scenario_path
from splitshare.scenario import parse_scenario


def load(name):
    with open(_resolve_scenario_path(name)) as f:
        return parse_scenario(f.read())


@pytest.fixture(scope="session")
def testbed():
    return load("clip-vitb16-testbed.json")


@pytest.fixture(scope="session")
def multitask():
    return load("multitask-4.json")


@pytest.fixture(scope="session")
def variants():
    return load("clip-variants.json")


@pytest.fixture(scope="session")
def imagebind():
    return load("imagebind.json")


def tiny_doc():
    """Two devices, one two-encoder model. Small enough to reason about by
    hand and mutate field by field in schema tests."""
    return {
        "devices": [
            {"device_id": "a", "memory_capacity": 1000},
            {"device_id": "b", "memory_capacity": 1000},
        ],
        "modules": [
            {"module_id": "e1", "function_key": "e1", "kind": "encoder",
             "modality": "vision", "memory_req": 100,
             "input_size": 10.0, "output_size": 1.0},
            {"module_id": "e2", "function_key": "e2", "kind": "encoder",
             "modality": "text", "memory_req": 100,
             "input_size": 10.0, "output_size": 1.0},
            {"module_id": "h", "function_key": "h", "kind": "head",
             "memory_req": 10, "output_size": 1.0},
        ],
        "models": [
            {"model_id": "m", "encoder_ids": ["e1", "e2"], "head_id": "h"},
        ],
        "compute": [
            {"function_key": "e1", "device_id": "a", "comp_time": 1.0},
            {"function_key": "e1", "device_id": "b", "comp_time": 2.0},
            {"function_key": "e2", "device_id": "a", "comp_time": 1.0},
            {"function_key": "e2", "device_id": "b", "comp_time": 2.0},
            {"function_key": "h", "device_id": "a", "comp_time": 0.5},
            {"function_key": "h", "device_id": "b", "comp_time": 0.5},
        ],
        "network": [
            {"from": "a", "to": "b", "latency": 0.01, "bandwidth": 100.0},
            {"from": "b", "to": "a", "latency": 0.01, "bandwidth": 100.0},
        ],
        "trace": [
            {"request_id": "r", "model_id": "m", "source_device": "a",
             "arrival_time": 0.0},
        ],
    }


@pytest.fixture
def tiny():
    return parse_scenario(json.dumps(tiny_doc()))
