"""Planning and evaluation engine for split-and-share deployment of modular
multi-modal models across heterogeneous edge devices."""

from .errors import (CapacityExhausted, DanglingReferenceError,
                     FunctionKeyConflict, GenerationFailed, MissingLink,
                     ModuleUnplaced, PlacementInfeasible, RouteInvalid,
                     ScenarioSyntaxError, SchemaError, SearchSpaceTooLarge,
                     SplitShareError)
from .scenario import (DeviceSpec, ModelSpec, ModuleSpec, Request, Scenario,
                       emit_scenario, parse_scenario, validate_scenario)
from .sharing import (MemoryReport, SharedCatalog, build_shared_catalog,
                      memory_accounting, unshare)
from .netcost import comm_time, comp_time, transfer_time, TransferQuery
from .placement import (Placement, PlacementTrace, brute_force_place,
                        centralized_place, completion_time_encoder,
                        completion_time_head, greedy_place,
                        replicate_leftover)
from .routing import (LatencyBreakdown, Route, analytic_latency,
                      brute_force_route, route_request, trace_objective)
from .simengine import (ComparisonReport, Event, SimOptions, SimResult,
                        compare_modes, route_trace, run_trace, simulate)
from .instance_gen import GenParams, generate, testbed_params

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
