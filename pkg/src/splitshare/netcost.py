"""Communication and computation time primitives shared by the analytic
evaluator, the placement solver and the simulator.

Transfer time is latency + size / bandwidth, zero when endpoints are equal.
Computation times are direct per-(function_key, device) table lookups; an
absent entry means the device cannot host the module (returned as None).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import MissingLink
from .scenario import ComputeProfile, DeviceSpec, ModuleSpec, NetworkProfile


@dataclass(frozen=True)
class TransferQuery:
    from_device: str
    to_device: str
    size: float  # data units >= 0


def comm_time(q: TransferQuery, net: NetworkProfile) -> float:
    """Seconds to move q.size data units from q.from_device to q.to_device.
    Self-transfers are free. Raises MissingLink for an unknown pair."""
    if q.from_device == q.to_device:
        return 0.0
    link = net.get(q.from_device, q.to_device)
    if link is None:
        raise MissingLink(f"no link {q.from_device} -> {q.to_device}")
    return link.latency + q.size / link.bandwidth


def transfer_time(net: NetworkProfile, from_device: str, to_device: str,
                  size: float) -> float:
    """Convenience form of comm_time."""
    return comm_time(TransferQuery(from_device, to_device, size), net)


def comp_time(m: ModuleSpec, n: DeviceSpec,
              profile: ComputeProfile) -> Optional[float]:
    """Computation time of module m on device n, or None when the device
    cannot host the module."""
    entry = profile.get(m.function_key, n.device_id)
    return None if entry is None else entry.comp_time


def load_time(m: ModuleSpec, n: DeviceSpec, profile: ComputeProfile) -> float:
    entry = profile.get(m.function_key, n.device_id)
    return 0.0 if entry is None else entry.load_time
