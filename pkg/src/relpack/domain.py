"""Datacenter data model: racks, PMs, VMs, placements, transition flags."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np


class StructuralError(ValueError):
    """Shape/cross-reference problem, as opposed to a reported constraint violation."""


class PlacementError(ValueError):
    """Operation received a placement that fails validation."""


@dataclass(frozen=True)
class PmSpec:
    """A physical machine. Capacities are absolute (MIPS, MB, Mbps).

    `k_idle` is the idle power draw as a fraction of `p_max`; `cycle_count`
    is the cumulative number of disk start/stop cycles so far.  `t_idle` and
    `t_max` parameterize the affine utilization-to-CPU-temperature map used
    when pricing a shutdown thermal cycle.
    """

    id: int
    rack_id: int
    cpu_capacity: float
    ram_capacity: float
    bw_capacity: float
    p_max: float
    k_idle: float
    cycle_count: int = 0
    t_idle: float = 318.0
    t_max: float = 350.0

    def __post_init__(self):
        if self.cpu_capacity <= 0:
            raise StructuralError(f"pm {self.id}: cpu_capacity must be > 0")
        if not 0.0 <= self.k_idle <= 1.0:
            raise StructuralError(f"pm {self.id}: k_idle must be in [0, 1]")
        if self.cycle_count < 0:
            raise StructuralError(f"pm {self.id}: cycle_count must be >= 0")
        if not self.t_idle <= self.t_max:
            raise StructuralError(f"pm {self.id}: need t_idle <= t_max")


@dataclass(frozen=True)
class VmSpec:
    """A virtual machine: resource demands plus memory footprint for migration."""

    id: int
    cpu_demand: float
    ram_demand: float
    mem_gb: float

    def __post_init__(self):
        if self.cpu_demand < 0 or self.ram_demand < 0 or self.mem_gb < 0:
            raise StructuralError(f"vm {self.id}: demands must be >= 0")

    @property
    def demands(self) -> dict[str, float]:
        return {"cpu": self.cpu_demand, "ram": self.ram_demand}


@dataclass(frozen=True)
class RackSpec:
    """A rack: member PMs plus the constant draw of its ToR switch and cooling."""

    id: int
    pm_ids: tuple[int, ...]
    tor_power: float
    cooling_power: float

    def __post_init__(self):
        if not self.pm_ids:
            raise StructuralError(f"rack {self.id}: needs at least one PM")


# resource types that participate in packing; bandwidth is tracked but unconstrained
PACKED_RESOURCES = ("cpu", "ram")


@dataclass(frozen=True)
class Violation:
    kind: str  # "row-sum" or "capacity"
    subject: str
    amount: float = 0.0

    def __str__(self):
        return f"{self.kind}: {self.subject} ({self.amount:g})"


@dataclass(frozen=True)
class Placement:
    """Binary VM-to-PM assignment matrix, rows = VMs, columns = PMs."""

    assign: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assign, dtype=np.int8)
        a.setflags(write=False)
        object.__setattr__(self, "assign", a)

    @classmethod
    def from_hosts(cls, hosts: Iterable[int], n_pms: int) -> "Placement":
        hosts = list(hosts)
        a = np.zeros((len(hosts), n_pms), dtype=np.int8)
        for v, p in enumerate(hosts):
            a[v, p] = 1
        return cls(a)

    @property
    def n_vms(self) -> int:
        return self.assign.shape[0]

    @property
    def n_pms(self) -> int:
        return self.assign.shape[1]

    def hosts(self) -> np.ndarray:
        """Per-VM host index; only meaningful for row-sum-valid placements."""
        return np.argmax(self.assign, axis=1)

    def pm_loads(self) -> np.ndarray:
        """Number of VMs hosted per PM."""
        return self.assign.sum(axis=0)

    def __eq__(self, other):
        return isinstance(other, Placement) and np.array_equal(self.assign, other.assign)

    def __hash__(self):
        return hash(self.assign.tobytes())


@dataclass(frozen=True)
class TransitionFlags:
    """Per-PM on/off transition indicators between consecutive slots.

    f00: stayed offline; f10: powered off; x: active in the next slot;
    y: per-rack activity (1 while any member PM is active).
    """

    f00: np.ndarray
    f10: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        for name in ("f00", "f10", "x", "y"):
            a = np.asarray(getattr(self, name), dtype=np.int8)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n_off(self) -> int:
        """PMs that are dark in the next slot (stayed off or powering off)."""
        return int(self.f00.sum() + self.f10.sum())


@dataclass(frozen=True)
class DatacenterState:
    racks: tuple[RackSpec, ...]
    pms: tuple[PmSpec, ...]
    vms: tuple[VmSpec, ...]
    current: Placement
    slot_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "racks", tuple(self.racks))
        object.__setattr__(self, "pms", tuple(self.pms))
        object.__setattr__(self, "vms", tuple(self.vms))
        owners: dict[int, int] = {}
        for rack in self.racks:
            for pid in rack.pm_ids:
                if pid in owners:
                    raise StructuralError(f"pm {pid} listed in racks {owners[pid]} and {rack.id}")
                owners[pid] = rack.id
        for pm in self.pms:
            if owners.get(pm.id) != pm.rack_id:
                raise StructuralError(f"pm {pm.id}: rack_id {pm.rack_id} inconsistent with rack layout")
        for i, pm in enumerate(self.pms):
            if pm.id != i:
                raise StructuralError("PM ids must be dense 0-based indices in order")
        for i, vm in enumerate(self.vms):
            if vm.id != i:
                raise StructuralError("VM ids must be dense 0-based indices in order")
        for i, rack in enumerate(self.racks):
            if rack.id != i:
                raise StructuralError("rack ids must be dense 0-based indices in order")
        bad = validate_placement(self.current, self, _skip_state_check=True)
        if bad:
            raise PlacementError(f"current placement invalid: {bad[0]}")

    @property
    def n_pms(self) -> int:
        return len(self.pms)

    @property
    def n_vms(self) -> int:
        return len(self.vms)

    @property
    def n_racks(self) -> int:
        return len(self.racks)

    def capacities(self, resource: str) -> np.ndarray:
        if resource == "cpu":
            return np.array([p.cpu_capacity for p in self.pms], dtype=float)
        if resource == "ram":
            return np.array([p.ram_capacity for p in self.pms], dtype=float)
        if resource == "bw":
            return np.array([p.bw_capacity for p in self.pms], dtype=float)
        raise KeyError(resource)

    def demands(self, resource: str) -> np.ndarray:
        if resource == "cpu":
            return np.array([v.cpu_demand for v in self.vms], dtype=float)
        if resource == "ram":
            return np.array([v.ram_demand for v in self.vms], dtype=float)
        raise KeyError(resource)

    def rack_of(self) -> np.ndarray:
        """Per-PM rack index."""
        return np.array([p.rack_id for p in self.pms], dtype=int)

    def online_now(self) -> np.ndarray:
        """Per-PM boolean: hosting at least one VM in the current slot."""
        return self.current.pm_loads() > 0

    def with_placement(self, placement: Placement, cycle_increments: np.ndarray | None = None) -> "DatacenterState":
        """Next-slot state: `placement` becomes current, counters advance."""
        pms = self.pms
        if cycle_increments is not None:
            pms = tuple(
                replace(pm, cycle_count=pm.cycle_count + int(inc))
                for pm, inc in zip(pms, cycle_increments)
            )
        return DatacenterState(self.racks, pms, self.vms, placement, self.slot_index + 1)


def validate_placement(p: Placement, dc: DatacenterState, *, _skip_state_check: bool = False) -> list[Violation]:
    """Check single-host rows and per-PM capacity; returns all violations found.

    Dimension mismatches raise StructuralError instead of being reported,
    since a mis-shaped matrix has no per-row reading.
    """
    if not _skip_state_check:
        pass  # dc is assumed structurally valid (checked at construction)
    if p.assign.ndim != 2 or p.assign.shape != (len(dc.vms), len(dc.pms)):
        raise StructuralError(
            f"placement shape {p.assign.shape} does not match ({len(dc.vms)}, {len(dc.pms)})"
        )
    out: list[Violation] = []
    row_sums = p.assign.sum(axis=1)
    for v in np.nonzero(row_sums != 1)[0]:
        kind = "row-sum"
        out.append(Violation(kind, f"vm {v} assigned to {int(row_sums[v])} PMs", float(row_sums[v])))
    for resource in PACKED_RESOURCES:
        used = dc.demands(resource) @ p.assign
        cap = dc.capacities(resource)
        for j in np.nonzero(used > cap + 1e-9)[0]:
            out.append(
                Violation("capacity", f"pm {j} {resource} demand {used[j]:g} > capacity {cap[j]:g}",
                          float(used[j] - cap[j]))
            )
    return out


def derive_transition_flags(s_prev: Placement, s_next: Placement, dc: DatacenterState) -> TransitionFlags:
    """Compute f00/f10/x/y for the slot transition described by the two mappings."""
    for name, placement in (("previous", s_prev), ("next", s_next)):
        bad = validate_placement(placement, dc)
        if bad:
            raise PlacementError(f"{name} placement invalid: {bad[0]}")
    online_prev = s_prev.pm_loads() > 0
    online_next = s_next.pm_loads() > 0
    f10 = (online_prev & ~online_next).astype(np.int8)
    f00 = (~online_prev & ~online_next).astype(np.int8)
    x = online_next.astype(np.int8)
    y = np.zeros(len(dc.racks), dtype=np.int8)
    for rack in dc.racks:
        y[rack.id] = 1 if any(x[p] for p in rack.pm_ids) else 0
    return TransitionFlags(f00=f00, f10=f10, x=x, y=y)


def pm_utilization(p: Placement, pm_id: int, dc: DatacenterState) -> float:
    """CPU demand hosted on the PM as a fraction of its CPU capacity."""
    hosted = float(dc.demands("cpu") @ p.assign[:, pm_id])
    return hosted / dc.pms[pm_id].cpu_capacity


def all_utilizations(p: Placement, dc: DatacenterState) -> np.ndarray:
    """Per-PM CPU utilization vector."""
    return (dc.demands("cpu") @ p.assign) / dc.capacities("cpu")
