"""Energy and reliability cost formulas, normalization bounds, and the weighted objective.

Everything here is a pure function of immutable inputs.  Energy is tracked
internally in watt-hours; the electricity price applies after conversion to kWh.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import (
    DatacenterState,
    Placement,
    PlacementError,
    PmSpec,
    TransitionFlags,
    all_utilizations,
    derive_transition_flags,
    validate_placement,
)


class InfeasibleError(ValueError):
    """Aggregate demand exceeds aggregate capacity; no placement can exist."""


@dataclass(frozen=True)
class CostWeights:
    """Objective weights plus the unit prices and slot length they apply to."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    rho: float = 0.10      # $/kWh electricity
    omega: float = 0.1902  # $/h reliability utility (machine cost / lifetime)
    tau: float = 0.5       # slot length, hours

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.rho <= 0 or self.omega <= 0 or self.tau <= 0:
            raise ValueError("rho, omega, tau must be positive")


@dataclass(frozen=True)
class ReliabilityParams:
    """Coefficients of the disk AFR curve and the CPU thermal-cycle model."""

    delta: float = 1.51      # x 1e-5, quadratic AFR coefficient
    varrho: float = 1.09     # x 1e-4, linear AFR coefficient
    varphi: float = 1.19     # x 1e-4, constant AFR coefficient
    q: float = 2.35          # thermal-cycle fatigue exponent
    t_amb: float = 298.0     # ambient temperature, kelvin
    mttf_hours: float = 26280.0  # 3 years
    hours_per_year: float = 8760.0
    afr_floor: float = 1e-6  # failures/year; the raw quadratic dips below zero

    def __post_init__(self):
        if self.afr_floor <= 0 or self.q <= 0 or self.mttf_hours <= 0:
            raise ValueError("afr_floor, q, mttf_hours must be positive")


MAX_CYCLE_COUNT = 1600  # domain of the empirical AFR curve


@dataclass(frozen=True)
class MigrationCostModel:
    """Migration energy = kappa x VM memory (GB) x hop distance between hosts."""

    kappa: float           # Wh per GB per hop
    distance: np.ndarray   # |P| x |P| hop counts in {0, 1, 2, 3}

    def __post_init__(self):
        d = np.asarray(self.distance, dtype=np.int8)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance must be a square matrix")
        if (np.diag(d) != 0).any():
            raise ValueError("self-distance must be 0")
        if not np.array_equal(d, d.T):
            raise ValueError("distance must be symmetric")
        if d.min() < 0 or d.max() > 3:
            raise ValueError("hop distances must lie in {0, 1, 2, 3}")
        d.setflags(write=False)
        object.__setattr__(self, "distance", d)

    @classmethod
    def from_layout(cls, dc: DatacenterState, kappa: float = 10.0, n_pods: int = 2) -> "MigrationCostModel":
        """Hop distances from the rack/pod layout: 0 same PM, 1 same rack,
        2 same pod, 3 across pods.  Racks are split into `n_pods` contiguous pods."""
        rack_of = dc.rack_of()
        racks_per_pod = max(1, math.ceil(dc.n_racks / max(1, n_pods)))
        pod_of_rack = np.arange(dc.n_racks) // racks_per_pod
        pod_of = pod_of_rack[rack_of]
        n = dc.n_pms
        d = np.full((n, n), 3, dtype=np.int8)
        same_pod = pod_of[:, None] == pod_of[None, :]
        same_rack = rack_of[:, None] == rack_of[None, :]
        d[same_pod] = 2
        d[same_rack] = 1
        np.fill_diagonal(d, 0)
        return cls(kappa=kappa, distance=d)

    def max_cell(self, vms) -> float:
        """Largest possible single-migration energy for this VM population, Wh."""
        if len(vms) == 0:
            return 0.0
        return self.kappa * max(v.mem_gb for v in vms) * float(self.distance.max(initial=0))


@dataclass(frozen=True)
class CostBreakdown:
    c_ene: float
    c_rel: float
    g_rel: float
    pm_energy_wh: float
    rack_energy_wh: float
    mig_energy_wh: float
    objective: float


# ---------------------------------------------------------------------------
# energy side


def pm_power(theta: float, pm: PmSpec) -> float:
    """Linear power curve: idle floor plus a utilization-proportional term, watts."""
    if not 0.0 <= theta <= 1.0 + 1e-9:
        raise ValueError(f"utilization {theta} outside [0, 1]")
    theta = min(theta, 1.0)
    return pm.k_idle * pm.p_max + (1.0 - pm.k_idle) * pm.p_max * theta


def pm_energy(pm: PmSpec, f00: int, f10: int, theta: float, tau: float) -> float:
    """Slot energy of one PM, Wh; zero when it is dark next slot."""
    return tau * (1 - f00 - f10) * pm_power(theta, pm)


def rack_energy(flags: TransitionFlags, racks, tau: float) -> float:
    """Slot energy of ToR switches and cooling for active racks, Wh."""
    return tau * sum((r.tor_power + r.cooling_power) * int(flags.y[r.id]) for r in racks)


def migration_energy(s_prev: Placement, s_next: Placement, model: MigrationCostModel, vms) -> float:
    """Total energy spent moving VMs between the two mappings, Wh."""
    prev_hosts = s_prev.hosts()
    next_hosts = s_next.hosts()
    total = 0.0
    for vm in vms:
        d = model.distance[prev_hosts[vm.id], next_hosts[vm.id]]
        total += model.kappa * vm.mem_gb * float(d)
    return total


def energy_components_wh(
    s_prev: Placement,
    s_next: Placement,
    dc: DatacenterState,
    weights: CostWeights,
    model: MigrationCostModel,
    flags: TransitionFlags | None = None,
) -> tuple[float, float, float]:
    """(pm, rack, migration) slot energies in Wh."""
    if flags is None:
        flags = derive_transition_flags(s_prev, s_next, dc)
    thetas = all_utilizations(s_next, dc)
    pm_wh = sum(
        pm_energy(pm, int(flags.f00[pm.id]), int(flags.f10[pm.id]), float(thetas[pm.id]), weights.tau)
        for pm in dc.pms
    )
    rack_wh = rack_energy(flags, dc.racks, weights.tau)
    mig_wh = migration_energy(s_prev, s_next, model, dc.vms)
    return pm_wh, rack_wh, mig_wh


def total_energy_cost(
    s_prev: Placement,
    s_next: Placement,
    dc: DatacenterState,
    weights: CostWeights,
    model: MigrationCostModel,
) -> float:
    """Electricity bill for the slot, dollars."""
    pm_wh, rack_wh, mig_wh = energy_components_wh(s_prev, s_next, dc, weights, model)
    return weights.rho * (pm_wh + rack_wh + mig_wh) / 1000.0


# ---------------------------------------------------------------------------
# reliability side


def afr(f: float, params: ReliabilityParams) -> float:
    """Empirical disk annual failure rate at start/stop count f, clamped positive.

    The raw quadratic goes negative on a short interval; a negative failure
    rate is nonphysical, so the value is floored at params.afr_floor.
    """
    if not 0 <= f <= MAX_CYCLE_COUNT:
        raise ValueError(f"cycle count {f} outside [0, {MAX_CYCLE_COUNT}]")
    raw = params.delta * 1e-5 * f * f - params.varrho * 1e-4 * f + params.varphi * 1e-4
    return max(raw, params.afr_floor)


def disk_cycle_cost(f: float, params: ReliabilityParams) -> float:
    """Hours of disk lifetime consumed by one more start/stop cycle."""
    if not 0 <= f <= MAX_CYCLE_COUNT - 1:
        raise ValueError(f"cycle count {f} outside [0, {MAX_CYCLE_COUNT - 1}]")
    h = params.hours_per_year
    return max(h / afr(f, params) - h / afr(f + 1, params), 0.0)


def cpu_cycle_cost(t_avg: float, params: ReliabilityParams) -> float:
    """Hours of CPU lifetime consumed by one off/on thermal cycle of amplitude
    t_avg - t_amb."""
    dt = t_avg - params.t_amb
    if dt <= 0:
        raise ValueError(f"average CPU temperature {t_avg} K must exceed ambient {params.t_amb} K")
    return params.mttf_hours * dt ** (-params.q)


def pm_avg_temperature(theta: float, pm: PmSpec) -> float:
    """Affine utilization-to-temperature map, kelvin."""
    return pm.t_idle + (pm.t_max - pm.t_idle) * theta


def pm_shutdown_cost(pm: PmSpec, theta_now: float, params: ReliabilityParams) -> float:
    """Lifetime hours lost if this PM powers off after running at theta_now."""
    return disk_cycle_cost(pm.cycle_count, params) + cpu_cycle_cost(
        pm_avg_temperature(theta_now, pm), params
    )


def total_reliability_cost(
    flags: TransitionFlags,
    dc: DatacenterState,
    weights: CostWeights,
    params: ReliabilityParams,
) -> float:
    """Dollar value of lifetime consumed by the PMs powering off this slot."""
    thetas = all_utilizations(dc.current, dc)
    total_hours = sum(
        pm_shutdown_cost(pm, float(thetas[pm.id]), params)
        for pm in dc.pms
        if flags.f10[pm.id]
    )
    return weights.omega * total_hours


def reliability_gain(flags: TransitionFlags, weights: CostWeights) -> float:
    """Dollar value of lifetime conserved by PMs staying dark for the slot."""
    return weights.omega * weights.tau * flags.n_off


# ---------------------------------------------------------------------------
# normalization bounds


def energy_upper_bound(dc: DatacenterState, weights: CostWeights, model: MigrationCostModel) -> float:
    """Largest electricity bill any feasible transition can produce, dollars.

    All racks on, all PMs on with the VM population spread in a balanced
    floor/ceiling split, and every VM migrating at the maximum per-migration
    energy.  The migration term is energy per event, so it is not scaled by
    the slot length.
    """
    rack_w = sum(r.tor_power + r.cooling_power for r in dc.racks)
    pm_w = _max_pm_power(dc)
    mig_wh = dc.n_vms * model.max_cell(dc.vms)
    return weights.rho * (weights.tau * (rack_w + pm_w) + mig_wh) / 1000.0


def _max_pm_power(dc: DatacenterState) -> float:
    """Total PM draw with everything online and VMs split floor/ceiling evenly."""
    n_p, n_v = dc.n_pms, dc.n_vms
    if n_p == 0:
        return 0.0
    mean_cpu = dc.demands("cpu").sum() / n_v if n_v else 0.0
    base = n_v // n_p
    eps = n_v - base * n_p  # PMs that host one extra VM
    total = 0.0
    for i, pm in enumerate(dc.pms):
        hosted = base + (1 if i < eps else 0)
        theta = min(1.0, hosted * mean_cpu / pm.cpu_capacity)
        total += pm_power(theta, pm)
    return total


def packing_floor(dc: DatacenterState) -> int:
    """Minimum number of PMs able to carry the total CPU demand."""
    cap = dc.capacities("cpu").max(initial=0.0)
    demand = dc.demands("cpu").sum()
    if demand > dc.capacities("cpu").sum() + 1e-9:
        raise InfeasibleError(f"total CPU demand {demand:g} exceeds total capacity")
    if cap <= 0 or demand <= 0:
        return 0
    return math.ceil(demand / cap - 1e-12)


def reliability_bounds(
    dc: DatacenterState, weights: CostWeights, params: ReliabilityParams
) -> tuple[float, float, int]:
    """(reliability-cost bound, reliability-gain bound, packing floor).

    At most |P| - floor PMs can be dark next slot; the cost bound charges the
    most expensive such set (only PMs online now can incur a shutdown), the
    gain bound credits all of them.
    """
    floor = packing_floor(dc)
    slots = max(dc.n_pms - floor, 0)
    thetas = all_utilizations(dc.current, dc)
    online = dc.online_now()
    shutdown_costs = sorted(
        (pm_shutdown_cost(pm, float(thetas[pm.id]), params) for pm in dc.pms if online[pm.id]),
        reverse=True,
    )
    c_rel_ub = weights.omega * sum(shutdown_costs[:slots])
    g_rel_ub = slots * weights.omega * weights.tau
    return c_rel_ub, g_rel_ub, floor


# ---------------------------------------------------------------------------
# objective


def _safe_ratio(value: float, bound: float) -> float:
    # a zero bound means the term cannot occur; its normalized value is 0
    return value / bound if bound > 0 else 0.0


def objective(
    s_prev: Placement,
    s_next: Placement,
    dc: DatacenterState,
    weights: CostWeights,
    params: ReliabilityParams,
    model: MigrationCostModel,
) -> tuple[float, CostBreakdown]:
    """Normalized weighted objective for the transition, plus raw components."""
    flags = derive_transition_flags(s_prev, s_next, dc)
    pm_wh, rack_wh, mig_wh = energy_components_wh(s_prev, s_next, dc, weights, model, flags)
    c_ene = weights.rho * (pm_wh + rack_wh + mig_wh) / 1000.0
    c_rel = total_reliability_cost(flags, dc, weights, params)
    g_rel = reliability_gain(flags, weights)
    c_ene_ub = energy_upper_bound(dc, weights, model)
    c_rel_ub, g_rel_ub, _ = reliability_bounds(dc, weights, params)
    value = (
        weights.alpha * _safe_ratio(c_ene, c_ene_ub)
        + weights.beta * _safe_ratio(c_rel, c_rel_ub)
        - weights.gamma * _safe_ratio(g_rel, g_rel_ub)
    )
    return value, CostBreakdown(
        c_ene=c_ene,
        c_rel=c_rel,
        g_rel=g_rel,
        pm_energy_wh=pm_wh,
        rack_energy_wh=rack_wh,
        mig_energy_wh=mig_wh,
        objective=value,
    )
