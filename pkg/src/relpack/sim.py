"""Slotted-time consolidation simulation: seed an initial mapping, run the
placement policy once per slot, and account for the resulting costs and
disk cycle counts."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import costs as C
from . import solver as S
from .domain import (
    DatacenterState,
    Placement,
    PmSpec,
    RackSpec,
    VmSpec,
    derive_transition_flags,
    validate_placement,
)


@dataclass(frozen=True)
class PmTemplate:
    cpu_capacity: float = 2000.0   # MIPS
    ram_capacity: float = 10240.0  # MB
    bw_capacity: float = 1000.0    # Mbps
    p_max: float = 300.0
    k_idle: float = 0.7
    t_idle: float = 318.0
    t_max: float = 350.0


@dataclass(frozen=True)
class VmTemplate:
    cpu_demand: float = 500.0
    ram_demand: float = 612.0
    mem_gb: float = 0.612


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce a run: topology, templates, prices, seed."""

    n_racks: int = 8
    pms_per_rack: int = 4
    tor_power: float = 366.0
    cooling_power: float = 950.0
    n_vms: int = 52
    pm: PmTemplate = field(default_factory=PmTemplate)
    vm: VmTemplate = field(default_factory=VmTemplate)
    weights: C.CostWeights = field(default_factory=C.CostWeights)
    reliability: C.ReliabilityParams = field(default_factory=C.ReliabilityParams)
    kappa: float = 10.0
    n_pods: int = 2
    cycle_count_base: int = 100
    cycle_count_spread: int = 0  # counters drawn uniformly from base +/- spread
    # alternative: explicit (pm_count, cycle_count) tiers dealt out by
    # descending current load; overrides base/spread when set.  Machines that
    # run loaded rarely power-cycle, so they sit in the low-count tiers.
    cycle_count_tiers: tuple[tuple[int, int], ...] | None = None
    seed: int = 0
    n_slots: int = 1
    solver: str = "exact"  # "exact" | "greedy"
    time_cap: float = 300.0

    def __post_init__(self):
        if self.n_racks <= 0 or self.pms_per_rack <= 0 or self.n_vms < 0:
            raise ValueError("counts must be positive")
        if self.solver not in ("exact", "greedy"):
            raise ValueError(f"unknown solver kind {self.solver!r}")
        if self.cycle_count_tiers is not None:
            if sum(n for n, _ in self.cycle_count_tiers) != self.n_pms:
                raise ValueError("cycle_count_tiers counts must sum to the PM count")

    @property
    def n_pms(self) -> int:
        return self.n_racks * self.pms_per_rack


@dataclass(frozen=True)
class SlotReport:
    slot: int
    active_racks: int
    active_pms: int
    n_migrations: int
    c_ene: float
    c_rel: float
    g_rel: float
    objective: float
    nodes_explored: int
    wall_time: float
    proof: str


def build_datacenter(scenario: Scenario, seed: int | None = None) -> DatacenterState:
    """Instantiate the topology and a random initial mapping for the given seed."""
    if seed is None:
        seed = scenario.seed
    rng = np.random.default_rng(seed)
    racks = []
    pms = []
    for r in range(scenario.n_racks):
        ids = tuple(range(r * scenario.pms_per_rack, (r + 1) * scenario.pms_per_rack))
        racks.append(RackSpec(r, ids, scenario.tor_power, scenario.cooling_power))
    placement = random_initial_placement(scenario, rng)
    if scenario.cycle_count_tiers is not None:
        pool = [f for n, f in scenario.cycle_count_tiers for _ in range(n)]
        loads = placement.pm_loads()
        rank = np.lexsort((np.arange(scenario.n_pms), -loads))
        counters = np.empty(scenario.n_pms, dtype=int)
        counters[rank] = pool
    elif scenario.cycle_count_spread:
        counters = rng.integers(
            max(0, scenario.cycle_count_base - scenario.cycle_count_spread),
            scenario.cycle_count_base + scenario.cycle_count_spread + 1,
            size=scenario.n_pms,
        )
    else:
        counters = np.full(scenario.n_pms, scenario.cycle_count_base)
    for p in range(scenario.n_pms):
        t = scenario.pm
        pms.append(
            PmSpec(
                id=p,
                rack_id=p // scenario.pms_per_rack,
                cpu_capacity=t.cpu_capacity,
                ram_capacity=t.ram_capacity,
                bw_capacity=t.bw_capacity,
                p_max=t.p_max,
                k_idle=t.k_idle,
                cycle_count=int(counters[p]),
                t_idle=t.t_idle,
                t_max=t.t_max,
            )
        )
    vms = [
        VmSpec(v, scenario.vm.cpu_demand, scenario.vm.ram_demand, scenario.vm.mem_gb)
        for v in range(scenario.n_vms)
    ]
    return DatacenterState(tuple(racks), tuple(pms), tuple(vms), placement, slot_index=0)


def random_initial_placement(scenario: Scenario, rng: np.random.Generator) -> Placement:
    """Uniform random feasible mapping: random host per VM with a first-fit
    fallback scan, retried from scratch when the scan dead-ends."""
    n_v, n_p = scenario.n_vms, scenario.n_pms
    cpu = np.full(n_v, scenario.vm.cpu_demand)
    ram = np.full(n_v, scenario.vm.ram_demand)
    for _attempt in range(1000):
        cpu_rem = np.full(n_p, scenario.pm.cpu_capacity)
        ram_rem = np.full(n_p, scenario.pm.ram_capacity)
        hosts = np.full(n_v, -1, dtype=int)
        order = rng.permutation(n_v)
        ok = True
        for v in order:
            start = int(rng.integers(n_p))
            for k in range(n_p):
                p = (start + k) % n_p
                if cpu[v] <= cpu_rem[p] + 1e-9 and ram[v] <= ram_rem[p] + 1e-9:
                    hosts[v] = p
                    cpu_rem[p] -= cpu[v]
                    ram_rem[p] -= ram[v]
                    break
            else:
                ok = False
                break
        if ok:
            return Placement.from_hosts(hosts, n_p)
    raise C.InfeasibleError("could not place the VM population after 1000 attempts")


def migration_model(scenario: Scenario, dc: DatacenterState) -> C.MigrationCostModel:
    return C.MigrationCostModel.from_layout(dc, kappa=scenario.kappa, n_pods=scenario.n_pods)


def _solve(dc: DatacenterState, scenario: Scenario, mig: C.MigrationCostModel) -> S.SolveResult:
    if scenario.solver == "greedy":
        return S.greedy_incumbent(dc, scenario.weights, scenario.reliability, mig)
    return S.solve_exact(dc, scenario.weights, scenario.reliability, mig, scenario.time_cap)


def step(state: DatacenterState, scenario: Scenario) -> tuple[DatacenterState, SlotReport]:
    """Run the policy for one slot and advance the state."""
    mig = migration_model(scenario, state)
    result = _solve(state, scenario, mig)
    flags = derive_transition_flags(state.current, result.placement, state)
    n_migrations = int(
        (state.current.hosts() != result.placement.hosts()).sum()
    )
    report = SlotReport(
        slot=state.slot_index,
        active_racks=int(flags.y.sum()),
        active_pms=int(flags.x.sum()),
        n_migrations=n_migrations,
        c_ene=result.breakdown.c_ene,
        c_rel=result.breakdown.c_rel,
        g_rel=result.breakdown.g_rel,
        objective=result.objective,
        nodes_explored=result.nodes_explored,
        wall_time=result.wall_time,
        proof=result.proof,
    )
    next_state = state.with_placement(result.placement, cycle_increments=flags.f10)
    return next_state, report


def run(scenario: Scenario, seed: int | None = None) -> list[SlotReport]:
    """Simulate `n_slots` consolidation decisions from a seeded initial mapping."""
    state = build_datacenter(scenario, seed)
    reports = []
    for _ in range(scenario.n_slots):
        state, report = step(state, scenario)
        reports.append(report)
    return reports
