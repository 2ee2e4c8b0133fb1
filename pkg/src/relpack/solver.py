"""Exact and heuristic solvers for the next-slot placement decision.

`solve_exact` is a depth-first branch-and-bound over VM-to-PM assignments,
seeded with deterministic greedy incumbents.  Its search effort is capped by
a node budget derived from the time cap at a fixed calibrated rate, so a
given instance always explores exactly the same nodes regardless of wall
clock or host speed.  `solve_bruteforce` is the enumeration oracle.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import costs as C
from .domain import DatacenterState, Placement, all_utilizations

# Deterministic work accounting: a "second" of cap buys this many search nodes.
NODES_PER_SECOND = 20_000

BRUTE_FORCE_LIMIT = 10_000_000

TIE_EPS = 1e-12


@dataclass(frozen=True)
class SolveResult:
    placement: Placement
    objective: float
    breakdown: C.CostBreakdown
    nodes_explored: int
    wall_time: float  # deterministic work estimate, nodes / NODES_PER_SECOND
    proof: str        # "optimal" | "time-capped" | "heuristic"
    clock_seconds: float = 0.0  # measured, informational only


class _FastEval:
    """Vectorized objective evaluation for a fixed instance.

    Matches `costs.objective` up to float summation order; the authoritative
    value reported in a SolveResult is always recomputed through `costs`.
    """

    def __init__(self, dc: DatacenterState, weights: C.CostWeights,
                 params: C.ReliabilityParams, mig_model: C.MigrationCostModel):
        self.dc = dc
        self.weights = weights
        self.n_pms = dc.n_pms
        self.cpu = dc.demands("cpu")
        self.ram = dc.demands("ram")
        self.cpu_cap = dc.capacities("cpu")
        self.ram_cap = dc.capacities("ram")
        self.idle_wh = np.array(
            [weights.tau * p.k_idle * p.p_max for p in dc.pms]
        )
        self.slope_wh = np.array(
            [weights.tau * (1 - p.k_idle) * p.p_max / p.cpu_capacity for p in dc.pms]
        )
        self.rack_wh = np.array(
            [weights.tau * (r.tor_power + r.cooling_power) for r in dc.racks]
        )
        self.rack_of = dc.rack_of()
        self.online_prev = dc.online_now()
        self.prev_hosts = dc.current.hosts()
        mem = np.array([v.mem_gb for v in dc.vms])
        self.mig_wh = (
            mig_model.kappa
            * mem[:, None]
            * mig_model.distance[self.prev_hosts, :].astype(float)
        )
        thetas_now = all_utilizations(dc.current, dc)
        self.relcost = np.array(
            [
                weights.omega * C.pm_shutdown_cost(pm, float(thetas_now[pm.id]), params)
                if self.online_prev[pm.id]
                else 0.0
                for pm in dc.pms
            ]
        )
        self.c_ene_ub = C.energy_upper_bound(dc, weights, mig_model)
        self.c_rel_ub, self.g_rel_ub, self.floor = C.reliability_bounds(dc, weights, params)
        self.ene_scale = (
            weights.alpha * weights.rho / 1000.0 / self.c_ene_ub if self.c_ene_ub > 0 else 0.0
        )
        self.rel_scale = weights.beta / self.c_rel_ub if self.c_rel_ub > 0 else 0.0
        self.gain_scale = weights.gamma / self.g_rel_ub if self.g_rel_ub > 0 else 0.0
        self.gain_unit = weights.omega * weights.tau

    def feasible(self, hosts: np.ndarray) -> bool:
        cpu_used = np.bincount(hosts, weights=self.cpu, minlength=self.n_pms)
        if (cpu_used > self.cpu_cap + 1e-9).any():
            return False
        ram_used = np.bincount(hosts, weights=self.ram, minlength=self.n_pms)
        return not (ram_used > self.ram_cap + 1e-9).any()

    def objective(self, hosts: np.ndarray) -> float:
        counts = np.bincount(hosts, minlength=self.n_pms)
        opened = counts > 0
        cpu_used = np.bincount(hosts, weights=self.cpu, minlength=self.n_pms)
        pm_wh = self.idle_wh[opened].sum() + (self.slope_wh * cpu_used)[opened].sum()
        open_racks = np.unique(self.rack_of[opened])
        rack_wh = self.rack_wh[open_racks].sum() if open_racks.size else 0.0
        mig_wh = self.mig_wh[np.arange(len(hosts)), hosts].sum()
        ene = self.ene_scale * (pm_wh + rack_wh + mig_wh)
        f10_cost = self.relcost[self.online_prev & ~opened].sum()
        n_off = int((~opened).sum())
        return ene + self.rel_scale * f10_cost - self.gain_scale * self.gain_unit * n_off


def _result(
    hosts: np.ndarray,
    dc: DatacenterState,
    weights: C.CostWeights,
    params: C.ReliabilityParams,
    mig_model: C.MigrationCostModel,
    nodes: int,
    proof: str,
    clock: float,
) -> SolveResult:
    placement = Placement.from_hosts(hosts, dc.n_pms)
    value, breakdown = C.objective(dc.current, placement, dc, weights, params, mig_model)
    return SolveResult(
        placement=placement,
        objective=float(value),
        breakdown=breakdown,
        nodes_explored=nodes,
        wall_time=nodes / NODES_PER_SECOND,
        proof=proof,
        clock_seconds=clock,
    )


# ---------------------------------------------------------------------------
# brute force oracle


def solve_bruteforce(
    dc: DatacenterState,
    weights: C.CostWeights,
    params: C.ReliabilityParams,
    mig_model: C.MigrationCostModel,
) -> SolveResult:
    """Enumerate every assignment in lexicographic order; ties keep the first."""
    n_v, n_p = dc.n_vms, dc.n_pms
    if n_p**n_v > BRUTE_FORCE_LIMIT:
        raise ValueError(f"instance too large for enumeration: {n_p}^{n_v} assignments")
    ev = _FastEval(dc, weights, params, mig_model)
    hosts = np.zeros(n_v, dtype=int)
    best_hosts: np.ndarray | None = None
    best = float("inf")
    nodes = 0
    cpu_rem = ev.cpu_cap.copy()
    ram_rem = ev.ram_cap.copy()
    t0 = time.perf_counter()

    def recurse(v: int):
        nonlocal best, best_hosts, nodes
        nodes += 1
        if v == n_v:
            obj = ev.objective(hosts)
            if obj < best - TIE_EPS:
                best = obj
                best_hosts = hosts.copy()
            return
        for p in range(n_p):
            if ev.cpu[v] <= cpu_rem[p] + 1e-9 and ev.ram[v] <= ram_rem[p] + 1e-9:
                hosts[v] = p
                cpu_rem[p] -= ev.cpu[v]
                ram_rem[p] -= ev.ram[v]
                recurse(v + 1)
                cpu_rem[p] += ev.cpu[v]
                ram_rem[p] += ev.ram[v]

    recurse(0)
    if best_hosts is None:
        raise C.InfeasibleError("no feasible assignment exists")
    return _result(best_hosts, dc, weights, params, mig_model, nodes, "optimal",
                   time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# greedy + candidate construction


def greedy_incumbent(
    dc: DatacenterState,
    weights: C.CostWeights,
    params: C.ReliabilityParams,
    mig_model: C.MigrationCostModel,
) -> SolveResult:
    """First-fit-decreasing on CPU demand, trying currently-online PMs first."""
    ev = _FastEval(dc, weights, params, mig_model)
    order = sorted(range(dc.n_vms), key=lambda v: (-ev.cpu[v], v))
    pm_order = sorted(range(dc.n_pms), key=lambda p: (0 if ev.online_prev[p] else 1, p))
    hosts = _first_fit(dc, ev, order, pm_order)
    if hosts is None:
        raise C.InfeasibleError("first-fit-decreasing found no feasible assignment")
    return _result(hosts, dc, weights, params, mig_model, 0, "heuristic", 0.0)


def _first_fit(dc, ev, vm_order, pm_order, prefer_current=False) -> np.ndarray | None:
    cpu_rem = ev.cpu_cap.copy()
    ram_rem = ev.ram_cap.copy()
    hosts = np.full(dc.n_vms, -1, dtype=int)
    allowed = set(pm_order)
    for v in vm_order:
        placed = False
        if prefer_current:
            p = int(ev.prev_hosts[v])
            if p in allowed and ev.cpu[v] <= cpu_rem[p] + 1e-9 and ev.ram[v] <= ram_rem[p] + 1e-9:
                hosts[v] = p
                cpu_rem[p] -= ev.cpu[v]
                ram_rem[p] -= ev.ram[v]
                placed = True
        if not placed:
            for p in pm_order:
                if ev.cpu[v] <= cpu_rem[p] + 1e-9 and ev.ram[v] <= ram_rem[p] + 1e-9:
                    hosts[v] = p
                    cpu_rem[p] -= ev.cpu[v]
                    ram_rem[p] -= ev.ram[v]
                    placed = True
                    break
        if not placed:
            return None
    return hosts


def _candidate_placements(dc: DatacenterState, ev: _FastEval, mig_model: C.MigrationCostModel) -> list[np.ndarray]:
    """Deterministic family of good starting placements."""
    cands = [ev.prev_hosts.copy()]  # status quo is always feasible
    vm_order = sorted(range(dc.n_vms), key=lambda v: (-ev.cpu[v], v))
    util_now = np.bincount(ev.prev_hosts, weights=ev.cpu, minlength=dc.n_pms) / ev.cpu_cap
    online_ids = [p for p in range(dc.n_pms) if ev.online_prev[p]]
    offline_ids = [p for p in range(dc.n_pms) if not ev.online_prev[p]]
    # pack onto m machines, keeping the fullest current hosts and cheap moves;
    # the second ranking fills the busiest racks first so whole racks go dark
    rack_util = np.bincount(ev.rack_of, weights=util_now, minlength=dc.n_racks)
    ranked_by_pm = sorted(online_ids, key=lambda p: (-util_now[p], p)) + offline_ids
    ranked_by_rack = sorted(
        range(dc.n_pms),
        key=lambda p: (-rack_util[ev.rack_of[p]], ev.rack_of[p], -util_now[p], p),
    )
    lo = max(ev.floor, 1) if dc.n_vms else 0
    for m in range(lo, dc.n_pms + 1):
        for ranked in (ranked_by_pm, ranked_by_rack):
            targets = ranked[:m]
            order_for = {
                v: sorted(
                    targets,
                    key=lambda p: (int(mig_model.distance[ev.prev_hosts[v], p]), p),
                )
                for v in range(dc.n_vms)
            }
            cpu_rem = ev.cpu_cap.copy()
            ram_rem = ev.ram_cap.copy()
            hosts = np.full(dc.n_vms, -1, dtype=int)
            ok = True
            for v in vm_order:
                for p in order_for[v]:
                    if ev.cpu[v] <= cpu_rem[p] + 1e-9 and ev.ram[v] <= ram_rem[p] + 1e-9:
                        hosts[v] = p
                        cpu_rem[p] -= ev.cpu[v]
                        ram_rem[p] -= ev.ram[v]
                        break
                else:
                    ok = False
                    break
            if ok:
                cands.append(hosts)
    return cands


def _local_search(hosts: np.ndarray, ev: _FastEval, mig_model: C.MigrationCostModel) -> np.ndarray:
    """Greedy descent over single-PM shutdown moves."""
    hosts = hosts.copy()
    best = ev.objective(hosts)
    for _ in range(ev.n_pms):
        best_move = None
        counts = np.bincount(hosts, minlength=ev.n_pms)
        for victim in np.nonzero(counts > 0)[0]:
            trial = hosts.copy()
            cpu_rem = ev.cpu_cap - np.bincount(hosts, weights=ev.cpu, minlength=ev.n_pms)
            ram_rem = ev.ram_cap - np.bincount(hosts, weights=ev.ram, minlength=ev.n_pms)
            vms = sorted(np.nonzero(hosts == victim)[0], key=lambda v: (-ev.cpu[v], v))
            # evictees may only land on PMs that stay active; opening a new PM
            # is never part of a shutdown move
            choices = sorted(
                (p for p in range(ev.n_pms) if p != victim and counts[p] > 0),
                key=lambda p: (int(mig_model.distance[victim, p]), p),
            )
            ok = True
            for v in vms:
                placed = False
                for p in choices:
                    if ev.cpu[v] <= cpu_rem[p] + 1e-9 and ev.ram[v] <= ram_rem[p] + 1e-9:
                        trial[v] = p
                        cpu_rem[p] -= ev.cpu[v]
                        ram_rem[p] -= ev.ram[v]
                        placed = True
                        break
                if not placed:
                    ok = False
                    break
            if not ok:
                continue
            obj = ev.objective(trial)
            if obj < best - TIE_EPS and (best_move is None or obj < best_move[0] - TIE_EPS):
                best_move = (obj, trial)
        if best_move is None:
            break
        best, hosts = best_move
    return hosts


class _Budget(Exception):
    pass


class _BranchAndBound:
    def __init__(self, dc, ev: _FastEval, mig_model, node_budget: int):
        self.dc = dc
        self.ev = ev
        self.mig = mig_model
        self.node_budget = node_budget
        self.nodes = 0
        self.vm_order = sorted(range(dc.n_vms), key=lambda v: (-ev.cpu[v], v))
        # cheapest possible load-proportional energy for a yet-unplaced VM
        self.fluid_wh = ev.slope_wh.min() * ev.cpu if dc.n_pms else ev.cpu * 0.0
        self.best = float("inf")
        self.best_hosts: np.ndarray | None = None
        self.complete = True

    def seed(self, hosts: np.ndarray, obj: float):
        if obj < self.best - TIE_EPS or (
            obj <= self.best + TIE_EPS
            and (self.best_hosts is None or tuple(hosts) < tuple(self.best_hosts))
        ):
            self.best = min(obj, self.best)
            self.best_hosts = hosts.copy()

    def node_bound(self, counts, cpu_used, mig_acc, depth) -> float:
        """Admissible lower bound for all completions of a partial assignment."""
        ev = self.ev
        opened = counts > 0
        pm_wh = ev.idle_wh[opened].sum() + (ev.slope_wh * cpu_used)[opened].sum()
        open_racks = np.unique(ev.rack_of[opened])
        rack_wh = ev.rack_wh[open_racks].sum() if open_racks.size else 0.0
        fluid = sum(self.fluid_wh[v] for v in self.vm_order[depth:])
        ene_lb = ev.ene_scale * (pm_wh + rack_wh + mig_acc + fluid)
        n_open = int(opened.sum())
        max_off = self.dc.n_pms - n_open
        gain_ub = ev.gain_scale * ev.gain_unit * max_off
        return ene_lb - gain_ub

    def run(self):
        hosts = np.zeros(self.dc.n_vms, dtype=int)
        counts = np.zeros(self.dc.n_pms, dtype=int)
        cpu_used = np.zeros(self.dc.n_pms)
        cpu_rem = self.ev.cpu_cap.copy()
        ram_rem = self.ev.ram_cap.copy()
        try:
            self._dfs(0, hosts, counts, cpu_used, cpu_rem, ram_rem, 0.0)
        except _Budget:
            self.complete = False

    def _dfs(self, depth, hosts, counts, cpu_used, cpu_rem, ram_rem, mig_acc):
        self.nodes += 1
        if self.nodes > self.node_budget:
            raise _Budget
        ev = self.ev
        if depth == len(self.vm_order):
            obj = ev.objective(hosts)
            self.seed(hosts, obj)
            return
        if self.node_bound(counts, cpu_used, mig_acc, depth) > self.best + TIE_EPS:
            return
        v = self.vm_order[depth]
        rack_open = np.bincount(ev.rack_of[counts > 0], minlength=self.dc.n_racks)
        order = sorted(
            range(self.dc.n_pms),
            key=lambda p: (
                0 if ev.online_prev[p] else 1,
                -int(rack_open[ev.rack_of[p]]),
                p,
            ),
        )
        for p in order:
            if ev.cpu[v] > cpu_rem[p] + 1e-9 or ev.ram[v] > ram_rem[p] + 1e-9:
                continue
            hosts[v] = p
            counts[p] += 1
            cpu_used[p] += ev.cpu[v]
            cpu_rem[p] -= ev.cpu[v]
            ram_rem[p] -= ev.ram[v]
            self._dfs(depth + 1, hosts, counts, cpu_used, cpu_rem, ram_rem,
                      mig_acc + ev.mig_wh[v, p])
            counts[p] -= 1
            cpu_used[p] -= ev.cpu[v]
            cpu_rem[p] += ev.cpu[v]
            ram_rem[p] += ev.ram[v]


def solve_exact(
    dc: DatacenterState,
    weights: C.CostWeights,
    params: C.ReliabilityParams,
    mig_model: C.MigrationCostModel,
    time_cap: float = 300.0,
) -> SolveResult:
    """Branch-and-bound with deterministic effort capping.

    Within the cap the result is globally optimal with the lexicographically
    smallest assignment among ties; past the cap the best incumbent is
    returned and labeled as such.
    """
    if time_cap <= 0:
        raise ValueError("time_cap must be positive")
    t0 = time.perf_counter()
    ev = _FastEval(dc, weights, params, mig_model)
    bnb = _BranchAndBound(dc, ev, mig_model, max(1, int(time_cap * NODES_PER_SECOND)))
    seeds = _candidate_placements(dc, ev, mig_model)
    for hosts in seeds:
        improved = _local_search(hosts, ev, mig_model)
        for h in (hosts, improved):
            if ev.feasible(h):
                bnb.seed(h, ev.objective(h))
    bnb.run()
    if bnb.best_hosts is None:
        raise C.InfeasibleError("no feasible assignment exists")
    proof = "optimal" if bnb.complete else "time-capped"
    return _result(bnb.best_hosts, dc, weights, params, mig_model, bnb.nodes, proof,
                   time.perf_counter() - t0)
