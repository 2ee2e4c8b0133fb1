"""Exact MILP formulation of the consolidation problem, plus LP-format export.

The model is linear by construction: the bilinear product between a PM's
on/off state and its load-dependent power vanishes at every integer-feasible
point, because the assignment columns of a dark PM are forced to zero.  The
activity indicators are pinned to the assignment (not just bounded by it) so
that every integer-feasible point decodes to a unique placement with the
same objective value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import costs as C
from .domain import DatacenterState, Placement, derive_transition_flags, all_utilizations


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: dict[str, float]
    sense: str  # "<=", ">=", "="
    rhs: float


@dataclass(frozen=True)
class ModelStats:
    n_binary: int
    n_continuous: int
    n_constraints: int
    closed_form: str


@dataclass
class MilpModel:
    binary_names: list[str]
    continuous_names: list[str]
    objective: dict[str, float]
    constraints: list[Constraint]
    big_m: dict[str, float]
    # cont var -> (linear coeffs over binaries, constant); used for decoding
    definitions: dict[str, tuple[dict[str, float], float]]
    n_vms: int
    n_pms: int
    n_racks: int

    @property
    def var_names(self) -> list[str]:
        return self.binary_names + self.continuous_names


def _s(v: int, p: int) -> str:
    return f"S_{v}_{p}"


def build_model(
    dc: DatacenterState,
    weights: C.CostWeights,
    params: C.ReliabilityParams,
    mig_model: C.MigrationCostModel,
) -> MilpModel:
    """Assemble the full model for deciding the next slot's placement."""
    n_v, n_p, n_r = dc.n_vms, dc.n_pms, dc.n_racks

    for resource in ("cpu", "ram"):
        if dc.demands(resource).sum() > dc.capacities(resource).sum() + 1e-9:
            raise C.InfeasibleError(f"aggregate {resource} demand exceeds capacity")
        if n_v and dc.demands(resource).max() > dc.capacities(resource).max() + 1e-9:
            raise C.InfeasibleError(f"some VM's {resource} demand fits on no PM")

    c_ene_ub = C.energy_upper_bound(dc, weights, mig_model)
    c_rel_ub, g_rel_ub, _ = C.reliability_bounds(dc, weights, params)

    binaries = (
        [_s(v, p) for v in range(n_v) for p in range(n_p)]
        + [f"X_{p}" for p in range(n_p)]
        + [f"Y_{r}" for r in range(n_r)]
        + [f"F00_{p}" for p in range(n_p)]
        + [f"F10_{p}" for p in range(n_p)]
    )
    continuous = [f"Epm_{p}" for p in range(n_p)] + ["Erack", "Emig", "Crel", "Grel"]

    cons: list[Constraint] = []
    online = dc.online_now()
    prev_hosts = dc.current.hosts()
    thetas_now = all_utilizations(dc.current, dc)
    cpu = dc.demands("cpu")

    # transition flags consistent with the current slot's on/off states
    for p in range(n_p):
        dead = "F10" if not online[p] else "F00"
        cons.append(Constraint(f"fix_{dead.lower()}_{p}", {f"{dead}_{p}": 1.0}, "=", 0.0))

    # a dark PM hosts nothing...
    for v in range(n_v):
        for p in range(n_p):
            cons.append(
                Constraint(
                    f"dark_pm_empty_{v}_{p}",
                    {_s(v, p): 1.0, f"F10_{p}": 1.0, f"F00_{p}": 1.0},
                    "<=",
                    1.0,
                )
            )
    # ...and an empty PM must be dark
    for p in range(n_p):
        coeffs = {_s(v, p): 1.0 for v in range(n_v)}
        coeffs[f"F10_{p}"] = 1.0
        coeffs[f"F00_{p}"] = 1.0
        cons.append(Constraint(f"empty_pm_dark_{p}", coeffs, ">=", 1.0))

    # capacity per packed resource
    for resource in C_PACKED:
        demand = dc.demands(resource)
        cap = dc.capacities(resource)
        for p in range(n_p):
            cons.append(
                Constraint(
                    f"cap_{resource}_{p}",
                    {_s(v, p): float(demand[v]) for v in range(n_v)},
                    "<=",
                    float(cap[p]),
                )
            )

    # every VM on exactly one PM
    for v in range(n_v):
        cons.append(
            Constraint(f"one_host_{v}", {_s(v, p): 1.0 for p in range(n_p)}, "=", 1.0)
        )

    big_m: dict[str, float] = {"pm_activity": float(max(n_v, 1))}
    # PM activity switch: hosting forces X=1 (big-M = |V|, the tightest valid constant)
    for p in range(n_p):
        coeffs = {_s(v, p): 1.0 for v in range(n_v)}
        coeffs[f"X_{p}"] = -big_m["pm_activity"]
        cons.append(Constraint(f"pm_activity_{p}", coeffs, "<=", 0.0))

    # rack activity switch: any active member PM forces Y=1 (big-M = rack size)
    for rack in dc.racks:
        m = float(len(rack.pm_ids))
        big_m[f"rack_activity_{rack.id}"] = m
        coeffs = {f"X_{p}": 1.0 for p in rack.pm_ids}
        coeffs[f"Y_{rack.id}"] = -m
        cons.append(Constraint(f"rack_activity_{rack.id}", coeffs, "<=", 0.0))

    # pin the indicators so every feasible point decodes uniquely:
    # X complements the dark flags; Y cannot exceed its racks' activity
    for p in range(n_p):
        cons.append(
            Constraint(
                f"x_link_{p}",
                {f"X_{p}": 1.0, f"F00_{p}": 1.0, f"F10_{p}": 1.0},
                "=",
                1.0,
            )
        )
    for rack in dc.racks:
        coeffs = {f"X_{p}": -1.0 for p in rack.pm_ids}
        coeffs[f"Y_{rack.id}"] = 1.0
        cons.append(Constraint(f"y_link_{rack.id}", coeffs, "<=", 0.0))

    definitions: dict[str, tuple[dict[str, float], float]] = {}

    # per-PM slot energy, Wh; linear because dark PMs carry no assignments
    for pm in dc.pms:
        p = pm.id
        idle_wh = weights.tau * pm.k_idle * pm.p_max
        expr = {f"F00_{p}": -idle_wh, f"F10_{p}": -idle_wh}
        slope = weights.tau * (1.0 - pm.k_idle) * pm.p_max / pm.cpu_capacity
        for v in range(n_v):
            expr[_s(v, p)] = slope * float(cpu[v])
        definitions[f"Epm_{p}"] = (expr, idle_wh)

    # rack slot energy, Wh
    expr = {
        f"Y_{rack.id}": weights.tau * (rack.tor_power + rack.cooling_power)
        for rack in dc.racks
    }
    definitions["Erack"] = (expr, 0.0)

    # migration energy, Wh; the current mapping is data, so this is linear in S
    expr = {}
    for vm in dc.vms:
        src = int(prev_hosts[vm.id])
        for p in range(n_p):
            cell = mig_model.kappa * vm.mem_gb * float(mig_model.distance[src, p])
            if cell:
                expr[_s(vm.id, p)] = cell
    definitions["Emig"] = (expr, 0.0)

    # reliability cost: lifetime value destroyed by shutdowns, dollars
    expr = {}
    for pm in dc.pms:
        if online[pm.id]:
            expr[f"F10_{pm.id}"] = weights.omega * C.pm_shutdown_cost(
                pm, float(thetas_now[pm.id]), params
            )
    definitions["Crel"] = (expr, 0.0)

    # reliability gain: lifetime value conserved by dark PMs, dollars
    expr = {}
    for p in range(n_p):
        expr[f"F00_{p}"] = weights.omega * weights.tau
        expr[f"F10_{p}"] = weights.omega * weights.tau
    definitions["Grel"] = (expr, 0.0)

    for name, (expr, const) in definitions.items():
        coeffs = {name: 1.0}
        for var, coef in expr.items():
            coeffs[var] = coeffs.get(var, 0.0) - coef
        cons.append(Constraint(f"def_{name.lower()}", coeffs, "=", const))

    ene_scale = weights.alpha * weights.rho / 1000.0 / c_ene_ub if c_ene_ub > 0 else 0.0
    obj: dict[str, float] = {}
    for p in range(n_p):
        obj[f"Epm_{p}"] = ene_scale
    obj["Erack"] = ene_scale
    obj["Emig"] = ene_scale
    obj["Crel"] = weights.beta / c_rel_ub if c_rel_ub > 0 else 0.0
    obj["Grel"] = -weights.gamma / g_rel_ub if g_rel_ub > 0 else 0.0

    return MilpModel(
        binary_names=binaries,
        continuous_names=continuous,
        objective=obj,
        constraints=cons,
        big_m=big_m,
        definitions=definitions,
        n_vms=n_v,
        n_pms=n_p,
        n_racks=n_r,
    )


C_PACKED = ("cpu", "ram")

STATS_CLOSED_FORM = (
    "n_binary = V*P + 3P + R; n_continuous = P + 4; "
    "n_constraints = V*P + V + 7P + 2R + 4"
)


def model_stats(model: MilpModel) -> ModelStats:
    stats = ModelStats(
        n_binary=len(model.binary_names),
        n_continuous=len(model.continuous_names),
        n_constraints=len(model.constraints),
        closed_form=STATS_CLOSED_FORM,
    )
    v, p, r = model.n_vms, model.n_pms, model.n_racks
    assert stats.n_binary == v * p + 3 * p + r
    assert stats.n_continuous == p + 4
    assert stats.n_constraints == v * p + v + 7 * p + 2 * r + 4
    return stats


def expected_counts(n_vms: int, n_pms: int, n_racks: int) -> tuple[int, int, int]:
    """(binary, continuous, constraint) counts from the documented closed form."""
    return (
        n_vms * n_pms + 3 * n_pms + n_racks,
        n_pms + 4,
        n_vms * n_pms + n_vms + 7 * n_pms + 2 * n_racks + 4,
    )


# ---------------------------------------------------------------------------
# assignment helpers


def assignment_for_placement(model: MilpModel, dc: DatacenterState, placement: Placement) -> dict[str, float]:
    """Full variable assignment implied by a next-slot placement."""
    flags = derive_transition_flags(dc.current, placement, dc)
    values: dict[str, float] = {}
    for v in range(model.n_vms):
        for p in range(model.n_pms):
            values[_s(v, p)] = float(placement.assign[v, p])
    for p in range(model.n_pms):
        values[f"X_{p}"] = float(flags.x[p])
        values[f"F00_{p}"] = float(flags.f00[p])
        values[f"F10_{p}"] = float(flags.f10[p])
    for r in range(model.n_racks):
        values[f"Y_{r}"] = float(flags.y[r])
    for name, (expr, const) in model.definitions.items():
        values[name] = const + sum(coef * values[var] for var, coef in expr.items())
    return values


def objective_value(model: MilpModel, values: dict[str, float]) -> float:
    return sum(coef * values[name] for name, coef in model.objective.items())


def check_assignment(model: MilpModel, values: dict[str, float], tol: float = 1e-6) -> list[str]:
    """Names of constraints the assignment violates."""
    bad = []
    for con in model.constraints:
        lhs = sum(coef * values.get(var, 0.0) for var, coef in con.coeffs.items())
        ok = (
            lhs <= con.rhs + tol
            if con.sense == "<="
            else lhs >= con.rhs - tol
            if con.sense == ">="
            else abs(lhs - con.rhs) <= tol
        )
        if not ok:
            bad.append(con.name)
    return bad


def decode_placement(model: MilpModel, values: dict[str, float]) -> Placement:
    """Read the assignment matrix out of a solved variable vector."""
    a = np.zeros((model.n_vms, model.n_pms), dtype=np.int8)
    for v in range(model.n_vms):
        for p in range(model.n_pms):
            if values[_s(v, p)] > 0.5:
                a[v, p] = 1
    return Placement(a)


# ---------------------------------------------------------------------------
# LP-format export


def _num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _terms(coeffs: dict[str, float], order: list[str]) -> str:
    parts: list[str] = []
    for name in order:
        if name not in coeffs:
            continue
        c = coeffs[name]
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {_num(abs(c))} {name}")
    if not parts:
        return "0 " + order[0]
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def export_lp(model: MilpModel) -> str:
    """Serialize to CPLEX LP format with a fixed variable and constraint order."""
    order = model.var_names
    lines = ["\\ server consolidation model", "Minimize", f" obj: {_terms(model.objective, order)}"]
    lines.append("Subject To")
    for con in model.constraints:
        lines.append(f" {con.name}: {_terms(con.coeffs, order)} {con.sense} {_num(con.rhs)}")
    lines.append("Bounds")
    for name in model.continuous_names:
        lines.append(f" 0 <= {name}")
    lines.append("Binary")
    for name in model.binary_names:
        lines.append(f" {name}")
    lines.append("End")
    return "\n".join(lines) + "\n"
