"""YAML scenario files.

Schema (all keys optional, defaults in parentheses):

    racks:       {count (8), pms_per_rack (4), tor_power (366), cooling_power (950)}
    pm:          {cpu_capacity (2000), ram_capacity (10240), bw_capacity (1000),
                  p_max (300), k_idle (0.7), t_idle (318), t_max (350),
                  cycle_count (100), cycle_count_spread (0)}
    vms:         {count (52), cpu (500), ram (612), mem_gb (0.612)}
    weights:     {alpha (1), beta (1), gamma (1), rho (0.10), omega (0.1902), tau (0.5)}
    reliability: {delta (1.51), varrho (1.09), varphi (1.19), q (2.35), t_amb (298),
                  mttf_hours (26280), hours_per_year (8760), afr_floor (1e-6)}
    migration:   {kappa (10), pods (2)}
    seed:        (0)
    n_slots:     (1)
    solver:      {kind (exact), time_cap (300)}
"""
from __future__ import annotations

from pathlib import Path

import yaml

from .costs import CostWeights, ReliabilityParams
from .sim import PmTemplate, Scenario, VmTemplate


class ScenarioError(ValueError):
    """Malformed or unreadable scenario file."""


def _section(data: dict, name: str) -> dict:
    value = data.get(name, {})
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ScenarioError(f"section {name!r} must be a mapping")
    return value


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"invalid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioError("scenario file must contain a mapping at top level")
    return scenario_from_dict(data)


def scenario_from_dict(data: dict) -> Scenario:
    racks = _section(data, "racks")
    pm = _section(data, "pm")
    vms = _section(data, "vms")
    weights = _section(data, "weights")
    rel = _section(data, "reliability")
    mig = _section(data, "migration")
    solver = _section(data, "solver")
    try:
        return Scenario(
            n_racks=int(racks.get("count", 8)),
            pms_per_rack=int(racks.get("pms_per_rack", 4)),
            tor_power=float(racks.get("tor_power", 366.0)),
            cooling_power=float(racks.get("cooling_power", 950.0)),
            n_vms=int(vms.get("count", 52)),
            pm=PmTemplate(
                cpu_capacity=float(pm.get("cpu_capacity", 2000.0)),
                ram_capacity=float(pm.get("ram_capacity", 10240.0)),
                bw_capacity=float(pm.get("bw_capacity", 1000.0)),
                p_max=float(pm.get("p_max", 300.0)),
                k_idle=float(pm.get("k_idle", 0.7)),
                t_idle=float(pm.get("t_idle", 318.0)),
                t_max=float(pm.get("t_max", 350.0)),
            ),
            vm=VmTemplate(
                cpu_demand=float(vms.get("cpu", 500.0)),
                ram_demand=float(vms.get("ram", 612.0)),
                mem_gb=float(vms.get("mem_gb", 0.612)),
            ),
            weights=CostWeights(
                alpha=float(weights.get("alpha", 1.0)),
                beta=float(weights.get("beta", 1.0)),
                gamma=float(weights.get("gamma", 1.0)),
                rho=float(weights.get("rho", 0.10)),
                omega=float(weights.get("omega", 0.1902)),
                tau=float(weights.get("tau", 0.5)),
            ),
            reliability=ReliabilityParams(
                delta=float(rel.get("delta", 1.51)),
                varrho=float(rel.get("varrho", 1.09)),
                varphi=float(rel.get("varphi", 1.19)),
                q=float(rel.get("q", 2.35)),
                t_amb=float(rel.get("t_amb", 298.0)),
                mttf_hours=float(rel.get("mttf_hours", 26280.0)),
                hours_per_year=float(rel.get("hours_per_year", 8760.0)),
                afr_floor=float(rel.get("afr_floor", 1e-6)),
            ),
            kappa=float(mig.get("kappa", 10.0)),
            n_pods=int(mig.get("pods", 2)),
            cycle_count_base=int(pm.get("cycle_count", 100)),
            cycle_count_spread=int(pm.get("cycle_count_spread", 0)),
            seed=int(data.get("seed", 0)),
            n_slots=int(data.get("n_slots", 1)),
            solver=str(solver.get("kind", "exact")),
            time_cap=float(solver.get("time_cap", 300.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"bad scenario value: {exc}") from exc
