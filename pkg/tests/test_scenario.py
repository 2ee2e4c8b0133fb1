"""Scenario file loading tests."""
import pytest

from relpack.scenario import ScenarioError, load_scenario, scenario_from_dict


class TestLoad:
    def test_defaults_from_empty_file(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        sc = load_scenario(path)
        assert sc.n_pms == 32 and sc.n_vms == 52
        assert sc.weights.alpha == 1.0 and sc.kappa == 10.0

    def test_full_file(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text(
            "racks: {count: 2, pms_per_rack: 3}\n"
            "vms: {count: 7, cpu: 400}\n"
            "weights: {alpha: 0.3, beta: 0.7, gamma: 0.1}\n"
            "migration: {kappa: 42, pods: 1}\n"
            "pm: {cycle_count: 250}\n"
            "seed: 13\n"
            "n_slots: 2\n"
            "solver: {kind: greedy, time_cap: 1.5}\n"
        )
        sc = load_scenario(path)
        assert sc.n_racks == 2 and sc.pms_per_rack == 3 and sc.n_vms == 7
        assert sc.vm.cpu_demand == 400.0
        assert sc.weights.beta == 0.7
        assert sc.kappa == 42.0 and sc.n_pods == 1
        assert sc.cycle_count_base == 250
        assert sc.seed == 13 and sc.n_slots == 2
        assert sc.solver == "greedy" and sc.time_cap == 1.5

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError):
            load_scenario(tmp_path / "nope.yaml")

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("racks: [unterminated\n")
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_non_mapping_top_level(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_non_mapping_section(self):
        with pytest.raises(ScenarioError):
            scenario_from_dict({"racks": [1, 2]})

    def test_bad_value_type(self):
        with pytest.raises(ScenarioError):
            scenario_from_dict({"racks": {"count": "many"}})

    def test_bad_weight_range(self):
        with pytest.raises((ScenarioError, ValueError)):
            scenario_from_dict({"weights": {"alpha": 3.0}})
