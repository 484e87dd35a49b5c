"""
Test: Experiment Configuration and Recipes
Verifies YAML loading, overrides, validation messages and recipe expansion
"""
import pytest
import yaml

from src.exceptions import ConfigError
from src.experiments.recipes import env_steps_for_budget, expected_grad_steps, recipe_registry
from src.experiments.runner import build_hooks
from src.experiments.hooks import DormancyHook, PruneHook, RankHook, RedoHook, ResetHook, SelectionRecycleHook
from src.experiments.schema import (
    ExperimentConfig, apply_overrides, dump_config, load_config, parse_override, validate_config,
)
from tests.conftest import toy_experiment


class TestConfigLoading:

    def test_defaults(self):
        """Verify defaults of a bare recipe config"""
        config = validate_config({"recipe": "dormancy_growth"})
        assert config.env.kind == "catch"
        assert config.seeds == [0, 1, 2, 3, 4]
        assert config.taus == [0.0, 0.025, 0.1]
        assert config.tracked_taus() == [0.0, 0.025, 0.1]
        assert config.resolved_output_dir().as_posix().endswith("runs/dormancy_growth")
        print("✅ Config defaults correct")

    def test_unknown_key_error_names_the_key(self):
        """Verify unknown keys are rejected with their dotted path"""
        with pytest.raises(ConfigError) as exc:
            validate_config({"recipe": "rr_sweep", "recycle": {"bogus": 1}})
        assert "recycle.bogus" in str(exc.value)
        print("✅ Unknown key reported by path")

    def test_unknown_recipe_rejected(self):
        """Verify recipe names are checked"""
        with pytest.raises(ConfigError):
            validate_config({"recipe": "nope"})
        print("✅ Unknown recipe rejected")

    def test_overrides_parse_yaml_scalars(self):
        """Verify --set values are typed and nested tables are created"""
        assert parse_override("dqn.replay_ratio=0.5") == ("dqn.replay_ratio", 0.5)
        assert parse_override("recycle.enabled=true") == ("recycle.enabled", True)
        assert parse_override("seeds=[1, 2]") == ("seeds", [1, 2])
        data = apply_overrides({"recipe": "rr_sweep"}, ["dqn.network.hidden=[8]"])
        assert data["dqn"] == {"network": {"hidden": [8]}}
        with pytest.raises(ConfigError):
            parse_override("no_equals_sign")
        with pytest.raises(ConfigError):
            apply_overrides({"recipe": "x"}, ["recipe.sub=1"])
        print("✅ Overrides parsed")

    def test_load_config_file_overrides_and_seeds(self, tmp_path):
        """Verify file, then overrides, then the seeds flag"""
        path = tmp_path / "exp.yaml"
        path.write_text(yaml.safe_dump({"recipe": "rr_sweep", "dqn": {"replay_ratio": 1.0}}), encoding="utf-8")
        config = load_config(path, ["dqn.replay_ratio=2.0"], seeds=[7])
        assert config.dqn.replay_ratio == 2.0
        assert config.seeds == [7]
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.yaml")
        print("✅ Config layering correct")

    def test_dump_round_trip(self):
        """Verify the echoed config validates back to the same model"""
        config = validate_config(toy_experiment("redo_mitigation"))
        assert validate_config(yaml.safe_load(dump_config(config))).model_dump() == config.model_dump()
        print("✅ Resolved config echo is faithful")

    def test_invalid_seed_lists(self):
        """Verify empty and duplicated seed lists are rejected"""
        for seeds in ([], [1, 1]):
            with pytest.raises(ConfigError):
                validate_config({"recipe": "rr_sweep", "seeds": seeds})
        print("✅ Seed lists validated")


class TestRecipes:

    def test_every_recipe_is_registered(self):
        """Verify the registry covers every recipe the schema accepts"""
        names = recipe_registry.names()
        assert len(names) == 15
        for name in names:
            assert recipe_registry.recipes[name]["description"]
        print(f"✅ {len(names)} recipes registered")

    def test_rr_sweep_cell_count(self):
        """Verify 4 replay ratios x 5 seeds expand to 20 cells"""
        config = validate_config({"recipe": "rr_sweep", "sweep": {"replay_ratios": [0.25, 0.5, 1.0, 2.0]}})
        cells = recipe_registry.expand(config)
        assert len(cells) == 20
        assert len({c.cell_id for c in cells}) == 20
        assert cells[0].cell_id == "rr_0.25/seed_0"
        assert [c.config.dqn.replay_ratio for c in cells[::5]] == [0.25, 0.5, 1.0, 2.0]
        print("✅ rr_sweep expands to 20 cells")

    def test_redo_mitigation_crosses_redo(self):
        """Verify RR x ReDo on/off variants"""
        config = validate_config(toy_experiment("redo_mitigation"))
        groups = [v.group for v in recipe_registry.variants(config)]
        assert groups == ["rr=0.25,redo=off", "rr=0.25,redo=on", "rr=1,redo=off", "rr=1,redo=on"]
        print("✅ redo_mitigation variants correct")

    def test_lr_scaled_divides_learning_rate(self):
        """Verify the divided learning rate at RR=1"""
        config = validate_config({"recipe": "lr_scaled", "dqn": {"learning_rate": 0.004}, "seeds": [0]})
        cells = recipe_registry.expand(config)
        rates = {c.group: c.config.dqn.learning_rate for c in cells}
        assert rates["lr=default/4,redo=off"] == pytest.approx(0.001)
        assert all(c.config.dqn.replay_ratio == 1.0 for c in cells)
        print("✅ lr_scaled divides the learning rate")

    def test_distill_probe_needs_checkpoint(self):
        """Verify distill_probe needs a teacher and a distinct pretrained network"""
        with pytest.raises(ConfigError):
            recipe_registry.expand(validate_config({"recipe": "distill_probe"}))
        with pytest.raises(ConfigError, match="pretrained_checkpoint"):
            recipe_registry.expand(validate_config({"recipe": "distill_probe", "distill": {"teacher_checkpoint": "t.npz"}}))
        with pytest.raises(ConfigError, match="pretrained_checkpoint"):
            validate_config({
                "recipe": "distill_probe",
                "distill": {"teacher_checkpoint": "runs/a/t.npz", "pretrained_checkpoint": "runs/b/../a/t.npz"},
            })
        config = validate_config({
            "recipe": "distill_probe",
            "distill": {"teacher_checkpoint": "t.npz", "pretrained_checkpoint": "p.npz"},
        })
        assert [v.group for v in recipe_registry.variants(config)] == ["pretrained_init", "fresh_init"]
        print("✅ distill_probe variants correct")

    def test_fixed_grad_budget_equalizes_updates(self):
        """Verify every replay ratio gets the same number of gradient steps"""
        config = validate_config(toy_experiment("fixed_grad_budget"))
        for cell in recipe_registry.expand(config):
            assert expected_grad_steps(cell.config.dqn) == 40
        assert env_steps_for_budget(config.dqn, 0.25, 40) == 64 - 1 + 160
        print("✅ Gradient budgets equalized")

    def test_selection_compare_sets_cosine_horizon(self):
        """Verify selection variants run on a cosine schedule with a horizon"""
        config = validate_config(toy_experiment("selection_compare"))
        cells = recipe_registry.expand(config)
        groups = sorted({c.group for c in cells})
        assert groups == ["inverse_score", "random", "redo_score", "utility"]
        for cell in cells:
            assert cell.config.recycle.schedule.fraction_schedule == "cosine"
            assert cell.config.recycle.schedule.horizon == expected_grad_steps(config.dqn)
        print("✅ selection_compare variants correct")


class TestHookWiring:

    def test_measurement_runs_before_interventions(self):
        """Verify hook order: dormancy, recycling, reset, pruning, rank"""
        config = validate_config(toy_experiment(
            "baseline_compare",
            recycle={"enabled": True, "schedule": {"period": 20}},
            reset={"enabled": True, "period": 40},
            prune={"enabled": True}
        ))
        hooks = build_hooks(config, "online")
        assert [type(h) for h in hooks] == [DormancyHook, RedoHook, ResetHook, PruneHook, RankHook]
        print("✅ Hooks ordered")

    def test_supervised_hooks_measure_every_epoch(self):
        """Verify supervised runs skip the rank probe and use the given period"""
        config = validate_config(toy_experiment("supervised_nonstationary"))
        hooks = build_hooks(config, "supervised", measure_period=4)
        assert [type(h) for h in hooks] == [DormancyHook]
        assert hooks[0].period == 4
        print("✅ Supervised hooks wired")

    def test_selection_mode_gets_selection_hook(self):
        """Verify fixed-fraction recycling uses the selection hook"""
        config = validate_config(toy_experiment(
            "selection_compare",
            recycle={"enabled": True, "mode": "selection", "schedule": {"fraction_schedule": "cosine"}}
        ))
        hooks = build_hooks(config, "online")
        assert isinstance(hooks[1], SelectionRecycleHook)
        assert hooks[1].schedule.horizon == expected_grad_steps(config.dqn)
        assert isinstance(config, ExperimentConfig)
        print("✅ Selection hook wired")
