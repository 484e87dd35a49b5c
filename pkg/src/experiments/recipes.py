from typing import Any, Dict, List

from dataclasses import dataclass, field
import copy
import logging
import math

from src.agent.dqn import DQNConfig
from src.exceptions import ConfigError
from src.experiments.schema import ExperimentConfig, set_path, validate_config
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Variant:
    """One arm of a recipe: a group label, a run mode and dotted config updates."""

    group: str
    mode: str
    updates: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class RunCell:

    group: str
    mode: str
    seed: int
    config: ExperimentConfig

    @property
    def cell_id(self) -> str:
        return f"{slug(self.group)}/seed_{self.seed}"


def slug(group: str) -> str:
    return "".join(c if c.isalnum() or c in "._-" else "_" for c in group.replace(",", "__"))


def fmt(value: float) -> str:
    return f"{value:g}"


def on_off(flag: bool) -> str:
    return "on" if flag else "off"


def expected_grad_steps(dqn: DQNConfig) -> int:
    """Gradient steps an online run performs (updates start at the min_history-th step)."""
    post = max(0, dqn.total_env_steps - dqn.min_history + 1)
    if dqn.replay_ratio >= 1.0:
        return post * int(math.ceil(dqn.replay_ratio))
    return post // int(round(1.0 / dqn.replay_ratio))


def env_steps_for_budget(dqn: DQNConfig, replay_ratio: float, grad_budget: int) -> int:

    if replay_ratio >= 1.0:
        post = int(math.ceil(grad_budget / math.ceil(replay_ratio)))
    else:
        post = grad_budget * int(round(1.0 / replay_ratio))
    return dqn.min_history - 1 + post


class RecipeRegistry:

    def __init__(self):

        self.recipes = self._register_recipes()

    def _register_recipes(self) -> Dict[str, Dict[str, Any]]:

        return {
            "dormancy_growth": {
                "description": "Dormant fraction over one default DQN run",
                "handler": self._dormancy_growth
            },
            "supervised_nonstationary": {
                "description": "Fixed vs periodically shuffled labels on the synthetic task",
                "handler": self._supervised_nonstationary
            },
            "offline_fixed_buffer": {
                "description": "Online DQN vs TD learning on a frozen random-policy buffer",
                "handler": self._offline_fixed_buffer
            },
            "fixed_random_targets": {
                "description": "Offline TD vs regression toward a frozen random network",
                "handler": self._fixed_random_targets
            },
            "rr_sweep": {
                "description": "Replay-ratio sweep",
                "handler": self._rr_sweep
            },
            "redo_mitigation": {
                "description": "Replay ratio crossed with ReDo on/off",
                "handler": self._redo_mitigation
            },
            "lr_scaled": {
                "description": "Default vs divided learning rate at RR=1, ReDo on/off",
                "handler": self._lr_scaled
            },
            "width_sweep": {
                "description": "Hidden width multipliers crossed with ReDo on/off",
                "handler": self._width_sweep
            },
            "baseline_compare": {
                "description": "DQN vs ReDo vs last-layer resets vs weight decay",
                "handler": self._baseline_compare
            },
            "selection_compare": {
                "description": "Fixed-fraction neuron selection rules under a cosine schedule",
                "handler": self._selection_compare
            },
            "distill_probe": {
                "description": "Regression toward a frozen teacher from pretrained vs fresh init",
                "handler": self._distill_probe
            },
            "prune_probe": {
                "description": "Permanent pruning of dormant neurons during training",
                "handler": self._prune_probe
            },
            "fixed_grad_budget": {
                "description": "Replay ratios <= 1 at an equal gradient-step budget, ReDo on/off",
                "handler": self._fixed_grad_budget
            },
            "activation_ablation": {
                "description": "ReLU vs leaky ReLU, ReDo on/off",
                "handler": self._activation_ablation
            },
            "recycle_strategy_compare": {
                "description": "Incoming/outgoing re-initialization variants of ReDo",
                "handler": self._recycle_strategy_compare
            },
        }

    def names(self) -> List[str]:
        return sorted(self.recipes)

    def variants(self, config: ExperimentConfig) -> List[Variant]:

        if config.recipe not in self.recipes:
            raise ConfigError(f"Unknown recipe: {config.recipe}")
        return self.recipes[config.recipe]["handler"](config)

    def expand(self, config: ExperimentConfig) -> List[RunCell]:
        """Cells in variant-major, seed-minor order."""
        base = config.model_dump(mode="json")
        cells = []
        for variant in self.variants(config):
            data = copy.deepcopy(base)
            for key, value in variant.updates.items():
                set_path(data, key, value)
            resolved = validate_config(data)
            for seed in config.seeds:
                cells.append(RunCell(variant.group, variant.mode, seed, resolved))
        logger.info(f"Recipe {config.recipe} expands to {len(cells)} cells")
        return cells

    def _dormancy_growth(self, config: ExperimentConfig) -> List[Variant]:
        return [Variant("default", "online")]

    def _supervised_nonstationary(self, config: ExperimentConfig) -> List[Variant]:

        period = config.supervised.shuffle_period or 20
        return [
            Variant("fixed", "supervised", {"supervised.shuffle_period": 0}),
            Variant("shuffled", "supervised", {"supervised.shuffle_period": period}),
        ]

    def _offline_fixed_buffer(self, config: ExperimentConfig) -> List[Variant]:
        return [Variant("online", "online"), Variant("offline", "offline")]

    def _fixed_random_targets(self, config: ExperimentConfig) -> List[Variant]:
        return [Variant("offline_td", "offline"), Variant("fixed_random_targets", "fixed_targets")]

    def _rr_sweep(self, config: ExperimentConfig) -> List[Variant]:
        return [
            Variant(f"rr={fmt(rr)}", "online", {"dqn.replay_ratio": rr})
            for rr in config.sweep.replay_ratios
        ]

    def _redo_mitigation(self, config: ExperimentConfig) -> List[Variant]:
        return [
            Variant(
                f"rr={fmt(rr)},redo={on_off(redo)}",
                "online",
                {"dqn.replay_ratio": rr, "recycle.enabled": redo, "recycle.mode": "threshold"}
            )
            for rr in config.sweep.replay_ratios
            for redo in config.sweep.redo
        ]

    def _lr_scaled(self, config: ExperimentConfig) -> List[Variant]:

        lr = config.dqn.learning_rate
        rates = [("default", lr), (f"default/{fmt(config.sweep.lr_divisor)}", lr / config.sweep.lr_divisor)]
        return [
            Variant(
                f"lr={label},redo={on_off(redo)}",
                "online",
                {"dqn.replay_ratio": 1.0, "dqn.learning_rate": value, "recycle.enabled": redo}
            )
            for label, value in rates
            for redo in config.sweep.redo
        ]

    def _width_sweep(self, config: ExperimentConfig) -> List[Variant]:
        return [
            Variant(
                f"width=x{w},redo={on_off(redo)}",
                "online",
                {"dqn.network.width_multiplier": w, "recycle.enabled": redo}
            )
            for w in config.sweep.widths
            for redo in config.sweep.redo
        ]

    def _baseline_compare(self, config: ExperimentConfig) -> List[Variant]:

        arms = {
            "dqn": {},
            "redo": {"recycle.enabled": True, "recycle.mode": "threshold"},
            "reset": {"reset.enabled": True},
            "weight_decay": {"dqn.weight_decay": config.sweep.weight_decay},
        }
        return [Variant(name, "online", arms[name]) for name in config.sweep.baselines]

    def _selection_compare(self, config: ExperimentConfig) -> List[Variant]:

        horizon = config.recycle.schedule.horizon or max(1, expected_grad_steps(config.dqn))
        labels = {"lowest_score": "redo_score"}
        return [
            Variant(
                labels.get(kind, kind),
                "online",
                {
                    "recycle.enabled": True,
                    "recycle.mode": "selection",
                    "recycle.selection.kind": kind,
                    "recycle.schedule.fraction_schedule": "cosine",
                    "recycle.schedule.horizon": horizon,
                }
            )
            for kind in config.sweep.selections
        ]

    def _distill_probe(self, config: ExperimentConfig) -> List[Variant]:

        config.distill.require_checkpoints()
        return [
            Variant("pretrained_init", "distill", {"distill.init": "pretrained"}),
            Variant("fresh_init", "distill", {"distill.init": "fresh"}),
        ]

    def _prune_probe(self, config: ExperimentConfig) -> List[Variant]:
        return [Variant("prune", "online", {"prune.enabled": True})]

    def _fixed_grad_budget(self, config: ExperimentConfig) -> List[Variant]:

        ratios = [rr for rr in config.sweep.replay_ratios if rr <= 1.0] or [0.25, 0.5, 1.0]
        budget = config.sweep.grad_budget
        return [
            Variant(
                f"rr={fmt(rr)},redo={on_off(redo)}",
                "online",
                {
                    "dqn.replay_ratio": rr,
                    "dqn.total_env_steps": env_steps_for_budget(config.dqn, rr, budget),
                    "recycle.enabled": redo,
                }
            )
            for rr in ratios
            for redo in config.sweep.redo
        ]

    def _activation_ablation(self, config: ExperimentConfig) -> List[Variant]:
        return [
            Variant(
                f"act={act},redo={on_off(redo)}",
                "online",
                {"dqn.network.activation": act, "recycle.enabled": redo}
            )
            for act in config.sweep.activations
            for redo in config.sweep.redo
        ]

    def _recycle_strategy_compare(self, config: ExperimentConfig) -> List[Variant]:
        return [
            Variant(
                strategy.label,
                "online",
                {
                    "recycle.enabled": True,
                    "recycle.mode": "threshold",
                    "recycle.strategy": strategy.model_dump(mode="json"),
                }
            )
            for strategy in config.sweep.strategies
        ]


# Global registry instance
recipe_registry = RecipeRegistry()
