"""Experiment configuration: YAML files validated by pydantic models.

Every model forbids unknown keys. ``--set a.b=value`` overrides are applied to
the parsed mapping before validation; values are parsed as YAML scalars.
"""
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import copy
import logging

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.agent.dqn import DQNConfig
from src.agent.supervised import SupervisedConfig
from src.config import settings
from src.envs.base import EnvSpec
from src.exceptions import ConfigError
from src.recycle.redo import RecycleStrategy
from src.recycle.selection import RecycleSchedule, SelectionKind, SelectionStrategy
logger = logging.getLogger(__name__)

RecipeName = Literal[
    "dormancy_growth",
    "supervised_nonstationary",
    "offline_fixed_buffer",
    "fixed_random_targets",
    "rr_sweep",
    "redo_mitigation",
    "lr_scaled",
    "width_sweep",
    "baseline_compare",
    "selection_compare",
    "distill_probe",
    "prune_probe",
    "fixed_grad_budget",
    "activation_ablation",
    "recycle_strategy_compare",
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TaskConfig(_Strict):

    n: int = Field(10_000, ge=1)
    d: int = Field(32, ge=1)
    n_classes: int = Field(10, ge=2)
    sigma: float = Field(0.5, ge=0.0)
    csv_path: Optional[str] = None


class RecycleConfig(_Strict):

    enabled: bool = False
    mode: Literal["threshold", "selection"] = "threshold"
    tau: float = Field(default_factory=lambda: settings.redo_tau, ge=0.0)
    strategy: RecycleStrategy = Field(default_factory=RecycleStrategy)
    selection: SelectionStrategy = Field(default_factory=SelectionStrategy)
    schedule: RecycleSchedule = Field(default_factory=RecycleSchedule)


class ResetConfig(_Strict):

    enabled: bool = False
    k: int = Field(1, ge=1)
    period: int = Field(20_000, ge=1)


class PruneConfig(_Strict):

    enabled: bool = False
    fractions: List[float] = Field(default_factory=lambda: [0.25, 0.5, 0.75])
    tau: float = Field(0.0, ge=0.0)
    eval_episodes: int = Field(20, ge=1)

    @field_validator("fractions")
    @classmethod
    def _in_unit(cls, value: List[float]) -> List[float]:

        if not value or any(not 0.0 < f <= 1.0 for f in value):
            raise ValueError("prune fractions must lie in (0, 1]")
        return value


class OfflineConfig(_Strict):

    dataset_size: int = Field(50_000, ge=1)
    grad_steps: int = Field(25_000, ge=1)
    teacher_seed: int = 1_000


class DistillConfig(_Strict):
    """Regression onto a trained network, starting from another trained network or a fresh init."""

    teacher_checkpoint: Optional[str] = None
    pretrained_checkpoint: Optional[str] = None
    init: Literal["pretrained", "fresh"] = "pretrained"
    n_inputs: int = Field(10_000, ge=1)

    @model_validator(mode="after")
    def _distinct_checkpoints(self) -> "DistillConfig":

        if self.teacher_checkpoint and self.pretrained_checkpoint:
            if Path(self.teacher_checkpoint).resolve() == Path(self.pretrained_checkpoint).resolve():
                raise ValueError("pretrained_checkpoint must point at a different run than teacher_checkpoint")
        return self

    def require_checkpoints(self) -> Tuple[str, str]:
        """Teacher and pretrained paths; both are required by distill_probe."""
        missing = [
            f"distill.{name}" for name in ("teacher_checkpoint", "pretrained_checkpoint")
            if not getattr(self, name)
        ]
        if missing or self.teacher_checkpoint is None or self.pretrained_checkpoint is None:
            raise ConfigError(f"distill_probe needs {' and '.join(missing)}")
        return self.teacher_checkpoint, self.pretrained_checkpoint


class SweepConfig(_Strict):

    replay_ratios: List[float] = Field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0])
    redo: List[bool] = Field(default_factory=lambda: [False, True])
    widths: List[int] = Field(default_factory=lambda: [1, 2, 4])
    activations: List[Literal["relu", "leaky_relu"]] = Field(default_factory=lambda: ["relu", "leaky_relu"])
    selections: List[SelectionKind] = Field(
        default_factory=lambda: ["lowest_score", "inverse_score", "random", "utility"]
    )
    baselines: List[Literal["dqn", "redo", "reset", "weight_decay"]] = Field(
        default_factory=lambda: ["dqn", "redo", "reset", "weight_decay"]
    )
    strategies: List[RecycleStrategy] = Field(default_factory=lambda: [
        RecycleStrategy(),
        RecycleStrategy(incoming="norm_scaled"),
        RecycleStrategy(outgoing="random_init"),
    ])
    lr_divisor: float = Field(4.0, gt=0.0)
    weight_decay: float = Field(1e-5, ge=0.0)
    grad_budget: int = Field(25_000, ge=1)


class ExperimentConfig(_Strict):

    recipe: RecipeName
    env: EnvSpec = Field(default_factory=EnvSpec)
    dqn: DQNConfig = Field(default_factory=DQNConfig)
    supervised: SupervisedConfig = Field(default_factory=SupervisedConfig)
    task: TaskConfig = Field(default_factory=TaskConfig)
    recycle: RecycleConfig = Field(default_factory=RecycleConfig)
    reset: ResetConfig = Field(default_factory=ResetConfig)
    prune: PruneConfig = Field(default_factory=PruneConfig)
    offline: OfflineConfig = Field(default_factory=OfflineConfig)
    distill: DistillConfig = Field(default_factory=DistillConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    taus: List[float] = Field(default_factory=lambda: list(settings.default_taus))
    report_tau: float = Field(default_factory=lambda: settings.default_setting_tau, ge=0.0)
    measure_period: int = Field(1000, ge=1)
    scoring_batch_size: int = Field(default_factory=lambda: settings.scoring_batch_size, ge=1)
    rank_batch_size: int = Field(512, ge=1)
    save_checkpoint: bool = False
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    output_dir: Optional[str] = None

    @field_validator("seeds")
    @classmethod
    def _seeds_nonempty(cls, value: List[int]) -> List[int]:

        if not value:
            raise ValueError("seeds must not be empty")
        if len(set(value)) != len(value):
            raise ValueError("seeds must be unique")
        return value

    @field_validator("taus")
    @classmethod
    def _taus_valid(cls, value: List[float]) -> List[float]:

        if any(t < 0 for t in value):
            raise ValueError("taus must be >= 0")
        return sorted(set(float(t) for t in value))

    def tracked_taus(self) -> List[float]:
        return sorted(set(self.taus) | {0.0, self.report_tau})

    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir or Path(settings.output_root) / self.recipe)


def parse_override(item: str) -> tuple:

    if "=" not in item:
        raise ConfigError(f"Override must look like key=value, got '{item}'")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key or any(not part for part in key.split(".")):
        raise ConfigError(f"Invalid override key '{key}'")
    return key, yaml.safe_load(raw) if raw.strip() else None


def set_path(data: Dict[str, Any], key: str, value: Any) -> None:
    """Assign ``value`` at a dotted ``key``, creating intermediate tables."""
    node = data
    parts = key.split(".")
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = {}
            node[part] = child
        elif not isinstance(child, dict):
            raise ConfigError(f"Cannot override '{key}': '{part}' is not a table")
        node = child
    node[parts[-1]] = value


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:

    data = copy.deepcopy(data)
    for item in overrides:
        key, value = parse_override(item)
        set_path(data, key, value)
    return data


def _describe(error: ValidationError) -> str:

    parts = []
    for err in error.errors():
        key = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{key}: {err['msg']}")
    return "; ".join(parts)


def validate_config(data: Mapping[str, Any]) -> ExperimentConfig:

    if not isinstance(data, Mapping):
        raise ConfigError("Experiment config must be a mapping")
    try:
        return ExperimentConfig.model_validate(dict(data))
    except ValidationError as e:
        message = _describe(e)
        logger.error(f"Invalid experiment config: {message}")
        raise ConfigError(message) from e


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Sequence[str] = (),
    seeds: Optional[Sequence[int]] = None
) -> ExperimentConfig:

    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must hold a mapping at the top level")

    data = apply_overrides(data, overrides)
    if seeds is not None:
        data["seeds"] = list(seeds)
    return validate_config(data)


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=True)
