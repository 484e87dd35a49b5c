from pathlib import Path

import logging

from prometheus_client import Counter, Histogram, generate_latest
logger = logging.getLogger(__name__)

# Prometheus metrics
env_steps_counter = Counter('dqn_env_steps_total', 'Environment steps taken by training loops')
grad_steps_counter = Counter('dqn_grad_steps_total', 'Gradient steps applied to online networks')
recycled_counter = Counter('redo_recycled_neurons_total', 'Neurons recycled', ['strategy'])
pruned_counter = Counter('dormancy_pruned_neurons_total', 'Neurons permanently pruned')
resets_counter = Counter('recycle_layer_resets_total', 'Last-layer reset events')
dormancy_counter = Counter('dormancy_measurements_total', 'Dormancy reports computed')
train_step_duration = Histogram(
    'dqn_train_step_duration_seconds',
    'Wall-clock duration of a single gradient step',
    buckets=(1e-4, 2.5e-4, 5e-4, 1e-3, 2.5e-3, 5e-3, 1e-2, 5e-2)
)

def write_exposition(output_dir: str) -> Path:

    path = Path(output_dir) / "telemetry.prom"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(generate_latest())
    logger.info(f"Telemetry written to {path}")
    return path
