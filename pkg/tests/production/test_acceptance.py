"""
Test: Directional Acceptance
Desk-budget runs checking the direction of the dormancy phenomenon and of
its mitigation. Deselected by default; run with ``pytest -m slow``.
"""
from collections import defaultdict

import numpy as np
import pytest

from src.agent.loop import collect_random_buffer
from src.dormancy.scores import dormancy_report, dormant_fraction
from src.experiments.recipes import recipe_registry
from src.experiments.runner import execute_cell
from src.experiments.schema import validate_config
from src.metrics.aggregate import iqm
from src.nn.network import forward

SEEDS = [0, 1, 2, 3, 4]
CATCH_STEPS = 20_000

pytestmark = pytest.mark.slow


def run_groups(data):
    """Execute every cell of a recipe config; returns {group: {seed: series}}."""
    config = validate_config(data)
    results = defaultdict(dict)
    for cell in recipe_registry.expand(config):
        results[cell.group][cell.seed] = execute_cell(cell)
    return results


def final_fraction(series, column="dormant_frac_tau"):
    measured = [getattr(r, column) for r in series.rows if not np.isnan(getattr(r, column))]
    return measured[-1]


def final_return(series, window=100):
    return iqm(series.returns()[-window:])


def wins(a, b, better):
    return sum(better(a[s], b[s]) for s in SEEDS)


class TestLearning:

    @pytest.mark.timeout(3600)
    def test_dqn_learns_catch(self):
        """Verify RR=0.25 DQN reaches mean return >= 0.8 over the last 100 episodes"""
        runs = run_groups({
            "recipe": "dormancy_growth",
            "dqn": {"total_env_steps": 100_000},
            "seeds": SEEDS,
        })["default"]
        means = [float(np.mean(s.returns()[-100:])) for s in runs.values()]
        assert sum(m >= 0.8 for m in means) >= 4
        print(f"✅ Final mean returns {[round(m, 2) for m in means]}")


class TestPhenomenon:

    @pytest.mark.timeout(7200)
    def test_dormancy_grows_with_replay_ratio(self):
        """Verify RR=4 ends with more tau=0.025 dormant neurons than RR=0.25"""
        runs = run_groups({
            "recipe": "rr_sweep",
            "sweep": {"replay_ratios": [0.25, 4.0]},
            "dqn": {"total_env_steps": CATCH_STEPS},
            "report_tau": 0.025,
            "seeds": SEEDS,
        })
        high = {s: final_fraction(r) for s, r in runs["rr=4"].items()}
        low = {s: final_fraction(r) for s, r in runs["rr=0.25"].items()}
        assert wins(high, low, lambda a, b: a > b) >= 4
        print(f"✅ Dormant fraction RR=4 {high} vs RR=0.25 {low}")

    @pytest.mark.timeout(3600)
    def test_shuffled_labels_raise_dormancy(self):
        """Verify shuffled-label training ends more dormant and fixed labels do not trend up"""
        runs = run_groups({
            "recipe": "supervised_nonstationary",
            "supervised": {"epochs": 100, "shuffle_period": 20},
            "seeds": SEEDS,
        })
        shuffled = {s: final_fraction(r, "dormant_frac_tau0") for s, r in runs["shuffled"].items()}
        fixed = {s: final_fraction(r, "dormant_frac_tau0") for s, r in runs["fixed"].items()}
        assert wins(shuffled, fixed, lambda a, b: a > b) >= 4

        for series in runs["fixed"].values():
            tail = [r.dormant_frac_tau0 for r in series.rows[-50:]]
            slope = np.polyfit(np.arange(len(tail)), tail, 1)[0]
            assert slope <= 1e-12
        print("✅ Non-stationary targets raise dormancy")


class TestMitigation:

    @pytest.mark.timeout(7200)
    def test_redo_at_high_replay_ratio(self):
        """Verify ReDo keeps return and at least halves the dormant fraction at RR=4"""
        runs = run_groups({
            "recipe": "redo_mitigation",
            "sweep": {"replay_ratios": [4.0], "redo": [False, True]},
            "dqn": {"total_env_steps": CATCH_STEPS},
            "recycle": {"tau": 0.1, "schedule": {"period": 1000}},
            "seeds": SEEDS,
        })
        on, off = runs["rr=4,redo=on"], runs["rr=4,redo=off"]
        ret_on = {s: final_return(r) for s, r in on.items()}
        ret_off = {s: final_return(r) for s, r in off.items()}
        frac_on = {s: final_fraction(r) for s, r in on.items()}
        frac_off = {s: final_fraction(r) for s, r in off.items()}

        assert wins(ret_on, ret_off, lambda a, b: a >= b) >= 4
        assert wins(frac_on, frac_off, lambda a, b: a < 0.5 * b) >= 4

        rank_on = np.mean([r.probe_values("effective_rank")[-1] for r in on.values()])
        rank_off = np.mean([r.probe_values("effective_rank")[-1] for r in off.values()])
        assert rank_on >= rank_off
        print(f"✅ ReDo: return {ret_on} vs {ret_off}, effective rank {rank_on:.1f} vs {rank_off:.1f}")

    @pytest.mark.timeout(7200)
    def test_score_based_selection_beats_alternatives(self):
        """Verify lowest-score selection ends at least as well as inverse and random selection"""
        runs = run_groups({
            "recipe": "selection_compare",
            "sweep": {"selections": ["lowest_score", "inverse_score", "random"]},
            "dqn": {"replay_ratio": 1.0, "total_env_steps": CATCH_STEPS},
            "recycle": {"selection": {"fraction": 0.1}, "schedule": {"period": 1000, "start": 0.1}},
            "seeds": SEEDS,
        })
        score = {s: final_return(r) for s, r in runs["redo_score"].items()}
        for other in ("inverse_score", "random"):
            rival = {s: final_return(r) for s, r in runs[other].items()}
            assert wins(score, rival, lambda a, b: a >= b) >= 4, other
        print("✅ Score-based selection ordering holds")


class TestMeasurement:

    @pytest.mark.timeout(3600)
    def test_fraction_stable_across_scoring_batch_sizes(self):
        """Verify dormant fractions from batches of 32 to 1024 states agree within 0.05"""
        data = {"recipe": "dormancy_growth", "dqn": {"total_env_steps": CATCH_STEPS}, "seeds": SEEDS}
        config = validate_config(data)
        runs = run_groups(data)["default"]

        for seed, series in runs.items():
            states = collect_random_buffer(config.env, 5000, config.dqn, seed)
            rng = np.random.default_rng(seed)
            fractions = []
            for size in (32, 64, 256, 1024):
                _, trace = forward(series.final_network, states.sample_states(size, rng))
                fractions.append(dormant_fraction(dormancy_report(trace, 0.025)))
            assert max(fractions) - min(fractions) < 0.05, (seed, fractions)
        print("✅ Dormant fraction stable across batch sizes")
