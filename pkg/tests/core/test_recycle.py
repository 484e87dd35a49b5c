"""
Test: Neuron Recycling
Verifies ReDo, selection rules, schedules and last-layer resets
"""
import numpy as np
import pytest

from src.dormancy.scores import neuron_scores
from src.exceptions import ConfigError, ShapeError
from src.nn.network import build_network, dense_specs, forward, predict
from src.nn.optim import OptState
from src.recycle.redo import RecycleStrategy, recycle_neurons, redo_step
from src.recycle.reset import reset_last_layers
from src.recycle.selection import (
    RecycleSchedule, SelectionStrategy, cosine_fraction, select_for_recycling, selection_count,
)


def kill(net, layer, neurons):
    net.biases[layer][neurons] = -1e3


def saturated_opt(net):
    opt = OptState.create(net)
    for buf in (*opt.first_w, *opt.second_w, *opt.first_b, *opt.second_b):
        buf[...] = 1.0
    return opt


class TestRedo:

    def test_redo_recycles_dead_neurons_without_changing_outputs(self, small_net, sample_batch, rng):
        """Verify ReDo resets exactly the dormant neurons and keeps outputs on the scoring batch"""
        kill(small_net, 0, [2, 9])
        before, trace = forward(small_net, sample_batch)
        opt = saturated_opt(small_net)
        event = redo_step(small_net, trace, 0.0, RecycleStrategy(), opt, rng, step_grad=100)

        assert {2, 9} <= set(event.indices[0].tolist())
        assert small_net.biases[0][[2, 9]].tolist() == [0.0, 0.0]
        kept = np.setdiff1d(np.arange(16), event.indices[1])
        assert not small_net.weights[1][np.ix_([2, 9], kept)].any()
        assert not opt.first_w[0][:, 2].any() and not opt.second_w[1][9, :].any()
        assert np.array_equal(predict(small_net, sample_batch), before)
        assert event.n_recycled == sum(len(i) for i in event.indices)
        assert [r.layer for r in event.rows()] == [0, 1]
        print(f"✅ ReDo recycled {event.n_recycled} neurons, outputs unchanged")

    def test_recycled_incoming_weights_come_from_init_distribution(self, small_net, sample_batch, rng):
        """Verify fresh incoming weights respect the layer's init bound and the neuron wakes up"""
        kill(small_net, 0, [4])
        _, trace = forward(small_net, sample_batch)
        redo_step(small_net, trace, 0.0, RecycleStrategy(), None, rng)

        bound = small_net.specs[0].init.limit(8)
        assert np.abs(small_net.weights[0][:, 4]).max() <= bound
        _, after = forward(small_net, sample_batch)
        assert after.activations[0][:, 4].any()
        print("✅ Recycled neurons re-initialized")

    def test_no_dormant_neurons_is_a_noop(self, small_net, sample_batch, rng):
        """Verify nothing changes when every neuron is active"""
        for w in small_net.weights:
            np.abs(w, out=w)
        batch = np.abs(sample_batch) + 0.1
        weights = [w.copy() for w in small_net.weights]
        _, trace = forward(small_net, batch)
        event = redo_step(small_net, trace, 0.0, RecycleStrategy(), None, rng)

        assert event.n_recycled == 0
        assert all(np.array_equal(a, b) for a, b in zip(weights, small_net.weights))
        print("✅ ReDo without dormant neurons is a no-op")

    def test_trace_must_match_network(self, small_net, rng):
        """Verify a trace from another architecture is rejected"""
        other = build_network(dense_specs(8, [4, 4], 3), seed=0)
        _, trace = forward(other, np.ones((2, 8)))
        with pytest.raises(ShapeError):
            redo_step(small_net, trace, 0.1, RecycleStrategy(), None, rng)
        print("✅ Mismatched trace rejected")

    def test_strategy_variants(self, small_net, rng):
        """Verify norm-scaled incoming and random outgoing variants"""
        target_norm = np.linalg.norm(np.delete(small_net.weights[0], 3, axis=1), axis=0).mean()
        recycle_neurons(small_net, [[3], []], RecycleStrategy(incoming="norm_scaled", outgoing="random_init"), None, rng)

        assert np.linalg.norm(small_net.weights[0][:, 3]) == pytest.approx(target_norm)
        assert small_net.weights[1][3, :].any()
        assert RecycleStrategy(outgoing="random_init").label == "reinit_original+random_init"
        print("✅ Recycling variants behave")

    def test_pruned_neurons_are_never_recycled(self, small_net, rng):
        """Verify recycle_neurons skips masked neurons"""
        small_net.masks[0][6] = True
        done = recycle_neurons(small_net, [[6, 7], []], RecycleStrategy(), None, rng)
        assert done[0].tolist() == [7]
        print("✅ Pruned neurons skipped")

    def test_recycled_neurons_come_back_alive(self):
        """Verify at least 95% of recycled first-layer neurons score above 0 on a fresh batch"""
        rng = np.random.default_rng(5)
        recycled = alive = 0
        for trial in range(100):
            net = build_network(dense_specs(6, [12, 12], 4), seed=trial)
            kill(net, 0, rng.choice(12, size=3, replace=False))
            _, trace = forward(net, rng.standard_normal((32, 6)))
            event = redo_step(net, trace, 0.0, RecycleStrategy(), None, rng)

            _, fresh = forward(net, rng.standard_normal((64, 6)))
            scores = neuron_scores(fresh)[0]
            recycled += len(event.indices[0])
            alive += int((scores[event.indices[0]] > 0.0).sum())

        assert recycled >= 300
        assert alive / recycled >= 0.95
        print(f"✅ {alive}/{recycled} recycled neurons live again")

    def test_output_change_bounded_for_positive_tau(self):
        """Verify with tau > 0 each output moves by at most sum ||old outgoing row||_1 * max |h|"""
        rng = np.random.default_rng(8)
        for trial in range(20):
            net = build_network(dense_specs(6, [16], 3), seed=trial)
            quiet = rng.choice(16, size=4, replace=False)
            net.weights[0][:, quiet] *= 0.02
            batch = rng.standard_normal((32, 6))
            before, trace = forward(net, batch)
            outgoing = net.weights[1].copy()

            event = redo_step(net, trace, 0.1, RecycleStrategy(), None, rng)
            chosen = event.indices[0]
            assert len(chosen) > 0

            bound = float(sum(
                np.abs(outgoing[i]).sum() * np.abs(trace.activations[0][:, i]).max() for i in chosen
            ))
            change = np.abs(predict(net, batch) - before).sum(axis=1)
            assert change.max() <= bound + 1e-12
        print("✅ Output change stays within the recycled-contribution bound")


class TestSelection:

    def test_selection_count(self):
        """Verify ceil(fraction * live) without float drift"""
        assert selection_count(0.1, 30) == 3
        assert selection_count(0.1, 31) == 4
        assert selection_count(0.0, 30) == 0
        assert selection_count(1.0, 5) == 5
        print("✅ Selection counts correct")

    def test_score_based_rules(self, rng):
        """Verify lowest/inverse rules pick by score with stable ties"""
        scores = [np.array([0.5, 0.1, 0.1, 2.0, 1.3])]
        lowest = select_for_recycling(scores, SelectionStrategy(kind="lowest_score", fraction=0.4), rng)
        inverse = select_for_recycling(scores, SelectionStrategy(kind="inverse_score", fraction=0.4), rng)
        threshold = select_for_recycling(scores, SelectionStrategy(kind="threshold", tau=0.5), rng)

        assert lowest[0].tolist() == [1, 2]
        assert inverse[0].tolist() == [3, 4]
        assert threshold[0].tolist() == [0, 1, 2]
        print("✅ Score-based selection correct")

    def test_random_rule_is_seeded(self):
        """Verify random selection depends only on its generator"""
        scores = [np.arange(20.0)]
        strategy = SelectionStrategy(kind="random", fraction=0.25)
        a = select_for_recycling(scores, strategy, np.random.default_rng(1))
        b = select_for_recycling(scores, strategy, np.random.default_rng(1))
        assert a[0].tolist() == b[0].tolist()
        assert len(a[0]) == 5
        print("✅ Random selection seeded")

    def test_utility_rule_uses_outgoing_weights(self, small_net, rng):
        """Verify utility = score * |outgoing| picks the neuron with silenced outgoing weights"""
        scores = [np.ones(16), np.ones(16)]
        small_net.weights[1][7, :] = 0.0
        chosen = select_for_recycling(scores, SelectionStrategy(kind="utility", fraction=0.05), rng, small_net)
        assert chosen[0].tolist() == [7]
        with pytest.raises(ValueError):
            select_for_recycling(scores, SelectionStrategy(kind="utility"), rng)
        print("✅ Utility selection correct")

    def test_cosine_schedule(self):
        """Verify the fraction decays from start to 0 over the horizon"""
        assert cosine_fraction(0, 100, 0.1) == pytest.approx(0.1)
        assert cosine_fraction(50, 100, 0.1) == pytest.approx(0.05)
        assert cosine_fraction(100, 100, 0.1) == pytest.approx(0.0)
        schedule = RecycleSchedule(fraction_schedule="cosine", horizon=100)
        assert schedule.fraction_at(250, 0.3) == pytest.approx(0.0)
        assert RecycleSchedule().fraction_at(10, 0.3) == 0.3
        with pytest.raises(ValueError):
            RecycleSchedule(fraction_schedule="cosine").fraction_at(0, 0.1)
        print("✅ Cosine schedule correct")


class TestReset:

    def test_reset_last_layer(self, small_net, rng):
        """Verify only the final k layers are re-sampled and their moments cleared"""
        first = small_net.weights[0].copy()
        last = small_net.weights[2].copy()
        opt = saturated_opt(small_net)
        reset_last_layers(small_net, 1, opt, rng)

        assert np.array_equal(small_net.weights[0], first)
        assert not np.array_equal(small_net.weights[2], last)
        assert not opt.first_w[2].any() and opt.first_w[0].all()
        print("✅ Last-layer reset correct")

    def test_reset_clears_masks_of_reset_layers(self, small_net, rng):
        """Verify reset hidden layers become trainable again while feeding pruned rows stay zero"""
        small_net.masks[0][1] = True
        small_net.masks[1][2] = True
        reset_last_layers(small_net, 2, None, rng)

        assert not small_net.masks[1].any()
        assert small_net.masks[0][1]
        assert not small_net.weights[1][1, :].any()
        with pytest.raises(ConfigError):
            reset_last_layers(small_net, 4, None, rng)
        print("✅ Reset respects prune masks")
