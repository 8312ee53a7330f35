"""
Test Suite for the Monte Carlo Simulators.

Statistical acceptance runs with large budgets are marked slow; deselect
them with ``-m "not slow"``.
"""

import json
import math
import multiprocessing
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from src.analytic import avg_penalty, decompose, mean_cycle, peak_violation
from src.model import SystemParams, delivery_probability
from src.plan import ChannelSpec
from src.sim import (
    CycleAccumulator,
    ReplicationRunner,
    SimConfig,
    SimMode,
    compare_with_analytic,
    merge,
    replication_generator,
    run_replications,
    sample_cycles,
    simulate_decoupled,
    simulate_full,
)
from src.sim.statistics import required_powers
from src.utils.config_loader import config_loader
from src.utils.errors import InsufficientSamplesError, InvalidParametersError


def bursty_params(gamma=0.5, pi_g=0.8, load=1.25, n=500):
    """Scenario on a channel with fixed good-state probability."""
    channel = ChannelSpec.from_pi_g(pi_g, gamma)
    return SystemParams.from_load(n, load, beta=channel.beta, gamma=channel.gamma)


@pytest.fixture
def ideal_single():
    """One terminal transmitting every slot over an ideal channel."""
    return SystemParams(n=1, alpha=1.0, beta=0.0, gamma=1.0)


@pytest.fixture
def small_scenario():
    """Scenario with short cycles for quick runs."""
    return SystemParams(n=10, alpha=0.1, beta=0.2, gamma=0.4)


@pytest.fixture
def decoupled_config():
    """Decoupled configuration tracking every kind of statistic."""
    return SimConfig(
        mode=SimMode.DECOUPLED,
        cycles=20_000,
        seed=42,
        penalty_orders=(1, 2),
        thresholds={2: [100.0, 400.0]},
        track_pmf_to=5,
    )


class TestSimConfig:
    """Test cases for SimConfig validation."""

    def test_full_needs_slots(self):
        """Test the budget of full mode."""
        with pytest.raises(ValidationError):
            SimConfig(mode=SimMode.FULL, cycles=100)

    def test_decoupled_needs_cycles(self):
        """Test the budget of decoupled mode."""
        with pytest.raises(ValidationError):
            SimConfig(mode=SimMode.DECOUPLED, slots=100)

    def test_unknown_key_rejected(self):
        """Test strict fields."""
        with pytest.raises(ValidationError):
            SimConfig(cycles=10, seeds=3)

    def test_slots_must_exceed_warmup(self):
        """Test the warmup bound."""
        with pytest.raises(ValidationError):
            SimConfig(mode=SimMode.FULL, slots=100, warmup_slots=100)

    def test_order_limits(self):
        """Test penalty and threshold orders."""
        with pytest.raises(ValidationError):
            SimConfig(cycles=10, penalty_orders=(13,))
        with pytest.raises(ValidationError):
            SimConfig(cycles=10, thresholds={0: [1.0]})

    def test_negative_threshold_rejected(self):
        """Test threshold values."""
        with pytest.raises(ValidationError):
            SimConfig(cycles=10, thresholds={1: [-1.0]})

    def test_normalisation(self):
        """Test that orders and thresholds are sorted and deduplicated."""
        config = SimConfig(cycles=10, penalty_orders=(3, 1, 3), thresholds={2: [9.0, 4.0, 9.0]})
        assert config.penalty_orders == (1, 3)
        assert config.thresholds == {2: (4.0, 9.0)}
        assert config.threshold_pairs() == [(2, 4.0), (2, 9.0)]
        assert config.budget == 10

    def test_default_warmup(self, small_scenario):
        """Test the warmup derived from the mean cycle."""
        config = SimConfig(mode=SimMode.FULL, slots=10_000)
        expected = math.ceil(10 / (small_scenario.pi_g * small_scenario.p_s))
        assert config.resolve_warmup(small_scenario) == expected
        assert SimConfig(mode=SimMode.FULL, slots=10_000, warmup_slots=7).resolve_warmup(small_scenario) == 7

    def test_required_powers(self):
        """Test the power sums kept for two penalty orders."""
        assert required_powers(SimConfig(cycles=10, penalty_orders=(1, 2))) == [1, 2, 3, 4, 6]


class TestRandomStreams:
    """Test cases for the replication stream contract."""

    def test_reproducible(self):
        """Test that (seed, replication) fixes the stream."""
        first = replication_generator(7, 3).random(5)
        second = replication_generator(7, 3).random(5)
        np.testing.assert_array_equal(first, second)

    def test_replications_differ(self):
        """Test that replications draw different streams."""
        assert not np.array_equal(replication_generator(7, 0).random(5), replication_generator(7, 1).random(5))

    def test_philox(self):
        """Test the counter-based bit generator."""
        assert isinstance(replication_generator(1, 0).bit_generator, np.random.Philox)


class TestDecoupled:
    """Test cases for the decoupled simulator."""

    def test_cycles_positive(self, small_scenario):
        """Test that every sampled cycle lasts at least one slot."""
        cycles = sample_cycles(replication_generator(1, 0), small_scenario, 10_000)
        assert cycles.dtype == np.int64
        assert cycles.min() >= 1

    def test_ideal_channel_is_geometric(self):
        """Test the sample mean of an ideal channel."""
        params = SystemParams(n=1, alpha=0.25, beta=0.0, gamma=1.0)
        cycles = sample_cycles(replication_generator(3, 0), params, 200_000)
        assert cycles.mean() == pytest.approx(4.0, rel=0.02)

    def test_wrong_mode_rejected(self, small_scenario):
        """Test that a full-mode configuration is refused."""
        with pytest.raises(InvalidParametersError):
            simulate_decoupled(small_scenario, SimConfig(mode=SimMode.FULL, slots=100))

    def test_point_mass(self, ideal_single):
        """Test Y = 1 with zero standard errors."""
        bundle = simulate_decoupled(ideal_single, SimConfig(cycles=1000, penalty_orders=(1, 3)))
        assert bundle.cycles == 1000
        assert bundle.elapsed_slots == 1000
        assert bundle.mean_cycle().mean == 1.0
        assert bundle.mean_cycle().std_error == 0.0
        assert bundle.avg_penalty(1).mean == pytest.approx(0.5)
        assert bundle.avg_penalty(3).mean == pytest.approx(0.25)

    def test_reproducible(self, small_scenario, decoupled_config):
        """Test that a fixed seed reproduces the bundle."""
        assert simulate_decoupled(small_scenario, decoupled_config) == simulate_decoupled(
            small_scenario, decoupled_config
        )

    def test_replications_differ(self, small_scenario, decoupled_config):
        """Test that replication indices select different streams."""
        first = simulate_decoupled(small_scenario, decoupled_config, replication=0)
        second = simulate_decoupled(small_scenario, decoupled_config, replication=1)
        assert first.power_sums != second.power_sums

    def test_agreement(self, small_scenario, decoupled_config):
        """Test every tracked statistic against its closed form."""
        bundle = simulate_decoupled(small_scenario, decoupled_config)
        rows = compare_with_analytic(bundle)
        names = [row.statistic for row in rows]
        assert names[:3] == ["mean_cycle", "avg_penalty[m=1]", "avg_penalty[m=2]"]
        assert "peak_violation[m=2,theta=400.0]" in names
        assert "pmf[y=5]" in names
        assert "delivery_rate" not in names
        for row in rows:
            assert abs(row.z_score) <= 3.0, row

    def test_untracked_statistics(self, small_scenario, decoupled_config):
        """Test that statistics outside the configuration are refused."""
        bundle = simulate_decoupled(small_scenario, decoupled_config)
        with pytest.raises(InvalidParametersError):
            bundle.avg_penalty(3)
        with pytest.raises(InvalidParametersError):
            bundle.peak_violation(2, 50.0)

    def test_chunked_sampling(self, small_scenario, decoupled_config, monkeypatch):
        """Test that a partial last chunk still completes the budget."""
        original = config_loader.get_configuration_value

        def small_chunks(key_path, default=None):
            if key_path == "simulation.cycle_chunk":
                return 3_000
            return original(key_path, default)

        monkeypatch.setattr(config_loader, "get_configuration_value", small_chunks)
        bundle = simulate_decoupled(small_scenario, decoupled_config)
        assert bundle.cycles == decoupled_config.cycles
        assert bundle.elapsed_slots == bundle.power_sums[1]

    @pytest.mark.slow
    @pytest.mark.parametrize("gamma", [0.5, 0.0005])
    def test_statistical_acceptance(self, gamma):
        """Test a million cycles at the bursty settings against the closed forms."""
        params = bursty_params(gamma=gamma)
        decomp = decompose(params)
        thetas = [float(slots) ** 2 for slots in (1000, 3000, 6000)]
        config = SimConfig(cycles=1_000_000, seed=20240101, penalty_orders=(1, 2), thresholds={2: thetas})
        bundle = simulate_decoupled(params, config)
        for m in (1, 2):
            estimate = bundle.avg_penalty(m)
            assert abs(estimate.mean - avg_penalty(decomp, m)) <= 3.0 * estimate.std_error
        for theta in thetas:
            estimate = bundle.peak_violation(2, theta)
            assert abs(estimate.mean - peak_violation(decomp, 2, theta)) <= 3.0 * estimate.std_error


    @pytest.mark.slow
    @pytest.mark.parametrize("gamma", [0.5, 0.0005])
    def test_agreement_across_seeds(self, gamma):
        """Test that at least 97 of 100 seeded million-cycle runs keep every |z| within 3."""
        params = bursty_params(gamma=gamma)
        decomp = decompose(params)
        thetas = [float(slots) ** 2 for slots in (1000, 3000, 6000)]
        agreeing = 0
        for seed in range(100):
            config = SimConfig(cycles=1_000_000, seed=seed, penalty_orders=(1, 2), thresholds={2: thetas})
            rows = compare_with_analytic(simulate_decoupled(params, config), decomp)
            tracked = [row for row in rows if row.statistic != "mean_cycle"]
            agreeing += all(row.z_score is not None and abs(row.z_score) <= 3.0 for row in tracked)
        assert agreeing >= 97

    def test_close_thresholds_reported_separately(self, small_scenario):
        """Test that thresholds equal to six digits keep their own rows."""
        config = SimConfig(cycles=2_000, seed=3, penalty_orders=(1,), thresholds={1: [10.0, 10.0000001]})
        bundle = simulate_decoupled(small_scenario, config)
        assert len(bundle.exceedances) == 2
        peaks = [row for row in compare_with_analytic(bundle) if row.statistic.startswith("peak_violation")]
        assert [row.statistic for row in peaks] == [
            "peak_violation[m=1,theta=10.0]",
            "peak_violation[m=1,theta=10.0000001]",
        ]


class TestFullSystem:
    """Test cases for the full-system simulator."""

    def test_wrong_mode_rejected(self, small_scenario):
        """Test that a decoupled configuration is refused."""
        with pytest.raises(InvalidParametersError):
            simulate_full(small_scenario, SimConfig(cycles=100))

    def test_ideal_single_terminal(self, ideal_single):
        """Test that a lone terminal on an ideal channel delivers every slot."""
        config = SimConfig(mode=SimMode.FULL, slots=200, warmup_slots=10, track_pmf_to=2)
        bundle = simulate_full(ideal_single, config)
        assert bundle.cycles == 189
        assert bundle.mean_cycle().mean == 1.0
        assert bundle.histogram == (0, 189, 0)
        rate = bundle.delivery_rate()
        assert rate.mean == 1.0
        assert rate.std_error == 0.0
        assert sum(batch.slots for batch in bundle.delivery_batches) == 190

    def test_reproducible(self, small_scenario):
        """Test that a fixed seed reproduces the bundle."""
        config = SimConfig(mode=SimMode.FULL, slots=20_000, seed=5, penalty_orders=(1,))
        assert simulate_full(small_scenario, config) == simulate_full(small_scenario, config)

    def test_insufficient_samples(self):
        """Test that a budget without a completed cycle fails."""
        config = SimConfig(mode=SimMode.FULL, slots=3, warmup_slots=0)
        with pytest.raises(InsufficientSamplesError):
            simulate_full(bursty_params(), config)

    def test_small_network_agreement(self, small_scenario):
        """Test the mean cycle and delivery rate of a small network."""
        config = SimConfig(mode=SimMode.FULL, slots=400_000, seed=11, penalty_orders=(1,))
        bundle = simulate_full(small_scenario, config)
        decomp = decompose(small_scenario)
        estimate = bundle.mean_cycle()
        assert abs(estimate.mean - mean_cycle(decomp)) <= 3.0 * estimate.std_error
        rate = bundle.delivery_rate()
        assert abs(rate.mean - delivery_probability(small_scenario)) <= 3.0 * rate.std_error

    @pytest.mark.slow
    def test_statistical_acceptance(self):
        """Test the full network at n = 500 against the decoupled closed forms."""
        params = bursty_params(gamma=0.5)
        config = SimConfig(mode=SimMode.FULL, slots=2_000_000, seed=8, penalty_orders=(2,))
        bundle = simulate_full(params, config)
        decomp = decompose(params)
        estimate = bundle.avg_penalty(2)
        analytic = avg_penalty(decomp, 2)
        assert abs(estimate.mean - analytic) <= max(3.0 * estimate.std_error, 0.02 * analytic)
        rate = bundle.delivery_rate()
        assert abs(rate.mean - delivery_probability(params)) <= 3.0 * rate.std_error


class TestMerge:
    """Test cases for pooling replications."""

    @pytest.fixture
    def replicas(self, small_scenario, decoupled_config):
        """Two independent replications."""
        return [simulate_decoupled(small_scenario, decoupled_config, replication=r) for r in (0, 1)]

    def test_merge_sums(self, replicas):
        """Test that pooled counts add up."""
        merged = merge(replicas)
        assert merged.replications == (0, 1)
        assert merged.cycles == replicas[0].cycles + replicas[1].cycles
        assert merged.power_sums[2] == replicas[0].power_sums[2] + replicas[1].power_sums[2]
        assert merged.histogram[3] == replicas[0].histogram[3] + replicas[1].histogram[3]

    def test_merge_order_independent(self, replicas):
        """Test that input order does not matter."""
        assert merge(replicas) == merge(list(reversed(replicas)))

    def test_single_bundle(self, replicas):
        """Test that merging one bundle returns it."""
        assert merge(replicas[:1]) == replicas[0]

    def test_empty_rejected(self):
        """Test merging nothing."""
        with pytest.raises(InvalidParametersError):
            merge([])

    def test_overlap_rejected(self, replicas):
        """Test duplicated replication indices."""
        with pytest.raises(InvalidParametersError):
            merge([replicas[0], replicas[0]])

    def test_mismatch_rejected(self, replicas, small_scenario):
        """Test bundles from different configurations."""
        other = simulate_decoupled(small_scenario, SimConfig(cycles=100, seed=1), replication=2)
        with pytest.raises(InvalidParametersError):
            merge([replicas[0], other])

    def test_standard_error_halves_in_variance(self, replicas):
        """Test that doubling identical data divides standard errors by sqrt(2)."""
        bundle = replicas[0]
        twin = bundle.model_copy(update={"replications": (1,)})
        merged = merge([bundle, twin])
        for name, estimate in bundle.estimates().items():
            pooled = merged.estimates()[name]
            assert pooled.mean == pytest.approx(estimate.mean, rel=1e-12)
            assert pooled.std_error == pytest.approx(estimate.std_error / math.sqrt(2.0), rel=1e-12)


class TestRunner:
    """Test cases for replication orchestration."""

    def test_invalid_worker_count(self):
        """Test worker validation."""
        with pytest.raises(InvalidParametersError):
            ReplicationRunner(workers=0)

    def test_invalid_replication_count(self, small_scenario, decoupled_config):
        """Test replication validation."""
        with pytest.raises(InvalidParametersError):
            run_replications(small_scenario, decoupled_config, replications=0)

    def test_workers_do_not_change_result(self, small_scenario, decoupled_config):
        """Test that the pooled bundle is independent of the worker count."""
        sequential = run_replications(small_scenario, decoupled_config, replications=3, workers=1)
        parallel = run_replications(small_scenario, decoupled_config, replications=3, workers=2)
        assert sequential == parallel
        assert sequential.replications == (0, 1, 2)

    def test_workers_follow_configuration_file(self, small_scenario, decoupled_config, tmp_path):
        """Test that spawned workers read the same configuration file as the parent."""
        defaults = json.loads(Path(config_loader.config_file_path).read_text(encoding="utf-8"))
        defaults["simulation"]["cycle_chunk"] = 7
        custom = tmp_path / "chunked.json"
        custom.write_text(json.dumps(defaults), encoding="utf-8")
        original = config_loader.config_file_path
        config = decoupled_config.model_copy(update={"cycles": 500})
        config_loader.use_file(str(custom))
        try:
            sequential = ReplicationRunner(workers=1).run(small_scenario, config, replications=2)
            spawned = ReplicationRunner(workers=2, mp_context=multiprocessing.get_context("spawn")).run(
                small_scenario, config, replications=2
            )
        finally:
            config_loader.use_file(str(original))
        assert sequential == spawned

    def test_comparison_point_mass(self, ideal_single):
        """Test that equal values with zero error give a zero z-score."""
        bundle = run_replications(ideal_single, SimConfig(cycles=100, penalty_orders=(1,)))
        rows = {row.statistic: row for row in compare_with_analytic(bundle)}
        assert rows["mean_cycle"].z_score == 0.0
        assert rows["avg_penalty[m=1]"].analytic == pytest.approx(0.5)


class TestAccumulator:
    """Test cases for the cycle accumulator."""

    def test_counts(self):
        """Test power sums, exceedances and the clipped histogram."""
        config = SimConfig(cycles=10, penalty_orders=(1,), thresholds={1: [2.0]}, track_pmf_to=2)
        accumulator = CycleAccumulator(config)
        accumulator.add(np.array([1, 2, 3, 5], dtype=np.int64))
        accumulator.add(np.array([], dtype=np.int64))
        assert accumulator.cycles == 4
        assert accumulator.power_sums[1] == 11
        assert accumulator.power_sums[2] == 1 + 4 + 9 + 25
        assert accumulator.exceed == [2]
        assert accumulator.histogram.tolist() == [0, 1, 1]

    def test_empty_bundle_rejected(self, small_scenario):
        """Test that a bundle needs one completed cycle."""
        accumulator = CycleAccumulator(SimConfig(cycles=10))
        with pytest.raises(InsufficientSamplesError):
            accumulator.bundle(small_scenario, 0, elapsed_slots=0)
