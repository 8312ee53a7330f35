"""
Test Suite for the Dynamic-Programming Oracle.

The oracle shares no algebra with the closed forms, so agreement between the
two is the main correctness check of the analytic engine.
"""

import itertools

import numpy as np
import pytest

from src.analytic import (
    avg_penalty,
    cycle_moment,
    decompose,
    gf_eval,
    mean_cycle,
    peak_violation,
    pmf_recurrence,
    pmf_values,
    tail_probability,
)
from src.model import SystemParams
from src.oracle import DpTable, pmf_dp, statistic_trunc
from src.plan import ChannelSpec
from src.utils.errors import InsufficientHorizonError, InvalidParametersError

DEEP_TAIL = 1e-30


def grid_scenarios():
    """Ten channel transitions each way and five loads at n = 500."""
    channel = [float(v) for v in np.geomspace(1e-3, 1.0, 10)]
    loads = (0.25, 0.5, 1.0, 1.5, 2.5)
    return [
        SystemParams.from_load(500, load, beta=beta, gamma=gamma)
        for beta, gamma, load in itertools.product(channel, channel, loads)
    ]


def confluent_scenarios(count=20, seed=31):
    """Single-terminal draws inside the double-root band whose PMF decays slowly."""
    scenarios = []
    for alpha, beta in ((0.01, 9e-9), (0.01, 5e-9)):
        scenarios.append(SystemParams(n=1, alpha=alpha, beta=beta, gamma=1.0 - (1.0 - beta) * (1.0 - alpha)))
    rng = np.random.default_rng(seed)
    while len(scenarios) < count:
        alpha = float(rng.uniform(0.005, 0.05))
        beta = float(rng.uniform(0.05, 0.9)) * 1e-10 * (1.0 - alpha) / alpha
        scenarios.append(SystemParams(n=1, alpha=alpha, beta=beta, gamma=1.0 - (1.0 - beta) * (1.0 - alpha)))
    return scenarios


def near_degenerate_scenarios():
    """Fast-decaying cases around the pole-zero cancellation plus the confluent draws."""
    fast = [SystemParams(n=1, alpha=0.3, beta=beta, gamma=1.0 - (1.0 - beta) * 0.7) for beta in (1e-12, 1e-9, 1e-6)]
    return fast + confluent_scenarios()


@pytest.fixture
def moderate():
    """Scenario with a mean cycle of a few hundred slots."""
    return SystemParams(n=50, alpha=0.02, beta=0.1, gamma=0.3)


class TestPmfDp:
    """Test cases for the forward recursion."""

    def test_horizon_validation(self, moderate):
        """Test that a horizon below one is rejected."""
        with pytest.raises(InvalidParametersError):
            pmf_dp(moderate, y_max=0)

    def test_first_entries(self, moderate):
        """Test P(0) = 0 and P(1) = (1 - beta) p_s."""
        table = pmf_dp(moderate, y_max=10)
        assert table.horizon == 10
        assert table.first_passage.shape == (11,)
        assert table.first_passage[0] == 0.0
        assert table.first_passage[1] == pytest.approx(0.9 * moderate.p_s, rel=1e-15)

    def test_automatic_horizon(self, moderate):
        """Test that the automatic horizon stops below the tail tolerance."""
        table = pmf_dp(moderate, tail_tol=1e-9)
        assert table.residual < 1e-9
        assert table.first_passage.sum() + table.residual == pytest.approx(1.0, abs=1e-12)
        assert table.max_mass_defect < 1e-11

    def test_read_only(self, moderate):
        """Test that the table cannot be modified."""
        table = pmf_dp(moderate, y_max=5)
        assert isinstance(table, DpTable)
        with pytest.raises(ValueError):
            table.first_passage[1] = 0.0

    def test_decay_matches_dominant_root(self, moderate):
        """Test the spectral radius against the dominant pole."""
        table = pmf_dp(moderate, y_max=5)
        assert table.decay == pytest.approx(decompose(moderate).decay, rel=1e-12)

    def test_geometric_law(self):
        """Test the ideal channel against p_s (1 - p_s)^(y-1)."""
        params = SystemParams(n=500, alpha=0.0025, beta=0.0, gamma=1.0)
        table = pmf_dp(params, y_max=2000)
        ys = np.arange(1, 2001)
        np.testing.assert_allclose(table.first_passage[1:], params.p_s * (1.0 - params.p_s) ** (ys - 1), rtol=1e-12)


class TestOracleEquivalence:
    """Test cases comparing the closed forms with the oracle."""

    @pytest.mark.parametrize("params", grid_scenarios())
    def test_pmf_grid(self, params):
        """Test the PMF over the first 5000 slots."""
        table = pmf_dp(params, y_max=5000)
        closed = pmf_values(decompose(params), np.arange(0, 5001))
        assert np.max(np.abs(closed - table.first_passage)) <= 1e-10

    @pytest.mark.parametrize("params", near_degenerate_scenarios())
    def test_pmf_near_degenerate(self, params):
        """Test scenarios near the pole-zero cancellation and the confluent roots."""
        table = pmf_dp(params, y_max=5000)
        closed = pmf_values(decompose(params), np.arange(0, 5001))
        assert np.max(np.abs(closed - table.first_passage)) <= 1e-10

    @pytest.mark.parametrize("params", confluent_scenarios())
    def test_confluent_statistics(self, params):
        """Test mean, second moment, tail and recurrence on the double-root branch."""
        decomp = decompose(params)
        assert decomp.branch == "double"
        expected = (params.beta + params.gamma) / (params.gamma * params.p_s)
        assert mean_cycle(decomp) == pytest.approx(expected, rel=1e-9)
        np.testing.assert_allclose(pmf_values(decomp, np.arange(0, 5001)), pmf_recurrence(decomp, 5000), atol=1e-12)

        table = pmf_dp(params, tail_tol=DEEP_TAIL)
        oracle = statistic_trunc(table, lambda y: y.astype(float) ** 2, growth_degree=2)
        assert cycle_moment(decomp, 2) == pytest.approx(oracle, rel=1e-8)
        ccdf = 1.0 - np.cumsum(table.first_passage)
        for f in (1, 10, 100, 1000):
            assert tail_probability(decomp, f) == pytest.approx(ccdf[f], abs=1e-10)

    def test_gf_against_partial_sum(self):
        """Test G_Y(1/2) against the oracle series sum_y P_Y(y) 2^-y."""
        params = SystemParams(n=500, alpha=0.0025, beta=0.125, gamma=0.5)
        table = pmf_dp(params, y_max=200)
        partial = float(np.dot(table.first_passage, 0.5 ** np.arange(0, 201)))
        assert gf_eval(decompose(params), 0.5) == pytest.approx(partial, abs=1e-12)

    @pytest.mark.parametrize("k", range(1, 10))
    def test_moments(self, moderate, k):
        """Test E[Y^k] against the truncated oracle sum."""
        table = pmf_dp(moderate, tail_tol=DEEP_TAIL)
        oracle = statistic_trunc(table, lambda y: y.astype(float) ** k, growth_degree=k)
        assert cycle_moment(decompose(moderate), k) == pytest.approx(oracle, rel=1e-8)

    def test_mean_against_renewal_identity(self, moderate):
        """Test the oracle mean against (beta + gamma) / (gamma p_s)."""
        table = pmf_dp(moderate, tail_tol=DEEP_TAIL)
        oracle = statistic_trunc(table, lambda y: y.astype(float), growth_degree=1)
        expected = (moderate.beta + moderate.gamma) / (moderate.gamma * moderate.p_s)
        assert oracle == pytest.approx(expected, rel=1e-9)
        assert mean_cycle(decompose(moderate)) == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_average_penalty(self, moderate, m):
        """Test the average penalty against the oracle moment ratio."""
        table = pmf_dp(moderate, tail_tol=DEEP_TAIL)
        numerator = statistic_trunc(table, lambda y: y.astype(float) ** (m + 1), growth_degree=m + 1)
        denominator = statistic_trunc(table, lambda y: y.astype(float), growth_degree=1)
        oracle = numerator / ((m + 1) * denominator)
        assert avg_penalty(decompose(moderate), m) == pytest.approx(oracle, rel=1e-9)

    @pytest.mark.parametrize("gamma", [0.5, 0.0005])
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_peak_violation_against_ccdf(self, gamma, m):
        """Test the peak violation at lattice thresholds against the oracle CCDF."""
        channel = ChannelSpec.from_pi_g(0.8, gamma)
        params = SystemParams.from_load(500, 1.25, beta=channel.beta, gamma=channel.gamma)
        decomp = decompose(params)
        table = pmf_dp(params, y_max=200)
        ccdf = 1.0 - np.cumsum(table.first_passage)
        for j in range(1, 201):
            assert peak_violation(decomp, m, float(j**m)) == pytest.approx(ccdf[j], abs=1e-10)


class TestStatisticTrunc:
    """Test cases for truncated expectations."""

    def test_total_mass(self, moderate):
        """Test that unit weight recovers the absorbed mass."""
        table = pmf_dp(moderate)
        total = statistic_trunc(table, lambda y: np.ones_like(y, dtype=float))
        assert total == pytest.approx(1.0 - table.residual, abs=1e-12)

    def test_short_horizon_rejected(self, moderate):
        """Test that a visible tail raises instead of truncating silently."""
        table = pmf_dp(moderate, y_max=10)
        with pytest.raises(InsufficientHorizonError):
            statistic_trunc(table, lambda y: y.astype(float), growth_degree=1)

