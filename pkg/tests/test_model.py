"""
Test Suite for Scenario Parameters and the Inter-Update Chain.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from src.model import (
    ChainState,
    SystemParams,
    TransitionMatrix,
    delivery_probability,
    stationary_distribution,
    stationary_good,
    success_prob,
    transition_matrix,
)
from src.utils.errors import InvalidParametersError


def random_params(count, seed=7):
    """Seeded draws over the whole valid parameter box."""
    rng = np.random.default_rng(seed)
    draws = []
    for _ in range(count):
        n = int(rng.integers(1, 2001))
        draws.append(
            SystemParams(
                n=n,
                alpha=float(rng.uniform(1e-4, min(1.0, 3.0 / n))),
                beta=float(rng.uniform(0.0, 1.0)),
                gamma=float(rng.uniform(1e-3, 1.0)),
            )
        )
    return draws


@pytest.fixture
def bursty_params():
    """Sample scenario with a bursty channel."""
    return SystemParams.from_load(500, 1.25, beta=0.125, gamma=0.5)


class TestStationaryGood:
    """Test cases for the stationary channel law."""

    def test_ratio(self):
        """Test pi_G = gamma / (beta + gamma)."""
        assert stationary_good(0.25, 1.0) == pytest.approx(0.8, rel=1e-15)

    def test_ideal_channel(self):
        """Test that beta = 0 keeps the channel good."""
        assert stationary_good(0.0, 0.3) == 1.0

    def test_both_zero_rejected(self):
        """Test that beta = gamma = 0 is rejected."""
        with pytest.raises(InvalidParametersError):
            stationary_good(0.0, 0.0)

    def test_out_of_range_rejected(self):
        """Test probabilities outside [0, 1]."""
        with pytest.raises(InvalidParametersError):
            stationary_good(1.5, 0.5)

    @pytest.mark.parametrize("params", random_params(50, seed=3))
    def test_fixed_point(self, params):
        """Test pi_G = (1 - beta) pi_G + gamma (1 - pi_G)."""
        pi_g = stationary_good(params.beta, params.gamma)
        assert (1.0 - params.beta) * pi_g + params.gamma * (1.0 - pi_g) == pytest.approx(pi_g, abs=1e-12)


class TestSystemParams:
    """Test cases for SystemParams validation and derived values."""

    def test_single_terminal_success(self):
        """Test that a lone terminal succeeds whenever it transmits."""
        params = SystemParams(n=1, alpha=0.3, beta=0.0, gamma=1.0)
        assert params.p_s == 0.3
        assert success_prob(params) == 0.3

    def test_two_terminals(self):
        """Test p_s = alpha (1 - alpha pi_G)^(n-1) on an exact case."""
        params = SystemParams(n=2, alpha=0.5, beta=0.0, gamma=1.0)
        assert params.p_s == pytest.approx(0.25, rel=1e-15)

    def test_log_domain_matches_direct_formula(self, bursty_params):
        """Test the log-domain evaluation against the direct product."""
        direct = bursty_params.alpha * (1.0 - bursty_params.alpha * bursty_params.pi_g) ** (bursty_params.n - 1)
        assert bursty_params.p_s == pytest.approx(direct, rel=1e-12)

    @pytest.mark.parametrize(
        "fields",
        [
            {"n": 0, "alpha": 0.1, "beta": 0.1, "gamma": 0.1},
            {"n": 5, "alpha": 0.0, "beta": 0.1, "gamma": 0.1},
            {"n": 5, "alpha": 1.2, "beta": 0.1, "gamma": 0.1},
            {"n": 5, "alpha": 0.1, "beta": -0.1, "gamma": 0.1},
            {"n": 5, "alpha": 0.1, "beta": 0.1, "gamma": 0.0},
        ],
    )
    def test_invalid_ranges(self, fields):
        """Test that out-of-range fields are rejected at construction."""
        with pytest.raises(ValidationError):
            SystemParams(**fields)

    def test_vanishing_success_rejected(self):
        """Test that a scenario without deliveries is rejected."""
        with pytest.raises(ValidationError):
            SystemParams(n=2, alpha=1.0, beta=0.0, gamma=1.0)

    def test_frozen(self, bursty_params):
        """Test immutability."""
        with pytest.raises(ValidationError):
            bursty_params.n = 10

    def test_from_load(self, bursty_params):
        """Test the load constructor."""
        assert bursty_params.alpha == pytest.approx(0.0025)
        assert bursty_params.load == pytest.approx(1.25)
        assert bursty_params.pi_g == pytest.approx(0.8)

    def test_with_terminals(self, bursty_params):
        """Test changing the population only."""
        other = bursty_params.with_terminals(10)
        assert other.n == 10
        assert other.alpha == bursty_params.alpha
        assert other.gamma == bursty_params.gamma

    def test_record_and_dump(self, bursty_params):
        """Test that derived quantities appear in the serialised record."""
        assert set(bursty_params.record()) == {"n", "alpha", "beta", "gamma", "pi_g", "p_s"}
        dumped = bursty_params.model_dump()
        assert dumped["p_s"] == bursty_params.p_s

    def test_delivery_probability(self, bursty_params):
        """Test pi_G p_s."""
        assert delivery_probability(bursty_params) == pytest.approx(bursty_params.pi_g * bursty_params.p_s)

    @pytest.mark.parametrize("alpha, beta, gamma", [(0.0025, 0.125, 0.5), (0.01, 0.0, 1.0), (0.3, 0.6, 0.2)])
    def test_success_decreases_with_terminals(self, alpha, beta, gamma):
        """Test that p_s falls strictly as terminals are added."""
        counts = np.unique(np.geomspace(1, 2000, 60).astype(int))
        values = [SystemParams(n=int(n), alpha=alpha, beta=beta, gamma=gamma).p_s for n in counts]
        assert all(a > b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("pi_g", [1.0, 0.8])
    def test_delivery_peaks_at_inverse_pi(self, pi_g):
        """Test that the load maximising pi_G p_s is 1 / pi_G on a 0.01 grid."""
        beta = 0.0 if pi_g == 1.0 else 0.125
        gamma = 0.5 if beta else 1.0
        loads = np.round(np.arange(0.01, 3.0, 0.01), 2)
        values = [delivery_probability(SystemParams.from_load(500, load, beta=beta, gamma=gamma)) for load in loads]
        assert abs(loads[int(np.argmax(values))] - 1.0 / pi_g) <= 0.01 + 1e-12


class TestTransitionMatrix:
    """Test cases for the S/M/B chain."""

    def test_rows_sum_to_one(self, bursty_params):
        """Test stochastic rows."""
        matrix = transition_matrix(bursty_params)
        np.testing.assert_allclose(matrix.values.sum(axis=1), 1.0, atol=1e-15)

    @pytest.mark.parametrize("params", random_params(100))
    def test_rows_sum_to_one_everywhere(self, params):
        """Test stochastic rows over random scenarios."""
        matrix = transition_matrix(params)
        assert np.all(matrix.values >= 0.0)
        np.testing.assert_allclose(matrix.values.sum(axis=1), 1.0, atol=1e-12)

    def test_entries(self, bursty_params):
        """Test individual transitions."""
        matrix = transition_matrix(bursty_params)
        p_s = bursty_params.p_s
        assert matrix[ChainState.SUCCESS, ChainState.SUCCESS] == pytest.approx(0.875 * p_s)
        assert matrix[ChainState.MISS, ChainState.BAD] == pytest.approx(0.125)
        assert matrix[ChainState.BAD, ChainState.SUCCESS] == pytest.approx(0.5 * p_s)
        assert matrix[ChainState.BAD, ChainState.BAD] == pytest.approx(0.5)
        np.testing.assert_array_equal(matrix.row(ChainState.SUCCESS), matrix.row(ChainState.MISS))

    def test_transient_block(self, bursty_params):
        """Test the M/B block shape and contents."""
        block = transition_matrix(bursty_params).transient_block()
        assert block.shape == (2, 2)
        assert block[1, 1] == pytest.approx(0.5)

    def test_read_only(self, bursty_params):
        """Test that the matrix cannot be modified."""
        matrix = transition_matrix(bursty_params)
        with pytest.raises(ValueError):
            matrix.values[0, 0] = 1.0

    def test_invalid_rows_rejected(self):
        """Test validation of row sums."""
        with pytest.raises(InvalidParametersError):
            TransitionMatrix(values=np.full((3, 3), 0.5))

    def test_state_index(self):
        """Test state ordering."""
        assert [state.index for state in ChainState] == [0, 1, 2]


class TestStationaryDistribution:
    """Test cases for the stationary law of the chain."""

    def test_is_stationary(self, bursty_params):
        """Test pi Q = pi."""
        law = stationary_distribution(bursty_params)
        vector = np.array([law[state] for state in ChainState])
        values = transition_matrix(bursty_params).values
        np.testing.assert_allclose(vector @ values, vector, atol=1e-12)
        assert vector.sum() == pytest.approx(1.0, abs=1e-15)

    def test_success_share(self, bursty_params):
        """Test that the success state holds pi_G p_s of the mass."""
        law = stationary_distribution(bursty_params)
        assert law[ChainState.SUCCESS] == pytest.approx(delivery_probability(bursty_params))
