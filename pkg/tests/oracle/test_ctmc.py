"""Tests for gjsq.oracle.ctmc module."""

import functools
import logging

import numpy as np
import pytest
import scipy.linalg

from gjsq.model.base import SystemConfig
from gjsq.model.results import Provenance
from gjsq.oracle.ctmc import (
    ABSENT_PROB,
    OracleError,
    build_generator,
    default_truncation,
    oracle_conditional_rates,
    oracle_marginals,
    reduced_system,
    solve_oracle,
    solve_stationary,
)
from gjsq.sqa.birth_death import birth_death_solve
from gjsq.sqa.spectral import limiting_rates


@functools.lru_cache(maxsize=None)
def solved(s, rho):
    """Oracle distribution of the canonical system, shared between tests."""
    return solve_oracle(SystemConfig.two_server(s, rho))


class TestDefaultTruncation:
    """Tests for default_truncation."""

    @pytest.mark.parametrize("rho, expected", [(0.5, 200), (0.7, 200), (0.95, 800), (0.99, 4000)])
    def test_values(self, rho, expected):
        """The truncation grows like ``40 / (1 - rho)`` with a floor of 200."""
        assert default_truncation(rho) == expected


class TestBuildGenerator:
    """Tests for build_generator."""

    @pytest.fixture
    def chain(self):
        """Fixture that provides the ``s = 4, rho = 0.7`` chain on a small grid."""
        return build_generator(SystemConfig.two_server(4, 0.7), 8)

    def test_empty_system_routes_to_fast_server(self, chain):
        """From ``(0, 0)`` every arrival goes to server 2."""
        row = chain.generator.getrow(0).toarray().ravel()
        assert row[1] == pytest.approx(3.5)
        assert row[9] == 0.0
        assert row[0] == pytest.approx(-3.5)

    def test_tie_is_split(self, chain):
        """At ``(0, 3)`` both indices equal 1 and the arrivals are split evenly."""
        row = chain.generator.getrow(3).toarray().ravel()
        assert row[9 + 3] == pytest.approx(1.75)
        assert row[4] == pytest.approx(1.75)

    def test_departures(self, chain):
        """Server 1 departs at rate 1 and server 2 at rate ``s``."""
        assert chain.generator[9, 0] == pytest.approx(1.0)
        assert chain.generator[1, 0] == pytest.approx(4.0)

    def test_rows_sum_to_zero(self, chain):
        """Dropped arrivals leave the diagonal consistent."""
        np.testing.assert_allclose(np.asarray(chain.generator.sum(axis=1)).ravel(), 0.0, atol=1e-12)
        assert chain.n_states == 81
        assert chain.dropped_rate[:, 8].max() > 0.0

    def test_truncation_too_small(self):
        """The grid must hold at least ``2s`` jobs per queue."""
        with pytest.raises(ValueError, match="at least 2s = 8"):
            build_generator(SystemConfig.two_server(4, 0.7), 7)

    @pytest.mark.parametrize(
        "config, match",
        [
            (SystemConfig.two_server(2, 0.7, "weib"), "exponential"),
            (SystemConfig(rates=(1.0, 2.0, 3.0), arrival_rate=3.0), "two servers"),
        ],
    )
    def test_unsupported_systems(self, config, match):
        """Only two exponential servers are supported."""
        with pytest.raises(ValueError, match=match):
            build_generator(config, 20)


class TestSolveStationary:
    """Tests for solve_stationary and solve_oracle."""

    def test_normalized(self):
        """The distribution sums to 1 with a small residual and negligible tail."""
        dist = solved(2, 0.7)
        assert dist.pi.sum() == pytest.approx(1.0, abs=1e-12)
        assert dist.residual <= 1e-12
        assert dist.tail_mass < 1e-10
        assert dist.chain.K == 200

    def test_throughputs(self):
        """The servers share the whole arrival stream."""
        stats = oracle_marginals(solved(2, 0.7))
        assert stats[0].lambda_bar + stats[1].lambda_bar == pytest.approx(2.1, abs=1e-10)

    def test_mean_queue(self):
        """The mean queue at server 1 for ``s = 2, rho = 0.7`` is about 0.92."""
        assert oracle_marginals(solved(2, 0.7))[0].mean == pytest.approx(0.92, abs=0.01)

    def test_symmetric_servers(self):
        """Identical servers give a symmetric distribution and an even split."""
        dist = solved(1, 0.7)
        np.testing.assert_allclose(dist.pi, dist.pi.T, atol=1e-12)
        stats = oracle_marginals(dist)
        assert stats[0].lambda_bar / 1.4 == pytest.approx(0.5, abs=1e-10)

    def test_truncation_insensitive(self):
        """Doubling the grid leaves the mean queues unchanged."""
        config = SystemConfig.two_server(2, 0.7)
        small = oracle_marginals(solve_stationary(build_generator(config, 100)))
        large = oracle_marginals(solve_stationary(build_generator(config, 200)))
        for a, b in zip(small, large):
            assert abs(a.mean - b.mean) < 1e-8

    def test_reduced_system_keeps_generator_sparsity(self):
        """The solved system is the generator without the empty state, with no dense row."""
        chain = build_generator(SystemConfig.two_server(2, 0.9), 60)
        system, rhs = reduced_system(chain)
        assert system.shape == (chain.n_states - 1, chain.n_states - 1)
        assert system.nnz <= chain.generator.nnz
        assert int(np.diff(system.tocsr().indptr).max()) <= 5
        assert 1 <= np.count_nonzero(rhs) <= 2

    def test_reduced_system_is_balance(self):
        """The solution scaled to ``pi(0, 0) = 1`` satisfies the reduced equations."""
        dist = solved(2, 0.7)
        system, rhs = reduced_system(dist.chain)
        pi = dist.pi.ravel() / dist.pi[0, 0]
        np.testing.assert_allclose(system @ pi[1:], rhs, atol=1e-9)

    @pytest.mark.parametrize("s", [1, 2, 3])
    def test_matches_dense_null_space(self, s):
        """On a small grid the sparse solve equals the dense null space of the generator."""
        chain = build_generator(SystemConfig.two_server(s, 0.6), 12)
        dist = solve_stationary(chain)
        null = scipy.linalg.null_space(chain.generator.toarray().T)[:, 0]
        np.testing.assert_allclose(dist.pi.ravel(), null / null.sum(), atol=1e-12)

    def test_residual_failure(self):
        """A residual above the tolerance raises OracleError."""
        chain = build_generator(SystemConfig.two_server(2, 0.5), 20)
        with pytest.raises(OracleError, match="Stationary residual"):
            solve_stationary(chain, residual_tol=-1.0)

    def test_truncation_doubling(self, caplog):
        """A grid with too much edge mass is doubled."""
        with caplog.at_level(logging.INFO, logger="gjsq.oracle.ctmc"):
            dist = solve_oracle(SystemConfig.two_server(2, 0.9), K=8, max_doublings=2)
        assert dist.chain.K == 32
        assert "raising truncation to K=16" in caplog.text


class TestOracleConditionalRates:
    """Tests for oracle_conditional_rates."""

    def test_profiles(self):
        """Both profiles are oracle rates and unreachable states are absent."""
        dist = solved(2, 0.7)
        profiles = oracle_conditional_rates(dist)
        assert [p.provenance for p in profiles] == [Provenance.ORACLE, Provenance.ORACLE]
        marginal = dist.marginal(0)
        assert np.isnan(profiles[0].rates[marginal < ABSENT_PROB]).all()

    def test_fast_server_takes_short_queue_arrivals(self):
        """Server 2 receives every arrival while it holds at most ``s - 2`` jobs."""
        rates = oracle_conditional_rates(solved(4, 0.7))[1].rates
        np.testing.assert_allclose(rates[:3], 3.5, rtol=1e-12)

    def test_wrong_config(self):
        """The distribution must belong to the given configuration."""
        with pytest.raises(ValueError, match="different configuration"):
            oracle_conditional_rates(solved(2, 0.7), SystemConfig.two_server(2, 0.5))

    @pytest.mark.parametrize("s", [1, 2, 3, 4])
    @pytest.mark.parametrize("rho", [0.5, 0.7, 0.9])
    def test_birth_death_is_exact(self, s, rho):
        """The exact conditional rates turn each marginal into a birth-death queue."""
        dist = solved(s, rho)
        for profile, exact in zip(oracle_conditional_rates(dist), oracle_marginals(dist)):
            stats = birth_death_solve(profile, dist.chain.config.rates[profile.server])
            assert stats.mean == pytest.approx(exact.mean, rel=1e-9)
            assert stats.std == pytest.approx(exact.std, rel=1e-9)
            np.testing.assert_allclose(stats.pi, exact.pi[: len(stats.pi)], atol=1e-12)

    @pytest.mark.parametrize("s", [2, 3, 4])
    @pytest.mark.parametrize("rho", [0.4, 0.7, 0.9])
    def test_server1_limit(self, s, rho):
        """Far into the tail the server-1 rate approaches ``rho ** (1 + s)``."""
        dist = solved(s, rho)
        rates = oracle_conditional_rates(dist)[0].rates
        deep = int(np.nonzero(dist.marginal(0) > 1e-11)[0].max())
        assert rates[deep] == pytest.approx(rho ** (1 + s), rel=1e-2)

    def test_server1_limit_example(self):
        """For ``s = 4, rho = 0.7`` the rates are within 1% of 0.16807 from ten jobs on."""
        rates = oracle_conditional_rates(solved(4, 0.7))[0].rates
        np.testing.assert_allclose(rates[10:15], 0.16807, rtol=1e-2)

    @pytest.mark.parametrize("s", [2, 3, 4])
    @pytest.mark.parametrize("rho", [0.4, 0.7, 0.9])
    def test_server2_limit(self, s, rho):
        """From ``8s`` to ``12s`` the server-2 rates are within 0.1% of the periodic limiting pattern."""
        dist = solved(s, rho)
        rates = oracle_conditional_rates(dist)[1].rates
        marginal = dist.marginal(1)
        lam2_lim = limiting_rates(rho, s)[1]
        window = [n for n in range(8 * s, 12 * s + 1) if marginal[n] >= ABSENT_PROB]
        if not window:
            pytest.skip("every state from 8s to 12s is below the absent-state threshold")
        for n in window:
            assert rates[n] == pytest.approx(lam2_lim[n % s], rel=1e-3)
