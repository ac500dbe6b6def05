"""Tests for gjsq.model.results module."""

import math

import numpy as np
import pytest

from gjsq.model.results import Provenance, QueueStats, RateProfile, flatten_metrics, relative_difference


class TestRateProfile:
    """Tests for RateProfile."""

    @pytest.fixture
    def periodic(self):
        """Fixture that provides a profile with an absent state and a period-2 tail."""
        return RateProfile(
            server=1,
            rates=np.array([2.0, np.nan, 1.5]),
            provenance=Provenance.APPROXIMATION,
            tail=(0.4, 0.6),
            stderr=np.array([0.1, np.nan, 0.2]),
        )

    class TestRate:
        """Tests for the rate method of RateProfile."""

        def test_head_and_tail(self, periodic):
            """The head is explicit and the tail is indexed by ``n`` modulo its period."""
            assert periodic.rate(0) == 2.0
            assert periodic.rate(1) is None
            assert periodic.rate(2) == 1.5
            assert periodic.rate(3) == 0.6
            assert periodic.rate(4) == 0.4
            assert periodic.rate(101) == 0.6

        def test_no_tail(self):
            """Without a tail the states beyond the head are absent."""
            profile = RateProfile(server=0, rates=[1.0], provenance=Provenance.ORACLE)
            assert profile.rate(1) is None

        def test_negative_state(self, periodic):
            """Negative states are rejected."""
            with pytest.raises(ValueError, match="nonnegative"):
                periodic.rate(-1)

    class TestValues:
        """Tests for the values method of RateProfile."""

        def test_values(self, periodic):
            """Absent states are ``nan``."""
            np.testing.assert_array_equal(periodic.values(4), [2.0, np.nan, 1.5, 0.6, 0.4])

    class TestStderrAt:
        """Tests for the stderr_at method of RateProfile."""

        def test_known_and_unknown(self, periodic):
            """Standard errors exist only where recorded."""
            assert periodic.stderr_at(2) == 0.2
            assert periodic.stderr_at(1) is None
            assert periodic.stderr_at(9) is None

    def test_negative_rates_rejected(self):
        """Rates are nonnegative in the head and the tail."""
        with pytest.raises(ValueError, match="nonnegative"):
            RateProfile(server=0, rates=[1.0, -0.1], provenance=Provenance.SIMULATION)
        with pytest.raises(ValueError, match="nonnegative"):
            RateProfile(server=0, rates=[1.0], provenance=Provenance.SIMULATION, tail=(-1.0,))

    def test_provenance_values(self):
        """Provenance serializes to its lowercase name."""
        assert [p.value for p in Provenance] == ["oracle", "approximation", "simulation"]


class TestQueueStats:
    """Tests for QueueStats."""

    @pytest.fixture
    def geometric(self):
        """Fixture that provides the truncated M/M/1 distribution at load 1/2."""
        pi = 0.5 ** np.arange(1, 80)
        return QueueStats.from_distribution(0, pi / pi.sum(), lambda_bar=0.5, response_time=2.0)

    def test_from_distribution(self, geometric):
        """Mean and standard deviation of the geometric law at load 1/2."""
        assert geometric.mean == pytest.approx(1.0)
        assert geometric.std == pytest.approx(math.sqrt(2.0))

    def test_metrics(self, geometric):
        """Metric keys use 1-based server numbers."""
        assert geometric.metrics() == {
            "mean_q1": pytest.approx(1.0),
            "std_q1": pytest.approx(math.sqrt(2.0)),
            "lambda_bar_1": 0.5,
            "response_1": 2.0,
        }

    def test_metrics_without_response(self):
        """The response time is omitted when unknown."""
        stats = QueueStats.from_distribution(1, np.array([1.0]), lambda_bar=0.0)
        assert set(stats.metrics()) == {"mean_q2", "std_q2", "lambda_bar_2"}

    def test_to_dict_with_profile(self, geometric):
        """The JSON form lists the rates with ``None`` for absent states."""
        profile = RateProfile(server=0, rates=[0.5, np.nan], provenance=Provenance.ORACLE)
        data = geometric.to_dict(profile, n_max=2)
        assert data["rates"] == [0.5, None, None]
        assert data["mean"] == pytest.approx(1.0)
        assert len(data["pi"]) == 79


class TestRelativeDifference:
    """Tests for relative_difference."""

    @pytest.mark.parametrize(
        "reference, value, expected",
        [(1.0, 0.98, 0.02), (2.0, 2.5, -0.25), (0.0, 0.0, 0.0), (5.0, 5.0, 0.0)],
    )
    def test_values(self, reference, value, expected):
        """The difference is ``(reference - value) / reference``."""
        assert relative_difference(reference, value) == pytest.approx(expected)

    def test_zero_reference(self):
        """A zero reference with a nonzero value is undefined."""
        assert math.isnan(relative_difference(0.0, 1.0))


class TestFlattenMetrics:
    """Tests for flatten_metrics."""

    def test_nested(self):
        """Dictionaries and lists become dotted and indexed keys; booleans and strings are skipped."""
        data = {"metrics": {"mean_q1": 1, "std_q1": 2.5}, "1": {"rates": [0.5, None]}, "ok": True, "name": "x"}
        assert flatten_metrics(data) == {"metrics.mean_q1": 1.0, "metrics.std_q1": 2.5, "1.rates[0]": 0.5}

    def test_prefix(self):
        """A prefix is prepended to every key."""
        assert flatten_metrics({"a": 1}, "run") == {"run.a": 1.0}
