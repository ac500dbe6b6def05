"""Tests for gjsq.simulation.engine module."""

import numpy as np
import pytest

from gjsq.model.base import SystemConfig
from gjsq.simulation.engine import Simulation, run_simulation


@pytest.fixture(scope="module")
def result():
    """Fixture that provides one run of ``s = 4, rho = 0.7`` with exponential sizes."""
    return run_simulation(SystemConfig.two_server(4, 0.7), 20_000, seed=11)


class TestSimulation:
    """Tests for the Simulation class."""

    class TestDunderInit:
        """Tests for the __init__ method of Simulation."""

        def test_starts_empty(self):
            """The system starts empty at time zero."""
            sim = Simulation(SystemConfig.two_server(2, 0.7), seed=1)
            assert sim.now == 0.0
            assert all(not heap for heap in sim.heaps)
            assert sim.work_in == 0.0

        def test_negative_seed(self):
            """Seeds must be nonnegative."""
            with pytest.raises(ValueError, match="nonnegative"):
                Simulation(SystemConfig.two_server(2, 0.7), seed=-3)

    class TestRun:
        """Tests for the run method of Simulation."""

        def test_departure_count(self, result):
            """The run stops at the requested departure."""
            assert result.departures == 20_000
            assert result.departed.sum() == 20_000
            assert result.t_start == 0.0

        def test_counter_identities(self, result):
            """Routed arrivals and exposure times add up to the totals."""
            assert sum(int(a.sum()) for a in result.arrivals_by_state) == result.total_arrivals
            for i in range(2):
                assert result.arrivals_by_state[i].sum() == result.arrivals[i]
                assert result.seen_by_state[i].sum() == result.total_arrivals
                assert result.time_by_state[i].sum() == pytest.approx(result.duration, rel=1e-12)
                assert result.busy_time[i] == pytest.approx(result.duration - result.time_by_state[i][0], rel=1e-9)

        def test_jobs_in_system(self):
            """Arrivals minus departures equals the jobs left at the end."""
            sim = Simulation(SystemConfig.two_server(2, 0.8), seed=5)
            res = sim.run(5_000)
            assert res.total_arrivals - res.departures == sum(len(heap) for heap in sim.heaps)

        def test_work_conservation(self, result):
            """Admitted work minus residual work equals the processed work."""
            assert result.work_balance_error() < 1e-9

        @pytest.mark.parametrize("jobsize", ["uni", "weib", "logn"])
        def test_work_conservation_any_size(self, jobsize):
            """Work is conserved whatever the size law."""
            res = run_simulation(SystemConfig.two_server(2, 0.7, jobsize), 5_000, seed=3)
            assert res.work_balance_error() < 1e-9

        def test_fast_server_gets_short_queue_arrivals(self, result):
            """While server 2 holds at most ``s - 2`` jobs every arrival joins it."""
            np.testing.assert_array_equal(result.arrivals_by_state[1][:3], result.seen_by_state[1][:3])

        def test_warmup(self):
            """Counters are reset after the warm-up departures."""
            res = run_simulation(SystemConfig.two_server(2, 0.7), 10_000, seed=2, warmup_fraction=0.25)
            assert res.departures == 7_500
            assert res.t_start > 0.0
            assert res.time_by_state[0].sum() == pytest.approx(res.duration, rel=1e-12)
            assert res.work_balance_error() < 1e-9

        def test_deterministic(self):
            """The same seed reproduces the run; another seed does not."""
            config = SystemConfig.two_server(3, 0.7, "weib")
            first = run_simulation(config, 2_000, seed=42)
            second = run_simulation(config, 2_000, seed=42)
            other = run_simulation(config, 2_000, seed=43)
            assert first.t_end == second.t_end
            np.testing.assert_array_equal(first.arrivals_by_state[0], second.arrivals_by_state[0])
            assert first.t_end != other.t_end

        def test_zero_arrival_rate(self):
            """An empty system idles until the time limit."""
            res = run_simulation(SystemConfig(rates=(1.0, 2.0), arrival_rate=0.0), 10, max_time=5.0)
            assert res.departures == 0
            assert res.t_end == 5.0
            np.testing.assert_array_equal(res.time_by_state[1], [5.0])

        def test_time_limit(self):
            """A time limit ends the run before the departure target."""
            res = run_simulation(SystemConfig.two_server(2, 0.7), 1_000_000, seed=1, max_time=50.0)
            assert res.t_end == 50.0
            assert res.departures < 1_000_000

        def test_tag(self):
            """The replication tag is recorded."""
            assert run_simulation(SystemConfig.two_server(2, 0.7), 10, seed=1, tag=7).tag == 7

        @pytest.mark.parametrize(
            "kwargs, match",
            [
                ({"n_departures": 0}, "positive"),
                ({"n_departures": 10, "warmup_fraction": 1.0}, "Warm-up fraction"),
                ({"n_departures": 10, "warmup_fraction": -0.1}, "Warm-up fraction"),
            ],
        )
        def test_invalid(self, kwargs, match):
            """Invalid run settings are rejected."""
            with pytest.raises(ValueError, match=match):
                Simulation(SystemConfig.two_server(2, 0.7), seed=1).run(**kwargs)

        def test_zero_arrival_rate_needs_limit(self):
            """A zero arrival rate without a time limit would never end."""
            with pytest.raises(ValueError, match="max_time"):
                Simulation(SystemConfig(rates=(1.0, 1.0), arrival_rate=0.0)).run(5)

    def test_three_servers(self):
        """More than two servers are simulated the same way."""
        config = SystemConfig(rates=(1.0, 2.0, 5.0), arrival_rate=5.6)
        res = run_simulation(config, 5_000, seed=9)
        assert res.n_servers == 3
        assert res.departures == 5_000
        assert res.work_balance_error() < 1e-9
