"""Tests for gjsq.cli module."""

import csv
import json

import pytest

from gjsq.cli import EXIT_ERROR, EXIT_OK, EXIT_TOLERANCE, build_parser, main, spec_from_args
from gjsq.experiments import FULL_DEPARTURES, FULL_REPS


class TestSpecFromArgs:
    """Tests for spec_from_args."""

    def test_canonical_system(self):
        """``--s`` and ``--rho`` build the canonical system."""
        spec = spec_from_args(build_parser().parse_args(["sqa", "--s", "4", "--rho", "0.9", "--jobsize", "logn"]))
        assert spec.config.s == 4
        assert spec.config.jobsize.name == "logn"
        assert spec.rate_source == "approximation"

    def test_config_file(self, tmp_path):
        """``--config`` reads a JSON system."""
        path = tmp_path / "system.json"
        path.write_text(json.dumps({"rates": [1, 2, 5], "lambda": 5.6}))
        spec = spec_from_args(build_parser().parse_args(["simulate", "--config", str(path)]))
        assert spec.config.rates == (1.0, 2.0, 5.0)

    def test_full_scale(self):
        """``--full-scale`` raises the defaults but not explicit values."""
        args = build_parser().parse_args(["simulate", "--s", "2", "--rho", "0.7", "--full-scale", "--reps", "3"])
        spec = spec_from_args(args)
        assert spec.reps == 3
        assert spec.departures == FULL_DEPARTURES
        assert FULL_REPS == 50

    def test_missing_system(self):
        """Single-system commands need a system."""
        with pytest.raises(ValueError, match="--config or both --s and --rho"):
            spec_from_args(build_parser().parse_args(["oracle", "--s", "2"]))

    def test_rates_sources(self):
        """Rate sources are passed through."""
        args = build_parser().parse_args(["rates", "--s", "2", "--rho", "0.7", "--sources", "simulation"])
        assert spec_from_args(args).sources == ("simulation",)


class TestMain:
    """Tests for main."""

    def test_sqa_document(self, tmp_path):
        """A document command writes JSON and exits 0."""
        out = tmp_path / "sqa.json"
        assert main(["sqa", "--s", "2", "--rho", "0.7", "--out", str(out)]) == EXIT_OK
        document = json.loads(out.read_text())
        assert document["metrics"]["mean_q1"] == pytest.approx(0.9077, rel=1.5e-2)

    def test_oracle_bundle(self, tmp_path):
        """A directory ``--out`` holds the oracle document and the joint distribution table."""
        out = tmp_path / "oracle"
        out.mkdir()
        assert main(["oracle", "--s", "2", "--rho", "0.7", "-K", "60", "--out", str(out)]) == EXIT_OK
        document = json.loads((out / "oracle.json").read_text())
        assert document["K"] == 60
        with open(out / "joint.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        assert list(rows[0]) == ["q1", "q2", "prob"]
        assert (rows[0]["q1"], rows[0]["q2"]) == ("0", "0")
        assert sum(float(row["prob"]) for row in rows) == pytest.approx(1.0, abs=1e-8)

    def test_new_directory_with_separator(self, tmp_path):
        """An ``--out`` ending with a separator is created as a directory."""
        out = tmp_path / "fresh"
        assert main(["oracle", "--s", "2", "--rho", "0.7", "-K", "60", "--out", f"{out}/"]) == EXIT_OK
        assert (out / "oracle.json").exists() and (out / "joint.csv").exists()

    def test_oracle_file_is_document(self, tmp_path):
        """A file ``--out`` gets the JSON document, ready for ``compare``."""
        out = tmp_path / "oracle.json"
        assert main(["oracle", "--s", "2", "--rho", "0.7", "-K", "60", "--out", str(out)]) == EXIT_OK
        assert "mean_q1" in json.loads(out.read_text())["metrics"]

    def test_rates_to_stdout(self, capsys):
        """A single table goes to stdout as CSV."""
        code = main(["rates", "--s", "2", "--rho", "0.7", "--sources", "approximation", "--n-max", "2"])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "server,n,source,value,stderr"
        assert len(lines) == 1 + 2 * 3

    def test_rates_json(self, tmp_path):
        """``--format json`` writes the rows as a JSON list."""
        out = tmp_path / "rates.json"
        args = ["rates", "--s", "2", "--rho", "0.7", "--sources", "approximation", "--n-max", "1"]
        assert main(args + ["--format", "json", "--out", str(out)]) == EXIT_OK
        assert len(json.loads(out.read_text())) == 4

    def test_compare_within_tolerance(self, tmp_path):
        """Identical documents compare clean."""
        path = tmp_path / "a.json"
        path.write_text(json.dumps({"metrics": {"mean_q1": 0.9}}))
        assert main(["compare", str(path), str(path), "--tolerance", "1e-9"]) == EXIT_OK

    def test_compare_exceeds_tolerance(self, tmp_path):
        """A tolerance breach exits with status 2."""
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        a.write_text(json.dumps({"metrics": {"mean_q1": 0.9232}}))
        b.write_text(json.dumps({"metrics": {"mean_q1": 0.9077}}))
        out = tmp_path / "compare.csv"
        assert main(["compare", str(a), str(b), "--tolerance", "0.01", "--out", str(out)]) == EXIT_TOLERANCE
        assert out.read_text().startswith("metric,a,b,abs_diff,rel_diff")

    @pytest.mark.parametrize(
        "argv",
        [
            ["sqa"],
            ["oracle", "--s", "2", "--rho", "0.7", "--jobsize", "weib"],
            ["compare", "missing_a.json", "missing_b.json"],
        ],
    )
    def test_errors(self, argv, caplog):
        """Failures are logged and exit with status 1."""
        assert main(argv) == EXIT_ERROR
        assert "failed" in caplog.text

    @pytest.mark.parametrize(
        "argv",
        [
            ["figure", "fig9"],
            ["sqa", "--s", "2", "--rho", "0.7", "--jobsize", "pareto"],
            ["histogram"],
            ["oracle", "--s", "two", "--rho", "0.7"],
            [],
        ],
    )
    def test_usage_error_exit_status(self, argv, capsys):
        """Usage errors exit with the error status, never the tolerance status."""
        assert main(argv) == EXIT_ERROR
        assert "error:" in capsys.readouterr().err

    def test_help_exit_status(self, capsys):
        """``--help`` exits cleanly."""
        assert main(["--help"]) == EXIT_OK
        assert "usage: gjsq" in capsys.readouterr().out

    def test_figure_bundle(self, tmp_path):
        """Figure tables are written into the output directory."""
        out = tmp_path / "figures"
        out.mkdir()
        code = main(["figure", "fig5", "--departures", "300", "--reps", "1", "--n-max", "2", "--out", str(out)])
        assert code == EXIT_OK
        assert (out / "fig5_rates.csv").exists()
