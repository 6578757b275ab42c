"""Tests for the ising-neigh command line."""
import pandas as pd
import pytest

from ising_neigh import __version__
from ising_neigh.cli import build_parser, main
from ising_neigh.sampler import load_samples


@pytest.fixture
def samples_file(tmp_path):
    path = tmp_path / "samples.txt"
    args = ["simulate", "--model", "grid3x3", "--n", "400", "--seed", "3"]
    assert main(args + ["--out", str(path)]) == 0
    return path


def test_version(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--version"])
    assert __version__ in capsys.readouterr().out


def test_simulate(samples_file):
    samples = load_samples(samples_file)
    assert samples.n == 400
    assert samples.site_labels == tuple(range(9))
    assert samples.meta.seed == 3


def test_simulate_binary(tmp_path):
    path = tmp_path / "samples.npz"
    args = ["simulate", "--model", "grid3x3", "--n", "50", "--out", str(path)]
    assert main(args) == 0
    assert load_samples(path).n == 50


def test_select(samples_file, tmp_path, capsys):
    ledger = tmp_path / "ledger.csv"
    code = main(
        ["select", "--samples", str(samples_file), "--site", "4", "--max-card", "2"]
        + ["--out", str(ledger)]
    )
    assert code == 0
    assert capsys.readouterr().out.startswith("site=4 selected=")
    assert len(pd.read_csv(ledger)) == 1 + 8 + 28


def test_select_fixed_constant(samples_file, capsys):
    code = main(
        ["select", "--samples", str(samples_file), "--site", "4", "--max-card", "1"]
        + ["--c", "0.5"]
    )
    assert code == 0
    assert "C=0.5" in capsys.readouterr().out


def test_cut(samples_file, tmp_path):
    out = tmp_path / "cut.csv"
    args = ["cut", "--samples", str(samples_file), "--site", "4", "--set", "1,3,0"]
    assert main(args + ["--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["site", "omega", "threshold", "kept"]
    assert sorted(frame["site"]) == [0, 1, 3]


def test_reduce(samples_file, capsys):
    args = ["reduce", "--samples", str(samples_file), "--site", "4"]
    assert main(args + ["--kept-target", "4"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "site,correlation,kept,eta,eta_ms"
    assert len(out.splitlines()) == 9


def test_estimate_methods(samples_file, tmp_path):
    out = tmp_path / "estimate.csv"
    args = ["estimate", "--samples", str(samples_file), "--site", "4"]
    args += ["--c-grid", "0.01:10:10", "--out", str(out)]
    assert main(args + ["--max-card", "2"]) == 0
    assert pd.read_csv(out)["method"].iloc[0] == "select-cut"
    assert main(args + ["--method", "efficient", "--kept-target", "3"]) == 0
    assert pd.read_csv(out)["method"].iloc[0] == "efficient"


def test_experiment(tmp_path):
    out = tmp_path / "fig6.csv"
    args = [
        "experiment", "--scenario", "fig6_oracle_vs_truth", "--n", "100,200",
        "--replicas", "2", "--seed", "1", "--out", str(out),
    ]
    assert main(args) == 0
    assert len(pd.read_csv(out)) == 4
    means = pd.read_csv(tmp_path / "fig6.mean.csv")
    assert list(means["n"]) == [100, 200]


def test_experiment_from_config(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(
        '{"scenario": "fig5_ini_discovery", "sample_sizes": [150], "replicas": 1, '
        '"max_card": 1}',
        encoding="utf-8",
    )
    out = tmp_path / "fig5.svg"
    args = ["experiment", "--config", str(config), "--out", str(out)]
    assert main(args + ["--format", "svg"]) == 0
    assert out.exists()


class TestExitCodes:
    def test_missing_samples(self, tmp_path):
        missing = str(tmp_path / "none.txt")
        assert main(["select", "--samples", missing, "--site", "4"]) == 1

    def test_unknown_site(self, samples_file):
        args = ["cut", "--samples", str(samples_file), "--site", "42", "--set", "1"]
        assert main(args) == 1

    def test_capacity(self, tmp_path):
        out = tmp_path / "s.txt"
        args = ["simulate", "--model", "sparse200", "--n", "5", "--sampler", "exact"]
        assert main(args + ["--out", str(out)]) == 2

    def test_experiment_needs_scenario(self):
        assert main(["experiment"]) == 1

    def test_bad_grid(self, samples_file):
        args = ["select", "--samples", str(samples_file), "--site", "4"]
        assert main(args + ["--c-grid", "5,1"]) == 1

    def test_usage_errors_are_input_errors(self, capsys):
        for argv in (
            ["cut", "--samples", "x.txt", "--site", "abc", "--set", "1"],
            ["cut", "--samples", "x.txt", "--site", "4", "--set", "1,b"],
            ["select", "--site", "4"],
            ["frobnicate"],
        ):
            with pytest.raises(SystemExit) as exc:
                main(argv)
            assert exc.value.code == 1
        assert "error:" in capsys.readouterr().err


def test_coverage_experiment_writes_constants(tmp_path):
    out = tmp_path / "coverage.csv"
    args = ["experiment", "--scenario", "variance_coverage", "--n", "200"]
    args += ["--replicas", "3", "--out", str(out)]
    assert main(args) == 0
    constants = pd.read_csv(tmp_path / "coverage.coverage.csv")
    assert list(constants.columns) == ["n", "empirical_constant"]
    assert list(constants["n"]) == [200]
