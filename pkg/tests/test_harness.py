import csv
import filecmp

import pytest

from pmm_density.errors import ConfigError
from pmm_density.harness.cli import main
from pmm_density.harness.config import RunConfig, load_config, parse_config_text, parse_seeds
from pmm_density.harness.io import MissingArtifactError
from pmm_density.harness.proxy import breakpoint
from pmm_density.harness.report import run_report

HEADERS = {
    "known_dgp_mc.csv": "regime,seed,estimator,k,N,mse,bias,variance,mse_ratio_vs_mle,c3,c4,g2,gamma6,g3,branch,config_hash",
    "main_benchmarks.csv": "benchmark,seed,estimator,w2_proxy,nn_w2_proxy,kl_pairwise,component_losses,wallclock_s,config_hash",
    "tau_tolerance.csv": "benchmark,estimator,tau,w2_mean,w2_ci95,within_10pct,config_hash",
}
TIME_COLUMNS = {"wallclock_s", "mean_s", "relative_to_plugin"}

SMALL = """
# trimmed run for the test suite
seeds = 0,1,2
proxy_N = 80
benchmarks = SevenLobes,SwissRoll
tau_benchmarks = SevenLobes
tau_grid = 0.5,1.0
iter_benchmarks = SevenLobes
iter_rounds = 2
component_N_grid = 80,140
component_replicates = 1
pmm3_reps = 50
pmm3_k_grid = 16
pmm3_sizes = 50
regimes = FlatExp1,GammaMild
wallclock_repeats = 1
"""


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "small.cfg"
    path.write_text(SMALL)
    return path


@pytest.fixture(scope="module")
def two_runs(small_config, tmp_path_factory):
    dirs = [tmp_path_factory.mktemp(f"run{i}") for i in range(2)]
    for d in dirs:
        assert main(["all", "--config", str(small_config), "--out", str(d)]) == 0
    return dirs


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_config_roundtrip():
    cfg = RunConfig()
    again = load_config(None).with_updates(**parse_config_text(cfg.to_text()))
    assert again.config_hash() == cfg.config_hash()
    assert cfg.seeds == (0, 1, 2, 3, 4)
    assert "version = " in cfg.to_text()


def test_config_errors():
    with pytest.raises(ConfigError):
        parse_config_text("nonsense = 1")
    with pytest.raises(ConfigError):
        parse_config_text("k = many")
    with pytest.raises(ConfigError):
        parse_config_text("just words")
    with pytest.raises(ConfigError):
        load_config(None, bias=1.5)


def test_gate_keys_parse():
    cfg = load_config(None, **parse_config_text("gate.flat_c3_tol = 0.2\ngate.pmm2_mean_one = false"))
    assert cfg.gate.flat_c3_tol == 0.2 and cfg.gate.pmm2_mean_one is False
    assert cfg.config_hash() != RunConfig().config_hash()


def test_parse_seeds():
    assert parse_seeds("0-4") == (0, 1, 2, 3, 4)
    assert parse_seeds("3,1") == (3, 1)


def test_breakpoint_rule():
    taus = [0.5, 0.75, 1.0, 1.25, 1.5]
    assert breakpoint(taus, [1.0, 1.05, 1.09, 1.2, 1.0]) == 1.0
    assert breakpoint(taus, [1.0, 1.2, 1.0, 1.0, 1.0]) == 0.5
    assert breakpoint(taus, [1.0, 0.5, 0.9, 1.1, 1.1]) == 1.5
    with pytest.raises(ConfigError):
        breakpoint([0.75, 1.0], [1.0, 1.0])


def test_exact_headers(two_runs):
    for name, header in HEADERS.items():
        with open(two_runs[0] / name) as fh:
            assert fh.readline().rstrip("\n") == header


def test_resolved_config_next_to_csv(two_runs):
    text = (two_runs[0] / "known_dgp_mc.config.txt").read_text()
    assert "layer = known-dgp" in text and "proxy_N = 80" in text
    h = read_rows(two_runs[0] / "known_dgp_mc.csv")[0]["config_hash"]
    assert h == load_config(None, **parse_config_text(text)).config_hash()


def test_byte_identical_reruns(two_runs):
    a, b = two_runs
    names = sorted(p.name for p in a.glob("*.csv"))
    assert len(names) >= 10
    for name in names:
        ra, rb = read_rows(a / name), read_rows(b / name)
        timed = TIME_COLUMNS & set(ra[0])
        if not timed:
            assert filecmp.cmp(a / name, b / name, shallow=False), name
        else:
            strip = lambda rows: [{k: v for k, v in r.items() if k not in timed} for r in rows]  # noqa: E731
            assert strip(ra) == strip(rb), name


def test_threads_do_not_change_results(small_config, two_runs, tmp_path, monkeypatch):
    monkeypatch.setenv("PMM_DENSITY_THREADS", "2")
    assert main(["known-dgp", "--config", str(small_config), "--out", str(tmp_path)]) == 0
    assert filecmp.cmp(tmp_path / "known_dgp_mc.csv", two_runs[0] / "known_dgp_mc.csv", shallow=False)


def test_report_outputs(two_runs):
    out = two_runs[0] / "report"
    for name in ("tables.md", "density_mse.svg", "iterated_proxy.svg", "tau_sweep.svg", "wallclock.svg"):
        assert (out / name).stat().st_size > 0
    assert (out / "density_mse.svg").read_text().lstrip().startswith("<?xml")


def test_report_missing_csv_names_producer(tmp_path):
    with pytest.raises(MissingArtifactError, match="known-dgp"):
        run_report(load_config(None, output_dir=str(tmp_path)))


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["report", "--out", str(tmp_path)]) == 1
    assert "known-dgp" in capsys.readouterr().err
    assert main(["tau-sweep", "--tau-grid", "0.75,1.0", "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit):
        main(["no-such-layer"])


def test_cli_flags_reach_layer(small_config, tmp_path):
    assert main(["known-dgp", "--config", str(small_config), "--out", str(tmp_path), "--n", "100", "--k", "8",
                 "--seeds", "0-1"]) == 0
    rows = read_rows(tmp_path / "known_dgp_mc.csv")
    assert {r["N"] for r in rows} == {"100"} and {r["k"] for r in rows} == {"8"}
    assert {r["seed"] for r in rows} == {"0", "1"}
