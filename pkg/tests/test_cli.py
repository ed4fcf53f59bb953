import io

import pytest
from hypothesis import given, settings, strategies as st

from profsampler.cli import OPTIONS, UsageError, main, read_config, resolve_settings
from profsampler.data import Dataset, load_csv, save_csv
from profsampler.simulate import CoxSimConfig, simulate_cox


def run(argv):
    buf = io.StringIO()
    code = main([str(a) for a in argv], out=buf)
    return code, buf.getvalue()


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "d.csv"
    save_csv(simulate_cox(CoxSimConfig(n=60, censor_horizon=3.0, seed=4)), path)
    return path


def test_study_writes_tables_and_manifest(tmp_path):
    code, text = run(["study", "--model", "cox", "--ns", "100", "--reps", "5", "--seed", "7",
                      "--out", tmp_path / "res"])
    assert code == 0
    assert "seed = 7" in text
    names = sorted(p.name for p in (tmp_path / "res").iterdir())
    assert names == ["manifest.txt", "table1.csv", "table1_extended.csv", "table2.csv"]
    assert "seed = 7" in (tmp_path / "res" / "manifest.txt").read_text()


def test_study_is_byte_identical(tmp_path):
    argv = ["study", "--ns", "20", "--reps", "3", "--seed", "3", "--chain-length", "1500",
            "--burn-in", "500"]
    assert run(argv + ["--out", tmp_path / "a"])[0] == 0
    assert run(argv + ["--out", tmp_path / "b"])[0] == 0
    for name in ("table1.csv", "table2.csv", "table1_extended.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_constant_covariate_exit_2(tmp_path, capsys):
    path = tmp_path / "flat.csv"
    path.write_text("time,event,z\n1,1,0.5\n2,1,0.5\n3,1,0.5\n")
    code, _ = run(["fit", "--model", "cox", "--data", path])
    assert code == 2
    assert "likelihood constant in theta" in capsys.readouterr().err


def test_fit_output(data_csv):
    code, text = run(["fit", "--data", data_csv])
    assert code == 0
    keys = dict(line.split(" = ", 1) for line in text.splitlines())
    assert keys["model"] == "cox" and keys["seed"] == "0" and keys["n"] == "60"
    assert float(keys["wald_lower_95"]) < float(keys["theta_hat"]) < float(keys["wald_upper_95"])


def test_sample_deterministic_with_draws(data_csv, tmp_path):
    argv = ["sample", "--data", data_csv, "--seed", "12", "--chain-length", "2000",
            "--burn-in", "500", "--prior", "normal:0:10"]
    code, a = run(argv + ["--dump-draws", tmp_path / "a.csv"])
    _, b = run(argv + ["--dump-draws", tmp_path / "b.csv"])
    assert code == 0
    assert a.replace("a.csv", "b.csv") == b
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert "mcmc_lower_95" in a and "seed = 12" in a and "prior = normal:0:10" in a
    assert len((tmp_path / "a.csv").read_text().splitlines()) == 1501


def test_sample_po_model(tmp_path):
    d = simulate_cox(CoxSimConfig(n=30, censor_horizon=2.0, seed=9))
    path = tmp_path / "po.csv"
    t = d.time.copy()
    e = d.event.copy()
    t[t.argmax()] += 1.0
    e[t.argmax()] = False
    save_csv(Dataset.from_arrays(t, e, d.z), path)
    code, text = run(["sample", "--model", "po", "--data", path, "--chain-length", "600",
                      "--burn-in", "200", "--seed", "1"])
    assert code == 0, text
    assert "model = po" in text


def test_po_degenerate_exit_2(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("time,event,z\n1,1,0.1\n2,0,0.4\n3,1,0.9\n")
    assert run(["fit", "--model", "po", "--data", path])[0] == 2


def test_simulate_to_file(tmp_path):
    out = tmp_path / "sim.csv"
    code, text = run(["simulate", "--n", "50", "--seed", "5", "--censor-horizon", "2.5",
                      "--out", out])
    assert code == 0
    assert "seed = 5" in text and "censor_horizon = 2.5" in text
    d = load_csv(out)
    assert d.n == 50 and d.time[~d.event].max() <= 2.5


def test_simulate_to_stdout(capsys):
    code, text = run(["simulate", "--n", "10", "--seed", "2"])
    assert code == 0
    assert text.splitlines()[0] == "time,event,z" and len(text.splitlines()) == 11
    assert "seed = 2" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["fit"],
    ["fit", "--data", "x.csv", "--bogus", "1"],
    ["fit", "--data", "/nonexistent/x.csv"],
    ["simulate"],
    ["simulate", "--n", "-3"],
    ["study", "--ns", "20"],
    ["sample", "--data", "x.csv", "--prior", "cauchy"],
    ["sample", "--data", "x.csv", "--chain-length", "10", "--burn-in", "10"],
    ["fit", "--data", "x.csv", "--config", "/nonexistent.cfg"],
    ["study", "--ns", "20", "--reps", "2"],
])
def test_usage_errors_exit_1(argv, capsys):
    assert run(argv)[0] == 1
    assert "error" in capsys.readouterr().err


def test_three_way_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# study settings\nchain-length = 3000\nseed = 5\ntheta_true = 2.0\n")
    flags = {"ns": "20", "reps": "1"}
    assert resolve_settings("study", flags, {})["chain_length"] == 5000
    file_only = resolve_settings("study", flags, read_config(cfg))
    assert (file_only["chain_length"], file_only["seed"], file_only["theta_true"]) == (3000, 5, 2.0)
    both = resolve_settings("study", {**flags, "chain_length": "4000"}, read_config(cfg))
    assert (both["chain_length"], both["seed"]) == (4000, 5)


def test_three_way_seed_end_to_end(tmp_path):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("seed = 5\n")
    base = ["simulate", "--n", "20", "--censor-horizon", "2", "--out", tmp_path / "s.csv"]
    assert "seed = 0" in run(base)[1]
    assert "seed = 5" in run(base + ["--config", cfg])[1]
    assert "seed = 9" in run(base + ["--config", cfg, "--seed", "9"])[1]


def test_config_rejects_unknown_key(tmp_path):
    with pytest.raises(UsageError):
        resolve_settings("fit", {"data": "x"}, {"chain_length": "10"})


tokens = st.sampled_from(["fit", "sample", "simulate", "study", "--n", "--ns", "--reps",
                          "--seed", "--prior", "--step", "--thin", "--model", "-1", "0", "3",
                          "auto", "po", "flat", "normal:0:1", "1,2", "x", "--", "-h"]
                         + ["--" + k.replace("_", "-") for k in OPTIONS])


@settings(max_examples=200, deadline=None)
@given(st.lists(tokens, max_size=6))
def test_parsing_is_total(argv):
    # any argument list ends in a run or a usage error, never an exception;
    # without --out a study never starts and nothing touches the filesystem
    argv = [a for a in argv if a not in ("--out", "--dump", "--dump-draws", "--data",
                                         "--config")]
    code = main(argv, out=io.StringIO())
    assert code in (0, 1, 2)
