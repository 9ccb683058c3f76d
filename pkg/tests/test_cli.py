import io
import json
import subprocess
import sys

import pytest

from prosim.cli import EXIT_INVALID, EXIT_OK, EXIT_USAGE, run
from prosim.examples import loan_model
from prosim.model import save_model


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(map(str, argv)), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    save_model(loan_model(case_count=200), d / "truth.json")
    code, _, err = call("generate", "--model", d / "truth.json", "--out", d / "log.csv", "--seed", 3)
    assert code == EXIT_OK, err
    return d


def test_pipeline_composes(workdir):
    d = workdir
    code, out, err = call("discover", "--log", d / "log.csv", "--out", d / "model.json", "--multitask", "global",
                          "--kappa", 5, "--dump-calendars", d / "cals.json", "--figures", d / "figs")
    assert code == EXIT_OK, err
    assert (d / "model.json").exists() and (d / "cals.json").exists()
    assert list((d / "figs").glob("calendar_*.png"))
    assert call("simulate", "--model", d / "model.json", "--out", d / "sim.csv", "--seed", 1)[0] == EXIT_OK
    code, out, _ = call("evaluate", "--real", d / "log.csv", "--sim", d / "sim.csv")
    assert code == EXIT_OK
    report = json.loads(out.strip().splitlines()[0])
    assert set(report) >= {"red", "ctd", "mmr"} and report["mmr"] == 0.0


def test_evaluate_repetitions_and_table(workdir):
    d = workdir
    call("discover", "--log", d / "log.csv", "--out", d / "m2.json", "--kappa", 5)
    code, out, _ = call("evaluate", "--real", d / "log.csv", "--model", d / "m2.json", "--repetitions", 5,
                        "--seed", 2, "--format", "table", "--figures", d / "eval")
    assert code == EXIT_OK
    assert out.splitlines()[0].split() == ["metric", "value"]
    assert (d / "eval" / "cycle_times.png").exists() and (d / "eval" / "relative_hours.png").exists()


def test_reproducible_outputs(workdir, monkeypatch):
    d = workdir
    call("simulate", "--model", d / "truth.json", "--out", d / "a.csv", "--seed", 7)
    call("simulate", "--model", d / "truth.json", "--out", d / "b.csv", "--seed", 7)
    assert (d / "a.csv").read_bytes() == (d / "b.csv").read_bytes()
    monkeypatch.setenv("PROSIM_SEED", "7")
    call("simulate", "--model", d / "truth.json", "--out", d / "c.csv")
    assert (d / "c.csv").read_bytes() == (d / "a.csv").read_bytes()


def test_perturb(workdir):
    d = workdir
    code, out, _ = call("perturb", "--log", d / "log.csv", "--scenario", "tnt", "--weeks", 2, "--out", d / "p.csv")
    assert code == EXIT_OK and "scenario=TNT" in out
    code, _, _ = call("perturb", "--log", d / "log.csv", "--scenario", "test", "--resource", "clerk_01",
                      "--substitute", "clerk_02", "--out", d / "q.csv")
    assert code == EXIT_OK


def test_sweep(workdir):
    d = workdir
    code, out, err = call("sweep", "--log", d / "log.csv", "--out", d / "sweep.csv", "--granules", "60,120",
                          "--betas", "0,1", "--kappas", "20", "--figures", d / "sw")
    assert code == EXIT_OK, err
    lines = (d / "sweep.csv").read_text().splitlines()
    assert lines[0] == "granule_minutes,beta,kappa,red" and len(lines) == 5
    assert out.startswith("best\t") and (d / "sw" / "sweep.png").exists()


@pytest.mark.parametrize("argv", [[], ["explode"], ["discover", "--log", "x.csv"], ["evaluate", "--real", "a", "--bogus"],
                                  ["discover", "--log", "a", "--out", "b", "--beta", "3"],
                                  ["discover", "--log", "a", "--out", "b", "--granule", "7"],
                                  ["perturb", "--log", "a", "--out", "b", "--scenario", "test", "--weeks", "0"]])
def test_usage_errors(argv):
    assert call(*argv)[0] == EXIT_USAGE


def test_invalid_input(tmp_path):
    (tmp_path / "bad.csv").write_text("case_id,activity,resource,start_time,end_time\n"
                                      "c,A,R,2024-01-01T10:00:00+00:00,2024-01-01T09:00:00+00:00\n")
    code, _, err = call("discover", "--log", tmp_path / "bad.csv", "--out", tmp_path / "m.json")
    assert code == EXIT_INVALID and "row" in err
    code, _, _ = call("simulate", "--model", tmp_path / "missing.json", "--out", tmp_path / "o.csv")
    assert code == EXIT_INVALID


def test_bad_seed_env(monkeypatch, workdir):
    monkeypatch.setenv("PROSIM_SEED", "abc")
    assert call("simulate", "--model", workdir / "truth.json", "--out", workdir / "z.csv")[0] == EXIT_USAGE


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "prosim.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "discover" in res.stdout
    res = subprocess.run([sys.executable, "-m", "prosim.cli", "nope"], capture_output=True, text=True)
    assert res.returncode == EXIT_USAGE
