import json

import pytest

from qauth import cli
from qauth import verification as v
from qauth.pauli import PauliOperator
from qauth.verification import EtaQuery, eta_bruteforce, reports_to_json


def _write(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_subseed_is_stable_and_job_specific():
    assert cli.subseed(7, "lemmas") == cli.subseed(7, "lemmas")
    assert cli.subseed(7, "lemmas") != cli.subseed(7, "correctness")
    assert cli.subseed(7, "lemmas") != cli.subseed(8, "lemmas")
    assert 0 <= cli.subseed(2**64 - 1, "eta.table") < 2**64


def test_lemmas_writes_reports(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["lemmas", "--seed", "3", "--out", str(out)]) == 0
    data = json.loads((out / "report.json").read_text())
    assert data["passed"] and len(data["reports"]) == 7
    assert (out / "summary.csv").read_text().startswith("check,")
    meta = json.loads((out / "metadata.json").read_text())
    assert "finished" in meta and "runtimes" in meta
    assert "PASS" in capsys.readouterr().out


def test_flags_before_and_after_subcommand(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["--seed", "5", "--out", str(a), "lemmas"]) == 0
    assert cli.main(["lemmas", "--seed", "5", "--out", str(b)]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_reports_independent_of_worker_count(tmp_path):
    cfg = _write(tmp_path, "[lemmas]\nstates = 2\n[correctness]\ntrials = 3\n")
    names = cli.SUITES["lemmas"] + cli.SUITES["correctness"]
    config = cli.load_config(cfg)
    config["run"]["seed"] = 9
    serial, _ = cli.run_jobs(names, config, jobs=1)
    parallel, _ = cli.run_jobs(names, config, jobs=2)
    assert reports_to_json(serial) == reports_to_json(parallel)


def test_missing_seed_is_config_error(tmp_path, capsys):
    assert cli.main(["lemmas", "--out", str(tmp_path)]) == 2
    assert "seed" in capsys.readouterr().err


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


def test_malformed_config_reports_line(tmp_path, capsys):
    cfg = _write(tmp_path, "seed = 7\n\n[trap\nattacks = 3\n")
    assert cli.main(["--config", cfg, "lemmas"]) == 2
    assert f"{cfg}:3:" in capsys.readouterr().err


@pytest.mark.parametrize(
    "text,line",
    [
        ("seed = 7\n[clifford]\nn = 1\nbogus = 2\n", 4),
        ("seed = 7\n[trap]\nattacks = \"many\"\n", 3),
        ("seed = 7\ncolour = 1\n", 2),
        ("seed = 7\n[plots]\nx = 1\n", 2),
        ("seed = 7\n[trap]\ncode = \"steane\"\n", None),
    ],
)
def test_invalid_config_fields(tmp_path, capsys, text, line):
    cfg = _write(tmp_path, text)
    assert cli.main(["--config", cfg, "lemmas"]) == 2
    err = capsys.readouterr().err
    if line is not None:
        assert f"{cfg}:{line}:" in err


def test_flags_override_config(tmp_path):
    cfg_path = _write(tmp_path, "seed = 1\njobs = 3\n[clifford]\nd = 1\n")
    args = cli.parse_args(["--config", cfg_path, "security", "clifford", "--d", "3", "--seed", "4"])
    cfg = cli.load_config(cfg_path)
    cli._apply_overrides(args, cfg)
    assert cfg["clifford"]["d"] == 3 and cfg.seed == 4 and cfg["run"]["jobs"] == 3


def test_jobs_environment_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("QAUTH_JOBS", "2")
    cfg = cli.ExperimentConfig()
    cli._apply_overrides(cli.parse_args(["lemmas"]), cfg)
    assert cfg["run"]["jobs"] == 2
    cfg = cli.ExperimentConfig()
    cli._apply_overrides(cli.parse_args(["lemmas", "--jobs", "1"]), cfg)
    assert cfg["run"]["jobs"] == 1
    monkeypatch.setenv("QAUTH_JOBS", "two")
    with pytest.raises(cli.ConfigError):
        cli._apply_overrides(cli.parse_args(["lemmas"]), cli.ExperimentConfig())


def test_eta_table(tmp_path, capsys):
    out = tmp_path / "eta"
    assert cli.main(["eta", "--n", "2", "--t", "0", "--out", str(out)]) == 0
    rows = (out / "eta_n2_t0.csv").read_text().strip().split("\n")
    header = rows[0].split(",")
    assert header[:4] == ["x", "y", "z", "eta"]
    # one row per letter multiset of a six-letter Pauli
    assert len(rows) - 1 == 84
    by_counts = {tuple(map(int, r.split(",")[:3])): int(r.split(",")[3]) for r in rows[1:]}
    assert by_counts[(1, 0, 0)] == eta_bruteforce(EtaQuery(2, 0, PauliOperator.from_label("XIIIII")))
    assert by_counts[(1, 0, 0)] == 240


def test_eta_table_reports_bound_violation(tmp_path):
    assert cli.main(["eta", "--n", "2", "--t", "1", "--out", str(tmp_path)]) == 1


def test_failed_check_exits_1(tmp_path, monkeypatch):
    monkeypatch.setitem(cli.JOBS, "lemmas", lambda seed, cfg: [v.exact_check("x", {}, 1, 0, 0)])
    assert cli.main(["lemmas", "--seed", "1", "--out", str(tmp_path)]) == 1


def test_oracle_disagreement_becomes_failed_report(tmp_path, monkeypatch):
    def boom(seed, cfg):
        raise v.OracleDisagreement("oracles differ")

    monkeypatch.setitem(cli.JOBS, "lemmas", boom)
    assert cli.main(["lemmas", "--seed", "1", "--out", str(tmp_path)]) == 1
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["reports"][0]["name"] == "lemmas.oracle_gate"
