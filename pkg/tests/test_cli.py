import json

import pytest

from pachner_lab import cli
from pachner_lab.cli import EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_PASS, EXIT_SCHEMA, EXIT_USAGE, RunConfig, main
from pachner_lab.relations import IdentityReport


def _read(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_check_grassmann_exact(tmp_path):
    out = tmp_path / "g.json"
    assert main(["check", "grassmann", "--mode", "rational", "--out", str(out)]) == EXIT_PASS
    report = _read(out)
    assert report["summary"] == {"pass": 1, "fail": 0, "inconclusive": 0}
    assert set(report["trials"][0]["details"]["failures"].values()) == {0}


def test_reports_are_deterministic_and_parallel_safe(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["check", "pillow1", "--trials", "2", "--out", str(a)]) == EXIT_PASS
    assert main(["check", "pillow1", "--trials", "2", "--jobs", "2", "--out", str(b)]) == EXIT_PASS
    assert a.read_bytes() == b.read_bytes()
    assert [t["seed"] for t in _read(a)["trials"]] == [0, 1]
    assert "time_ms" not in a.read_text()


def test_seed_environment_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("PACHNER_LAB_SEED", "41")
    out = tmp_path / "s.json"
    assert main(["check", "grassmann", "--out", str(out)]) == EXIT_PASS
    assert _read(out)["trials"][0]["seed"] == 41
    assert main(["check", "grassmann", "--seed", "3", "--out", str(out)]) == EXIT_PASS
    assert _read(out)["trials"][0]["seed"] == 3


def test_fixture_generation_matches_shipped(tmp_path):
    assert main(["fixtures", "gen", "--out", str(tmp_path)]) == EXIT_PASS
    for shipped in cli.FIXTURE_DIR.glob("*.json"):
        assert json.loads((tmp_path / shipped.name).read_text()) == json.loads(shipped.read_text())


def test_truncated_fixture_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text((cli.DEFAULT_FIXTURE.read_text())[:200])
    assert main(["invariant", "compute", "--fixture", str(bad)]) == EXIT_SCHEMA
    assert "not valid JSON" in capsys.readouterr().err


def test_schema_violation_exit_code(tmp_path, capsys):
    data = json.loads(cli.DEFAULT_FIXTURE.read_text())
    data["gluings"] = data["gluings"][:-1]
    bad = tmp_path / "open.json"
    bad.write_text(json.dumps(data))
    assert main(["invariant", "harness", "qsign", "--fixture", str(bad)]) == EXIT_SCHEMA
    del data["pentachora"]
    bad.write_text(json.dumps(data))
    assert main(["invariant", "compute", "--fixture", str(bad)]) == EXIT_SCHEMA
    assert "$.pentachora" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["bogus"], ["check", "nothing"], ["check", "local", "--tol-local", "-1"],
                                  ["check", "local", "--trials", "0"], ["invariant", "harness", "move99"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as err:
        main(argv)
    assert err.value.code == EXIT_USAGE


def test_run_config_validation():
    with pytest.raises(cli.ConfigError):
        RunConfig("check", "local", tol_global=0)
    with pytest.raises(cli.ConfigError):
        RunConfig("check", "local", mode="real")
    assert RunConfig("check", "rel33").local_tol() == 1e-40
    assert RunConfig("check", "pillow1").local_tol() == 1e-50


def test_failure_and_inconclusive_exit_codes(tmp_path, monkeypatch):
    from pachner_lab import relations
    from pachner_lab.pentaweight import SolverError

    def failing(ctx, tol):
        return IdentityReport("pillow1", ctx.seed, ctx.bits, 1.0, False, 0.0, tol, {})

    def unsolvable(ctx, tol):
        raise SolverError("solver failed after 3 seeds")

    monkeypatch.setattr(relations, "verify_pillow1", failing)
    out = tmp_path / "r.json"
    assert main(["check", "pillow1", "--out", str(out)]) == EXIT_FAIL
    assert _read(out)["trials"][0]["status"] == "fail"
    monkeypatch.setattr(relations, "verify_pillow1", unsolvable)
    assert main(["check", "pillow1", "--out", str(out)]) == EXIT_INCONCLUSIVE
    assert _read(out)["trials"][0]["status"] == "inconclusive"


def test_invariant_compute_and_summary(tmp_path, capsys):
    runs = tmp_path / "runs"
    assert main(["invariant", "compute", "--mode", "rational", "--out", str(runs / "inv.json")]) == EXIT_PASS
    assert main(["check", "grassmann", "--out", str(runs / "g.json")]) == EXIT_PASS
    trial = _read(runs / "inv.json")["trials"][0]
    assert trial["components"]["m3"] == 6
    assert abs(abs(float(trial["I"][0])) - 1) < 1e-30
    capsys.readouterr()
    assert main(["report", "summarize", str(runs)]) == EXIT_PASS
    table = capsys.readouterr().out.splitlines()
    assert table[0].startswith("file\tcommand") and len(table) == 3
    (runs / "junk.json").write_text("{}")
    assert main(["report", "summarize", str(runs)]) == EXIT_SCHEMA
