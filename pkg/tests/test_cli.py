"""Command-line surface: config handling, CSV outputs, exit codes, caching."""

import csv
import io
import json
import math
import os

import pytest

from orbitctl import cli, orbits
from orbitctl.errors import ConfigError

LOG2 = math.log(2.0)


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def rows_of(text):
    return list(csv.reader(io.StringIO(text)))


# ---- config parsing ----------------------------------------------------------

def test_parse_config_minimal():
    cfg = cli.parse_config({"n_max": 10, "method": "roots"})
    assert cfg == {"n_max": 10, "method": "roots"}


def test_parse_config_rejects_unknown_key():
    with pytest.raises(ConfigError, match="unknown config key 'frobnicate'"):
        cli.parse_config({"frobnicate": 1})


def test_parse_config_rejects_bad_range():
    with pytest.raises(ConfigError, match="exceeds"):
        cli.parse_config({"n_min": 5, "n_max": 3})


def test_parse_config_rejects_bad_types():
    with pytest.raises(ConfigError):
        cli.parse_config({"budget": "large"})
    with pytest.raises(ConfigError):
        cli.parse_config({"budget": True})
    with pytest.raises(ConfigError):
        cli.parse_config(["not", "a", "dict"])


# ---- enumerate ---------------------------------------------------------------

def test_enumerate_census_csv(capsys, tmp_path, square_file):
    code, out, err = run(
        capsys, "enumerate", "--map", square_file, "--n-max", "6",
        "--cache-dir", str(tmp_path / "cache"),
    )
    assert code == 0 and err == ""
    table = rows_of(out)
    assert table[0] == ["n", "primitive_repelling", "primitive_nonrepelling",
                        "level_total", "expected", "method"]
    assert len(table) == 7
    for row in table[1:]:
        n = int(row[0])
        assert int(row[3]) == int(row[4]) == 2**n


def test_enumerate_deterministic_output(capsys, tmp_path, basilica_file):
    args = ["enumerate", "--map", basilica_file, "--n-max", "6",
            "--cache-dir", str(tmp_path / "cache")]
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(first)]) == 0
    assert cli.main(args + ["--out", str(second)]) == 0
    capsys.readouterr()
    assert first.read_bytes() == second.read_bytes()


def test_enumerate_cache_extends_not_shrinks(capsys, tmp_path, basilica_file):
    cache = tmp_path / "cache"
    argv = ["enumerate", "--map", basilica_file, "--cache-dir", str(cache)]
    assert cli.main(argv + ["--n-max", "6"]) == 0
    assert cli.main(argv + ["--n-max", "4"]) == 0
    capsys.readouterr()
    (cache_file,) = cache.glob("*.jsonl")
    db = orbits.load_db(cache_file)
    assert db.max_complete_period() >= 6


def test_enumerate_budget_guard(capsys, tmp_path, square_file):
    code, out, err = run(
        capsys, "enumerate", "--map", square_file, "--n-max", "18",
        "--budget", "1000", "--cache-dir", str(tmp_path / "cache"),
    )
    assert code == 2
    record = json.loads(err)
    assert record["error"] == "ConfigError"
    assert record["exit_code"] == 2


def test_map_from_config_file(capsys, tmp_path, basilica_file):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"map": basilica_file, "cache_dir": str(tmp_path / "c")}))
    code, out, err = run(capsys, "enumerate", "--n-max", "4", "--config", str(cfg))
    assert code == 0
    assert len(rows_of(out)) == 5


def test_missing_map_is_config_error(capsys, tmp_path):
    code, out, err = run(capsys, "enumerate", "--n-max", "4",
                         "--cache-dir", str(tmp_path / "cache"))
    assert code == 2
    assert "no map given" in json.loads(err)["message"]


def test_cache_env_var(capsys, tmp_path, monkeypatch, square_file):
    env_cache = tmp_path / "envcache"
    monkeypatch.setenv("ORBITCTL_CACHE", str(env_cache))
    code, _, _ = run(capsys, "enumerate", "--map", square_file, "--n-max", "4")
    assert code == 0
    assert list(env_cache.glob("*.jsonl"))


def test_stale_cache_lock_is_config_error(capsys, tmp_path, square_file):
    from orbitctl import maps

    cache = tmp_path / "cache"
    cache.mkdir()
    fp = maps.load_map(square_file).fingerprint
    (cache / f"{fp}.jsonl.lock").touch()
    code, _, err = run(capsys, "enumerate", "--map", square_file, "--n-max", "4",
                       "--cache-dir", str(cache))
    assert code == 2
    assert "lock" in json.loads(err)["message"]


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2
    capsys.readouterr()


# ---- analysis subcommands ------------------------------------------------------

def test_pressure_csv(capsys, tmp_path, square_file):
    code, out, _ = run(
        capsys, "pressure", "--map", square_file, "--n", "8",
        "--t-values=-0.5,0,0.5", "--alpha", "0.25",
        "--cache-dir", str(tmp_path / "cache"),
    )
    assert code == 0
    table = rows_of(out)
    assert table[0] == ["t", "q", "q1", "q2", "n_used"]
    assert len(table) == 4
    q_mid = float(table[2][1])
    assert q_mid == pytest.approx(LOG2 + math.log(1 - 2.0**-8) / 8, abs=1e-12)


def test_profile_degenerate_exit_code(capsys, tmp_path, square_file):
    code, out, err = run(
        capsys, "profile", "--map", square_file, "--n", "8",
        "--alpha", str(LOG2), "--cache-dir", str(tmp_path / "cache"),
    )
    assert code == 3
    record = json.loads(err)
    assert record["error"] == "DegenerateError"
    assert record["exit_code"] == 3


def test_profile_maxent_csv(capsys, tmp_path, basilica_file):
    code, out, _ = run(
        capsys, "profile", "--map", basilica_file, "--n", "8", "--maxent",
        "--cache-dir", str(tmp_path / "cache"),
    )
    assert code == 0
    table = rows_of(out)
    assert table[0] == ["alpha", "xi", "sigma2", "H", "residual", "n_used"]
    assert abs(float(table[1][1])) < 1e-6  # xi vanishes at the maxent alpha


def test_profile_bad_alpha_is_config_error(capsys, tmp_path, basilica_file):
    code, _, err = run(
        capsys, "profile", "--map", basilica_file, "--n", "6",
        "--alpha", "not-a-number", "--cache-dir", str(tmp_path / "cache"),
    )
    assert code == 2
    assert json.loads(err)["error"] == "ConfigError"


def test_dimension_both_routes(capsys, tmp_path, square_file):
    code, out, _ = run(
        capsys, "dimension", "--map", square_file, "--route", "both",
        "--n", "8", "--depth", "8", "--cache-dir", str(tmp_path / "cache"),
    )
    assert code == 0
    payload = json.loads(out)
    assert [p["method"] for p in payload] == ["orbit-sum", "transfer-op", "gap"]
    assert abs(payload[0]["value"] - 1.0) < 5e-3
    assert abs(payload[1]["value"] - 1.0) < 1e-6
    assert payload[2]["value"] < 5e-3


def test_count_csv_against_prediction(capsys, tmp_path, basilica_file):
    code, out, _ = run(
        capsys, "count", "--map", basilica_file, "--n-min", "6", "--n-max", "8",
        "--profile-n", "8", "--maxent", "--interval=-1,1",
        "--cache-dir", str(tmp_path / "cache"),
    )
    assert code == 0
    table = rows_of(out)
    assert table[0][:4] == ["n", "count", "prediction", "ratio"]
    assert [int(r[0]) for r in table[1:]] == [6, 7, 8]
    for row in table[1:]:
        assert float(row[2]) > 0
        assert float(row[3]) == pytest.approx(int(row[1]) / float(row[2]), rel=1e-9)


def test_count_shrinking_schedule(capsys, tmp_path, basilica_file):
    code, out, _ = run(
        capsys, "count", "--map", basilica_file, "--n-min", "6", "--n-max", "8",
        "--profile-n", "8", "--maxent", "--length-power", "0.5",
        "--length-scale", "2.0", "--cache-dir", str(tmp_path / "cache"),
    )
    assert code == 0
    table = rows_of(out)
    lengths = [float(r[9]) - float(r[8]) for r in table[1:]]
    assert lengths == sorted(lengths, reverse=True)


def test_count_needs_window(capsys, tmp_path, basilica_file):
    code, _, err = run(
        capsys, "count", "--map", basilica_file, "--n-min", "6", "--n-max", "8",
        "--profile-n", "8", "--maxent", "--cache-dir", str(tmp_path / "cache"),
    )
    assert code == 2
    assert "interval" in json.loads(err)["message"]


def test_weyl_circle_csv(capsys, tmp_path, square_file):
    code, out, _ = run(
        capsys, "weyl", "--map", square_file, "--n", "6", "--k-max", "3",
        "--cache-dir", str(tmp_path / "cache"),
    )
    assert code == 0
    table = rows_of(out)
    assert table[0] == ["n", "k", "magnitude", "sample_size"]
    assert [int(r[1]) for r in table[1:]] == [1, 2, 3]
    for row in table[1:]:
        assert float(row[2]) == pytest.approx(1.0, abs=1e-12)


def test_weyl_filtered_smoke(capsys, tmp_path, basilica_file):
    code, out, _ = run(
        capsys, "weyl", "--map", basilica_file, "--n", "8", "--k-max", "2",
        "--interval=-1,1", "--maxent", "--cache-dir", str(tmp_path / "cache"),
    )
    assert code == 0
    table = rows_of(out)
    assert len(table) == 3
    assert int(table[1][3]) > 0


def test_owcount_csv(capsys, tmp_path, square_file):
    code, out, _ = run(
        capsys, "owcount", "--map", square_file, "--n-max", "8",
        "--thresholds", "3,6,20", "--delta", "1.0",
        "--cache-dir", str(tmp_path / "cache"),
    )
    assert code == 0
    table = rows_of(out)
    assert table[0] == ["threshold", "count", "li", "ratio", "truncated"]
    assert [int(r[1]) for r in table[1:]] == [1, 2, 7]
    assert all(r[4] == "0" for r in table[1:])


def test_decay_csv(capsys, tmp_path, basilica_file):
    code, out, _ = run(
        capsys, "decay", "--map", basilica_file, "--depth", "6",
        "--pairs", "2,0;0,1", "--n-steps", "6", "--alpha", "0.69",
    )
    assert code == 0
    table = rows_of(out)
    assert table[0] == ["b", "k", "depth", "n_steps", "rate"]
    assert len(table) == 3
    assert all(float(r[4]) <= 1.0 + 1e-9 for r in table[1:])


# ---- verify -------------------------------------------------------------------

def test_verify_db_roundtrip(capsys, tmp_path, basilica, basilica_file, basilica_db):
    path = tmp_path / "census.jsonl"
    orbits.save_db(basilica_db, path)
    code, out, _ = run(capsys, "verify", "--db", str(path), "--map", basilica_file)
    assert code == 0
    checks = json.loads(out)
    assert checks["ok"] is True
    assert checks["worst_residual"] < 1e-8


def test_verify_db_version_mismatch_exit_4(capsys, tmp_path, basilica_db):
    path = tmp_path / "census.jsonl"
    orbits.save_db(basilica_db, path)
    lines = path.read_text().splitlines()
    header = json.loads(lines[0])
    header["version"] = 999
    path.write_text("\n".join([json.dumps(header)] + lines[1:]) + "\n")
    code, _, err = run(capsys, "verify", "--db", str(path))
    assert code == 4
    assert json.loads(err)["error"] == "VersionMismatchError"


def test_verify_rejects_unknown_criteria(capsys):
    code, _, err = run(capsys, "verify", "--criteria", "99")
    assert code == 2
    assert "unknown criteria" in json.loads(err)["message"]


def test_verify_rejects_foreign_map(capsys, map_file):
    foreign = map_file("foreign", ((0.3, 0.0), (0.0, 0.0), (1.0, 0.0)))
    code, _, err = run(capsys, "verify", "--map", foreign)
    assert code == 2
    assert "fixed maps" in json.loads(err)["message"]


def test_verify_single_criterion_live(capsys):
    code, out, _ = run(capsys, "verify", "--criteria", "2")
    assert code == 0
    assert "[PASS] criterion 2" in out
    assert "all criteria passed" in out
