import json
import math
import os
import subprocess
import sys

import pytest

from divbound.cli import main
from divbound.solver import clear_caches


@pytest.fixture(autouse=True)
def _fresh_memo():
    clear_caches()
    yield


def run_main(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bound_single_triple(capsys):
    code, out, _ = run_main(
        capsys, "bound", "--family", "two-fork", "--mode", "density",
        "--alpha", "10", "--budget", "1",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["lower"] == pytest.approx(0.5, abs=1e-15)
    assert doc["upper"] == pytest.approx(1.0, abs=1e-12)
    assert doc["family"] == "two-fork"
    assert doc["mode"] == "density"
    assert doc["alpha"] == 10.0
    assert doc["budget"] == 1.0
    assert doc["blocks"] == 1
    assert doc["terms"] == 1
    expected_keys = {
        "family", "mode", "alpha", "budget", "S", "W", "M", "lower", "upper",
        "blocks", "id_pairs", "terms", "slack", "elapsed_seconds",
    }
    assert expected_keys <= set(doc)


def test_bound_beta_reports_exponentials(capsys):
    code, out, _ = run_main(
        capsys, "bound", "--family", "two-fork", "--mode", "beta", "--budget", "1",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["exp_lower"] == pytest.approx(math.sqrt(2), rel=1e-12)
    assert doc["exp_upper"] == pytest.approx(math.exp(doc["upper"]), rel=1e-12)
    assert doc["M"] == pytest.approx(math.log(2), rel=1e-15)


def test_bound_pressure_mode(capsys):
    code, out, _ = run_main(
        capsys, "bound", "--family", "two-fork", "--mode", "pressure:1.5",
        "--budget", "100",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["M"] == pytest.approx(math.log(2.5), rel=1e-12)
    assert doc["lower"] <= doc["upper"]


def test_bound_csv_projection(capsys):
    code, out, _ = run_main(
        capsys, "bound", "--family", "two-fork", "--budget", "1",
        "--format", "csv",
    )
    assert code == 0
    header, row = out.strip().splitlines()
    cols = header.split(",")
    vals = row.split(",")
    assert len(cols) == len(vals)
    table = dict(zip(cols, vals))
    assert float(table["lower"]) == pytest.approx(0.5)
    assert table["family"] == "two-fork"


def test_bound_threads_do_not_change_output(capsys):
    args = ["bound", "--family", "two-fork", "--mode", "beta", "--budget", "1e5"]
    code, out1, _ = run_main(capsys, *args, "--threads", "1")
    assert code == 0
    clear_caches()
    code, out4, _ = run_main(capsys, *args, "--threads", "4")
    assert code == 0
    d1, d4 = json.loads(out1), json.loads(out4)
    d1.pop("elapsed_seconds")
    d4.pop("elapsed_seconds")
    assert d1 == d4


def test_bound_budget_monotonicity(capsys):
    docs = []
    for budget in ("10", "1e3", "1e5"):
        _, out, _ = run_main(
            capsys, "bound", "--family", "two-fork", "--budget", budget,
        )
        docs.append(json.loads(out))
    for a, b in zip(docs, docs[1:]):
        assert a["lower"] <= b["lower"] + 1e-15
        assert a["upper"] >= b["upper"] - 1e-15


def test_bound_exact_reference_matches_float_path(capsys):
    args = ["bound", "--family", "two-fork", "--budget", "1e3"]
    _, out_float, _ = run_main(capsys, *args)
    _, out_exact, _ = run_main(capsys, *args, "--exact-reference")
    f, e = json.loads(out_float), json.loads(out_exact)
    assert f["S"] == pytest.approx(e["S"], abs=1e-9)
    assert f["W"] == pytest.approx(e["W"], abs=1e-9)
    assert e["slack"] == 0.0
    assert f["terms"] == e["terms"]
    assert f["blocks"] == e["blocks"]


def test_bound_exact_reference_rejects_large_budget(capsys):
    code, _, err = run_main(
        capsys, "bound", "--family", "two-fork", "--budget", "1e6",
        "--exact-reference",
    )
    assert code == 2
    assert "error" in err


def test_bound_cache_file_round_trip(capsys, tmp_path):
    cache = str(tmp_path / "blocks.tsv")
    args = ["bound", "--family", "two-fork", "--budget", "1e4", "--cache", cache]
    _, out1, _ = run_main(capsys, *args)
    assert os.path.exists(cache)
    clear_caches()
    _, out2, _ = run_main(capsys, *args)
    d1, d2 = json.loads(out1), json.loads(out2)
    d1.pop("elapsed_seconds")
    d2.pop("elapsed_seconds")
    assert d1 == d2


def test_bound_family_file(capsys, tmp_path):
    doc = {
        "patterns": [
            {
                "vertices": 3,
                "edges": [
                    {"from": 0, "to": 1, "directed": True},
                    {"from": 0, "to": 2, "directed": True},
                ],
            }
        ],
        "forest": False,
    }
    path = tmp_path / "two_fork.json"
    path.write_text(json.dumps(doc))
    _, out_file, _ = run_main(
        capsys, "bound", "--family", f"file:{path}", "--budget", "1e3",
    )
    _, out_builtin, _ = run_main(
        capsys, "bound", "--family", "two-fork", "--budget", "1e3",
    )
    df, db = json.loads(out_file), json.loads(out_builtin)
    for key in ("S", "W", "lower", "upper", "blocks", "terms"):
        assert df[key] == db[key]


def test_bound_invalid_inputs_exit_2(capsys, tmp_path):
    assert run_main(capsys, "bound", "--family", "pentagon")[0] == 2
    assert run_main(capsys, "bound", "--family", "two-fork", "--mode", "wat")[0] == 2
    assert run_main(capsys, "bound", "--family", "two-fork", "--mode", "pressure:0")[0] == 2
    assert run_main(capsys, "bound", "--family", "two-fork", "--alpha", "0.5")[0] == 2
    assert run_main(capsys, "bound", "--family", "file:/no/such/file.json")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_main(capsys, "bound", "--family", f"file:{bad}")[0] == 2


def test_bound_resource_error_exit_3_names_key(capsys, monkeypatch):
    monkeypatch.setenv("DIVBOUND_NODE_LIMIT", "2")
    code, _, err = run_main(
        capsys, "bound", "--family", "two-fork", "--budget", "1e6",
    )
    assert code == 3
    assert "root" in err


def test_oracle_command(capsys):
    code, out, _ = run_main(capsys, "oracle", "--n", "3", "--family", "two-fork")
    assert code == 0
    doc = json.loads(out)
    assert doc["f"] == 2
    assert doc["q"] == 7
    assert doc["telescope_pass"] is True

    code, out, _ = run_main(capsys, "oracle", "--n", "1", "--family", "forest")
    doc = json.loads(out)
    assert (doc["f"], doc["q"]) == (1, 2)

    code, out, _ = run_main(capsys, "oracle", "--n", "12", "--family", "chain:2")
    assert json.loads(out)["f"] == 6


def test_oracle_rejects_large_n(capsys):
    assert run_main(capsys, "oracle", "--n", "25", "--family", "two-fork")[0] == 2
    assert run_main(capsys, "oracle", "--n", "0", "--family", "two-fork")[0] == 2


def test_blocks_table(capsys):
    code, out, _ = run_main(
        capsys, "blocks", "--family", "two-fork", "--budget", "1e8", "--top", "5",
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split("\t") == ["elements", "root", "weight", "increment"]
    assert len(lines) == 6
    first = lines[1].split("\t")
    assert first[0] == "1"
    assert first[1] == "1"
    assert float(first[2]) == pytest.approx(0.5, rel=1e-9)
    assert first[3] == "1"
    weights = [float(ln.split("\t")[2]) for ln in lines[1:]]
    assert weights == sorted(weights, reverse=True)


def test_blocks_top_zero_prints_header_only(capsys):
    code, out, _ = run_main(
        capsys, "blocks", "--family", "two-fork", "--budget", "100", "--top", "0",
    )
    assert code == 0
    assert out.strip().splitlines() == ["elements\troot\tweight\tincrement"]


def test_blocks_counting_mode_increments_in_range(capsys):
    code, out, _ = run_main(
        capsys, "blocks", "--family", "two-fork", "--mode", "beta",
        "--budget", "1e3", "--top", "50",
    )
    assert code == 0
    for line in out.strip().splitlines()[1:]:
        h = float(line.split("\t")[3])
        assert -1e-12 <= h <= math.log(2) + 1e-12


def test_verify_quick(capsys):
    code, out, _ = run_main(capsys, "verify", "--level", "quick")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 6
    assert all(": pass" in ln for ln in lines)


def test_missing_subcommand_exits_2():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


def test_console_entry_point_subprocess(tmp_path):
    env = dict(os.environ, DIVBOUND_CACHE_DIR=str(tmp_path))
    proc = subprocess.run(
        [sys.executable, "-m", "divbound.cli", "bound", "--family", "two-fork",
         "--budget", "1e3"],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 0
    doc = json.loads(proc.stdout)
    # alpha=10 retains only the (1,1,1) triple below budget 1024
    assert doc["lower"] == pytest.approx(0.5, abs=1e-15)
    assert os.path.exists(os.path.join(str(tmp_path), "blocks.tsv"))


def test_env_node_limit_subprocess():
    env = dict(os.environ, DIVBOUND_NODE_LIMIT="1")
    proc = subprocess.run(
        [sys.executable, "-m", "divbound.cli", "bound", "--family", "two-fork",
         "--budget", "1e8"],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 3
    assert "error" in proc.stderr
