import csv
import io
import json
import subprocess
import sys
from importlib import resources
from pathlib import Path

import pytest

from grassharm.cli import main
from grassharm.io import dumps_json, rows_to_csv

REPO = Path(__file__).resolve().parents[1]


def write_config(tmp_path, name, cfg):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# --- io -------------------------------------------------------------------

def test_dumps_json_is_deterministic():
    text = dumps_json({"b": 1 + 2j, "a": float("nan"), "c": (1, 2.5)})
    assert json.loads(text) == {"a": None, "b": [1.0, 2.0], "c": [1, 2.5]}
    assert text.index('"a"') < text.index('"b"') and text.endswith("\n")


def test_rows_to_csv_uses_repr():
    text = rows_to_csv(["x", "y"], [[0.1, 3], [1 / 3, "s"]])
    assert text == "x,y\n0.1,3\n0.3333333333333333,s\n"


# --- lattice subcommands ---------------------------------------------------

def test_roots(capsys):
    code, out, _ = run(capsys, "roots", "--p", "2", "--q", "1")
    assert code == 0
    data = json.loads(out)
    assert data["rho"] == [2]
    assert {(r["root"], r["multiplicity"]) for r in data["roots"]} == {("a1", 2), ("2a1", 1)}


def test_roots_csv(capsys):
    code, out, _ = run(capsys, "roots", "--p", "2", "--q", "2", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["root", "c_1", "c_2", "multiplicity"] and len(rows) == 5


def test_weights_table(capsys):
    code, out, _ = run(capsys, "weights", "--p", "2", "--q", "1", "--l", "1", "--m1-max", "2", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert [(r["m_1"], r["d_lambda"]) for r in rows] == [("2", "42"), ("1", "15"), ("0", "3")]
    assert rows[1]["kappa_lambda"] == "252"


def test_weights_casimir_scale(capsys):
    _, out, _ = run(capsys, "weights", "--p", "1", "--q", "1", "--m1-max", "1", "--casimir-scale", "1")
    recs = json.loads(out)["weights"]
    assert recs[0]["kappa_lambda"] == 8.0


def test_threshold(capsys):
    code, out, _ = run(capsys, "threshold", "--p", "2", "--q", "2", "--nu", "2")
    data = json.loads(out)
    assert code == 0 and data["threshold"] == 14 and data["sobolev_condition"] and data["absolute_continuity"]
    _, out, _ = run(capsys, "threshold", "--p", "2", "--q", "1", "--nu", "1", "--r", "3")
    data = json.loads(out)
    assert not data["absolute_continuity"] and not data["sobolev_condition"]


def test_parameter_errors_exit_2(capsys):
    code, _, err = run(capsys, "roots", "--p", "1", "--q", "2")
    assert code == 2 and "error" in err
    assert run(capsys, "threshold", "--p", "2", "--q", "1", "--nu", "0")[0] == 2


# --- config-driven subcommands --------------------------------------------

def test_spherical(tmp_path, capsys):
    cfg = write_config(tmp_path, "sph", {"p": 1, "q": 1, "l": 0, "weights": [{"m": [1]}], "grid": [[0.0], [0.3926990816987], [0.7853981633974]]})
    code, out, _ = run(capsys, "spherical", "--config", cfg, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert [round(float(r["psi"]), 9) for r in rows] == [1.0, 0.707106781, 0.0]


def test_spherical_unnormalized_mode(tmp_path, capsys):
    base = {"p": 3, "q": 1, "l": 0, "weights": [{"m": [2]}], "grid": [[0.0]]}
    cfg = write_config(tmp_path, "a", {**base, "normalization_mode": "paper_constant"})
    _, out, _ = run(capsys, "spherical", "--config", cfg)
    assert json.loads(out)["rows"][0]["psi"] == pytest.approx(6.0)


@pytest.mark.parametrize("cfg,message", [
    ({"p": 1, "q": 1, "l": 0, "weights": [{"m": [1]}], "grid": [[0.1]], "bogus": 1}, "bogus"),
    ({"p": 1, "q": 1, "l": 0, "weights": [{"m": [1]}]}, "grid"),
    ({"p": 1, "q": 1, "l": 0, "weights": [{"m": [-1]}], "grid": [[0.1]]}, "minimum"),
    ({"p": 2, "q": 2, "l": 0, "weights": [{"m": [1, 0]}], "grid": [[0.1]]}, "q angles"),
    ({"p": 1, "q": 2, "l": 0, "weights": [{"m": [1]}], "grid": [[0.1]]}, "p >= q"),
])
def test_spherical_rejects_bad_configs(tmp_path, capsys, cfg, message):
    code, _, err = run(capsys, "spherical", "--config", write_config(tmp_path, "bad", cfg))
    assert code == 2 and message in err


def test_missing_config(tmp_path, capsys):
    assert run(capsys, "sobolev")[0] == 2
    assert run(capsys, "spherical", "--config", str(tmp_path / "nope.json"))[0] == 2
    bad = tmp_path / "broken.json"
    bad.write_text("{")
    assert run(capsys, "spherical", "--config", str(bad))[0] == 2


def test_convolve_mc_modes(tmp_path, capsys):
    base = {"p": 2, "q": 1, "l": 1, "weight": {"m": [1]}, "samples": 4096, "seed": 3}
    code, out, _ = run(capsys, "convolve-mc", "--config", write_config(tmp_path, "a", {**base, "points": [[0.4], [0.9]]}))
    data = json.loads(out)
    assert code == 0 and data["mode"] == "pairing" and data["sigmas"] < 4
    cfg = write_config(tmp_path, "b", {**base, "mode": "functional-equation", "u1": [0.9], "u2": [0.4]})
    code, out, _ = run(capsys, "convolve-mc", "--config", cfg)
    assert code == 0 and json.loads(out)["sigmas"] < 4
    cfg = write_config(tmp_path, "c", {**base, "mode": "consistency", "points": [[0.4], [0.9]]})
    code, out, _ = run(capsys, "convolve-mc", "--config", cfg)
    assert code == 0 and json.loads(out)["agree"]
    cfg = write_config(tmp_path, "d", {**base, "mode": "functional-equation"})
    assert run(capsys, "convolve-mc", "--config", cfg)[0] == 2
    cfg = write_config(tmp_path, "e", {**base, "points": [[0.0]]})
    assert run(capsys, "convolve-mc", "--config", cfg)[0] == 2


def test_convolve_mc_byte_identical_across_workers(tmp_path, capsys):
    cfg = write_config(tmp_path, "mc", {"p": 2, "q": 2, "l": 1, "weight": {"m": [1, 0]}, "samples": 10000, "points": [[1.0, 0.3], [0.7, 0.2]], "seed": 5})
    outs = []
    for workers in ("1", "4"):
        path = tmp_path / f"out{workers}.json"
        assert run(capsys, "convolve-mc", "--config", cfg, "--workers", workers, "--out", str(path))[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_seed_flag_overrides_config(tmp_path, capsys):
    cfg = write_config(tmp_path, "mc", {"p": 2, "q": 1, "l": 0, "weight": {"m": [1]}, "samples": 2000, "points": [[0.5], [0.9]], "seed": 1})
    a = run(capsys, "convolve-mc", "--config", cfg)[1]
    b = run(capsys, "convolve-mc", "--config", cfg, "--seed", "2")[1]
    assert a != b


def test_sobolev_exit_codes(tmp_path, capsys):
    good = write_config(tmp_path, "good", {"p": 2, "q": 1, "l": 0, "points": [[0.7]] * 6, "m1_max": 40, "s": 0.0})
    code, out, _ = run(capsys, "sobolev", "--config", good)
    assert code == 0 and json.loads(out)["converged"]
    bad = write_config(tmp_path, "bad", {"p": 2, "q": 1, "l": 0, "points": [[0.7]], "m1_max": 30, "nu": 1})
    code, out, _ = run(capsys, "sobolev", "--config", bad, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 3 and len(rows) == 31 and rows[-1]["tail_bound"] == "inf"
    neither = write_config(tmp_path, "neither", {"p": 2, "q": 1, "l": 0, "points": [[0.7]], "m1_max": 3})
    assert run(capsys, "sobolev", "--config", neither)[0] == 2
    too_big = write_config(tmp_path, "big", {"p": 2, "q": 1, "l": 0, "points": [[0.7]], "m1_max": 301, "s": 1})
    assert run(capsys, "sobolev", "--config", too_big)[0] == 2


def test_synthesize(tmp_path, capsys):
    cfg = write_config(tmp_path, "syn", {"p": 2, "q": 1, "l": 0, "points": [[0.7]] * 4, "grid": [[0.2], [0.9]], "m1_max": 0})
    code, out, _ = run(capsys, "synthesize", "--config", cfg, "--format", "csv")
    assert code == 0 and out == "t_1,f\n0.2,1.0\n0.9,1.0\n"
    gated = write_config(tmp_path, "gated", {"p": 2, "q": 1, "l": 0, "points": [[0.7]] * 3, "grid": [[0.2]], "m1_max": 5})
    assert run(capsys, "synthesize", "--config", gated)[0] == 2


def test_verify_subset(tmp_path, capsys):
    report = tmp_path / "report.json"
    code, out, err = run(capsys, "verify", "--only", "1", "8", "--out", str(report))
    assert code == 0
    assert "[PASS] 1." in out and "[PASS] 8." in out
    data = json.loads(report.read_text())
    assert [c["number"] for c in data["criteria"]] == [1, 8]


def test_verify_failure_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "--only", "5")
    assert code == 3 and "[FAIL] 5." in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "grassharm", "roots", "--p", "1", "--q", "1"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["rho"] == [1]


def test_published_schemas_match_packaged():
    docs = REPO / "docs" / "schemas"
    names = sorted(p.name for p in docs.glob("*.json"))
    assert names == ["convolve_mc.v1.json", "sobolev.v1.json", "spherical.v1.json", "synthesize.v1.json"]
    for name in names:
        packaged = resources.files("grassharm").joinpath(f"schemas/{name}").read_text()
        assert json.loads(packaged) == json.loads((docs / name).read_text())
