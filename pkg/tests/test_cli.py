import json
import subprocess
import sys

import pytest

from qbanyan.cli import main
from qbanyan.report import strip_volatile


def run_cli(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gate_fredkin_cross(capsys):
    code, out, _ = run_cli(capsys, "gate", "--fredkin", "--control", "1")
    assert code == 0
    res = json.loads(out)["results"]["analytic"]
    assert res["probability"] == 0.25
    assert res["herald"] == {"D1": 0, "D2": 0}


def test_gate_fuse_reports_coefficients(capsys):
    code, out, _ = run_cli(capsys, "gate", "--fuse", "--no-feed-forward")
    res = json.loads(out)["results"]["analytic"]
    assert code == 0 and res["probability"] == 1 / 32
    assert len(res["fused_coefficients"]) == 4


def test_unit_table1(capsys):
    code, out, _ = run_cli(capsys, "unit", "--table1", "--pairs", "20")
    res = json.loads(out)["results"]
    assert code == 0 and res["all_pass"] and len(res["table1"]) == 8


def test_route_and_enumerate(capsys):
    code, out, _ = run_cli(capsys, "route", "--n", "4", "--perm", "0,-1,1,-1")
    res = json.loads(out)["results"]
    assert code == 0 and res["status"] == "Delivered" and len(res["fused_segments"]) == 1
    assert all(d["payload_intact"] for d in res["delivered"].values())
    code, out, _ = run_cli(capsys, "enumerate", "--n", "4")
    res = json.loads(out)["results"]
    assert code == 0 and res["permutations"] == 24 and res["exhaustive"]


def test_stats_needs_seed(capsys):
    code, _, err = run_cli(capsys, "stats", "--unit", "--trials", "10")
    assert code == 2 and "seed" in err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trials": 10, "bogus": 1}))
    code, _, err = run_cli(capsys, "stats", "--config", str(cfg), "--seed", "1")
    assert code == 2 and "bogus" in err


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trials": 50, "seed": 3, "f": 0}))
    code, out, _ = run_cli(capsys, "stats", "--config", str(cfg), "--trials", "40")
    rep = json.loads(out)
    assert code == 0 and rep["config"]["trials"] == 40 and rep["config"]["seed"] == 3
    assert rep["results"]["analytic"]["success_probability"] == 0.25


def test_domain_error_exit_code(capsys):
    code, _, err = run_cli(capsys, "route", "--n", "4", "--perm", "0,0,1,2")
    assert code == 1 and "distinct destinations" in err
    code, _, err = run_cli(capsys, "route", "--n", "6")
    assert code == 2 and "power of two" in err


def test_reports_are_reproducible(tmp_path):
    path = tmp_path / "report.json"

    def report():
        assert main(["stats", "--unit", "--trials", "300", "--seed", "9", "--output", str(path)]) == 0
        return strip_volatile(json.loads(path.read_text()))

    a, b = report(), report()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_csv_format(capsys):
    code, out, _ = run_cli(capsys, "enumerate", "--n", "4", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "key,value"
    assert "permutations,24" in lines


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qbanyan", "gate", "--fission"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["analytic"]["probability"] == 1 / 8


@pytest.mark.parametrize("argv", [["route", "--bogus"], ["nope"], []])
def test_argparse_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
