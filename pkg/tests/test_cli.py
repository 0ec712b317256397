"""CLI surface: subcommands, exit codes, deterministic JSON."""

import json
import subprocess
import sys

import pytest

from raynaud.cli import main

U0_SPEC = '{"p": 2, "r": 1, "object": [{"block": {"kind": "Domino", "t": 0}, "shift": [0, 0]}]}'
E12_SPEC = '{"p": 2, "r": 1, "object": [{"block": {"kind": "Dieudonne", "i": 1, "j": 1}, "shift": [0, 0]}]}'
DAP_SPEC = '{"p": 2, "r": 1, "object": [{"block": {"kind": "DAlphaP"}, "shift": [0, 0]}]}'
W_SPEC = '{"p": 2, "r": 1, "object": [{"block": {"kind": "UnitW"}, "shift": [0, 0]}]}'
P4_SPEC = json.dumps(
    {
        "p": 2,
        "r": 1,
        "object": [
            {"block": {"kind": "UnitW"}, "shift": [-i, -i]} for i in range(5)
        ],
    }
)


@pytest.fixture
def specs(tmp_path):
    paths = {}
    for name, text in [
        ("u0", U0_SPEC),
        ("e12", E12_SPEC),
        ("dap", DAP_SPEC),
        ("w", W_SPEC),
        ("p4", P4_SPEC),
    ]:
        f = tmp_path / f"{name}.json"
        f.write_text(text)
        paths[name] = str(f)
    return paths


def run_cli(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_invariants_u0(specs, capsys):
    code, out, err = run_cli(["invariants", specs["u0"]], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["T"] == {"0,0": 1}
    assert data["hW"]["0,0"] == 1
    assert data["hW"]["1,-1"] == -2


def test_invariants_markdown_grid(specs, capsys):
    code, out, err = run_cli(["invariants", specs["p4"], "--format", "md"], capsys)
    assert code == 0
    assert "j\\i" in out


def test_invariants_malformed_spec_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    code, out, err = run_cli(["invariants", str(bad)], capsys)
    assert code == 2
    missing = tmp_path / "missing.json"
    code, out, err = run_cli(["invariants", str(missing)], capsys)
    assert code == 2


def test_invariants_param_mismatch(specs, capsys):
    code, out, err = run_cli(["invariants", specs["u0"], "--p", "3"], capsys)
    assert code == 2


def test_star_unit(specs, capsys):
    code, out, err = run_cli(
        ["star", specs["w"], specs["u0"], "--precision", "2", "--vdepth", "5"], capsys
    )
    assert code == 0
    data = json.loads(out)
    assert data["gradings"]["0"]["exps"] == [1] * 5
    assert data["gradings"]["1"]["exps"] == [1] * 5


def test_star_closed_form_flag(specs, capsys):
    code, out, err = run_cli(
        ["star", specs["e12"], specs["dap"], "--closed-form"], capsys
    )
    assert code == 1
    assert "closed form inapplicable" in err


def test_star_derived(specs, capsys):
    code, out, err = run_cli(
        ["star", specs["e12"], specs["dap"], "--derived", "--precision", "2", "--vdepth", "6"],
        capsys,
    )
    assert code == 0
    data = json.loads(out)
    assert data["H-1"] == "U_-1"
    assert data["H0"] == "U_1"


def test_star_derived_requires_height_block(specs, capsys):
    code, out, err = run_cli(["star", specs["w"], specs["dap"], "--derived"], capsys)
    assert code == 2


def test_report_default(capsys):
    code, out, err = run_cli(["report", "--precision", "4", "--vdepth", "8"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["hW"]["1,2"] == -2
    assert data["truncation"] == {"m": 4, "n": 8, "p": 2}


def test_report_split_watermarked(capsys):
    code, out, err = run_cli(
        ["report", "--mode", "split", "--precision", "4", "--vdepth", "8"], capsys
    )
    assert code == 0
    data = json.loads(out)
    assert data["watermark"] == "counterfactual"


def test_report_degree_bound_refused(capsys):
    code, out, err = run_cli(["report", "--degree-bound", "5"], capsys)
    assert code == 1
    assert "not certified" in err


def test_report_markdown(capsys):
    code, out, err = run_cli(
        ["report", "--format", "md", "--precision", "4", "--vdepth", "8"], capsys
    )
    assert code == 0
    assert "h_W grid" in out


def test_report_byte_identical(capsys):
    code1, out1, _ = run_cli(["report", "--precision", "4", "--vdepth", "8"], capsys)
    code2, out2, _ = run_cli(["report", "--precision", "4", "--vdepth", "8"], capsys)
    assert out1 == out2


def test_check_p4(specs, capsys):
    code, out, err = run_cli(["check", specs["p4"], "--pure-dimension", "4"], capsys)
    assert code == 0
    data = json.loads(out)
    assert all(v["pass"] for v in data["crew"].values())
    assert data["ekedahl"]["pass"]
    assert data["symmetry"]["pass"]
    assert data["mazur_ogus"]["pass"]
    assert all(v["pass"] for v in data["newton_hodge"].values())


def test_check_non_mazur_ogus_object_still_exits_zero(specs, capsys):
    # torsion breaks Mazur-Ogus, which is data, not a defect
    code, out, err = run_cli(["check", specs["dap"]], capsys)
    assert code == 0
    data = json.loads(out)
    assert not data["mazur_ogus"]["pass"]
    assert all(v["pass"] for v in data["crew"].values())


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "raynaud.cli", "report", "--degree-bound", "9"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
