import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from radnf import cli
from radnf.errors import InternalError

DATA = Path(__file__).resolve().parent.parent / "data"


def run(argv, capsys):
    code = cli.run_command([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestExamples:
    def test_check_radial_z(self, capsys):
        code, out, _ = run(["check-radial", DATA / "z.sym"], capsys)
        assert code == 0 and "in_class: true, lambda: 1" in out

    def test_check_radial_theta(self, capsys):
        code, out, _ = run(["check-radial", DATA / "theta.sym"], capsys)
        assert code == 2 and "∂_θ p|_Λ = 0" in out

    def test_verify_hamilton(self, capsys):
        code, out, _ = run(["verify-hamilton", "--n", 2, "--degree", 3, "--trials", 20, "--seed", 7], capsys)
        assert code == 0 and "oracle matches: 20/20" in out

    def test_normalize_full_record(self, tmp_path, capsys):
        out_file = tmp_path / "cert.json"
        code, out, _ = run(["normalize-full", DATA / "full.sym", "--stages", 2, "--out", out_file], capsys)
        assert code == 0
        rec = json.loads(out_file.read_text())
        assert rec["command"] == "normalize-full" and rec["exit_code"] == 0
        assert all(r["ok"] for r in rec["result"]["certificate"]["replay"])
        assert (tmp_path / "cert.txt").read_text().startswith("caps:")

    def test_env_out_dir(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("RADNF_OUT_DIR", str(tmp_path))
        assert run(["normalize-principal", DATA / "principal3.sym"], capsys)[0] == 0
        assert json.loads((tmp_path / "normalize-principal.json").read_text())["result"]["certificate"]

    @pytest.mark.parametrize("argv", [
        ["flow-linearize", DATA / "nelson1d.flow"],
        ["transport-solve", DATA / "transport1d.flow"],
        ["limit-probe", DATA / "shear.flow"],
    ])
    def test_flow_commands(self, argv, capsys):
        assert run(argv, capsys)[0] == 0


class TestExitCodes:
    def test_usage(self, capsys):
        assert run([], capsys)[0] == 1
        assert run(["no-such-command"], capsys)[0] == 1
        assert run(["normalize-full", DATA / "full.sym", "--stages", "x"], capsys)[0] == 1
        assert run(["verify-hamilton", "--trials", "0"], capsys)[0] == 1

    def test_help_is_success(self, capsys):
        assert run(["--help"], capsys)[0] == 0

    @pytest.mark.parametrize("name,text", [
        ("bad_token.sym", "n=2, order=1\n[1]: 1 q\n"),
        ("dim.sym", "n=2, order=1\n[1]: theta2\n"),
        ("caps.sym", "n=2, order=1, N=2\n[1]: z^2\n"),
        ("notradial.sym", "n=2, order=1\n[1]: y1 z\n"),
        ("header.sym", "order=1\n[1]: z\n"),
    ])
    def test_precondition_symbols(self, tmp_path, capsys, name, text):
        code, _, err = run(["normalize-full", write(tmp_path, name, text)], capsys)
        assert code == 2 and "precondition violated" in err

    def test_missing_file(self, tmp_path, capsys):
        assert run(["check-radial", tmp_path / "absent.sym"], capsys)[0] == 2

    def test_caps_too_small(self, capsys):
        assert run(["normalize-full", DATA / "full.sym", "--stages", 6], capsys)[0] == 2

    def test_bad_flow(self, tmp_path, capsys):
        assert run(["flow-linearize", write(tmp_path, "bad.flow", "dim = 1\nA = 1 2\n")], capsys)[0] == 2
        assert run(["flow-linearize", write(tmp_path, "exp.flow", "dim = 1\nA = 1\n")], capsys)[0] == 2

    def test_numerical(self, capsys):
        assert run(["flow-linearize", DATA / "nelson1d.flow", "--T", 4], capsys)[0] == 3

    def test_internal(self, capsys, monkeypatch):
        def boom(args):
            raise InternalError("broken invariant")
        monkeypatch.setitem(cli.COMMANDS, "check-radial", boom)
        code, _, err = run(["check-radial", DATA / "z.sym"], capsys)
        assert code == 4 and "internal error" in err

    def test_negative_control_flagged(self, capsys):
        code, out, _ = run(["limit-probe", DATA / "negative_control.flow"], capsys)
        assert code == 0 and "NOT stable" in out


def test_determinism(tmp_path):
    outs = []
    for i, seed in enumerate(("1", "2")):
        d = tmp_path / f"run{i}"
        env = dict(os.environ, PYTHONHASHSEED=seed)
        subprocess.run([sys.executable, "-m", "radnf", "normalize-full", str(DATA / "full.sym"), "--out", str(d)],
                       check=True, env=env, capture_output=True)
        outs.append((d / "normalize-full.json").read_bytes())
    assert outs[0] == outs[1]
