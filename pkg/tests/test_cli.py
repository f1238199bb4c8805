import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from bellstreams.cli import main

FILES_COMPARED = ("*.stream", "*.csv", "run.json", "identity.json", "match.json", "report.json", "summary.json")


def artifacts(d: Path) -> dict:
    out = {}
    for pat in FILES_COMPARED:
        for f in sorted(d.glob(pat)):
            out[f.name] = f.read_bytes()
    return out


def simulate(tmp, name, tl, tr, seed, left="a", right="b", n=2000):
    out = tmp / name
    code = main(["simulate", "--n", str(n), "--theta-left", str(tl), "--theta-right", str(tr), "--deg",
                 "--label-left", left, "--label-right", right, "--seed", str(seed), "--out", str(out)])
    assert code == 0
    return out


def write_stream_file(path, values, label, angle=0.0):
    lines = [f"# label={label}", f"# angle_rad={angle!r}", *("+1" if v > 0 else "-1" for v in values)]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


class TestSimulate:
    def test_outputs(self, tmp_path):
        d = simulate(tmp_path, "r", 0, 60, 7)
        assert {p.name for p in d.iterdir()} == {"a.stream", "b.stream", "run.json", "manifest.json"}
        m = json.loads((d / "manifest.json").read_text())
        assert m["command"] == "simulate" and m["seeds"] == [7]
        assert "wall_clock_seconds" in m and m["artifact_version"]

    def test_hex_seed_equals_decimal(self, tmp_path):
        a = simulate(tmp_path, "x", 0, 60, "0xff")
        b = simulate(tmp_path, "y", 0, 60, 255)
        assert (a / "a.stream").read_bytes() == (b / "a.stream").read_bytes()

    @pytest.mark.parametrize("bad", [
        ["simulate", "--n", "0", "--theta-left", "0", "--theta-right", "1"],
        ["simulate", "--n", "5", "--theta-left", "x", "--theta-right", "1"],
        ["simulate", "--n", "5", "--theta-left", "0", "--theta-right", "1", "--seed", "-3"],
        ["simulate", "--n", "5", "--theta-left", "0"],
        ["scan", "--resolution", "1"],
        ["scan", "--resolution", "7"],
        ["frobnicate"],
    ])
    def test_usage_errors(self, tmp_path, bad):
        assert main([*bad, "--out", str(tmp_path / "o")]) == 2


class TestMatch:
    def test_triple(self, tmp_path):
        ab = simulate(tmp_path, "ab", 0, 60, 1)
        abp = simulate(tmp_path, "abp", 0, 120, 2, right="b'")
        out = tmp_path / "m"
        assert main(["match", str(ab), str(abp), "--out", str(out)]) == 0
        assert json.loads((out / "identity.json").read_text())["holds"] is True
        assert (out / "bp.stream").exists()
        assert main(["verify", str(out / "a.stream"), str(out / "b.stream"), str(out / "bp.stream")]) == 0

    def test_quadruple_with_direct_run(self, tmp_path):
        runs = [simulate(tmp_path, "r1", 0, 45, 1), simulate(tmp_path, "r2", 0, 315, 2, right="b'"),
                simulate(tmp_path, "r3", 90, 45, 3, left="a'"),
                simulate(tmp_path, "r4", 90, 315, 4, left="a'", right="b'")]
        out = tmp_path / "q"
        assert main(["match", *map(str, runs), "--out", str(out)]) == 0
        rep = json.loads((out / "report.json").read_text())
        assert "overdetermination" in rep and rep["inequality"]["chsh"]["satisfied"] is True

    def test_angle_mismatch_is_data_error(self, tmp_path):
        ab = simulate(tmp_path, "ab", 0, 60, 1)
        abp = simulate(tmp_path, "abp", 10, 120, 2, right="b'")
        assert main(["match", str(ab), str(abp), "--out", str(tmp_path / "m")]) == 3

    def test_missing_dir(self, tmp_path):
        assert main(["match", str(tmp_path / "nope"), str(tmp_path / "nope2"), "--out", str(tmp_path / "m")]) == 3


class TestVerify:
    def test_parse_error_names_line(self, tmp_path, capsys):
        f1 = write_stream_file(tmp_path / "a.stream", [1, -1, 1], "a")
        f2 = write_stream_file(tmp_path / "b.stream", [1, -1, 1], "b")
        bad = tmp_path / "bp.stream"
        bad.write_text("# label=b'\n# angle_rad=0.0\n+1\n0\n-1\n")
        assert main(["verify", f1, f2, str(bad)]) == 3
        assert f"{bad}:4" in capsys.readouterr().err

    def test_length_mismatch(self, tmp_path):
        f1 = write_stream_file(tmp_path / "a.stream", [1, -1, 1], "a")
        f2 = write_stream_file(tmp_path / "b.stream", [1, -1, 1], "b")
        f3 = write_stream_file(tmp_path / "bp.stream", [1, -1], "b'")
        assert main(["verify", f1, f2, f3]) == 3

    def test_wrong_count(self, tmp_path):
        f1 = write_stream_file(tmp_path / "a.stream", [1], "a")
        assert main(["verify", f1, f1]) == 2

    def test_fuzz_random_files(self, tmp_path, capsys):
        rs = np.random.default_rng(0)
        for i in range(40):
            n = int(rs.integers(1, 300))
            labels = ("a", "b", "b'") if i % 2 else ("a", "a'", "b", "b'")
            files = [write_stream_file(tmp_path / f"{i}_{k}.stream", rs.choice([-1, 1], n), lab)
                     for k, lab in enumerate(labels)]
            capsys.readouterr()
            assert main(["verify", *files]) == 0
            rep = json.loads(capsys.readouterr().out)
            assert rep["identity"]["holds"] is True and rep["n"] == n

    def test_out_file(self, tmp_path, capsys):
        files = [write_stream_file(tmp_path / f"{lab}.s", [1, 1, -1], lab) for lab in ("a", "b", "b'")]
        out = tmp_path / "v.json"
        assert main(["verify", *files, "--out", str(out)]) == 0
        assert json.loads(out.read_text()) == json.loads(capsys.readouterr().out)


class TestScanAndCascade:
    def test_scan(self, tmp_path):
        assert main(["scan", "--mode", "triple", "--resolution", "45", "--out", str(tmp_path / "s")]) == 0
        assert (tmp_path / "s" / "scan_triple.csv").exists()
        summary = json.loads((tmp_path / "s" / "summary.json").read_text())
        assert summary["min_slack"] < 0

    def test_cascade(self, tmp_path):
        out = tmp_path / "c"
        assert main(["cascade", "--n", "5000", "--theta-a", "0", "--theta-ap", "90", "--theta-b", "45",
                     "--theta-bp", "315", "--deg", "--seed", "3", "--out", str(out)]) == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["spots_roundtrip"] is True and rep["chsh_empirical"]["lhs"] <= 2
        assert (out / "spots.csv").read_text().splitlines()[0] == "pair_index,left_spot,right_spot"


class TestRerun:
    def test_simulate_rerun_byte_identical(self, tmp_path):
        d = simulate(tmp_path, "r", 0, 60, 5)
        assert main(["rerun", str(d / "manifest.json"), "--out", str(tmp_path / "r2")]) == 0
        assert artifacts(d) == artifacts(tmp_path / "r2")

    def test_missing_manifest(self, tmp_path):
        assert main(["rerun", str(tmp_path / "none.json"), "--out", str(tmp_path / "x")]) == 3


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "bellstreams.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
