import json
import subprocess
import sys

import pytest

from twistdiff.cli import FAIL, PASS, RUNTIME, USAGE, main


def run_cli(*argv, capsys=None):
    code = main(list(argv))
    out = capsys.readouterr() if capsys else None
    return code, out


class TestUsageErrors:
    def test_missing_subcommand_is_usage(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == USAGE

    def test_unknown_subcommand_is_usage(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == USAGE

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"epsilon": 0.05, "bogus": 1}))
        code, out = run_cli("check", "--config", str(cfg), capsys=capsys)
        assert code == USAGE
        assert "bogus" in out.err

    def test_invalid_json(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text("{not json")
        code, _ = run_cli("check", "--config", str(cfg), capsys=capsys)
        assert code == USAGE

    def test_unknown_builtin(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"system": {"builtin": "pendulum"}}))
        code, out = run_cli("check", "--config", str(cfg), capsys=capsys)
        assert code == USAGE
        assert "pendulum" in out.err


class TestRuntimeErrors:
    def test_inadmissible_rotation_number(self, capsys):
        code, out = run_cli("ergodize", "--rstar", "0.5",
                            "--epsilon", "1e-6", capsys=capsys)
        assert code == RUNTIME
        assert "runtime error" in out.err


class TestCheck:
    def test_default_system_passes(self, capsys):
        code, out = run_cli("check", capsys=capsys)
        assert code == PASS
        assert "overall: pass (reduced hypothesis set)" in out.out
        for h in ("H0", "H1", "H2"):
            assert f"{h}: pass" in out.out


class TestSimulate:
    ARGS = ("simulate", "--epsilon", "0.05", "--s", "0.25",
            "--samples", "700", "--seed", "3", "--r0", "0.618")

    def test_summary_lines(self, capsys):
        code, out = run_cli(*self.ARGS, capsys=capsys)
        assert code == PASS
        assert "samples: 700" in out.out
        assert "horizon: 100" in out.out

    def test_rerun_identical(self, capsys):
        _, out1 = run_cli(*self.ARGS, capsys=capsys)
        _, out2 = run_cli(*self.ARGS, capsys=capsys)
        assert out1.out == out2.out

    def test_thread_count_invisible_in_output(self, tmp_path):
        outs = []
        files = []
        for threads in ("1", "8"):
            csv_path = tmp_path / f"t{threads}.csv"
            proc = subprocess.run(
                [sys.executable, "-m", "twistdiff.cli", *self.ARGS,
                 "--threads", threads, "--out", str(csv_path)],
                capture_output=True, text=True)
            assert proc.returncode == PASS
            # the output path appears in the summary; strip that line
            outs.append([l for l in proc.stdout.splitlines()
                         if not l.startswith("wrote ")])
            files.append(csv_path.read_bytes())
        assert outs[0] == outs[1]
        assert files[0] == files[1]


class TestDrift:
    def test_table_to_stdout(self, capsys):
        code, out = run_cli("drift", capsys=capsys)
        assert code == PASS
        lines = out.out.strip().splitlines()
        assert lines[0] == "r,b,sigma2"
        assert len(lines) > 100

    def test_nf_alias(self, capsys):
        _, out1 = run_cli("drift", capsys=capsys)
        _, out2 = run_cli("nf", capsys=capsys)
        assert out1.out == out2.out

    def test_csv_out(self, tmp_path, capsys):
        path = tmp_path / "table.csv"
        code, _ = run_cli("drift", "--out", str(path), capsys=capsys)
        assert code == PASS
        header, first = path.read_text().splitlines()[:2]
        assert header == "r,b,sigma2"
        assert len(first.split(",")) == 3


class TestClassify:
    def test_resonant_strip(self, capsys):
        code, out = run_cli("classify", "--lo", "0.49", "--hi", "0.51",
                            "--epsilon", "1e-6", capsys=capsys)
        assert code == PASS
        assert "Resonant (witness 1/2)" in out.out
        assert "IR union measure" in out.out

    def test_ti_strip(self, capsys):
        code, out = run_cli("classify", "--lo", "0.615", "--hi", "0.62",
                            "--epsilon", "1e-6", "--l", "6", capsys=capsys)
        assert code == PASS
        assert "TI" in out.out


class TestErgodize:
    def test_golden_output(self, capsys):
        code, out = run_cli("ergodize", "--rstar", "0.6180339887498949",
                            "--epsilon", "1e-4", "--l", "6", capsys=capsys)
        assert code == PASS
        assert "N = 21" in out.out
        assert "K estimate" in out.out


class TestVersion:
    def test_version_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0

    def test_entry_point_installed(self):
        proc = subprocess.run(["twistdiff", "--version"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.strip()
