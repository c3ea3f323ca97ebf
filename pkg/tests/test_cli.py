import csv
import json
import subprocess
import sys

import pytest

from modns.cli import ConfigError, RunConfig, main, parse_config_text
from modns.grid import load_field


@pytest.fixture
def field_path(tmp_path):
    p = tmp_path / "f.fld"
    assert main(["field", "--kind", "random", "--m", "4", "--K", "2", "--seed", "3",
                 "--decay", "0.5", "--path", str(p)]) == 0
    return p


class TestConfig:
    def test_round_trip(self):
        cfg = RunConfig(d=3, s=-0.5, eps=0.25, figures=True)
        assert RunConfig.from_text(cfg.to_text()) == cfg

    def test_comments_and_blanks(self):
        assert parse_config_text("# header\n\nm = 8  # finer\nK=2\n") == {"m": "8", "K": "2"}

    @pytest.mark.parametrize("text", ["m", "=3", "bogus=1", "m=eight", "figures=maybe"])
    def test_bad(self, text):
        with pytest.raises(ConfigError):
            RunConfig.from_text(text)

    def test_flags_win_over_file(self, tmp_path, field_path, capsys):
        cfgf = tmp_path / "run.cfg"
        cfgf.write_text("s=-2.0\n")
        main(["norm", str(field_path), "--config", str(cfgf), "--s", "0"])
        zero_s = float(capsys.readouterr().out)
        main(["norm", str(field_path), "--config", str(cfgf)])
        file_s = float(capsys.readouterr().out)
        assert file_s < zero_s


class TestCommands:
    def test_zero_norm(self, tmp_path, capsys):
        p = tmp_path / "z.fld"
        assert main(["field", "--kind", "zero", "--path", str(p)]) == 0
        capsys.readouterr()
        assert main(["norm", str(p)]) == 0
        assert float(capsys.readouterr().out) == 0.0

    def test_mode_norm(self, tmp_path, capsys):
        p = tmp_path / "m.fld"
        main(["field", "--kind", "mode", "--xi", "2,1", "--path", str(p)])
        capsys.readouterr()
        main(["norm", str(p), "--s", "-1", "--variant", "sharp"])
        assert float(capsys.readouterr().out) == pytest.approx(0.125)

    def test_decompose(self, field_path, tmp_path):
        out = tmp_path / "b.csv"
        assert main(["decompose", str(field_path), "--path", str(out), "--p", "3"]) == 0
        rows = list(csv.reader(open(out)))
        assert rows[0][0].startswith("# variant=smooth")
        assert rows[1] == ["block", "norm"]
        assert all(float(r[1]) >= 0 for r in rows[2:])

    def test_scale(self, tmp_path, capsys):
        src = tmp_path / "m.fld"
        main(["field", "--kind", "mode", "--xi", "0.5,0.25", "--m", "4", "--K", "2",
              "--path", str(src)])
        out = tmp_path / "s.fld"
        assert main(["scale", str(src), "--lam", "2", "--path", str(out)]) == 0
        g = load_field(out)
        assert abs(g.spectral()[g.grid.index_of((1.0, 0.5))]) == pytest.approx(1.0, rel=1e-6)
        rows = list(csv.DictReader(open(out.with_suffix(".csv"))))
        assert [r["which"] for r in rows] == ["before", "after"]

    def test_evolve(self, tmp_path, capsys):
        out = tmp_path / "run"
        rc = main(["evolve", "--m", "4", "--K", "2", "--nt", "8", "--T", "0.5", "--eps", "0.1",
                   "--out", str(out)])
        assert rc == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["diagnostics"]["converged"]
        assert (out / "trajectory" / "manifest.json").exists()
        assert RunConfig.from_text((out / "config.txt").read_text()).eps == 0.1
        assert "converged=True" in capsys.readouterr().out

    def test_verify(self, tmp_path, capsys):
        out = tmp_path / "rep"
        assert main(["verify", "S9-counterexample", "--out", str(out)]) == 0
        assert capsys.readouterr().out.strip() == "S9-counterexample,pass"
        data = json.loads((out / "report.json").read_text())
        assert data["reports"][0]["verdict"] == "pass"
        assert (out / "summary.md").read_text().startswith("config:")


class TestExitCodes:
    def test_hypothesis_violation(self, tmp_path, capsys):
        assert main(["evolve", "--d", "3", "--r", "4", "--out", str(tmp_path)]) == 2
        assert "requires" in capsys.readouterr().err

    def test_unknown_check(self, tmp_path):
        assert main(["verify", "nope", "--out", str(tmp_path)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["norm", str(tmp_path / "missing.fld")]) == 2

    def test_bad_grid(self, tmp_path):
        assert main(["field", "--m", "2", "--path", str(tmp_path / "x.fld")]) == 2

    def test_bad_window(self, field_path):
        assert main(["decompose", str(field_path), "--variant", "dilated", "--alpha", "0.25"]) == 2

    def test_bad_mdot_exponent(self, field_path):
        assert main(["norm", str(field_path), "--family", "Mdot", "--p", "1"]) == 2

    def test_console_script(self, tmp_path):
        r = subprocess.run([sys.executable, "-m", "modns.cli", "field", "--m", "3",
                            "--path", str(tmp_path / "x.fld")], capture_output=True, text=True)
        assert r.returncode == 2 and "m must be" in r.stderr


class TestFigures:
    def test_verify_figure(self, tmp_path):
        pytest.importorskip("matplotlib")
        out = tmp_path / "rep"
        assert main(["verify", "S9-counterexample", "--figures", "--out", str(out)]) == 0
        assert (out / "summary.png").stat().st_size > 0
        # the CSV contract is unchanged by the flag
        assert (out / "report.csv").exists()

    def test_off_by_default(self, tmp_path):
        out = tmp_path / "rep"
        main(["verify", "S9-counterexample", "--out", str(out)])
        assert not list(out.glob("*.png"))
