import json

import numpy as np
import pytest

from sprintsim import __version__
from sprintsim.cli import main
from sprintsim.config import ConfigError, RunConfig, parse_config, parse_text
from sprintsim.outcomes import OutcomeTable
from sprintsim.params import SystemParams


class TestConfig:
    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.ini"
        path.write_text("")
        cfg = parse_config(path)
        assert cfg.params == SystemParams()
        assert cfg.scheme == {"name": "rb87", "initial_ground": "G1"}
        assert cfg.ensemble["n"] == 10_000 and cfg.pulse["fwhm"] == 53.0

    def test_overrides_only_given_keys(self):
        cfg = parse_text("kappa_ex = 30\ndelta_C = -7\n")
        assert cfg.params == SystemParams(kappa_ex=30.0, delta_C=-7.0)
        cfg = parse_text("kappa_ex = 25  # fiber gap\n[ensemble]\nseed = 42\n[pulse]\nkind = exponential\n")
        assert cfg.params.kappa_ex == 25 and cfg.ensemble["seed"] == 42
        assert cfg.schedule().is_constant

    def test_negative_gamma_names_key(self):
        with pytest.raises(ConfigError, match="gamma"):
            parse_text("gamma = -3\n")

    def test_all_problems_collected(self):
        with pytest.raises(ConfigError) as err:
            parse_text("gamma = -3\nwarp = 9\n[ensemble]\nn = 0\n[bogus]\nx = 1\n[pulse]\nfwhm = abc\n")
        text = " | ".join(err.value.problems)
        for needle in ("gamma", "warp", "ensemble.n", "[bogus]", "pulse.fwhm"):
            assert needle in text

    def test_syntax_error(self):
        with pytest.raises(ConfigError, match="parse error"):
            parse_text("[system\nkappa_ex = 3\n")

    def test_echo_reproduces_run(self):
        cfg = parse_text("kappa_ex = 31.5\ng_phase = 0.1\n[ensemble]\nseed = 7\n[scheme]\ninitial_ground = G2\n")
        echo = cfg.echo()
        assert echo.startswith(f"# sprintsim {__version__}")
        again = parse_text(echo)
        assert again.to_dict() == cfg.to_dict()

    def test_file_pulse_requires_path(self):
        with pytest.raises(ConfigError, match="pulse.file"):
            parse_text("[pulse]\nkind = file\n")

    def test_file_pulse(self, tmp_path):
        t = np.linspace(0, 100, 501)
        amp = np.sqrt(0.9 / 100) * np.ones_like(t)
        env = tmp_path / "flat.txt"
        np.savetxt(env, np.column_stack([t, amp]))
        cfg = parse_text(f"[pulse]\nkind = file\nfile = {env}\n")
        s = cfg.schedule()
        assert s.t_end == 100.0
        assert s.residual_norm() == pytest.approx(0.1, rel=1e-3)

    def test_ensemble_config(self):
        cfg = RunConfig()
        ec = cfg.ensemble_config(n=5, initial_ground="G2")
        assert ec.n == 5 and ec.initial_ground == "G2" and ec.distribution.g_min == 7.0


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCli:
    def test_critical(self, capsys):
        code, out, err = _run(capsys, "analytic", "critical", "--g", "16", "--ki", "6", "--gamma", "3")
        assert code == 0
        assert "kappa_ex = 32.56 MHz, R = 0.474" in err
        doc = json.loads(out)
        assert doc["kappa_ex"] == pytest.approx(32.5576, abs=1e-4)

    @pytest.mark.parametrize("which", ["three-level", "four-level", "optimal"])
    def test_analytic(self, capsys, which):
        code, out, _ = _run(capsys, "analytic", which)
        assert code == 0
        doc = json.loads(out)
        assert doc

    def test_simulate_trace(self, capsys, tmp_path):
        trace = tmp_path / "out.tsv"
        code, out, err = _run(capsys, "simulate", "--trace", str(trace), "--stride", "2")
        assert code == 0
        assert "[system]" in err
        doc = json.loads(out)
        assert abs(doc["conservation_error"]) < 1e-8
        data = np.loadtxt(trace, skiprows=1)
        header = trace.read_text().splitlines()[0].split("\t")
        cum = data[:, [i for i, c in enumerate(header) if c.startswith("cum_")]]
        assert np.all(np.diff(cum, axis=0) >= -1e-15)
        assert np.all(cum.sum(axis=1) <= 1 + 1e-8)

    def test_ensemble_outputs(self, capsys, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[pulse]\nfwhm = 20\n")
        prefix = tmp_path / "table"
        code, out, err = _run(capsys, "ensemble", "--config", str(cfg), "--n", "8", "--seed", "42",
                              "--initial", "G1", "--out", str(prefix))
        assert code == 0
        assert out.splitlines()[0] == ",R,T,L,Total"
        assert out == (tmp_path / "table.csv").read_text()
        table = OutcomeTable.from_json((tmp_path / "table.json").read_text())
        assert table.n == 8 and table.metadata["seed"] == 42
        assert "seed = 42" in err

    def test_sweep(self, capsys, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[pulse]\nfwhm = 20\n")
        code, out, _ = _run(capsys, "sweep", "--config", str(cfg), "--n", "2", "--axis", "kappa_ex",
                            "--grid", "20:40:3")
        assert code == 0
        assert [r["value"] for r in json.loads(out)] == [20.0, 30.0, 40.0]

    def test_optimize_analytic(self, capsys, tmp_path):
        cfg = tmp_path / "ideal.ini"
        cfg.write_text("h = 0\nr_sigma = 0\nr_pi = 0\n")
        code, out, _ = _run(capsys, "optimize", "--config", str(cfg), "--scheme", "four_level", "--analytic")
        assert code == 0
        assert json.loads(out)["T"] < 1e-8

    def test_errors_are_machine_readable(self, capsys, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("gamma = -1\n")
        code, _, err = _run(capsys, "simulate", "--config", str(bad))
        assert code == 1
        doc = json.loads(err.strip().splitlines()[-1])
        assert doc["error"] == "ConfigError" and any("gamma" in p for p in doc["problems"])

    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code != 0
