import csv
import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from multilrsga.cli import main
from multilrsga.config import ConfigError, parse_config
from multilrsga.experiments import bilinear_game, paper_game
from multilrsga.output import REPORT_SCHEMA
from multilrsga.solvers import SolverConfig, run_gradient_descent, run_multilrsga

SMALL = """\
seed: 3
game:
  name: paper3
solvers: [multilrsga, gd, sga]
common:
  max_iter: 300
  residual_tol: 1.0e-6
multilrsga:
  eta: 0.001
  tau: 1.0
gd:
  eta: 0.001
sga:
  eta: 0.001
  tau: 1.0
output:
  dir: unused
"""


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestRun:
    def test_artifacts(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["run", "--config", write(tmp_path, SMALL), "--out", str(out),
                   "--dump-secant", str(tmp_path / "secant.json")])
        assert rc == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["components_gd.svg", "components_multilrsga.svg", "components_sga.svg",
                         "report.json", "residuals.svg", "trace_gd.csv", "trace_multilrsga.csv",
                         "trace_sga.csv"]
        report = json.loads((out / "report.json").read_text())
        jsonschema.validate(report, REPORT_SCHEMA)
        assert report["seed"] == 3
        assert report["solvers"]["gd"]["status"] == "max_iter"
        assert report["solvers"]["multilrsga"]["config"]["seed"] == 3
        rows = list(csv.reader((out / "trace_multilrsga.csv").open()))
        assert rows[0] == ["k", "residual", "norm_x1", "norm_x2", "norm_x3"]
        assert len(rows) == 302
        assert (out / "residuals.svg").read_text().startswith("<svg")
        secant = json.loads((tmp_path / "secant.json").read_text())
        assert [m["shape"] for m in secant["matrices"]] == [[2, 4], [1, 4], [1, 4]]

    def test_csv_matches_library_run(self, tmp_path):
        out = tmp_path / "out"
        main(["run", "--config", write(tmp_path, SMALL), "--out", str(out), "--emit", "csv"])
        bg = paper_game()
        tr = run_multilrsga(bg.game, bg.default_start, SolverConfig(eta=1e-3, tau=1.0, max_iter=300, seed=3))
        res = [float(r["residual"]) for r in csv.DictReader((out / "trace_multilrsga.csv").open())]
        assert np.array_equal(res, tr.residual)
        assert sorted(p.name for p in out.iterdir()) == ["trace_gd.csv", "trace_multilrsga.csv", "trace_sga.csv"]

    def test_diagnostic_columns(self, tmp_path):
        out = tmp_path / "out"
        text = SMALL.replace("max_iter: 300", "max_iter: 20") + "diagnostics: true\n"
        assert main(["run", "--config", write(tmp_path, text), "--out", str(out), "--emit", "csv"]) == 0
        header = (out / "trace_multilrsga.csv").read_text().splitlines()[0]
        assert header == "k,residual,norm_x1,norm_x2,norm_x3,skew_err,sec_err_1,sec_err_2,sec_err_3"

    def test_divergence_exits_zero(self, tmp_path):
        text = """\
game: {name: bilinear}
solvers: [gd]
common: {max_iter: 10000}
gd: {eta: 0.5}
output: {dir: %s, emit: [json]}
""" % (tmp_path / "o")
        assert main(["run", "--config", write(tmp_path, text)]) == 0
        report = json.loads((tmp_path / "o" / "report.json").read_text())
        assert report["solvers"]["gd"]["status"] == "diverged"

    def test_randquad_seed_flows_from_config(self, tmp_path):
        text = "seed: 5\ngame: {name: randquad, params: {h: 3}}\nsolvers: [gd]\ngd: {eta: 0.01}\n" \
               "common: {max_iter: 5}\noutput: {dir: %s, emit: [json]}\n" % (tmp_path / "o")
        assert main(["run", "--config", write(tmp_path, text)]) == 0
        assert json.loads((tmp_path / "o" / "report.json").read_text())["params"]["seed"] == 5


class TestValidation:
    def test_unknown_game(self, tmp_path, capsys):
        text = SMALL.replace("name: paper3", "name: paper4")
        assert main(["run", "--config", write(tmp_path, text)]) == 1
        err = capsys.readouterr().err
        assert "cfg.yaml:3: game.name" in err and "paper4" in err

    def test_bad_eta_position(self):
        text = SMALL.replace("  eta: 0.001\n  tau: 1.0\ngd", "  eta: -1\n  tau: 1.0\ngd")
        with pytest.raises(ConfigError) as exc:
            parse_config(text, "x.yaml")
        assert exc.value.line == 9 and exc.value.field == "multilrsga.eta"

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as exc:
            parse_config(SMALL + "extra: 1\n")
        assert exc.value.field == "extra" and exc.value.line == 18

    def test_syntax_error(self, tmp_path, capsys):
        assert main(["run", "--config", write(tmp_path, "game: [\n  name: x\n")]) == 1
        assert "YAML syntax error" in capsys.readouterr().err

    def test_bad_secant_init(self):
        with pytest.raises(ConfigError, match="secant_init"):
            parse_config(SMALL.replace("  tau: 1.0\ngd", "  tau: 1.0\n  secant_init: exactish\ngd"))

    def test_missing_eta(self):
        with pytest.raises(ConfigError, match="eta"):
            parse_config(SMALL.replace("gd:\n  eta: 0.001\n", "gd: {}\n"))

    def test_exponent_without_dot(self):
        cfg = parse_config(SMALL.replace("1.0e-6", "1e-6"))
        assert cfg.solver_configs["gd"].residual_tol == 1e-6

    def test_missing_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 1

    def test_bad_subcommand(self):
        assert main(["frobnicate"]) == 1


class TestVerify:
    def test_tanh3(self, capsys):
        assert main(["verify", "paper3", "--eta", "0.001", "--tau", "1.0"]) == 0
        out = capsys.readouterr().out
        assert "contractive          true" in out
        assert "step condition       satisfied" in out
        assert "1000/1000 passed" in out

    def test_bilinear(self, capsys):
        assert main(["verify", "bilinear", "--eta", "0.1", "--tau", "1.0", "--trials", "50"]) == 0
        out = capsys.readouterr().out
        assert "contractive          true" in out

    def test_unknown_game(self):
        assert main(["verify", "nope", "--eta", "0.1", "--tau", "1"]) == 1


def read_sweep(path):
    return list(csv.DictReader(Path(path).open()))


class TestSweep:
    def test_single_cell_matches_run(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["sweep", "bilinear", "--eta", "0.1", "--tau", "1.0", "--out", str(out)]) == 0
        (row,) = read_sweep(out)
        bg = bilinear_game()
        tr = run_multilrsga(bg.game, bg.default_start, SolverConfig(eta=0.1, tau=1.0))
        assert row["status"] == tr.status and int(row["iters"]) == tr.iterations

    def test_tau_zero_row_is_gd(self, tmp_path):
        out = tmp_path / "s.csv"
        main(["sweep", "paper3", "--eta", "0.01", "--tau", "0", "--out", str(out)])
        (row,) = read_sweep(out)
        bg = paper_game()
        tr = run_gradient_descent(bg.game, bg.default_start, SolverConfig(eta=0.01))
        assert int(row["iters"]) == tr.iterations

    def test_tanh3_grid_parallel(self, tmp_path):
        out = tmp_path / "s.csv"
        rc = main(["sweep", "paper3", "--eta", "1e-3,5e-3", "--tau", "0.5,1.0", "--jobs", "2",
                   "--out", str(out)])
        assert rc == 0
        rows = read_sweep(out)
        assert len(rows) == 4
        assert all(r["status"] == "converged" for r in rows)
        assert all(0 < float(r["q_hat"]) < 1 for r in rows)

    def test_bad_grid(self):
        assert main(["sweep", "paper3", "--eta", "", "--tau", "1"]) == 1


def test_list_games(capsys):
    assert main(["list-games"]) == 0
    out = capsys.readouterr().out
    for name in ("paper3", "bilinear", "randquad"):
        assert name in out
