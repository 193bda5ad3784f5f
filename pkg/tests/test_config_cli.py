import json

import pytest

from limitlab.cli import main
from limitlab.config import ConfigError, parse_config
from limitlab.geometry import unit_ball_volume
from limitlab.kernels import heat_sup_constant, poisson_sup_constant

HL_CONFIG = """
[experiment]
dimension = 1
seed = 11
budget = 2000
threads = 1

[operator]
family = "radial_maximal"
alpha = 0.0

[operator.kernel]
kind = "indicator"

[measure]
kind = "uniform_ball"
radius = 1.0

[domain]
rho = 0.5
outer_radius = 20.0

[sweep]
t_values = [0.25, 0.04]
lambdas = [1.0]
lambda_range = [0.001, 10.0]

[output]
directory = "out"
basename = "hl"
"""

ATOM_CONFIG = """
[experiment]
dimension = 2
seed = 1
budget = 2000

[operator]
family = "radial_maximal"
alpha = 0.0

[operator.kernel]
kind = "indicator"

[measure]
kind = "atomic"
points = [[0.0, 0.0]]
weights = [1.0]

[domain]
rho = 0.5
outer_radius = 10.0

[sweep]
t_values = [0.1]
lambdas = [1.0]
"""


class TestConfig:
    def test_round_trip_identity(self):
        cfg = parse_config(HL_CONFIG)
        again = parse_config(cfg.to_toml())
        assert again == cfg

    def test_round_trip_with_optional_sections(self):
        text = HL_CONFIG + "\n[dini]\nq = 2.0\ns = 0.5\nt_max = 0.5\n"
        cfg = parse_config(text)
        assert cfg.dini is not None and cfg.dini.q == 2.0
        assert parse_config(cfg.to_toml()) == cfg

    def test_syntax_error_carries_location(self):
        with pytest.raises(ConfigError, match="line"):
            parse_config("[operator\nfamily=3")

    def test_cross_validation(self):
        with pytest.raises(ConfigError, match="alpha"):
            parse_config(HL_CONFIG.replace('alpha = 0.0', 'alpha = 1.5'))
        with pytest.raises(ConfigError, match="rho"):
            parse_config(HL_CONFIG.replace("rho = 0.5", "rho = 30.0"))
        with pytest.raises(ConfigError, match="decreasing"):
            parse_config(HL_CONFIG.replace("[0.25, 0.04]", "[0.04, 0.25]"))
        with pytest.raises(ConfigError, match="kernel"):
            parse_config(HL_CONFIG.replace('kind = "indicator"', 'kind = "sign"'))

    def test_missing_section(self):
        with pytest.raises(ConfigError, match="measure"):
            parse_config("[operator]\nfamily='x'\n[domain]\nrho=1.0\n")

    def test_csv_measure(self, tmp_path):
        csv = tmp_path / "atoms.csv"
        csv.write_text("0.0,0.0,1.0\n1.0,0.5,2.0\n")
        text = ATOM_CONFIG.replace(
            'kind = "atomic"\npoints = [[0.0, 0.0]]\nweights = [1.0]',
            f'kind = "csv"\npath = "{csv}"',
        )
        cfg = parse_config(text)
        mu = cfg.build_measure()
        assert mu.total_mass == 3.0
        assert mu.points.shape == (2, 2)


class TestCLI:
    def test_constants_table(self, capsys):
        assert main(["constants", "--dims", "1,2,3"]) == 0
        out = capsys.readouterr().out.strip().split("\n")
        header = out[0].split(",")
        rows = [line.split(",") for line in out[1:]]
        for row in rows:
            n = int(row[0])
            vals = dict(zip(header[1:], map(float, row[1:])))
            assert vals["unit_ball_volume"] == unit_ball_volume(n)
            assert vals["poisson_sup"] == poisson_sup_constant(n)
            assert vals["heat_sup"] == heat_sup_constant(n)
            omega = unit_ball_volume(n)
            assert vals["counterexample_bound"] == omega * omega * 2.0 ** (1 - n)

    def test_eval_outputs_json(self, tmp_path, capsys):
        cfg = tmp_path / "hl.toml"
        cfg.write_text(HL_CONFIG)
        assert main(["eval", "--config", str(cfg), "--point", "2.0"]) == 0
        payload = json.loads(capsys.readouterr().out)
        # maximal of the uniform measure at x=2 is 2/(2+1); target is 2/2
        assert payload["operator"] == pytest.approx(2.0 / 3.0, rel=1e-10)
        assert payload["target"] == pytest.approx(1.0, rel=1e-12)
        assert payload["difference"] == pytest.approx(-1.0 / 3.0, rel=1e-9)

    def test_eval_singularity_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "atoms.toml"
        cfg.write_text(ATOM_CONFIG)
        code = main(["eval", "--config", str(cfg), "--point", "0.0,0.0"])
        assert code == 2
        err = capsys.readouterr().err
        assert "singularity" in err

    def test_eval_point_mass_maximal(self, tmp_path, capsys):
        cfg = tmp_path / "atoms.toml"
        cfg.write_text(ATOM_CONFIG)
        assert main(["eval", "--config", str(cfg), "--point", "2.0,0.0"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["operator"] == 0.25
        assert payload["target"] == pytest.approx(0.25, rel=1e-12)

    def test_threads_env_fallback(self, monkeypatch):
        from limitlab.cli import resolve_threads

        monkeypatch.setenv("LIMITLAB_THREADS", "3")
        assert resolve_threads(None, 7) == 3  # env wins over config
        assert resolve_threads(2, 7) == 2  # flag wins over env
        monkeypatch.delenv("LIMITLAB_THREADS")
        assert resolve_threads(None, 7) == 7
        assert resolve_threads(0, None) >= 1  # auto

    def test_sweep_writes_outputs_and_is_deterministic(self, tmp_path):
        cfg = tmp_path / "hl.toml"
        cfg.write_text(HL_CONFIG)
        out1 = tmp_path / "run1"
        out2 = tmp_path / "run2"
        assert main(["sweep", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["sweep", "--config", str(cfg), "--out", str(out2)]) == 0
        csv1 = (out1 / "hl.csv").read_bytes()
        csv2 = (out2 / "hl.csv").read_bytes()
        assert csv1 == csv2
        assert (out1 / "hl.json").exists()
        assert (out1 / "hl_type1.png").exists()
        assert (out1 / "hl_type2.png").exists()
        assert (out1 / "hl_type3.png").exists()
        payload = json.loads((out1 / "hl.json").read_text())
        assert payload["family"] == "radial_maximal"
        assert len(payload["records"]) == 2

    def test_sweep_thread_flag_does_not_change_bytes(self, tmp_path):
        cfg = tmp_path / "hl.toml"
        cfg.write_text(HL_CONFIG)
        out1 = tmp_path / "t1"
        out2 = tmp_path / "t4"
        assert main(["sweep", "--config", str(cfg), "--out", str(out1), "--no-figures"]) == 0
        assert main(["sweep", "--config", str(cfg), "--out", str(out2), "--no-figures",
                     "--threads", "4"]) == 0
        assert (out1 / "hl.csv").read_bytes() == (out2 / "hl.csv").read_bytes()

    def test_sweep_reseed_statistically_consistent(self, tmp_path):
        cfg = tmp_path / "hl.toml"
        cfg.write_text(HL_CONFIG)
        out1 = tmp_path / "s1"
        out2 = tmp_path / "s2"
        assert main(["sweep", "--config", str(cfg), "--out", str(out1), "--no-figures"]) == 0
        assert main(["sweep", "--config", str(cfg), "--out", str(out2), "--no-figures",
                     "--seed", "99"]) == 0
        rows1 = (out1 / "hl.csv").read_text().strip().split("\n")[1:]
        rows2 = (out2 / "hl.csv").read_text().strip().split("\n")[1:]
        for r1, r2 in zip(rows1, rows2):
            v1 = dict(zip("t,rho,lambda,type1_norm,type1_se,type2_measure,type2_se".split(","),
                          r1.split(",")))
            v2 = dict(zip("t,rho,lambda,type1_norm,type1_se,type2_measure,type2_se".split(","),
                          r2.split(",")))
            gap = abs(float(v1["type2_measure"]) - float(v2["type2_measure"]))
            spread = 3 * (float(v1["type2_se"]) + float(v2["type2_se"]))
            assert gap <= spread

    def test_counterexample_command(self, capsys):
        assert main(["counterexample", "-n", "2", "--t", "0.1"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["product_exact"] is True

    def test_hierarchy_command(self, capsys, tmp_path):
        out = tmp_path / "h"
        assert main(["hierarchy", "--p", "1", "--budget", "2000", "--out", str(out)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["weak_norm_floor"] >= 1.9
        assert (out / "hierarchy.csv").exists()
        assert (out / "hierarchy_hierarchy.png").exists()

    def test_dini_command(self, tmp_path, capsys):
        cfg = tmp_path / "dini.toml"
        cfg.write_text(
            HL_CONFIG.replace('family = "radial_maximal"', 'family = "frac_integral"')
            .replace('kind = "indicator"', 'kind = "sign"')
            + "\n[dini]\nq = 1.0\ns = 0.0\nblocks = 6\n"
        )
        assert main(["dini", "--config", str(cfg)]) == 0
        out = capsys.readouterr().out
        assert "integral_estimate" in out
        assert "divergence_suspected" in out

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.toml"
        cfg.write_text("[operator\n")
        assert main(["sweep", "--config", str(cfg)]) == 2
        assert "config error" in capsys.readouterr().err
