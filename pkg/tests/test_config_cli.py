import csv
import json
import math

import numpy as np
import pytest

from radarnet import cli
from radarnet.config import PRESETS, ConfigError, ExperimentConfig, build_config


def small(tmp_path, *extra):
    return ["--out", str(tmp_path), "--set", "run.n_realizations=2000", "--seed", "3", *extra]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_yaml_round_trip():
    cfg = ExperimentConfig()
    cfg.set("model.kind", "blcp")
    cfg.set("geometry.omega_deg", "22.5")
    back = ExperimentConfig.from_yaml(cfg.to_yaml())
    assert back.to_dict() == cfg.to_dict()
    assert back.geometry.omega_deg == 22.5


@pytest.mark.parametrize("key,value,field", [
    ("geometry.omega_deg", "0", "geometry.omega_deg"),
    ("radio.p", "1.5", "radio.p"),
    ("model.kind", "hex", "model.kind"),
    ("thresholds.beta_sf", "1.0", "thresholds.beta_sf"),
])
def test_validation_names_the_field(key, value, field):
    cfg = ExperimentConfig()
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        cfg.set(key, value)
        cfg.validate()


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig().set("geometry.nope", 1)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"bogus": {}})


def test_all_presets_build_and_validate():
    for name in PRESETS:
        cfg = build_config(preset=name)
        cfg.validate()
        cfg.scenario()


def test_overrides_apply_after_preset(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("geometry:\n  omega_deg: 20\n")
    cfg = build_config(path, "fig7b", ["geometry.omega_deg=12"], seed=4)
    assert cfg.geometry.omega_deg == 12.0
    assert cfg.model.kind == "blcp"
    assert cfg.run.seed == 4


def test_scenario_units():
    cfg = ExperimentConfig()
    sc = cfg.scenario()
    assert sc.half_bw == pytest.approx(math.radians(7.5))
    assert sc.thresholds.beta_dB == 1.0
    assert cfg.scenario(md=True).thresholds.beta_sf == 0.5


def test_bad_config_exit_code(tmp_path, capsys):
    assert cli.main(["analytic", "--out", str(tmp_path), "--set", "radio.p=-1"]) == 2
    assert "radio.p" in capsys.readouterr().err
    assert cli.main(["analytic", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_missing_moments_file_exit_code(tmp_path):
    assert cli.main(["metadist", "--out", str(tmp_path), "--from-moments", str(tmp_path / "none.csv")]) == 2


def test_analytic_command(tmp_path):
    assert cli.main(["analytic", *small(tmp_path), "--set", "run.n_moments=4"]) == 0
    row = read_csv(tmp_path / "analytic.csv")[0]
    assert 0 < float(row["p_D"]) < 1
    assert math.isinf(float(row["delay"]))
    moments = read_csv(tmp_path / "moments.csv")
    assert [int(r["b"]) for r in moments] == [1, 2, 3, 4, -1]
    manifest = json.loads((tmp_path / "analytic.manifest.json").read_text())
    assert set(manifest["outputs"]) == {"analytic.csv", "moments.csv"}
    assert manifest["config"]["geometry"]["omega_deg"] == 15.0


def test_metadist_from_moments(tmp_path):
    path = tmp_path / "m.csv"
    with open(path, "w") as fh:
        fh.write("b,M_b\n" + "".join(f"{b},{1 / (b + 1)!r}\n" for b in range(1, 7)))
    args = ["metadist", "--out", str(tmp_path / "o"), "--from-moments", str(path),
            "--set", "run.n_moments=6", "--set", "metadist.empirical=false", "--set", "metadist.t_points=11"]
    assert cli.main(args) == 0
    rows = read_csv(tmp_path / "o" / "curves.csv")
    F = np.array([float(r["F"]) for r in rows if r["method"] == "cm"])
    # uniform law: P(X >= t) = 1 - t
    assert np.max(np.abs(F - (1 - np.linspace(0, 1, 11)))) < 0.1


def test_unparsable_moments_exit_code(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("b,M_b\n1,abc\n")
    assert cli.main(["metadist", "--out", str(tmp_path / "o"), "--from-moments", str(path)]) == 2


def test_inconsistent_moments_exit_code(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("b,M_b\n1,0.3\n2,0.5\n")
    args = ["metadist", "--out", str(tmp_path / "o"), "--from-moments", str(path),
            "--set", "run.n_moments=2", "--set", "metadist.empirical=false"]
    assert cli.main(args) == 1


def test_simulate_is_reproducible_across_threads(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["simulate", "--out", str(a), "--seed", "7", "--set", "run.n_realizations=3000"]) == 0
    assert cli.main(["simulate", "--out", str(b), "--seed", "7", "--set", "run.n_realizations=3000",
                     "--threads", "4"]) == 0
    for name in ("simulate_summary.csv", "simulate_moments.csv", "simulate_curve.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_dump_realization_points_on_their_lines(tmp_path):
    assert cli.main(["dump-realization", "--out", str(tmp_path), "--seed", "2",
                     "--set", "model.lambda_L=0.02", "--set", "geometry.lam=0.05"]) == 0
    lines = {int(r["line"]): r for r in read_csv(tmp_path / "realization_lines.csv")}
    pts = read_csv(tmp_path / "realization_points.csv")
    assert pts
    for p in pts:
        L = lines[int(p["line"])]
        th, r = float(L["theta"]), float(L["r"])
        x, y = float(p["x"]), float(p["y"])
        assert abs(x * math.cos(th) + y * math.sin(th) - r) < 1e-6
        assert math.hypot(x, y) == pytest.approx(float(p["distance"]), rel=1e-9)


def test_validate_reduced_budget(tmp_path):
    code = cli.main(["validate", *small(tmp_path), "--set", "run.n_moments=6"])
    report = json.loads((tmp_path / "validate.json").read_text())
    assert report["schema"] == "v1"
    assert report["budget"]["reduced"]
    assert code == (0 if report["passed"] else 1)
    names = {c["name"] for c in report["checks"]}
    assert {"moments_consistent", "p_D_vs_mc", "M_1_vs_mc", "l_k_vs_mc"} <= names


def test_optimize_command(tmp_path):
    args = ["optimize", "--out", str(tmp_path), "--set", "optimize.target=transmit_probability",
            "--set", "optimize.points=11", "--set", "model.kind=blcp"]
    assert cli.main(args) == 0
    rows = read_csv(tmp_path / "optimize_transmit_probability.csv")
    assert sum(int(r["is_opt"]) for r in rows) == 1
