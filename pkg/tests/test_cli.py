import csv
import json
from importlib import resources
from pathlib import Path

import jsonschema
import pytest
from referencing import Registry, Resource

from blstab.cli import (
    EXIT_INVALID,
    EXIT_NUMERIC,
    EXIT_OK,
    ConfigError,
    main,
    parse_grid,
    validate_config,
)
from blstab.datum import frame_120, holder_pair, loomis_whitney_2d
from blstab.integrator import Bump, ClosedGaussian, GaussianPlusBump
from blstab.gaussian import centered

LW = loomis_whitney_2d((1, 1)).to_dict()
FRAME = frame_120().to_dict()


def schema(name):
    return json.loads(resources.files("blstab").joinpath("schemas", name).read_text())


@pytest.fixture(scope="module")
def registry():
    names = ["gaussian_spec.schema.json", "function_spec.schema.json", "datum.schema.json",
             "summary.schema.json", "run_record.schema.json"]
    return Registry().with_resources(
        (n, Resource.from_contents(schema(n))) for n in names)


def validate(instance, name, registry):
    jsonschema.Draft202012Validator(schema(name), registry=registry).validate(instance)


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def run(argv, out):
    code = main(argv + ["--output-dir", str(out)])
    dirs = [p for p in Path(out).iterdir() if p.is_dir()] if Path(out).exists() else []
    return code, dirs


def test_check_prints_verdict(tmp_path, capsys, registry):
    cfg = write(tmp_path, "lw.json", {"datum": LW})
    code, dirs = run(["check", "--config", cfg], tmp_path / "runs")
    assert code == EXIT_OK
    summary = json.loads((dirs[0] / "summary.json").read_text())
    assert summary["result"]["feasibility"]["tag"] == "CertifiedFinite"
    validate(summary, "summary.schema.json", registry)
    validate(json.loads((dirs[0] / "run_record.json").read_text()), "run_record.schema.json", registry)
    assert "CertifiedFinite" in capsys.readouterr().out


def test_constant_with_flags(tmp_path, registry):
    cfg = write(tmp_path, "frame120.json", {"datum": FRAME})
    code, dirs = run(["constant", "--config", cfg, "--restarts", "8", "--seed", "7"], tmp_path / "r")
    assert code == EXIT_OK
    summary = json.loads((dirs[0] / "summary.json").read_text())
    assert abs(summary["result"]["value"] - 1) <= 1e-6
    validate(summary, "summary.schema.json", registry)
    with open(dirs[0] / "trace.csv") as fh:
        header = next(csv.reader(fh))
    assert header[:2] == ["restart", "iteration"] or "value" in header


def test_experiment_opt2(tmp_path):
    cfg = write(tmp_path, "holder31.json", {"datum": holder_pair((3, 1.5)).to_dict()})
    code, dirs = run(["experiment", "opt2", "--config", cfg, "--deltas", "1e-1..1e-3"], tmp_path / "r")
    assert code == EXIT_OK
    summary = json.loads((dirs[0] / "summary.json").read_text())
    fits = summary["result"]["fits"]
    assert abs(fits["deficit"]["slope"] - 3) <= 0.15
    assert (dirs[0] / "opt2.csv").read_text().splitlines()[0].startswith("delta")


def test_datum_only_config_defaults(tmp_path):
    path = write(tmp_path, "min.json", {"d": 2, "factors": FRAME["factors"]})
    cfg = validate_config(path, "constant")
    assert cfg.seed == 0
    assert cfg.optimizer["restarts"] == 8
    assert cfg.quadrature.method == "tensor-grid"


@pytest.mark.parametrize("mutate,field", [
    (lambda c: c["datum"]["factors"][0].update(p=0.5), "p"),
    (lambda c: c["datum"]["factors"][0].update(d_j=2), "d_j"),
    (lambda c: c.update(bogus=1), "bogus"),
    (lambda c: c.update(seed=-1), "seed"),
    (lambda c: c.update(optimizer={"tol": -1}), "optimizer.tol"),
    (lambda c: c.update(quadrature={"points_per_axis": 4}), "quadrature"),
    (lambda c: c.update(datum="missing.json"), "datum"),
])
def test_invalid_configs_name_the_field(tmp_path, capsys, mutate, field):
    cfg = {"datum": json.loads(json.dumps(LW))}
    mutate(cfg)
    code = main(["check", "--config", write(tmp_path, "bad.json", cfg),
                 "--output-dir", str(tmp_path / "r")])
    assert code == EXIT_INVALID
    assert field in capsys.readouterr().err


def test_exponent_range_message(tmp_path):
    bad = json.loads(json.dumps(LW))
    bad["factors"][0]["p"] = 0.5
    with pytest.raises(ConfigError, match=r"\[1"):
        validate_config(write(tmp_path, "b.json", {"datum": bad}), "check")


def test_divergent_datum_exits_numeric(tmp_path):
    d = {"d": 2, "factors": [{"matrix": [[1, 0]], "p": 1}, {"matrix": [[1, 0]], "p": 2},
                             {"matrix": [[0, 1]], "p": 2}]}
    code, _ = run(["constant", "--config", write(tmp_path, "div.json", {"datum": d}),
                   "--restarts", "2"], tmp_path / "r")
    assert code == EXIT_NUMERIC


def test_hash_stable_under_key_order(tmp_path):
    a = {"seed": 3, "datum": FRAME, "optimizer": {"restarts": 2, "tol": 1e-9}}
    b = {"optimizer": {"tol": 1e-9, "restarts": 2}, "datum": dict(reversed(list(FRAME.items()))),
         "seed": 3}
    ha = validate_config(write(tmp_path, "a.json", a), "constant").config_hash()
    hb = validate_config(write(tmp_path, "b.json", b), "constant").config_hash()
    assert ha == hb
    c = dict(a, seed=4)
    assert validate_config(write(tmp_path, "c.json", c), "constant").config_hash() != ha


def test_output_dir_not_in_hash(tmp_path):
    a = validate_config(write(tmp_path, "a.json", {"datum": FRAME, "output_dir": "x"}), "check")
    b = validate_config(write(tmp_path, "b.json", {"datum": FRAME, "output_dir": "y"}), "check")
    assert a.config_hash() == b.config_hash()


def test_relative_paths_resolved(tmp_path):
    (tmp_path / "sub").mkdir()
    write(tmp_path / "sub", "datum.json", LW)
    cfg = validate_config(write(tmp_path / "sub", "cfg.json", {"datum": "datum.json"}), "check")
    assert cfg.datum.m == 2


def test_lockfile_blocks_concurrent_run(tmp_path, capsys):
    path = write(tmp_path, "lw.json", {"datum": LW})
    out = tmp_path / "r"
    h = validate_config(path, "check").config_hash()
    (out / h).mkdir(parents=True)
    (out / h / ".lock").write_text("1")
    assert main(["check", "--config", path, "--output-dir", str(out)]) == EXIT_INVALID
    assert "locked" in capsys.readouterr().err
    (out / h / ".lock").unlink()
    assert main(["check", "--config", path, "--output-dir", str(out)]) == EXIT_OK
    assert not (out / h / ".lock").exists()


def test_deficit_and_distance_pipelines(tmp_path, registry):
    g = centered([[2.0943951023931953]])
    fs = [GaussianPlusBump(g, 0.3, [0.3]).to_dict(), ClosedGaussian(g).to_dict(),
          Bump([0.0], 1.0).to_dict()]
    for f in fs:
        validate(f, "function_spec.schema.json", registry)
    validate(FRAME, "datum.schema.json", registry)
    cfg = write(tmp_path, "def.json", {"datum": FRAME, "functions": fs, "bl_const": 1.0})
    code, dirs = run(["deficit", "--config", cfg], tmp_path / "d")
    assert code == EXIT_OK
    summary = json.loads((dirs[0] / "summary.json").read_text())
    validate(summary, "summary.schema.json", registry)
    assert summary["result"]["deficit"] > 0
    cfg = write(tmp_path, "dist.json", {"functions": fs[:1], "p": 1.5})
    code, dirs = run(["distance", "--config", cfg, "--class", "RealPositive"], tmp_path / "x")
    assert code == EXIT_OK
    rows = list(csv.reader(open(dirs[0] / "distance.csv")))
    assert rows[0] == ["function", "p", "class", "dist", "norm", "relative", "converged"]


def test_fourier_pipeline(tmp_path, registry):
    cfg = write(tmp_path, "f.json", {"datum": FRAME})
    code, dirs = run(["fourier", "--config", cfg], tmp_path / "f")
    assert code == EXIT_OK
    summary = json.loads((dirs[0] / "summary.json").read_text())
    validate(summary, "summary.schema.json", registry)
    assert (dirs[0] / "a_p.csv").exists()


def test_reduce_pipeline(tmp_path):
    d = {"d": 2, "factors": [{"matrix": [[1, 0]], "p": 1.5}, {"matrix": [[0, 2]], "p": 1.5},
                             {"matrix": [[1, 1]], "p": 1.5}]}
    code, dirs = run(["reduce", "--config", write(tmp_path, "r.json", {"datum": d})], tmp_path / "o")
    assert code == EXIT_OK
    summary = json.loads((dirs[0] / "summary.json").read_text())
    res = summary["result"]
    assert abs(res["residuals"]["value_at_identity"] - 1) < 1e-8
    assert res["residuals"]["frame"] < 1e-8


def test_function_spec_unknown_field(tmp_path, capsys):
    fs = [dict(Bump([0.0]).to_dict(), colour="red")]
    cfg = write(tmp_path, "f.json", {"functions": fs, "p": 1.5})
    assert main(["distance", "--config", cfg, "--output-dir", str(tmp_path)]) == EXIT_INVALID
    assert "colour" in capsys.readouterr().err


def test_print_config(tmp_path, capsys):
    path = write(tmp_path, "lw.json", {"datum": LW})
    assert main(["check", "--config", path, "--print-config"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["seed"] == 0 and out["subcommand"] == "check"


def test_parse_grid():
    g = parse_grid("1e-1..1e-3", 3)
    assert g == pytest.approx([1e-1, 1e-2, 1e-3])
    assert parse_grid("0.1, 0.2") == [0.1, 0.2]
    with pytest.raises(ConfigError):
        parse_grid("0..1")


def test_unknown_subcommand_and_experiment():
    assert main(["frobnicate"]) == EXIT_INVALID
    assert main(["experiment", "nonsense"]) == EXIT_INVALID


def test_experiment_name_from_config(tmp_path, capsys):
    cfg = write(tmp_path, "e.json", {"experiment": {"name": "holder", "params": {"starts": 2}}})
    code, dirs = run(["experiment", "--config", cfg], tmp_path / "r")
    assert code == EXIT_OK
    assert json.loads((dirs[0] / "summary.json").read_text())["result"]["experiment"] == "holder"
    assert main(["experiment", "--output-dir", str(tmp_path / "s")]) == EXIT_INVALID
    assert "experiment.name" in capsys.readouterr().err
