import json
import os

import numpy as np
import pytest
import scipy.io

from wgiface.cli import build_parser, config_from_args, main, parse_levels
from wgiface.study import ConfigError, StudyConfig, preset, run_study

SMALL = ["--problem", "test1", "--k", "1", "--levels", "1..2", "--lambda", "1", "--mesh", "uniform_square"]


@pytest.mark.parametrize("text,expected", [("3..5", (3, 4, 5)), ("2,4", (2, 4)), ("7", (7,)), ("", ())])
def test_parse_levels(text, expected):
    assert parse_levels(text) == expected


def test_parse_levels_rejects_garbage():
    with pytest.raises(Exception):
        parse_levels("a..b")


def test_preset_overrides():
    args = build_parser().parse_args(["--preset", "table2", "--levels", "1..2", "--lambda", "1,1000"])
    cfg = config_from_args(args)
    assert (cfg.k, cfg.r_rule, cfg.levels, cfg.lambdas) == (2, "k+2", (1, 2), (1.0, 1000.0))


def test_presets_cover_all_tables():
    for n in range(1, 16):
        cfg = preset(f"table{n}").validate()
        assert cfg.lambdas == (1e-3, 1.0, 1e3)
    with pytest.raises(ConfigError):
        preset("table16")


@pytest.mark.parametrize(
    "bad",
    [dict(levels=()), dict(levels=(3, 2)), dict(k=1, q=2), dict(mesh="hex"), dict(r_rule="k+9"), dict(lambdas=(0.0,))],
)
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        StudyConfig(**bad).validate()


def test_empty_levels_exit_code(capsys):
    assert main(SMALL[:4] + ["--levels", ""]) != 0
    assert "level list is empty" in capsys.readouterr().err


def test_missing_problem_file_exit_code(tmp_path):
    assert main(["--problem-file", str(tmp_path / "nope.toml"), "--levels", "1"]) == 2


def test_small_run_is_deterministic(tmp_path, capsys):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(SMALL + ["--out", str(out)]) == 0
        csvs = sorted(os.listdir(out))
        assert any(f.endswith(".csv") for f in csvs) and any(f.endswith(".md") for f in csvs)
        outs.append({f: (out / f).read_bytes() for f in csvs})
    assert outs[0] == outs[1]
    assert "| level |" in capsys.readouterr().out


def test_exports(tmp_path):
    out = tmp_path / "x"
    assert main(SMALL + ["--out", str(out), "--export-mesh", "--export-matrix"]) == 0
    files = os.listdir(out)
    meshes = [f for f in files if f.endswith("_mesh.json")]
    mats = [f for f in files if f.endswith("_matrix.mtx")]
    assert len(meshes) == 2 and len(mats) == 2
    json.loads((out / meshes[0]).read_text())
    A = scipy.io.mmread(out / mats[0])
    assert abs(A - A.T).max() < 1e-12


def test_custom_problem_file(tmp_path):
    path = tmp_path / "p.toml"
    path.write_text(
        'interface = "line_x0"\ng = "x + y"\nu = "x + y"\n'
        '[coefficients]\n1 = 1.0\n2 = 1.0\n[f]\n1 = "0"\n2 = "0"\n'
    )
    args = build_parser().parse_args(["--problem-file", str(path), "--levels", "1,2", "--lambda", "1"])
    res = run_study(config_from_args(args))
    assert np.all(res[0].series("e_l2") < 1e-10)
