import math
import subprocess
import sys

import numpy as np
import pytest

from distreg.cli import apply_override, load_config, main
from distreg.data import write_points_csv
from distreg.errors import ConfigurationError

TINY = ["--set", "x_draws=2", "--set", "J_eval=3", "--set", "x_grid=5",
        "--set", "truth_resolution=256"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_apply_override_nested():
    d = {}
    apply_override(d, "constants.b1=3.5")
    apply_override(d, "n_grid=[64, 128]")
    assert d == {"constants": {"b1": 3.5}, "n_grid": [64, 128]}
    with pytest.raises(ConfigurationError):
        apply_override(d, "novalue")


def test_load_config_file_and_overrides(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("regime: manifold-reg\nD_Y: 2\nconstants:\n  b1: 3.0\n")
    cfg = load_config(p, ["constants.b2=2.0", "replicates=3"])
    assert cfg.regime == "manifold-reg" and cfg.replicates == 3
    assert cfg.constants == {"b1": 3.0, "b2": 2.0}


@pytest.mark.parametrize("regime,extra", [("1", []),
                                          ("manifold-reg", ["--set", "D_Y=2"]),
                                          ("2", ["--set", "D_Y=3"])])
def test_generate_fit_eval(tmp_path, capsys, regime, extra):
    data, model = tmp_path / "d.csv", tmp_path / "m.json"
    common = ["--set", f"regime={regime}"] + extra + TINY
    code, out, _ = run(["generate", "--n", "300", "--seed", "4", "--out", str(data)] + common,
                       capsys)
    assert code == 0 and "300 samples" in out
    code, _, _ = run(["fit", "--data", str(data), "--out", str(model)] + common, capsys)
    assert code == 0 and model.exists()
    code, out, _ = run(["eval", "--model", str(model), "--seed", "1"] + common, capsys)
    err = float(out.strip())
    assert code == 0 and math.isfinite(err) and err >= 0


def test_hausdorff_command(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_points_csv(a, np.array([[0.0]]))
    write_points_csv(b, np.array([[3.0]]))
    code, out, _ = run(["hausdorff", str(a), str(b)], capsys)
    assert code == 0 and float(out) == 6.0


def test_rates_command_writes_files(tmp_path, capsys):
    out_dir = tmp_path / "res"
    code, out, _ = run(["rates", "--out-dir", str(out_dir), "--stem", "r1",
                        "--set", "n_grid=[64, 128, 256]", "--set", "replicates=1"] + TINY,
                       capsys)
    assert code == 0 and "slope" in out
    for name in ("r1.csv", "r1_summary.csv", "r1.dat", "r1.png"):
        assert (out_dir / name).stat().st_size > 0


def test_bad_config_exit_code(capsys):
    code, _, err = run(["generate", "--n", "5", "--out", "x.csv", "--set", "regime=9"], capsys)
    assert code == 2 and "regime" in err
    code, _, err = run(["generate", "--n", "5", "--out", "x.csv", "--set", "nope=1"], capsys)
    assert code == 2 and "unknown" in err


def test_console_module_entry(tmp_path):
    a = tmp_path / "a.csv"
    write_points_csv(a, np.array([[0.0, 1.0]]))
    res = subprocess.run([sys.executable, "-m", "distreg.cli", "hausdorff", str(a), str(a)],
                         capture_output=True, text=True, check=True)
    assert float(res.stdout) == 0.0
