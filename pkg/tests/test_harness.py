import csv
import math

import numpy as np
import pytest

from distreg.errors import ConfigurationError
from distreg.harness import (RATE_COLUMNS, SUMMARY_COLUMNS, ExperimentConfig, RateTable,
                             fit_loglog_slope, generate, is_strictly_decreasing,
                             read_rate_csv, replicate_seed, run_rate_experiment,
                             theoretical_exponent, write_outputs)


def tiny(regime="1", **kw):
    base = dict(regime=regime, n_grid=[64, 128, 256], replicates=2, x_draws=3, J_eval=3,
                x_grid=5, truth_resolution=256)
    if regime in ("2", "3", "manifold-reg"):
        base["D_Y"] = 2
    base.update(kw)
    return ExperimentConfig(**base)


# theory and slopes -------------------------------------------------------------------

def test_theoretical_exponent_examples():
    assert theoretical_exponent(ExperimentConfig(regime="1")) == pytest.approx(1 / 3)
    assert theoretical_exponent(ExperimentConfig(regime="manifold-reg")) == pytest.approx(1.0)
    r2 = ExperimentConfig(regime="2", gamma=[0.1], D_Y=3)
    assert theoretical_exponent(r2) == pytest.approx(0.2)


def test_slope_exact_power_laws():
    ns = [2 ** k for k in range(9, 14)]
    assert fit_loglog_slope([(n, 1.0 / n) for n in ns])[0] == pytest.approx(-1.0, abs=1e-12)
    assert fit_loglog_slope([(n, 0.3) for n in ns])[0] == pytest.approx(0.0, abs=1e-12)
    s = fit_loglog_slope([(n, 2.5 * n ** (-1 / 3)) for n in ns for _ in range(3)])[0]
    assert abs(s + 1 / 3) <= 1e-10


def test_slope_noisy_power_law():
    rng = np.random.default_rng(0)
    ns = [2 ** k for k in range(9, 14)]
    for _ in range(50):
        pts = [(n, n ** -0.5 * (1 + rng.uniform(-0.1, 0.1))) for n in ns]
        assert abs(fit_loglog_slope(pts)[0] + 0.5) <= 0.1


def test_slope_drops_bad_rows_and_flags_short_grids():
    with pytest.warns(UserWarning):
        s, _ = fit_loglog_slope([(10, 0.1), (20, 0.05), (40, 0.025), (80, 0.0),
                                 (80, float("nan"))])
    assert s == pytest.approx(-1.0)
    assert math.isnan(fit_loglog_slope([(10, 0.1), (20, 0.05)])[0])


def test_is_strictly_decreasing():
    assert is_strictly_decreasing([3, 2, 1])
    assert not is_strictly_decreasing([3, 3, 1])
    assert not is_strictly_decreasing([3, float("nan")])


# config ---------------------------------------------------------------------------------

@pytest.mark.parametrize("bad", [dict(regime="4"), dict(n_grid=[100, 50]), dict(n_grid=[]),
                                 dict(replicates=0), dict(gamma=[-1.0])])
def test_config_validation(bad):
    with pytest.raises(ConfigurationError):
        ExperimentConfig(**bad)


def test_config_dict_roundtrip():
    cfg = tiny(constants={"b1": 3.0})
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"regime": "1", "bogus": 1})


def test_generators_per_regime():
    for regime, D_Y in (("1", 1), ("2", 3), ("3", 3), ("manifold-reg", 2)):
        cfg = tiny(regime, D_Y=D_Y)
        d = generate(cfg, 20, 1)
        assert d.n == 20 and d.D_Y == D_Y


def test_replicate_seeds_distinct():
    cfg = tiny()
    seeds = {replicate_seed(cfg, n, r) for n in cfg.n_grid for r in range(5)}
    assert len(seeds) == 15


# sweeps -----------------------------------------------------------------------------------

def test_single_point_grid():
    table = run_rate_experiment(tiny(n_grid=[64], replicates=1))
    assert len(table.rows) == 1
    assert not table.slope_defined
    assert np.isfinite(table.rows[0]["error"])


def test_determinism():
    a = run_rate_experiment(tiny())
    b = run_rate_experiment(tiny())
    assert [r["error"] for r in a.rows] == [r["error"] for r in b.rows]
    assert [r["seed"] for r in a.rows] == [r["seed"] for r in b.rows]
    assert a.slope == b.slope
    assert a.theory_exponent == pytest.approx(1 / 3)


def test_resumable(tmp_path):
    cfg = tiny()
    path = tmp_path / "rates.csv"
    first = run_rate_experiment(tiny(n_grid=[64, 128]), path)
    seen = []
    full = run_rate_experiment(cfg, path, progress=seen.append)
    assert [r["n"] for r in seen] == [256, 256]
    assert len(full.rows) == 6
    assert len(read_rate_csv(path)) == 6
    for r in first.rows:
        match = [s for s in full.rows if (s["n"], s["replicate"]) == (r["n"], r["replicate"])]
        assert match[0]["error"] == r["error"]
    again = []
    run_rate_experiment(cfg, path, progress=again.append)
    assert again == []


@pytest.mark.parametrize("regime", ["2", "3", "manifold-reg"])
def test_other_regimes_run(regime):
    cfg = tiny(regime, n_grid=[200], replicates=1, D_Y=3 if regime != "manifold-reg" else 2,
               x_draws=1, constants={"max_anchors": 200})
    row = run_rate_experiment(cfg).rows[0]
    assert np.isfinite(row["error"]) and row["error"] >= 0


def test_failures_recorded_as_nan():
    cfg = tiny("manifold-reg", n_grid=[5], replicates=1)
    with pytest.MonkeyPatch.context() as mp:
        import distreg.harness as H
        mp.setattr(H, "fit_model", lambda cfg, data: 1 / 0)
        row = run_rate_experiment(cfg).rows[0]
    assert math.isnan(row["error"])


def test_write_outputs(tmp_path):
    rows = [{"n": n, "replicate": r, "seed": 1, "error": n ** -0.4 * (1 + 0.01 * r),
             "seconds": 0.1} for n in (100, 200, 400) for r in range(3)]
    paths = write_outputs(RateTable(rows, 1 / 3), tmp_path, "demo")
    with open(paths["csv"]) as fh:
        assert next(csv.reader(fh)) == RATE_COLUMNS
    with open(paths["summary"]) as fh:
        body = list(csv.reader(fh))
    assert body[0] == SUMMARY_COLUMNS and len(body) == 4
    assert float(body[1][2]) == pytest.approx(-0.4, abs=0.01)
    dat = open(paths["dat"]).read().splitlines()
    assert dat[0].startswith("# slope") and len(dat) == 5
    assert open(paths["png"], "rb").read(8) == b"\x89PNG\r\n\x1a\n"
