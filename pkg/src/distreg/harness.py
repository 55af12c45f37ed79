"""Empirical convergence-rate experiments.

An experiment draws data from a generator with a known conditional law for
each sample size and replicate, fits the configured estimator, scores it
against the truth and fits a log-log slope to the per-size median errors.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import time
import warnings
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np
from scipy import stats

from . import latent, manifold_reg, regime1
from .errors import ConfigurationError
from .ipm import besov_distance
from .rng import make_rng
from .synthetic import (BumpDensityGenerator, CircleFamily, ManifoldFamilyGenerator,
                        sample_manifold_family, sample_regime1)
from .wavelet import empirical_coefficients

log = logging.getLogger(__name__)

REGIMES = ("1", "2", "3", "manifold-reg")
RATE_COLUMNS = ["n", "replicate", "seed", "error", "seconds"]
SUMMARY_COLUMNS = ["n", "median_error", "slope", "slope_stderr", "theory_exponent"]


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one rate sweep.

    ``generator`` holds generator parameters (``kind`` is ``bump``,
    ``manifold`` or ``circle``); ``constants`` holds estimator constant
    overrides such as ``b1``, ``b2``, ``C``, ``C1``, ``L1`` or ``tau2``.
    """

    regime: str = "1"
    generator: dict = field(default_factory=dict)
    alpha_X: float = 1.0
    alpha_Y: float = 1.0
    beta_X: float = 2.0
    beta_Y: float = 2.0
    D_Y: int = 1
    d_Y: int = 1
    D_X: int = 1
    d_X: int = 1
    gamma: list = field(default_factory=lambda: [1.0])
    n_grid: list = field(default_factory=lambda: [512, 1024, 2048, 4096, 8192])
    replicates: int = 20
    seed: int = 0
    constants: dict = field(default_factory=dict)
    output_dir: str = "results"
    x_draws: int = 64
    J_eval: int = 6
    x_grid: int = 21
    cloud_resolution: int = 16
    truth_resolution: int = 8192
    workers: int = 1

    def __post_init__(self):
        self.regime = str(self.regime)
        if self.regime not in REGIMES:
            raise ConfigurationError(f"regime must be one of {REGIMES}")
        self.n_grid = [int(v) for v in self.n_grid]
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigurationError("n grid must be strictly increasing")
        if not self.n_grid or self.n_grid[0] < 3:
            raise ConfigurationError("n grid must be nonempty with n >= 3")
        if self.replicates < 1:
            raise ConfigurationError("replicates must be at least 1")
        self.gamma = [float(g) for g in np.atleast_1d(self.gamma)]
        if any(g < 0 for g in self.gamma):
            raise ConfigurationError("gamma must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown experiment keys: {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def theoretical_exponent(cfg: ExperimentConfig) -> float:
    """Exponent of the slowest of the regime's rate terms (first ``gamma``)."""
    g = cfg.gamma[0]
    aX, aY, dX = cfg.alpha_X, cfg.alpha_Y, cfg.d_X
    cov = aX / (2 * aX + dX)
    if cfg.regime == "manifold-reg":
        return 1.0 / (cfg.d_Y / cfg.beta_Y + cfg.d_X / cfg.beta_X)
    if cfg.regime == "1":
        return min(cov, (aY + g) / (2 * aY + cfg.D_Y + dX * aY / aX))
    dens = (aY + g) / (2 * aY + cfg.d_Y + dX * aY / aX)
    if cfg.regime == "2":
        supp = g * cfg.beta_Y / cfg.d_Y
    else:
        supp = g / (cfg.d_Y / cfg.beta_Y + cfg.d_X / cfg.beta_X)
    return min(cov, dens, supp)


def fit_loglog_slope(points) -> tuple[float, float]:
    """OLS slope of ``log median error`` on ``log n`` and its standard error.

    Nonpositive or nonfinite errors are dropped with a warning. Fewer than
    three distinct ``n`` give ``(nan, nan)``.
    """
    groups: dict = {}
    for n, e in points:
        if not np.isfinite(e) or e <= 0:
            warnings.warn(f"dropping nonpositive error {e!r} at n={n}")
            continue
        groups.setdefault(int(n), []).append(float(e))
    if len(groups) < 3:
        return float("nan"), float("nan")
    ns = np.array(sorted(groups), dtype=float)
    med = np.array([np.median(groups[int(n)]) for n in ns])
    res = stats.linregress(np.log(ns), np.log(med))
    return float(res.slope), float(res.stderr)


@dataclass
class RateTable:
    """Rows ``(n, replicate, seed, error, seconds)`` with the fitted slope."""

    rows: list
    theory_exponent: float

    def errors_by_n(self) -> dict:
        out: dict = {}
        for r in self.rows:
            out.setdefault(int(r["n"]), []).append(float(r["error"]))
        return dict(sorted(out.items()))

    def medians(self) -> dict:
        return {n: float(np.median([e for e in v if np.isfinite(e)]))
                if any(np.isfinite(v)) else float("nan")
                for n, v in self.errors_by_n().items()}

    @property
    def slope_fit(self) -> tuple[float, float]:
        return fit_loglog_slope([(r["n"], r["error"]) for r in self.rows])

    @property
    def slope(self) -> float:
        return self.slope_fit[0]

    @property
    def slope_defined(self) -> bool:
        return bool(np.isfinite(self.slope))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, RATE_COLUMNS)
            w.writeheader()
            for r in sorted(self.rows, key=lambda r: (r["n"], r["replicate"])):
                w.writerow({k: r[k] for k in RATE_COLUMNS})

    def write_summary(self, path) -> None:
        slope, se = self.slope_fit
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SUMMARY_COLUMNS)
            for n, m in self.medians().items():
                w.writerow([n, repr(m), repr(slope), repr(se), repr(self.theory_exponent)])

    def write_dat(self, path) -> None:
        """Whitespace-separated ``n median`` rows for gnuplot."""
        slope, se = self.slope_fit
        with open(path, "w") as fh:
            fh.write(f"# slope {slope!r} stderr {se!r} theory -{self.theory_exponent!r}\n")
            fh.write("# n median_error\n")
            for n, m in self.medians().items():
                fh.write(f"{n} {m!r}\n")


def read_rate_csv(path) -> list:
    if not os.path.exists(path):
        return []
    with open(path, newline="") as fh:
        return [{"n": int(r["n"]), "replicate": int(r["replicate"]), "seed": int(r["seed"]),
                 "error": float(r["error"]), "seconds": float(r["seconds"])}
                for r in csv.DictReader(fh)]


# generators and scorers ---------------------------------------------------------

def _generator_kind(cfg: ExperimentConfig) -> str:
    default = {"1": "bump", "2": "manifold", "3": "manifold", "manifold-reg": "circle"}
    return cfg.generator.get("kind", default[cfg.regime])


def build_generator(cfg: ExperimentConfig):
    """Fixed ground-truth generator of the experiment."""
    p = {k: v for k, v in cfg.generator.items() if k != "kind"}
    kind = _generator_kind(cfg)
    if kind == "bump":
        return BumpDensityGenerator(
            D_Y=cfg.D_Y, d_X=cfg.d_X, alpha_Y=cfg.alpha_Y, alpha_X=cfg.alpha_X,
            gamma=cfg.gamma[0], m1=p.get("m1", 2), m2=p.get("m2", 2),
            omega=np.asarray(p.get("omega", [[1, 0], [0, 1]]), dtype=float),
            amplitude_scale=p.get("amplitude_scale", 2000.0), D_X=cfg.D_X)
    if kind == "manifold":
        default_omega = 0.0 if cfg.regime == "2" else [[1, -1], [-1, 1]]
        return ManifoldFamilyGenerator(
            cfg.d_Y, cfg.D_Y, cfg.d_X, cfg.D_X, cfg.beta_Y, cfg.beta_X,
            p.get("m1", 2), p.get("m2", 2),
            np.asarray(p.get("omega", default_omega), dtype=float))
    if kind == "circle":
        return CircleFamily(amplitude=p.get("amplitude", 0.2), D_Y=cfg.D_Y, d_Y=cfg.d_Y,
                            d_X=cfg.d_X, D_X=cfg.D_X)
    raise ConfigurationError(f"unknown generator kind {kind!r}")


def generate(cfg: ExperimentConfig, n: int, seed):
    gen = build_generator(cfg)
    if isinstance(gen, BumpDensityGenerator):
        return sample_regime1(gen, n, seed)
    return sample_manifold_family(gen, n, seed)


def _c(cfg: ExperimentConfig, key: str, default):
    return cfg.constants.get(key, default)


def regime1_config(cfg: ExperimentConfig) -> regime1.Regime1Config:
    keys = {f.name for f in fields(regime1.Regime1Config)}
    extra = {k: v for k, v in cfg.constants.items() if k in keys}
    return regime1.Regime1Config(alpha_X=cfg.alpha_X, alpha_Y=cfg.alpha_Y, D_Y=cfg.D_Y,
                                 d_X=cfg.d_X, **extra)


def latent_config(cfg: ExperimentConfig) -> latent.LatentConfig:
    keys = {f.name for f in fields(latent.LatentConfig)}
    extra = {k: v for k, v in cfg.constants.items() if k in keys}
    extra.setdefault("decoder", "x-free" if cfg.regime == "2" else "tensor")
    extra.setdefault("J1_max", 1 if cfg.regime == "2" else 0)
    return latent.LatentConfig(d_Y=cfg.d_Y, d_X=cfg.d_X, alpha_X=cfg.alpha_X,
                               alpha_Y=cfg.alpha_Y, beta_Y=cfg.beta_Y,
                               beta_X=cfg.beta_X, **extra)


def fit_model(cfg: ExperimentConfig, data):
    """Fit the estimator of the configured regime."""
    if cfg.regime == "1":
        return regime1.fit(data, regime1_config(cfg))
    if cfg.regime in ("2", "3"):
        return latent.fit(data, latent_config(cfg))
    return manifold_reg.fit(data, cfg.beta_Y, cfg.beta_X, cfg.d_Y, cfg.d_X,
                            b1=_c(cfg, "b1", 3.0), b2=_c(cfg, "b2", 2.0),
                            L1=_c(cfg, "L1", 10.0),
                            max_anchors=_c(cfg, "max_anchors", 5000))


class Scorer:
    """Error of a fitted model against the experiment's ground truth.

    Truth quantities that do not depend on the data (coefficient tables,
    index lists) are computed once and reused across replicates.
    """

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.gen = build_generator(cfg)
        self._indices = None

    def x_samples(self, seed) -> np.ndarray:
        rng = make_rng(seed, 1)  # stream label 1: evaluation covariates
        return self.gen.sample_covariates(rng, self.cfg.x_draws)

    def __call__(self, model, seed) -> float:
        cfg = self.cfg
        if cfg.regime == "1":
            if self._indices is None:
                self._indices = regime1.evaluation_indices(
                    model.basis, cfg.J_eval, cfg.D_Y, model.config.L)
            return regime1.truth_ipm_error(model, self.gen, self.x_samples(seed),
                                           cfg.gamma[0], cfg.J_eval, self._indices)
        if cfg.regime in ("2", "3"):
            vals = []
            for x in self.x_samples(seed):
                est = model.conditional_coefficients(x[None, :], cfg.J_eval)
                pts, w = self.gen.truth_measure(x, cfg.truth_resolution)
                truth = empirical_coefficients(model.basis, pts, w, cfg.J_eval)
                vals.append(besov_distance(est, truth, cfg.gamma[0], cfg.J_eval, cfg.D_Y))
            return float(np.mean(vals))
        grid = np.zeros((cfg.x_grid, cfg.D_X))
        grid[:, 0] = np.linspace(-1.0, 1.0, cfg.x_grid)
        return manifold_reg.sup_hausdorff_error(model, self.gen, grid,
                                                cfg.cloud_resolution, cfg.truth_resolution)


def replicate_seed(cfg: ExperimentConfig, n: int, rep: int) -> int:
    return int(np.random.SeedSequence([cfg.seed, n, rep]).generate_state(1, np.uint64)[0]
               % (2 ** 63))


def run_replicate(cfg: ExperimentConfig, n: int, rep: int, scorer: Scorer | None = None) -> dict:
    """One ``(n, replicate)`` row; failures give ``error = nan``."""
    seed = replicate_seed(cfg, n, rep)
    scorer = scorer or Scorer(cfg)
    t0 = time.perf_counter()
    try:
        data = generate(cfg, n, seed)
        model = fit_model(cfg, data)
        err = float(scorer(model, seed))
    except Exception as exc:  # recorded per row; the sweep continues
        log.warning("n=%d replicate=%d failed: %s", n, rep, exc)
        err = float("nan")
    return {"n": n, "replicate": rep, "seed": seed, "error": err,
            "seconds": time.perf_counter() - t0}


def _worker(args):
    cfg_dict, n, rep = args
    return run_replicate(ExperimentConfig.from_dict(cfg_dict), n, rep)


def run_rate_experiment(cfg: ExperimentConfig, csv_path=None,
                        progress: Callable | None = None) -> RateTable:
    """Sweep the n grid; rows already in ``csv_path`` are reused.

    Completed rows are appended to ``csv_path`` as they finish, so an
    interrupted sweep resumes where it stopped.
    """
    done = {(r["n"], r["replicate"]): r for r in read_rate_csv(csv_path)} if csv_path else {}
    todo = [(n, r) for n in cfg.n_grid for r in range(cfg.replicates) if (n, r) not in done]
    rows = [done[k] for k in ((n, r) for n in cfg.n_grid for r in range(cfg.replicates))
            if k in done]
    writer = None
    fh = None
    if csv_path:
        new = not os.path.exists(csv_path) or os.path.getsize(csv_path) == 0
        fh = open(csv_path, "a", newline="")
        writer = csv.DictWriter(fh, RATE_COLUMNS)
        if new:
            writer.writeheader()

    def record(row):
        rows.append(row)
        if writer is not None:
            writer.writerow(row)
            fh.flush()
        if progress is not None:
            progress(row)

    try:
        if cfg.workers > 1 and todo:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(cfg.workers) as pool:
                for row in pool.map(_worker, [(cfg.to_dict(), n, r) for n, r in todo]):
                    record(row)
        else:
            scorer = Scorer(cfg)
            for n, r in todo:
                record(run_replicate(cfg, n, r, scorer))
    finally:
        if fh is not None:
            fh.close()
    rows.sort(key=lambda r: (r["n"], r["replicate"]))
    return RateTable(rows, theoretical_exponent(cfg))


def write_outputs(table: RateTable, out_dir, stem: str = "rates") -> dict:
    """CSV, summary CSV, gnuplot ``.dat`` and a PNG plot in ``out_dir``."""
    from .plotting import plot_rate_table

    os.makedirs(out_dir, exist_ok=True)
    paths = {"csv": os.path.join(out_dir, f"{stem}.csv"),
             "summary": os.path.join(out_dir, f"{stem}_summary.csv"),
             "dat": os.path.join(out_dir, f"{stem}.dat"),
             "png": os.path.join(out_dir, f"{stem}.png")}
    table.write_csv(paths["csv"])
    table.write_summary(paths["summary"])
    table.write_dat(paths["dat"])
    plot_rate_table(table, paths["png"])
    return paths


def is_strictly_decreasing(values) -> bool:
    v = list(values)
    return all(b < a for a, b in zip(v, v[1:])) and all(math.isfinite(a) for a in v)
