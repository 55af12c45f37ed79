"""Acceptance suite: each test records one PASS/FAIL line for the run summary."""
import itertools
import math
import time

import numpy as np
import pytest
from scipy import stats

from distreg import harness, latent, manifold_reg, regime1
from distreg.ipm import DiscreteMeasure, besov_ipm, brute_force_ipm
from distreg.manifold_reg import hausdorff, hausdorff_bruteforce
from distreg.rng import make_rng
from distreg.smoothers import PartitionWeights, partition_weights
from distreg.stiefel import pca_frame, polar_retraction
from distreg.synthetic import (BumpDensityGenerator, CircleFamily, ManifoldFamilyGenerator,
                               sample_manifold_family, sample_regime1)
from distreg.wavelet import build_basis, coefficients, enumerate_indices, inner_product


@pytest.fixture(scope="module")
def basis4():
    return build_basis(order=4, regularity=1, resolution=14)


# wavelets ----------------------------------------------------------------------------

def test_orthonormality(basis4, criterion):
    t0 = time.perf_counter()
    one = [i for j in range(6) for i in enumerate_indices(basis4, j, 1, 1.0)]
    worst1 = max(abs(inner_product(basis4, a, b) - float(a == b))
                 for a, b in itertools.combinations_with_replacement(one, 2))
    # d = 2: draw the partner among indices whose support meets the first one,
    # so the sample is not dominated by trivially disjoint pairs
    two = [i for j in range(6) for i in enumerate_indices(basis4, j, 2, 1.0)]
    boxes = np.array([np.concatenate(basis4.support_box(i)) for i in two])
    rng = make_rng(0)
    worst2 = 0.0
    for _ in range(200):
        a = int(rng.integers(len(two)))
        lo, hi = boxes[a, :2], boxes[a, 2:]
        meet = np.flatnonzero(np.all((boxes[:, :2] < hi) & (boxes[:, 2:] > lo), axis=1))
        b = int(rng.choice(meet))
        worst2 = max(worst2, abs(inner_product(basis4, two[a], two[b]) - float(a == b)))
    secs = time.perf_counter() - t0
    ok = worst1 <= 1e-5 and worst2 <= 1e-5 and secs < 30
    criterion("wavelet orthonormality", ok,
              f"{len(one) * (len(one) + 1) // 2} pairs d=1 max dev {worst1:.1e}; "
              f"200 pairs d=2 max dev {worst2:.1e}; {secs:.1f} s")
    assert ok


def _hats(k):
    """Sum of ``k`` width-1/2 hats with kinks at golden-ratio phases."""
    g = (math.sqrt(5) - 1) / 2
    centers = [-0.6 + 1.2 * ((i * g) % 1) for i in range(1, k + 1)]
    return lambda y: sum(np.maximum(0.0, 0.5 - np.abs(y[:, 0] - c)) for c in centers)


def _h1_norm(f, lo=-2.0, hi=2.0, m=400001):
    t = np.linspace(lo, hi, m)
    v = f(t[:, None])
    return math.sqrt(np.trapezoid(v ** 2, t) + np.trapezoid(np.gradient(v, t) ** 2, t))


def test_coefficient_decay(basis4, criterion):
    idx = [enumerate_indices(basis4, j, 1, 1.0) for j in range(7)]
    ratios, norms = [], []
    for k in (2, 3, 4):
        f = _hats(k)
        norm = _h1_norm(f)
        norms.append(norm)
        scaled = [max(abs(v) for v in coefficients(basis4, idx[j], f).values())
                  * 2 ** (1.5 * j) / norm for j in range(7)]
        ratios.append(max(scaled) / min(scaled))
    ok = max(ratios) <= 4.0
    criterion("coefficient decay", ok,
              "max/min over j=0..6: " + ", ".join(f"{r:.2f}" for r in ratios)
              + " (H1 norms " + ", ".join(f"{v:.3f}" for v in norms) + ")")
    assert ok


# IPM -------------------------------------------------------------------------------

def test_ipm_surrogate_rank_agreement(basis4, criterion):
    # random atoms moved rigidly by a log-uniform signed shift
    rng = make_rng(0)
    sur, lp = [], []
    for _ in range(30):
        k = int(rng.integers(1, 6))
        p = rng.uniform(-1, 1, k)
        q = p + 10 ** rng.uniform(-1.5, 0.3) * rng.choice([-1, 1])
        mu = DiscreteMeasure(p[:, None], np.full(k, 1 / k))
        nu = DiscreteMeasure(q[:, None], np.full(k, 1 / k))
        sur.append(besov_ipm(mu, nu, 1.0, 6, basis4))
        lp.append(brute_force_ipm(mu, nu, 1.0))
    rho = stats.spearmanr(sur, lp).statistic
    mu = DiscreteMeasure(rng.uniform(-1, 1, (4, 1)), np.full(4, 0.25))
    zeros = besov_ipm(mu, mu, 1.0, 6, basis4) == 0.0 and brute_force_ipm(mu, mu, 1.0) == 0.0
    ok = rho >= 0.9 and zeros
    criterion("IPM surrogate validity", ok,
              f"Spearman {rho:.3f} over 30 pairs; identical pairs exactly 0: {zeros}")
    assert ok


# rate sweeps -------------------------------------------------------------------------

@pytest.mark.slow
def test_regime1_rate(tmp_path, criterion):
    cfg = harness.ExperimentConfig(regime="1", output_dir=str(tmp_path))
    t0 = time.perf_counter()
    table = harness.run_rate_experiment(cfg)
    secs = time.perf_counter() - t0
    med = table.medians()
    ok = (harness.is_strictly_decreasing(med.values()) and table.slope <= -0.2
          and secs <= 600)
    criterion("regime 1 rate", ok,
              "medians " + " ".join(f"{v:.4f}" for v in med.values())
              + f"; slope {table.slope:.3f} (theory -{table.theory_exponent:.3f}); {secs:.0f} s")
    assert ok


@pytest.mark.slow
def test_manifold_regression_rate(tmp_path, criterion):
    cfg = harness.ExperimentConfig(regime="manifold-reg", D_Y=2, replicates=3,
                                   output_dir=str(tmp_path))
    t0 = time.perf_counter()
    table = harness.run_rate_experiment(cfg)
    secs = time.perf_counter() - t0
    med = table.medians()
    last = med[max(med)]
    ok = last <= 0.08 and table.slope <= -0.5 and secs <= 900
    criterion("manifold regression rate", ok,
              f"median sup-Hausdorff at n={max(med)}: {last:.4f}; slope {table.slope:.3f}; "
              f"{secs:.0f} s")
    assert ok


# latent estimator ------------------------------------------------------------------------

@pytest.mark.slow
def test_reconstruction(criterion):
    circle = CircleFamily()
    cfg = latent.LatentConfig(d_Y=1, d_X=1, decoder="tensor", J1_max=0, J2_max=0)
    errs = {}
    for n in (1000, 10000):
        train = sample_manifold_family(circle, n, make_rng(1, n))
        held = sample_manifold_family(circle, 4000, make_rng(2, n))
        mix = latent.fit_mixture(train, cfg)
        errs[n] = latent.reconstruction_error(mix, held.X, held.Y)
    ok = errs[10000] <= 0.05 and errs[10000] < errs[1000]
    criterion("encoder-decoder reconstruction", ok,
              f"held-out error {errs[1000]:.4f} at 1e3, {errs[10000]:.4f} at 1e4")
    assert ok


def test_joint_mean_sparsity(basis4, criterion):
    gen = ManifoldFamilyGenerator(1, 3, 1, 1, 2.0, 2.0, 2, 2, np.array([[1, -1], [-1, 1]]))
    data = sample_manifold_family(gen, 10000, make_rng(3, 10000))
    levels = np.arange(1, 5)
    counts = latent.occupied_counts(data, basis4, levels)
    slope = np.polyfit(levels, np.log2(counts), 1)[0]
    ok = 0.5 <= slope <= 1.5
    criterion("joint-mean sparsity", ok,
              f"occupied cells {counts.tolist()}; log2 slope {slope:.3f}")
    assert ok


def test_coarse_fine_consistency(criterion):
    data = sample_manifold_family(CircleFamily(), 1000, make_rng(1, 1000))
    cfg = latent.LatentConfig(d_Y=1, d_X=1, decoder="tensor", J1_max=0, J2_max=0)
    est = latent.fit(data, cfg)
    pool = [i for j in range(est.J + 1)
            for i in enumerate_indices(est.basis, j, data.D_Y, cfg.L)]
    rng = make_rng(4)
    xs = rng.uniform(-1, 1, (16, 1))
    worst = 0.0
    for _ in range(20):
        sel = rng.choice(len(pool), 12, replace=False)
        f = {pool[s]: float(rng.normal()) for s in sel}
        diff = est.evaluate(f, xs) - latent.coarse_term(est.joint_means, f, xs)
        worst = max(worst, float(np.abs(diff).max()))
    ok = worst == 0.0
    criterion("coarse/fine consistency", ok,
              f"max |J - coarse| = {worst!r} over 20 f x 16 x (J = {est.J})")
    assert ok


# invariant battery -------------------------------------------------------------------

def _orthonormal(V, tol=1e-10):
    return np.allclose(V.T @ V, np.eye(V.shape[1]), atol=tol)


def test_invariant_battery(criterion):
    failures = []

    def check(name, cond):
        if not cond:
            failures.append(name)

    rng = make_rng(11)
    # orthonormal frames
    for _ in range(20):
        M = rng.normal(size=(4, 2))
        check("polar retraction frame", _orthonormal(polar_retraction(M)))
        check("pca frame", _orthonormal(pca_frame(rng.normal(size=(30, 4)), 2)))
    circle = CircleFamily()
    data = sample_manifold_family(circle, 1000, make_rng(1, 1000))
    mr = manifold_reg.fit(data, 2.0, 2.0, 1, 1, b1=3.0, b2=2.0, max_anchors=200)
    check("manifold patch frames", all(_orthonormal(p.frame) for p in mr.patches))
    cfg = latent.LatentConfig(d_Y=1, d_X=1, decoder="tensor", J1_max=0, J2_max=0)
    est = latent.fit(data, cfg)
    check("latent chart frames",
          all(_orthonormal(c.frame) for c in est.mixture.charts.values() if c.active))

    # partition-of-unity sums
    C = rng.uniform(-1, 1, (15, 2))
    pts = C[rng.integers(0, 15, 400)] + 0.1 * rng.normal(size=(400, 2))
    near = np.min(np.linalg.norm(pts[:, None] - C[None], axis=2), axis=1) <= 0.3
    w = partition_weights(pts[near], PartitionWeights(C, 0.3))
    check("smoother partition sums", np.allclose(w.sum(axis=1), 1.0, atol=1e-12))
    P = latent.chart_weights(data.X, data.Y, est.mixture.centers, cfg.tau2)
    check("chart weight sums", np.allclose(np.asarray(P.sum(axis=1)).ravel(), 1.0, atol=1e-12))

    # Hausdorff axioms
    for _ in range(20):
        A, B, D = (rng.normal(size=(int(rng.integers(1, 15)), 2)) for _ in range(3))
        check("hausdorff identity", hausdorff(A, A) == 0.0)
        check("hausdorff symmetry", hausdorff(A, B) == hausdorff(B, A))
        check("hausdorff positivity", hausdorff(A, A + 0.1) > 0.0)
        check("hausdorff triangle", hausdorff(A, B) <= hausdorff(A, D) + hausdorff(D, B) + 1e-12)
        check("hausdorff oracle", math.isclose(hausdorff(A, B), hausdorff_bruteforce(A, B),
                                               rel_tol=1e-12))

    # determinism
    gen = BumpDensityGenerator(1, 1, 1.0, 1.0, 1.0, 2, 2, np.ones((2, 2)), amplitude_scale=2000.0)
    a, b = sample_regime1(gen, 300, 5), sample_regime1(gen, 300, 5)
    check("regime 1 sampling", np.array_equal(a.Y, b.Y) and np.array_equal(a.X, b.X))
    xs = np.linspace(-0.9, 0.9, 7)[:, None]
    r1, r2 = regime1.fit(a), regime1.fit(b)
    check("regime 1 fit", np.array_equal(regime1.eval_density(r1, xs, xs[:1]),
                                          regime1.eval_density(r2, xs, xs[:1])))
    check("latent sampling", np.array_equal(latent.sample_mixture(est.mixture, xs[3], 50, 9),
                                            latent.sample_mixture(est.mixture, xs[3], 50, 9)))
    tiny = harness.ExperimentConfig(regime="1", n_grid=[64], replicates=1, x_draws=3, J_eval=3)
    check("harness replicate", harness.run_replicate(tiny, 64, 0)["error"]
          == harness.run_replicate(tiny, 64, 0)["error"])

    ok = not failures
    criterion("invariant battery", ok,
              "zero failures" if ok else f"{len(failures)} failures: {sorted(set(failures))}")
    assert ok
