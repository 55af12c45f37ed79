import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize

from distreg.data import Dataset
from distreg.manifold_reg import (ManifoldRegressionModel, PatchIndex, UnderSamplingWarning,
                                  bandwidths, fit, fit_patch, fit_window, hausdorff,
                                  hausdorff_bruteforce, latent_grid, patch_features,
                                  poly_index_set, predict)
from distreg.stiefel import box_lstsq


def circle_data(rng, n, radius=1.0):
    t = rng.uniform(0, 2 * math.pi, n)
    X = rng.uniform(-1, 1, (n, 1))
    return Dataset(X, radius * np.column_stack([np.cos(t), np.sin(t)]), d_X=1, d_Y=1)


def refit_objective(Yw, Xw, y0, x0, V, pairs, n):
    F = patch_features(pairs, (Yw - y0) @ V, Xw - x0)
    A = box_lstsq(F, Yw, 1e6)
    return float(((Yw - F @ A) ** 2).sum() / n)


# schedules --------------------------------------------------------------------------

def test_poly_index_set_examples():
    assert poly_index_set(1, 1, 1, 1) == [((0,), (0,))]
    assert set(poly_index_set(2, 1, 1, 1)) == {((0,), (0,)), ((1,), (0,))}
    assert set(poly_index_set(2, 2, 1, 1)) == {((0,), (0,)), ((1,), (0,)), ((0,), (1,))}
    with pytest.raises(ValueError):
        poly_index_set(0, 1, 1, 1)


def test_bandwidth_examples():
    n = optimize.brentq(lambda n: math.log(n) / n - 1 / 16, 3, 1e9)
    h1, h2 = bandwidths(n, 1, 1, 2, 2, 1, 1)
    assert h1 == pytest.approx(0.25, rel=1e-9) and h2 == pytest.approx(0.25, rel=1e-9)


def test_h2_below_h1_when_response_smoother():
    for bY in np.linspace(0.5, 5, 10):
        for bX in np.linspace(0.5, bY, 5):
            for dY in (1, 2, 3):
                for dX in (1, 2, 3):
                    for n in (100, 10 ** 5):
                        h1, h2 = bandwidths(n, dY, dX, bY, bX, 1.5, 1.0)
                        assert h2 <= h1


def test_bandwidth_quartering_ratio():
    for n in (2 ** 12, 2 ** 15, 2 ** 20):
        r = bandwidths(4 * n, 1, 1, 2, 2)[0] / bandwidths(n, 1, 1, 2, 2)[0]
        assert 0.45 <= r <= 0.55


# patch fitting ------------------------------------------------------------------------

def test_plane_data_fit_exactly(rng):
    n = 400
    s = rng.uniform(-1, 1, n)
    X = rng.uniform(-1, 1, (n, 1))
    Y = np.array([0.2, -0.1, 0.3]) + s[:, None] * np.array([2, 1, 2]) / 3
    data = Dataset(X, Y, 1, 1)
    p = fit_patch(0, data, 2, 2, 0.5, 0.5, L1=10)
    assert p.active
    assert p.objective <= 1e-8
    assert np.allclose(p.frame.T @ p.frame, np.eye(1), atol=1e-10)
    assert np.allclose(p.coef[0], Y[0], atol=1e-6)
    assert abs(abs(p.coef[1] @ np.array([2, 1, 2]) / 3) - 1) < 1e-6


def test_circle_residual_within_taylor_bound(rng):
    data = circle_data(rng, 4000)
    h1 = 0.2
    idx = PatchIndex(data)
    p = fit_patch(0, data, 2, 2, h1, 0.5, index=idx)
    rows = idx.window(data.Y[0], data.X[0], h1, 0.5)
    res = np.linalg.norm(data.Y[rows] - p.reconstruct(data.Y[rows], data.X[rows]), axis=1)
    # dropping the quadratic Taylor term of a unit circle costs at most h1^2 / 2
    assert res.max() <= h1 ** 2 / 2


def test_square_window_interpolates():
    data = Dataset([[0.0], [0.1], [-0.05]], [[0.0, 1.0], [0.3, 0.95], [-0.2, 0.98]], 1, 1)
    p = fit_patch(0, data, 2, 2, 1.0, 1.0, min_rcond=0.0)
    assert p.objective <= 1e-20


def test_too_few_samples_inactive():
    data = Dataset([[0.0], [0.9]], [[0.0, 1.0], [1.0, 0.0]], 1, 1)
    p = fit_patch(0, data, 2, 2, 0.1, 0.1)
    assert not p.active


def test_objective_monotone(rng):
    data = circle_data(rng, 2000)
    p = fit_patch(3, data, 3, 2, 0.4, 0.5)
    assert all(b <= a + 1e-15 for a, b in zip(p.history, p.history[1:]))


def test_frame_invariance(rng):
    n = 600
    z = rng.uniform(-1, 1, (n, 2))
    X = rng.uniform(-1, 1, (n, 1))
    Y = np.column_stack([z, 0.3 * (z ** 2).sum(axis=1)])
    pairs = poly_index_set(3, 2, 2, 1)
    y0, x0 = Y[0], X[0]
    V, A, obj, _ = fit_window(Y, X, y0, x0, 2, pairs, 1e6, n)
    t = rng.uniform(0, 2 * math.pi)
    R = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    assert abs(refit_objective(Y, X, y0, x0, V @ R, pairs, n)
               - refit_objective(Y, X, y0, x0, V, pairs, n)) <= 1e-8


# prediction -----------------------------------------------------------------------------

@pytest.fixture(scope="module")
def circle_model():
    data = circle_data(np.random.default_rng(2), 3000)
    return data, fit(data, 2, 2, max_anchors=400)


def test_fixed_circle_prediction_close(circle_model):
    data, model = circle_model
    cloud = predict(model, np.array([0.1]))
    assert cloud.shape[0] > 0
    assert np.abs(np.linalg.norm(cloud, axis=1) - 1).max() <= 2 * model.h1 ** 2


def test_single_anchor_cloud_size(circle_model):
    _, model = circle_model
    p = model.active()[0]
    one = ManifoldRegressionModel([p], model.h1, model.h2, 1, 2)
    cloud = predict(one, p.x0, resolution=13)
    assert cloud.shape == (len(latent_grid(1, model.h1, 13)), 2) == (13, 2)


def test_no_anchor_gives_empty_with_warning(circle_model):
    _, model = circle_model
    with pytest.warns(UnderSamplingWarning):
        assert predict(model, np.array([50.0])).shape == (0, 2)
    with pytest.raises(ValueError):
        predict(model, np.array([0.0]), resolution=4)


def test_translation_equivariance(circle_model):
    data, model = circle_model
    c = np.array([0.3, -0.2])
    shifted = fit(Dataset(data.X, data.Y + c, 1, 1), 2, 2, max_anchors=400)
    x = np.array([0.25])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnderSamplingWarning)
        a, b = predict(model, x), predict(shifted, x)
    assert a.shape == b.shape
    assert np.allclose(a + c, b, atol=1e-8)


def test_save_load_roundtrip(tmp_path, circle_model):
    _, model = circle_model
    p = tmp_path / "m.json"
    model.save(p)
    back = ManifoldRegressionModel.load(p)
    x = np.array([-0.4])
    assert np.array_equal(predict(back, x), predict(model, x))


# Hausdorff distance --------------------------------------------------------------------

def test_hausdorff_examples():
    A = np.array([[0.0, 1.0], [2.0, 3.0]])
    assert hausdorff(A, A) == 0.0
    assert hausdorff([[0.0]], [[3.0]]) == 6.0
    with pytest.raises(ValueError):
        hausdorff(np.zeros((0, 2)), A)


clouds = st.integers(0, 10 ** 6).map(np.random.default_rng)


@given(clouds)
def test_hausdorff_matches_brute_force_and_axioms(r):
    A, B, C = (r.normal(size=(int(r.integers(1, 50)), 2)) for _ in range(3))
    h = hausdorff(A, B)
    assert h == hausdorff_bruteforce(A, B)
    assert h == hausdorff(B, A)
    assert h <= hausdorff(A, C) + hausdorff(C, B) + 1e-12
    assert hausdorff(A, np.vstack([A, A[:1]])) == 0.0
