"""Local polynomial regression of a covariate-dependent response manifold.

Around every anchor sample ``(X_k, Y_k)`` the responses in a joint window are
fit by a mixed-degree polynomial in the tangent coordinates ``V^T (Y - Y_k)``
and the covariate offset ``X - X_k``, with the frame ``V`` optimised over the
Stiefel manifold. The estimated manifold at ``x`` is the union of the patch
images of a latent ball.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .data import Dataset
from .smoothers import packing_centers
from .stiefel import alternating_fit, box_lstsq, pca_frame, polar_retraction  # noqa: F401


class UnderSamplingWarning(UserWarning):
    """No fitted patch is close enough to the requested covariate."""


def poly_index_set(beta_Y: float, beta_X: float, d_Y: int, D_X: int) -> list:
    """All ``(j1, j2)`` with ``|j1| / beta_Y + |j2| / beta_X < 1``."""
    if beta_Y <= 0 or beta_X <= 0:
        raise ValueError("smoothness parameters must be positive")
    t1 = int(math.ceil(beta_Y))
    t2 = int(math.ceil(beta_X))
    out = []
    for j1 in itertools.product(range(t1 + 1), repeat=d_Y):
        for j2 in itertools.product(range(t2 + 1), repeat=D_X):
            if sum(j1) / beta_Y + sum(j2) / beta_X < 1:
                out.append((tuple(j1), tuple(j2)))
    return sorted(out, key=lambda p: (sum(p[0]) + sum(p[1]), tuple(-v for v in p[0] + p[1])))


def bandwidths(n: int, d_Y: int, d_X: int, beta_Y: float, beta_X: float,
               b1: float = 1.5, b2: float = 1.0) -> tuple[float, float]:
    """Response and covariate window radii ``(h1, h2)``."""
    if n < 3:
        raise ValueError("n must be at least 3")
    r = math.log(n) / n
    h1 = b1 * r ** (1.0 / (d_Y + d_X * beta_Y / beta_X))
    h2 = b2 * r ** (1.0 / (d_X + d_Y * beta_X / beta_Y))
    return h1, h2


def _factorials(pairs) -> np.ndarray:
    return np.array([np.prod([math.factorial(v) for v in j1 + j2]) for j1, j2 in pairs],
                    dtype=float)


def patch_features(pairs, u, dx) -> np.ndarray:
    """Columns ``u^j1 dx^j2 / (j1! j2!)`` for each index pair."""
    u = np.atleast_2d(u)
    dx = np.atleast_2d(dx)
    cols = []
    for j1, j2 in pairs:
        c = np.prod(u ** np.array(j1, dtype=float), axis=1) * \
            np.prod(dx ** np.array(j2, dtype=float), axis=1)
        cols.append(c)
    return np.stack(cols, axis=1) / _factorials(pairs)


def _feature_grad_u(pairs, u, dx) -> np.ndarray:
    """Derivatives of the features in ``u``, shape ``(m, |J|, d_Y)``."""
    m, d = u.shape
    out = np.zeros((m, len(pairs), d))
    fact = _factorials(pairs)
    for c, (j1, j2) in enumerate(pairs):
        px = np.prod(dx ** np.array(j2, dtype=float), axis=1)
        for l in range(d):
            if j1[l] == 0:
                continue
            e = np.array(j1, dtype=float)
            e[l] -= 1
            out[:, c, l] = j1[l] * np.prod(u ** e, axis=1) * px / fact[c]
    return out


@dataclass
class ManifoldPatch:
    """One local polynomial piece of the manifold estimate."""

    anchor: int
    x0: np.ndarray
    y0: np.ndarray
    frame: np.ndarray          # (D_Y, d_Y), orthonormal columns
    pairs: list
    coef: np.ndarray           # (|J|, D_Y)
    h1: float
    h2: float
    cap: float
    active: bool = True
    objective: float = float("nan")
    history: tuple = ()

    def features(self, y, x) -> np.ndarray:
        u = (np.atleast_2d(y) - self.y0) @ self.frame
        return patch_features(self.pairs, u, np.atleast_2d(x) - self.x0)

    def reconstruct(self, y, x) -> np.ndarray:
        return self.features(y, x) @ self.coef

    def image(self, x, z) -> np.ndarray:
        """Patch points ``sum a / (j1! j2!) z^j1 (x - X_k)^j2`` for latent ``z``."""
        z = np.atleast_2d(z)
        dx = np.repeat(np.atleast_2d(x) - self.x0, z.shape[0], axis=0)
        return patch_features(self.pairs, z, dx) @ self.coef

    def to_dict(self) -> dict:
        return {"anchor": self.anchor, "x0": self.x0.tolist(), "y0": self.y0.tolist(),
                "frame": self.frame.tolist(),
                "pairs": [[list(a), list(b)] for a, b in self.pairs],
                "coef": self.coef.tolist(), "h1": self.h1, "h2": self.h2,
                "cap": self.cap, "active": self.active, "objective": self.objective}

    @classmethod
    def from_dict(cls, d: dict) -> "ManifoldPatch":
        return cls(d["anchor"], np.array(d["x0"]), np.array(d["y0"]),
                   np.array(d["frame"]).reshape(len(d["y0"]), -1),
                   [(tuple(a), tuple(b)) for a, b in d["pairs"]],
                   np.array(d["coef"]).reshape(len(d["pairs"]), -1), d["h1"], d["h2"],
                   d["cap"], d["active"], d["objective"])


def fit_window(Yw: np.ndarray, Xw: np.ndarray, y0: np.ndarray, x0: np.ndarray,
               d_Y: int, pairs: list, cap: float, n_total: int,
               max_iter: int = 30, tol: float = 1e-9, frame0=None):
    """Alternating minimisation over (frame, coefficients) on one window.

    Returns ``(frame, coef, objective, history)``; ``history`` records the
    accepted objective values, which are nonincreasing.
    """
    dY = Yw - y0
    dX = Xw - x0
    V0 = pca_frame(dY, d_Y) if frame0 is None else frame0
    return alternating_fit(dY, Yw, V0,
                           lambda u: patch_features(pairs, u, dX),
                           lambda u: _feature_grad_u(pairs, u, dX),
                           lambda F, T: box_lstsq(F, T, cap),
                           n_total, max_iter, tol)


class PatchIndex:
    """Joint-window neighbour search over a dataset."""

    def __init__(self, data: Dataset):
        self.data = data
        self.tree_y = cKDTree(data.Y)

    def window(self, y0, x0, h1: float, h2: float) -> np.ndarray:
        rows = np.array(self.tree_y.query_ball_point(y0, h1), dtype=int)
        if rows.size == 0:
            return rows
        dx = np.linalg.norm(self.data.X[rows] - x0, axis=1)
        return np.sort(rows[dx <= h2])


def fit_patch(k: int, data: Dataset, beta_Y: float, beta_X: float, h1: float,
              h2: float, L1: float = 10.0, d_Y: int | None = None,
              index: PatchIndex | None = None, max_iter: int = 30,
              tol: float = 1e-9, min_rcond: float = 0.1) -> ManifoldPatch:
    """Fit the local polynomial patch anchored at sample ``k``.

    The patch is inactive when the window holds fewer than ``|J|`` samples or
    when the design, with tangent coordinates scaled by ``h1`` and covariate
    offsets by ``h2``, has reciprocal condition number below ``min_rcond``
    (samples not in general position).
    """
    d_Y = d_Y or data.d_Y or 1
    pairs = poly_index_set(beta_Y, beta_X, d_Y, data.D_X)
    index = index or PatchIndex(data)
    x0, y0 = data.X[k].copy(), data.Y[k].copy()
    rows = index.window(y0, x0, h1, h2)
    if rows.size < len(pairs):
        return ManifoldPatch(k, x0, y0, np.eye(data.D_Y)[:, :d_Y], pairs,
                             np.zeros((len(pairs), data.D_Y)), h1, h2, L1, active=False)
    V, A, obj, hist = fit_window(data.Y[rows], data.X[rows], y0, x0, d_Y, pairs,
                                 L1, data.n, max_iter, tol)
    active = design_rcond(data.Y[rows], data.X[rows], y0, x0, V, pairs, h1, h2) >= min_rcond
    return ManifoldPatch(k, x0, y0, V, pairs, A, h1, h2, L1, bool(active), obj, hist)


def design_rcond(Yw, Xw, y0, x0, V, pairs, h1: float, h2: float) -> float:
    """Reciprocal condition number of the bandwidth-scaled window design."""
    F = patch_features(pairs, (Yw - y0) @ V / h1, (Xw - x0) / h2)
    s = np.linalg.svd(F, compute_uv=False)
    return float(s[-1] / s[0]) if s[0] > 0 and len(s) == len(pairs) else 0.0


@dataclass
class ManifoldRegressionModel:
    patches: list
    h1: float
    h2: float
    d_Y: int
    D_Y: int

    def active(self) -> list:
        return [p for p in self.patches if p.active]

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({"kind": "manifold", "h1": self.h1, "h2": self.h2,
                       "d_Y": self.d_Y, "D_Y": self.D_Y,
                       "patches": [p.to_dict() for p in self.patches]}, fh)

    @classmethod
    def load(cls, path) -> "ManifoldRegressionModel":
        with open(path) as fh:
            d = json.load(fh)
        return cls([ManifoldPatch.from_dict(p) for p in d["patches"]],
                   d["h1"], d["h2"], d["d_Y"], d["D_Y"])


def select_anchors(data: Dataset, h2: float, max_anchors: int | None) -> np.ndarray:
    """All samples, or a joint-space packing when ``n`` exceeds ``max_anchors``."""
    if max_anchors is None or data.n <= max_anchors:
        return np.arange(data.n)
    Z = np.hstack([data.X, data.Y])
    tree = cKDTree(Z)
    centers = packing_centers(Z, h2 / 2.0, max_centers=max_anchors)
    _, rows = tree.query(centers)
    return np.unique(rows)


def fit(data: Dataset, beta_Y: float, beta_X: float, d_Y: int | None = None,
        d_X: int | None = None, b1: float = 1.5, b2: float = 1.0, L1: float = 10.0,
        max_anchors: int | None = 5000, max_iter: int = 30,
        min_rcond: float = 0.1) -> ManifoldRegressionModel:
    """Fit a patch at every anchor sample."""
    d_Y = d_Y or data.d_Y or 1
    d_X = d_X or data.d_X or data.D_X
    h1, h2 = bandwidths(max(data.n, 3), d_Y, d_X, beta_Y, beta_X, b1, b2)
    index = PatchIndex(data)
    anchors = select_anchors(data, h2, max_anchors)
    patches = [fit_patch(int(k), data, beta_Y, beta_X, h1, h2, L1, d_Y, index, max_iter,
                         min_rcond=min_rcond) for k in anchors]
    return ManifoldRegressionModel(patches, h1, h2, d_Y, data.D_Y)


def latent_grid(d_Y: int, radius: float, resolution: int) -> np.ndarray:
    """Tensor grid of ``resolution`` nodes per axis, restricted to the ball."""
    g = np.linspace(-radius, radius, resolution)
    Z = np.stack([a.ravel() for a in np.meshgrid(*([g] * d_Y), indexing="ij")], axis=1)
    return Z[np.linalg.norm(Z, axis=1) <= radius * (1 + 1e-12)]


def predict(model: ManifoldRegressionModel, x, resolution: int = 16) -> np.ndarray:
    """Union of patch images of the latent ball over anchors near ``x``.

    Each anchor uses its own coefficients. An empty array (with an
    :class:`UnderSamplingWarning`) signals that no anchor lies within ``h2``.
    """
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = latent_grid(model.d_Y, model.h1, resolution)
    clouds = [p.image(x, z) for p in model.patches
              if p.active and np.linalg.norm(p.x0 - x) <= model.h2]
    if not clouds:
        warnings.warn(f"no fitted patch within h2={model.h2:.3g} of x", UnderSamplingWarning)
        return np.zeros((0, model.D_Y))
    return np.vstack(clouds)


def hausdorff(A, B) -> float:
    """Two-sided Hausdorff distance in the sum convention:
    ``sup_a inf_b |a - b| + sup_b inf_a |a - b|``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.size == 0 or B.size == 0 or A.shape[0] == 0 or B.shape[0] == 0:
        raise ValueError("Hausdorff distance needs two nonempty clouds")
    dab = cKDTree(B).query(A)[0].max()
    dba = cKDTree(A).query(B)[0].max()
    return float(dab + dba)


def hausdorff_bruteforce(A, B) -> float:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    D = np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2))
    return float(D.min(axis=1).max() + D.min(axis=0).max())


def sup_hausdorff_error(model: ManifoldRegressionModel, generator, x_grid,
                        resolution: int = 16, truth_resolution: int = 512) -> float:
    """Maximum over a covariate grid of the Hausdorff error to the true manifold.

    A grid point with no covering patch counts as infinite error.
    """
    worst = 0.0
    for x in np.atleast_2d(np.asarray(x_grid, dtype=float).reshape(len(x_grid), -1)):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UnderSamplingWarning)
            cloud = predict(model, x, resolution)
        if cloud.shape[0] == 0:
            return float("inf")
        worst = max(worst, hausdorff(cloud, generator.ground_truth(x, truth_resolution)))
    return worst
