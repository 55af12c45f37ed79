"""Estimators for conditional laws supported on a low-dimensional manifold.

Two ingredients are combined:

* a joint mean regression that fits, level by level, the scaled conditional
  means ``E[2^(j(d_Y - D_Y)/2) psi(Y) | X = x]`` of the ambient wavelets that
  are hit by the data (the coarse scales);
* a mixture of conditional generative models: local charts (an orthonormal
  encoder frame and a wavelet decoder) fitted on the first half of the sample
  around the nodes of a joint covering grid, and latent conditional densities
  regressed on the second half (the fine scales).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .data import Dataset
from .errors import ConfigurationError, EmptySampleError
from .regime1 import LevelFit, bandwidth_x, check_responses, truncation_level
from .rng import make_rng
from .smoothers import LocalPolyDesign, packing_centers, transition
from .stiefel import alternating_fit, box_lstsq, pca_frame
from .wavelet import (WaveletBasis, WaveletIndex, build_basis, enumerate_indices,
                      index_embedding, level_matrix, level_scale, level_sums,
                      level_types)

DECODERS = ("x-free", "tensor")


@dataclass
class LatentConfig:
    """Smoothness, dimensions and constants of the latent estimators.

    ``tau2`` is the covering scale; ``decoder`` is ``"x-free"`` (charts that
    do not depend on the covariate) or ``"tensor"`` (charts expanded in a
    tensor basis of latent and covariate wavelets). ``J1_max`` and ``J2_max``
    cap the decoder truncation levels. ``C1`` sets the index bandwidth of the
    joint mean fit; ``None`` picks the largest bandwidth for which each
    wavelet only sees its own index center. ``C2`` scales the number of
    covariate centers.
    """

    d_Y: int = 1
    d_X: int = 1
    alpha_X: float = 1.0
    alpha_Y: float = 1.0
    beta_Y: float = 2.0
    beta_X: float = 2.0
    L: float = 1.5
    tau2: float = 0.25
    C: float = 10.0
    C1: float | None = None
    C2: float = 3.0
    L1: float = 100.0
    decoder: str = "x-free"
    J1_max: int = 1
    J2_max: int = 0
    J: int | None = None
    max_iter: int = 30
    tol: float = 1e-9
    quad_resolution: int = 128
    rcond: float = 1e-4
    order: int = 4
    regularity: int = 1
    resolution: int = 14

    def __post_init__(self):
        if self.decoder not in DECODERS:
            raise ConfigurationError(f"decoder must be one of {DECODERS}")
        if not 0 < self.tau2 < self.L:
            raise ConfigurationError("need 0 < tau2 < L")

    def basis(self) -> WaveletBasis:
        return build_basis(self.order, self.regularity, self.resolution)


# schedules ---------------------------------------------------------------

def decoder_levels(n: int, cfg: LatentConfig, D_X: int) -> tuple[int, int]:
    """Decoder truncation levels ``(J1, J2)``, capped by ``J1_max``/``J2_max``.

    ``J2`` is 0 for the covariate-free decoder.
    """
    lg = math.log2(max(n, 2))
    if cfg.decoder == "x-free":
        J1, J2 = math.ceil(lg / cfg.d_Y), 0
    else:
        J1 = math.ceil(lg / (cfg.d_Y + cfg.d_X * cfg.beta_Y / cfg.beta_X))
        J2 = math.ceil(lg / (cfg.d_X + cfg.d_Y * cfg.beta_X / cfg.beta_Y))
    return min(J1, cfg.J1_max), min(J2, cfg.J2_max)


def decoder_cap(j1: int, j2: int | None, cfg: LatentConfig, D_X: int) -> float:
    """Coefficient bound ``L1 * delta`` for a decoder basis function."""
    if j2 is None:
        e = -cfg.d_Y * j1 / 2.0 - j1 * cfg.beta_Y
    else:
        e = -(cfg.d_Y * j1 + D_X * j2) / 2.0 - max(j1 * cfg.beta_Y, j2 * cfg.beta_X)
    return cfg.L1 * 2.0 ** e


# covering and partition ----------------------------------------------------

def _ball_lattice(L: float, tau2: float, D: int) -> np.ndarray:
    h = 2.0 * tau2 / math.sqrt(D)
    m = math.ceil(L / h - 1e-12)
    g = h * np.arange(-m, m + 1)
    P = np.stack([a.ravel() for a in np.meshgrid(*([g] * D), indexing="ij")], axis=1)
    return P[np.linalg.norm(P, axis=1) <= L + h * math.sqrt(D) / 2.0 + 1e-12]


def covering_grid(L: float, tau2: float, D_X: int, D_Y: int) -> np.ndarray:
    """Product lattice ``{(x_k, y_k)}`` covering ``B(0, L) x B(0, L)``.

    Each factor is a cubic lattice whose covering radius is at most
    ``tau2``, so every point of the product is within ``sqrt(2) tau2`` of a
    node. Rows are ``(x, y)`` concatenated.
    """
    if not 0 < tau2 < L:
        raise ConfigurationError("need 0 < tau2 < L")
    Px = _ball_lattice(L, tau2, D_X)
    Py = _ball_lattice(L, tau2, D_Y)
    return np.hstack([np.repeat(Px, len(Py), axis=0), np.tile(Py, (len(Px), 1))])


def _joint(X, Y) -> np.ndarray:
    return np.hstack([np.atleast_2d(X), np.atleast_2d(Y)])


def active_centers(X, Y, centers: np.ndarray, tau2: float) -> np.ndarray:
    """Indices of grid nodes within ``sqrt(2) tau2`` of some sample."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        return np.zeros(0, dtype=int)
    tree = cKDTree(_joint(X, Y))
    counts = tree.query_ball_point(centers, math.sqrt(2.0) * tau2 * (1 + 1e-12),
                                   return_length=True)
    return np.flatnonzero(counts > 0)


def chart_weights(X, Y, centers: np.ndarray, tau2: float) -> sparse.csr_matrix:
    """Partition of unity ``rho_[k](x, y)`` over all grid nodes, shape ``(m, K)``.

    ``rho_[k]`` is ``rho(|(x, y) - w_k|^2 / tau2^2)`` normalised over ``k``;
    only nodes within ``sqrt(2) tau2`` carry weight.
    """
    Z = _joint(X, Y)
    K = centers.shape[0]
    if Z.shape[0] == 0:
        return sparse.csr_matrix((0, K))
    nbrs = cKDTree(centers).query_ball_point(Z, math.sqrt(2.0) * tau2)
    rows = np.repeat(np.arange(Z.shape[0]), [len(b) for b in nbrs])
    cols = np.fromiter((c for b in nbrs for c in b), dtype=int, count=rows.size)
    d2 = ((Z[rows] - centers[cols]) ** 2).sum(axis=1)
    vals = transition(d2 / tau2 ** 2)
    W = sparse.csr_matrix((vals, (rows, cols)), shape=(Z.shape[0], K))
    tot = np.asarray(W.sum(axis=1)).ravel()
    inv = np.where(tot > 0, 1.0 / np.where(tot > 0, tot, 1.0), 0.0)
    return sparse.diags(inv) @ W


# charts ----------------------------------------------------------------------

@dataclass
class Chart:
    """Encoder frame and wavelet decoder fitted around one grid node.

    ``Q(y) = frame^T (y - y0)``; the decoder is
    ``G(z, x) = sum_c coef[c] * psi1_c(z)`` (covariate-free) or
    ``sum_{c, e} coef[c, e] * psi1_c(z) psi2_e(x)`` (tensor).
    """

    k: int
    x0: np.ndarray
    y0: np.ndarray
    frame: np.ndarray                 # (D_Y, d_Y)
    z_indices: list
    x_indices: list | None
    coef: np.ndarray                  # (p, D_Y)
    caps: np.ndarray                  # (p,)
    tau2: float
    basis: WaveletBasis = field(repr=False, default=None)
    active: bool = True
    objective: float = float("nan")
    history: tuple = ()

    @property
    def d_Y(self) -> int:
        return self.frame.shape[1]

    def encode(self, y) -> np.ndarray:
        return (np.atleast_2d(np.asarray(y, dtype=float)) - self.y0) @ self.frame

    def _x_features(self, x, m: int) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[0] == 1 and m > 1:
            x = np.repeat(x, m, axis=0)
        return np.stack([self.basis.evaluate(i, x) for i in self.x_indices], axis=1)

    def features(self, z, x=None) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        Fz = np.stack([self.basis.evaluate(i, z) for i in self.z_indices], axis=1)
        if self.x_indices is None:
            return Fz
        Fx = self._x_features(x, z.shape[0])
        return (Fz[:, :, None] * Fx[:, None, :]).reshape(z.shape[0], -1)

    def decode(self, z, x=None) -> np.ndarray:
        return self.features(z, x) @ self.coef

    def reconstruct(self, y, x=None) -> np.ndarray:
        return self.decode(self.encode(y), x)

    def to_dict(self) -> dict:
        return {"k": self.k, "x0": self.x0.tolist(), "y0": self.y0.tolist(),
                "frame": self.frame.tolist(),
                "z_indices": [str(i) for i in self.z_indices],
                "x_indices": None if self.x_indices is None
                else [str(i) for i in self.x_indices],
                "coef": self.coef.tolist(), "caps": self.caps.tolist(),
                "tau2": self.tau2, "active": self.active, "objective": self.objective}

    @classmethod
    def from_dict(cls, d: dict, basis: WaveletBasis) -> "Chart":
        y0 = np.array(d["y0"], dtype=float)
        xi = d["x_indices"]
        return cls(d["k"], np.array(d["x0"], dtype=float), y0,
                   np.array(d["frame"], dtype=float).reshape(y0.size, -1),
                   [WaveletIndex.parse(s) for s in d["z_indices"]],
                   None if xi is None else [WaveletIndex.parse(s) for s in xi],
                   np.array(d["coef"], dtype=float).reshape(-1, y0.size),
                   np.array(d["caps"], dtype=float), d["tau2"], basis,
                   d["active"], d["objective"])


def _feature_grad(chart: Chart, u: np.ndarray, Fx: np.ndarray | None) -> np.ndarray:
    d = u.shape[1]
    cols = []
    for i in chart.z_indices:
        cols.append(np.stack([chart.basis.evaluate(i, u, tuple(int(a == l) for a in range(d)))
                              for l in range(d)], axis=1))
    dFz = np.stack(cols, axis=1)                             # (m, pz, d)
    if Fx is None:
        return dFz
    m = u.shape[0]
    return (dFz[:, :, None, :] * Fx[:, None, :, None]).reshape(m, -1, d)


def chart_window(X, Y, x0, y0, tau2: float) -> np.ndarray:
    """Rows with ``|X - x0| <= 2 tau2`` and ``|Y - y0| <= 2 tau2``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0:
        return np.zeros(0, dtype=int)
    ok = (np.linalg.norm(X - x0, axis=1) <= 2 * tau2) & \
         (np.linalg.norm(Y - y0, axis=1) <= 2 * tau2)
    return np.flatnonzero(ok)


def decoder_indices(basis: WaveletBasis, cfg: LatentConfig, J1: int, J2: int,
                    x0: np.ndarray) -> tuple[list, list | None, np.ndarray]:
    """Latent and covariate index sets of a chart's decoder and their caps."""
    r = 2 * cfg.tau2
    z_idx = [i for j in range(J1 + 1) for i in enumerate_indices(basis, j, cfg.d_Y, r)]
    if cfg.decoder == "x-free":
        caps = np.array([decoder_cap(i.level, None, cfg, x0.size) for i in z_idx])
        return z_idx, None, caps
    x_idx = [i for j in range(J2 + 1)
             for i in enumerate_indices(basis, j, x0.size, r, center=x0)]
    caps = np.array([decoder_cap(a.level, b.level, cfg, x0.size)
                     for a in z_idx for b in x_idx])
    return z_idx, x_idx, caps


def fit_chart(k: int, centers: np.ndarray, X1, Y1, cfg: LatentConfig,
              basis: WaveletBasis, J1: int, J2: int, frame0=None) -> Chart:
    """Fit encoder frame and decoder on the window around grid node ``k``.

    Minimises ``(1/|I1|) sum |Y_i - G(V^T (Y_i - y_k), X_i)|^2`` over window
    samples, alternating box-constrained least squares for the decoder with
    retracted gradient steps for ``V`` from a PCA start. A window without
    samples gives an inactive chart.
    """
    X1 = np.atleast_2d(np.asarray(X1, dtype=float))
    Y1 = np.atleast_2d(np.asarray(Y1, dtype=float))
    D_X = X1.shape[1] if X1.size else centers.shape[1] - Y1.shape[1]
    x0, y0 = centers[k, :D_X].copy(), centers[k, D_X:].copy()
    z_idx, x_idx, caps = decoder_indices(basis, cfg, J1, J2, x0)
    D_Y = y0.size
    chart = Chart(k, x0, y0, np.eye(D_Y)[:, :cfg.d_Y].copy(), z_idx, x_idx,
                  np.zeros((caps.size, D_Y)), caps, cfg.tau2, basis, active=False)
    rows = chart_window(X1, Y1, x0, y0, cfg.tau2)
    if rows.size == 0:
        return chart
    Yw, Xw = Y1[rows], X1[rows]
    dY = Yw - y0
    Fx = None if x_idx is None else chart._x_features(Xw, rows.size)

    def design(u):
        return chart.features(u, Xw) if Fx is None else \
            (np.stack([basis.evaluate(i, u) for i in z_idx], axis=1)[:, :, None]
             * Fx[:, None, :]).reshape(u.shape[0], -1)

    V0 = pca_frame(dY, cfg.d_Y) if frame0 is None else frame0
    V, A, obj, hist = alternating_fit(
        dY, Yw, V0, design, lambda u: _feature_grad(chart, u, Fx),
        lambda F, T: box_lstsq(F, T, caps, cfg.rcond), Y1.shape[0], cfg.max_iter, cfg.tol)
    chart.frame, chart.coef, chart.objective, chart.history = V, A, obj, hist
    chart.active = True
    return chart


def chart_objective(chart: Chart, X1, Y1, frame=None) -> float:
    """Window objective of ``chart`` with the decoder refitted for ``frame``."""
    V = chart.frame if frame is None else frame
    rows = chart_window(X1, Y1, chart.x0, chart.y0, chart.tau2)
    Yw, Xw = np.atleast_2d(Y1)[rows], np.atleast_2d(X1)[rows]
    F = chart.features((Yw - chart.y0) @ V, Xw)
    A = box_lstsq(F, Yw, chart.caps, None)
    return float(((Yw - F @ A) ** 2).sum() / np.atleast_2d(Y1).shape[0])


# joint mean regression -------------------------------------------------------

def index_separation(basis: WaveletBasis, j: int, D_Y: int, L: float) -> float:
    """Smallest distance between embeddings of two distinct level-j indices."""
    sep = 1.0 / (2.0 * level_scale(j) * L + basis.support_length)
    ntypes = len(level_types(j, D_Y))
    if ntypes > 1:
        sep = min(sep, 1.0 / (ntypes - 1))
    return sep


@dataclass
class JointMeanModel:
    """Fitted ``S_j(psi, x)`` at one level for the occupied wavelets.

    With the index bandwidth below half the index separation each wavelet's
    partition weight in index space is one-hot, so ``S_j(psi, .)`` is a local
    polynomial fit in ``x`` on a shared covariate design.
    """

    level: int
    d_Y: int
    D_Y: int
    indices: list
    embeddings: np.ndarray            # (q, D_Y + 1) index centers e
    eps_y: float
    fit: LevelFit

    @property
    def scale(self) -> float:
        """Response scaling ``2^(j (d_Y - D_Y) / 2)``."""
        return 2.0 ** (self.level * (self.d_Y - self.D_Y) / 2.0)

    @property
    def cap(self) -> float:
        return self.fit.cap

    def values(self, x) -> np.ndarray:
        """``S_j(psi, x)`` for the stored indices, shape ``(m, q)``."""
        return self.fit.predict(x)

    def to_dict(self) -> dict:
        return {"level": self.level, "d_Y": self.d_Y, "D_Y": self.D_Y,
                "embeddings": self.embeddings.tolist(), "eps_y": self.eps_y,
                "fit": self.fit.to_dict()}

    @classmethod
    def from_dict(cls, d: dict, D_X: int) -> "JointMeanModel":
        lf = LevelFit.from_dict(d["fit"], D_X)
        return cls(d["level"], d["d_Y"], d["D_Y"], lf.indices,
                   np.array(d["embeddings"], dtype=float).reshape(len(lf.indices), -1),
                   d["eps_y"], lf)


def fit_joint_mean(j: int, data: Dataset, cfg: LatentConfig,
                   basis: WaveletBasis) -> JointMeanModel:
    """Least-squares fit of ``S_j`` to ``2^(j (d_Y - D_Y)/2) psi(Y_i)``.

    Index centers are the embeddings of the wavelets hit by some response;
    covariate centers are an ``eps_j^x`` packing of the covariates.
    """
    n = data.n
    ln = max(n, 3)
    sep = index_separation(basis, j, data.D_Y, cfg.L)
    eps_y = sep / 2.0 if cfg.C1 is None else 2.0 ** (-j) / cfg.C1
    if eps_y > sep / 2.0 * (1 + 1e-12):
        raise ConfigurationError(
            f"index bandwidth {eps_y:.3g} exceeds half the index separation "
            f"{sep:.3g}; increase C1")
    eps = bandwidth_x(j, ln, cfg.alpha_X, cfg.d_X, cfg.d_Y)
    W = int(math.ceil(cfg.C2 * eps ** (-cfg.d_X)))
    cap = cfg.C * 2.0 ** (-cfg.d_Y * j / 2.0)
    scale = 2.0 ** (j * (cfg.d_Y - data.D_Y) / 2.0)
    centers = packing_centers(data.X, eps, max_centers=W)
    design = LocalPolyDesign(centers, eps, cfg.alpha_X, 1.0 / ln)
    idx, M = level_matrix(basis, j, data.Y) if n else ([], None)
    if idx:
        coef = design.fit(data.X, scale * M.toarray(), cap)
        emb = np.array([index_embedding(basis, i, cfg.L) for i in idx])
    else:
        coef = np.zeros((0, centers.shape[0], len(design.exponents)))
        emb = np.zeros((0, data.D_Y + 1))
    lf = LevelFit(j, idx, centers, eps, cfg.alpha_X, 1.0 / ln, cap, coef)
    return JointMeanModel(j, cfg.d_Y, data.D_Y, idx, emb, eps_y, lf)


def occupied_counts(data: Dataset, basis: WaveletBasis, levels) -> np.ndarray:
    """Number of level-j wavelets whose support contains a response."""
    return np.array([len(level_matrix(basis, j, data.Y)[0]) for j in levels])


# latent density regression -------------------------------------------------------

def latent_indices(basis: WaveletBasis, j: int, d_Y: int, tau2: float) -> list:
    """Level-j latent wavelets whose support meets ``B(0, 2 tau2)``."""
    return enumerate_indices(basis, j, d_Y, 2 * tau2)


@dataclass
class LatentDesigns:
    """Covariate designs of the latent fits, shared by all charts."""

    levels: list                      # (centers, eps, design, matrix) per level
    n: int

    @classmethod
    def build(cls, X2, J: int, n: int, cfg: LatentConfig) -> "LatentDesigns":
        ln = max(n, 3)
        out = []
        for j in range(J + 1):
            eps = bandwidth_x(j, ln, cfg.alpha_X, cfg.d_X, cfg.d_Y)
            W = int(math.ceil(cfg.C2 * eps ** (-cfg.d_X)))
            centers = packing_centers(X2, eps, max_centers=W)
            design = LocalPolyDesign(centers, eps, cfg.alpha_X, 1.0 / ln)
            A = design.matrix(X2) if np.atleast_2d(X2).shape[0] else None
            out.append((centers, eps, design, A))
        return cls(out, n)


def fit_latent_density(chart: Chart, X2, Y2, weights, J: int, cfg: LatentConfig,
                       basis: WaveletBasis, n: int,
                       designs: LatentDesigns | None = None) -> list:
    """Fit ``v_{k psi}`` for ``j <= J`` on the second half of the sample.

    Responses are ``psi(Q_k(Y_i)) * rho_[k](X_i, Y_i)``; each level uses the
    local polynomial class with intrinsic-dimension bandwidths and caps
    ``C 2^(-d_Y j / 2)``. Returns one :class:`LevelFit` per level.
    """
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    w = np.asarray(weights, dtype=float).reshape(-1)
    designs = designs or LatentDesigns.build(X2, J, n, cfg)
    live = np.flatnonzero(w > 0)
    Z = chart.encode(np.atleast_2d(Y2)[live]) if live.size else np.zeros((0, cfg.d_Y))
    out = []
    for j in range(J + 1):
        centers, eps, design, A = designs.levels[j]
        idx = latent_indices(basis, j, cfg.d_Y, cfg.tau2)
        cap = cfg.C * 2.0 ** (-cfg.d_Y * j / 2.0)
        R = np.zeros((X2.shape[0], len(idx)))
        for c, i in enumerate(idx):
            R[live, c] = basis.evaluate(i, Z) * w[live]
        if live.size and A is not None:
            coef = design.solve(A, R, cap)
        else:
            coef = np.zeros((len(idx), centers.shape[0], len(design.exponents)))
        out.append(LevelFit(j, idx, centers, eps, cfg.alpha_X, design.floor, cap, coef))
    return out


# mixture of generative models ---------------------------------------------------

@dataclass
class MixtureGenerativeModel:
    """``sum_k G_k(., x) # nu_k(. | x)`` over the active grid nodes."""

    config: LatentConfig
    centers: np.ndarray
    active: np.ndarray
    charts: dict
    latent: dict                      # k -> list of LevelFit, levels 0..J
    J: int
    D_X: int
    D_Y: int
    basis: WaveletBasis = field(repr=False, default=None)

    def __post_init__(self):
        if self.basis is None:
            self.basis = self.config.basis()
        self._grid = None

    @property
    def fitted(self) -> list:
        """Active nodes whose chart and latent table are both available."""
        return [k for k in self.active.tolist() if k in self.latent]

    def latent_grid(self) -> tuple[np.ndarray, float, list]:
        """Midpoint grid on ``[-2 tau2, 2 tau2]^d_Y``, cell volume and the
        latent wavelet values on it (one ``(G, q_j)`` array per level)."""
        if self._grid is None:
            cfg = self.config
            r, m = 2 * cfg.tau2, cfg.quad_resolution
            g = -r + (np.arange(m) + 0.5) * (2 * r / m)
            Z = np.stack([a.ravel() for a in np.meshgrid(*([g] * cfg.d_Y), indexing="ij")],
                         axis=1)
            vals = [np.stack([self.basis.evaluate(i, Z) for i in
                              latent_indices(self.basis, j, cfg.d_Y, cfg.tau2)], axis=1)
                    for j in range(self.J + 1)]
            self._grid = (Z, (2 * r / m) ** cfg.d_Y, vals)
        return self._grid

    def latent_density(self, k: int, z, x) -> np.ndarray:
        """Signed latent density ``sum_j sum_psi psi(z) v_{k psi}(x)``; one ``x``."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        out = np.zeros(z.shape[0])
        for lf in self.latent[k]:
            v = lf.predict(np.atleast_2d(x))[0]
            for c, i in enumerate(lf.indices):
                if v[c] != 0.0:
                    out += v[c] * self.basis.evaluate(i, z)
        return out

    def _grid_density(self, k: int, x) -> np.ndarray:
        _, _, vals = self.latent_grid()
        out = 0.0
        for lf, P in zip(self.latent[k], vals):
            out = out + P @ lf.predict(np.atleast_2d(x))[0]
        return np.asarray(out, dtype=float)

    def pushforward(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Signed quadrature measure ``(points, weights)`` of the mixture at ``x``."""
        Z, vol, _ = self.latent_grid()
        pts, wts = [], []
        for k in self.fitted:
            w = self._grid_density(k, x) * vol
            keep = w != 0.0
            if np.any(keep):
                pts.append(self.charts[k].decode(Z[keep], x))
                wts.append(w[keep])
        if not pts:
            return np.zeros((0, self.D_Y)), np.zeros(0)
        return np.vstack(pts), np.concatenate(wts)

    def to_dict(self) -> dict:
        return {"config": asdict(self.config), "centers": self.centers.tolist(),
                "active": self.active.tolist(), "J": self.J, "D_X": self.D_X,
                "D_Y": self.D_Y,
                "charts": [c.to_dict() for c in self.charts.values()],
                "latent": {str(k): [lf.to_dict() for lf in v]
                           for k, v in self.latent.items()}}

    @classmethod
    def from_dict(cls, d: dict, basis: WaveletBasis | None = None) -> "MixtureGenerativeModel":
        cfg = LatentConfig(**d["config"])
        basis = basis or cfg.basis()
        charts = {c["k"]: Chart.from_dict(c, basis) for c in d["charts"]}
        latent = {int(k): [LevelFit.from_dict(e, d["D_X"]) for e in v]
                  for k, v in d["latent"].items()}
        return cls(cfg, np.array(d["centers"], dtype=float).reshape(-1, d["D_X"] + d["D_Y"]),
                   np.array(d["active"], dtype=int), charts, latent, d["J"],
                   d["D_X"], d["D_Y"], basis)


def _tail(f_coeffs, J: int) -> dict:
    return {i: v for i, v in f_coeffs.items() if i.level > J and v != 0.0}


def mixture_conditional_coefficient(model: MixtureGenerativeModel, f_coeffs, x) -> float:
    """Fine-scale term ``sum_k int f_J^perp(G_k(z, x)) nu_k(z | x) dz``.

    ``f_coeffs`` maps ambient wavelet indices to coefficients; the tail
    ``f_J^perp`` is the part above level ``J``. The integral uses the midpoint
    grid of :meth:`MixtureGenerativeModel.latent_grid`.
    """
    tail = _tail(f_coeffs, model.J)
    if not tail or not model.fitted:
        return 0.0
    pts, wts = model.pushforward(x)
    if pts.shape[0] == 0:
        return 0.0
    ftail = np.zeros(pts.shape[0])
    for i, v in tail.items():
        ftail += v * model.basis.evaluate(i, pts)
    return float(ftail @ wts)


def coarse_term(joint_means: list, f_coeffs, x) -> np.ndarray:
    """``sum_{j<=J} sum_psi f_psi 2^(j (D_Y - d_Y)/2) S_j(psi, x)`` per row of ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.zeros(x.shape[0])
    for jm in joint_means:
        fc = np.array([f_coeffs.get(i, 0.0) for i in jm.indices])
        if fc.size and np.any(fc):
            out += jm.values(x) @ fc / jm.scale
    return out


def evaluate_J(f_coeffs, x, joint_means: list, mixture: MixtureGenerativeModel) -> np.ndarray:
    """Combined estimate of ``E[f(Y) | X = x]`` for each row of ``x``."""
    if len(joint_means) != mixture.J + 1:
        raise ConfigurationError(
            f"joint means cover levels 0..{len(joint_means) - 1} but the mixture "
            f"uses J={mixture.J}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = coarse_term(joint_means, f_coeffs, x)
    if _tail(f_coeffs, mixture.J):
        out = out + np.array([mixture_conditional_coefficient(mixture, f_coeffs, xi)
                              for xi in x])
    return out


def sample_mixture(model: MixtureGenerativeModel, x, m: int, seed) -> np.ndarray:
    """Draw ``m`` responses from the clipped mixture at covariate ``x``.

    A chart is chosen in proportion to the positive mass of its latent
    density; ``z`` is drawn by rejection from the clipped density on the
    latent window and mapped through the chart's decoder.
    """
    if m == 0:
        return np.zeros((0, model.D_Y))
    rng = make_rng(seed)
    Z, vol, _ = model.latent_grid()
    ks, masses, peaks = [], [], []
    for k in model.fitted:
        dens = np.maximum(model._grid_density(k, x), 0.0)
        mass = float(dens.sum() * vol)
        if mass > 0:
            ks.append(k)
            masses.append(mass)
            peaks.append(float(dens.max()))
    if not ks:
        raise EmptySampleError(
            f"latent densities have no positive mass at x={np.ravel(x).tolist()} "
            f"({len(model.fitted)} fitted charts)")
    p = np.array(masses) / sum(masses)
    counts = rng.multinomial(m, p)
    r = 2 * model.config.tau2
    d = model.config.d_Y
    out = []
    for k, c, peak in zip(ks, counts, peaks):
        got = []
        need = int(c)
        env = 1.1 * peak
        while need > 0:
            prop = rng.uniform(-r, r, size=(max(4 * need, 64), d))
            dens = np.maximum(model.latent_density(k, prop, x), 0.0)
            env = max(env, float(dens.max()))
            acc = prop[rng.random(prop.shape[0]) * env < dens][:need]
            got.append(acc)
            need -= acc.shape[0]
        if got:
            out.append(model.charts[k].decode(np.vstack(got), x))
    Y = np.vstack(out)
    return Y[rng.permutation(Y.shape[0])]


# full estimator ----------------------------------------------------------------

@dataclass
class LatentEstimator:
    """Joint means for levels ``0..J`` plus the generative mixture."""

    joint_means: list
    mixture: MixtureGenerativeModel
    n: int

    @property
    def J(self) -> int:
        return self.mixture.J

    @property
    def basis(self) -> WaveletBasis:
        return self.mixture.basis

    def evaluate(self, f_coeffs, x) -> np.ndarray:
        return evaluate_J(f_coeffs, x, self.joint_means, self.mixture)

    def conditional_coefficients(self, x, J_eval: int) -> dict:
        """Estimated ``E[psi(Y) | x]`` for all wavelets up to level ``J_eval``.

        Levels ``<= J`` come from the joint means; finer levels from the
        mixture's quadrature measure.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = {}
        for jm in self.joint_means:
            if jm.level > J_eval:
                continue
            v = jm.values(x)[0] / jm.scale
            out.update({i: float(a) for i, a in zip(jm.indices, v) if a != 0.0})
        if J_eval > self.J:
            pts, wts = self.mixture.pushforward(x)
            if pts.shape[0]:
                for j in range(self.J + 1, J_eval + 1):
                    idx, vals = level_sums(self.basis, j, pts, wts)
                    out.update({i: float(a) for i, a in zip(idx, vals) if a != 0.0})
        return out

    def to_dict(self) -> dict:
        return {"n": self.n, "joint_means": [jm.to_dict() for jm in self.joint_means],
                "mixture": self.mixture.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "LatentEstimator":
        mix = MixtureGenerativeModel.from_dict(d["mixture"])
        jms = [JointMeanModel.from_dict(e, mix.D_X) for e in d["joint_means"]]
        return cls(jms, mix, d["n"])

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({"kind": "latent", **self.to_dict()}, fh)

    @classmethod
    def load(cls, path) -> "LatentEstimator":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_mixture(data: Dataset, cfg: LatentConfig, basis: WaveletBasis | None = None,
                J: int | None = None) -> MixtureGenerativeModel:
    """Charts on the first half of the sample, latent densities on the second."""
    basis = basis or cfg.basis()
    n = data.n
    if J is None:
        J = cfg.J if cfg.J is not None else truncation_level(
            max(n, 3), cfg.alpha_Y, cfg.alpha_X, cfg.d_Y, cfg.d_X)
    first, second = data.split()
    centers = covering_grid(cfg.L, cfg.tau2, data.D_X, data.D_Y)
    active = active_centers(first.X, first.Y, centers, cfg.tau2)
    J1, J2 = decoder_levels(n, cfg, data.D_X)
    charts = {int(k): fit_chart(int(k), centers, first.X, first.Y, cfg, basis, J1, J2)
              for k in active}
    latent = {}
    if second.n:
        P = chart_weights(second.X, second.Y, centers, cfg.tau2).tocsc()
        designs = LatentDesigns.build(second.X, J, n, cfg)
        for k, ch in charts.items():
            if ch.active:
                w = P[:, k].toarray().ravel()
                latent[k] = fit_latent_density(ch, second.X, second.Y, w, J, cfg,
                                               basis, n, designs)
    return MixtureGenerativeModel(cfg, centers, active, charts, latent, J,
                                  data.D_X, data.D_Y, basis)


def fit(data: Dataset, config: LatentConfig | None = None,
        basis: WaveletBasis | None = None) -> LatentEstimator:
    """Fit the joint means and the generative mixture with a common ``J``."""
    cfg = config or LatentConfig(d_Y=data.d_Y or 1, d_X=data.d_X or data.D_X)
    if data.n == 0:
        raise ValueError("cannot fit an empty dataset")
    check_responses(data.Y, cfg.L)
    basis = basis or cfg.basis()
    n = data.n
    J = cfg.J if cfg.J is not None else truncation_level(
        max(n, 3), cfg.alpha_Y, cfg.alpha_X, cfg.d_Y, cfg.d_X)
    mixture = fit_mixture(data, cfg, basis, J)
    joint = [fit_joint_mean(j, data, cfg, basis) for j in range(J + 1)]
    return LatentEstimator(joint, mixture, n)


def reconstruction_error(mixture: MixtureGenerativeModel, X, Y) -> float:
    """Mean over active charts of the window-average ``|Y - G(Q(Y), X)|``.

    Pass held-out samples to measure generalisation; charts whose window
    holds none of them are skipped.
    """
    errs = []
    for k, ch in mixture.charts.items():
        if not ch.active:
            continue
        rows = chart_window(X, Y, ch.x0, ch.y0, ch.tau2)
        if rows.size == 0:
            continue
        Yw = np.atleast_2d(Y)[rows]
        R = Yw - ch.reconstruct(Yw, np.atleast_2d(X)[rows])
        errs.append(float(np.linalg.norm(R, axis=1).mean()))
    if not errs:
        raise EmptySampleError("no active chart window holds any of the samples")
    return float(np.mean(errs))
