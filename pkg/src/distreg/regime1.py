"""Conditional density regression for Euclidean responses.

Each wavelet coefficient of the conditional density, ``E[psi(Y) | X = x]``,
is estimated by a local polynomial least-squares fit of ``psi(Y_i)`` on
``X_i``; the fitted coefficient functions are then summed against the
wavelets up to a level ``J`` chosen from the sample size.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import Dataset
from .errors import ConfigurationError, DomainError
from .ipm import level_weight
from .smoothers import LocalPolyDesign, packing_centers
from .wavelet import (WaveletBasis, WaveletIndex, build_basis, coefficient,
                      enumerate_indices, level_matrix)


def truncation_level(n: int, alpha_Y: float, alpha_X: float, D_Y: int,
                     d_X: int) -> int:
    """``ceil(log2(n / log n) / (2 alpha_Y + D_Y + d_X alpha_Y / alpha_X))``."""
    if n < 3:
        raise ValueError("n must be at least 3")
    return int(math.ceil(math.log2(n / math.log(n))
                         / (2 * alpha_Y + D_Y + d_X * alpha_Y / alpha_X)))


def bandwidth_x(j: int, n: int, alpha_X: float, d_X: int, dim_Y: int) -> float:
    """Covariate bandwidth ``2^(j dim_Y / (2 aX + dX)) (n / log n)^(-1 / (2 aX + dX))``.

    ``dim_Y`` is the ambient response dimension for Euclidean responses and the
    intrinsic one for the latent fits.
    """
    if j < 0:
        raise ValueError("level must be nonnegative")
    e = 2 * alpha_X + d_X
    return 2.0 ** (j * dim_Y / e) * (n / math.log(n)) ** (-1.0 / e)


@dataclass
class Regime1Config:
    """Smoothness, dimensions and constants of the estimator.

    ``C`` scales the per-level caps ``C 2^(-D_Y j / 2)``; ``C1`` scales the
    number of covariate centers ``C1 eps^(-d_X)``. ``J`` overrides the
    sample-size schedule when given.
    """

    alpha_X: float = 1.0
    alpha_Y: float = 1.0
    D_Y: int = 1
    d_X: int = 1
    L: float = 1.0
    C: float = 10.0
    C1: float = 3.0
    order: int = 4
    regularity: int = 1
    resolution: int = 14
    J: int | None = None

    def basis(self) -> WaveletBasis:
        return build_basis(self.order, self.regularity, self.resolution)


@dataclass
class LevelFit:
    """Shared covariate design and per-wavelet coefficient tables at one level."""

    level: int
    indices: list
    centers: np.ndarray
    eps: float
    degree_bound: float
    floor: float
    cap: float
    coef: np.ndarray  # (len(indices), W, K)

    def design(self) -> LocalPolyDesign:
        return LocalPolyDesign(self.centers, self.eps, self.degree_bound, self.floor)

    def predict(self, x) -> np.ndarray:
        """Fitted coefficient functions at ``x``, shape ``(m, len(indices))``."""
        if not self.indices:
            return np.zeros((np.atleast_2d(x).shape[0], 0))
        A = self.design().matrix(x)
        return A @ self.coef.reshape(len(self.indices), -1).T

    def to_dict(self) -> dict:
        return {"level": self.level, "indices": [str(i) for i in self.indices],
                "centers": self.centers.tolist(), "eps": self.eps,
                "degree_bound": self.degree_bound, "floor": self.floor,
                "cap": self.cap, "coef_shape": list(self.coef.shape),
                "coef": self.coef.ravel().tolist()}

    @classmethod
    def from_dict(cls, d: dict, dim: int) -> "LevelFit":
        return cls(level=d["level"],
                   indices=[WaveletIndex.parse(s) for s in d["indices"]],
                   centers=np.array(d["centers"], dtype=float).reshape(-1, dim),
                   eps=d["eps"], degree_bound=d["degree_bound"], floor=d["floor"],
                   cap=d["cap"],
                   coef=np.array(d["coef"], dtype=float).reshape(tuple(d["coef_shape"])))


@dataclass
class Regime1Model:
    """Fitted estimator: levels ``0..J`` of per-wavelet coefficient fits."""

    config: Regime1Config
    n: int
    J: int
    levels: list
    basis: WaveletBasis = field(repr=False, default=None)

    def __post_init__(self):
        if self.basis is None:
            self.basis = self.config.basis()
        self._pos = {}
        for lf in self.levels:
            for c, idx in enumerate(lf.indices):
                self._pos[idx] = (lf.level, c)

    @property
    def indices(self) -> list:
        return [idx for lf in self.levels for idx in lf.indices]

    def coefficient_functions(self, x) -> tuple[list, np.ndarray]:
        """All fitted ``u_psi(x)``: ``(indices, values (m, total))``."""
        x = _covariates(x, self.config)
        blocks = [lf.predict(x) for lf in self.levels]
        vals = np.hstack(blocks) if blocks else np.zeros((x.shape[0], 0))
        return self.indices, vals

    # serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "n": self.n,
            "J": self.J,
            "levels": [lf.to_dict() for lf in self.levels],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Regime1Model":
        cfg = Regime1Config(**d["config"])
        levels = [LevelFit.from_dict(e, _center_dim(cfg, e)) for e in d["levels"]]
        return cls(cfg, d["n"], d["J"], levels)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({"kind": "regime1", **self.to_dict()}, fh)

    @classmethod
    def load(cls, path) -> "Regime1Model":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _center_dim(cfg: Regime1Config, entry: dict) -> int:
    centers = entry["centers"]
    return len(centers[0]) if centers else max(cfg.d_X, 1)


def _covariates(x, cfg: Regime1Config) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x.reshape(-1, 1) if cfg.d_X == 1 else x.reshape(1, -1)
    return x


def check_responses(Y, L: float) -> None:
    norms = np.linalg.norm(np.asarray(Y, dtype=float), axis=1)
    bad = np.flatnonzero(norms > L)
    if bad.size:
        raise DomainError(
            f"{bad.size} responses lie outside the ball of radius {L}: rows "
            f"{bad[:10].tolist()}{' ...' if bad.size > 10 else ''}")


def fit(data: Dataset, config: Regime1Config | None = None,
        basis: WaveletBasis | None = None) -> Regime1Model:
    """Fit every coefficient function ``u_psi`` for levels ``0..J``.

    At level ``j`` all wavelets share one covariate design (centers from an
    ``eps_j``-packing of the covariates, bandwidth ``eps_j``, cap
    ``C 2^(-D_Y j / 2)``, denominator floor ``1/n``), so the fits reduce to
    one multi-response least-squares solve.
    """
    cfg = config or Regime1Config(D_Y=data.D_Y, d_X=data.d_X or data.D_X)
    if data.n == 0:
        raise ValueError("cannot fit an empty dataset")
    if data.D_Y != cfg.D_Y:
        raise ConfigurationError(f"config D_Y={cfg.D_Y} but data has {data.D_Y}")
    check_responses(data.Y, cfg.L)
    basis = basis or cfg.basis()
    n = data.n
    if cfg.J is not None:
        J = int(cfg.J)
    else:
        J = truncation_level(max(n, 3), cfg.alpha_Y, cfg.alpha_X, cfg.D_Y, cfg.d_X)
    ln = max(n, 3)
    levels = []
    for j in range(J + 1):
        eps = bandwidth_x(j, ln, cfg.alpha_X, cfg.d_X, cfg.D_Y)
        W = int(math.ceil(cfg.C1 * eps ** (-cfg.d_X)))
        centers = packing_centers(data.X, eps, max_centers=W)
        cap = cfg.C * 2.0 ** (-cfg.D_Y * j / 2.0)
        design = LocalPolyDesign(centers, eps, cfg.alpha_X, 1.0 / n)
        idx, M = level_matrix(basis, j, data.Y)
        if idx:
            coef = design.fit(data.X, M.toarray(), cap)
        else:
            coef = np.zeros((0, centers.shape[0], len(design.exponents)))
        levels.append(LevelFit(j, idx, centers, eps, cfg.alpha_X, 1.0 / n, cap, coef))
    return Regime1Model(cfg, n, J, levels, basis)


def eval_density(model: Regime1Model, y, x) -> np.ndarray:
    """``sum_{j<=J} sum_psi u_psi(x) psi(y)``; rows of ``y`` and ``x`` pair up
    (a single ``x`` row is broadcast)."""
    cfg = model.config
    y = np.asarray(y, dtype=float).reshape(-1, cfg.D_Y)
    x = _covariates(x, cfg)
    if x.shape[0] == 1 and y.shape[0] > 1:
        x = np.repeat(x, y.shape[0], axis=0)
    out = np.zeros(y.shape[0])
    for lf in model.levels:
        if not lf.indices:
            continue
        u = lf.predict(x)
        pos = {idx: c for c, idx in enumerate(lf.indices)}
        idx_y, M = level_matrix(model.basis, lf.level, y)
        if not idx_y:
            continue
        cols = np.array([pos.get(i, -1) for i in idx_y])
        keep = cols >= 0
        if not np.any(keep):
            continue
        Mk = M.tocsc()[:, np.flatnonzero(keep)]
        out += np.asarray(Mk.multiply(u[:, cols[keep]]).sum(axis=1)).ravel()
    return out


def conditional_mean_functional(model: Regime1Model, f, x) -> np.ndarray:
    """Plug-in estimate of ``E[f(Y) | X = x]`` as ``sum_psi f_psi u_psi(x)``.

    ``f`` is a coefficient map ``{WaveletIndex: value}`` or a vectorised
    callable on response points (its coefficients are computed by quadrature
    for the stored indices).
    """
    idx, vals = model.coefficient_functions(x)
    if callable(f):
        fc = np.array([coefficient(model.basis, i, f) for i in idx])
    else:
        fc = np.array([f.get(i, 0.0) for i in idx])
    if fc.size == 0:
        return np.zeros(vals.shape[0])
    return vals @ fc


def clipped_density(model: Regime1Model, y, x) -> np.ndarray:
    """Positive part of the estimate, for sampling use only."""
    return np.maximum(eval_density(model, y, x), 0.0)


def evaluation_indices(basis: WaveletBasis, J: int, D_Y: int, L: float) -> list:
    return [idx for j in range(J + 1) for idx in enumerate_indices(basis, j, D_Y, L)]


def truth_ipm_error(model: Regime1Model, generator, x_samples, gamma: float,
                    J_eval: int, indices: list | None = None) -> float:
    """Average Besov-surrogate IPM between the estimate and the exact
    conditional law of ``generator`` over the covariate samples."""
    cfg = model.config
    if gamma > model.basis.regularity:
        raise ConfigurationError("gamma exceeds the basis regularity")
    if indices is None:
        indices = evaluation_indices(model.basis, J_eval, cfg.D_Y, cfg.L)
    xs = _covariates(x_samples, cfg)
    truth = generator.truth_coefficients(model.basis, indices, xs)
    est_idx, est_vals = model.coefficient_functions(xs)
    col = {i: c for c, i in enumerate(indices)}
    est = np.zeros_like(truth)
    extra = np.zeros(xs.shape[0])
    for c, i in enumerate(est_idx):
        if i.level > J_eval:
            continue
        if i in col:
            est[:, col[i]] = est_vals[:, c]
        else:
            extra += level_weight(i.level, gamma, cfg.D_Y) * np.abs(est_vals[:, c])
    w = np.array([level_weight(i.level, gamma, cfg.D_Y) for i in indices])
    per_x = np.abs(est - truth) @ w + extra
    return float(per_x.mean())
