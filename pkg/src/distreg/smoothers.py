"""Smooth transition function, partitions of unity and the local polynomial
regression class used for per-wavelet conditional mean fits."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear
from scipy.special import expit


def transition(t) -> np.ndarray:
    """C-infinity step: 1 on ``|t| <= 1``, 0 on ``|t| >= 2``.

    On ``1 < |t| < 2`` the bridge is the logistic of
    ``-(3 - 2|t|) / ((|t| - 1)(|t| - 2))``, which equals 1/2 at ``|t| = 1.5``.
    """
    t = np.abs(np.asarray(t, dtype=float))
    out = np.where(t <= 1.0, 1.0, 0.0)
    mid = (t > 1.0) & (t < 2.0)
    if np.any(mid):
        s = t[mid]
        e = (3.0 - 2.0 * s) / ((s - 1.0) * (s - 2.0))
        out[mid] = expit(-e)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PartitionWeights:
    """Centers and scale of a transition-based partition of unity."""

    centers: np.ndarray
    tau: float

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        object.__setattr__(self, "centers", c)
        if self.tau <= 0:
            raise ValueError("tau must be positive")


def raw_partition_weights(points, pw: PartitionWeights) -> np.ndarray:
    """Unnormalized weights ``rho(|p - w_k|^2 / tau^2)``, shape ``(m, K)``."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    d2 = ((p[:, None, :] - pw.centers[None, :, :]) ** 2).sum(axis=2)
    return transition(d2 / pw.tau ** 2)


def partition_weights(points, pw: PartitionWeights) -> np.ndarray:
    """Normalized partition weights; rows with no positive weight are zero."""
    raw = raw_partition_weights(points, pw)
    tot = raw.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(tot > 0, raw / np.where(tot > 0, tot, 1.0), 0.0)
    return w


def monomial_exponents(d: int, degree_bound: float) -> list[tuple]:
    """All multi-indices ``k`` in ``N^d`` with ``|k| < degree_bound``."""
    top = max(int(np.ceil(degree_bound)) - 1, 0)
    out = [k for k in itertools.product(range(top + 1), repeat=d)
           if sum(k) < degree_bound]
    return sorted(out, key=lambda k: (sum(k), tuple(-v for v in k)))


def _as_covariates(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x.reshape(-1, 1) if d == 1 else x.reshape(1, -1)
    return x


def packing_centers(points, eps: float, max_centers: int | None = None) -> np.ndarray:
    """Greedy farthest-point ``eps``-packing of ``points``.

    Starts from the first point and repeatedly adds the point farthest from
    the current centers while that distance is at least ``eps``. The result
    is deterministic given the point order.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if p.shape[0] == 0:
        return p.copy()
    chosen = [0]
    dist = np.linalg.norm(p - p[0], axis=1)
    limit = p.shape[0] if max_centers is None else max(1, int(max_centers))
    while len(chosen) < limit:
        i = int(np.argmax(dist))
        if dist[i] < eps:
            break
        chosen.append(i)
        dist = np.minimum(dist, np.linalg.norm(p - p[i], axis=1))
    return p[chosen].copy()


class LocalPolyDesign:
    """Feature map of the local polynomial class for fixed centers.

    Feature ``(i, k)`` at ``x`` is
    ``(x - b_i)^k rho(|x - b_i| / eps) / (sum_i' rho(|x - b_i'| / eps) + floor)``,
    so a model is linear in its coefficient table ``a[i, k]``.
    """

    def __init__(self, centers, eps: float, degree_bound: float, floor: float):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=float))
        if eps <= 0:
            raise ValueError("bandwidth must be positive")
        self.eps = float(eps)
        self.degree_bound = float(degree_bound)
        self.floor = float(floor)
        self.exponents = monomial_exponents(self.centers.shape[1], degree_bound)

    @property
    def n_features(self) -> int:
        return self.centers.shape[0] * len(self.exponents)

    def matrix(self, x) -> np.ndarray:
        """Dense feature matrix of shape ``(m, W * K)``."""
        x = _as_covariates(x, self.centers.shape[1])
        W, K = self.centers.shape[0], len(self.exponents)
        diff = x[:, None, :] - self.centers[None, :, :]
        r = transition(np.linalg.norm(diff, axis=2) / self.eps)  # (m, W)
        denom = r.sum(axis=1, keepdims=True) + self.floor
        with np.errstate(invalid="ignore", divide="ignore"):
            wts = np.where(denom > 0, r / np.where(denom > 0, denom, 1.0), 0.0)
        feats = np.empty((x.shape[0], W, K))
        for c, k in enumerate(self.exponents):
            mono = np.prod(diff ** np.array(k, dtype=float), axis=2)
            feats[:, :, c] = mono * wts
        return feats.reshape(x.shape[0], W * K)

    def fit(self, x, responses, cap: float) -> np.ndarray:
        """Least-squares coefficients for one or many response columns.

        Returns an array of shape ``(R, W, K)``. The minimum-norm solution is
        kept when it respects ``|a| <= cap``; otherwise the box-constrained
        problem is solved exactly by bounded-variable least squares.
        """
        return self.solve(self.matrix(x), responses, cap)

    def solve(self, A: np.ndarray, responses, cap: float) -> np.ndarray:
        """As :meth:`fit`, for a precomputed feature matrix ``A``."""
        Y = np.asarray(responses, dtype=float)
        single = Y.ndim == 1
        Y = Y.reshape(A.shape[0], -1)
        W, K = self.centers.shape[0], len(self.exponents)
        coef = np.zeros((Y.shape[1], A.shape[1]))
        if A.shape[0] == 0:
            return coef.reshape(-1, W, K)
        live = np.flatnonzero(np.any(A != 0.0, axis=0))
        if live.size == 0:
            return coef.reshape(-1, W, K)
        Al = A[:, live]
        sol = np.linalg.lstsq(Al, Y, rcond=None)[0]  # (live, R)
        for r in range(Y.shape[1]):
            a = sol[:, r]
            if np.abs(a).max(initial=0.0) > cap:
                res = lsq_linear(Al, Y[:, r], bounds=(-cap, cap), method="bvls",
                                 tol=1e-12, max_iter=50 * len(live) + 100)
                a = np.clip(res.x, -cap, cap)
            coef[r, live] = a
        out = coef.reshape(-1, W, K)
        return out[:1] if single else out


@dataclass(frozen=True)
class LocalPolyModel:
    """Fitted element of the local polynomial class.

    Attributes
    ----------
    centers : (W, d) array
    coefficients : (W, K) array, one row per center, columns follow ``exponents``
    eps : bandwidth
    degree_bound : strict bound on the total polynomial degree
    floor : additive term in the normalizing denominator
    cap : box constraint on the coefficients
    """

    centers: np.ndarray
    coefficients: np.ndarray
    eps: float
    degree_bound: float
    floor: float
    cap: float

    def __post_init__(self):
        object.__setattr__(self, "centers",
                           np.atleast_2d(np.asarray(self.centers, dtype=float)))
        object.__setattr__(self, "coefficients",
                           np.atleast_2d(np.asarray(self.coefficients, dtype=float)))

    @property
    def exponents(self) -> list[tuple]:
        return monomial_exponents(self.centers.shape[1], self.degree_bound)

    def design(self) -> LocalPolyDesign:
        return LocalPolyDesign(self.centers, self.eps, self.degree_bound, self.floor)

    def __call__(self, x) -> np.ndarray:
        return localpoly_eval(self, x)


def localpoly_eval(model: LocalPolyModel, x) -> np.ndarray:
    """Evaluate a fitted model at covariate points ``x`` (shape ``(m, d)``)."""
    return model.design().matrix(x) @ model.coefficients.ravel()


def localpoly_fit(covariates, responses, centers, eps: float,
                  degree_bound: float, cap: float, floor: float) -> LocalPolyModel:
    """Box-constrained least-squares fit of one response vector."""
    c = np.asarray(centers, dtype=float)
    x = _as_covariates(covariates, c.shape[1] if c.ndim == 2 else 1)
    if x.shape[0] == 0:
        raise ValueError("at least one sample is required")
    design = LocalPolyDesign(centers, eps, degree_bound, floor)
    coef = design.fit(x, np.asarray(responses, dtype=float).reshape(-1), cap)[0]
    return LocalPolyModel(design.centers, coef, eps, degree_bound, floor, cap)


def localpoly_fit_many(design: LocalPolyDesign, covariates, responses,
                       cap: float) -> list[LocalPolyModel]:
    """Fit several response columns on one shared design."""
    coefs = design.fit(covariates, responses, cap)
    return [LocalPolyModel(design.centers, c, design.eps, design.degree_bound,
                           design.floor, cap) for c in coefs]
