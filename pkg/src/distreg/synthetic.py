"""Ground-truth generators with known conditional laws.

Two constructions mirror the standard lower-bound families for distribution
regression: a baseline density on the cube perturbed by zero-mean bumps in
``(y, x)`` (Euclidean responses), and a sphere whose central chart is pushed
off the sphere by covariate-dependent multi-bumps (manifold responses). A
circle with covariate-dependent radius is provided as a simple smooth family.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .data import Dataset
from .errors import ConfigurationError, DomainError
from .rng import make_rng


def bump_k(t, beta: float) -> np.ndarray:
    """``t^(beta+1) (1-t)^(beta+1)`` on ``(0, 1)``, zero elsewhere."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    tt = np.where(inside, t, 0.5)
    out = np.where(inside, (tt * (1.0 - tt)) ** (beta + 1.0), 0.0)
    return out if out.ndim else float(out)


def bump_k_tilde(t, q: float) -> np.ndarray:
    """Zero-mean bump ``t^q (1-t)^q (t - 1/2)`` on ``(0, 1)``."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    tt = np.where(inside, t, 0.5)
    out = np.where(inside, (tt * (1.0 - tt)) ** q * (tt - 0.5), 0.0)
    return out if out.ndim else float(out)


def _outer_rows(factors: np.ndarray) -> np.ndarray:
    """Row-wise tensor product of per-axis factors ``(m, d, c)`` -> ``(m, c^d)``."""
    out = factors[:, 0, :]
    for i in range(1, factors.shape[1]):
        out = (out[:, :, None] * factors[:, i, None, :]).reshape(out.shape[0], -1)
    return out


def _sup_abs(fn, n: int = 200001) -> float:
    t = np.linspace(0.0, 1.0, n)
    return float(np.abs(fn(t)).max())


def sphere_chart(z, d_Y: int, D_Y: int) -> np.ndarray:
    """Map the unit ball of R^d_Y onto the central cap of the sphere of
    radius sqrt(2): ``z -> (z, sqrt(2 - |z|^2), 0, ..., 0)``."""
    if D_Y < d_Y + 1:
        raise ConfigurationError("D_Y must be at least d_Y + 1")
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0 or (z.ndim == 1 and d_Y > 1 and z.shape[0] == d_Y)
    Z = z.reshape(-1, d_Y)
    r2 = (Z ** 2).sum(axis=1)
    if np.any(r2 > 1.0 + 1e-12):
        raise DomainError("latent point outside the unit ball")
    out = np.zeros((Z.shape[0], D_Y))
    out[:, :d_Y] = Z
    out[:, d_Y] = np.sqrt(2.0 - np.minimum(r2, 1.0))
    return out[0] if scalar else out


def _cap_fraction(d_Y: int, theta0: float = math.pi / 4) -> float:
    """Fraction of the d_Y-sphere's area with polar angle below ``theta0``."""
    if d_Y == 1:
        return theta0 / math.pi
    t = np.linspace(0.0, math.pi, 200001)
    dens = np.sin(t) ** (d_Y - 1)
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2 * np.diff(t))])
    return float(np.interp(theta0, t, cdf) / cdf[-1])


def _polar_inverse_cdf(d_Y: int, lo: float, hi: float):
    """Sampler of the polar angle on ``[lo, hi]`` with density ``sin^(d_Y-1)``."""
    if d_Y == 1:
        return lambda u: lo + (hi - lo) * u
    if d_Y == 2:
        clo, chi = math.cos(lo), math.cos(hi)
        return lambda u: np.arccos(clo - u * (clo - chi))
    t = np.linspace(lo, hi, 100001)
    dens = np.sin(t) ** (d_Y - 1)
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2 * np.diff(t))])
    cdf /= cdf[-1]
    return lambda u: np.interp(u, cdf, t)


def _unit_directions(rng, m: int, d: int) -> np.ndarray:
    if d == 1:
        return rng.choice([-1.0, 1.0], size=(m, 1))
    v = rng.standard_normal((m, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _sphere_points_from_angles(theta, dirs, d_Y: int, D_Y: int) -> np.ndarray:
    out = np.zeros((len(theta), D_Y))
    out[:, :d_Y] = math.sqrt(2.0) * np.sin(theta)[:, None] * dirs
    out[:, d_Y] = math.sqrt(2.0) * np.cos(theta)
    return out


# ---------------------------------------------------------------------------
# Euclidean responses


@dataclass(frozen=True, eq=False)
class BumpDensityGenerator:
    """Baseline density on ``[-1, 1]^D_Y`` plus covariate-dependent bumps.

    The conditional density is
    ``nu0(y) + amplitude * sum_xi omega[xi] psi_xi(y, x)`` where each
    ``psi_xi`` is a product of zero-mean bumps living on a grid of ``m1`` cells
    per response axis and ``m2`` cells per covariate axis. Covariates are
    uniform on ``[0, 1]^d_X`` (padded with zeros up to ``D_X``).

    Parameters
    ----------
    omega : array of shape ``(m1,)*D_Y + (m2,)*d_X`` with entries in {0, 1}.
    amplitude_scale : multiplier on the natural amplitude ``m1^-alpha_Y``.
    """

    D_Y: int
    d_X: int
    alpha_Y: float
    alpha_X: float
    gamma: float
    m1: int
    m2: int
    omega: np.ndarray
    amplitude_scale: float = 1.0
    D_X: int | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        shape = (self.m1,) * self.D_Y + (self.m2,) * self.d_X
        om = np.asarray(self.omega, dtype=float)
        if om.size == 1 and om.shape != shape:
            om = np.full(shape, float(om.ravel()[0]))
        if om.shape != shape:
            raise ConfigurationError(f"omega must have shape {shape}, got {om.shape}")
        object.__setattr__(self, "omega", om)
        if self.D_X is None:
            object.__setattr__(self, "D_X", self.d_X)
        if self.D_X < self.d_X:
            raise ConfigurationError("D_X must be at least d_X")
        if self.amplitude * self.bump_sup > self.nu0_floor:
            raise ConfigurationError(
                "bump amplitude too large: the conditional density would turn "
                "negative; lower amplitude_scale or raise m1")

    @classmethod
    def from_sample_size(cls, n: int, D_Y: int, d_X: int, alpha_Y: float,
                         alpha_X: float, gamma: float, b: float = 1.0,
                         omega=1.0, seed=None, **kw) -> "BumpDensityGenerator":
        """Grid sizes from the sample-size schedule
        ``m1 = ceil(b n^(1/(2 aY + D_Y + aY dX / aX)))`` and
        ``m2 = ceil(b n^(1/(2 aX + dX + aX D_Y / aY)))``.

        ``omega`` may be a scalar (constant tensor), an array, or ``"random"``
        (fair coin flips from ``seed``).
        """
        m1 = math.ceil(b * n ** (1.0 / (2 * alpha_Y + D_Y + alpha_Y * d_X / alpha_X)))
        m2 = math.ceil(b * n ** (1.0 / (2 * alpha_X + d_X + alpha_X * D_Y / alpha_Y)))
        shape = (m1,) * D_Y + (m2,) * d_X
        if isinstance(omega, str) and omega == "random":
            omega = make_rng(0 if seed is None else seed).integers(0, 2, size=shape)
        return cls(D_Y, d_X, alpha_Y, alpha_X, gamma, m1, m2, omega, **kw)

    # exponents of the baseline and of the bumps
    @property
    def p(self) -> float:
        return max(self.alpha_Y, self.gamma) + 1.0

    @property
    def q(self) -> float:
        return max(self.alpha_Y, self.alpha_X, self.gamma) + 1.0

    @property
    def amplitude(self) -> float:
        return self.amplitude_scale * (1.0 / self.m1) ** self.alpha_Y

    @property
    def nu0_normalizer(self) -> float:
        """``int_{-1}^{1} (1 - t^2)^p dt`` for one axis."""
        p = self.p
        return float(special.beta(p + 1, p + 1) * 2.0 ** (2 * p + 1))

    @property
    def bump_sup(self) -> float:
        kmax = _sup_abs(lambda t: bump_k_tilde(t, self.q))
        return kmax ** (self.D_Y + self.d_X)

    @property
    def nu0_floor(self) -> float:
        """Smallest baseline value over the union of bump supports."""
        corner = np.full(self.D_Y, 1.0 / math.sqrt(2.0 * self.D_Y))
        return float(self.nu0(corner[None, :])[0])

    def nu0(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(-1, self.D_Y)
        inside = np.all(np.abs(y) <= 1.0, axis=1)
        yy = np.clip(y, -1.0, 1.0)
        vals = np.prod((1.0 - yy ** 2) ** self.p, axis=1) / self.nu0_normalizer ** self.D_Y
        return np.where(inside, vals, 0.0)

    def _y_args(self, y):
        y = np.asarray(y, dtype=float).reshape(-1, self.D_Y)
        return self.m1 * math.sqrt(self.D_Y / 2.0) * y + self.m1 / 2.0

    def _x_args(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, self.D_X)[:, :self.d_X]
        return self.m2 * math.sqrt(2.0 * self.d_X) * x

    def y_bump_factors(self, y) -> np.ndarray:
        """Per-axis values ``k~(arg - xi)`` for xi = 0..m1-1, shape ``(m, D_Y, m1)``."""
        a = self._y_args(y)
        return bump_k_tilde(a[:, :, None] - np.arange(self.m1), self.q)

    def x_bump_factors(self, x) -> np.ndarray:
        a = self._x_args(x)
        return bump_k_tilde(a[:, :, None] - np.arange(self.m2), self.q)

    def _x_weights(self, x) -> np.ndarray:
        """``sum_xi2 omega[xi1, xi2] prod_i k~(x_i - xi2_i)``, shape ``(m, m1^D_Y)``."""
        T = _outer_rows(self.x_bump_factors(x))
        om = self.omega.reshape(self.m1 ** self.D_Y, self.m2 ** self.d_X)
        return T @ om.T

    def perturbation(self, y, x) -> np.ndarray:
        """``sum_xi omega[xi] psi_xi(y, x)`` (without the amplitude)."""
        return np.sum(_outer_rows(self.y_bump_factors(y)) * self._x_weights(x), axis=1)

    def density(self, y, x) -> np.ndarray:
        """Conditional density ``nu_omega(y | x)``; ``y`` and ``x`` broadcast row-wise."""
        y = np.asarray(y, dtype=float).reshape(-1, self.D_Y)
        x = np.asarray(x, dtype=float).reshape(-1, self.D_X)
        if x.shape[0] == 1 and y.shape[0] > 1:
            x = np.repeat(x, y.shape[0], axis=0)
        return self.nu0(y) + self.amplitude * self.perturbation(y, x)

    @property
    def envelope(self) -> float:
        """Bound on ``nu_omega / nu0`` used by the rejection sampler."""
        return 1.0 + self.amplitude * self.bump_sup / self.nu0_floor

    def _propose(self, rng, m: int) -> np.ndarray:
        return 2.0 * rng.beta(self.p + 1, self.p + 1, size=(m, self.D_Y)) - 1.0

    def sample_conditional(self, x, rng) -> np.ndarray:
        """One response per covariate row by rejection against the baseline."""
        x = np.asarray(x, dtype=float).reshape(-1, self.D_X)
        m = x.shape[0]
        out = np.empty((m, self.D_Y))
        todo = np.arange(m)
        M = self.envelope
        while todo.size:
            y = self._propose(rng, todo.size)
            u = rng.random(todo.size)
            ratio = self.density(y, x[todo]) / np.maximum(self.nu0(y), 1e-300)
            ok = u * M <= ratio
            out[todo[ok]] = y[ok]
            todo = todo[~ok]
        return out

    def sample_covariates(self, rng, n: int) -> np.ndarray:
        X = np.zeros((n, self.D_X))
        X[:, :self.d_X] = rng.random((n, self.d_X))
        return X

    def coefficient_tables(self, basis, indices) -> tuple[np.ndarray, np.ndarray]:
        """Baseline coefficients and bump coefficients of each response wavelet.

        Returns ``(base, bump)`` with ``base[c] = int psi_c nu0`` and
        ``bump[c, xi1] = int psi_c(y) prod_i k~(arg_i - xi1_i) dy``.
        """
        from .wavelet import coefficient

        key = ("tables", id(basis), tuple(indices))
        if key in self._cache:
            return self._cache[key]
        base = np.array([coefficient(basis, idx, self.nu0) for idx in indices])
        cells = list(itertools.product(range(self.m1), repeat=self.D_Y))
        bump = np.zeros((len(indices), len(cells)))
        for c_i, xi in enumerate(cells):
            xi = np.array(xi)

            def f(y, xi=xi):
                a = self._y_args(y)
                return np.prod(bump_k_tilde(a - xi, self.q), axis=1)

            for r, idx in enumerate(indices):
                lo, hi = basis.support_box(idx)
                # skip wavelets whose support misses the cell
                clo = (xi - self.m1 / 2.0) / (self.m1 * math.sqrt(self.D_Y / 2.0))
                chi = clo + 1.0 / (self.m1 * math.sqrt(self.D_Y / 2.0))
                if np.any(hi <= clo) or np.any(lo >= chi):
                    continue
                bump[r, c_i] = coefficient(basis, idx, f)
        self._cache[key] = (base, bump)
        return base, bump

    def truth_coefficients(self, basis, indices, x) -> np.ndarray:
        """Exact coefficients ``int psi_c(y) nu_omega(y | x) dy``, shape ``(m, C)``."""
        base, bump = self.coefficient_tables(basis, indices)
        w = self._x_weights(np.asarray(x, dtype=float).reshape(-1, self.D_X))
        return base[None, :] + self.amplitude * w @ bump.T


def sample_regime1(gen: BumpDensityGenerator, n: int, seed) -> Dataset:
    """Draw ``n`` pairs: uniform covariates, responses by rejection sampling."""
    rng = make_rng(seed)
    if n == 0:
        return Dataset.empty(gen.D_X, gen.D_Y, gen.d_X, gen.D_Y)
    X = gen.sample_covariates(rng, n)
    Y = gen.sample_conditional(X, rng)
    return Dataset(X, Y, d_X=gen.d_X, d_Y=gen.D_Y)


# ---------------------------------------------------------------------------
# Manifold responses


@dataclass(frozen=True, eq=False)
class ManifoldFamilyGenerator:
    """Sphere of radius sqrt(2) whose central chart carries covariate bumps.

    The central chart ``G_omega(z, x) = G0(z) + g_omega(z, x) e_{d_Y+1}`` covers
    the cap of polar angle ``<= pi/4``; bumps vanish for ``|z| >= 1/sqrt(2)``.
    With probability equal to the cap's area fraction a response is drawn from
    the chart (latent law ``nu0`` making the image uniform on the cap),
    otherwise uniformly from the rest of the sphere. Covariates are uniform
    on ``[-1, 1]^d_X`` padded with zeros up to ``D_X``.
    """

    d_Y: int
    D_Y: int
    d_X: int
    D_X: int
    beta_Y: float
    beta_X: float
    m1: int
    m2: int
    omega: np.ndarray

    def __post_init__(self):
        if self.D_Y < self.d_Y + 1:
            raise ConfigurationError("D_Y must be at least d_Y + 1")
        if self.D_X < self.d_X:
            raise ConfigurationError("D_X must be at least d_X")
        shape = (self.m1,) * self.d_Y + (self.m2,) * self.d_X
        om = np.asarray(self.omega, dtype=float)
        if om.size == 1 and om.shape != shape:
            om = np.full(shape, float(om.ravel()[0]))
        if om.shape != shape:
            raise ConfigurationError(f"omega must have shape {shape}, got {om.shape}")
        object.__setattr__(self, "omega", om)

    @classmethod
    def flat(cls, d_Y: int = 1, D_Y: int = 3, d_X: int = 1, D_X: int = 1,
             beta_Y: float = 2.0, beta_X: float = 2.0) -> "ManifoldFamilyGenerator":
        """The unperturbed sphere (omega identically zero)."""
        return cls(d_Y, D_Y, d_X, D_X, beta_Y, beta_X, 1, 1, 0.0)

    @property
    def chart_weight(self) -> float:
        """Probability of drawing from the central chart (area fraction)."""
        return _cap_fraction(self.d_Y)

    @property
    def nu0_normalizer(self) -> float:
        """Integral of ``sqrt(det J^T J) = sqrt(2 / (2 - |z|^2))`` over the unit ball."""
        d = self.d_Y
        r = np.linspace(0.0, 1.0, 200001)
        shell = d * math.pi ** (d / 2) / math.gamma(d / 2 + 1) * r ** (d - 1)
        f = shell * np.sqrt(2.0 / (2.0 - r ** 2))
        return float(np.sum((f[1:] + f[:-1]) / 2 * np.diff(r)))

    def nu0(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float).reshape(-1, self.d_Y)
        r2 = (z ** 2).sum(axis=1)
        return np.where(r2 <= 1.0, np.sqrt(2.0 / (2.0 - np.minimum(r2, 1.0))), 0.0) \
            / self.nu0_normalizer

    def g_omega(self, z, x) -> np.ndarray:
        """Multi-bump height ``sum_xi m1^-beta_Y omega[xi] psi_xi(z, x)``."""
        z = np.asarray(z, dtype=float).reshape(-1, self.d_Y)
        x = np.asarray(x, dtype=float).reshape(-1, self.D_X)[:, :self.d_X]
        if x.shape[0] == 1 and z.shape[0] > 1:
            x = np.repeat(x, z.shape[0], axis=0)
        az = self.m1 * math.sqrt(self.d_Y / 2.0) * z + self.m1 / 2.0
        ax = self.m2 * math.sqrt(self.d_X / 2.0) * x + self.m2 / 2.0
        fz = bump_k(az[:, :, None] - np.arange(self.m1), self.beta_Y)
        fx = bump_k(ax[:, :, None] - np.arange(self.m2), self.beta_Y)
        F = _outer_rows(fz)
        G = _outer_rows(fx)
        om = self.omega.reshape(self.m1 ** self.d_Y, self.m2 ** self.d_X)
        w = np.einsum("ma,ab,mb->m", F, om, G)
        return self.m1 ** (-self.beta_Y) * w

    def chart(self, z, x) -> np.ndarray:
        """Perturbed chart ``G_omega(z, x)``."""
        z = np.asarray(z, dtype=float).reshape(-1, self.d_Y)
        out = sphere_chart(z, self.d_Y, self.D_Y).reshape(-1, self.D_Y)
        out[:, self.d_Y] += self.g_omega(z, x)
        return out

    def sample_covariates(self, rng, n: int) -> np.ndarray:
        X = np.zeros((n, self.D_X))
        X[:, :self.d_X] = rng.uniform(-1.0, 1.0, size=(n, self.d_X))
        return X

    def sample_latent(self, rng, m: int) -> np.ndarray:
        """Draws from ``nu0`` (the chart pre-image of the uniform cap law)."""
        theta = _polar_inverse_cdf(self.d_Y, 0.0, math.pi / 4)(rng.random(m))
        dirs = _unit_directions(rng, m, self.d_Y)
        return math.sqrt(2.0) * np.sin(theta)[:, None] * dirs

    def sample_conditional(self, x, rng) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.D_X)
        m = x.shape[0]
        use_chart = rng.random(m) < self.chart_weight
        z = self.sample_latent(rng, m)
        theta = _polar_inverse_cdf(self.d_Y, math.pi / 4, math.pi)(rng.random(m))
        dirs = _unit_directions(rng, m, self.d_Y)
        cap = _sphere_points_from_angles(theta, dirs, self.d_Y, self.D_Y)
        out = cap
        if np.any(use_chart):
            out[use_chart] = self.chart(z[use_chart], x[use_chart])
        return out

    def truth_measure(self, x, resolution: int = 4096) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature ``(points, weights)`` of the conditional law at ``x``.

        Polar angles sit at quantile midpoints of their laws on the chart and
        on the rest of the sphere; for ``d_Y = 1`` both directions are used,
        otherwise directions come from a fixed-seed stream.
        """
        if resolution < 16:
            raise ConfigurationError("resolution must be at least 16")
        u = (np.arange(resolution) + 0.5) / resolution
        d = self.d_Y
        if d == 1:
            dirs = np.repeat([[-1.0], [1.0]], resolution, axis=0)
            u = np.tile(u, 2)
        else:
            dirs = _unit_directions(make_rng(0, resolution), resolution, d)
        theta_c = _polar_inverse_cdf(d, 0.0, math.pi / 4)(u)
        z = math.sqrt(2.0) * np.sin(theta_c)[:, None] * dirs
        chart = self.chart(np.clip(z, -1.0, 1.0), np.asarray(x, float).reshape(1, -1))
        theta_r = _polar_inverse_cdf(d, math.pi / 4, math.pi)(u)
        rest = _sphere_points_from_angles(theta_r, dirs, d, self.D_Y)
        w = self.chart_weight
        m = u.size
        return (np.vstack([chart, rest]),
                np.concatenate([np.full(m, w / m), np.full(m, (1.0 - w) / m)]))

    def ground_truth(self, x, resolution: int = 64) -> np.ndarray:
        """Dense point cloud of the response manifold at covariate ``x``."""
        if resolution < 16:
            raise ConfigurationError("resolution must be at least 16")
        d = self.d_Y
        g = np.linspace(-1.0, 1.0, resolution)
        Z = np.stack([a.ravel() for a in np.meshgrid(*([g] * d), indexing="ij")], axis=1)
        Z = Z[(Z ** 2).sum(axis=1) <= 1.0]
        chart_pts = self.chart(Z, np.asarray(x, float).reshape(1, -1))
        cap = _cube_sphere_grid(d + 1, 4 * resolution)
        cap = cap[cap[:, d] <= 1.0]  # polar angle at least pi/4
        cap_pts = np.zeros((cap.shape[0], self.D_Y))
        cap_pts[:, :d + 1] = cap
        return np.vstack([chart_pts, cap_pts])


def _cube_sphere_grid(k: int, resolution: int) -> np.ndarray:
    """Grid on the boundary of ``[-1, 1]^k`` projected onto the radius-sqrt(2) sphere."""
    if k == 2:
        t = np.linspace(0.0, 2 * math.pi, 2 * resolution, endpoint=False)
        return math.sqrt(2.0) * np.stack([np.sin(t), np.cos(t)], axis=1)
    g = np.linspace(-1.0, 1.0, resolution)
    faces = []
    for axis in range(k):
        for sign in (-1.0, 1.0):
            rest = np.meshgrid(*([g] * (k - 1)), indexing="ij")
            pts = np.zeros((rest[0].size, k))
            cols = [c for c in range(k) if c != axis]
            for c, r in zip(cols, rest):
                pts[:, c] = r.ravel()
            pts[:, axis] = sign
            faces.append(pts)
    P = np.unique(np.vstack(faces), axis=0)
    return math.sqrt(2.0) * P / np.linalg.norm(P, axis=1, keepdims=True)


def sample_manifold_family(gen, n: int, seed) -> Dataset:
    """Draw ``n`` covariate/response pairs from a manifold-valued family."""
    rng = make_rng(seed)
    if n == 0:
        return Dataset.empty(gen.D_X, gen.D_Y, gen.d_X, gen.d_Y)
    X = gen.sample_covariates(rng, n)
    Y = gen.sample_conditional(X, rng)
    return Dataset(X, Y, d_X=gen.d_X, d_Y=gen.d_Y)


def ground_truth_manifold(gen, x, resolution: int = 64) -> np.ndarray:
    return gen.ground_truth(x, resolution)


@dataclass(frozen=True)
class CircleFamily:
    """Circle of radius ``1 + amplitude * sin(pi x)`` with ``x ~ U[-1, 1]``.

    Responses are uniform in angle; extra response coordinates are zero.
    """

    amplitude: float = 0.2
    D_Y: int = 2
    d_Y: int = 1
    d_X: int = 1
    D_X: int = 1

    def radius(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.D_X)[:, 0]
        return 1.0 + self.amplitude * np.sin(math.pi * x)

    def sample_covariates(self, rng, n: int) -> np.ndarray:
        X = np.zeros((n, self.D_X))
        X[:, 0] = rng.uniform(-1.0, 1.0, size=n)
        return X

    def sample_conditional(self, x, rng) -> np.ndarray:
        r = self.radius(x)
        t = rng.uniform(0.0, 2 * math.pi, size=r.shape[0])
        out = np.zeros((r.shape[0], self.D_Y))
        out[:, 0] = r * np.cos(t)
        out[:, 1] = r * np.sin(t)
        return out

    def ground_truth(self, x, resolution: int = 64) -> np.ndarray:
        if resolution < 16:
            raise ConfigurationError("resolution must be at least 16")
        r = float(self.radius(x)[0])
        t = np.linspace(0.0, 2 * math.pi, resolution, endpoint=False)
        out = np.zeros((resolution, self.D_Y))
        out[:, 0] = r * np.cos(t)
        out[:, 1] = r * np.sin(t)
        return out

    def distance(self, y, x) -> np.ndarray:
        """Distance from each response to the true circle at its covariate."""
        y = np.asarray(y, dtype=float).reshape(-1, self.D_Y)
        return np.abs(np.linalg.norm(y, axis=1) - self.radius(x))
