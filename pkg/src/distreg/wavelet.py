"""Compactly supported orthonormal wavelet bases on R^d.

The one-dimensional scaling function and mother wavelet are tabulated on a
dyadic grid by the cascade (two-scale) recursion, starting from the values
at the integers, and evaluated elsewhere by linear interpolation. Bases on
R^d are tensor products: level 0 holds the translates of the d-fold scaling
function, and level ``j >= 1`` holds the ``2^d - 1`` mixed products with at
least one mother factor, dilated by ``2^(j-1)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

from .errors import ConfigurationError

_DAUBECHIES_TAPS = {
    2: (
        0.48296291314453414337,
        0.83651630373780790558,
        0.22414386804201338103,
        -0.12940952255126038117,
    ),
    3: (
        0.332670552950082616,
        0.80689150931109257649,
        0.4598775021184915701,
        -0.1350110200102545887,
        -0.085441273882026661693,
        0.035226291885709536603,
    ),
    4: (
        0.23037781330889650086,
        0.71484657055291564709,
        0.63088076792985890788,
        -0.027983769416859854211,
        -0.18703481171909308408,
        0.030841381835560763627,
        0.032883011666885199735,
        -0.010597401785069032105,
    ),
    5: (
        0.16010239797419291448,
        0.60382926979718967054,
        0.72430852843777292773,
        0.13842814590132073151,
        -0.24229488706638203186,
        -0.032244869584638374648,
        0.077571493840045713523,
        -0.0062414902127982742742,
        -0.012580751999081999469,
        0.003335725285473771278,
    ),
    6: (
        0.11154074335010946362,
        0.49462389039845308568,
        0.75113390802109535068,
        0.31525035170919762909,
        -0.22626469396543982008,
        -0.12976686756726193556,
        0.097501605587323049102,
        0.027522865530305728626,
        -0.031582039317486029565,
        0.00055384220116149613925,
        0.0047772575109455106396,
        -0.0010773010853084795649,
    ),
    7: (
        0.07785205408500917902,
        0.39653931948191730654,
        0.72913209084623511992,
        0.46978228740519312247,
        -0.14390600392856497541,
        -0.22403618499387498264,
        0.071309219266830264751,
        0.080612609151083071913,
        -0.03802993693501441358,
        -0.016574541630666880654,
        0.012550998556099840613,
        0.00042957797292136652113,
        -0.0018016407040474909153,
        0.00035371379997452024845,
    ),
    8: (
        0.054415842243104009955,
        0.31287159091429997066,
        0.67563073629728980681,
        0.58535468365420671277,
        -0.015829105256349305667,
        -0.28401554296154692652,
        0.00047248457391328277036,
        0.12874742662047845886,
        -0.01736930100180754617,
        -0.044088253930794751507,
        0.013981027917398281649,
        0.0087460940474057767164,
        -0.0048703529934515743104,
        -0.0003917403733769470463,
        0.00067544940645056936637,
        -0.00011747678412476953373,
    ),
    9: (
        0.038077947363878346589,
        0.24383467461259035373,
        0.6048231236901111119,
        0.65728807805130053808,
        0.13319738582500757619,
        -0.29327378327917490881,
        -0.096840783222976460514,
        0.14854074933810638014,
        0.030725681479333379212,
        -0.067632829061329973676,
        0.00025094711483145195759,
        0.022361662123679097205,
        -0.0047232047577513972779,
        -0.0042815036824634298345,
        0.0018476468830562264766,
        0.00023038576352319596721,
        -0.00025196318894271013697,
        0.000039347320316271599481,
    ),
    10: (
        0.026670057900555553587,
        0.18817680007769148902,
        0.52720118893172558648,
        0.68845903945360356574,
        0.28117234366057746075,
        -0.24984642432731537942,
        -0.1959462743773770435,
        0.12736934033579326008,
        0.09305736460357235116,
        -0.071394147166397087145,
        -0.029457536821875812858,
        0.03321267405934100174,
        0.0036065535669561696554,
        -0.010733175483330575044,
        0.0013953517470529011658,
        0.0019924052951850561172,
        -0.00068585669495971162656,
        -0.00011646685512928545095,
        0.000093588670320069591334,
        -0.000013264202894521244812,
    ),
}

# Hoelder exponents of the Daubechies scaling functions. The integer part
# (or one less, at an integer) bounds the derivative order we tabulate.
_HOLDER = {2: 0.550, 3: 1.088, 4: 1.618, 5: 1.969, 6: 2.189,
           7: 2.460, 8: 2.761, 9: 3.074, 10: 3.361}

SQRT2 = math.sqrt(2.0)


def daubechies_filter(order: int) -> np.ndarray:
    """Scaling filter of the extremal-phase Daubechies wavelet with ``order``
    vanishing moments (``2 * order`` taps summing to sqrt(2))."""
    try:
        return np.array(_DAUBECHIES_TAPS[int(order)], dtype=float)
    except KeyError:
        raise ConfigurationError(
            f"order {order} is outside the embedded filter table "
            f"({min(_DAUBECHIES_TAPS)}..{max(_DAUBECHIES_TAPS)})") from None


def load_filter(path) -> np.ndarray:
    """Read a scaling filter from a text file holding one tap per line."""
    taps = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                taps.append(float(line))
    h = np.array(taps, dtype=float)
    if len(h) < 2 or abs(h.sum() - SQRT2) > 1e-8:
        raise ConfigurationError("filter taps must sum to sqrt(2)")
    return h


def max_derivative_order(order: int) -> int:
    holder = _HOLDER.get(int(order))
    if holder is None:
        return 0
    return int(math.ceil(holder) - 1)


def _integer_values(h: np.ndarray, r: int) -> np.ndarray:
    """Values of the r-th derivative of the scaling function at 0..S.

    They form the eigenvector of the two-scale matrix for eigenvalue 2^-r,
    normalised by the moment identity sum_n (-n)^r phi^(r)(n) = r!.
    """
    S = len(h) - 1
    nodes = np.arange(1, S)
    M = np.zeros((S - 1, S - 1))
    for a, na in enumerate(nodes):
        for b, nb in enumerate(nodes):
            k = 2 * na - nb
            if 0 <= k <= S:
                M[a, b] = SQRT2 * h[k]
    A = np.vstack([M - 2.0 ** (-r) * np.eye(S - 1),
                   ((-nodes.astype(float)) ** r / math.factorial(r))[None, :]])
    rhs = np.zeros(S)
    rhs[-1] = 1.0
    v = np.linalg.lstsq(A, rhs, rcond=None)[0]
    out = np.zeros(S + 1)
    out[1:S] = v
    return out


def _cascade(h: np.ndarray, base: np.ndarray, r: int, depth: int) -> np.ndarray:
    """Refine integer-node values to the grid of spacing 2^-depth."""
    S = len(h) - 1
    T = base
    gain = SQRT2 * 2.0 ** r
    for level in range(1, depth + 1):
        m = 2 ** (level - 1)
        i = np.arange(S * 2 ** level + 1)
        new = np.zeros(len(i))
        for k, hk in enumerate(h):
            idx = i - k * m
            ok = (idx >= 0) & (idx < len(T))
            new[ok] += hk * T[idx[ok]]
        T = gain * new
    return T


def _mother_from_scaling(h: np.ndarray, phi: np.ndarray, r: int,
                         depth: int) -> np.ndarray:
    S = len(h) - 1
    g = np.array([(-1) ** k * h[S - k] for k in range(S + 1)])
    coarse = phi[::2]  # scaling values on the 2^-(depth-1) grid
    m = 2 ** (depth - 1)
    i = np.arange(S * 2 ** depth + 1)
    out = np.zeros(len(i))
    for k, gk in enumerate(g):
        idx = i - k * m
        ok = (idx >= 0) & (idx < len(coarse))
        out[ok] += gk * coarse[idx[ok]]
    return SQRT2 * 2.0 ** r * out


@dataclass(frozen=True, order=True)
class WaveletIndex:
    """Level, tensor type and integer translation of one basis function.

    ``gtype`` holds one bit per axis: 0 for the scaling factor, 1 for the
    mother wavelet. Level 0 carries only the all-scaling type.
    """

    level: int
    gtype: tuple
    shift: tuple

    def __post_init__(self):
        object.__setattr__(self, "gtype", tuple(int(g) for g in self.gtype))
        object.__setattr__(self, "shift", tuple(int(k) for k in self.shift))
        if len(self.gtype) != len(self.shift):
            raise ValueError("gtype and shift must have the same length")
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        mother = any(self.gtype)
        if self.level == 0 and mother:
            raise ValueError("level-0 indices carry the scaling type")
        if self.level > 0 and not mother:
            raise ValueError("level >= 1 indices need a mother factor")

    @property
    def d(self) -> int:
        return len(self.shift)

    @property
    def type_id(self) -> int:
        return sum(g << i for i, g in enumerate(self.gtype))

    @classmethod
    def scaling(cls, *shift: int) -> "WaveletIndex":
        return cls(0, (0,) * len(shift), tuple(shift))

    def __str__(self):
        return f"{self.level}:{''.join(map(str, self.gtype))}:{','.join(map(str, self.shift))}"

    @classmethod
    def parse(cls, text: str) -> "WaveletIndex":
        level, gtype, shift = text.split(":")
        return cls(int(level), tuple(int(c) for c in gtype),
                   tuple(int(k) for k in shift.split(",")))


def level_scale(level: int) -> int:
    """Dilation factor of level ``level`` (1 at levels 0 and 1)."""
    return 1 if level == 0 else 2 ** (level - 1)


def level_types(level: int, d: int) -> list[tuple]:
    if level == 0:
        return [(0,) * d]
    return [g for g in itertools.product((0, 1), repeat=d) if any(g)]


@dataclass(frozen=True, eq=False)
class WaveletBasis:
    """Tabulated Daubechies scaling function and wavelet.

    The scaling function is supported on ``[0, S]`` with ``S = 2*order - 1``;
    tables hold derivatives ``0..regularity`` on the grid ``i * 2^-resolution``.
    """

    order: int
    filter: np.ndarray
    regularity: int
    resolution: int
    phi_table: tuple
    psi_table: tuple
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def support_length(self) -> int:
        return len(self.filter) - 1

    @property
    def support_radius(self) -> float:
        return self.support_length / 2.0

    @property
    def grid_step(self) -> float:
        return 2.0 ** (-self.resolution)

    def _check_deriv(self, deriv: int):
        if deriv > self.regularity:
            raise ConfigurationError(
                f"derivative order {deriv} exceeds tabulated regularity "
                f"{self.regularity}")

    def _interp(self, table: np.ndarray, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        u = t * 2.0 ** self.resolution
        out = np.zeros(t.shape)
        top = self.support_length * 2 ** self.resolution
        inside = (u > 0) & (u < top)
        ui = u[inside]
        i0 = np.floor(ui).astype(np.int64)
        frac = ui - i0
        out[inside] = table[i0] * (1.0 - frac) + table[i0 + 1] * frac
        return out

    def phi(self, t, deriv: int = 0) -> np.ndarray:
        """Scaling function (or a derivative) at ``t``; zero off ``[0, S]``."""
        self._check_deriv(deriv)
        return self._interp(self.phi_table[deriv], t)

    def psi(self, t, deriv: int = 0) -> np.ndarray:
        """Mother wavelet (or a derivative) at ``t``; zero off ``[0, S]``."""
        self._check_deriv(deriv)
        return self._interp(self.psi_table[deriv], t)

    def factor(self, kind: int, t, deriv: int = 0) -> np.ndarray:
        return self.psi(t, deriv) if kind else self.phi(t, deriv)

    def support_box(self, index: WaveletIndex) -> tuple[np.ndarray, np.ndarray]:
        """Rectangle ``I_psi`` containing the support of ``index``."""
        s = level_scale(index.level)
        k = np.array(index.shift, dtype=float)
        return k / s, (k + self.support_length) / s

    def evaluate(self, index: WaveletIndex, x, deriv=None) -> np.ndarray:
        """Evaluate one basis function at points ``x`` of shape ``(m, d)``.

        ``deriv`` is an optional per-axis derivative multi-index.
        """
        x = _as_points(x, index.d)
        s = level_scale(index.level)
        if deriv is None:
            deriv = (0,) * index.d
        out = np.full(x.shape[0], s ** (index.d / 2.0))
        for axis, (g, k, r) in enumerate(zip(index.gtype, index.shift, deriv)):
            out = out * (s ** r) * self.factor(g, s * x[:, axis] - k, r)
        return out

    def constants(self, d: int) -> dict:
        """Measured locality constants of the d-dimensional basis.

        ``C_L``: level-j support rectangles have diameter <= C_L 2^-j.
        ``C_L_prime``: at most this many level-j functions are nonzero at a point.
        ``C_L_dagger``: at most ``C_L_dagger * R^d * 2^(jd)`` level-j rectangles
        meet the ball of radius ``R >= 1``.
        """
        S = self.support_length
        return {
            "C_L": 2.0 * S * math.sqrt(d),
            "C_L_prime": (2 ** d - 1) * S ** d,
            "C_L_dagger": (2 ** d - 1) * (S + 3) ** d,
            "C_R": float(max(np.abs(self.phi_table[0]).max(),
                             np.abs(self.psi_table[0]).max()) ** d),
        }


def _as_points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if d == 1 else x.reshape(1, -1)
    if x.shape[1] != d:
        raise ValueError(f"expected points of dimension {d}, got {x.shape[1]}")
    return x


def build_basis(order: int = 4, regularity: int = 1, resolution: int = 14,
                taps: np.ndarray | None = None) -> WaveletBasis:
    """Tabulate a Daubechies basis by the cascade recursion.

    Parameters
    ----------
    order : int
        Number of vanishing moments of the mother wavelet (2..10).
    regularity : int
        Highest derivative order to tabulate; must not exceed what the
        scaling function actually possesses.
    resolution : int
        Depth of the dyadic evaluation grid (spacing ``2^-resolution``).
    taps : array, optional
        Externally supplied scaling filter (e.g. from :func:`load_filter`).
    """
    if order < 2:
        raise ConfigurationError("order must be at least 2")
    if resolution < 10:
        raise ConfigurationError("resolution must be at least 10")
    if regularity < 0:
        raise ConfigurationError("regularity must be nonnegative")
    h = daubechies_filter(order) if taps is None else np.asarray(taps, float)
    if taps is None and regularity > max_derivative_order(order):
        raise ConfigurationError(
            f"Daubechies order {order} is only "
            f"C^{max_derivative_order(order)}; regularity {regularity} requested")
    phis, psis = [], []
    for r in range(regularity + 1):
        base = _integer_values(h, r)
        phi = _cascade(h, base, r, resolution)
        phis.append(phi)
        psis.append(_mother_from_scaling(h, phi, r, resolution))
    return WaveletBasis(order=int(order), filter=h, regularity=int(regularity),
                        resolution=int(resolution), phi_table=tuple(phis),
                        psi_table=tuple(psis))


def enumerate_indices(basis: WaveletBasis, j: int, d: int, radius: float,
                      center=None) -> list[WaveletIndex]:
    """Level-j indices whose support rectangle meets the ball B(center, radius)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float).reshape(d)
    s = level_scale(j)
    S = basis.support_length
    axes = [np.arange(math.ceil(s * (ca - radius) - S), math.floor(s * (ca + radius)) + 1)
            for ca in c]
    grids = np.meshgrid(*axes, indexing="ij")
    K = np.stack([g.ravel() for g in grids], axis=1)
    # distance from the center to each rectangle [k/s, (k+S)/s]
    gap = np.maximum(np.maximum(K / s - c, c - (K + S) / s), 0.0)
    keep = np.sqrt((gap ** 2).sum(axis=1)) <= radius
    K = K[keep]
    out = []
    for g in level_types(j, d):
        out.extend(WaveletIndex(j, g, tuple(k)) for k in K.tolist())
    return sorted(out)


def index_embedding(basis: WaveletBasis, index: WaveletIndex,
                    radius: float) -> np.ndarray:
    """Affine embedding of an index of Psi_j (ball ``radius``) into [0,1]^(d+1).

    Translations are mapped so that neighbouring shifts are
    ``1 / (2^j radius + S)`` apart; the last coordinate encodes the type.
    """
    s = level_scale(index.level)
    S = basis.support_length
    k = np.array(index.shift, dtype=float)
    span = 2.0 * s * radius + S
    iota = (k + s * radius + S) / span
    ntypes = 2 ** index.d - 1
    t = 0.0 if index.level == 0 or ntypes == 1 else (index.type_id - 1) / (ntypes - 1)
    return np.append(iota, t)


def _level_entries(basis: WaveletBasis, j: int, pts: np.ndarray, deriv, chunk: int):
    """Key layout of level ``j`` over ``pts`` and a generator of per-chunk
    ``(rows, keys, vals)`` for the nonzero basis values."""
    m, d = pts.shape
    if deriv is None:
        deriv = (0,) * d
    s = level_scale(j)
    S = basis.support_length
    types = level_types(j, d)
    u_all = s * pts
    kmin = np.floor(u_all.min(axis=0) - S).astype(np.int64) + 1
    kmax = np.ceil(u_all.max(axis=0)).astype(np.int64)
    base = (kmax - kmin + 1).astype(np.int64)
    strides = np.concatenate([[1], np.cumprod(base)[:-1]]).astype(np.int64)
    span = int(np.prod(base))
    offs = np.arange(S)
    norm = s ** (d / 2.0) * np.prod([s ** r for r in deriv])

    def chunks():
        for start in range(0, m, chunk):
            u = u_all[start:start + chunk]
            mc = u.shape[0]
            K = np.floor(u - S).astype(np.int64)[:, :, None] + 1 + offs  # (mc,d,S)
            t = u[:, :, None] - K
            fac = [[basis.factor(kind, t[:, a, :], deriv[a]) for a in range(d)]
                   for kind in (0, 1)]
            for g in types:
                vals = fac[g[0]][0]
                keys = (K[:, 0, :] - kmin[0]) * strides[0]
                for a in range(1, d):
                    vals = (vals[:, :, None] * fac[g[a]][a][:, None, :]).reshape(mc, -1)
                    ka = (K[:, a, :] - kmin[a]) * strides[a]
                    keys = (keys[:, :, None] + ka[:, None, :]).reshape(mc, -1)
                keys = keys + sum(gi << i for i, gi in enumerate(g)) * span
                nz = vals != 0.0
                r_idx = np.broadcast_to(np.arange(start, start + mc)[:, None], vals.shape)
                yield r_idx[nz], keys[nz], vals[nz] * norm

    def decode(ukeys) -> list:
        tid = ukeys // span
        rem = ukeys % span
        out = []
        for t_i, r_i in zip(tid.tolist(), rem.tolist()):
            shift = [int(r_i // strides[a] % base[a] + kmin[a]) for a in range(d)]
            gtype = tuple((t_i >> a) & 1 for a in range(d))
            out.append(WaveletIndex(j, gtype, tuple(shift)))
        return out

    return chunks(), decode


def _chunk_size(basis: WaveletBasis, d: int, chunk: int | None) -> int:
    # about 2^22 candidate entries per chunk and basis type
    return chunk or max(1, 2 ** 22 // basis.support_length ** d)


def level_matrix(basis: WaveletBasis, j: int, points, deriv=None,
                 chunk: int | None = None):
    """Values of every level-j basis function that is nonzero at some point.

    Returns ``(indices, M)`` where ``M`` is a CSR matrix of shape
    ``(m, len(indices))`` with ``M[i, c] = psi_c(points[i])``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    m, d = pts.shape
    if m == 0:
        return [], sparse.csr_matrix((0, 0))
    parts, decode = _level_entries(basis, j, pts, deriv, _chunk_size(basis, d, chunk))
    rows_l, keys_l, vals_l = zip(*parts)
    rows = np.concatenate(rows_l)
    keys = np.concatenate(keys_l)
    vals = np.concatenate(vals_l)
    ukeys, cols = np.unique(keys, return_inverse=True)
    M = sparse.csr_matrix((vals, (rows, cols)), shape=(m, len(ukeys)))
    return decode(ukeys), M


def level_sums(basis: WaveletBasis, j: int, points, weights,
               chunk: int | None = None) -> tuple[list, np.ndarray]:
    """Weighted sums ``sum_i w_i psi(x_i)`` over the level-j functions hit by
    the points, without forming the full evaluation matrix."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if pts.shape[0] == 0:
        return [], np.zeros(0)
    parts, decode = _level_entries(basis, j, pts, None, _chunk_size(basis, pts.shape[1], chunk))
    acc_k, acc_v = [], []
    for rows, keys, vals in parts:
        uk, inv = np.unique(keys, return_inverse=True)
        acc_k.append(uk)
        acc_v.append(np.bincount(inv, weights=vals * w[rows], minlength=uk.size))
    keys = np.concatenate(acc_k)
    ukeys, inv = np.unique(keys, return_inverse=True)
    sums = np.bincount(inv, weights=np.concatenate(acc_v), minlength=ukeys.size)
    return decode(ukeys), sums


def _quad_nodes(basis: WaveletBasis, index: WaveletIndex, per_axis_level: int):
    s = level_scale(index.level)
    lo, hi = basis.support_box(index)
    n = basis.support_length * 2 ** per_axis_level
    h = 1.0 / (s * 2 ** per_axis_level)
    axes = [lo[a] + (np.arange(n) + 0.5) * h for a in range(index.d)]
    return axes, h


def _default_quad_level(basis: WaveletBasis, d: int) -> int:
    if d == 1:
        return basis.resolution
    # keep the tensor grid near 2^22 nodes
    per_axis = 22.0 / d - math.log2(basis.support_length)
    return max(4, min(basis.resolution, int(per_axis)))


def coefficient(basis: WaveletBasis, index: WaveletIndex, target,
                quad_level: int | None = None) -> float:
    """Wavelet coefficient of a function or of a weighted point set.

    ``target`` is either a vectorised callable taking points of shape
    ``(m, d)`` (integrated by the midpoint rule on the dyadic grid over the
    support rectangle) or a pair ``(points, weights)``, for which the
    empirical coefficient ``sum_i w_i psi(x_i)`` is returned. Any object with
    ``points`` and ``weights`` attributes is accepted as a point set.
    """
    if hasattr(target, "points") and hasattr(target, "weights"):
        target = (target.points, target.weights)
    if isinstance(target, tuple):
        pts, w = target
        pts = _as_points(pts, index.d)
        return float(np.dot(np.asarray(w, float), basis.evaluate(index, pts)))
    if quad_level is None:
        quad_level = _default_quad_level(basis, index.d)
    axes, h = _quad_nodes(basis, index, quad_level)
    s = level_scale(index.level)
    factors = []
    for a, (g, k) in enumerate(zip(index.gtype, index.shift)):
        factors.append(math.sqrt(s) * basis.factor(g, s * axes[a] - k))
    grids = np.meshgrid(*axes, indexing="ij")
    X = np.stack([g.ravel() for g in grids], axis=1)
    fv = np.asarray(target(X), dtype=float).reshape(-1)
    w = factors[0]
    for f in factors[1:]:
        w = np.multiply.outer(w, f)
    return float(np.dot(fv, w.ravel()) * h ** index.d)


def coefficients(basis: WaveletBasis, indices: Iterable[WaveletIndex], target,
                 quad_level: int | None = None) -> dict:
    return {idx: coefficient(basis, idx, target, quad_level) for idx in indices}


def empirical_coefficients(basis: WaveletBasis, points, weights,
                           max_level: int) -> dict:
    """All nonzero coefficients ``sum_i w_i psi(x_i)`` for levels 0..max_level."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    w = np.asarray(weights, dtype=float)
    out = {}
    if pts.shape[0] == 0:
        return out
    for j in range(max_level + 1):
        idx, vals = level_sums(basis, j, pts, w)
        out.update(zip(idx, vals.tolist()))
    return out


def truncated_reconstruction(basis: WaveletBasis, coeffs: Mapping, J: int,
                             x) -> np.ndarray:
    """Evaluate ``sum_{level <= J} c_psi psi(x)`` at points ``x``."""
    if not coeffs:
        pts = np.asarray(x, dtype=float)
        return np.zeros(pts.shape[0] if pts.ndim else 1)
    d = next(iter(coeffs)).d
    pts = _as_points(x, d)
    out = np.zeros(pts.shape[0])
    for j in range(J + 1):
        idx, M = level_matrix(basis, j, pts)
        if not idx:
            continue
        c = np.array([coeffs.get(i, 0.0) for i in idx])
        out += M @ c
    return out


def _inner_1d(basis: WaveletBasis, la: int, ga: int, ka: int,
              lb: int, gb: int, kb: int) -> float:
    sa, sb = level_scale(la), level_scale(lb)
    if sa > sb:
        la, ga, ka, lb, gb, kb = lb, gb, kb, la, ga, ka
        sa, sb = sb, sa
    r = sb // sa
    off = r * ka - kb
    key = (ga, gb, r, off)
    cache = basis._cache.setdefault("inner", {})
    if key not in cache:
        S = basis.support_length
        lo = max(0.0, -off / r)
        hi = min(float(S), (S - off) / r)
        if hi <= lo:
            cache[key] = 0.0
        else:
            h = basis.grid_step / r
            u = lo + np.arange(int(round((hi - lo) / h)) + 1) * h
            vals = basis.factor(ga, u) * basis.factor(gb, r * u + off)
            cache[key] = float(math.sqrt(r) * vals.sum() * h)
    return cache[key]


def inner_product(basis: WaveletBasis, a: WaveletIndex, b: WaveletIndex) -> float:
    """Dyadic-grid quadrature of ``<psi_a, psi_b>`` (product of axis integrals)."""
    if a.d != b.d:
        raise ValueError("indices live in different dimensions")
    out = 1.0
    for axis in range(a.d):
        out *= _inner_1d(basis, a.level, a.gtype[axis], a.shift[axis],
                         b.level, b.gtype[axis], b.shift[axis])
        if out == 0.0:
            break
    return out
