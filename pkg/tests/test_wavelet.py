import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from distreg.errors import ConfigurationError
from distreg.wavelet import (WaveletIndex, build_basis, coefficient, coefficients,
                             daubechies_filter, empirical_coefficients, enumerate_indices,
                             index_embedding, inner_product, level_matrix, level_scale,
                             level_sums, load_filter, truncated_reconstruction)


def midpoint(f, lo, hi, m=400000):
    t = lo + (np.arange(m) + 0.5) * (hi - lo) / m
    return float(f(t).sum() * (hi - lo) / m)


# construction ----------------------------------------------------------------

@pytest.mark.parametrize("order", range(2, 11))
def test_filter_taps_sum_to_sqrt2(order):
    h = daubechies_filter(order)
    assert len(h) == 2 * order
    assert abs(h.sum() - math.sqrt(2)) < 1e-12
    # double-shift orthogonality of the filter
    for s in range(1, order):
        assert abs(np.dot(h[2 * s:], h[:-2 * s])) < 1e-10


def test_unsupported_order_raises():
    with pytest.raises(ConfigurationError):
        daubechies_filter(11)
    with pytest.raises(ConfigurationError):
        build_basis(order=1)
    with pytest.raises(ConfigurationError):
        build_basis(order=4, resolution=8)


def test_regularity_beyond_smoothness_raises():
    with pytest.raises(ConfigurationError):
        build_basis(order=2, regularity=1)


def test_derivative_beyond_table_raises(basis):
    with pytest.raises(ConfigurationError):
        basis.phi(0.5, deriv=2)


def test_scaling_function_integrates_to_one(basis):
    h = basis.grid_step
    assert abs(basis.phi_table[0].sum() * h - 1.0) < 1e-8


def test_translates_orthogonal(basis):
    a, b = WaveletIndex.scaling(0), WaveletIndex.scaling(1)
    assert abs(inner_product(basis, a, b)) < 1e-6
    # independent check with a plain midpoint rule
    val = midpoint(lambda t: basis.phi(t) * basis.phi(t - 1), 0, 8)
    assert abs(val) < 1e-6


def test_vanishing_moments(basis):
    S = basis.support_length
    for p in range(basis.order):
        assert abs(midpoint(lambda t: t ** p * basis.psi(t), 0, S)) < 1e-6


def test_derivative_table_matches_finite_difference(basis):
    t = np.linspace(0.3, 6.7, 41)
    h = 1e-4
    fd = (basis.phi(t + h) - basis.phi(t - h)) / (2 * h)
    # the derivative is only about 0.6-Hoelder, so the difference error is O(h^0.6)
    assert np.max(np.abs(fd - basis.phi(t, deriv=1))) < 2e-2


def test_load_filter_roundtrip(tmp_path):
    h = daubechies_filter(3)
    p = tmp_path / "taps.txt"
    p.write_text("# db3\n" + "\n".join(repr(float(v)) for v in h) + "\n")
    assert np.array_equal(load_filter(p), h)
    b = build_basis(order=3, regularity=0, resolution=10, taps=load_filter(p))
    assert abs(b.phi_table[0].sum() * b.grid_step - 1.0) < 1e-8
    bad = tmp_path / "bad.txt"
    bad.write_text("1.0\n1.0\n")
    with pytest.raises(ConfigurationError):
        load_filter(bad)


# indices ----------------------------------------------------------------------

def test_index_parse_roundtrip():
    idx = WaveletIndex(3, (1, 0), (-4, 7))
    assert WaveletIndex.parse(str(idx)) == idx
    with pytest.raises(ValueError):
        WaveletIndex(0, (1,), (0,))
    with pytest.raises(ValueError):
        WaveletIndex(2, (0,), (0,))


def test_enumerate_level0_counts(basis):
    # support [k, k + S] meets [-1, 1] iff -1 - S <= k <= 1
    S = basis.support_length
    got = {i.shift[0] for i in enumerate_indices(basis, 0, 1, 1.0)}
    assert got == set(range(-1 - S, 2))


def test_enumerate_count_bound(basis):
    c = basis.constants(1)
    assert len(enumerate_indices(basis, 3, 1, 1.0)) <= c["C_L_dagger"] * 2 ** 3


def test_enumerate_matches_brute_force_2d(basis):
    j, R, S = 2, 1.0, basis.support_length
    s = level_scale(j)
    brute = set()
    for k in itertools.product(range(-20, 21), repeat=2):
        lo = np.array(k) / s
        hi = (np.array(k) + S) / s
        gap = np.maximum(np.maximum(lo, -hi), 0.0)
        if np.linalg.norm(gap) <= R:
            for g in [(0, 1), (1, 0), (1, 1)]:
                brute.add(WaveletIndex(j, g, k))
    assert set(enumerate_indices(basis, j, 2, R)) == brute


def test_enumerate_with_center(basis):
    c = np.array([0.7])
    shifted = enumerate_indices(basis, 2, 1, 0.5, center=c)
    for idx in shifted:
        lo, hi = basis.support_box(idx)
        assert lo[0] - 0.5 <= c[0] <= hi[0] + 0.5


def test_support_diameter_bound(basis):
    C_L = basis.constants(2)["C_L"]
    for j in range(5):
        for idx in enumerate_indices(basis, j, 2, 1.0)[:20]:
            lo, hi = basis.support_box(idx)
            assert np.linalg.norm(hi - lo) <= C_L * 2.0 ** (-j) + 1e-12


def test_index_embedding_in_unit_cube(basis):
    for j in range(4):
        embs = [index_embedding(basis, i, 1.0) for i in enumerate_indices(basis, j, 2, 1.0)]
        E = np.array(embs)
        assert E.min() >= 0 and E.max() <= 1
        assert len({tuple(e) for e in embs}) == len(embs)


# evaluation and coefficients ------------------------------------------------------

def test_level_matrix_matches_evaluate(basis, rng):
    pts = rng.uniform(-1, 1, size=(50, 2))
    for j in range(3):
        idx, M = level_matrix(basis, j, pts)
        M = M.toarray()
        for c, i in enumerate(idx[:30]):
            assert np.allclose(M[:, c], basis.evaluate(i, pts), atol=1e-14)
        # every nonzero basis function is listed
        for i in enumerate_indices(basis, j, 2, 1.5)[:200]:
            if i not in idx:
                assert np.all(basis.evaluate(i, pts) == 0)


@pytest.mark.parametrize("d", [1, 3])
def test_level_sums_match_matrix(basis, rng, d):
    pts = rng.uniform(-1, 1, size=(300, d))
    w = rng.normal(size=300)
    for j in (0, 2):
        idx, M = level_matrix(basis, j, pts)
        idx2, sums = level_sums(basis, j, pts, w, chunk=37)
        assert idx2 == idx
        assert np.allclose(sums, M.T @ w, rtol=0, atol=1e-12)


def test_locality_outside_support_is_zero(basis, rng):
    idx = WaveletIndex(3, (1,), (2,))
    lo, hi = basis.support_box(idx)
    outside = np.concatenate([rng.uniform(lo[0] - 3, lo[0], 50), rng.uniform(hi[0], hi[0] + 3, 50)])
    assert np.all(basis.evaluate(idx, outside[:, None]) == 0.0)


def test_coefficient_of_constant(basis):
    one = lambda y: np.ones(y.shape[0])  # noqa: E731
    assert abs(coefficient(basis, WaveletIndex.scaling(-3), one) - 1.0) < 1e-6
    for j in (1, 2, 4):
        assert abs(coefficient(basis, WaveletIndex(j, (1,), (0,)), one)) < 1e-6


def test_coefficient_of_sine_matches_refined_quadrature(basis):
    idx = WaveletIndex(4, (1,), (3,))
    f = lambda y: np.sin(y[:, 0])  # noqa: E731
    lo, hi = basis.support_box(idx)
    ref = midpoint(lambda t: np.sin(t) * basis.evaluate(idx, t[:, None]), lo[0], hi[0], 2_000_000)
    assert abs(coefficient(basis, idx, f) - ref) < 1e-6


def test_empirical_coefficient_matches_point_set(basis, rng):
    pts = rng.normal(size=(30, 1)) * 0.3
    w = np.full(30, 1 / 30)
    emp = empirical_coefficients(basis, pts, w, 3)
    for idx in list(emp)[:25]:
        assert abs(emp[idx] - coefficient(basis, idx, (pts, w))) < 1e-13


def test_reconstruction_of_constant(basis):
    idx = enumerate_indices(basis, 0, 1, 3.0)
    c = coefficients(basis, idx, lambda y: np.ones(y.shape[0]))
    x = np.linspace(-1, 1, 21)[:, None]
    assert np.max(np.abs(truncated_reconstruction(basis, c, 0, x) - 1)) < 1e-5
    assert np.all(truncated_reconstruction(basis, {}, 3, x) == 0)


def test_reconstruction_error_shrinks_with_level(basis):
    f = lambda y: np.cos(2 * y[:, 0])  # noqa: E731
    x = np.linspace(-1, 1, 201)[:, None]
    errs = []
    for J in (3, 4):
        idx = [i for j in range(J + 1) for i in enumerate_indices(basis, j, 1, 1.2)]
        c = coefficients(basis, idx, f)
        errs.append(np.max(np.abs(truncated_reconstruction(basis, c, J, x) - f(x))))
    assert errs[0] / errs[1] >= 1.5


def test_parseval_increasing_and_bounded(basis):
    f = lambda y: np.exp(-8 * y[:, 0] ** 2)  # noqa: E731
    total = math.sqrt(math.pi / 16)  # int exp(-16 t^2) dt
    energies = []
    acc = 0.0
    for j in range(6):
        c = coefficients(basis, enumerate_indices(basis, j, 1, 2.0), f)
        acc += sum(v * v for v in c.values())
        energies.append(acc)
    assert all(b >= a for a, b in zip(energies, energies[1:]))
    assert energies[-1] <= total + 1e-6


@given(st.integers(0, 5), st.integers(-6, 6), st.integers(0, 5), st.integers(-6, 6))
def test_orthonormality_property(j1, k1, j2, k2):
    b = _BASIS
    a = WaveletIndex(j1, (int(j1 > 0),), (k1,))
    c = WaveletIndex(j2, (int(j2 > 0),), (k2,))
    assert abs(inner_product(b, a, c) - float(a == c)) <= 1e-5


_BASIS = build_basis(order=4, regularity=1, resolution=14)
