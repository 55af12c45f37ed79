"""Alternating least-squares / Stiefel-gradient fitting of local charts.

A chart reconstructs responses ``T`` from tangent coordinates
``u = (Y - y0) V`` through a design ``F(u)`` that is linear in its
coefficients. Coefficients are solved exactly for a fixed frame ``V``; the
frame then takes a retracted gradient step with monotone backtracking.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.optimize import lsq_linear


def polar_retraction(M: np.ndarray) -> np.ndarray:
    """Closest matrix with orthonormal columns (polar factor)."""
    U, _, Vt = np.linalg.svd(M, full_matrices=False)
    return U @ Vt


def pca_frame(dY: np.ndarray, d: int) -> np.ndarray:
    """Top ``d`` right singular vectors of the centred window, as columns."""
    D = dY.shape[1]
    if dY.shape[0] == 0:
        return np.eye(D)[:, :d].copy()
    _, _, Vt = np.linalg.svd(dY, full_matrices=True)
    return Vt[:d].T.copy()


def box_lstsq(F: np.ndarray, T: np.ndarray, cap, rcond: float | None = None) -> np.ndarray:
    """Least squares ``F A ~ T`` with ``|A[c, :]| <= cap[c]``.

    ``cap`` is a scalar or one bound per row of ``A``. The minimum-norm
    solution (singular values below ``rcond`` times the largest are dropped)
    is kept when feasible; otherwise each offending column is re-solved by
    bounded-variable least squares.
    """
    T2 = T.reshape(F.shape[0], -1)
    A = np.linalg.lstsq(F, T2, rcond=rcond)[0]
    ub = np.broadcast_to(np.asarray(cap, dtype=float), (F.shape[1],))
    for c in range(T2.shape[1]):
        if np.any(np.abs(A[:, c]) > ub):
            A[:, c] = np.clip(lsq_linear(F, T2[:, c], bounds=(-ub, ub),
                                         method="bvls").x, -ub, ub)
    return A.reshape((F.shape[1],) + T.shape[1:])


def alternating_fit(dY: np.ndarray, T: np.ndarray, V0: np.ndarray,
                    design: Callable, design_grad: Callable, solve: Callable,
                    n_total: int, max_iter: int = 30, tol: float = 1e-9):
    """Minimise ``|T - F((dY) V) A|^2 / n_total`` over ``V`` and ``A``.

    Parameters
    ----------
    dY : (m, D) centred responses
    T : (m, D') reconstruction targets
    V0 : (D, d) initial frame with orthonormal columns
    design : ``u -> F`` with ``F`` of shape ``(m, p)``
    design_grad : ``u -> dF`` of shape ``(m, p, d)``
    solve : ``F -> A`` coefficient solver (box constraints live here)

    Returns ``(V, A, objective, history)``; ``history`` holds the accepted
    objective values, which are nonincreasing.
    """
    def evaluate(V):
        F = design(dY @ V)
        A = solve(F, T)
        R = T - F @ A
        return float((R ** 2).sum() / n_total), A, R

    V = np.array(V0, dtype=float)
    obj, A, R = evaluate(V)
    history = [obj]
    step = 1.0
    for _ in range(max_iter):
        if obj <= 1e-30:
            break
        dF = design_grad(dY @ V)                                  # (m, p, d)
        gu = -2.0 / n_total * np.einsum("mp,mpl->ml", R @ A.T, dF)
        G = dY.T @ gu
        gn = np.linalg.norm(G)
        if gn == 0.0:
            break
        t = step / gn
        for _ in range(30):
            Vn = polar_retraction(V - t * G)
            o2, A2, R2 = evaluate(Vn)
            if o2 < obj:
                break
            t *= 0.5
        else:
            break
        rel = (obj - o2) / max(obj, 1e-300)
        V, obj, A, R = Vn, o2, A2, R2
        history.append(obj)
        step = min(2.0 * t * gn, 1.0)
        if rel < tol:
            break
    return V, A, obj, tuple(history)
