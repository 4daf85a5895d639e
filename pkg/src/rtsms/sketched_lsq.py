"""Least squares for the factor matrix: min_F ||(A^T Omega^T) F^T - A^T||_F.

The coefficient matrix is the transpose of the ``r x z`` sketch ``Omega A``;
rows are selected by approximate leverage scores, each subproblem is solved
with Tikhonov regularization, and a second resampled solve corrects the
first one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sketching import (
    UNIT_ROUNDOFF,
    RandomStream,
    SingularMatrixError,
    gaussian,
    srft_right_apply,
    thin_qr,
    tri_solve,
)
from .tensor import Unfolding


@dataclass
class LsqConfig:
    k: int = 4
    first_mode_multiplier: int = 4
    other_mode_multiplier: int = 3
    probe_columns: int = 5
    lambda_multiplier: float = UNIT_ROUNDOFF
    power_steps: int = 5
    refinement: bool = True

    def __post_init__(self):
        if self.k < 1 or self.probe_columns < 1:
            raise ValueError("k and probe_columns must be positive")

    def sample_size(self, r: int, first: bool) -> int:
        mult = self.first_mode_multiplier if first else self.other_mode_multiplier
        return mult * self.k * r


def whitening_triangle(sketched: np.ndarray, k: int, rs: RandomStream) -> np.ndarray:
    """R from the QR of ``(sketched @ Y)^T`` with an SRFT ``Y`` of ``k*r`` columns."""
    r, z = sketched.shape
    s = min(k * r, z)
    if s < r:
        raise ValueError("sketch has fewer columns than rows")
    return thin_qr(srft_right_apply(sketched, s, rs).T)[1]


def approx_leverage_scores(
    sketched: np.ndarray, qr_r: np.ndarray, probe_cols: int, rs: RandomStream
) -> np.ndarray:
    """Squared row norms of ``sketched^T R^{-1} G`` with a Gaussian probe ``G``.

    Tiny diagonal entries of ``R`` are lifted to ``u * max|diag|`` first,
    since only a rough whitening is needed.
    """
    r = sketched.shape[0]
    qr_r = np.array(qr_r[:r, :r], dtype=np.float64)
    d = np.diag(qr_r)
    floor = UNIT_ROUNDOFF * np.max(np.abs(d), initial=0.0)
    if floor == 0.0:
        return np.zeros(sketched.shape[1])
    small = np.abs(d) < floor
    qr_r[small, small] = np.where(d[small] < 0, -floor, floor)
    g = gaussian(rs, r, probe_cols)
    probe = sketched.T @ tri_solve(qr_r, g)
    return np.einsum("ij,ij->i", probe, probe)


def sample_without_replacement(w: np.ndarray, s: int, rs: RandomStream) -> np.ndarray:
    """Weighted draw of ``min(s, #nonzero)`` distinct indices, returned sorted.

    Uses exponential keys ``E_j / w_j``: the ``s`` smallest keys are a
    sequential draw with probabilities proportional to the weights.
    """
    if s < 1:
        raise ValueError("sample size must be positive")
    w = np.asarray(w, dtype=np.float64)
    keys = rs.generator.standard_exponential(w.size)
    live = np.flatnonzero(w > 0)
    if live.size <= s:
        return live
    keys = keys[live] / w[live]
    pick = np.argpartition(keys, s - 1)[:s]
    return np.sort(live[pick])


def ridge_solve(a_sub: np.ndarray, b_sub: np.ndarray, lam: float) -> np.ndarray:
    """argmin_X ||a_sub X - b_sub||_F^2 + lam ||X||_F^2 via one QR of ``[a_sub; sqrt(lam) I]``."""
    if lam < 0:
        raise ValueError("regularization must be nonnegative")
    s, r = a_sub.shape
    stacked = np.vstack([a_sub, np.sqrt(lam) * np.eye(r)]) if lam > 0 else a_sub
    if stacked.shape[0] < r:
        raise SingularMatrixError("underdetermined unregularized least squares")
    q, rr = thin_qr(stacked)
    d = np.abs(np.diag(rr))
    if lam == 0 and (d.min() <= r * UNIT_ROUNDOFF * d.max()):
        raise SingularMatrixError("coefficient matrix is rank deficient and lambda is 0")
    return tri_solve(rr, q[:s].T @ b_sub)


def _spectral_norm_estimate(m: np.ndarray, steps: int, rs: RandomStream) -> float:
    v = rs.normal(m.shape[1])
    est = 0.0
    for _ in range(steps):
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v = m.T @ (m @ (v / nv))
        est = np.sqrt(np.linalg.norm(v))
    return float(est)


def solve_factor(
    sketched: np.ndarray,
    rhs,
    qr_r: np.ndarray | None,
    cfg: LsqConfig | None = None,
    is_first_mode: bool = True,
    rs: RandomStream | None = None,
) -> np.ndarray:
    """Return ``F`` (``n x r``) with ``F @ sketched`` approximating the unfolding.

    ``sketched`` is ``Omega A`` (``r x z``); ``rhs`` gives row access to
    ``A^T``: either the ``n x z`` matrix ``A``, an :class:`Unfolding`, or a
    callable mapping row indices to the rows of ``A^T``. ``qr_r`` is the
    whitening triangle (recomputed when missing or of the wrong size).
    """
    cfg = cfg or LsqConfig()
    rs = rs if rs is not None else RandomStream(0)
    sketched = np.asarray(sketched, dtype=np.float64)
    r, z = sketched.shape
    if callable(rhs) and not isinstance(rhs, Unfolding):
        rows = rhs
    else:
        rows = Unfolding.wrap(rhs).columns_as_rows

    if z < r:
        sol, *_ = np.linalg.lstsq(sketched.T, rows(np.arange(z)), rcond=None)
        return sol.T

    stage = [rs.child() for _ in range(5)]
    if qr_r is None or qr_r.shape[0] < r or qr_r.shape[1] < r:
        qr_r = whitening_triangle(sketched, cfg.k, stage[0])
    weights = approx_leverage_scores(sketched, qr_r, cfg.probe_columns, stage[1])
    if not np.any(weights > 0):
        n = rows(np.arange(1)).shape[1]
        return np.zeros((n, r))
    s = min(cfg.sample_size(r, is_first_mode), z)
    s1 = sample_without_replacement(weights, s, stage[2])
    a1 = sketched[:, s1].T
    lam = cfg.lambda_multiplier * _spectral_norm_estimate(a1, cfg.power_steps, stage[3])
    f1 = ridge_solve(a1, rows(s1), lam)
    if not cfg.refinement:
        return f1.T
    s2 = sample_without_replacement(weights, s, stage[4])
    a2 = sketched[:, s2].T
    resid = rows(s2) - a2 @ f1
    f2 = ridge_solve(a2, resid, lam)  # same lambda as the first solve, on purpose
    return (f1 + f2).T
