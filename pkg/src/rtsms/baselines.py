"""Comparison algorithms: (ST)HOSVD, randomized SVD, R-STHOSVD (fixed and
adaptive), generalized Nystrom and its sequentially truncated Tucker variant."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sketching import (
    UNIT_ROUNDOFF,
    RandomStream,
    SvdResult,
    gaussian,
    orth,
    svd,
    thin_qr,
    tri_solve,
)
from .tensor import TuckerDecomposition, fold, mode_product, unfold

TOL_FLOOR = math.sqrt(UNIT_ROUNDOFF)


def _check_ranks(dims, ranks) -> tuple[int, ...]:
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != len(dims):
        raise ValueError(f"need {len(dims)} ranks, got {len(ranks)}")
    for n, r in zip(dims, ranks):
        if not 1 <= r <= n:
            raise ValueError(f"rank {r} outside [1, {n}]")
    return ranks


def _order(d: int, order) -> list[int]:
    if order is None:
        return list(range(d))
    order = [int(i) for i in order]
    if sorted(order) != list(range(d)):
        raise ValueError(f"{order} is not a permutation of the modes")
    return order


def left_singular(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left singular vectors and values; wide matrices go through QR of the transpose."""
    rows, cols = m.shape
    if cols > rows:
        _, r = thin_qr(m.T)
        res = svd(r.T)
    else:
        res = svd(m)
    return res.u, res.singular_values


def hosvd(a: np.ndarray, ranks: Sequence[int]) -> TuckerDecomposition:
    ranks = _check_ranks(a.shape, ranks)
    factors = [left_singular(unfold(a, i))[0][:, :r] for i, r in enumerate(ranks)]
    core = a
    for i, u in enumerate(factors):
        core = mode_product(core, u.T, i)
    return TuckerDecomposition(core, factors, is_hosvd=True)


@dataclass
class SthosvdResult:
    decomposition: TuckerDecomposition
    singular_values: list[np.ndarray]  # per mode, of the working core's unfolding
    order: list[int]


def sthosvd_full(
    a: np.ndarray,
    ranks: Sequence[int] | None = None,
    order=None,
    tol: float | None = None,
) -> SthosvdResult:
    """Sequentially truncated HOSVD.

    Truncates each mode either to the given rank or, with ``tol``, to the
    epsilon-rank: the number of singular values ``>= tol * sigma_1``.
    """
    order = _order(a.ndim, order)
    if ranks is not None:
        ranks = _check_ranks(a.shape, ranks)
    core = np.asarray(a, dtype=np.float64)
    factors: list[np.ndarray | None] = [None] * a.ndim
    sigmas: list[np.ndarray | None] = [None] * a.ndim
    for i in order:
        u, s = left_singular(unfold(core, i))
        if ranks is not None:
            r = min(ranks[i], u.shape[1])
        elif tol is not None:
            r = max(1, int(np.count_nonzero(s >= tol * s[0]))) if s[0] > 0 else 1
        else:
            r = u.shape[1]
        factors[i] = u[:, :r]
        sigmas[i] = s
        core = mode_product(core, factors[i].T, i)
    return SthosvdResult(TuckerDecomposition(core, factors, is_hosvd=True), sigmas, order)


def sthosvd(a, ranks, order=None) -> TuckerDecomposition:
    return sthosvd_full(a, ranks, order).decomposition


def sthosvd_tol(a, tol: float, order=None) -> TuckerDecomposition:
    return sthosvd_full(a, None, order, tol=tol).decomposition


def rand_svd(
    x: np.ndarray,
    r: int,
    oversample: int = 5,
    power_q: int = 0,
    rs: RandomStream | None = None,
) -> SvdResult:
    """Randomized SVD with ``r + oversample`` Gaussian samples and ``power_q`` power steps."""
    rs = rs if rs is not None else RandomStream(0)
    rows, cols = x.shape
    budget = r + oversample
    if r < 1 or oversample < 0 or budget > min(rows, cols):
        raise ValueError(f"rank budget {r}+{oversample} exceeds {x.shape}")
    q = orth(x @ gaussian(rs, cols, budget))
    for _ in range(power_q):
        q = orth(x @ orth(x.T @ q))
    b = q.T @ x
    small = svd(b)
    return SvdResult(q @ small.u, small.singular_values, small.v).truncate(r)


def r_sthosvd(
    a: np.ndarray,
    ranks: Sequence[int],
    oversample: int = 5,
    order=None,
    rs: RandomStream | None = None,
    power_q: int = 0,
) -> TuckerDecomposition:
    rs = rs if rs is not None else RandomStream(0)
    ranks = _check_ranks(a.shape, ranks)
    core = np.asarray(a, dtype=np.float64)
    factors: list = [None] * a.ndim
    for i in _order(a.ndim, order):
        c = unfold(core, i)
        p = min(oversample, min(c.shape) - ranks[i])
        r = min(ranks[i], min(c.shape))
        u = rand_svd(c, r, max(p, 0), power_q, rs).u
        factors[i] = u
        core = mode_product(core, u.T, i)
    return TuckerDecomposition(core, factors, is_hosvd=True)


@dataclass
class RangeFinderResult:
    q: np.ndarray
    estimated_relative_error: float


def adaptive_range_finder(
    m: np.ndarray,
    tol: float,
    blocksize: int | None = None,
    max_iters: int = 10,
    rs: RandomStream | None = None,
    power_iters: int = 1,
    max_dim: int | None = None,
) -> RangeFinderResult:
    """Blocked randomized QB with the ``||A||^2 - ||B||^2`` error indicator.

    Grows ``Q`` one block at a time until the Frobenius error estimate drops
    below ``tol * ||A||_F``, then trims ``Q`` to the smallest rank that still
    meets the target.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    if tol < TOL_FLOOR:
        warnings.warn(
            f"tol {tol:.3g} below sqrt(unit roundoff); clamped to {TOL_FLOOR:.3g}",
            stacklevel=2,
        )
        tol = TOL_FLOOR
    rs = rs if rs is not None else RandomStream(0)
    rows, cols = m.shape
    limit = min(rows, cols, max_dim or rows)
    b = blocksize or max(1, rows // 10)
    norm2 = float(np.sum(m * m))
    target = (tol * tol) * norm2
    if norm2 == 0.0:
        return RangeFinderResult(np.eye(rows, 1), 0.0)

    q = np.zeros((rows, 0))
    bmat = np.zeros((0, cols))
    err = norm2
    for _ in range(max_iters):
        width = min(b, limit - q.shape[1])
        if width <= 0:
            break
        y = m @ gaussian(rs, cols, width)
        for _ in range(power_iters):
            y = orth(y)
            y = m @ orth(m.T @ y - bmat.T @ (q.T @ y))
        for _ in range(2):
            y = y - q @ (q.T @ y)
            y = orth(y)
        bi = y.T @ m
        gain = float(np.sum(bi * bi))
        if q.shape[1] and gain <= 8 * UNIT_ROUNDOFF * norm2:
            # the indicator cannot fall further: the block is rounding noise
            break
        q = np.hstack([q, y])
        bmat = np.vstack([bmat, bi])
        err -= gain
        if err <= target:
            break

    small = svd(bmat)
    captured = np.cumsum(small.singular_values ** 2)
    remaining = norm2 - captured
    hits = np.flatnonzero(remaining <= target)
    k = int(hits[0]) + 1 if hits.size else small.singular_values.size
    q = q @ small.u[:, :k]
    est = math.sqrt(max(norm2 - captured[k - 1], 0.0) / norm2)
    return RangeFinderResult(q, est)


def adaptive_r_sthosvd(
    a: np.ndarray,
    tol: float,
    blocksize: int | None = None,
    order=None,
    rs: RandomStream | None = None,
    max_iters: int = 10,
    power_iters: int = 1,
) -> TuckerDecomposition:
    """R-STHOSVD with an error-controlled range finder at ``tol / sqrt(d)`` per mode."""
    rs = rs if rs is not None else RandomStream(0)
    a = np.asarray(a, dtype=np.float64)
    if not np.any(a):
        return zero_decomposition(a.shape)
    core = a
    factors: list = [None] * a.ndim
    per_mode = tol / math.sqrt(a.ndim)
    for i in _order(a.ndim, order):
        c = unfold(core, i)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            q = adaptive_range_finder(
                c, per_mode, blocksize or max(1, c.shape[0] // 10), max_iters, rs, power_iters
            ).q
        factors[i] = q
        core = fold(q.T @ c, i, core.shape[:i] + (q.shape[1],) + core.shape[i + 1:])
    return TuckerDecomposition(core, factors, is_hosvd=False)


def gn(
    a: np.ndarray, r: int, r_hat: int, rs: RandomStream | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized Nystrom: ``A ~ U V^T`` with ``U = AX R^{-1}``, ``V^T = Q^T YA``."""
    rs = rs if rs is not None else RandomStream(0)
    m, n = a.shape
    if not 1 <= r <= r_hat <= m or r > n:
        raise ValueError(f"need 1 <= r <= r_hat <= {m} and r <= {n}")
    x = gaussian(rs, n, r)
    y = gaussian(rs, m, r_hat)
    ax = a @ x
    ya = y.T @ a
    q, rr = thin_qr(ya @ x)
    u = tri_solve(rr, ax.T, trans=True).T
    v = (q.T @ ya).T
    return u, v


def r_gn_st_tucker(
    a: np.ndarray, ranks: Sequence[int], order=None, rs: RandomStream | None = None
) -> TuckerDecomposition:
    rs = rs if rs is not None else RandomStream(0)
    ranks = _check_ranks(a.shape, ranks)
    core = np.asarray(a, dtype=np.float64)
    factors: list = [None] * a.ndim
    for i in _order(a.ndim, order):
        c = unfold(core, i)
        r = min(ranks[i], c.shape[1])
        r_hat = min(r + r // 2, c.shape[0])
        u, v = gn(c, r, r_hat, rs)
        factors[i] = u
        core = fold(v.T, i, core.shape[:i] + (r,) + core.shape[i + 1:])
    return TuckerDecomposition(core, factors, is_hosvd=False)


def zero_decomposition(dims) -> TuckerDecomposition:
    """Exact rank-(1,...,1) representation of the zero tensor."""
    return TuckerDecomposition(
        np.zeros((1,) * len(dims)), [np.eye(n, 1) for n in dims], is_hosvd=True
    )
