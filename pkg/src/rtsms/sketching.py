"""Seedable randomness, sketch matrices and the dense factorizations on top of LAPACK."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.fft
import scipy.linalg

UNIT_ROUNDOFF = 2.0 ** -52


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class RandomStream:
    """Counter-based (Philox) random stream.

    ``child()`` derives independent sub-streams, so per-mode or per-stage
    randomness can be split off without disturbing the parent sequence.
    """

    def __init__(self, seed: int | np.random.SeedSequence = 0):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(int(seed))
        self.seed = self._seq.entropy
        self.generator = np.random.Generator(np.random.Philox(self._seq))

    def child(self) -> "RandomStream":
        return RandomStream(self._seq.spawn(1)[0])

    def uniform(self, size) -> np.ndarray:
        return self.generator.random(size)

    def normal(self, size) -> np.ndarray:
        return self.generator.standard_normal(size)

    def __repr__(self):
        return f"RandomStream(seed={self.seed})"


def as_stream(rs) -> RandomStream:
    if isinstance(rs, RandomStream):
        return rs
    return RandomStream(0 if rs is None else rs)


def gaussian(rs: RandomStream, rows: int, cols: int) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise ValueError("sketch dimensions must be positive")
    return rs.normal((rows, cols))


def srft_right_apply(m: np.ndarray, s: int, rs: RandomStream) -> np.ndarray:
    """Compute ``m @ Y`` for a subsampled randomized trigonometric transform ``Y``.

    ``Y = sqrt(z/s) D C P`` with random signs ``D``, the orthonormal DCT-II
    ``C`` and a uniform choice ``P`` of ``s`` out of ``z`` columns.
    """
    m = np.asarray(m, dtype=np.float64)
    z = m.shape[1]
    if not 1 <= s <= z:
        raise ValueError(f"SRFT sample size {s} must lie in [1, {z}]")
    signs = rs.generator.choice(np.array([-1.0, 1.0]), size=z)
    cols = np.sort(rs.generator.choice(z, size=s, replace=False))
    mixed = scipy.fft.dct(m * signs, type=2, norm="ortho", axis=1)
    return np.sqrt(z / s) * mixed[:, cols]


def thin_qr(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = np.asarray(m, dtype=np.float64)
    if m.shape[0] < m.shape[1]:
        raise ValueError(f"thin QR needs rows >= cols, got {m.shape}")
    return scipy.linalg.qr(m, mode="economic", check_finite=False)


class SvdResult(NamedTuple):
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    def truncate(self, r: int) -> "SvdResult":
        return SvdResult(self.u[:, :r], self.singular_values[:r], self.v[:, :r])


def svd(m: np.ndarray) -> SvdResult:
    m = np.asarray(m, dtype=np.float64)
    try:
        u, s, vt = scipy.linalg.svd(m, full_matrices=False, check_finite=False)
    except np.linalg.LinAlgError:
        u, s, vt = scipy.linalg.svd(
            m, full_matrices=False, check_finite=False, lapack_driver="gesvd"
        )
    return SvdResult(u, s, vt.T)


def singular_values(m: np.ndarray) -> np.ndarray:
    return scipy.linalg.svdvals(np.asarray(m, dtype=np.float64), check_finite=False)


def tri_solve(r: np.ndarray, b: np.ndarray, *, trans: bool = False) -> np.ndarray:
    """Solve ``R X = B`` (or ``R^T X = B``) with ``R`` upper triangular."""
    r = np.asarray(r, dtype=np.float64)
    d = np.diag(r)
    if d.size == 0 or np.any(d == 0.0):
        raise SingularMatrixError("triangular factor has a zero diagonal entry")
    return scipy.linalg.solve_triangular(
        r, b, lower=False, trans=1 if trans else 0, check_finite=False
    )


def orth(m: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the columns of ``m`` (thin QR, no rank reveal)."""
    return scipy.linalg.qr(m, mode="economic", check_finite=False)[0]
