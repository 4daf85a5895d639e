"""Dense tensor algebra: unfoldings, modal products, Tucker reconstruction.

Tensors are plain float64 ``numpy.ndarray`` objects. Modes are 0-based axes.
Unfoldings follow the Kolda-Bader convention (the remaining indices vary
in increasing mode order, the earliest one fastest), which makes the mode-0
unfolding of a Fortran-ordered tensor a zero-copy view.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Sequence

import numpy as np


def _check_mode(ndim: int, mode: int) -> int:
    if not 0 <= mode < ndim:
        raise ValueError(f"mode {mode} out of range for an order-{ndim} tensor")
    return mode


def as_tensor(data) -> np.ndarray:
    t = np.asarray(data, dtype=np.float64)
    if t.ndim < 1 or 0 in t.shape:
        raise ValueError("a tensor needs order >= 1 and positive dimensions")
    return t


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` matricization, shape ``(n_mode, prod(other dims))``."""
    _check_mode(t.ndim, mode)
    return np.reshape(np.moveaxis(t, mode, 0), (t.shape[mode], -1), order="F")


def fold(m: np.ndarray, mode: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    dims = tuple(int(n) for n in dims)
    _check_mode(len(dims), mode)
    m = np.asarray(m)
    rest = prod(dims) // dims[mode]
    if m.ndim != 2 or m.shape != (dims[mode], rest):
        raise ValueError(
            f"cannot fold a {m.shape} matrix into mode {mode} of dims {dims}"
        )
    moved = (dims[mode],) + dims[:mode] + dims[mode + 1:]
    return np.moveaxis(np.reshape(m, moved, order="F"), 0, mode)


def _slabs(t: np.ndarray, mode: int) -> np.ndarray:
    """View ``t`` as (left, n_mode, right) in Fortran order."""
    left = prod(t.shape[:mode])
    right = prod(t.shape[mode + 1:])
    return np.reshape(t, (left, t.shape[mode], right), order="F")


def mode_product(t: np.ndarray, m: np.ndarray, mode: int) -> np.ndarray:
    """Multiply every mode-``mode`` fiber of ``t`` by ``m``.

    Works slab by slab on the Fortran layout instead of forming the permuted
    unfolding; the result is Fortran-contiguous.
    """
    _check_mode(t.ndim, mode)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != t.shape[mode]:
        raise ValueError(
            f"matrix of shape {m.shape} cannot act on mode {mode} of size {t.shape[mode]}"
        )
    t = np.asfortranarray(t)
    dims = t.shape[:mode] + (m.shape[0],) + t.shape[mode + 1:]
    if mode == 0:
        out = m @ np.reshape(t, (t.shape[0], -1), order="F")
    elif mode == t.ndim - 1:
        out = np.reshape(t, (-1, t.shape[-1]), order="F") @ m.T
    else:
        # (right, m, left) in C order == (left, m, right) in F order
        out = np.matmul(m, _slabs(t, mode).transpose(2, 1, 0)).transpose(2, 1, 0)
    return np.reshape(out, dims, order="F")


def mode_fibers(t: np.ndarray, mode: int, columns: np.ndarray) -> np.ndarray:
    """Selected columns of ``unfold(t, mode)``, returned as rows ``(len(columns), n_mode)``."""
    _check_mode(t.ndim, mode)
    columns = np.asarray(columns, dtype=np.intp)
    slabs = _slabs(np.asfortranarray(t), mode)
    left = slabs.shape[0]
    return slabs[columns % left, :, columns // left]


class Unfolding:
    """Lazy mode unfolding of a tensor.

    Supplies the two accesses the single-mode algorithms need, left
    multiplication and extraction of a subset of columns, without ever
    materializing the permuted matrix. A plain 2-D array can be wrapped too.
    """

    def __init__(self, t: np.ndarray, mode: int = 0):
        t = np.asarray(t, dtype=np.float64)
        self.tensor = np.asfortranarray(t)
        self.mode = _check_mode(t.ndim, mode)

    @classmethod
    def wrap(cls, a) -> "Unfolding":
        if isinstance(a, Unfolding):
            return a
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("expected a matrix")
        return cls(a, 0)

    @property
    def shape(self) -> tuple[int, int]:
        n = self.tensor.shape[self.mode]
        return n, self.tensor.size // n

    def lmul(self, m: np.ndarray) -> np.ndarray:
        """``m @ unfolding``."""
        return unfold(mode_product(self.tensor, m, self.mode), self.mode)

    def columns_as_rows(self, idx) -> np.ndarray:
        """Rows ``idx`` of the transposed unfolding."""
        return mode_fibers(self.tensor, self.mode, idx)

    def matrix(self) -> np.ndarray:
        return unfold(self.tensor, self.mode)


@dataclass
class TuckerDecomposition:
    """Core tensor plus one factor matrix per mode, ``factors[i]`` is ``n_i x r_i``."""

    core: np.ndarray
    factors: list[np.ndarray]
    is_hosvd: bool = False
    shape: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        self.core = np.asarray(self.core, dtype=np.float64)
        self.factors = [np.asarray(f, dtype=np.float64) for f in self.factors]
        if len(self.factors) != self.core.ndim:
            raise ValueError("need exactly one factor per core mode")
        for i, f in enumerate(self.factors):
            if f.ndim != 2 or f.shape[1] != self.core.shape[i]:
                raise ValueError(
                    f"factor {i} has shape {f.shape}, core dim is {self.core.shape[i]}"
                )
        self.shape = tuple(f.shape[0] for f in self.factors)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(self.core.shape)

    @property
    def ndim(self) -> int:
        return self.core.ndim


def reconstruct(dec: TuckerDecomposition) -> np.ndarray:
    out = dec.core
    for i, f in enumerate(dec.factors):
        out = mode_product(out, f, i)
    return out


def frobenius_norm(t) -> float:
    return float(np.linalg.norm(np.ravel(t)))


def relative_residual(a: np.ndarray, dec: TuckerDecomposition) -> float:
    """``||a - reconstruct(dec)||_F / ||a||_F``."""
    na = frobenius_norm(a)
    if na == 0.0:
        raise ValueError("relative residual is undefined for a zero tensor")
    return frobenius_norm(a - reconstruct(dec)) / na


def storage_size(dec: TuckerDecomposition) -> int:
    return dec.core.size + sum(f.size for f in dec.factors)


def compression_ratio(original_dims: Sequence[int], dec: TuckerDecomposition) -> float:
    """Entries of the original tensor over entries stored by the decomposition."""
    return prod(original_dims) / storage_size(dec)
