"""Synthetic test tensors: smooth functions on Chebyshev grids, Hilbert tensors,
and noisy low-rank Tucker tensors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .sketching import RandomStream, orth
from .tensor import TuckerDecomposition, frobenius_norm, reconstruct

NAMES = ("runge", "wagon", "octant", "hilbert", "noisy_lowrank")


def chebyshev_points(n: int) -> np.ndarray:
    """Second-kind Chebyshev points ``cos(j pi / (n-1))``, from 1 down to -1."""
    if n < 1:
        raise ValueError("need at least one point")
    if n == 1:
        return np.zeros(1)
    return np.cos(np.pi * np.arange(n) / (n - 1))


def runge(x, y, z):
    return 1.0 / (5.0 + x**2 + y**2 + z**2)


def wagon(x, y, z):
    return (
        np.exp(np.sin(50 * x))
        + np.sin(60 * np.exp(y)) * np.sin(60 * z)
        + np.sin(70 * np.sin(x)) * np.cos(10 * z)
        + np.sin(np.sin(80 * y))
        - np.sin(10 * (x + z))
        + (x**2 + y**2 + z**2) / 4
    )


def octant(x, y, z):
    return np.sqrt(x**2 + y**2 + z**2)


FUNCTIONS: dict[str, Callable] = {"runge": runge, "wagon": wagon, "octant": octant}


def function_tensor(f: Callable, nx: int, ny: int, nz: int) -> np.ndarray:
    """Samples ``f(x_i, y_j, z_k)`` on the Chebyshev tensor grid."""
    x, y, z = np.meshgrid(
        chebyshev_points(nx), chebyshev_points(ny), chebyshev_points(nz),
        indexing="ij", sparse=True,
    )
    return np.asfortranarray(np.broadcast_to(f(x, y, z), (nx, ny, nz)), dtype=np.float64)


def hilbert_tensor(d: int, n: int | Sequence[int]) -> np.ndarray:
    """Entries ``1 / (i_1 + ... + i_d - d + 1)`` with 1-based indices."""
    dims = (n,) * d if np.isscalar(n) else tuple(n)
    if len(dims) != d:
        raise ValueError("dims must have d entries")
    grids = np.meshgrid(*[np.arange(m) for m in dims], indexing="ij", sparse=True)
    return np.asfortranarray(1.0 / (sum(grids) + 1.0))


def noisy_lowrank(
    n: int | Sequence[int],
    r: int | Sequence[int],
    noise_level: float,
    rs: RandomStream | None = None,
) -> np.ndarray:
    """Unit-norm random Tucker tensor of rank ``r`` plus Gaussian noise with
    ``||noise||_F = noise_level * ||signal||_F``."""
    if noise_level < 0:
        raise ValueError("noise level must be nonnegative")
    rs = rs if rs is not None else RandomStream(0)
    dims = (n,) * 3 if np.isscalar(n) else tuple(n)
    ranks = (r,) * len(dims) if np.isscalar(r) else tuple(r)
    core = rs.normal(ranks)
    factors = [orth(rs.normal((m, q))) for m, q in zip(dims, ranks)]
    signal = reconstruct(TuckerDecomposition(core, factors))
    signal /= frobenius_norm(signal)
    if noise_level == 0:
        return signal
    noise = rs.normal(dims)
    return signal + noise * (noise_level / frobenius_norm(noise))


@dataclass
class GallerySpec:
    name: str
    dims: tuple[int, ...]
    seed: int = 0
    noise_level: float = 0.0
    true_rank: int = 10

    def __post_init__(self):
        if self.name not in NAMES:
            raise ValueError(f"unknown gallery tensor {self.name!r}; choose from {NAMES}")
        self.dims = tuple(int(n) for n in self.dims)
        if not self.dims or min(self.dims) < 1:
            raise ValueError("dims must be positive")
        if self.noise_level < 0:
            raise ValueError("noise level must be nonnegative")
        if self.name in FUNCTIONS and len(self.dims) != 3:
            raise ValueError(f"{self.name} is a trivariate function; give three dims")


def make(spec: GallerySpec) -> np.ndarray:
    if spec.name in FUNCTIONS:
        return function_tensor(FUNCTIONS[spec.name], *spec.dims)
    if spec.name == "hilbert":
        return hilbert_tensor(len(spec.dims), spec.dims)
    rank = min(spec.true_rank, *spec.dims)
    return noisy_lowrank(spec.dims, rank, spec.noise_level, RandomStream(spec.seed))
