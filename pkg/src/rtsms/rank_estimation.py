"""Adaptive multilinear-rank probe for a single unfolding."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sketching import RandomStream, gaussian, singular_values, srft_right_apply, thin_qr
from .tensor import Unfolding


def round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


@dataclass
class RankProbeResult:
    detected_rank: int
    trial_rank: int
    omega: np.ndarray     # trial_rank x n Gaussian sketch
    omega_m: np.ndarray   # omega @ unfolding, trial_rank x z
    qr_r: np.ndarray      # R of the QR of (omega_m @ Y)^T
    sketch_singular_values: np.ndarray
    rounds: int


def first_drop(sigma: np.ndarray, tol: float, *, strict: bool = False) -> int | None:
    """Smallest ``l`` with ``sigma[l] <= tol * sigma[0]`` (0-based), or None."""
    bound = tol * sigma[0]
    hits = np.flatnonzero(sigma < bound if strict else sigma <= bound)
    return int(hits[0]) if hits.size else None


def estimate_rank(
    unfolding,
    tol: float,
    init_rank: int = 10,
    k: int = 4,
    rs: RandomStream | None = None,
    *,
    trial_inflation: float = 1.1,
    growth: float = 1.7,
) -> RankProbeResult:
    """Grow a trial rank until a sketched QR shows a singular-value drop below ``tol``.

    ``unfolding`` is an ``n x z`` matrix or an :class:`~rtsms.tensor.Unfolding`.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    if init_rank < 1 or k < 1:
        raise ValueError("init_rank and k must be positive")
    rs = rs if rs is not None else RandomStream(0)
    op = Unfolding.wrap(unfolding)
    n, z = op.shape

    r = init_rank
    rounds = 0
    while True:
        rounds += 1
        r_trial = min(max(round_half_away(trial_inflation * r), r + 1), n)
        omega = gaussian(rs, r_trial, n)
        omega_m = op.lmul(omega)
        s = min(k * r_trial, z)
        sketch = srft_right_apply(omega_m, s, rs)
        # s < r_trial only when z < r_trial; R is then trapezoidal
        qr_r = thin_qr(sketch.T)[1] if s >= r_trial else np.linalg.qr(sketch.T)[1]
        sigma = singular_values(qr_r)
        if sigma[0] == 0.0:
            return RankProbeResult(0, r_trial, omega, omega_m, qr_r, sigma, rounds)
        ell = first_drop(sigma, tol)
        if ell is not None and ell < r:
            return RankProbeResult(ell, r_trial, omega, omega_m, qr_r, sigma, rounds)
        if r_trial == n:
            # square Gaussian sketch: the sketch is as rank revealing as it gets
            detected = sigma.size if ell is None else ell
            return RankProbeResult(
                min(detected, n, z), r_trial, omega, omega_m, qr_r, sigma, rounds
            )
        r = max(round_half_away(growth * r), r + 1)
