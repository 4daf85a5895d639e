"""RTSMS drivers: adaptive and fixed-rank single-mode sketching, conversion to
HOSVD with optional multilinear singular value thresholding, and in-loop
rank reduction of the factors."""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .baselines import _order, sthosvd_full, zero_decomposition
from .rank_estimation import estimate_rank, first_drop, round_half_away
from .sketched_lsq import LsqConfig, solve_factor, whitening_triangle
from .sketching import RandomStream, gaussian, svd, thin_qr
from .tensor import (
    TuckerDecomposition,
    Unfolding,
    fold,
    mode_product,
    relative_residual,
)

PHASES = ("sketch", "rank_est", "lsq", "convert")


@dataclass
class RtsmsConfig:
    tol: float = 1e-6
    processing_order: Sequence[int] | None = None
    init_rank: int = 10
    trial_inflation: float = 1.1
    growth: float = 1.7
    oversample_ratio: float = 1.5
    k: int = 4
    lsq: LsqConfig = field(default_factory=LsqConfig)
    convert_to_hosvd: bool = False
    threshold_after: bool = True
    in_loop_truncation: bool = False

    def __post_init__(self):
        if not 0.0 < self.tol < 1.0:
            raise ValueError(f"tol must lie in (0, 1), got {self.tol}")
        if self.growth <= 1.0 or self.oversample_ratio < 1.0:
            raise ValueError("growth must exceed 1 and oversample_ratio be >= 1")
        if self.lsq.k != self.k:
            self.lsq = LsqConfig(**{**asdict(self.lsq), "k": self.k})


@dataclass
class RunReport:
    algorithm: str
    tol: float | None = None
    ranks_requested: tuple[int, ...] | None = None
    ranks_raw: tuple[int, ...] = ()
    ranks_thresholded: tuple[int, ...] | None = None
    relative_residual: float | None = None
    seconds: dict = field(default_factory=lambda: dict.fromkeys(PHASES + ("total",), 0.0))
    seed: int | None = None

    @contextmanager
    def timed(self, phase: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[phase] += time.perf_counter() - t0

    @property
    def ranks(self) -> tuple[int, ...]:
        return self.ranks_thresholded or self.ranks_raw


def inflate(r: int, ratio: float, n: int) -> int:
    return max(1, min(round_half_away(ratio * r), n))


def _degenerate(a: np.ndarray) -> TuckerDecomposition | None:
    """Rank-1 decompositions for zero and constant tensors."""
    flat = a.ravel()
    if not np.any(flat):
        return zero_decomposition(a.shape)
    if np.all(flat == flat[0]):
        core = np.full((1,) * a.ndim, flat[0] * np.sqrt(a.size))
        return TuckerDecomposition(
            core, [np.full((n, 1), 1 / np.sqrt(n)) for n in a.shape], is_hosvd=True
        )
    return None


def _extend_sketch(
    probe_omega, probe_omega_m, probe_r, r_hat, op: Unfolding, rs
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Reuse the probe's Gaussian rows, appending fresh rows only when r_hat exceeds them."""
    r_trial = probe_omega.shape[0]
    if r_hat <= r_trial:
        qr_r = probe_r[:r_hat, :r_hat] if probe_r.shape[0] >= r_hat else None
        return probe_omega[:r_hat], probe_omega_m[:r_hat], qr_r
    extra = gaussian(rs, r_hat - r_trial, probe_omega.shape[1])
    omega = np.vstack([probe_omega, extra])
    omega_m = np.vstack([probe_omega_m, op.lmul(extra)])
    return omega, omega_m, None


def in_loop_truncate(
    factor: np.ndarray, sketched_core: np.ndarray, mode: int, tol: float
) -> tuple[np.ndarray, np.ndarray]:
    """Write ``factor = F G`` with fewer columns when its spectrum allows and fold
    ``G`` into the core's ``mode``; unchanged when no singular value drops below
    ``tol * sigma_1``."""
    res = svd(factor)
    sigma = res.singular_values
    ell = first_drop(sigma, tol) if sigma[0] > 0 else 1
    if ell is None or ell >= factor.shape[1]:
        return factor, sketched_core
    ell = max(ell, 1)
    f = res.u[:, :ell] * sigma[:ell]
    return f, mode_product(sketched_core, res.v[:, :ell].T, mode)


def _run(
    a: np.ndarray,
    cfg: RtsmsConfig,
    rs: RandomStream,
    ranks: Sequence[int] | None,
    report: RunReport,
) -> TuckerDecomposition:
    order = _order(a.ndim, cfg.processing_order)
    b_old = np.asfortranarray(a, dtype=np.float64)
    factors: list = [None] * a.ndim
    first = True
    for i in order:
        n = b_old.shape[i]
        if n == 1:
            factors[i] = np.ones((1, 1))
            first = False
            continue
        op = Unfolding(b_old, i)
        mode_rs = rs.child()
        if ranks is None:
            with report.timed("rank_est"):
                probe = estimate_rank(
                    op, cfg.tol, min(cfg.init_rank, n), cfg.k, mode_rs,
                    trial_inflation=cfg.trial_inflation, growth=cfg.growth,
                )
            r = max(probe.detected_rank, 1)
            r_hat = inflate(r, cfg.oversample_ratio, n)
            with report.timed("sketch"):
                omega, omega_m, qr_r = _extend_sketch(
                    probe.omega, probe.omega_m, probe.qr_r, r_hat, op, mode_rs
                )
        else:
            r_hat = inflate(ranks[i], cfg.oversample_ratio, n)
            with report.timed("sketch"):
                omega = gaussian(mode_rs, r_hat, n)
                omega_m = op.lmul(omega)
            qr_r = None
        with report.timed("lsq"):
            if qr_r is None:
                qr_r = _whiten(omega_m, cfg.k, mode_rs)
            f = solve_factor(omega_m, op, qr_r, cfg.lsq, first, mode_rs.child())
        with report.timed("sketch"):
            dims = b_old.shape[:i] + (r_hat,) + b_old.shape[i + 1:]
            b_new = np.asfortranarray(fold(omega_m, i, dims))
        if cfg.in_loop_truncation and ranks is None:
            with report.timed("lsq"):
                f, b_new = in_loop_truncate(f, b_new, i, cfg.tol)
        factors[i] = f
        b_old = b_new
        first = False
    return TuckerDecomposition(b_old, factors)


def _whiten(omega_m: np.ndarray, k: int, rs: RandomStream) -> np.ndarray | None:
    r, z = omega_m.shape
    if min(k * r, z) < r:
        return None
    return whitening_triangle(omega_m, k, rs.child())


def _finish(
    a, dec, report: RunReport, cfg: RtsmsConfig, compute_residual: bool,
    threshold_tol: float | None, target_ranks=None,
):
    report.ranks_raw = dec.ranks
    if cfg.convert_to_hosvd:
        with report.timed("convert"):
            dec = tucker_to_hosvd(dec, tol=threshold_tol, ranks=target_ranks)
        if threshold_tol is not None or target_ranks is not None:
            report.ranks_thresholded = dec.ranks
    report.seconds["total"] = sum(report.seconds[p] for p in PHASES)
    if compute_residual:
        report.relative_residual = relative_residual(a, dec)
    return dec, report


def rtsms(
    a: np.ndarray,
    cfg: RtsmsConfig | None = None,
    rs: RandomStream | None = None,
    *,
    compute_residual: bool = True,
) -> tuple[TuckerDecomposition, RunReport]:
    """Rank-adaptive randomized Tucker decomposition with single-mode sketches.

    With ``cfg.convert_to_hosvd`` the result is brought to HOSVD form and,
    if ``cfg.threshold_after``, truncated at ``cfg.tol`` (the RHOSVDSMS
    variant).
    """
    cfg = cfg or RtsmsConfig()
    rs = rs if rs is not None else RandomStream(0)
    a = np.asarray(a, dtype=np.float64)
    name = "rhosvdsms" if cfg.convert_to_hosvd else "rtsms"
    report = RunReport(name, tol=cfg.tol, seed=rs.seed)
    dec = _degenerate(a)
    if dec is not None:
        report.ranks_raw = dec.ranks
        report.relative_residual = 0.0
        return dec, report
    dec = _run(a, cfg, rs, None, report)
    threshold = cfg.tol if cfg.threshold_after else None
    return _finish(a, dec, report, cfg, compute_residual, threshold)


def rtsms_fixed_rank(
    a: np.ndarray,
    ranks: Sequence[int],
    cfg: RtsmsConfig | None = None,
    rs: RandomStream | None = None,
    *,
    compute_residual: bool = True,
    truncate_to_rank: bool = False,
) -> tuple[TuckerDecomposition, RunReport]:
    """Fixed-rank variant; the output core has the inflated ranks ``round(1.5 r)``.

    ``truncate_to_rank`` (used with ``cfg.convert_to_hosvd``) cuts the HOSVD
    back to ``ranks``.
    """
    cfg = cfg or RtsmsConfig()
    rs = rs if rs is not None else RandomStream(0)
    a = np.asarray(a, dtype=np.float64)
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != a.ndim:
        raise ValueError(f"need {a.ndim} ranks, got {len(ranks)}")
    for n, r in zip(a.shape, ranks):
        if not 1 <= r <= n:
            raise ValueError(f"rank {r} outside [1, {n}]")
    name = "rhosvdsms-fixed" if cfg.convert_to_hosvd else "rtsms-fixed"
    report = RunReport(name, ranks_requested=ranks, seed=rs.seed)
    dec = _degenerate(a)
    if dec is not None:
        report.ranks_raw = dec.ranks
        report.relative_residual = 0.0
        return dec, report
    dec = _run(a, cfg, rs, ranks, report)
    target = ranks if truncate_to_rank else None
    return _finish(a, dec, report, cfg, compute_residual, None, target)


def tucker_to_hosvd(
    dec: TuckerDecomposition,
    tol: float | None = None,
    ranks: Sequence[int] | None = None,
) -> TuckerDecomposition:
    """Orthonormalize the factors, recompress the core by STHOSVD, and optionally
    keep only modal singular values ``>= tol * sigma_1`` (or the leading ``ranks``)."""
    qs, core = [], dec.core
    for i, f in enumerate(dec.factors):
        if f.shape[0] >= f.shape[1]:
            q, r = thin_qr(f)
        else:
            q, r = np.linalg.qr(f)
        qs.append(q)
        core = mode_product(core, r, i)
    st = sthosvd_full(core)
    small = st.decomposition
    keep = list(small.ranks)
    for i, sigma in enumerate(st.singular_values):
        avail = small.ranks[i]
        if ranks is not None:
            keep[i] = min(int(ranks[i]), avail)
        elif tol is not None:
            ell = first_drop(sigma, tol, strict=True) if sigma[0] > 0 else 1
            keep[i] = max(1, min(avail if ell is None else ell, avail))
    core = small.core[tuple(slice(0, k) for k in keep)]
    factors = [q @ u[:, :k] for q, u, k in zip(qs, small.factors, keep)]
    return TuckerDecomposition(np.array(core), factors, is_hosvd=True)

