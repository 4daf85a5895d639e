"""Uniform entry point over every decomposition algorithm, plus report records."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import baselines
from .driver import PHASES, RtsmsConfig, RunReport, rtsms, rtsms_fixed_rank
from .sketched_lsq import LsqConfig
from .sketching import RandomStream
from .tensor import (
    TuckerDecomposition,
    compression_ratio,
    frobenius_norm,
    mode_product,
    reconstruct,
    unfold,
)

RESIDUAL_CAP = 2**27


@dataclass(frozen=True)
class Algorithm:
    name: str
    takes_tol: bool
    takes_rank: bool


ALGORITHMS = {
    a.name: a
    for a in [
        Algorithm("rtsms", True, True),
        Algorithm("rhosvdsms", True, True),
        Algorithm("sthosvd", True, True),
        Algorithm("rsthosvd", False, True),
        Algorithm("adaptive-rsthosvd", True, False),
        Algorithm("hosvd", False, True),
        Algorithm("gn-st", False, True),
    ]
}


class UsageError(ValueError):
    pass


def check_inputs(name: str, tol, ranks) -> Algorithm:
    if name not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    algo = ALGORITHMS[name]
    if (tol is None) == (ranks is None):
        raise UsageError("give exactly one of a tolerance or a rank")
    if tol is not None and not algo.takes_tol:
        raise UsageError(f"{name} needs a rank, not a tolerance")
    if ranks is not None and not algo.takes_rank:
        raise UsageError(f"{name} is rank-adaptive and needs a tolerance")
    return algo


def run(
    name: str,
    a: np.ndarray,
    *,
    tol: float | None = None,
    ranks: Sequence[int] | None = None,
    seed: int = 0,
    order: Sequence[int] | None = None,
    k: int = 4,
    refinement: bool = True,
    threshold: bool = False,
) -> tuple[TuckerDecomposition, RunReport]:
    """Run algorithm ``name``; the report's residual is left for the caller."""
    check_inputs(name, tol, ranks)
    rs = RandomStream(seed)
    if name in ("rtsms", "rhosvdsms"):
        hosvd_form = name == "rhosvdsms" or threshold
        cfg = RtsmsConfig(
            tol=tol if tol is not None else 0.5,
            processing_order=order,
            k=k,
            lsq=LsqConfig(k=k, refinement=refinement),
            convert_to_hosvd=hosvd_form,
            threshold_after=hosvd_form,
        )
        if tol is not None:
            dec, report = rtsms(a, cfg, rs, compute_residual=False)
        else:
            dec, report = rtsms_fixed_rank(
                a, ranks, cfg, rs, compute_residual=False, truncate_to_rank=hosvd_form
            )
        report.algorithm = name
        report.seed = seed
        return dec, report

    report = RunReport(name, tol=tol, ranks_requested=tuple(ranks) if ranks else None, seed=seed)
    t0 = time.perf_counter()
    if name == "sthosvd":
        if tol is not None:
            dec = baselines.sthosvd_tol(a, tol, order)
        else:
            dec = baselines.sthosvd(a, ranks, order)
    elif name == "hosvd":
        dec = baselines.hosvd(a, ranks)
    elif name == "rsthosvd":
        dec = baselines.r_sthosvd(a, ranks, 5, order, rs)
    elif name == "adaptive-rsthosvd":
        dec = baselines.adaptive_r_sthosvd(a, tol, None, order, rs)
    else:
        dec = baselines.r_gn_st_tucker(a, ranks, order, rs)
    report.seconds["total"] = time.perf_counter() - t0
    report.ranks_raw = dec.ranks
    return dec, report


def estimate_residual(
    a: np.ndarray, dec: TuckerDecomposition, samples: int = 2048, seed: int = 0
) -> float:
    """Relative residual from uniformly sampled mode-0 fibers (unbiased in the square)."""
    cols = unfold(a, 0)
    z = cols.shape[1]
    idx = RandomStream(seed).generator.integers(0, z, size=min(samples, z))
    sub = np.unravel_index(idx, a.shape[1:], order="F")
    err2 = 0.0
    for j, pos in enumerate(zip(*sub)):
        piece = dec.core
        for mode, p in enumerate(pos, start=1):
            piece = mode_product(piece, dec.factors[mode][p:p + 1], mode)
        fiber = dec.factors[0] @ piece.reshape(-1)
        err2 += float(np.sum((cols[:, idx[j]] - fiber) ** 2))
    err2 *= z / idx.size
    return math.sqrt(err2) / frobenius_norm(a)


def residual(
    a: np.ndarray, dec: TuckerDecomposition, cap: int = RESIDUAL_CAP, seed: int = 0
) -> tuple[float, str]:
    if a.size <= cap:
        return frobenius_norm(a - reconstruct(dec)) / frobenius_norm(a), "exact"
    return estimate_residual(a, dec, seed=seed), "estimated"


def report_record(
    report: RunReport,
    dims: Sequence[int],
    dec: TuckerDecomposition,
    residual_kind: str = "exact",
    timings: bool = True,
    **extra,
) -> dict:
    seconds = {p: report.seconds.get(p, 0.0) for p in PHASES + ("total",)}
    if not timings:
        seconds = dict.fromkeys(seconds, 0.0)
    rec = {
        "kind": "run",
        "algorithm": report.algorithm,
        "dims": list(dims),
        "tol": report.tol,
        "ranks": list(report.ranks_requested) if report.ranks_requested else None,
        "ranks_raw": list(report.ranks_raw),
        "ranks_thresholded": (
            list(report.ranks_thresholded) if report.ranks_thresholded else None
        ),
        "relative_residual": report.relative_residual,
        "residual_kind": residual_kind,
        "seconds": seconds,
        "seed": report.seed,
        "compression_ratio": compression_ratio(dims, dec),
    }
    rec.update(extra)
    return rec


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True)


def geometric_mean(values: Sequence[float]) -> float:
    vals = np.asarray(values, dtype=np.float64)
    if np.any(vals <= 0):
        return 0.0 if np.all(vals >= 0) else float("nan")
    return float(np.exp(np.mean(np.log(vals))))


def rounded_mean_ranks(rank_lists: Sequence[Sequence[int]]) -> list[int]:
    """Average rank per mode, rounded half up to the nearest integer."""
    mean = np.mean(np.asarray(rank_lists, dtype=np.float64), axis=0)
    return [int(math.floor(m + 0.5)) for m in np.atleast_1d(mean)]
