"""Slot-by-slot Monte-Carlo simulation of the EAS queue.

Within slot ``[k, k+1)``: the queue length at ``k`` is recorded (arbitrary
epoch); if the remaining inter-arrival counter is zero the length is also
recorded as a pre-arrival observation, a batch joins and the counter is
redrawn; the counter is decremented; finally, with probability ``mu``, a
service completes and removes ``min(Y, queue)`` customers.

Four independent streams (spawned from one ``SeedSequence``) feed the
inter-arrival times, batch sizes, service trials and capacities, so a fixed
seed replays bit-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .chareq import find_interior_roots
from .errors import EpochKindMismatch
from .pgf import QueueModel
from .steady import EpochDist, EpochKind

CHUNK = 1 << 20
TVD_THRESHOLD = 5e-3
REFERENCE_SLOTS = 10_000_000


@dataclass(frozen=True)
class SimConfig:
    """Run length and bookkeeping.

    ``warmup=None`` picks ``max(10_000, 20/(1 - tail_rate))`` slots, or half
    the run when that would leave less than half of it measured.
    Queue lengths above ``histogram_cap`` share one overflow bin.
    ``batches`` is the number of consecutive blocks used for batch-means
    standard errors.
    """

    slots: int = 10_000_000
    warmup: Optional[int] = None
    seed: int = 0
    histogram_cap: int = 2000
    batches: int = 100

    def __post_init__(self):
        if self.slots < 1:
            raise ValueError("slots must be positive")
        if self.warmup is not None and not 0 <= self.warmup < self.slots:
            raise ValueError("warmup must lie in [0, slots)")
        if self.histogram_cap < 1:
            raise ValueError("histogram_cap must be at least 1")
        if self.batches < 2:
            raise ValueError("need at least two batches")


@dataclass(frozen=True)
class EmpiricalDist:
    """Histogram of observed queue lengths; the last bin is the overflow."""

    epoch_kind: EpochKind
    counts: np.ndarray
    total: int
    batch_counts: np.ndarray

    @property
    def probs(self) -> np.ndarray:
        return self.counts / max(self.total, 1)

    @property
    def std_error(self) -> np.ndarray:
        """Per-bin standard error from batch means (inf with under two batches)."""
        return _batch_se(self.batch_counts)

    @property
    def half_width_95(self) -> np.ndarray:
        return 1.96 * self.std_error


def _batch_se(batch_counts: np.ndarray) -> np.ndarray:
    totals = batch_counts.sum(axis=1)
    ok = totals > 0
    if ok.sum() < 2:
        return np.full(batch_counts.shape[1], np.inf)
    props = batch_counts[ok] / totals[ok, None]
    return props.std(axis=0, ddof=1) / math.sqrt(props.shape[0])


def default_warmup(model: QueueModel) -> int:
    rate = float(np.max(np.abs(find_interior_roots(model).interior_roots)))
    return max(10_000, math.ceil(20.0 / (1.0 - rate)))


@njit(cache=True)
def _run_chunk(q, u, inter, sizes, trials, caps, mu, first_slot, warmup, measured, n_batches, arb, pre):
    top = arb.shape[1] - 1
    k = 0
    for t in range(trials.shape[0]):
        slot = first_slot + t
        rec = slot >= warmup
        bucket = 0
        if rec:
            bucket = (slot - warmup) * n_batches // measured
            arb[bucket, min(q, top)] += 1
        if u == 0:
            if rec:
                pre[bucket, min(q, top)] += 1
            q += sizes[k]
            u = inter[k]
            k += 1
        u -= 1
        if trials[t] < mu:
            c = caps[t]
            q -= c if c < q else q
    return q, u


def simulate(model: QueueModel, cfg: SimConfig = SimConfig()) -> tuple[EmpiricalDist, EmpiricalDist]:
    """Run the slotted queue and return (arbitrary, pre_arrival) histograms."""
    if cfg.warmup is not None:
        warmup = cfg.warmup
    else:
        # runs shorter than the default warmup keep their second half
        warmup = default_warmup(model)
        if warmup >= cfg.slots // 2:
            warmup = cfg.slots // 2
    measured = cfg.slots - warmup
    n_batches = min(cfg.batches, measured)
    bins = cfg.histogram_cap + 2
    arb = np.zeros((n_batches, bins), dtype=np.int64)
    pre = np.zeros((n_batches, bins), dtype=np.int64)

    streams = [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(cfg.seed).spawn(4)]
    rng_inter, rng_size, rng_trial, rng_cap = streams

    q, u = 0, 0
    done = 0
    while done < cfg.slots:
        n = min(CHUNK, cfg.slots - done)
        inter = model.arrival.sample(rng_inter, n)
        sizes = model.batch.sample(rng_size, n)
        trials = rng_trial.random(n)
        caps = model.capacity.sample(rng_cap, n)
        q, u = _run_chunk(q, u, inter, sizes, trials, caps, model.mu, done, warmup, measured, n_batches, arb, pre)
        done += n

    def pack(kind, hist):
        counts = hist.sum(axis=0)
        return EmpiricalDist(kind, counts, int(counts.sum()), hist)

    return pack("arbitrary", arb), pack("pre_arrival", pre)


def scaled_tvd_threshold(slots: int, base: float = TVD_THRESHOLD, reference: int = REFERENCE_SLOTS) -> float:
    """TVD threshold grown like ``1/sqrt(slots)`` below the reference run length."""
    return base * max(1.0, math.sqrt(reference / slots))


@dataclass(frozen=True)
class CompareReport:
    epoch_kind: EpochKind
    tvd: float
    z: np.ndarray
    max_abs_z: float
    tvd_threshold: float
    z_threshold: float

    @property
    def passed(self) -> bool:
        return self.tvd < self.tvd_threshold and self.max_abs_z < self.z_threshold

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{self.epoch_kind}: TVD={self.tvd:.3e} (< {self.tvd_threshold:g}) "
            f"max|z|={self.max_abs_z:.2f} (< {self.z_threshold:g}) {verdict}"
        )


def compare(
    analytic: EpochDist,
    empirical: EmpiricalDist,
    *,
    tvd_threshold: float = TVD_THRESHOLD,
    z_threshold: float = 4.0,
    min_expected: float = 50.0,
) -> CompareReport:
    """Total variation distance and per-bin z-scores.

    z-scores use the larger of the batch-means standard error and the iid
    binomial one. Bins whose expected count is below ``min_expected`` are
    pooled into a single tail bin before scoring, as the normal
    approximation is meaningless for them; the TVD uses every bin.
    """
    if analytic.epoch_kind != empirical.epoch_kind:
        raise EpochKindMismatch(f"analytic {analytic.epoch_kind} vs empirical {empirical.epoch_kind}")
    bins = len(empirical.counts)
    exact = np.clip(analytic.probs(np.arange(bins - 1)), 0.0, None)
    exact = np.append(exact, max(0.0, 1.0 - exact.sum()))
    emp = empirical.probs
    tvd = 0.5 * float(np.abs(emp - exact).sum())

    n = empirical.total
    if n == 0:
        return CompareReport(analytic.epoch_kind, 1.0, np.array([np.inf]), math.inf, tvd_threshold, z_threshold)
    big = exact * n >= min_expected
    last = int(np.flatnonzero(big)[-1]) + 1 if big.any() else 0
    ex = np.append(exact[:last], exact[last:].sum())
    em = np.append(emp[:last], emp[last:].sum())
    bc = empirical.batch_counts
    se_bm = _batch_se(np.column_stack([bc[:, :last], bc[:, last:].sum(axis=1)]))
    se_bm = np.where(np.isfinite(se_bm), se_bm, 0.0)
    se = np.maximum(se_bm, np.sqrt(ex * (1.0 - ex) / n))
    diff = em - ex
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / se, np.where(diff == 0, 0.0, np.inf))
    return CompareReport(
        epoch_kind=analytic.epoch_kind,
        tvd=tvd,
        z=z,
        max_abs_z=float(np.max(np.abs(z))) if z.size else 0.0,
        tvd_threshold=tvd_threshold,
        z_threshold=z_threshold,
    )
