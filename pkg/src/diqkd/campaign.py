"""Monte Carlo campaign: generate -> resources -> key rates -> accumulate,
for each rank, with deterministic results regardless of worker count.

Sample k of rank r is a pure function of (seed, r, k), and work is split
into fixed-size chunks whose partial statistics are reduced in chunk order
with compensated summation.  Worker count only decides which worker touches
which chunk, so two runs with the same config are bit-identical even when
the thread pool size differs.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import chi2

from .errors import ContractViolation, NumericIntegrityError
from .keyrate import CountingRule, keyrate_ca_arrays, keyrate_osca, qber_from_singulars
from .resources import BELL_TOL, CHSH_MAX, resource_arrays
from .stategen import generate_batch

CHUNK = 65536  # fixed regardless of worker count; changing it changes nothing but speed


@dataclass(frozen=True)
class CampaignConfig:
    samples_per_rank: int = 1_000_000
    seed: int = 20240501
    ranks: tuple[int, ...] = (1, 2, 3, 4)
    bins_ln: int = 10
    bins_bell: int = 10
    attack_modes: tuple[str, ...] = ("ca", "osca")
    security_counting_rule: CountingRule = "require_chsh"
    worker_count: int | str = "auto"
    ln_thresholds: tuple[float, ...] = (0.5,)
    chsh_thresholds: tuple[float, ...] = (2.5,)

    def __post_init__(self):
        if self.samples_per_rank < 1:
            raise ContractViolation("samples_per_rank must be >= 1")
        if not self.ranks or any(r not in (1, 2, 3, 4) for r in self.ranks):
            raise ContractViolation(f"ranks must be a non-empty subset of 1..4, got {self.ranks}")
        if self.bins_ln < 1 or self.bins_bell < 1:
            raise ContractViolation("bin counts must be >= 1")
        if not self.attack_modes or any(a not in ("ca", "osca") for a in self.attack_modes):
            raise ContractViolation(f"attack_modes must be a subset of ca/osca, got {self.attack_modes}")
        if self.security_counting_rule not in ("require_chsh", "raw_rate_only"):
            raise ContractViolation(f"unknown counting rule {self.security_counting_rule!r}")
        if self.worker_count != "auto" and (
            not isinstance(self.worker_count, int) or self.worker_count < 1
        ):
            raise ContractViolation("worker_count must be 'auto' or a positive integer")

    def resolved_workers(self) -> int:
        if self.worker_count == "auto":
            return max(1, os.cpu_count() or 1)
        return int(self.worker_count)


def ln_edges(bins: int) -> np.ndarray:
    """Half-open (lo, hi] bin edges covering log-negativity range (0, 1]."""
    return np.linspace(0.0, 1.0, bins + 1)


def bell_edges(bins: int) -> np.ndarray:
    """Bin edges covering the CHSH violation range (2, 2*sqrt(2)]."""
    return np.linspace(2.0, CHSH_MAX, bins + 1)


@dataclass(frozen=True)
class Histogram:
    """Counts over half-open bins (edges[k], edges[k+1]]; values at or below
    the first edge (and above the last) are excluded.  ``normalized`` divides
    by the campaign sample count, not the in-range count."""

    edges: tuple[float, ...]
    counts: tuple[int, ...]
    n_total: int

    @property
    def normalized(self) -> tuple[float, ...]:
        return tuple(c / self.n_total for c in self.counts)


def bin_count(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Exact (lo, hi] binning."""
    edges = np.asarray(edges, dtype=np.float64)
    if (np.diff(edges) <= 0).any():
        raise ContractViolation("histogram edges must be strictly increasing")
    idx = np.searchsorted(edges, values, side="left")
    inside = (idx >= 1) & (idx <= len(edges) - 1)
    return np.bincount(idx[inside] - 1, minlength=len(edges) - 1).astype(np.int64)


def normalized_distribution(values: Sequence[float], edges: Sequence[float],
                            n_total: int | None = None) -> Histogram:
    """Histogram of ``values`` normalized by ``n_total`` (defaults to len(values))."""
    values = np.asarray(values, dtype=np.float64)
    n_total = len(values) if n_total is None else n_total
    counts = bin_count(values, np.asarray(edges, dtype=np.float64))
    return Histogram(edges=tuple(float(e) for e in edges),
                     counts=tuple(int(c) for c in counts), n_total=n_total)


def average_positive_keyrate(rates: Iterable[float]) -> float | None:
    """Sum of strictly positive rates divided by their count; None when empty."""
    arr = np.asarray([r for r in rates if r is not None], dtype=np.float64)
    pos = arr[arr > 0.0]
    if pos.size == 0:
        return None
    return float(pos.sum() / pos.size)


def poisson_interval_95(count: int) -> tuple[float, float]:
    """Exact (Garwood) central 95% interval for a Poisson mean given ``count``."""
    lo = 0.0 if count == 0 else float(chi2.ppf(0.025, 2 * count) / 2.0)
    hi = float(chi2.ppf(0.975, 2 * count + 2) / 2.0)
    return lo, hi


@dataclass(frozen=True)
class RankSummary:
    rank: int
    n_total: int
    n_entangled: int
    n_bell_nonlocal: int
    n_positive_osca: int
    n_positive_ca: int
    avg_r_osca: float | None
    avg_r_ca: float | None
    ln_histogram: Histogram
    bell_histogram: Histogram
    ln_ge_counts: dict
    chsh_ge_counts: dict
    ca_poisson_95: tuple[float, float]


@dataclass(frozen=True)
class CampaignSummary:
    config: CampaignConfig
    ranks: tuple[RankSummary, ...]
    wall_time_s: float
    samples_per_second: float

    def rank_summary(self, rank: int) -> RankSummary:
        for rs in self.ranks:
            if rs.rank == rank:
                return rs
        raise ContractViolation(f"rank {rank} not in campaign")


@dataclass
class _ChunkStats:
    n: int = 0
    n_entangled: int = 0
    n_bell: int = 0
    n_pos_osca: int = 0
    n_pos_ca: int = 0
    sum_osca: float = 0.0
    sum_ca: float = 0.0
    ln_counts: np.ndarray | None = None
    bell_counts: np.ndarray | None = None
    ln_ge: np.ndarray | None = None
    chsh_ge: np.ndarray | None = None


def _chunk_stats(config: CampaignConfig, rank: int, start: int, stop: int,
                 ln_e: np.ndarray, bell_e: np.ndarray) -> _ChunkStats:
    idx = np.arange(start, stop, dtype=np.uint64)
    rho = generate_batch(rank, config.seed, idx)
    try:
        arr = resource_arrays(rho)
        q = qber_from_singulars(arr.sv1, arr.sv2)
        # integrity: the nonlocality route to the QBER must agree with the direct one
        alt = 0.5 * (1.0 - np.sqrt(arr.chsh**2 / 16.0 + np.abs(arr.sv1 * arr.sv2) / 2.0))
        gap = np.abs(alt - q)
        if gap.max() > 1e-8:
            k = int(gap.argmax())
            raise NumericIntegrityError(
                f"QBER route mismatch {gap.max():.3e} at (rank {rank}, sample {start + k})"
            )
        osca = keyrate_osca(q)
        ca, ca_defined = keyrate_ca_arrays(q, arr.chsh)
    except NumericIntegrityError as exc:
        raise NumericIntegrityError(f"{exc} [chunk {start}:{stop} of rank {rank}]") from exc

    violates = arr.chsh > 2.0 + BELL_TOL
    allow = violates if config.security_counting_rule == "require_chsh" else np.ones_like(violates)
    pos_osca = (osca > 0.0) & allow
    pos_ca = ca_defined & (np.nan_to_num(ca, nan=-1.0) > 0.0) & allow

    ent = arr.entangled
    st = _ChunkStats(n=int(idx.size))
    st.n_entangled = int(ent.sum())
    st.n_bell = int(violates.sum())
    st.n_pos_osca = int(pos_osca.sum())
    st.n_pos_ca = int(pos_ca.sum())
    st.sum_osca = float(osca[pos_osca].sum())
    st.sum_ca = float(ca[pos_ca].sum())
    st.ln_counts = bin_count(arr.log_negativity[ent], ln_e)
    st.bell_counts = bin_count(arr.chsh[violates], bell_e)
    st.ln_ge = np.array([(arr.log_negativity >= t).sum() for t in config.ln_thresholds],
                        dtype=np.int64)
    st.chsh_ge = np.array([(arr.chsh >= t).sum() for t in config.chsh_thresholds],
                          dtype=np.int64)
    return st


def _reduce_rank(config: CampaignConfig, rank: int, chunks: list[_ChunkStats],
                 ln_e: np.ndarray, bell_e: np.ndarray) -> RankSummary:
    n = n_ent = n_bell = n_po = n_pc = 0
    ln_counts = np.zeros(len(ln_e) - 1, dtype=np.int64)
    bell_counts = np.zeros(len(bell_e) - 1, dtype=np.int64)
    ln_ge = np.zeros(len(config.ln_thresholds), dtype=np.int64)
    chsh_ge = np.zeros(len(config.chsh_thresholds), dtype=np.int64)
    sum_o = comp_o = sum_c = comp_c = 0.0
    for st in chunks:  # fixed chunk order: reduction independent of scheduling
        n += st.n
        n_ent += st.n_entangled
        n_bell += st.n_bell
        n_po += st.n_pos_osca
        n_pc += st.n_pos_ca
        ln_counts += st.ln_counts
        bell_counts += st.bell_counts
        ln_ge += st.ln_ge
        chsh_ge += st.chsh_ge
        # Kahan-compensated accumulation of the chunk sums
        for val, which in ((st.sum_osca, "o"), (st.sum_ca, "c")):
            if which == "o":
                y = val - comp_o
                t = sum_o + y
                comp_o = (t - sum_o) - y
                sum_o = t
            else:
                y = val - comp_c
                t = sum_c + y
                comp_c = (t - sum_c) - y
                sum_c = t
    return RankSummary(
        rank=rank,
        n_total=n,
        n_entangled=n_ent,
        n_bell_nonlocal=n_bell,
        n_positive_osca=n_po,
        n_positive_ca=n_pc,
        avg_r_osca=(sum_o / n_po) if n_po else None,
        avg_r_ca=(sum_c / n_pc) if n_pc else None,
        ln_histogram=Histogram(tuple(map(float, ln_e)), tuple(map(int, ln_counts)), n),
        bell_histogram=Histogram(tuple(map(float, bell_e)), tuple(map(int, bell_counts)), n),
        ln_ge_counts={float(t): int(c) for t, c in zip(config.ln_thresholds, ln_ge)},
        chsh_ge_counts={float(t): int(c) for t, c in zip(config.chsh_thresholds, chsh_ge)},
        ca_poisson_95=poisson_interval_95(n_pc),
    )


def run_campaign(config: CampaignConfig) -> CampaignSummary:
    t0 = time.perf_counter()
    workers = config.resolved_workers()
    ln_e = ln_edges(config.bins_ln)
    bell_e = bell_edges(config.bins_bell)
    summaries = []
    for rank in config.ranks:
        n = config.samples_per_rank
        bounds = [(s, min(n, s + CHUNK)) for s in range(0, n, CHUNK)]
        if workers == 1 or len(bounds) == 1:
            chunks = [_chunk_stats(config, rank, a, b, ln_e, bell_e) for a, b in bounds]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                chunks = list(
                    pool.map(lambda ab: _chunk_stats(config, rank, ab[0], ab[1], ln_e, bell_e),
                             bounds)
                )
        summaries.append(_reduce_rank(config, rank, chunks, ln_e, bell_e))
    wall = time.perf_counter() - t0
    total = config.samples_per_rank * len(config.ranks)
    return CampaignSummary(
        config=config,
        ranks=tuple(summaries),
        wall_time_s=wall,
        samples_per_second=total / wall if wall > 0 else math.inf,
    )


# ---------------------------------------------------------------------------
# summary queries
# ---------------------------------------------------------------------------

def fraction_with_ln_at_least(summary: RankSummary, threshold: float) -> float:
    """count(LN >= threshold) / N0 at a threshold tracked by the campaign config."""
    if not (0.0 < threshold <= 1.0):
        raise ContractViolation(f"LN threshold must be in (0, 1], got {threshold}")
    if threshold not in summary.ln_ge_counts:
        raise ContractViolation(
            f"threshold {threshold} was not tracked; add it to CampaignConfig.ln_thresholds"
        )
    return summary.ln_ge_counts[threshold] / summary.n_total


def fraction_with_chsh_at_least(summary: RankSummary, threshold: float) -> float:
    """count(S >= threshold) / N0 at a tracked threshold."""
    if not (2.0 < threshold <= CHSH_MAX):
        raise ContractViolation(f"CHSH threshold must be in (2, 2*sqrt(2)], got {threshold}")
    if threshold not in summary.chsh_ge_counts:
        raise ContractViolation(
            f"threshold {threshold} was not tracked; add it to CampaignConfig.chsh_thresholds"
        )
    return summary.chsh_ge_counts[threshold] / summary.n_total


def fraction_in_bins_labeled_at_least(hist: Histogram, label: float) -> float:
    """Mass of the bins whose (upper-edge) label is >= ``label``.

    Histogram bins are conventionally labeled by their upper edge; a quoted
    "fraction with value L and above" in that convention means every bin
    whose label is at least L, i.e. all values above the edge just below L.
    """
    edges = np.asarray(hist.edges)
    uppers = edges[1:]
    mask = uppers >= label - 1e-9
    if not mask.any():
        raise ContractViolation(f"label {label} above the last bin edge {uppers[-1]}")
    return sum(c for c, m in zip(hist.counts, mask) if m) / hist.n_total


# ---------------------------------------------------------------------------
# key-positive sample collection (envelope studies)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnvelopeSamples:
    """Key-positive samples of one rank under one attack, with their bounds."""

    rank: int
    attack: str
    n_examined: int
    negativity: np.ndarray
    rate: np.ndarray
    r_pure: np.ndarray
    r_werner: np.ndarray
    inside: np.ndarray

    @property
    def n_positive(self) -> int:
        return int(self.rate.size)

    @property
    def inside_fraction(self) -> float:
        return float(self.inside.mean()) if self.rate.size else float("nan")


def collect_envelope_samples(
    rank: int,
    seed: int,
    attack: str,
    min_positive: int | None = None,
    max_samples: int = 10_000_000,
    samples: int | None = None,
    counting_rule: CountingRule = "require_chsh",
) -> EnvelopeSamples:
    """Stream batches until ``min_positive`` key-positive samples were seen
    (or ``samples`` examined, when given), recording negativity, raw rate and
    the pure/Werner bounds for each key-positive sample.
    """
    from .families import envelope_bounds

    if attack not in ("ca", "osca"):
        raise ContractViolation(f"attack must be 'ca' or 'osca', got {attack!r}")
    if samples is None and min_positive is None:
        raise ContractViolation("one of samples / min_positive is required")
    negs, rates = [], []
    examined = 0
    while True:
        if samples is not None and examined >= samples:
            break
        if samples is None and examined >= max_samples:
            break
        stop = examined + CHUNK
        if samples is not None:
            stop = min(stop, samples)
        idx = np.arange(examined, stop, dtype=np.uint64)
        examined = stop
        rho = generate_batch(rank, seed, idx)
        arr = resource_arrays(rho)
        q = qber_from_singulars(arr.sv1, arr.sv2)
        violates = arr.chsh > 2.0 + BELL_TOL
        allow = violates if counting_rule == "require_chsh" else np.ones_like(violates)
        if attack == "osca":
            r = keyrate_osca(q)
            pos = (r > 0.0) & allow
        else:
            r, defined = keyrate_ca_arrays(q, arr.chsh)
            pos = defined & (np.nan_to_num(r, nan=-1.0) > 0.0) & allow
        negs.append(arr.negativity[pos])
        rates.append(r[pos])
        if samples is None and sum(len(x) for x in rates) >= min_positive:
            break
    neg = np.concatenate(negs) if negs else np.empty(0)
    rate = np.concatenate(rates) if rates else np.empty(0)
    upper, lower = envelope_bounds(neg, attack) if neg.size else (np.empty(0), np.empty(0))
    inside = (lower - 1e-9 <= rate) & (rate <= upper + 1e-9)
    return EnvelopeSamples(
        rank=rank, attack=attack, n_examined=examined,
        negativity=neg, rate=rate, r_pure=upper, r_werner=lower, inside=inside,
    )
