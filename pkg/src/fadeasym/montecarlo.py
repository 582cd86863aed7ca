"""Conditional-error Monte Carlo with batch-means confidence intervals.

Each batch owns a PCG64 stream spawned from ``SeedSequence(seed)``, so a
result depends only on ``(seed, draws, batches)`` and never on the number
of worker threads: batches are reduced in index order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .channels import ChannelModel, sample_gain_weighted
from .error_models import ErrorRateModel
from .numerics import crossing_snr

CHUNK = 1 << 20


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings.

    Parameters
    ----------
    seed : int
        Master seed (any nonnegative integer below 2**64).
    draws, batches : int
        Total channel draws, split as evenly as possible into batches.
    confidence : float
        Two-sided level of the batch-means interval.
    workers : int
        Threads used to run batches; does not change the result.
    importance : bool
        Oversample deep fades through a defensive mixture (see
        :func:`fadeasym.channels.sample_gain_weighted`).
    importance_fraction : float
        Share of draws taken from the shrunken component.
    """

    seed: int = 0
    draws: int = 10**7
    batches: int = 20
    confidence: float = 0.95
    workers: int = 1
    importance: bool = False
    importance_fraction: float = 0.1

    def __post_init__(self):
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit nonnegative integer")
        if not (self.draws >= self.batches >= 2):
            raise ValueError("need draws >= batches >= 2")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 < self.importance_fraction < 1:
            raise ValueError("importance_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class McResult:
    estimate: float
    halfwidth: float
    draws: int
    seed: int

    def __post_init__(self):
        if not self.halfwidth >= 0:
            raise ValueError("halfwidth must be nonnegative")
        if not 0 <= self.estimate <= 1:
            raise ValueError(f"estimate {self.estimate} outside [0, 1]")

    @property
    def interval(self) -> tuple[float, float]:
        return self.estimate - self.halfwidth, self.estimate + self.halfwidth

    def covers(self, value: float) -> bool:
        lo, hi = self.interval
        return lo <= value <= hi


def _shifted_mean(y: np.ndarray, ref: float) -> float:
    # exact for constant data, and less cancellation than a raw sum
    return ref + float(np.mean(y - ref))


def importance_shrink(rho: float) -> float:
    """Scale applied to the shrunken mixture component: pushes mass below ``5/rho``."""
    return 1.0 if rho <= 5.0 else 5.0 / rho


def _draw_fn(source, cfg: McConfig, rho: float) -> Callable:
    shrink = importance_shrink(rho)
    if cfg.importance and shrink < 1.0:
        if hasattr(source, "sample_weighted"):
            return lambda rng, n: source.sample_weighted(rng, n, shrink, cfg.importance_fraction)
        if isinstance(source, ChannelModel):
            return lambda rng, n: sample_gain_weighted(source, rng, n, shrink, cfg.importance_fraction)
        raise ValueError("importance sampling needs a channel with a density")
    if hasattr(source, "sample"):
        return lambda rng, n: (source.sample(rng, n), None)
    if callable(source):
        return lambda rng, n: (np.asarray(source(rng, n), dtype=float), None)
    raise TypeError("source must be a channel, a combined channel or a callable (rng, n) -> gains")


def _batch_mean(model: ErrorRateModel, draw: Callable, rho: float, ss: np.random.SeedSequence, n: int) -> float:
    rng = np.random.Generator(np.random.PCG64(ss))
    parts, sizes = [], []
    ref = None
    left = n
    while left > 0:
        k = min(CHUNK, left)
        z, w = draw(rng, k)
        y = np.asarray(model.pe(rho * np.asarray(z, dtype=float)), dtype=float)
        if w is not None:
            y = y * w
        if ref is None:
            ref = float(y[0])
        parts.append(_shifted_mean(y, ref))
        sizes.append(k)
        left -= k
    if len(parts) == 1:
        return parts[0]
    return ref + math.fsum(s * (p - ref) for p, s in zip(parts, sizes)) / n


def _batch_sizes(draws: int, batches: int) -> list[int]:
    q, r = divmod(draws, batches)
    return [q + 1 if b < r else q for b in range(batches)]


def mc_average_error(model: ErrorRateModel, source, rho: float, cfg: McConfig | None = None) -> McResult:
    """Estimate ``E[Pe(rho z)]`` from channel draws.

    Parameters
    ----------
    model : ErrorRateModel
        Supplies the vectorized ``pe``.
    source : ChannelModel, CombinedChannel or callable
        Anything with ``sample(rng, n)``, or a function ``(rng, n) -> gains``.
    rho : float
        Average SNR (linear).
    cfg : McConfig, optional

    Returns
    -------
    McResult
        Point estimate and the Student-t batch-means half-width.
    """
    cfg = cfg or McConfig()
    if not rho >= 0:
        raise ValueError("rho must be nonnegative")
    draw = _draw_fn(source, cfg, rho)
    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.batches)
    sizes = _batch_sizes(cfg.draws, cfg.batches)
    jobs = list(zip(seqs, sizes))
    if cfg.workers == 1:
        means = [_batch_mean(model, draw, rho, ss, n) for ss, n in jobs]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            means = list(pool.map(lambda job: _batch_mean(model, draw, rho, *job), jobs))
    m = np.array(means)
    ref = float(m[0])
    estimate = ref + math.fsum(n * (v - ref) for v, n in zip(means, sizes)) / cfg.draws
    sd = float(np.std(m - ref, ddof=1))
    tq = float(stats.t.ppf(0.5 + cfg.confidence / 2.0, cfg.batches - 1))
    halfwidth = tq * sd / math.sqrt(cfg.batches)
    return McResult(estimate, halfwidth, cfg.draws, cfg.seed)


def mc_curve(
    model: ErrorRateModel,
    source,
    snr_grid_db: Sequence[float],
    cfg: McConfig | None = None,
    common_random_numbers: bool = False,
) -> list[tuple[float, McResult]]:
    """One :func:`mc_average_error` per grid point.

    Point ``i`` uses seed ``cfg.seed + i``; with ``common_random_numbers``
    every point reuses ``cfg.seed`` so the same gains are seen at every SNR.
    """
    cfg = cfg or McConfig()
    grid = [float(v) for v in snr_grid_db]
    if not grid:
        raise ValueError("empty SNR grid")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("SNR grid must be sorted ascending")
    out = []
    for i, snr in enumerate(grid):
        seed = cfg.seed if common_random_numbers else (cfg.seed + i) % 2**64
        point_cfg = McConfig(seed, cfg.draws, cfg.batches, cfg.confidence, cfg.workers, cfg.importance, cfg.importance_fraction)
        out.append((snr, mc_average_error(model, source, 10.0 ** (snr / 10.0), point_cfg)))
    return out


def mc_crossing_snr(
    model: ErrorRateModel,
    source,
    target: float,
    center_db: float,
    cfg: McConfig | None = None,
    half_span_db: float = 0.5,
    points: int = 3,
) -> tuple[float, list[tuple[float, McResult]]]:
    """SNR where the Monte Carlo curve crosses ``target``, sampled only near ``center_db``.

    Common random numbers keep the short curve monotone.  Raises
    ``ValueError`` when the target is not bracketed by the local grid.
    """
    if points < 2:
        raise ValueError("need at least 2 points")
    grid = np.linspace(center_db - half_span_db, center_db + half_span_db, points)
    curve = mc_curve(model, source, grid, cfg, common_random_numbers=True)
    return crossing_snr([(s, r.estimate) for s, r in curve], target), curve
