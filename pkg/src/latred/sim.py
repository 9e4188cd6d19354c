"""Seeded Monte-Carlo BER experiments.

Every trial owns a counter-split Philox stream derived from the master
seed, so results are a pure function of the configuration regardless of
how trials are distributed over workers.  Within a trial all detectors
see the same channel, symbols and noise at a given SNR point.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .detect import (
    BITS_PER_SYMBOL,
    ExhaustiveMlDetector,
    LrZfDetector,
    SYMBOL_ENERGY,
    qam16_demodulate,
    qam16_modulate,
    zf_detect,
)
from .errors import TrialError
from .linalg import qr_decompose
from .reduction import MlllConfig, OpCounters, clll_reduce, mlll_reduce

DETECTOR_ORDER = ("zf", "lr_zf_mlll", "lr_zf_clll", "ml")


@dataclass(frozen=True)
class SimConfig:
    """Experiment description; the seed is part of the contract."""

    n_r: int = 4
    m_t: int = 4
    snr_db_grid: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    trials: int = 10000
    seed: int = 1
    detectors: tuple[str, ...] = DETECTOR_ORDER
    mlll: MlllConfig = field(default_factory=MlllConfig)

    def __post_init__(self):
        if not 1 <= self.m_t <= self.n_r:
            raise ValueError(f"need n_r >= m_t >= 1, got n_r={self.n_r} m_t={self.m_t}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        grid = tuple(float(s) for s in self.snr_db_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("snr_db_grid must be non-empty and strictly increasing")
        object.__setattr__(self, "snr_db_grid", grid)
        dets = tuple(self.detectors)
        if not dets or len(set(dets)) != len(dets):
            raise ValueError("detectors must be a non-empty set of names")
        for d in dets:
            if d not in DETECTOR_ORDER:
                raise ValueError(f"unknown detector {d!r}")
        object.__setattr__(
            self, "detectors", tuple(d for d in DETECTOR_ORDER if d in dets)
        )
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    detector: str
    bit_errors: int
    bits_total: int
    ber: float


@dataclass(frozen=True)
class SweepResult:
    config: SimConfig
    points: tuple[BerPoint, ...]
    wall_time: float
    op_counters: OpCounters


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-split Philox stream for one trial of a seeded experiment."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, trial]))


def _complex_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    """n i.i.d. CN(0,1) samples via the Box-Muller polar form."""
    u1 = rng.random(n)
    u2 = rng.random(n)
    radius = np.sqrt(-np.log1p(-u1))
    angle = 2.0 * np.pi * u2
    return radius * (np.cos(angle) + 1j * np.sin(angle))


def gen_channel(rng: np.random.Generator, n_r: int, m_t: int) -> np.ndarray:
    """Flat-fading channel: i.i.d. CN(0,1) entries."""
    return _complex_normal(rng, n_r * m_t).reshape((n_r, m_t), order="F")


def gen_noise(rng: np.random.Generator, sigma2: float, n: int) -> np.ndarray:
    """n i.i.d. CN(0, sigma2) samples."""
    if not sigma2 > 0.0:
        raise ValueError(f"noise variance must be positive, got {sigma2}")
    return np.sqrt(sigma2) * _complex_normal(rng, n)


def noise_variance(snr_db: float, m_t: int) -> float:
    """Receive-side noise variance: m_t * Es / SNR with Es = 10 for 16-QAM."""
    return m_t * SYMBOL_ENERGY / (10.0 ** (snr_db / 10.0))


def _accumulate_counters(total: OpCounters, part: OpCounters) -> None:
    total.cmul += part.cmul
    total.cordic += part.cordic
    total.siegel += part.siegel
    total.size_reduction += part.size_reduction
    total.stream += part.stream
    total.arrange += part.arrange


def _run_trial_block(config: SimConfig, start: int, stop: int):
    """Error counts over trials [start, stop); returns (errors, counters)."""
    errors = np.zeros((len(config.snr_db_grid), len(config.detectors)), dtype=np.int64)
    counters = OpCounters()
    sigma2s = [noise_variance(s, config.m_t) for s in config.snr_db_grid]
    for t in range(start, stop):
        try:
            rng = trial_rng(config.seed, t)
            h = gen_channel(rng, config.n_r, config.m_t)
            qr = qr_decompose(h)
            detectors = {}
            for name in config.detectors:
                if name == "zf":
                    detectors[name] = lambda y, q=qr: zf_detect(q, y)
                elif name == "lr_zf_mlll":
                    rb = mlll_reduce(qr.q, qr.r, config.mlll)
                    _accumulate_counters(counters, rb.counters)
                    detectors[name] = LrZfDetector(rb).detect
                elif name == "lr_zf_clll":
                    rb = clll_reduce(qr.q, qr.r, config.mlll.delta)
                    _accumulate_counters(counters, rb.counters)
                    detectors[name] = LrZfDetector(rb).detect
                else:
                    detectors[name] = ExhaustiveMlDetector(h).detect
            bits = (rng.random(BITS_PER_SYMBOL * config.m_t) < 0.5).astype(np.uint8)
            x = qam16_modulate(bits)
            for si, sigma2 in enumerate(sigma2s):
                noise = gen_noise(rng, sigma2, config.n_r)
                y = h @ x + noise
                for di, name in enumerate(config.detectors):
                    detected_bits = qam16_demodulate(detectors[name](y))
                    errors[si, di] += int(np.count_nonzero(detected_bits != bits))
        except Exception as exc:
            raise TrialError(f"trial {t}: {exc}") from exc
    return errors, counters


def run_sweep(config: SimConfig, workers: int = 1) -> SweepResult:
    """Run the configured experiment; deterministic for any worker count."""
    t0 = time.perf_counter()
    if workers < 1:
        raise ValueError("workers must be >= 1")
    total = np.zeros((len(config.snr_db_grid), len(config.detectors)), dtype=np.int64)
    counters = OpCounters()
    if workers == 1 or config.trials == 1:
        errors, part = _run_trial_block(config, 0, config.trials)
        total += errors
        _accumulate_counters(counters, part)
    else:
        bounds = np.linspace(0, config.trials, workers * 4 + 1, dtype=int)
        spans = [(int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_trial_block, config, a, b) for a, b in spans]
            for fut in futures:
                errors, part = fut.result()
                total += errors
                _accumulate_counters(counters, part)
    bits_per_point = config.trials * BITS_PER_SYMBOL * config.m_t
    points = []
    for si, snr in enumerate(config.snr_db_grid):
        for di, name in enumerate(config.detectors):
            nerr = int(total[si, di])
            points.append(
                BerPoint(
                    snr_db=snr,
                    detector=name,
                    bit_errors=nerr,
                    bits_total=bits_per_point,
                    ber=nerr / bits_per_point,
                )
            )
    return SweepResult(
        config=config,
        points=tuple(points),
        wall_time=time.perf_counter() - t0,
        op_counters=counters,
    )
