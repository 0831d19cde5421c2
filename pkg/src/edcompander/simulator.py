"""Seeded Monte Carlo of the quantize -> orthogonal signal -> ML decode chain.

With one-hot sqrt(E) inputs the ML decoder errs iff the largest of the N - 1
noise coordinates off the transmitted index beats sqrt(gamma) + Z, so a
sample needs only two uniforms/normals no matter how large N is.  On an
error the decoded index is uniform over the N - 1 wrong indices (the noise
coordinates are exchangeable).  Ties in the argmax have probability zero
under continuous noise and are not modelled.

Work is cut into fixed chunks of ``CHUNK_SIZE`` samples.  Chunk ``i`` draws
from ``SeedSequence(seed, spawn_key=(i,))`` and partial sums are merged in
chunk order, so results depend on the seed only, never on the worker count.
"""

from __future__ import annotations

import enum
import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .analysis import (
    end_to_end_bound,
    exact_orthogonal_error_prob,
    knopp_analytic_bound,
    knopp_optimize,
    naive_design,
    num_levels,
    optimize_design,
    outage_probability_bound,
)
from .compander import MAX_LEVELS, Quantizer, SourceKind, SourceModel, build_quantizer
from .errors import BoundViolation, ConfigurationError, InconclusiveError, OutOfRegimeError

CHUNK_SIZE = 65536


class SimMode(enum.Enum):
    ANALYTIC_OUTAGE = "analytic"
    FULL_CHANNEL = "full"


class DesignChoice(enum.Enum):
    OPTIMIZED = "optimized"
    NAIVE = "naive"


@dataclass(frozen=True, eq=False)
class SimConfig:
    """One simulation run.

    ``design`` is anything with ``source``, ``c`` and ``density``
    (a CompanderDesign or NaiveDesign).  ``n_levels`` overrides the
    N = round(c e^(gamma/12)) rule when given.
    """

    design: object
    gamma: float
    n_samples: int
    seed: int
    mode: SimMode = SimMode.FULL_CHANNEL
    n_levels: Optional[int] = None

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ConfigurationError(f"gamma must be nonnegative, got {self.gamma}")
        if self.n_samples < 1:
            raise ConfigurationError("n_samples must be at least 1")
        n = self.levels()
        if n < 2:
            raise ConfigurationError("need at least two quantization levels")
        if n > MAX_LEVELS:
            raise ConfigurationError(
                f"N = {n} at gamma = {self.gamma} exceeds the level budget of {MAX_LEVELS}")

    def levels(self) -> int:
        if self.n_levels is not None:
            return int(self.n_levels)
        try:
            return num_levels(self.design.c, self.gamma)
        except OverflowError as exc:
            raise ConfigurationError(str(exc)) from None


@dataclass(frozen=True)
class SimResult:
    mse: float
    mse_given_outage: float
    mse_given_no_outage: float
    empirical_outage_rate: float
    exact_outage_prob: float
    n_outages: int
    n_samples: int
    n_levels: int
    mse_std_error: float

    def decomposition(self) -> float:
        """Pr[O] E[.|O] + Pr[O^c] E[.|O^c]; empty events contribute zero."""
        out = self.empirical_outage_rate * self.mse_given_outage if self.n_outages else 0.0
        rest = (1.0 - self.empirical_outage_rate) * self.mse_given_no_outage \
            if self.n_outages < self.n_samples else 0.0
        return out + rest


@functools.lru_cache(maxsize=32)
def _quantizer(density, n_levels) -> Quantizer:
    return build_quantizer(density, n_levels)


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _chunks(n_samples: int):
    return [(i, min(CHUNK_SIZE, n_samples - start))
            for i, start in enumerate(range(0, n_samples, CHUNK_SIZE))]


def sample_source(source: SourceModel, rng: np.random.Generator, size: int):
    if source.kind is SourceKind.GAUSSIAN:
        return rng.standard_normal(size)
    return rng.uniform(-0.5, 0.5, size)


def max_of_normals(u, k: int):
    """Max of k i.i.d. standard normals from a uniform u: Phi^{-1}(u^(1/k)).

    Evaluated as -Phi^{-1}(1 - u^(1/k)) with expm1 so the upper tail keeps
    full precision for large k.
    """
    with np.errstate(divide="ignore"):
        return -special.ndtri(-np.expm1(np.log(u) / k))


def wrong_index(true_index, n_levels: int, rng: np.random.Generator):
    """Uniform draw over the N - 1 indices different from ``true_index``."""
    j = rng.integers(0, n_levels - 1, size=np.shape(true_index))
    return j + (j >= true_index)


def channel_decode(true_index, gamma: float, n_levels: int, rng: np.random.Generator,
                   mode: SimMode = SimMode.FULL_CHANNEL, outage_prob: float | None = None):
    """Decoded indices for a batch of transmitted indices."""
    true_index = np.asarray(true_index)
    size = true_index.shape
    if mode is SimMode.FULL_CHANNEL:
        z = rng.standard_normal(size)
        u = rng.random(size)
        outage = max_of_normals(u, n_levels - 1) > math.sqrt(gamma) + z
    else:
        if outage_prob is None:
            outage_prob = exact_orthogonal_error_prob(gamma, n_levels)
        outage = rng.random(size) < outage_prob
    wrong = wrong_index(true_index, n_levels, rng)
    return np.where(outage, wrong, true_index)


def _run_chunk(config: SimConfig, quantizer: Quantizer, pe: float, index: int, size: int):
    rng = _chunk_rng(config.seed, index)
    x = sample_source(config.design.source, rng, size)
    k = quantizer.cell_index(x)
    decoded = channel_decode(k, config.gamma, quantizer.n_levels, rng, config.mode, pe)
    err = (x - quantizer.levels[decoded]) ** 2
    out = decoded != k
    return (
        float(err.sum()),
        float(np.square(err).sum()),
        int(out.sum()),
        float(err[out].sum()),
    )


def run_simulation(config: SimConfig, workers: int = 1) -> SimResult:
    n = config.levels()
    quantizer = _quantizer(config.design.density, n)
    pe = exact_orthogonal_error_prob(config.gamma, n)
    chunks = _chunks(config.n_samples)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _run_chunk(config, quantizer, pe, *c), chunks))
    else:
        parts = [_run_chunk(config, quantizer, pe, *c) for c in chunks]

    total = total_sq = out_sum = 0.0
    n_out = 0
    for s, s2, no, so in parts:
        total += s
        total_sq += s2
        n_out += no
        out_sum += so
    m = config.n_samples
    mse = total / m
    var = max(total_sq / m - mse * mse, 0.0) * m / max(m - 1, 1)
    no_out = m - n_out
    return SimResult(
        mse=mse,
        mse_given_outage=out_sum / n_out if n_out else math.nan,
        mse_given_no_outage=(total - out_sum) / no_out if no_out else math.nan,
        empirical_outage_rate=n_out / m,
        exact_outage_prob=pe,
        n_outages=n_out,
        n_samples=m,
        n_levels=n,
        mse_std_error=math.sqrt(var / m),
    )


def _forced_chunk(config: SimConfig, quantizer: Quantizer, index: int, size: int):
    rng = _chunk_rng(config.seed, index)
    x = sample_source(config.design.source, rng, size)
    k = quantizer.cell_index(x)
    err = (x - quantizer.levels[wrong_index(k, quantizer.n_levels, rng)]) ** 2
    return float(err.sum()), float(np.square(err).sum())


def conditional_outage_check(config: SimConfig, min_outages: int = 1000):
    """Estimate E[(X - Xhat)^2 | outage] and compare with its finite-N bound.

    X is independent of the outage event, so every sample is treated as an
    outage and decoded to a uniformly drawn wrong level.  The bound is
    N/(N-1) (sigma^2 + mean of the squared levels).

    Returns ``(empirical, bound)``; raises BoundViolation if the estimate
    exceeds the bound by more than four standard errors.
    """
    if config.n_samples < min_outages:
        raise InconclusiveError(
            f"only {config.n_samples} forced outages; need at least {min_outages}")
    n = config.levels()
    quantizer = _quantizer(config.design.density, n)
    parts = [_forced_chunk(config, quantizer, *c) for c in _chunks(config.n_samples)]
    s = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    m = config.n_samples
    mean = s / m
    stderr = math.sqrt(max(s2 / m - mean * mean, 0.0) / (m - 1))
    bound = n / (n - 1) * (config.design.source.second_moment
                          + float(np.mean(np.square(quantizer.levels))))
    if mean > bound + 4.0 * stderr:
        raise BoundViolation(f"E[err | O] = {mean:.6g} exceeds bound {bound:.6g} + 4 * {stderr:.3g}")
    return mean, bound


# --------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRecord:
    gamma: float
    n_levels: int
    bound_optimized: float
    bound_naive: float
    knopp_numeric: Optional[float]
    knopp_analytic: Optional[float]
    sim_mse: Optional[float]
    sim_stderr: Optional[float]
    sim_outage_rate: Optional[float]
    pe_exact: float
    pe_bound: Optional[float]
    neg_ln_D: float


@functools.lru_cache(maxsize=4)
def designs_for(source: SourceModel):
    """(optimized, naive) designs for a source, computed once per process."""
    return optimize_design(source), naive_design(source)


def _row_seed(seed: int, row: int) -> int:
    return int(np.random.SeedSequence([seed, row]).generate_state(1, np.uint64)[0])


def sweep(source: SourceModel, design_choice: DesignChoice, gamma_grid: Sequence[float],
          n_samples: int = 0, seed: int = 0, mode: SimMode = SimMode.ANALYTIC_OUTAGE,
          workers: int = 1) -> list[SweepRecord]:
    """One SweepRecord per gamma; ``n_samples = 0`` leaves the sim columns empty."""
    opt, naive = designs_for(source)
    design = opt if design_choice is DesignChoice.OPTIMIZED else naive
    records = []
    for row, gamma in enumerate(gamma_grid):
        gamma = float(gamma)
        try:
            n = num_levels(design.c, gamma)
        except OverflowError:
            raise ConfigurationError(f"N overflows at gamma = {gamma}") from None
        if n_samples > 0 and n > MAX_LEVELS:
            raise ConfigurationError(
                f"N = {n} at gamma = {gamma} exceeds the level budget of {MAX_LEVELS}")
        try:
            pe_bound = outage_probability_bound(gamma, n)
        except OutOfRegimeError:
            pe_bound = None
        knopp_num = knopp_ana = None
        if source.kind is SourceKind.GAUSSIAN and gamma > 0:
            knopp_num = knopp_optimize(gamma)[1]
            knopp_ana = knopp_analytic_bound(gamma)
        sim_mse = sim_err = sim_rate = None
        if n_samples > 0:
            cfg = SimConfig(design, gamma, n_samples, _row_seed(seed, row), mode)
            res = run_simulation(cfg, workers=workers)
            sim_mse, sim_err, sim_rate = res.mse, res.mse_std_error, res.empirical_outage_rate
            pe = res.exact_outage_prob
        else:
            pe = exact_orthogonal_error_prob(gamma, n)
        bound = end_to_end_bound(design, gamma)
        records.append(SweepRecord(
            gamma=gamma,
            n_levels=n,
            bound_optimized=end_to_end_bound(opt, gamma),
            bound_naive=end_to_end_bound(naive, gamma),
            knopp_numeric=knopp_num,
            knopp_analytic=knopp_ana,
            sim_mse=sim_mse,
            sim_stderr=sim_err,
            sim_outage_rate=sim_rate,
            pe_exact=pe,
            pe_bound=pe_bound,
            neg_ln_D=-math.log(bound),
        ))
    return records
