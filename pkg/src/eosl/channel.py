"""Lossy channel: bit errors under deep fade and block loss with t-error correction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from eosl.errors import ValidationError

PRNG_ALGORITHM = "numpy.random.PCG64/SeedSequence"
# Fixed partition size, so Monte Carlo results never depend on how
# partitions are spread over workers.
PARTITION_TRIALS = 1 << 16


@dataclass(frozen=True)
class ChannelModel:
    p_b: float = 0.001
    p_f: float = 0.0
    t: int = 0
    l: int = 12000  # noqa: E741

    def __post_init__(self):
        if not 0.0 <= self.p_b <= 1.0:
            raise ValidationError(f"p_b must lie in [0, 1], got {self.p_b}")
        if not 0.0 <= self.p_f <= 1.0:
            raise ValidationError(f"p_f must lie in [0, 1], got {self.p_f}")
        if int(self.l) != self.l or self.l < 1:
            raise ValidationError(f"block length l must be an integer >= 1, got {self.l}")
        if int(self.t) != self.t or not 0 <= self.t <= self.l:
            raise ValidationError(f"t must be an integer in [0, l], got {self.t}")
        object.__setattr__(self, "t", int(self.t))
        object.__setattr__(self, "l", int(self.l))


def average_bit_error(ch: ChannelModel) -> float:
    """Bit error probability averaged over the faded (p = 0.5) and unfaded states."""
    return 0.5 * ch.p_f + ch.p_b * (1.0 - ch.p_f)


def _log_pmf_run(n: int, p: float, start: int, stop: int) -> np.ndarray:
    """log P[X = i] for i in [start, stop], X ~ Binomial(n, p), 0 < p < 1.

    Seeds at ``start`` with lgamma, then walks the ratio
    P[i+1]/P[i] = (n-i)/(i+1) * p/(1-p) in log space.
    """
    log_odds = math.log(p) - math.log1p(-p)
    head = (n - start) * math.log1p(-p)
    if start > 0:
        head += (
            math.lgamma(n + 1)
            - math.lgamma(start + 1)
            - math.lgamma(n - start + 1)
            + start * math.log(p)
        )
    i = np.arange(start, stop, dtype=np.float64)
    steps = np.log((n - i) / (i + 1)) + log_odds
    return head + np.concatenate(([0.0], np.cumsum(steps)))


def _logsumexp(logs: np.ndarray) -> float:
    top = float(logs.max())
    if top == -math.inf:
        return -math.inf
    return top + math.log(math.fsum(np.exp(logs - top)))


def channel_loss(ch: ChannelModel) -> float:
    """Probability that a block of ``l`` bits carries more than ``t`` errors."""
    p, n, t = average_bit_error(ch), ch.l, ch.t
    if t >= n or p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    if t < n * p:
        # Loss is large; sum the short lower tail and take the complement.
        log_cdf = _logsumexp(_log_pmf_run(n, p, 0, t))
        loss = -math.expm1(log_cdf)
    else:
        loss = math.exp(_logsumexp(_log_pmf_run(n, p, t + 1, n)))
    return min(1.0, max(0.0, loss))


def _partition_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    return [np.random.SeedSequence(entropy=seed, spawn_key=(k,)) for k in range(count)]


def simulate_block_errors(ch: ChannelModel, trials: int, seed: int = 0) -> float:
    """Fraction of ``trials`` random blocks with more than ``t`` bit errors."""
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    p = average_bit_error(ch)
    failures = 0
    n_parts = -(-trials // PARTITION_TRIALS)
    for k, ss in enumerate(_partition_seeds(seed, n_parts)):
        size = min(PARTITION_TRIALS, trials - k * PARTITION_TRIALS)
        errors = np.random.Generator(np.random.PCG64(ss)).binomial(ch.l, p, size=size)
        failures += int(np.count_nonzero(errors > ch.t))
    return failures / trials
