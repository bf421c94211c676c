"""EOSL composition and the retransmission loop."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

from eosl.errors import TruncatedSequenceError, ValidationError


def _unit_interval(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{name} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class EoslWeights:
    lambda_sm: float = 1.0
    lambda_lch: float = 1.0
    lambda_ec: float = 1.0
    lambda_es: float = 1.0

    def __post_init__(self):
        for name in ("lambda_sm", "lambda_lch", "lambda_ec", "lambda_es"):
            v = float(getattr(self, name))
            if not (v >= 0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be finite and >= 0, got {v}")
            object.__setattr__(self, name, v)

    def scaled(self, c: float) -> "EoslWeights":
        return EoslWeights(self.lambda_sm * c, self.lambda_lch * c, self.lambda_ec * c, self.lambda_es * c)


@dataclass(frozen=True)
class AttemptRecord:
    semantic_noise: float
    channel_loss: float
    comm_ratio: float
    sem_ratio: float
    index: int = 1

    def __post_init__(self):
        for name in ("semantic_noise", "channel_loss", "comm_ratio", "sem_ratio"):
            object.__setattr__(self, name, _unit_interval(name, getattr(self, name)))


class NoiseSource(str, Enum):
    FIXED = "fixed"  # every attempt reuses the measured noise
    TRACE = "trace"  # caller supplies one noise value per attempt


@dataclass(frozen=True)
class RetransmitPolicy:
    n_sm_thresh: float = 0.3
    max_attempts: int = 1
    noise_source: NoiseSource = NoiseSource.FIXED

    def __post_init__(self):
        _unit_interval("n_sm_thresh", self.n_sm_thresh)
        if int(self.max_attempts) != self.max_attempts or self.max_attempts < 1:
            raise ValidationError(f"max_attempts must be an integer >= 1, got {self.max_attempts}")
        object.__setattr__(self, "max_attempts", int(self.max_attempts))
        object.__setattr__(self, "noise_source", NoiseSource(self.noise_source))


@dataclass(frozen=True)
class EoslScore:
    value: float
    attempts: int
    threshold_met: bool
    terms: tuple[float, ...] = ()


def eosl_term(attempt: AttemptRecord, w: EoslWeights) -> float:
    return (
        w.lambda_sm * attempt.semantic_noise
        + w.lambda_lch * attempt.channel_loss
        + w.lambda_ec * attempt.comm_ratio
        + w.lambda_es * attempt.sem_ratio
    )


def run_transmission(
    attempts: Iterable[AttemptRecord], policy: RetransmitPolicy, weights: EoslWeights
) -> EoslScore:
    """Accumulate per-attempt EOSL until the noise threshold is met or the cap is hit."""
    terms = []
    source = iter(attempts)
    for j in range(1, policy.max_attempts + 1):
        attempt = next(source, None)
        if attempt is None:
            raise TruncatedSequenceError(
                f"attempt sequence exhausted after {j - 1} of up to {policy.max_attempts} attempts"
            )
        terms.append(eosl_term(attempt, weights))
        if attempt.semantic_noise <= policy.n_sm_thresh:
            return EoslScore(math.fsum(terms), j, True, tuple(terms))
    return EoslScore(math.fsum(terms), len(terms), False, tuple(terms))


Noise = Union[float, Sequence[float]]


def score_candidate(
    noise: Noise,
    channel_loss: float,
    comm_ratio: float,
    sem_ratio: float,
    policy: RetransmitPolicy = RetransmitPolicy(),
    weights: EoslWeights = EoslWeights(),
) -> EoslScore:
    """Score one candidate from its component values.

    ``noise`` is a single value under ``NoiseSource.FIXED`` and a per-attempt
    sequence under ``NoiseSource.TRACE``.
    """
    if policy.noise_source is NoiseSource.FIXED:
        if not isinstance(noise, (int, float)):
            raise ValidationError("fixed noise source takes a single noise value")
        sequence: Sequence[float] = [float(noise)] * policy.max_attempts
    else:
        if isinstance(noise, (int, float)):
            raise ValidationError("trace noise source takes a per-attempt noise sequence")
        sequence = list(noise)
    records = (
        AttemptRecord(n, channel_loss, comm_ratio, sem_ratio, j)
        for j, n in enumerate(sequence, start=1)
    )
    return run_transmission(records, policy, weights)
