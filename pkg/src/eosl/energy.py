"""Power traces, semantic and communication energy, and candidate-set normalization.

Trace CSV format: header ``t_s,cpu_mw,gpu_mw`` (an optional fourth column
``cpu_util_pct`` is carried through for reporting), one row per sample.
Powers are milliwatts on disk and watts in memory.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

from eosl.errors import IngestionError, MalformedTraceError, ValidationError

TRACE_COLUMNS = ("t_s", "cpu_mw", "gpu_mw")
UTIL_COLUMN = "cpu_util_pct"


@dataclass(frozen=True)
class PowerTrace:
    timestamps: tuple[float, ...]
    cpu_power: tuple[float, ...]  # W
    gpu_power: tuple[float, ...]  # W
    interval: float = 1.0  # s
    cpu_util: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for name in ("timestamps", "cpu_power", "gpu_power", "cpu_util"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        n = len(self.timestamps)
        if len(self.cpu_power) != n or len(self.gpu_power) != n:
            raise MalformedTraceError("timestamp and power columns differ in length")
        if self.cpu_util and len(self.cpu_util) != n:
            raise MalformedTraceError("utilization column differs in length")
        if not (self.interval > 0 and math.isfinite(self.interval)):
            raise ValidationError(f"sampling interval must be positive, got {self.interval}")
        if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise MalformedTraceError("timestamps must be strictly increasing")
        for w in self.cpu_power + self.gpu_power:
            if not (w >= 0 and math.isfinite(w)):
                raise MalformedTraceError(f"power samples must be finite and >= 0, got {w}")

    def __len__(self):
        return len(self.timestamps)

    def concat(self, other: "PowerTrace") -> "PowerTrace":
        """Append ``other``, shifted to start one interval after this trace ends."""
        if other.interval != self.interval:
            raise ValidationError("cannot concatenate traces with different intervals")
        shift = 0.0
        if self.timestamps and other.timestamps:
            shift = self.timestamps[-1] + self.interval - other.timestamps[0]
        util = self.cpu_util + other.cpu_util if self.cpu_util and other.cpu_util else ()
        return PowerTrace(
            self.timestamps + tuple(t + shift for t in other.timestamps),
            self.cpu_power + other.cpu_power,
            self.gpu_power + other.gpu_power,
            self.interval,
            util,
        )


class TraceEnergy(NamedTuple):
    cpu: float
    gpu: float
    total: float


def integrate_trace(trace: PowerTrace) -> TraceEnergy:
    """Energy in joules as the sum of power samples times the sampling interval."""
    if len(trace) == 0:
        raise MalformedTraceError("power trace is empty")
    cpu = math.fsum(trace.cpu_power) * trace.interval
    gpu = math.fsum(trace.gpu_power) * trace.interval
    total = math.fsum(trace.cpu_power + trace.gpu_power) * trace.interval
    return TraceEnergy(cpu, gpu, total)


def read_trace(path, interval: float = 1.0) -> PowerTrace:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader, [])]
            if tuple(header[:3]) != TRACE_COLUMNS or header[3:] not in ([], [UTIL_COLUMN]):
                raise ValueError(f"expected header {','.join(TRACE_COLUMNS)}[,{UTIL_COLUMN}], got {header}")
            rows = [r for r in reader if r and any(c.strip() for c in r)]
        for lineno, r in enumerate(rows, start=2):
            if len(r) != len(header):
                raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(r)}")
        ts = [float(r[0]) for r in rows]
        cpu = [float(r[1]) / 1000.0 for r in rows]
        gpu = [float(r[2]) / 1000.0 for r in rows]
        util = [float(r[3]) for r in rows] if len(header) == 4 else []
    except (OSError, ValueError, StopIteration) as exc:
        raise IngestionError(path, exc) from exc
    try:
        return PowerTrace(ts, cpu, gpu, interval, util)
    except MalformedTraceError as exc:
        raise MalformedTraceError(f"{path}: {exc}") from exc


def write_trace(path, trace: PowerTrace) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS + ((UTIL_COLUMN,) if trace.cpu_util else ()))
        for i, t in enumerate(trace.timestamps):
            row = [repr(t), repr(trace.cpu_power[i] * 1000.0), repr(trace.gpu_power[i] * 1000.0)]
            if trace.cpu_util:
                row.append(repr(trace.cpu_util[i]))
            w.writerow(row)


@dataclass(frozen=True)
class LinkParams:
    data_rate: float = 143e6  # bit/s, one 20 MHz 802.11ax channel
    tx_power: float = 1.0  # W
    packet_size: int = 1500  # bytes

    def __post_init__(self):
        for name in ("data_rate", "tx_power", "packet_size"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be positive, got {v}")


def message_bits(text: str) -> int:
    return len(text.encode("utf-8")) * 8


def packet_count(bits: int, link: LinkParams) -> int:
    return -(-bits // (link.packet_size * 8))


def communication_energy(bits: int, link: LinkParams = LinkParams(), attempts: int = 1) -> float:
    """Transmit energy: airtime of ``attempts`` sends of ``bits`` at the link's power."""
    if bits < 1:
        raise ValidationError(f"message must have at least one bit, got {bits}")
    if attempts < 1:
        raise ValidationError(f"attempts must be >= 1, got {attempts}")
    return attempts * (bits / link.data_rate) * link.tx_power


def normalize(energies: Sequence[float]) -> list[float]:
    """Divide each energy by the set maximum; an all-zero set maps to zeros."""
    if not energies:
        raise ValidationError("cannot normalize an empty candidate set")
    if any(not (e >= 0 and math.isfinite(e)) for e in energies):
        raise ValidationError("energies must be finite and >= 0")
    top = max(energies)
    if top == 0:
        return [0.0] * len(energies)
    return [e / top for e in energies]


@dataclass(frozen=True)
class EnergyLedger:
    """One candidate's energies bound to the candidate-set maxima."""

    semantic: float
    communication: float
    semantic_max: float
    communication_max: float

    def __post_init__(self):
        vals = (self.semantic, self.communication, self.semantic_max, self.communication_max)
        if any(v < 0 for v in vals):
            raise ValidationError("energies must be >= 0")
        if self.semantic > self.semantic_max or self.communication > self.communication_max:
            raise ValidationError("energy exceeds the candidate-set maximum")

    @property
    def semantic_ratio(self) -> float:
        return self.semantic / self.semantic_max if self.semantic_max else 0.0

    @property
    def communication_ratio(self) -> float:
        return self.communication / self.communication_max if self.communication_max else 0.0


def build_ledgers(semantic: Sequence[float], communication: Sequence[float]) -> list[EnergyLedger]:
    if len(semantic) != len(communication):
        raise ValidationError("semantic and communication energy lists differ in length")
    for values in (semantic, communication):
        normalize(values)
    s_max, c_max = max(semantic), max(communication)
    return [EnergyLedger(s, c, s_max, c_max) for s, c in zip(semantic, communication)]
