"""Run configuration, candidate manifests, and the rank / sweep / encdec pipelines.

Config and manifest are JSON. Relative paths inside either file resolve
against that file's directory.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from eosl import similarity
from eosl.channel import PRNG_ALGORITHM, ChannelModel, channel_loss, simulate_block_errors
from eosl.core import EoslWeights, NoiseSource, RetransmitPolicy, score_candidate
from eosl.energy import (
    LinkParams,
    build_ledgers,
    communication_energy,
    integrate_trace,
    message_bits,
    packet_count,
    read_trace,
)
from eosl.errors import IngestionError, ValidationError

METRICS = ("cosine", "ssim")
CHANNEL_METHODS = ("analytic", "monte_carlo")


def _load_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise IngestionError(path, exc) from exc


def _take(section: dict, allowed: set, where: str) -> dict:
    if not isinstance(section, dict):
        raise ValidationError(f"{where} must be a JSON object")
    unknown = set(section) - allowed
    if unknown:
        raise ValidationError(f"{where}: unknown keys {sorted(unknown)}")
    return section


def _existing(base: Path, raw: str | None, what: str) -> Path | None:
    if raw is None:
        return None
    path = (base / raw) if not Path(raw).is_absolute() else Path(raw)
    if not path.is_file():
        raise IngestionError(path, f"{what} not found")
    return path


@dataclass(frozen=True)
class RunConfig:
    reference_text: str | None = None
    reference_image: Path | None = None
    reference_vector: Path | None = None
    metric: str = "cosine"
    channel: ChannelModel = ChannelModel()
    channel_method: str = "analytic"
    trials: int = 100_000
    link: LinkParams = LinkParams()
    weights: EoslWeights = EoslWeights()
    policy: RetransmitPolicy = RetransmitPolicy()
    ssim: similarity.SsimParams = similarity.SsimParams()
    include_gpu: bool = True
    trace_interval: float = 1.0
    message_bits: int | None = None
    echo: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValidationError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.channel_method not in CHANNEL_METHODS:
            raise ValidationError(f"channel method must be one of {CHANNEL_METHODS}")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.message_bits is not None and self.message_bits < 1:
            raise ValidationError("message_bits must be >= 1")

    def default_bits(self) -> int:
        return self.message_bits if self.message_bits is not None else self.link.packet_size * 8


def parse_config(raw: dict, base: Path = Path(".")) -> RunConfig:
    raw = _take(
        raw,
        {"reference", "metric", "channel", "link", "weights", "policy", "ssim", "energy"},
        "config",
    )
    ref = _take(raw.get("reference", {}), {"text", "image", "vector"}, "config.reference")
    ch = dict(_take(raw.get("channel", {}), {"p_b", "p_f", "t", "l", "method", "trials"}, "config.channel"))
    method = ch.pop("method", "analytic")
    trials = ch.pop("trials", 100_000)
    energy = _take(raw.get("energy", {}), {"include_gpu", "interval_s", "message_bits"}, "config.energy")
    try:
        return RunConfig(
            reference_text=ref.get("text"),
            reference_image=_existing(base, ref.get("image"), "reference image"),
            reference_vector=_existing(base, ref.get("vector"), "reference vector"),
            metric=raw.get("metric", "cosine"),
            channel=ChannelModel(**ch),
            channel_method=method,
            trials=trials,
            link=LinkParams(**_take(raw.get("link", {}), {"data_rate", "tx_power", "packet_size"}, "config.link")),
            weights=EoslWeights(
                **_take(raw.get("weights", {}), {"lambda_sm", "lambda_lch", "lambda_ec", "lambda_es"}, "config.weights")
            ),
            policy=RetransmitPolicy(
                **_take(raw.get("policy", {}), {"n_sm_thresh", "max_attempts", "noise_source"}, "config.policy")
            ),
            ssim=similarity.SsimParams(
                **_take(
                    raw.get("ssim", {}),
                    {"k1", "k2", "dynamic_range", "window", "window_size", "sigma"},
                    "config.ssim",
                )
            ),
            include_gpu=energy.get("include_gpu", True),
            trace_interval=energy.get("interval_s", 1.0),
            message_bits=energy.get("message_bits"),
            echo=raw,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"config: {exc}") from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(_load_json(path), path.parent)


@dataclass(frozen=True)
class CandidateBundle:
    name: str
    power_trace: Path
    caption: str | None = None
    feature_vector: Path | None = None
    image: Path | None = None
    precomputed_noise: float | None = None
    noise_sequence: tuple[float, ...] | None = None
    message_bits: int | None = None
    decoder_trace: Path | None = None
    cosine_similarity: float | None = None
    ssim_similarity: float | None = None
    reported_eosl: float | None = None

    def __post_init__(self):
        if not self.name:
            raise ValidationError("candidate name must be non-empty")
        sources = (
            self.caption,
            self.feature_vector,
            self.image,
            self.precomputed_noise,
            self.noise_sequence,
            self.cosine_similarity,
            self.ssim_similarity,
        )
        if all(s is None for s in sources):
            raise ValidationError(f"candidate {self.name!r} has no caption, vector, image or noise value")
        if self.precomputed_noise is not None and not 0 <= self.precomputed_noise <= 1:
            raise ValidationError(f"candidate {self.name!r}: precomputed_noise must lie in [0, 1]")


_BUNDLE_PATHS = ("power_trace", "feature_vector", "image", "decoder_trace")


def parse_manifest(raw: dict, base: Path = Path(".")) -> list[CandidateBundle]:
    raw = _take(raw, {"candidates"}, "manifest")
    entries = raw.get("candidates")
    if not isinstance(entries, list) or not entries:
        raise ValidationError("manifest must list at least one candidate")
    allowed = {f.name for f in dataclasses.fields(CandidateBundle)}
    bundles, names = [], set()
    for i, entry in enumerate(entries):
        entry = dict(_take(entry, allowed, f"manifest.candidates[{i}]"))
        if "power_trace" not in entry:
            raise ValidationError(f"manifest.candidates[{i}]: power_trace is required")
        for key in _BUNDLE_PATHS:
            entry[key] = _existing(base, entry.get(key), key.replace("_", " "))
        if entry.get("noise_sequence") is not None:
            entry["noise_sequence"] = tuple(float(v) for v in entry["noise_sequence"])
        try:
            bundle = CandidateBundle(**entry)
        except TypeError as exc:
            raise ValidationError(f"manifest.candidates[{i}]: {exc}") from exc
        if bundle.name in names:
            raise ValidationError(f"duplicate candidate name {bundle.name!r}")
        names.add(bundle.name)
        bundles.append(bundle)
    return bundles


def load_manifest(path) -> list[CandidateBundle]:
    path = Path(path)
    return parse_manifest(_load_json(path), path.parent)


@dataclass(frozen=True)
class Prepared:
    """A candidate with every channel-independent input resolved."""

    bundle: CandidateBundle
    cpu_energy: float
    gpu_energy: float
    semantic_energy: float
    bits: int
    packets: int
    comm_energy: float  # one attempt
    cpu_util: float | None


def _similarity(config: RunConfig, bundle: CandidateBundle, metric: str, cache: dict) -> float:
    if metric == "ssim":
        if bundle.ssim_similarity is not None:
            return bundle.ssim_similarity
        if bundle.image is None:
            raise ValidationError(f"candidate {bundle.name!r}: SSIM needs a reconstructed image")
        if config.reference_image is None:
            raise ValidationError("SSIM needs reference.image in the config")
        if "ref_image" not in cache:
            cache["ref_image"] = similarity.read_pgm(config.reference_image)
        return similarity.ssim(cache["ref_image"], similarity.read_pgm(bundle.image), config.ssim)

    if bundle.cosine_similarity is not None:
        return bundle.cosine_similarity
    if bundle.feature_vector is not None and config.reference_vector is not None:
        if "ref_vector" not in cache:
            cache["ref_vector"] = similarity.read_vector(config.reference_vector)
        return similarity.cosine_similarity(cache["ref_vector"], similarity.read_vector(bundle.feature_vector))
    if bundle.caption is not None and config.reference_text is not None:
        return similarity.text_similarity(config.reference_text, bundle.caption)
    raise ValidationError(
        f"candidate {bundle.name!r}: cosine needs a caption with reference.text "
        "or a feature vector with reference.vector"
    )


def resolve_noise(config: RunConfig, bundle: CandidateBundle, cache: dict | None = None):
    """Semantic noise for ``bundle``: a value, or a per-attempt sequence in trace mode."""
    cache = {} if cache is None else cache
    if config.policy.noise_source is NoiseSource.TRACE:
        if bundle.noise_sequence is None:
            raise ValidationError(f"candidate {bundle.name!r}: trace noise source needs noise_sequence")
        if any(not 0.0 <= v <= 1.0 for v in bundle.noise_sequence):
            raise ValidationError(f"candidate {bundle.name!r}: noise_sequence values must lie in [0, 1]")
        return list(bundle.noise_sequence)
    if bundle.precomputed_noise is not None:
        return float(bundle.precomputed_noise)
    return similarity.semantic_noise(_similarity(config, bundle, config.metric, cache))


def prepare(config: RunConfig, bundles: Sequence[CandidateBundle]) -> list[Prepared]:
    out = []
    for b in bundles:
        trace = read_trace(b.power_trace, config.trace_interval)
        energy = integrate_trace(trace)
        cpu, gpu = energy.cpu, energy.gpu
        if b.decoder_trace is not None:
            dec = integrate_trace(read_trace(b.decoder_trace, config.trace_interval))
            cpu, gpu = cpu + dec.cpu, gpu + dec.gpu
        sem = cpu + gpu if config.include_gpu else cpu
        util = math.fsum(trace.cpu_util) if trace.cpu_util else None
        if b.message_bits is not None:
            bits = int(b.message_bits)
        elif b.caption is not None:
            bits = message_bits(b.caption)
        else:
            bits = config.default_bits()
        out.append(
            Prepared(
                bundle=b,
                cpu_energy=cpu,
                gpu_energy=gpu,
                semantic_energy=sem,
                bits=bits,
                packets=packet_count(bits, config.link),
                comm_energy=communication_energy(bits, config.link),
                cpu_util=util,
            )
        )
    return out


def evaluate_channel(config: RunConfig, ch: ChannelModel, seed: int) -> float:
    if config.channel_method == "monte_carlo":
        return simulate_block_errors(ch, config.trials, seed)
    return channel_loss(ch)


def _ranking(names: Sequence[str], scores: Sequence[float]) -> list[str]:
    return [n for _, n in sorted(zip(scores, names))]


@dataclass
class EoslReport:
    kind: str
    rows: list[dict]
    ranking: list[str]
    config: dict
    seed: int
    prng: str = PRNG_ALGORITHM
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "ranking": self.ranking,
            "candidates": self.rows,
            "config": self.config,
            "seed": self.seed,
            "prng": self.prng,
        }
        out.update(self.extra)
        return out


def _config_echo(config: RunConfig, ch: ChannelModel, loss: float) -> dict:
    return {
        "input": config.echo,
        "metric": config.metric,
        "channel": {**dataclasses.asdict(ch), "method": config.channel_method, "trials": config.trials,
                    "average_bit_error": 0.5 * ch.p_f + ch.p_b * (1 - ch.p_f), "channel_loss": loss},
        "link": dataclasses.asdict(config.link),
        "weights": dataclasses.asdict(config.weights),
        "policy": {**dataclasses.asdict(config.policy), "noise_source": config.policy.noise_source.value},
        "include_gpu": config.include_gpu,
    }


def _score_all(config, prepared, noises, loss):
    ledgers = build_ledgers([p.semantic_energy for p in prepared], [p.comm_energy for p in prepared])
    return [
        score_candidate(noise, loss, led.communication_ratio, led.semantic_ratio, config.policy, config.weights)
        for noise, led in zip(noises, ledgers)
    ], ledgers


def _energy_fields(p: Prepared, ledger, attempts: int, link: LinkParams) -> dict:
    return {
        "cpu_energy_j": p.cpu_energy,
        "gpu_energy_j": p.gpu_energy,
        "semantic_energy_j": p.semantic_energy,
        "communication_energy_j": p.comm_energy,
        "communication_energy_total_j": communication_energy(p.bits, link, attempts),
        "semantic_ratio": ledger.semantic_ratio,
        "communication_ratio": ledger.communication_ratio,
        "message_bits": p.bits,
        "packets": p.packets,
        "cpu_util_pct_total": p.cpu_util,
    }


def rank(
    config: RunConfig,
    bundles: Sequence[CandidateBundle],
    seed: int = 0,
    prepared: list[Prepared] | None = None,
    noises: list | None = None,
) -> EoslReport:
    """Score every candidate and rank ascending by EOSL, ties broken by name."""
    if not bundles:
        raise ValidationError("need at least one candidate")
    prepared = prepare(config, bundles) if prepared is None else prepared
    if noises is None:
        cache: dict = {}
        noises = [resolve_noise(config, b, cache) for b in bundles]
    loss = evaluate_channel(config, config.channel, seed)
    scores, ledgers = _score_all(config, prepared, noises, loss)
    rows = []
    for p, noise, score, led in zip(prepared, noises, scores, ledgers):
        n_sm = noise if isinstance(noise, float) else noise[score.attempts - 1]
        row = {
            "name": p.bundle.name,
            **_energy_fields(p, led, score.attempts, config.link),
            "semantic_noise": n_sm,
            "channel_loss": loss,
            "eosl": score.value,
            "attempts": score.attempts,
            "threshold_met": score.threshold_met,
            "attempt_terms": list(score.terms),
        }
        if p.bundle.reported_eosl is not None:
            row["reported_eosl"] = p.bundle.reported_eosl
            row["eosl_delta"] = score.value - p.bundle.reported_eosl
        rows.append(row)
    names = [r["name"] for r in rows]
    return EoslReport(
        "rank", rows, _ranking(names, [s.value for s in scores]), _config_echo(config, config.channel, loss), seed
    )


def parse_grid(spec: str) -> list[float]:
    """``start:stop:steps`` (inclusive linspace) or a comma-separated list."""
    try:
        if ":" in spec:
            start, stop, steps = spec.split(":")
            n = int(steps)
            if n < 1:
                raise ValueError("steps must be >= 1")
            grid = [float(v) for v in np.linspace(float(start), float(stop), n)]
        else:
            grid = [float(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad grid {spec!r}: {exc}") from exc
    if not grid:
        raise ValidationError("grid is empty")
    if any(not 0.0 <= v <= 1.0 for v in grid):
        raise ValidationError("grid values must lie in [0, 1]")
    return grid


def sweep_ber(config: RunConfig, bundles: Sequence[CandidateBundle], grid: Sequence[float], seed: int = 0) -> list[dict]:
    """Long-format (p_b, candidate, eosl) rows, grid-major, manifest order within a point."""
    if not grid:
        raise ValidationError("grid is empty")
    prepared = prepare(config, bundles)
    cache: dict = {}
    noises = [resolve_noise(config, b, cache) for b in bundles]
    out = []
    for p_b in grid:
        cfg = dataclasses.replace(config, channel=dataclasses.replace(config.channel, p_b=p_b))
        report = rank(cfg, bundles, seed, prepared=prepared, noises=noises)
        for row in report.rows:
            out.append({"p_b": p_b, "candidate": row["name"], "eosl": row["eosl"], "channel_loss": row["channel_loss"]})
    return out


def encdec_compare(config: RunConfig, bundles: Sequence[CandidateBundle], seed: int = 0) -> EoslReport:
    """Score each encoder twice: cosine on captions and SSIM on reconstructed images."""
    if not bundles:
        raise ValidationError("need at least one candidate")
    if config.policy.noise_source is NoiseSource.TRACE:
        raise ValidationError("encdec scores measured similarities; use the fixed noise source")
    for b in bundles:
        if b.caption is None and b.cosine_similarity is None and b.feature_vector is None:
            raise ValidationError(f"candidate {b.name!r}: encdec needs a caption")
        if b.image is None and b.ssim_similarity is None:
            raise ValidationError(f"candidate {b.name!r}: encdec needs a reconstructed image")
    prepared = prepare(config, bundles)
    cache: dict = {}
    sims = {m: [_similarity(config, b, m, cache) for b in bundles] for m in METRICS}
    noises = {m: [similarity.semantic_noise(s) for s in sims[m]] for m in METRICS}
    loss = evaluate_channel(config, config.channel, seed)
    scored = {m: _score_all(config, prepared, noises[m], loss) for m in METRICS}
    ledgers = scored["cosine"][1]
    rows = []
    for i, p in enumerate(prepared):
        sc, ss = scored["cosine"][0][i], scored["ssim"][0][i]
        rows.append(
            {
                "name": p.bundle.name,
                **_energy_fields(p, ledgers[i], sc.attempts, config.link),
                "cosine_similarity": sims["cosine"][i],
                "ssim": sims["ssim"][i],
                "semantic_noise_cosine": noises["cosine"][i],
                "semantic_noise_ssim": noises["ssim"][i],
                "channel_loss": loss,
                "eosl_cosine": sc.value,
                "eosl_ssim": ss.value,
                "attempts_cosine": sc.attempts,
                "attempts_ssim": ss.attempts,
                "threshold_met_cosine": sc.threshold_met,
                "threshold_met_ssim": ss.threshold_met,
            }
        )
    names = [r["name"] for r in rows]
    rankings = {m: _ranking(names, [r[f"eosl_{m}"] for r in rows]) for m in METRICS}
    return EoslReport(
        "encdec",
        rows,
        rankings[config.metric],
        _config_echo(config, config.channel, loss),
        seed,
        extra={"rankings": rankings},
    )
