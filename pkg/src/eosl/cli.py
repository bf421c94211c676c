"""Command-line entry point: ``eosl {rank,sweep,encdec,channel,energy}``.

Exit codes: 0 success, 2 usage, 3 ingestion, 4 validation, 5 computation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

from eosl import report as fmt
from eosl import runner
from eosl.channel import PRNG_ALGORITHM, ChannelModel, average_bit_error, channel_loss, simulate_block_errors
from eosl.energy import integrate_trace, read_trace
from eosl.errors import EoslError, IngestionError


def _emit(text: str, out: str | None) -> None:
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise IngestionError(out, exc) from exc
    else:
        sys.stdout.write(text)


def _add_common(p: argparse.ArgumentParser, formats: tuple[str, ...]) -> None:
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--format", choices=formats, default=formats[0])


def _add_run(p: argparse.ArgumentParser, formats: tuple[str, ...]) -> None:
    p.add_argument("--config", required=True, help="run config JSON")
    p.add_argument("--bundles", required=True, help="candidate manifest JSON")
    p.add_argument("--seed", type=int, default=0, help="PRNG seed for Monte Carlo channel runs")
    _add_common(p, formats)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eosl", description="Energy-optimized semantic loss benchmarking")
    sub = ap.add_subparsers(dest="command", required=True)

    _add_run(sub.add_parser("rank", help="score and rank candidates"), ("json", "text"))

    sw = sub.add_parser("sweep", help="EOSL versus bit error probability")
    _add_run(sw, ("csv", "json", "text"))
    sw.add_argument("--grid", required=True, help="start:stop:steps or comma-separated p_b values")

    _add_run(sub.add_parser("encdec", help="cosine and SSIM EOSL for encoder/decoder pairs"), ("json", "text"))

    ch = sub.add_parser("channel", help="print block channel loss")
    ch.add_argument("--config", help="take channel defaults from a run config")
    ch.add_argument("--p-b", type=float)
    ch.add_argument("--p-f", type=float)
    ch.add_argument("--t", type=int)
    ch.add_argument("--l", type=int)
    ch.add_argument("--trials", type=int, default=0, help="also run a Monte Carlo estimate")
    ch.add_argument("--seed", type=int, default=0)
    _add_common(ch, ("text", "json"))

    en = sub.add_parser("energy", help="integrate one power trace CSV")
    en.add_argument("trace")
    en.add_argument("--interval", type=float, default=1.0, help="sampling interval in seconds")
    _add_common(en, ("text", "json"))
    return ap


def _cmd_rank(args) -> str:
    rep = runner.rank(runner.load_config(args.config), runner.load_manifest(args.bundles), args.seed)
    return fmt.to_json(rep) if args.format == "json" else fmt.to_text(rep)


def _cmd_encdec(args) -> str:
    rep = runner.encdec_compare(runner.load_config(args.config), runner.load_manifest(args.bundles), args.seed)
    return fmt.to_json(rep) if args.format == "json" else fmt.to_text(rep)


def _cmd_sweep(args) -> str:
    cfg = runner.load_config(args.config)
    rows = runner.sweep_ber(cfg, runner.load_manifest(args.bundles), runner.parse_grid(args.grid), args.seed)
    if args.format == "csv":
        return fmt.sweep_to_csv(rows)
    if args.format == "json":
        return fmt.to_json({"kind": "sweep", "seed": args.seed, "prng": PRNG_ALGORITHM, "rows": rows})
    return fmt.sweep_to_text(rows)


def _cmd_channel(args) -> str:
    base = runner.load_config(args.config).channel if args.config else ChannelModel()
    overrides = {k: v for k, v in (("p_b", args.p_b), ("p_f", args.p_f), ("t", args.t), ("l", args.l)) if v is not None}
    ch = dataclasses.replace(base, **overrides)
    result = {**dataclasses.asdict(ch), "average_bit_error": average_bit_error(ch), "channel_loss": channel_loss(ch)}
    if args.trials:
        result.update(
            monte_carlo=simulate_block_errors(ch, args.trials, args.seed),
            trials=args.trials,
            seed=args.seed,
            prng=PRNG_ALGORITHM,
        )
    if args.format == "json":
        return json.dumps(result, indent=2) + "\n"
    lines = [f"{k}: {v!r}" if isinstance(v, float) else f"{k}: {v}" for k, v in result.items()]
    return "\n".join(lines) + "\n"


def _cmd_energy(args) -> str:
    trace = read_trace(args.trace, args.interval)
    e = integrate_trace(trace)
    result = {"samples": len(trace), "cpu_energy_j": e.cpu, "gpu_energy_j": e.gpu, "total_energy_j": e.total}
    if trace.cpu_util:
        result["cpu_util_pct_total"] = math.fsum(trace.cpu_util)
    if args.format == "json":
        return json.dumps(result, indent=2) + "\n"
    return "".join(f"{k}: {v!r}\n" if isinstance(v, float) else f"{k}: {v}\n" for k, v in result.items())


COMMANDS = {
    "rank": _cmd_rank,
    "sweep": _cmd_sweep,
    "encdec": _cmd_encdec,
    "channel": _cmd_channel,
    "energy": _cmd_energy,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _emit(COMMANDS[args.command](args), args.out)
    except EoslError as exc:
        print(f"eosl {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
