"""Serialize reports as JSON, aligned text, or long-format CSV.

Output is a pure function of the report so repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json

from eosl.runner import EoslReport


def _default(obj):
    if hasattr(obj, "__fspath__"):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def to_json(payload) -> str:
    if isinstance(payload, EoslReport):
        payload = payload.to_dict()
    return json.dumps(payload, indent=2, default=_default, allow_nan=False) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.6g}"
    if v is None:
        return "-"
    return str(v)


def _table(headers: list[str], rows: list[list]) -> str:
    cells = [headers] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = []
    for k, r in enumerate(cells):
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


RANK_COLUMNS = [
    ("name", "candidate"),
    ("semantic_energy_j", "E_s [J]"),
    ("communication_energy_j", "E_c [J]"),
    ("semantic_ratio", "E_s/max"),
    ("communication_ratio", "E_c/max"),
    ("semantic_noise", "N_sm"),
    ("channel_loss", "L_ch"),
    ("eosl", "EOSL"),
    ("attempts", "n"),
    ("threshold_met", "met"),
]

ENCDEC_COLUMNS = [
    ("name", "encoder"),
    ("semantic_energy_j", "E_s [J]"),
    ("cosine_similarity", "cosine"),
    ("ssim", "SSIM"),
    ("semantic_noise_cosine", "N_sm(cos)"),
    ("semantic_noise_ssim", "N_sm(ssim)"),
    ("eosl_cosine", "EOSL(cos)"),
    ("eosl_ssim", "EOSL(ssim)"),
]


def to_text(report: EoslReport) -> str:
    columns = ENCDEC_COLUMNS if report.kind == "encdec" else RANK_COLUMNS
    by_name = {r["name"]: r for r in report.rows}
    ordered = [by_name[n] for n in report.ranking]
    body = _table(["#"] + [h for _, h in columns], [[i] + [r[k] for k, _ in columns] for i, r in enumerate(ordered, 1)])
    ch = report.config["channel"]
    footer = (
        f"channel: p_b={ch['p_b']:g} p_f={ch['p_f']:g} t={ch['t']} l={ch['l']} "
        f"({ch['method']}) -> L_ch={ch['channel_loss']:.9g}\n"
        f"seed: {report.seed} ({report.prng})\n"
    )
    return body + footer


def sweep_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p_b", "candidate", "eosl"])
    for r in rows:
        w.writerow([repr(r["p_b"]), r["candidate"], repr(r["eosl"])])
    return buf.getvalue()


def sweep_to_text(rows: list[dict]) -> str:
    return _table(["p_b", "candidate", "L_ch", "EOSL"], [[f"{r['p_b']:g}", r["candidate"], r["channel_loss"], r["eosl"]] for r in rows])
