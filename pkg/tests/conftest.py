import json
from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest

from eosl.similarity import GrayImage, write_pgm

# name, cpu J, gpu J, summed cpu utilization %, semantic noise, printed EOSL
ENCODER_BENCHMARK = [
    ("VIT-GPT2", 50.701, 0.002, 571.9, 0.255, 0.360),
    ("BLIP-base", 60.922, 0.001, 513.4, 1.000, 1.164),
    ("GIT-base", 197.442, 0.0, 1456.1, 0.270, 1.504),
    ("BLIP-large", 105.095, 0.0, 746.3, 0.635, 0.659),
    ("GIT-large", 524.718, 0.001, 3669.9, 0.484, 0.850),
]


def write_synthetic_trace(path, cpu_joules, gpu_joules=0.0, samples=8, util_total=None):
    """1 Hz trace of integer-milliwatt samples summing to the requested joules."""
    def split(mj):
        q, r = divmod(int(round(mj)), samples)
        return [q + (1 if i < r else 0) for i in range(samples)]

    cpu = split(cpu_joules * 1000)
    gpu = split(gpu_joules * 1000)
    header = "t_s,cpu_mw,gpu_mw"
    util = None
    if util_total is not None:
        header += ",cpu_util_pct"
        util = [util_total / samples] * samples
    lines = [header]
    for i in range(samples):
        row = f"{i},{cpu[i]},{gpu[i]}"
        if util is not None:
            row += f",{util[i]!r}"
        lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2))
    return Path(path)


@pytest.fixture
def benchmark_run(tmp_path):
    """Config + manifest replaying the five-encoder benchmark with precomputed noise."""
    cands = []
    for name, cpu, _gpu, util, noise, printed in ENCODER_BENCHMARK:
        trace = write_synthetic_trace(tmp_path / f"{name}.csv", cpu, 0.0, util_total=util)
        cands.append(
            {"name": name, "power_trace": trace.name, "precomputed_noise": noise, "reported_eosl": printed}
        )
    manifest = write_json(tmp_path / "bundles.json", {"candidates": cands})
    config = write_json(
        tmp_path / "config.json",
        {
            "channel": {"p_b": 0.001, "p_f": 0.0, "t": 0, "l": 12000},
            "weights": {"lambda_sm": 1, "lambda_lch": 1, "lambda_ec": 1, "lambda_es": 1},
            "policy": {"n_sm_thresh": 0.3, "max_attempts": 1},
        },
    )
    return config, manifest


def gradient_image(h=32, w=32, seed=0):
    rng = np.random.default_rng(seed)
    base = np.add.outer(np.linspace(0, 200, h), np.linspace(0, 40, w))
    return GrayImage.from_array(np.clip(base + rng.integers(0, 15, (h, w)), 0, 255).astype(np.uint8))


@pytest.fixture
def encdec_run(tmp_path):
    ref = gradient_image(seed=0)
    write_pgm(tmp_path / "ref.pgm", ref)
    captions = {
        "enc-a": "a brown dog running through a grassy field",
        "enc-b": "a dog in the grass",
        "enc-c": "a cat sitting on a sofa",
    }
    cands = []
    for k, (name, caption) in enumerate(captions.items()):
        if k == 0:
            img = ref
        else:
            noisy = ref.pixels + np.random.default_rng(k).normal(0, 25 * k, ref.pixels.shape)
            img = GrayImage.from_array(np.clip(noisy, 0, 255).round().astype(np.uint8))
        write_pgm(tmp_path / f"{name}.pgm", img)
        write_synthetic_trace(tmp_path / f"{name}.csv", 40.0 + 30 * k)
        write_synthetic_trace(tmp_path / f"{name}-dec.csv", 4000.0)
        cands.append(
            {
                "name": name,
                "caption": caption,
                "image": f"{name}.pgm",
                "power_trace": f"{name}.csv",
                "decoder_trace": f"{name}-dec.csv",
            }
        )
    manifest = write_json(tmp_path / "bundles.json", {"candidates": cands})
    config = write_json(
        tmp_path / "config.json",
        {
            "reference": {"text": "a brown dog running through grassy field", "image": "ref.pgm"},
            "metric": "cosine",
            "ssim": {"window": "gaussian"},
        },
    )
    return config, manifest


# Acceptance reporting: tests marked ``criterion(n, title)`` roll up to one line per criterion.
_criteria: dict = {}
_outcomes: dict = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m:
            _criteria[item.nodeid] = (m.args[0], m.args[1])


def pytest_runtest_logreport(report):
    if report.nodeid in _criteria and (report.when == "call" or report.failed):
        _outcomes[_criteria[report.nodeid]].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), results in sorted(_outcomes.items()):
        status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {num}: {title} ({sum(results)}/{len(results)} checks)")
