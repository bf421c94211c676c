"""Semantic similarity between an intended and a perceived message.

Cosine similarity over feature vectors (or bag-of-words vectors built from
captions), SSIM over grayscale images, and the semantic noise derived from
either score.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from eosl.errors import (
    DimensionError,
    EmptyTextError,
    IngestionError,
    UndefinedSimilarityError,
    ValidationError,
    WindowError,
)

_PUNCT = re.compile(r"[^\w\s]|_")


def as_feature_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionError(f"feature vector must be 1-D and non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("feature vector contains non-finite entries")
    return arr


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two equal-length, non-zero vectors."""
    a = as_feature_vector(a)
    b = as_feature_vector(b)
    if a.shape != b.shape:
        raise DimensionError(f"vector length mismatch: {a.size} vs {b.size}")
    norm_a = math.sqrt(math.fsum(a * a))
    norm_b = math.sqrt(math.fsum(b * b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise UndefinedSimilarityError("cosine similarity is undefined for a zero vector")
    value = math.fsum(a * b) / (norm_a * norm_b)
    return min(1.0, max(-1.0, value))


def tokenize(text: str) -> list[str]:
    return _PUNCT.sub(" ", text.lower()).split()


def build_vocabulary(*texts: str) -> list[str]:
    """Union of the tokens of ``texts``, in order of first appearance."""
    seen: dict[str, None] = {}
    for text in texts:
        for tok in tokenize(text):
            seen.setdefault(tok, None)
    return list(seen)


def text_to_vector(text: str, vocabulary: Sequence[str] | None = None) -> np.ndarray:
    """Term-frequency counts of ``text`` over ``vocabulary``.

    With ``vocabulary=None`` the text's own tokens form the vocabulary. Tokens
    outside the vocabulary are dropped.
    """
    tokens = tokenize(text)
    if not tokens:
        raise EmptyTextError(f"text is empty after normalization: {text!r}")
    if vocabulary is None:
        vocabulary = build_vocabulary(text)
    index = {tok: i for i, tok in enumerate(vocabulary)}
    counts = np.zeros(len(index), dtype=np.float64)
    for tok in tokens:
        i = index.get(tok)
        if i is not None:
            counts[i] += 1.0
    return counts


def text_similarity(intended: str, perceived: str) -> float:
    """Bag-of-words cosine similarity over the union vocabulary of both texts."""
    vocab = build_vocabulary(intended, perceived)
    return cosine_similarity(text_to_vector(intended, vocab), text_to_vector(perceived, vocab))


@dataclass(frozen=True)
class GrayImage:
    width: int
    height: int
    pixels: np.ndarray  # shape (height, width)
    max_value: int = 255

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.size != self.width * self.height:
            raise DimensionError(
                f"pixel count {px.size} does not match {self.width}x{self.height}"
            )
        px = px.reshape(self.height, self.width)
        if px.size and (px.min() < 0 or px.max() > self.max_value):
            raise ValidationError(f"pixel intensities must lie in [0, {self.max_value}]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, array, max_value: int = 255) -> "GrayImage":
        arr = np.asarray(array)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {arr.shape}")
        return cls(arr.shape[1], arr.shape[0], arr, max_value)


@dataclass(frozen=True)
class SsimParams:
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0
    window: str = "gaussian"  # or "global"
    window_size: int = 11
    sigma: float = 1.5

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValidationError("k1 and k2 must be positive")
        if self.dynamic_range <= 0:
            raise ValidationError("dynamic_range must be positive")
        if self.window not in ("gaussian", "global"):
            raise ValidationError(f"unknown SSIM window {self.window!r}")
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise ValidationError("window_size must be odd and >= 3")
        if self.sigma <= 0:
            raise ValidationError("sigma must be positive")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2
    g = np.exp(-(r * r) / (2 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    # Separable weighted mean over every fully-contained window.
    rows = sliding_window_view(img, g.size, axis=1) @ g
    return sliding_window_view(rows, g.size, axis=0) @ g


def _ssim_formula(mu_x, mu_y, var_x, var_y, cov, c1, c2):
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return num / den


def ssim_map(x: GrayImage, y: GrayImage, params: SsimParams = SsimParams()) -> np.ndarray:
    if (x.width, x.height) != (y.width, y.height):
        raise DimensionError(
            f"image size mismatch: {x.width}x{x.height} vs {y.width}x{y.height}"
        )
    a, b = x.pixels, y.pixels
    if params.window == "global":
        mu_x, mu_y = a.mean(), b.mean()
        dx, dy = a - mu_x, b - mu_y
        var_x, var_y, cov = (dx * dx).mean(), (dy * dy).mean(), (dx * dy).mean()
        return np.atleast_2d(_ssim_formula(mu_x, mu_y, var_x, var_y, cov, params.c1, params.c2))

    n = params.window_size
    if x.width < n or x.height < n:
        raise WindowError(f"image {x.width}x{x.height} smaller than {n}x{n} window")
    g = gaussian_window(n, params.sigma)
    mu_x, mu_y = _filter_valid(a, g), _filter_valid(b, g)
    var_x = _filter_valid(a * a, g) - mu_x * mu_x
    var_y = _filter_valid(b * b, g) - mu_y * mu_y
    cov = _filter_valid(a * b, g) - mu_x * mu_y
    return _ssim_formula(mu_x, mu_y, var_x, var_y, cov, params.c1, params.c2)


def ssim(x: GrayImage, y: GrayImage, params: SsimParams = SsimParams()) -> float:
    """Mean structural similarity of two equally sized grayscale images."""
    return float(ssim_map(x, y, params).mean())


def semantic_noise(score: float) -> float:
    if not math.isfinite(score):
        raise ValidationError(f"similarity score must be finite, got {score}")
    return min(1.0, max(0.0, 1.0 - score))


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated header")
        tokens.append(data[start:pos])
    return tokens, pos + 1  # exactly one whitespace byte precedes the raster


def read_pgm(path) -> GrayImage:
    """Read a binary (P5) PGM file."""
    path = Path(path)
    try:
        data = path.read_bytes()
        (magic, w, h, maxval), offset = _pgm_tokens(data, 4)
        if magic != b"P5":
            raise ValueError(f"not a binary PGM (magic {magic!r})")
        width, height, maxval = int(w), int(h), int(maxval)
        if not 0 < maxval < 65536:
            raise ValueError(f"bad maxval {maxval}")
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        expected = width * height * dtype.itemsize
        raster = data[offset : offset + expected]
        if len(raster) != expected:
            raise ValueError(f"expected {expected} raster bytes, got {len(raster)}")
        pixels = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    except (OSError, ValueError) as exc:
        raise IngestionError(path, exc) from exc
    return GrayImage(width, height, pixels, maxval)


def write_pgm(path, image: GrayImage) -> None:
    dtype = np.dtype(">u2") if image.max_value > 255 else np.dtype("u1")
    header = f"P5\n{image.width} {image.height}\n{image.max_value}\n".encode("ascii")
    Path(path).write_bytes(header + image.pixels.astype(dtype).tobytes())


def read_vector(path) -> np.ndarray:
    """Read a feature vector stored as one JSON array of numbers."""
    path = Path(path)
    try:
        values = json.loads(path.read_text())
        if not isinstance(values, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
        ):
            raise ValueError("expected a JSON array of numbers")
    except (OSError, ValueError) as exc:
        raise IngestionError(path, exc) from exc
    return as_feature_vector(values)


def write_vector(path, values: Iterable[float]) -> None:
    Path(path).write_text(json.dumps([float(v) for v in values]))
