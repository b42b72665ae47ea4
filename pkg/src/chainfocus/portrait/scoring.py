"""Portrait scores: resemblance to the sitter plus three painterly rules.

All images are HSV float arrays of shape (height, width, 3) with every
channel in [0, 255].  Hue is treated as circular with period 255.

The painterly formulas are stand-ins with named constants: tonal
separation of face from background with a quiet background, tonal
fidelity plus a face/background hue-harmony term, and an unequal
dominant/subdominant hue split.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np

HUE_PERIOD = 255.0
FACE_WEIGHT = 2.0
BG_WEIGHT = 1.0

TONAL_SCALE = 64.0
HARMONY_WINDOW_DEG = 30.0
HUE_BINS = 12
DOMINANT_TARGET = 0.65
SUBDOMINANT_TARGET = 0.25


class ScoreError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SitterAssets:
    sitter_image: np.ndarray  # (h, w, 3) HSV
    face_mask: np.ndarray     # (h, w) bool

    def __post_init__(self):
        img = np.asarray(self.sitter_image, dtype=np.float64)
        mask = np.asarray(self.face_mask).astype(bool)
        if img.ndim != 3 or img.shape[2] != 3:
            raise ScoreError("sitter image must be (height, width, 3)")
        if mask.shape != img.shape[:2]:
            raise ScoreError(f"mask shape {mask.shape} differs from image {img.shape[:2]}")
        if not mask.any() or mask.all():
            raise ScoreError("mask needs at least one face and one background pixel")
        object.__setattr__(self, "sitter_image", img)
        object.__setattr__(self, "face_mask", mask)

    @property
    def shape(self) -> tuple[int, int]:
        return self.face_mask.shape

    @classmethod
    def from_png(cls, sitter: Union[str, Path], mask: Union[str, Path]) -> "SitterAssets":
        from PIL import Image

        from ..cgp.render import load_png_hsv
        img = load_png_hsv(sitter)
        with Image.open(mask) as im:
            m = np.asarray(im.convert("L")) >= 128
        return cls(img, m)


class RuleScores(NamedTuple):
    resemblance: float
    p1_composition: float
    p2_tonal_color: float
    p3_dominance: float
    painterly_aggregate: float


def _check(image: np.ndarray, assets: SitterAssets) -> None:
    if image.shape != assets.sitter_image.shape:
        raise ScoreError(f"image shape {image.shape} differs from sitter {assets.sitter_image.shape}")


def hue_distance(h1, h2):
    """Circular hue distance on the 0..255 wheel, at most 127.5."""
    d = np.abs(np.asarray(h1, dtype=np.float64) - h2) % HUE_PERIOD
    return np.minimum(d, HUE_PERIOD - d)


def resemblance(image: np.ndarray, assets: SitterAssets) -> float:
    _check(image, assets)
    s = assets.sitter_image
    dv = np.abs(image[..., 2] - s[..., 2]) / 255.0
    dh = 2.0 * hue_distance(image[..., 0], s[..., 0]) / 255.0
    ds = np.abs(image[..., 1] - s[..., 1]) / 255.0
    dist = 0.5 * dv + 0.25 * dh + 0.25 * ds
    w = np.where(assets.face_mask, FACE_WEIGHT, BG_WEIGHT)
    return float(np.clip(1.0 - (dist * w).sum() / w.sum(), 0.0, 1.0))


def hue_histogram(image: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """12-bin hue shares weighted by S*V/255**2; uniform when weightless."""
    h = image[..., 0]
    wt = image[..., 1] * image[..., 2] / (255.0 * 255.0)
    if mask is not None:
        h, wt = h[mask], wt[mask]
    bins = np.minimum((h / HUE_PERIOD * HUE_BINS).astype(np.int64), HUE_BINS - 1)
    hist = np.bincount(bins.ravel(), weights=wt.ravel(), minlength=HUE_BINS)
    total = hist.sum()
    if total <= 0:
        return np.full(HUE_BINS, 1.0 / HUE_BINS)
    return hist / total


def _dominant_hue_deg(image: np.ndarray, mask: np.ndarray) -> float | None:
    wt = image[..., 1][mask] * image[..., 2][mask]
    if wt.sum() <= 0:
        return None
    hist = hue_histogram(image, mask)
    return (int(np.argmax(hist)) + 0.5) * 360.0 / HUE_BINS


def harmony(face_deg: float | None, bg_deg: float | None) -> float:
    """1 inside the analogous or complementary windows, falling linearly to
    0 at 90 degrees (the point farthest from both)."""
    if face_deg is None or bg_deg is None:
        return 0.0
    d = abs(face_deg - bg_deg) % 360.0
    d = min(d, 360.0 - d)
    win = HARMONY_WINDOW_DEG
    miss = min(max(0.0, d - win), max(0.0, (180.0 - win) - d))
    return max(0.0, 1.0 - miss / (90.0 - win))


def painterly_rules(image: np.ndarray, assets: SitterAssets) -> tuple[float, float, float]:
    _check(image, assets)
    face = assets.face_mask
    bg = ~face
    v = image[..., 2]
    sep = abs(v[face].mean() - v[bg].mean())
    p1 = 0.5 * min(1.0, sep / TONAL_SCALE) + 0.5 * max(0.0, 1.0 - v[bg].std() / TONAL_SCALE)

    tonal = 1.0 - np.abs(v - assets.sitter_image[..., 2]).mean() / 255.0
    p2 = 0.6 * tonal + 0.4 * harmony(_dominant_hue_deg(image, face), _dominant_hue_deg(image, bg))

    shares = np.sort(hue_histogram(image))[::-1]
    q1, q2 = shares[0], shares[1]
    miss = (abs(q1 - DOMINANT_TARGET) / DOMINANT_TARGET + abs(q2 - SUBDOMINANT_TARGET) / SUBDOMINANT_TARGET) / 2.0
    p3 = 1.0 - min(1.0, max(0.0, miss))
    return float(p1), float(p2), float(p3)


def score_image(image: np.ndarray, assets: SitterAssets, aggregate: str = "max") -> RuleScores:
    r = resemblance(image, assets)
    p1, p2, p3 = painterly_rules(image, assets)
    if aggregate == "max":
        a = max(p1, p2, p3)
    elif aggregate == "mean":
        a = (p1 + p2 + p3) / 3.0
    else:
        raise ValueError(f"unknown aggregate {aggregate!r}")
    return RuleScores(r, p1, p2, p3, a)


def combined_fitness(scores: RuleScores, w_painterly: float) -> float:
    """Blend of resemblance and the painterly aggregate."""
    return (1.0 - w_painterly) * scores.resemblance + w_painterly * scores.painterly_aggregate


def synthetic_sitter(width: int = 64, height: int = 64) -> SitterAssets:
    """Procedural head-and-shoulders test sitter with its face mask.

    Warm face oval with darker eyes and mouth, dark hair cap, a cool
    low-saturation background gradient and a mid-blue coat.
    """
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    u = (xx + 0.5) / width
    t = (yy + 0.5) / height
    hsv = np.empty((height, width, 3))
    hsv[..., 0] = 150.0
    hsv[..., 1] = 60.0
    hsv[..., 2] = 70.0 + 60.0 * u
    face = ((u - 0.5) / 0.24) ** 2 + ((t - 0.45) / 0.32) ** 2 <= 1.0
    hair = (((u - 0.5) / 0.28) ** 2 + ((t - 0.30) / 0.24) ** 2 <= 1.0) & (t < 0.28)
    coat = (t > 0.80) & (np.abs(u - 0.5) < 0.45)
    hsv[coat] = (165.0, 140.0, 90.0)
    hsv[hair] = (20.0, 120.0, 45.0)
    shade = 215.0 - 60.0 * np.abs(u - 0.45)
    hsv[face, 0] = 18.0
    hsv[face, 1] = 110.0
    hsv[face, 2] = shade[face]
    eyes = ((((u - 0.40) / 0.05) ** 2 + ((t - 0.42) / 0.025) ** 2 <= 1.0)
            | (((u - 0.60) / 0.05) ** 2 + ((t - 0.42) / 0.025) ** 2 <= 1.0))
    mouth = (np.abs(u - 0.5) < 0.08) & (np.abs(t - 0.62) < 0.015)
    hsv[eyes & face, 2] = 40.0
    hsv[mouth & face, 2] = 95.0
    hsv[mouth & face, 0] = 5.0
    return SitterAssets(hsv, face)
