"""Rendering decoded programs to HSV images and RGB PNGs.

The per-pixel kernel is compiled with Cython when the extension is
available.  Set ``CHAINFOCUS_PURE_PYTHON=1`` before import to force the
numpy fallback; ``BACKEND`` reports which one is active.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from . import _kernel_py
from .genome import CgpGenome, Phenotype, decode

if os.environ.get("CHAINFOCUS_PURE_PYTHON"):
    _kernel = _kernel_py
    BACKEND = "python"
else:
    try:
        from . import _kernel  # type: ignore[attr-defined,no-redef]
        BACKEND = "compiled"
    except ImportError:
        _kernel = _kernel_py
        BACKEND = "python"

KERNELS = {"python": _kernel_py}
if BACKEND == "compiled":
    KERNELS["compiled"] = _kernel


@dataclass(frozen=True)
class ImageSpec:
    width: int = 64
    height: int = 64

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")


def eval_pixel(phenotype: Phenotype, x_u: float, y_u: float) -> tuple[float, float, float]:
    """Evaluate the program at one pixel; coordinates are unit-interval."""
    from .functions import apply_function
    buf = [x_u * 255.0, y_u * 255.0]
    for j in range(len(phenotype.func)):
        buf.append(apply_function(int(phenotype.func[j]), buf[phenotype.src_a[j]],
                                  buf[phenotype.src_b[j]], float(phenotype.pm[j])))
    h, s, v = (buf[i] for i in phenotype.out_src)
    return h, s, v


def render(genome: Union[CgpGenome, Phenotype], spec: ImageSpec = ImageSpec(),
           backend: str | None = None) -> np.ndarray:
    """HSV image of shape (height, width, 3), values in [0, 255], row-major."""
    ph = genome if isinstance(genome, Phenotype) else decode(genome)
    kernel = KERNELS[backend] if backend else _kernel
    return kernel.render_hsv(
        np.ascontiguousarray(ph.func, dtype=np.int64),
        np.ascontiguousarray(ph.src_a, dtype=np.int64),
        np.ascontiguousarray(ph.src_b, dtype=np.int64),
        np.ascontiguousarray(ph.pm, dtype=np.float64),
        np.ascontiguousarray(ph.out_src, dtype=np.int64),
        spec.width, spec.height,
    )


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """Hexcone HSV -> RGB. H, S, V in [0, 255]; H maps onto [0, 360) degrees."""
    h = hsv[..., 0] * (6.0 / 256.0)   # sextant coordinate in [0, 6)
    s = hsv[..., 1] / 255.0
    v = hsv[..., 2] / 255.0
    i = np.floor(h).astype(np.int64) % 6
    f = h - np.floor(h)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    rgb = np.stack([r, g, b], axis=-1) * 255.0
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Inverse of ``hsv_to_rgb`` up to 8-bit quantisation."""
    c = rgb.astype(np.float64) / 255.0
    r, g, b = c[..., 0], c[..., 1], c[..., 2]
    mx = c.max(axis=-1)
    mn = c.min(axis=-1)
    d = mx - mn
    safe = np.where(d == 0, 1.0, d)
    hr = np.mod((g - b) / safe, 6.0)
    hg = (b - r) / safe + 2.0
    hb = (r - g) / safe + 4.0
    h6 = np.where(mx == r, hr, np.where(mx == g, hg, hb))
    h6 = np.where(d == 0, 0.0, h6)
    s = np.where(mx == 0, 0.0, d / np.where(mx == 0, 1.0, mx))
    return np.stack([(h6 * (256.0 / 6.0)) % 256.0, s * 255.0, mx * 255.0], axis=-1).clip(0, 255)


def save_png(hsv: np.ndarray, path: Union[str, Path]) -> None:
    # fixed encoder settings keep output byte-identical across runs
    Image.fromarray(hsv_to_rgb(hsv)).save(path, format="PNG", optimize=False, compress_level=6)


def load_png_hsv(path: Union[str, Path]) -> np.ndarray:
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"))
    return rgb_to_hsv(rgb)
