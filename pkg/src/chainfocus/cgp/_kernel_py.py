"""Pure numpy fallback for the compiled render kernel.

Evaluates one active node at a time across all pixels, which keeps the
Python-level loop at O(active nodes) per image.
"""
from __future__ import annotations

import numpy as np

from .functions import apply_function, apply_function_array

__all__ = ["apply_function", "render_hsv"]


def render_hsv(func, src_a, src_b, pm, out_src, width: int, height: int) -> np.ndarray:
    cols = (np.arange(width, dtype=np.float64) / float(width)) * 255.0
    rows = (np.arange(height, dtype=np.float64) / float(height)) * 255.0
    x, y = np.meshgrid(cols, rows)
    buf = [x, y]
    for j in range(len(func)):
        buf.append(apply_function_array(int(func[j]), buf[src_a[j]], buf[src_b[j]], float(pm[j])))
    out = np.empty((height, width, 3), dtype=np.float64)
    for ch in range(3):
        out[:, :, ch] = buf[out_src[ch]]
    return out
