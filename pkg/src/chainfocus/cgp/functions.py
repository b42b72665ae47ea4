"""The 13-function pixel set.

Every function maps two node inputs ``a`` and ``b`` (at the leaves these
are the pixel coordinates scaled to 0..255) and the node parameter ``pm``
to a value in [0, 255].  The original listing lost several operator glyphs;
the readings used here are collected in ``READINGS`` so an alternate can
be swapped in one place:

* the lost operator in 3, 9, 10, 11, 12, 13 is ``+``;
* the condition ``(x|y)`` in 4 and 12 is ``a > b``;
* 13 is ``sqrt(|(a - pm**2) + (b - pm**2)|) mod 255``.

Bitwise operators act on values rounded half-to-even.  Results that are
not finite become 0; everything else is clamped to [0, 255].
"""
from __future__ import annotations

import math

import numpy as np

N_FUNCTIONS = 13
LO, HI = 0.0, 255.0

# which functions read the second input / the parameter gene
USES_B = frozenset({1, 3, 4, 9, 11, 12, 13})
USES_PM = frozenset({2, 9, 10, 13})

READINGS = {
    "lost_operator": "+",
    "condition": "a > b",
    "function_13": "sqrt(|(a - pm^2) + (b - pm^2)|) % 255",
}

NAMES = {
    1: "a | b",
    2: "pm & a",
    3: "(a + b) % 255",
    4: "a - b if a > b else b - a",
    5: "255 - a",
    6: "|cos(a) * 255|",
    7: "|tan((a % 45) * pi / 180) * 255|",
    8: "|tan(a) * 255| % 255",
    9: "sqrt((a - pm)^2 + (b - pm)^2)",
    10: "a % (pm + 1) + (255 - pm)",
    11: "(a + b) / 2",
    12: "255 * (b + 1) / (a + 1) if a > b else 255 * (a + 1) / (b + 1)",
    13: "sqrt(|(a - pm^2) + (b - pm^2)|) % 255",
}


def _clamp(v: float) -> float:
    if not math.isfinite(v):
        return 0.0
    return LO if v < LO else HI if v > HI else v


def apply_function(k: int, a: float, b: float, pm: float) -> float:
    """Scalar evaluation of function ``k``; the reference for the vector paths."""
    if k == 1:
        v = float(round(a) | round(b))
    elif k == 2:
        v = float(round(pm) & round(a))
    elif k == 3:
        v = math.fmod(a + b, 255.0)
    elif k == 4:
        v = a - b if a > b else b - a
    elif k == 5:
        v = 255.0 - a
    elif k == 6:
        v = abs(math.cos(a) * 255.0)
    elif k == 7:
        v = abs(math.tan((math.fmod(a, 45.0) * math.pi) / 180.0) * 255.0)
    elif k == 8:
        v = math.fmod(abs(math.tan(a) * 255.0), 255.0)
    elif k == 9:
        v = math.sqrt((a - pm) ** 2 + (b - pm) ** 2)
    elif k == 10:
        v = math.fmod(a, pm + 1.0) + (255.0 - pm)
    elif k == 11:
        v = (a + b) / 2.0
    elif k == 12:
        v = 255.0 * ((b + 1.0) / (a + 1.0)) if a > b else 255.0 * ((a + 1.0) / (b + 1.0))
    elif k == 13:
        v = math.fmod(math.sqrt(abs((a - pm * pm) + (b - pm * pm))), 255.0)
    else:
        raise ValueError(f"function gene {k} outside 1..{N_FUNCTIONS}")
    return _clamp(v)


def _int(v: np.ndarray) -> np.ndarray:
    return np.rint(v).astype(np.int64)


def apply_function_array(k: int, a: np.ndarray, b: np.ndarray, pm: float | np.ndarray) -> np.ndarray:
    """Vectorised ``apply_function`` over pixel arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    with np.errstate(all="ignore"):
        if k == 1:
            v = (_int(a) | _int(b)).astype(np.float64)
        elif k == 2:
            v = (_int(np.broadcast_to(pm, a.shape)) & _int(a)).astype(np.float64)
        elif k == 3:
            v = np.fmod(a + b, 255.0)
        elif k == 4:
            v = np.where(a > b, a - b, b - a)
        elif k == 5:
            v = 255.0 - a
        elif k == 6:
            v = np.abs(np.cos(a) * 255.0)
        elif k == 7:
            v = np.abs(np.tan((np.fmod(a, 45.0) * math.pi) / 180.0) * 255.0)
        elif k == 8:
            v = np.fmod(np.abs(np.tan(a) * 255.0), 255.0)
        elif k == 9:
            v = np.sqrt((a - pm) ** 2 + (b - pm) ** 2)
        elif k == 10:
            v = np.fmod(a, pm + 1.0) + (255.0 - pm)
        elif k == 11:
            v = (a + b) / 2.0
        elif k == 12:
            v = np.where(a > b, 255.0 * ((b + 1.0) / (a + 1.0)), 255.0 * ((a + 1.0) / (b + 1.0)))
        elif k == 13:
            v = np.fmod(np.sqrt(np.abs((a - pm * pm) + (b - pm * pm))), 255.0)
        else:
            raise ValueError(f"function gene {k} outside 1..{N_FUNCTIONS}")
        v = np.where(np.isfinite(v), v, 0.0)
    return np.clip(v, LO, HI)
