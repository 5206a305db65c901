"""Low-level image array helpers: resizing and PNG I/O.

Resize conventions (pinned once, used everywhere):

* Sample positions use half-pixel centers: output pixel ``i`` reads source
  coordinate ``(i + 0.5) * in/out - 0.5``.
* Bilinear interpolation clamps coordinates at the border (no extrapolation).
* Nearest-neighbor picks ``floor((i + 0.5) * in/out)``, clipped.
* Resizing to the identical size is an exact identity for both modes.
"""

import numpy as np
from PIL import Image


def _axis_coords(n_in: int, n_out: int) -> np.ndarray:
    return (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5


def _bilinear_1d(arr: np.ndarray, n_out: int, axis: int) -> np.ndarray:
    n_in = arr.shape[axis]
    if n_in == n_out:
        return arr
    x = _axis_coords(n_in, n_out)
    x = np.clip(x, 0.0, n_in - 1.0)
    lo = np.floor(x).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = x - lo
    a = np.take(arr, lo, axis=axis)
    b = np.take(arr, hi, axis=axis)
    shape = [1] * arr.ndim
    shape[axis] = n_out
    frac = frac.reshape(shape)
    return a * (1.0 - frac) + b * frac


def resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize over the two leading spatial axes (H, W[, C])."""
    out = _bilinear_1d(np.asarray(arr, dtype=np.float64), out_h, axis=0)
    out = _bilinear_1d(out, out_w, axis=1)
    return out


def resize_nearest(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resize over (H, W[, C]); preserves the value set."""
    arr = np.asarray(arr)
    if arr.shape[0] != out_h:
        idx = np.floor(_axis_coords(arr.shape[0], out_h) + 0.5).astype(np.intp)
        arr = np.take(arr, np.clip(idx, 0, arr.shape[0] - 1), axis=0)
    if arr.shape[1] != out_w:
        idx = np.floor(_axis_coords(arr.shape[1], out_w) + 0.5).astype(np.intp)
        arr = np.take(arr, np.clip(idx, 0, arr.shape[1] - 1), axis=1)
    return arr


def read_png_rgb(path) -> np.ndarray:
    """Decode a PNG into float32 H×W×3 values in [0, 1]."""
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
    return arr


def read_png_mask(path) -> np.ndarray:
    """Decode a PNG mask into a binary float32 H×W array (threshold 0.5)."""
    with Image.open(path) as im:
        gray = im.convert("L")
        arr = np.asarray(gray, dtype=np.float32) / 255.0
    return (arr >= 0.5).astype(np.float32)


def write_png_rgb(path, pixels: np.ndarray):
    """Save float [0, 1] H×W×3 pixels as an 8-bit PNG."""
    arr = np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0)
    Image.fromarray((arr * 255.0 + 0.5).astype(np.uint8), mode="RGB").save(path)


def write_png_gray16(path, values01: np.ndarray):
    """Save float [0, 1] H×W values as a 16-bit grayscale PNG."""
    arr = np.clip(np.asarray(values01, dtype=np.float64), 0.0, 1.0)
    scaled = (arr * 65535.0 + 0.5).astype(np.uint16)
    Image.fromarray(scaled, mode="I;16").save(path)


def read_png_gray16(path) -> np.ndarray:
    """Inverse of :func:`write_png_gray16`, returning float64 in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im, dtype=np.float64)
    return arr / 65535.0
