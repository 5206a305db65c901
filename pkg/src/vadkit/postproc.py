"""Anomaly-map postprocessing, CutPaste augmentation, and analytic profiling.

Smoothing uses a normalized Gaussian kernel of radius ``ceil(3*sigma)`` with
mirrored-edge ("reflect") padding, so a constant map passes through unchanged
and the map mean is preserved.  The default sigma is 4.0 at a 256×256 input
and scales proportionally with input size.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ImageTooSmall, VadkitError

BASE_SIGMA = 4.0
BASE_SIZE = 256


def default_sigma(image_size: int) -> float:
    return BASE_SIGMA * image_size / BASE_SIZE


@dataclass
class PostprocessConfig:
    sigma: float = BASE_SIGMA
    normalization: str = "none"  # {none, minmax}
    threshold: float | None = None

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.normalization not in ("none", "minmax"):
            raise ValueError(f"unknown normalization {self.normalization!r}")


def gaussian_blur(amap: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur; sigma 0 is the identity."""
    amap = np.asarray(amap, dtype=np.float64)
    if sigma == 0:
        return amap.copy()
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets ** 2) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    out = ndimage.correlate1d(amap, kernel, axis=0, mode="reflect")
    return ndimage.correlate1d(out, kernel, axis=1, mode="reflect")


def minmax_normalize(amap: np.ndarray) -> np.ndarray:
    """(x - min) / (max - min); a constant map maps to all zeros."""
    amap = np.asarray(amap, dtype=np.float64)
    lo, hi = float(amap.min()), float(amap.max())
    if hi == lo:
        return np.zeros_like(amap)
    return (amap - lo) / (hi - lo)


def postprocess_map(amap: np.ndarray, cfg: PostprocessConfig):
    """Blur, optionally min-max normalize, optionally threshold (``>=`` rule).

    Returns ``(map, mask_or_None)``.
    """
    amap = np.asarray(amap, dtype=np.float64)
    if not np.isfinite(amap).all():
        raise VadkitError("anomaly map contains non-finite values")
    out = gaussian_blur(amap, cfg.sigma)
    if cfg.normalization == "minmax":
        out = minmax_normalize(out)
    mask = None
    if cfg.threshold is not None:
        mask = (out >= cfg.threshold).astype(np.float64)
    return out, mask


# --------------------------------------------------------------------------
# CutPaste augmentation
# --------------------------------------------------------------------------

def cutpaste(image: np.ndarray, seed: int, area=(0.02, 0.15), aspect=(0.3, 3.3)):
    """Copy a seeded rectangular patch to a different seeded location.

    Returns ``(augmented image, mask)`` where the mask is 1 exactly on the
    destination rectangle; pixels outside it are untouched.

    Raises:
        ImageTooSmall: no patch satisfying the area/aspect constraints fits.
    """
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[:2]
    rng = np.random.default_rng(seed)
    lo_a, hi_a = area
    for _ in range(1000):
        frac = rng.uniform(lo_a, hi_a)
        ratio = rng.uniform(*aspect)  # width / height
        ph = int(round(math.sqrt(frac * h * w / ratio)))
        pw = int(round(math.sqrt(frac * h * w * ratio)))
        if ph < 1 or pw < 1 or ph > h or pw > w:
            continue
        if not (lo_a <= ph * pw / (h * w) <= hi_a):
            continue
        src = (int(rng.integers(0, h - ph + 1)), int(rng.integers(0, w - pw + 1)))
        dst = (int(rng.integers(0, h - ph + 1)), int(rng.integers(0, w - pw + 1)))
        if src == dst:
            continue
        patch = image[src[0]:src[0] + ph, src[1]:src[1] + pw].copy()
        out = image.copy()
        out[dst[0]:dst[0] + ph, dst[1]:dst[1] + pw] = patch
        mask = np.zeros((h, w), dtype=np.float64)
        mask[dst[0]:dst[0] + ph, dst[1]:dst[1] + pw] = 1.0
        return out, mask
    raise ImageTooSmall(f"no {lo_a:.0%}-{hi_a:.0%} patch fits a {h}×{w} image")


# --------------------------------------------------------------------------
# Analytic profiling
# --------------------------------------------------------------------------

@dataclass
class ProfileReport:
    param_count: int = 0
    flops: int = 0
    peak_activation_values: int = 0
    per_layer: list = field(default_factory=list)
    unknown_layers: list = field(default_factory=list)

    def as_json(self) -> dict:
        return {
            "param_count": self.param_count,
            "flops": self.flops,
            "peak_activation_values": self.peak_activation_values,
            "per_layer": self.per_layer,
            "unknown_layers": self.unknown_layers,
        }


def _conv_counts(spec):
    kh, kw = spec["kernel"]
    c_in, c_out = spec["c_in"], spec["c_out"]
    oh, ow = spec["out_hw"]
    out_values = c_out * oh * ow
    flops = 2 * kh * kw * c_in * out_values
    params = c_out * c_in * kh * kw
    if spec.get("bias", False):
        flops += out_values
        params += c_out
    return params, flops, out_values


def _dense_counts(spec):
    n_in, n_out = spec["n_in"], spec["n_out"]
    flops = 2 * n_in * n_out
    params = n_in * n_out
    if spec.get("bias", False):
        flops += n_out
        params += n_out
    return params, flops, n_out


def profile(extractor_or_specs, input_hw, batch: int = 1) -> ProfileReport:
    """Analytic parameter / FLOP / activation-memory report.

    Multiply-and-add counts as 2 FLOPs.  FLOPs and activation counts scale
    linearly with ``batch``.  Layers with an unknown kind are listed in
    ``unknown_layers`` and excluded from the totals.
    """
    if hasattr(extractor_or_specs, "layer_specs"):
        specs = extractor_or_specs.layer_specs(input_hw)
    else:
        specs = list(extractor_or_specs)
    report = ProfileReport()
    for spec in specs:
        kind = spec.get("kind")
        if kind == "conv":
            params, flops, out_values = _conv_counts(spec)
        elif kind == "dense":
            params, flops, out_values = _dense_counts(spec)
        else:
            report.unknown_layers.append(str(spec.get("name", kind)))
            continue
        flops *= batch
        out_values *= batch
        report.param_count += params
        report.flops += flops
        report.peak_activation_values = max(report.peak_activation_values, out_values)
        report.per_layer.append({
            "name": spec.get("name", kind),
            "kind": kind,
            "params": params,
            "flops": flops,
            "output_values": out_values,
        })
    return report
