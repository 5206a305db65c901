"""Feature extraction behind named layer hooks.

An extractor exposes an ordered list of layer names; a forward pass returns
one feature map per name.  Real pretrained networks plug in by registering a
factory that returns any object satisfying :class:`FeatureExtractor`; the
built-in :class:`ToyConvExtractor` is a frozen, seeded two-stage conv stack so
the whole pipeline is testable without downloading weights.

Toy architecture (input H×W×3, kernel 3×3, padding 1, leaky ReLU 0.1):

    s1: conv 3->8,  stride 2   (H/2 × W/2)
    s2: conv 8->16, stride 2   (H/4 × W/4, cumulative stride 4)
"""

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import ShapeMismatch, UnknownLayer
from .imageops import resize_nearest

F32 = np.float32


@dataclass
class FeaturePyramid:
    """Ordered multi-scale feature maps of one image: [(layer_name, C×H×W)]."""

    maps: list
    image_size: tuple | None = None

    def shapes(self):
        return [arr.shape for _, arr in self.maps]

    def names(self):
        return [name for name, _ in self.maps]


class FeatureExtractor:
    """Interface: ordered ``layer_names`` plus a deterministic forward pass."""

    layer_names: list = []
    trainable: bool = False

    def forward(self, x: np.ndarray) -> dict:
        """x: (N, 3, H, W) float32 -> {layer_name: (N, C, H, W)}."""
        raise NotImplementedError

    def param_count(self) -> int:
        raise NotImplementedError

    def state_arrays(self) -> dict:
        """Named weight arrays, for checkpoints and profiling."""
        raise NotImplementedError

    def trimmed(self, deepest_layer: str) -> "FeatureExtractor":
        raise NotImplementedError

    def layer_specs(self, input_hw) -> list:
        """Layer descriptors for the profiler (kind, dims, output size)."""
        raise NotImplementedError


@dataclass
class _ConvStage:
    name: str
    w: np.ndarray  # (C_out, C_in, kh, kw) float32
    b: np.ndarray  # (C_out,) float32
    stride: int
    pad: int
    alpha: float


# (name, out_channels, stride) — cumulative stride doubles per stage.
TOY_PLAN = (("s1", 8, 2), ("s2", 16, 2))
TOY_KERNEL = 3
TOY_PAD = 1
TOY_ALPHA = 0.1


class ToyConvExtractor(FeatureExtractor):
    """Seeded frozen conv stack; ``trainable_copy`` yields an STFPM student."""

    def __init__(self, stages, trainable=False, seed=None):
        self._stages = stages
        self.layer_names = [s.name for s in stages]
        self.trainable = trainable
        self.seed = seed

    # -- construction ------------------------------------------------------

    @classmethod
    def seeded(cls, seed=0, trainable=False, plan=TOY_PLAN):
        rng = np.random.default_rng(seed)
        stages = []
        c_in = 3
        for name, c_out, stride in plan:
            fan_in = c_in * TOY_KERNEL * TOY_KERNEL
            w = nn.he_normal(rng, (c_out, c_in, TOY_KERNEL, TOY_KERNEL), fan_in)
            b = np.zeros(c_out, dtype=F32)
            stages.append(_ConvStage(name, w, b, stride, TOY_PAD, TOY_ALPHA))
            c_in = c_out
        return cls(stages, trainable=trainable, seed=seed)

    def trainable_copy(self, seed) -> "ToyConvExtractor":
        """Same architecture, independently seeded, trainable weights."""
        plan = tuple((s.name, s.w.shape[0], s.stride) for s in self._stages)
        return ToyConvExtractor.seeded(seed=seed, trainable=True, plan=plan)

    # -- forward -----------------------------------------------------------

    def forward(self, x: np.ndarray) -> dict:
        out, _, _ = self._forward_cached(x)
        return out

    def _forward_cached(self, x):
        """Returns (hook outputs, conv caches, pre-activations) for training."""
        x = np.asarray(x, dtype=F32)
        outputs, caches, preacts = {}, {}, {}
        h = x
        for stage in self._stages:
            z, cache = nn.conv2d_forward(h, stage.w, stage.b, stage.stride, stage.pad)
            a = nn.leaky_relu(z, stage.alpha)
            outputs[stage.name] = a
            caches[stage.name] = cache
            preacts[stage.name] = z
            h = a
        return outputs, caches, preacts

    def backward(self, grads_by_layer: dict, caches: dict, preacts: dict) -> dict:
        """Parameter gradients given d(loss)/d(hook output) per hooked layer.

        A deeper hook's gradient flows back through earlier stages and adds to
        any gradient injected directly at those stages' outputs.
        """
        param_grads = {}
        g = None
        for stage in reversed(self._stages):
            injected = grads_by_layer.get(stage.name)
            if injected is not None:
                g = injected if g is None else g + injected
            if g is None:
                continue
            dz = nn.leaky_relu_backward(g, preacts[stage.name], stage.alpha)
            g, dw, db = nn.conv2d_backward(dz, caches[stage.name])
            param_grads[f"{stage.name}.w"] = dw
            param_grads[f"{stage.name}.b"] = db
        return param_grads

    # -- state / structure ---------------------------------------------------

    def state_arrays(self) -> dict:
        out = {}
        for s in self._stages:
            out[f"{s.name}.w"] = s.w
            out[f"{s.name}.b"] = s.b
        return out

    def load_state_arrays(self, arrays: dict):
        for s in self._stages:
            s.w = np.asarray(arrays[f"{s.name}.w"], dtype=F32).reshape(s.w.shape)
            s.b = np.asarray(arrays[f"{s.name}.b"], dtype=F32).reshape(s.b.shape)

    def param_count(self) -> int:
        return int(sum(a.size for a in self.state_arrays().values()))

    def trimmed(self, deepest_layer: str) -> "ToyConvExtractor":
        if deepest_layer not in self.layer_names:
            raise UnknownLayer(f"layer {deepest_layer!r} not in {self.layer_names}")
        keep = self.layer_names.index(deepest_layer) + 1
        return ToyConvExtractor(self._stages[:keep], trainable=self.trainable,
                                seed=self.seed)

    def layer_specs(self, input_hw) -> list:
        h, w = input_hw
        specs = []
        for s in self._stages:
            kh, kw = s.w.shape[2], s.w.shape[3]
            h = (h + 2 * s.pad - kh) // s.stride + 1
            w = (w + 2 * s.pad - kw) // s.stride + 1
            specs.append({
                "kind": "conv",
                "name": s.name,
                "c_in": s.w.shape[1],
                "c_out": s.w.shape[0],
                "kernel": (kh, kw),
                "stride": s.stride,
                "padding": s.pad,
                "bias": True,
                "out_hw": (h, w),
            })
        return specs


class CompositeExtractor(FeatureExtractor):
    """Several extractors behind one hook namespace (``<prefix>.<layer>``).

    Used to deploy method-specific feature computations (e.g. a student and a
    teacher network) as a single edge-side extractor.
    """

    def __init__(self, named_parts):
        self.parts = list(named_parts)
        self.layer_names = [f"{prefix}.{layer}" for prefix, ext in self.parts
                            for layer in ext.layer_names]
        self.trainable = False

    def forward(self, x: np.ndarray) -> dict:
        out = {}
        for prefix, ext in self.parts:
            for layer, arr in ext.forward(x).items():
                out[f"{prefix}.{layer}"] = arr
        return out

    def param_count(self) -> int:
        return int(sum(ext.param_count() for _, ext in self.parts))

    def state_arrays(self) -> dict:
        out = {}
        for prefix, ext in self.parts:
            for name, arr in ext.state_arrays().items():
                out[f"{prefix}.{name}"] = arr
        return out

    def layer_specs(self, input_hw) -> list:
        specs = []
        for prefix, ext in self.parts:
            for spec in ext.layer_specs(input_hw):
                spec = dict(spec)
                spec["name"] = f"{prefix}.{spec.get('name', '')}"
                specs.append(spec)
        return specs


def make_toy_extractor(seed=0, trainable=False) -> ToyConvExtractor:
    """Registry factory for the deterministic toy backbone."""
    return ToyConvExtractor.seeded(seed=seed, trainable=trainable)


# --------------------------------------------------------------------------
# Operations on extractors
# --------------------------------------------------------------------------

def _check_hooks(extractor, hooks):
    if not hooks:
        raise UnknownLayer("at least one hook layer is required")
    for hook in hooks:
        if hook not in extractor.layer_names:
            raise UnknownLayer(
                f"layer {hook!r} not exposed; available: {extractor.layer_names}"
            )


def extract(image_hwc: np.ndarray, extractor: FeatureExtractor, hooks) -> FeaturePyramid:
    """Run one H×W×3 image through ``extractor`` and gather ``hooks``' outputs.

    Maps come back in hook order; spatial sizes must be non-increasing with
    depth (that ordering is what multi-scale alignment relies on).
    """
    _check_hooks(extractor, hooks)
    image_hwc = np.asarray(image_hwc, dtype=F32)
    if image_hwc.ndim != 3 or image_hwc.shape[2] != 3:
        raise ShapeMismatch(f"expected H×W×3 image, got {image_hwc.shape}")
    batch = image_hwc.transpose(2, 0, 1)[None]
    outputs = extractor.forward(batch)
    maps = [(h, np.ascontiguousarray(outputs[h][0])) for h in hooks]
    for (_, a), (_, b) in zip(maps, maps[1:]):
        if b.shape[1] > a.shape[1] or b.shape[2] > a.shape[2]:
            raise ShapeMismatch("hook order must go shallow to deep (non-increasing size)")
    return FeaturePyramid(maps=maps, image_size=image_hwc.shape[:2])


def trim(extractor: FeatureExtractor, hooks) -> FeatureExtractor:
    """Drop everything beyond the deepest hooked layer.

    Hooked outputs of the trimmed extractor are bit-identical to the
    original's; the parameter count can only shrink.
    """
    _check_hooks(extractor, hooks)
    deepest = max(hooks, key=extractor.layer_names.index)
    return extractor.trimmed(deepest)


def align_and_concat(pyramid: FeaturePyramid) -> np.ndarray:
    """Upsample every map (nearest-neighbor) to the largest spatial size and
    concatenate along channels: (sum C_l) × H_max × W_max."""
    if not pyramid.maps:
        raise ShapeMismatch("empty feature pyramid")
    h_max = max(arr.shape[1] for _, arr in pyramid.maps)
    w_max = max(arr.shape[2] for _, arr in pyramid.maps)
    aligned = []
    for _, arr in pyramid.maps:
        if arr.shape[1] != h_max or arr.shape[2] != w_max:
            hwc = np.moveaxis(arr, 0, 2)
            arr = np.moveaxis(resize_nearest(hwc, h_max, w_max), 2, 0)
        aligned.append(arr)
    return np.concatenate(aligned, axis=0)
