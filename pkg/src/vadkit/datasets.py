"""Dataset loading: MVTec-style directory layout plus a deterministic synthetic
defect generator used for desk-scale verification.

Expected on-disk layout (bit-exact):

    <root>/<category>/train/good/*.png
    <root>/<category>/test/<defect_or_good>/*.png
    <root>/<category>/ground_truth/<defect>/<stem>_mask.png

Synthetic records: normal images are a mid-gray (0.5) background plus seeded
low-amplitude texture (uniform in ±0.05); anomalous images add a bright
rectangular blob (+0.4, clipped to 1.0, each side 10-25% of the image side) at
a seeded location, with the exact rectangle as ground-truth mask.  The texture
of an anomalous record is identical to the normal rendering of the same record
index, so the blob is the only difference.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import LayoutError, MaskMismatch
from .imageops import read_png_mask, read_png_rgb, resize_bilinear, resize_nearest
from .seeding import substream

NORMAL = "normal"
ANOMALOUS = "anomalous"

# Per-channel standardization constants (common natural-image statistics).
STANDARDIZE_MEAN = (0.485, 0.456, 0.406)
STANDARDIZE_STD = (0.229, 0.224, 0.225)


@dataclass
class ImageRecord:
    """One sample: pixels (eager array or lazily resolved path), label, mask."""

    id: str
    label: str
    category: str
    split: str
    pixels: np.ndarray | None = None
    pixels_path: Path | None = None
    mask: np.ndarray | None = None

    def get_pixels(self) -> np.ndarray:
        """H×W×3 float64 values in [0, 1]; loads from disk on first access."""
        if self.pixels is None:
            if self.pixels_path is None:
                raise ValueError(f"record {self.id} has neither pixels nor a path")
            self.pixels = read_png_rgb(self.pixels_path).astype(np.float64)
        return self.pixels

    def is_anomalous(self) -> bool:
        return self.label == ANOMALOUS


@dataclass
class DatasetSplit:
    train: list
    test: list
    category: str


@dataclass
class LoadedData:
    """A dataset split plus an optional pool of extra anomalous records that
    contamination scenarios may draw from without touching the test set."""

    split: DatasetSplit
    pool: list = field(default_factory=list)


# --------------------------------------------------------------------------
# MVTec-style directory layout
# --------------------------------------------------------------------------

def _png_files(directory: Path) -> list:
    return sorted(p for p in directory.iterdir() if p.suffix.lower() == ".png")


def _image_size(path: Path):
    with Image.open(path) as im:
        w, h = im.size
    return h, w


def load_mvtec_layout(root, category: str) -> DatasetSplit:
    """Load one category from an MVTec-style directory tree.

    Train = every image under ``train/good`` (normal).  Test = every image
    under ``test/*``; defect-folder images are anomalous and must pair with a
    mask ``ground_truth/<defect>/<stem>_mask.png`` of identical size.

    Raises:
        LayoutError: a mandatory subdirectory is missing or train is empty.
        MaskMismatch: an anomalous image lacks a usable mask.
    """
    base = Path(root) / category
    train_dir = base / "train" / "good"
    test_dir = base / "test"
    if not train_dir.is_dir():
        raise LayoutError(f"missing mandatory directory {train_dir}")
    if not test_dir.is_dir():
        raise LayoutError(f"missing mandatory directory {test_dir}")

    train_files = _png_files(train_dir)
    if not train_files:
        raise LayoutError(f"{train_dir} contains no PNG images")

    train = [
        ImageRecord(
            id=str(p.relative_to(base)),
            label=NORMAL,
            category=category,
            split="train",
            pixels_path=p,
        )
        for p in train_files
    ]

    test = []
    for defect_dir in sorted(d for d in test_dir.iterdir() if d.is_dir()):
        defect = defect_dir.name
        for p in _png_files(defect_dir):
            rec_id = str(p.relative_to(base))
            if defect == "good":
                test.append(
                    ImageRecord(
                        id=rec_id, label=NORMAL, category=category,
                        split="test", pixels_path=p,
                    )
                )
                continue
            mask_path = base / "ground_truth" / defect / f"{p.stem}_mask.png"
            if not mask_path.is_file():
                raise MaskMismatch(f"{rec_id}: expected mask at {mask_path}")
            if _image_size(mask_path) != _image_size(p):
                raise MaskMismatch(f"{rec_id}: mask dimensions differ from image")
            mask = read_png_mask(mask_path).astype(np.float64)
            if not mask.any():
                raise MaskMismatch(f"{rec_id}: mask has no positive pixels")
            test.append(
                ImageRecord(
                    id=rec_id, label=ANOMALOUS, category=category,
                    split="test", pixels_path=p, mask=mask,
                )
            )
    return DatasetSplit(train=train, test=test, category=category)


# --------------------------------------------------------------------------
# Synthetic defect generator
# --------------------------------------------------------------------------

BLOB_INTENSITY = 0.4
BLOB_SIDE_RANGE = (0.10, 0.25)
TEXTURE_AMPLITUDE = 0.05


def _record_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(index,)))


def _render(seed: int, index: int, size: int, anomalous: bool):
    """Render record ``index``: (pixels, mask-or-None).

    The texture is drawn before any blob parameter, so the anomalous rendering
    of an index equals its normal rendering plus the blob.
    """
    rng = _record_rng(seed, index)
    base = 0.5 + rng.uniform(-TEXTURE_AMPLITUDE, TEXTURE_AMPLITUDE, size=(size, size, 3))
    if not anomalous:
        return base, None
    lo, hi = BLOB_SIDE_RANGE
    bh = max(1, int(round(rng.uniform(lo, hi) * size)))
    bw = max(1, int(round(rng.uniform(lo, hi) * size)))
    top = int(rng.integers(0, size - bh + 1))
    left = int(rng.integers(0, size - bw + 1))
    pixels = base.copy()
    pixels[top:top + bh, left:left + bw, :] = np.clip(
        base[top:top + bh, left:left + bw, :] + BLOB_INTENSITY, 0.0, 1.0
    )
    mask = np.zeros((size, size), dtype=np.float64)
    mask[top:top + bh, left:left + bw] = 1.0
    return pixels, mask


def synthesize_records(n_normal, n_anomalous, size, seed, split, id_prefix, category="synthetic"):
    """Generate ``n_normal`` normal then ``n_anomalous`` anomalous records.

    Record ``i`` is rendered from substream ``(seed, i)``; repeated calls are
    bit-identical.
    """
    if size < 32:
        raise ValueError(f"size must be >= 32, got {size}")
    if n_normal < 0 or n_anomalous < 0:
        raise ValueError("record counts must be >= 0")
    records = []
    for i in range(n_normal + n_anomalous):
        anomalous = i >= n_normal
        pixels, mask = _render(seed, i, size, anomalous)
        records.append(
            ImageRecord(
                id=f"{id_prefix}{i:05d}",
                label=ANOMALOUS if anomalous else NORMAL,
                category=category,
                split=split,
                pixels=pixels,
                mask=mask,
            )
        )
    return records


def generate_synthetic(n_normal, n_anomalous, size=64, seed=0) -> DatasetSplit:
    """Deterministic synthetic split: normals as train, anomalous as test.

    Richer splits (normal test images, contamination pools) are composed by
    :func:`synthetic_dataset` from the same renderer.
    """
    records = synthesize_records(n_normal, n_anomalous, size, seed, split="train",
                                 id_prefix="syn-")
    train = records[:n_normal]
    test = records[n_normal:]
    for rec in test:
        rec.split = "test"
    return DatasetSplit(train=train, test=test, category="synthetic")


def synthetic_dataset(seed=0, n_train=200, n_test_normal=50, n_test_anomalous=50,
                      size=64, n_pool=0, category="synthetic") -> LoadedData:
    """Registry factory: full synthetic split plus an optional anomalous pool.

    Each section draws from its own named substream of ``seed``, so changing
    one count never perturbs the other sections' pixels.
    """
    def section_seed(name):
        return int(substream(seed, f"synthetic.{name}").integers(0, 2**63))

    train = synthesize_records(n_train, 0, size, section_seed("train"),
                               split="train", id_prefix="train-", category=category)
    test_normal = synthesize_records(n_test_normal, 0, size, section_seed("test_normal"),
                                     split="test", id_prefix="testn-", category=category)
    test_anom = synthesize_records(0, n_test_anomalous, size, section_seed("test_anomalous"),
                                   split="test", id_prefix="testa-", category=category)
    pool = synthesize_records(0, n_pool, size, section_seed("pool"),
                              split="train", id_prefix="pool-", category=category)
    split = DatasetSplit(train=train, test=test_normal + test_anom, category=category)
    return LoadedData(split=split, pool=pool)


def mvtec_dataset(seed=0, root=None, category=None) -> LoadedData:
    """Registry factory around :func:`load_mvtec_layout` (seed unused)."""
    if root is None or category is None:
        raise ValueError("mvtec_layout dataset requires 'root' and 'category'")
    return LoadedData(split=load_mvtec_layout(root, category), pool=[])


# --------------------------------------------------------------------------
# Preprocessing
# --------------------------------------------------------------------------

def preprocess(record_or_pixels, target: int,
               mean=STANDARDIZE_MEAN, std=STANDARDIZE_STD) -> np.ndarray:
    """Bilinear-resize to ``target``×``target`` and standardize per channel."""
    if target <= 0:
        raise ValueError("target size must be positive")
    if isinstance(record_or_pixels, ImageRecord):
        pixels = record_or_pixels.get_pixels()
    else:
        pixels = np.asarray(record_or_pixels, dtype=np.float64)
    out = resize_bilinear(pixels, target, target)
    mean = np.asarray(mean, dtype=np.float64).reshape(1, 1, 3)
    std = np.asarray(std, dtype=np.float64).reshape(1, 1, 3)
    return (out - mean) / std


def preprocess_mask(mask: np.ndarray, target: int) -> np.ndarray:
    """Nearest-neighbor mask resize, re-binarized at 0.5."""
    out = resize_nearest(np.asarray(mask, dtype=np.float64), target, target)
    return (out >= 0.5).astype(np.float64)
