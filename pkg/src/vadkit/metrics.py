"""Image- and pixel-level detection metrics: ROC-AUC, PR-AUC, best F1, and
per-region overlap (PRO).

Conventions, stated once and used everywhere:

* a sample is predicted positive when ``score >= threshold``;
* ROC-AUC uses the Mann-Whitney formulation, so ties count half;
* PR-AUC is the average-precision step sum over descending unique thresholds;
* PRO regions are 8-connected components of ground-truth masks, and the
  PRO-vs-FPR curve is trapezoid-integrated up to ``fpr_limit`` (then divided
  by it), with the curve anchored at (0, 0);
* degenerate inputs (one class, no positives, no regions) raise; `evaluate`
  converts those into explicit "undefined" markers instead of fake numbers.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.stats import rankdata

from .errors import NoPositives, NoRegions, SingleClass

METRIC_NAMES = (
    "image_auroc",
    "image_auprc",
    "image_f1",
    "pixel_auroc",
    "pixel_auprc",
    "pixel_f1",
    "pixel_aupro",
)

EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


def _check_binary(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be binary 0/1")
    return labels.astype(np.int64)


def auroc(scores, labels) -> float:
    """Area under the ROC curve; tied score pairs count 0.5.

    Raises:
        SingleClass: only one label value is present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    pos = int(labels.sum())
    neg = int(labels.size - pos)
    if pos == 0 or neg == 0:
        raise SingleClass("ROC-AUC needs both classes")
    ranks = rankdata(scores, method="average")
    return float((ranks[labels == 1].sum() - pos * (pos + 1) / 2.0) / (pos * neg))


def _threshold_sweep(scores, labels):
    """Cumulative TP/FP at each descending unique threshold."""
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    # last index of each tie group = cumulative counts at that threshold
    distinct = np.nonzero(np.diff(sorted_scores))[0]
    cut = np.concatenate([distinct, [scores.size - 1]])
    tp = np.cumsum(sorted_labels)[cut].astype(np.float64)
    fp = (cut + 1) - tp
    thresholds = sorted_scores[cut]
    return tp, fp, thresholds


def auprc(scores, labels) -> float:
    """Average precision: sum of (R_k - R_{k-1}) * P_k over unique thresholds.

    Raises:
        NoPositives: no positive label present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise NoPositives("PR-AUC needs at least one positive")
    tp, fp, _ = _threshold_sweep(scores, labels)
    precision = tp / (tp + fp)
    recall = tp / n_pos
    return float(np.sum(np.diff(recall, prepend=0.0) * precision))


def f1_max(scores, labels):
    """Best F1 over thresholds at all unique score values.

    Ties on F1 resolve to the higher threshold.  Returns ``(f1, threshold)``.

    Raises:
        NoPositives: no positive label present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise NoPositives("F1 needs at least one positive")
    tp, fp, thresholds = _threshold_sweep(scores, labels)
    fn = n_pos - tp
    f1 = 2.0 * tp / (2.0 * tp + fp + fn)
    best = int(np.argmax(f1))  # first (= highest-threshold) maximum
    return float(f1[best]), float(thresholds[best])


def mask_regions(mask: np.ndarray) -> list:
    """Boolean pixel-index arrays of the 8-connected components of ``mask``."""
    labeled, n = ndimage.label(np.asarray(mask) > 0, structure=EIGHT_CONNECTED)
    return [labeled == k for k in range(1, n + 1)]


def pro_curve(maps, masks):
    """PRO-vs-FPR curve vertices at every unique map value, descending.

    Returns ``(fpr, pro)`` arrays with a (0, 0) anchor prepended.
    """
    maps = [np.asarray(m, dtype=np.float64) for m in maps]
    masks = [np.asarray(m) for m in masks]
    if len(maps) != len(masks):
        raise ValueError("maps and masks differ in length")

    region_values = []  # map values inside each region
    neg_values = []
    for amap, mask in zip(maps, masks):
        if amap.shape != mask.shape:
            raise ValueError("map and mask shapes differ")
        binary = mask > 0
        for region in mask_regions(mask):
            region_values.append(amap[region])
        neg_values.append(amap[~binary])
    if not region_values:
        raise NoRegions("PRO needs at least one ground-truth region")
    negatives = np.concatenate(neg_values)
    if negatives.size == 0:
        raise SingleClass("PRO needs at least one negative pixel")

    uniq_asc = np.unique(np.concatenate([m.ravel() for m in maps]))
    n_thresh = uniq_asc.size
    # descending threshold index of a value v: n_thresh - 1 - ascending position
    pro_sum = np.zeros(n_thresh, dtype=np.float64)
    for values in region_values:
        k = n_thresh - 1 - np.searchsorted(uniq_asc, values)
        np.add.at(pro_sum, k, 1.0 / values.size)
    pro = np.cumsum(pro_sum) / len(region_values)

    neg_sorted = np.sort(negatives)
    uniq_desc = uniq_asc[::-1]
    n_ge = negatives.size - np.searchsorted(neg_sorted, uniq_desc, side="left")
    fpr = n_ge / negatives.size

    return np.concatenate([[0.0], fpr]), np.concatenate([[0.0], pro])


def clipped_trapezoid(x, y, x_limit: float) -> float:
    """Trapezoid integral of the polyline (x, y) over [0, x_limit].

    ``x`` must be nondecreasing; if the polyline crosses ``x_limit``, a point
    is interpolated at the boundary.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    inside = x <= x_limit
    xs, ys = x[inside], y[inside]
    if xs.size < x.size and xs.size > 0:
        i = xs.size  # first point beyond the limit
        x0, x1 = x[i - 1], x[i]
        t = 0.0 if x1 == x0 else (x_limit - x0) / (x1 - x0)
        xs = np.append(xs, x_limit)
        ys = np.append(ys, y[i - 1] + t * (y[i] - y[i - 1]))
    return float(np.trapezoid(ys, xs))


def aupro(maps, masks, fpr_limit: float = 0.3) -> float:
    """Area under the PRO-vs-FPR curve up to ``fpr_limit``, normalized by it.

    Raises:
        NoRegions: no mask contains a positive region.
    """
    if not 0.0 < fpr_limit <= 1.0:
        raise ValueError("fpr_limit must be in (0, 1]")
    fpr, pro = pro_curve(maps, masks)
    return clipped_trapezoid(fpr, pro, fpr_limit) / fpr_limit


# --------------------------------------------------------------------------
# Aggregation over scored samples
# --------------------------------------------------------------------------

@dataclass
class ScoredSample:
    """One evaluated image: scalar score, anomaly map, label, optional mask."""

    image_score: float
    anomaly_map: np.ndarray
    label: int
    mask: np.ndarray | None = None
    id: str = ""


@dataclass
class MetricReport:
    values: dict = field(default_factory=dict)      # name -> float
    undefined: dict = field(default_factory=dict)   # name -> reason
    counts: dict = field(default_factory=dict)

    def as_json(self) -> dict:
        metrics = {name: self.values[name] for name in self.values}
        metrics.update({name: "undefined" for name in self.undefined})
        return {
            "metrics": metrics,
            "undefined_reasons": dict(self.undefined),
            "counts": dict(self.counts),
        }


def metric_fn(name: str):
    """Callable backing a registered metric name (consumed by `evaluate`)."""
    if name not in METRIC_NAMES:
        raise ValueError(f"unknown metric {name!r}")
    return {
        "image_auroc": auroc,
        "image_auprc": auprc,
        "image_f1": f1_max,
        "pixel_auroc": auroc,
        "pixel_auprc": auprc,
        "pixel_f1": f1_max,
        "pixel_aupro": aupro,
    }[name]


def evaluate(samples, metrics=METRIC_NAMES, fpr_limit: float = 0.3) -> MetricReport:
    """Aggregate image metrics over scores/labels and pixel metrics over the
    concatenated anomaly maps.

    Pixel metrics cover samples that carry masks plus normal samples (which
    contribute all-zero masks); anomalous samples without masks are skipped
    for pixel metrics and reported in the counts.  Degenerate metrics are
    marked undefined with a reason instead of being coerced to 0 or 1.
    """
    if not samples:
        raise ValueError("evaluate needs at least one sample")
    for name in metrics:
        if name not in METRIC_NAMES:
            raise ValueError(f"unknown metric {name!r}")

    image_scores = np.array([s.image_score for s in samples], dtype=np.float64)
    image_labels = np.array([int(s.label) for s in samples], dtype=np.int64)

    pixel_maps, pixel_masks = [], []
    skipped_pixel_samples = 0
    for s in samples:
        amap = np.asarray(s.anomaly_map, dtype=np.float64)
        if s.mask is not None:
            pixel_maps.append(amap)
            pixel_masks.append(np.asarray(s.mask, dtype=np.float64))
        elif int(s.label) == 0:
            pixel_maps.append(amap)
            pixel_masks.append(np.zeros_like(amap))
        else:
            skipped_pixel_samples += 1

    report = MetricReport()
    report.counts = {
        "images": int(image_labels.size),
        "positive_images": int(image_labels.sum()),
        "evaluated_pixels": int(sum(m.size for m in pixel_masks)),
        "positive_pixels": int(sum(m.sum() for m in pixel_masks)),
        "pixel_skipped_images": skipped_pixel_samples,
    }

    flat_scores = flat_labels = None
    if pixel_maps:
        flat_scores = np.concatenate([m.ravel() for m in pixel_maps])
        flat_labels = np.concatenate([(m > 0).astype(np.int64).ravel() for m in pixel_masks])

    for name in metrics:
        try:
            if name == "image_auroc":
                value = auroc(image_scores, image_labels)
            elif name == "image_auprc":
                value = auprc(image_scores, image_labels)
            elif name == "image_f1":
                value = f1_max(image_scores, image_labels)[0]
            elif name == "pixel_aupro":
                if not pixel_maps:
                    raise NoRegions("no samples with masks")
                value = aupro(pixel_maps, pixel_masks, fpr_limit=fpr_limit)
            else:
                if flat_scores is None:
                    raise SingleClass("no pixel samples")
                if name == "pixel_auroc":
                    value = auroc(flat_scores, flat_labels)
                elif name == "pixel_auprc":
                    value = auprc(flat_scores, flat_labels)
                else:
                    value = f1_max(flat_scores, flat_labels)[0]
            report.values[name] = value
        except (SingleClass, NoPositives, NoRegions) as exc:
            report.undefined[name] = str(exc)
    return report
