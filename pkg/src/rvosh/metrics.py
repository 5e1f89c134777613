"""Region similarity J, boundary accuracy F, and benchmark aggregation.

J is the Jaccard index (intersection over union) of predicted and
ground-truth masks.  F is the boundary F-measure: boundary pixels of one
mask are matched against the other's within a Euclidean pixel tolerance,
and F is the harmonic mean of the resulting precision and recall.  The
headline J&F score is the arithmetic mean of J and F, matching how
published benchmark tables are computed.

Empty-mask conventions follow standard video segmentation evaluation:
a comparison of two empty masks scores 1.0, and exactly one empty mask
scores 0.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from rvosh.core import MaskTrack, ensure_mask


def default_tolerance(height: int, width: int) -> int:
    """Boundary match tolerance in pixels: max(1, round(0.008 * diagonal))."""
    return max(1, int(round(0.008 * math.hypot(height, width))))


def _check_same_shape(pred: np.ndarray, gt: np.ndarray) -> None:
    if pred.shape != gt.shape:
        raise ValueError(f"mask dimensions differ: {pred.shape} vs {gt.shape}")


def jaccard(pred, gt) -> float:
    """Region similarity |pred & gt| / |pred | gt|.

    Returns 1.0 when both masks are empty and 0.0 when exactly one is.
    """
    p, g = ensure_mask(pred), ensure_mask(gt)
    _check_same_shape(p, g)
    union = int(np.count_nonzero(p | g))
    if union == 0:
        return 1.0
    inter = int(np.count_nonzero(p & g))
    return inter / union

def mask_boundary(mask) -> np.ndarray:
    """Foreground pixels with at least one background or out-of-image 4-neighbor."""
    m = ensure_mask(mask)
    padded = np.pad(m, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1]
        & padded[2:, 1:-1]
        & padded[1:-1, :-2]
        & padded[1:-1, 2:]
    )
    return m & ~interior


def boundary_f(pred, gt, tolerance: float | None = None) -> float:
    """Boundary F-measure under an exact Euclidean pixel tolerance.

    Precision is the fraction of predicted boundary pixels within
    `tolerance` of some ground-truth boundary pixel; recall is symmetric.
    Distances come from an exact Euclidean distance transform, so results
    agree with an all-pairs brute-force computation.
    """
    p, g = ensure_mask(pred), ensure_mask(gt)
    _check_same_shape(p, g)
    if tolerance is None:
        tolerance = default_tolerance(*p.shape)
    if tolerance < 0:
        raise ValueError(f"tolerance must be >= 0, got {tolerance}")

    bp = mask_boundary(p)
    bg = mask_boundary(g)
    n_p = int(np.count_nonzero(bp))
    n_g = int(np.count_nonzero(bg))
    if n_p == 0 and n_g == 0:
        return 1.0
    if n_p == 0 or n_g == 0:
        return 0.0

    dist_to_gt = ndimage.distance_transform_edt(~bg)
    dist_to_pred = ndimage.distance_transform_edt(~bp)
    precision = int(np.count_nonzero(dist_to_gt[bp] <= tolerance)) / n_p
    recall = int(np.count_nonzero(dist_to_pred[bg] <= tolerance)) / n_g
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def jf_mean(j: float, f: float) -> float:
    """Arithmetic mean of J and F (the published headline combination)."""
    return (j + f) / 2.0


@dataclass(frozen=True)
class FrameScore:
    frame: int
    j: float
    f: float


@dataclass(frozen=True)
class ExpressionScore:
    """Per-expression aggregate: unweighted frame means and their J&F."""

    video_id: str
    expression_id: str
    mean_j: float
    mean_f: float
    jf: float
    frame_scores: tuple[FrameScore, ...] = ()


@dataclass(frozen=True)
class DatasetScore:
    """Unweighted expression-level means and their J&F."""

    expression_count: int
    j: float
    f: float
    jf: float


def score_expression(
    pred: MaskTrack,
    gt: MaskTrack,
    tolerance: float | None = None,
    video_id: str = "",
    expression_id: str = "",
) -> ExpressionScore:
    """Score a full predicted track against a full ground-truth track.

    Both tracks must cover the same contiguous frame range 0..I-1 with
    matching mask dimensions; every frame contributes equally.
    """
    gt_frames = gt.frames()
    if not gt_frames:
        raise ValueError("ground-truth track is empty")
    frame_count = gt_frames[-1] + 1
    if not gt.is_full(frame_count):
        raise ValueError("ground-truth track has missing frames")
    if not pred.is_full(frame_count):
        missing = sorted(set(range(frame_count)) - set(pred.entries))
        raise ValueError(f"predicted track missing frames {missing[:5]}")

    shape = gt.shape
    if tolerance is None:
        tolerance = default_tolerance(*shape)

    frames = []
    for i in range(frame_count):
        j = jaccard(pred.entries[i], gt.entries[i])
        f = boundary_f(pred.entries[i], gt.entries[i], tolerance)
        frames.append(FrameScore(i, j, f))
    mean_j = math.fsum(s.j for s in frames) / frame_count
    mean_f = math.fsum(s.f for s in frames) / frame_count
    return ExpressionScore(
        video_id or pred.video_id,
        expression_id,
        mean_j,
        mean_f,
        jf_mean(mean_j, mean_f),
        tuple(frames),
    )


def score_dataset(scores: list[ExpressionScore]) -> DatasetScore:
    """Unweighted mean of per-expression J and F over a non-empty list."""
    if not scores:
        raise ValueError("cannot aggregate an empty score list")
    n = len(scores)
    j = math.fsum(s.mean_j for s in scores) / n
    f = math.fsum(s.mean_f for s in scores) / n
    return DatasetScore(n, j, f, jf_mean(j, f))
