"""Shared domain types and deterministic randomness.

Masks are plain 2D boolean numpy arrays (row-major, height x width).  All
stochastic behaviour in the package flows through :func:`derive_rng`, which
hashes a base seed together with scope strings (typically video id,
expression id and a purpose tag) so that per-item randomness is independent
of iteration order and reproducible across platforms.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

Seed = int

FrameSource = Union[np.ndarray, str, Path]


def _digest(seed: Seed, scope: tuple[str, ...]) -> bytes:
    payload = str(int(seed)).encode("utf-8")
    for part in scope:
        payload += b"\x1f" + part.encode("utf-8")
    return hashlib.sha256(payload).digest()


def derive_seed(seed: Seed, *scope: str) -> int:
    """Derive a 64-bit sub-seed from a base seed and scope strings."""
    return int.from_bytes(_digest(seed, scope)[:8], "little")


def derive_rng(seed: Seed, *scope: str) -> np.random.Generator:
    """Counter-based generator keyed by (seed, scope); stable across runs."""
    key = np.frombuffer(_digest(seed, scope)[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def ensure_mask(mask) -> np.ndarray:
    """Coerce to a 2D boolean array and validate its shape."""
    arr = np.asarray(mask, dtype=bool)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"mask dimensions must be positive, got {arr.shape}")
    return arr


def mask_area(mask) -> int:
    """Number of foreground pixels."""
    return int(np.count_nonzero(ensure_mask(mask)))


def mask_equal(a, b) -> bool:
    """True iff both masks have identical dimensions and bits."""
    ma, mb = ensure_mask(a), ensure_mask(b)
    return ma.shape == mb.shape and bool(np.array_equal(ma, mb))


@dataclass(frozen=True)
class VideoSequence:
    """Ordered frames of one video.

    Frames may be in-memory pixel grids (height x width x 3, uint8) or
    locators of image files on disk; all frames share one resolution and
    indices are 0-based and contiguous.
    """

    id: str
    height: int
    width: int
    frames: tuple[FrameSource, ...]

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError(f"video {self.id}: dimensions must be positive")
        if not self.frames:
            raise ValueError(f"video {self.id}: at least one frame required")
        object.__setattr__(self, "frames", tuple(self.frames))
        for i, frame in enumerate(self.frames):
            if isinstance(frame, np.ndarray):
                if frame.shape != (self.height, self.width, 3):
                    raise ValueError(
                        f"video {self.id}: frame {i} has shape {frame.shape}, "
                        f"expected {(self.height, self.width, 3)}"
                    )

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def pixels(self, index: int) -> np.ndarray:
        """Pixel grid of one frame, loading from disk when needed."""
        frame = self.frames[index]
        if isinstance(frame, np.ndarray):
            return frame
        with Image.open(frame) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
        if arr.shape != (self.height, self.width, 3):
            raise ValueError(
                f"video {self.id}: frame file {frame} has shape {arr.shape}, "
                f"expected {(self.height, self.width, 3)}"
            )
        return arr

    def frame_locators(self) -> list[str] | None:
        """Paths of all frames, or None when any frame is in-memory only."""
        paths = []
        for frame in self.frames:
            if isinstance(frame, np.ndarray):
                return None
            paths.append(str(frame))
        return paths


@dataclass
class MaskTrack:
    """Binary masks of one object/expression keyed by frame index.

    A track is "full" when its keys are exactly 0..frame_count-1, and
    "partial" otherwise (the initial predictions on sampled frames).
    """

    video_id: str
    entries: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        cleaned: dict[int, np.ndarray] = {}
        shape = None
        for key in sorted(self.entries):
            idx = int(key)
            if idx < 0:
                raise ValueError(f"track {self.video_id}: negative frame index {idx}")
            mask = ensure_mask(self.entries[key])
            if shape is None:
                shape = mask.shape
            elif mask.shape != shape:
                raise ValueError(
                    f"track {self.video_id}: frame {idx} shape {mask.shape} != {shape}"
                )
            cleaned[idx] = mask
        self.entries = cleaned

    def frames(self) -> list[int]:
        return sorted(self.entries)

    @property
    def shape(self) -> tuple[int, int] | None:
        if not self.entries:
            return None
        return next(iter(self.entries.values())).shape

    def is_full(self, frame_count: int) -> bool:
        return set(self.entries) == set(range(frame_count))

    def copy(self) -> "MaskTrack":
        return MaskTrack(self.video_id, {i: m.copy() for i, m in self.entries.items()})


@dataclass(frozen=True)
class ExpressionTask:
    """One referring expression bound to a video and its target object set."""

    video_id: str
    expression_id: str
    text: str
    object_ids: frozenset[int] = frozenset()
    ground_truth: MaskTrack | None = None

    def __post_init__(self):
        object.__setattr__(self, "object_ids", frozenset(int(i) for i in self.object_ids))
        if self.ground_truth is not None and not self.object_ids:
            raise ValueError(
                f"task {self.video_id}/{self.expression_id}: "
                "object_ids required when ground truth is present"
            )


def validate_ground_truth(task: ExpressionTask, video: VideoSequence) -> None:
    """Check that a task's ground truth covers the video exactly."""
    gt = task.ground_truth
    if gt is None:
        return
    if not gt.is_full(video.frame_count):
        raise ValueError(
            f"task {task.video_id}/{task.expression_id}: ground truth must cover "
            f"all {video.frame_count} frames"
        )
    if gt.shape != (video.height, video.width):
        raise ValueError(
            f"task {task.video_id}/{task.expression_id}: ground truth shape "
            f"{gt.shape} != video shape {(video.height, video.width)}"
        )
