"""Inference orchestration over pluggable predictor/propagator backends.

Two modes are supported.  The consistent two-stage mode predicts initial
masks independently on the sampled frames, keeps those masks verbatim in
the output, and fills every other frame by propagating from the nearest
prompt within deterministic segments.  The legacy mode emulates streaming
memory-bank inference: only the first predicted mask prompts the
propagator, which then streams through all remaining frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence

import numpy as np

from rvosh.core import ExpressionTask, MaskTrack, Seed, VideoSequence, derive_seed
from rvosh.sampling import Strategy, make_plan


class Mode(str, Enum):
    LEGACY = "legacy"
    CONSISTENT = "consistent"


class Direction(str, Enum):
    FORWARD = "fwd"
    BACKWARD = "bwd"


class BackendContractError(RuntimeError):
    """A backend returned frames or dimensions it was not asked for."""


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved knobs for one inference run.

    `sampling_strategy` of None picks the mode's default: uniform for
    consistent runs, first-frames for legacy runs.  `prompt_policy` of
    None uses every initial mask as a propagation prompt; an integer k
    keeps only the k earliest.
    """

    mode: Mode = Mode.CONSISTENT
    sampling_strategy: Strategy | None = None
    frames: int = 5
    prompt_policy: int | None = None
    boundary_tolerance: int | None = None
    seed: Seed = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.sampling_strategy is not None:
            object.__setattr__(self, "sampling_strategy", Strategy(self.sampling_strategy))
        if self.frames < 1:
            raise ValueError(f"frames must be >= 1, got {self.frames}")
        if self.prompt_policy is not None and not (1 <= self.prompt_policy <= self.frames):
            raise ValueError(
                f"prompt_policy must be in [1, {self.frames}], got {self.prompt_policy}"
            )

    def resolved_strategy(self) -> Strategy:
        if self.sampling_strategy is not None:
            return self.sampling_strategy
        return Strategy.FIRST if self.mode is Mode.LEGACY else Strategy.UNIFORM


@dataclass(frozen=True)
class PromptSet:
    """Initial masks chosen to prompt the propagator, ordered by frame."""

    entries: tuple[tuple[int, np.ndarray], ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("prompt set must not be empty")
        frames = [f for f, _ in self.entries]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f"prompt frames must be strictly increasing, got {frames}")
        shapes = {m.shape for _, m in self.entries}
        if len(shapes) != 1:
            raise ValueError(f"prompt masks disagree on dimensions: {shapes}")

    @property
    def frames(self) -> tuple[int, ...]:
        return tuple(f for f, _ in self.entries)


@dataclass(frozen=True)
class PropagationSegment:
    """A contiguous run of frames filled from one prompt frame."""

    prompt_frame: int
    direction: Direction
    target_frames: tuple[int, ...]


class PredictorBackend(Protocol):
    """Produces one mask per requested frame, each frame independently."""

    def predict(
        self, video: VideoSequence, task: ExpressionTask, indices: Sequence[int]
    ) -> MaskTrack: ...


class PropagatorBackend(Protocol):
    """Fills one segment of frames given the full prompt set."""

    def propagate(
        self, video: VideoSequence, prompts: PromptSet, segment: PropagationSegment
    ) -> dict[int, np.ndarray]: ...


def select_prompts(initial: MaskTrack, limit: int | None = None) -> PromptSet:
    """Keep all initial masks, or only the `limit` earliest ones."""
    frames = initial.frames()
    if not frames:
        raise ValueError("initial track is empty")
    if limit is not None:
        if not (1 <= limit <= len(frames)):
            raise ValueError(f"prompt limit {limit} out of range 1..{len(frames)}")
        frames = frames[:limit]
    return PromptSet(tuple((f, initial.entries[f]) for f in frames))


def partition_propagation(
    prompt_frames: Sequence[int], frame_count: int
) -> list[PropagationSegment]:
    """Split non-prompt frames into per-prompt segments.

    Frames before the earliest prompt form one backward segment (listed
    in descending order); each gap between consecutive prompts is filled
    forward from its left prompt, with the final segment extending to the
    last frame.  Every non-prompt frame lands in exactly one segment and
    prompt frames land in none.
    """
    prompts = list(prompt_frames)
    if not prompts:
        raise ValueError("at least one prompt frame required")
    if prompts != sorted(set(prompts)):
        raise ValueError(f"prompt frames must be sorted and unique, got {prompts}")
    if prompts[0] < 0 or prompts[-1] >= frame_count:
        raise ValueError(f"prompt frames {prompts} out of range [0, {frame_count})")

    segments = []
    if prompts[0] > 0:
        segments.append(
            PropagationSegment(
                prompts[0], Direction.BACKWARD, tuple(range(prompts[0] - 1, -1, -1))
            )
        )
    for i, p in enumerate(prompts):
        stop = prompts[i + 1] if i + 1 < len(prompts) else frame_count
        targets = tuple(range(p + 1, stop))
        if targets:
            segments.append(PropagationSegment(p, Direction.FORWARD, targets))
    return segments


def _predict_initial(
    video: VideoSequence,
    task: ExpressionTask,
    cfg: PipelineConfig,
    predictor: PredictorBackend,
) -> MaskTrack:
    plan = make_plan(
        cfg.resolved_strategy(),
        video.frame_count,
        cfg.frames,
        seed=derive_seed(cfg.seed, video.id, task.expression_id, "sampling"),
    )
    initial = predictor.predict(video, task, plan.indices)
    if set(initial.frames()) != set(plan.indices):
        raise BackendContractError(
            f"{video.id}/{task.expression_id}: predictor returned frames "
            f"{initial.frames()}, expected {sorted(plan.indices)}"
        )
    if initial.shape != (video.height, video.width):
        raise BackendContractError(
            f"{video.id}/{task.expression_id}: predictor mask shape {initial.shape} "
            f"!= video shape {(video.height, video.width)}"
        )
    return initial


def _fill_segments(
    video: VideoSequence,
    prompts: PromptSet,
    output: dict[int, np.ndarray],
    propagator: PropagatorBackend,
) -> None:
    for segment in partition_propagation(prompts.frames, video.frame_count):
        masks = propagator.propagate(video, prompts, segment)
        if set(masks) != set(segment.target_frames):
            raise BackendContractError(
                f"{video.id}: propagator returned frames {sorted(masks)}, "
                f"expected {sorted(segment.target_frames)}"
            )
        for frame, mask in masks.items():
            if mask.shape != (video.height, video.width):
                raise BackendContractError(
                    f"{video.id}: propagated mask for frame {frame} has shape "
                    f"{mask.shape}, expected {(video.height, video.width)}"
                )
            output[frame] = mask


def run_consistent(
    video: VideoSequence,
    task: ExpressionTask,
    cfg: PipelineConfig,
    predictor: PredictorBackend,
    propagator: PropagatorBackend,
) -> MaskTrack:
    """Two-stage inference: independent initial masks, then propagation.

    Prompted frames keep the predictor's mask verbatim in the output.
    """
    if cfg.mode is not Mode.CONSISTENT:
        raise ValueError(f"run_consistent requires consistent mode, got {cfg.mode}")
    initial = _predict_initial(video, task, cfg, predictor)
    prompts = select_prompts(initial, cfg.prompt_policy)
    output = {frame: mask for frame, mask in prompts.entries}
    _fill_segments(video, prompts, output, propagator)
    return MaskTrack(video.id, output)


def run_legacy(
    video: VideoSequence,
    task: ExpressionTask,
    cfg: PipelineConfig,
    predictor: PredictorBackend,
    propagator: PropagatorBackend,
) -> MaskTrack:
    """Streaming-style inference emulation.

    Only the earliest predicted mask prompts the propagator, which then
    streams through every other frame; the remaining sampled frames are
    re-predicted by propagation rather than pinned.
    """
    if cfg.mode is not Mode.LEGACY:
        raise ValueError(f"run_legacy requires legacy mode, got {cfg.mode}")
    initial = _predict_initial(video, task, cfg, predictor)
    prompts = select_prompts(initial, 1)
    output = {frame: mask for frame, mask in prompts.entries}
    _fill_segments(video, prompts, output, propagator)
    return MaskTrack(video.id, output)


def run_pipeline(
    video: VideoSequence,
    task: ExpressionTask,
    cfg: PipelineConfig,
    predictor: PredictorBackend,
    propagator: PropagatorBackend,
) -> MaskTrack:
    """Dispatch on cfg.mode; always returns a full track."""
    runner = run_consistent if cfg.mode is Mode.CONSISTENT else run_legacy
    track = runner(video, task, cfg, predictor, propagator)
    if not track.is_full(video.frame_count):
        raise BackendContractError(f"{video.id}: output track is not full")
    return track
