"""Frame index selection for bounded-context video predictors.

Four strategies are provided: the first T frames (the historical inference
default), evenly spaced frames across the whole video, evenly spaced frames
with a random start offset (a training-style variant), and uniform random
selection without replacement.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from rvosh.core import Seed, derive_rng


class Strategy(str, Enum):
    FIRST = "first"
    UNIFORM = "uniform"
    UNIFORM_OFFSET = "uniform-offset"
    RANDOM = "random"


@dataclass(frozen=True)
class SamplingPlan:
    """The selected frame indices and the strategy that produced them."""

    strategy: Strategy
    total_frames: int
    requested: int
    indices: tuple[int, ...]
    seed: Seed | None = None


def _check_counts(total_frames: int, requested: int) -> None:
    if total_frames < 1:
        raise ValueError(f"total_frames must be >= 1, got {total_frames}")
    if requested < 1:
        raise ValueError(f"requested frame count must be >= 1, got {requested}")


def plan_first(total_frames: int, requested: int) -> SamplingPlan:
    """Take the first min(requested, total_frames) frames."""
    _check_counts(total_frames, requested)
    count = min(requested, total_frames)
    return SamplingPlan(Strategy.FIRST, total_frames, requested, tuple(range(count)))


def plan_uniform(total_frames: int, requested: int) -> SamplingPlan:
    """Evenly spaced frames including both endpoints.

    Index k is floor(k * (total_frames - 1) / (requested - 1)); with
    requested <= total_frames the indices are strictly increasing, and for
    requested >= 2 the plan always contains frame 0 and the last frame.
    """
    _check_counts(total_frames, requested)
    if requested >= total_frames:
        indices = tuple(range(total_frames))
    elif requested == 1:
        indices = (0,)
    else:
        span = total_frames - 1
        indices = tuple(k * span // (requested - 1) for k in range(requested))
    return SamplingPlan(Strategy.UNIFORM, total_frames, requested, indices)


def plan_uniform_offset(total_frames: int, requested: int, seed: Seed) -> SamplingPlan:
    """Evenly strided frames with a seeded random start offset.

    Stride is floor(total_frames / requested); the offset is drawn uniformly
    from [0, stride), which keeps every index within range without clamping.
    Unlike the other strategies this one rejects requested > total_frames.
    """
    _check_counts(total_frames, requested)
    if requested > total_frames:
        raise ValueError(
            f"requested {requested} exceeds total_frames {total_frames} "
            "for offset sampling"
        )
    stride = total_frames // requested
    if stride <= 1:
        offset = 0
    else:
        rng = derive_rng(seed, "sampling", Strategy.UNIFORM_OFFSET.value)
        offset = int(rng.integers(stride))
    indices = tuple(offset + k * stride for k in range(requested))
    return SamplingPlan(Strategy.UNIFORM_OFFSET, total_frames, requested, indices, seed)


def plan_random(total_frames: int, requested: int, seed: Seed) -> SamplingPlan:
    """min(requested, total_frames) distinct seeded indices, sorted."""
    _check_counts(total_frames, requested)
    count = min(requested, total_frames)
    rng = derive_rng(seed, "sampling", Strategy.RANDOM.value)
    picks = rng.choice(total_frames, size=count, replace=False)
    return SamplingPlan(
        Strategy.RANDOM, total_frames, requested, tuple(sorted(int(i) for i in picks)), seed
    )


def make_plan(
    strategy: Strategy | str,
    total_frames: int,
    requested: int,
    seed: Seed | None = None,
) -> SamplingPlan:
    """Dispatch to the named strategy; seeded strategies require a seed."""
    strategy = Strategy(strategy)
    if strategy is Strategy.FIRST:
        return plan_first(total_frames, requested)
    if strategy is Strategy.UNIFORM:
        return plan_uniform(total_frames, requested)
    if seed is None:
        raise ValueError(f"strategy {strategy.value} requires a seed")
    if strategy is Strategy.UNIFORM_OFFSET:
        return plan_uniform_offset(total_frames, requested, seed)
    return plan_random(total_frames, requested, seed)
