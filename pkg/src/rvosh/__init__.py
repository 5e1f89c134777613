"""Referring video object segmentation harness.

A desk-scale inference and evaluation toolkit for text-referred video
segmentation: frame sampling strategies, a two-stage pipeline (per-frame
initial masks followed by mask propagation), J&F scoring, deterministic toy
backends, and a line protocol for attaching external neural backends.
"""

from rvosh.core import ExpressionTask, MaskTrack, VideoSequence, derive_rng, derive_seed
from rvosh.metrics import boundary_f, jaccard, jf_mean, score_dataset, score_expression
from rvosh.pipeline import Mode, PipelineConfig, run_consistent, run_legacy, run_pipeline
from rvosh.sampling import Strategy, make_plan, plan_first, plan_random, plan_uniform, plan_uniform_offset

__version__ = "0.1.0"

__all__ = [
    "ExpressionTask",
    "MaskTrack",
    "Mode",
    "PipelineConfig",
    "Strategy",
    "VideoSequence",
    "boundary_f",
    "derive_rng",
    "derive_seed",
    "jaccard",
    "jf_mean",
    "make_plan",
    "plan_first",
    "plan_random",
    "plan_uniform",
    "plan_uniform_offset",
    "run_consistent",
    "run_legacy",
    "run_pipeline",
    "score_dataset",
    "score_expression",
]
