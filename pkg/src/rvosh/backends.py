"""Concrete predictor/propagator backends.

Toy backends give fully deterministic, desk-scale behaviour: the predictor
reads masks from a ground-truth oracle (optionally corrupted by seeded
swap/dilation noise), and the propagator tracks objects by mean-color
matching against a small memory bank of reference masks.  External
backends talk to a worker subprocess over a newline-delimited JSON
protocol and are the attachment point for real neural models.
"""

from __future__ import annotations

import json
import os
import select
import shlex
import subprocess
import time
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import ndimage

from rvosh.core import ExpressionTask, MaskTrack, Seed, VideoSequence, derive_rng
from rvosh.dataio import rle_decode, rle_encode
from rvosh.pipeline import PromptSet, PropagationSegment

PROTOCOL_VERSION = 1

DEFAULT_COLOR_TOLERANCE = 16
DEFAULT_MEMORY_CAPACITY = 4
DEFAULT_PROMPT_REACH = 8


class BackendError(RuntimeError):
    """Base class for backend failures."""


class ProtocolViolation(BackendError):
    """The worker sent something the wire protocol does not allow."""


class BackendTimeout(BackendError):
    """The worker did not answer within the deadline."""


class BackendCrash(BackendError):
    """The worker process exited or closed its pipes unexpectedly."""


class MaskShapeMismatch(BackendError):
    """A decoded mask does not match the requested dimensions."""


class WorkerFailure(BackendError):
    """The worker answered with an explicit error object."""


# ---------------------------------------------------------------------------
# Morphology helpers
# ---------------------------------------------------------------------------

def chebyshev_dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Grow a mask by a square (Chebyshev) ball of the given radius."""
    if radius <= 0:
        return mask.copy()
    return ndimage.maximum_filter(mask, size=2 * radius + 1, mode="constant", cval=False)


def chebyshev_erode(mask: np.ndarray, radius: int) -> np.ndarray:
    """Shrink a mask by a square ball; pixels outside the image count as background."""
    if radius <= 0:
        return mask.copy()
    return ndimage.minimum_filter(mask, size=2 * radius + 1, mode="constant", cval=False)


# ---------------------------------------------------------------------------
# Toy predictor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ToyNoiseConfig:
    """Seeded corruption of oracle masks.

    With `swap_probability` (decided independently per frame) the target
    mask is replaced by the largest-area other object in the scene; the
    result is then dilated (positive radius) or eroded (negative).
    """

    swap_probability: float = 0.0
    dilation_radius: int = 0
    seed: Seed = 0

    def __post_init__(self):
        if not 0.0 <= self.swap_probability <= 1.0:
            raise ValueError(f"swap_probability out of range: {self.swap_probability}")


class ToyPredictor:
    """Oracle-backed per-frame predictor.

    `scenes` maps video id to the per-label ground-truth tracks of every
    object in that video; the predicted mask for a task is the union of
    its labels, corrupted per the noise config.  Each frame is produced
    independently and deterministically from (noise seed, ids, frame).
    """

    def __init__(
        self,
        scenes: Mapping[str, Mapping[int, MaskTrack]],
        noise: ToyNoiseConfig | None = None,
    ):
        self.scenes = scenes
        self.noise = noise or ToyNoiseConfig()

    def _target_mask(self, tracks: Mapping[int, MaskTrack], task: ExpressionTask,
                     frame: int, shape: tuple[int, int]) -> np.ndarray:
        union = np.zeros(shape, dtype=bool)
        for label in sorted(task.object_ids):
            track = tracks.get(label)
            if track is None or frame not in track.entries:
                raise ValueError(
                    f"oracle for {task.video_id} lacks label {label} at frame {frame}"
                )
            union |= track.entries[frame]
        return union

    def _distractor_mask(self, tracks: Mapping[int, MaskTrack], task: ExpressionTask,
                         frame: int) -> np.ndarray | None:
        best = None
        best_area = -1
        for label in sorted(tracks):
            if label in task.object_ids:
                continue
            mask = tracks[label].entries[frame]
            area = int(np.count_nonzero(mask))
            if area > best_area:
                best, best_area = mask, area
        return best

    def predict(
        self, video: VideoSequence, task: ExpressionTask, indices: Sequence[int]
    ) -> MaskTrack:
        tracks = self.scenes.get(video.id)
        if not tracks:
            raise ValueError(f"no oracle tracks for video {video.id!r}")
        shape = (video.height, video.width)
        noise = self.noise
        entries = {}
        for frame in indices:
            mask = self._target_mask(tracks, task, frame, shape)
            if noise.swap_probability > 0:
                rng = derive_rng(
                    noise.seed, "toy-predict", video.id, task.expression_id, str(frame)
                )
                if rng.random() < noise.swap_probability:
                    distractor = self._distractor_mask(tracks, task, frame)
                    if distractor is not None:
                        mask = distractor
            if noise.dilation_radius > 0:
                mask = chebyshev_dilate(mask, noise.dilation_radius)
            elif noise.dilation_radius < 0:
                mask = chebyshev_erode(mask, -noise.dilation_radius)
            entries[frame] = mask
        return MaskTrack(video.id, entries)


# ---------------------------------------------------------------------------
# Toy propagator
# ---------------------------------------------------------------------------

class MemoryBank:
    """Prompt masks plus a bounded FIFO of tracked masks.

    Prompts are never evicted; tracked entries are capped at `capacity`.
    `nearest` picks the entry closest in frame distance, breaking ties
    prompt-before-tracked and then by lower frame index.
    """

    def __init__(self, prompts: Sequence[tuple[int, np.ndarray]], capacity: int):
        if capacity < 0:
            raise ValueError(f"capacity must be >= 0, got {capacity}")
        self.prompts = list(prompts)
        self.tracked: deque[tuple[int, np.ndarray]] = deque(maxlen=capacity)

    def record(self, frame: int, mask: np.ndarray) -> None:
        self.tracked.append((frame, mask))

    def nearest(self, frame: int) -> tuple[int, np.ndarray]:
        if not self.prompts and not self.tracked:
            raise ValueError("memory bank is empty")
        best_key = None
        best_entry = None
        for rank, entries in enumerate((self.prompts, self.tracked)):
            for entry_frame, mask in entries:
                key = (abs(frame - entry_frame), rank, entry_frame)
                if best_key is None or key < best_key:
                    best_key = key
                    best_entry = (entry_frame, mask)
        return best_entry


class ToyPropagator:
    """Mean-color matcher with a short reference memory.

    For each target frame the reference is the nearest bank entry; pixels
    within `color_tolerance` (max-channel distance) of the reference
    object's mean color form candidate components, and components that
    touch the Chebyshev-dilated reference mask (radius `reach`) are kept.
    """

    def __init__(
        self,
        color_tolerance: float = DEFAULT_COLOR_TOLERANCE,
        memory_capacity: int = DEFAULT_MEMORY_CAPACITY,
        reach: int = DEFAULT_PROMPT_REACH,
    ):
        self.color_tolerance = color_tolerance
        self.memory_capacity = memory_capacity
        self.reach = reach

    def _match(self, video: VideoSequence, frame: int,
               ref_frame: int, ref_mask: np.ndarray) -> np.ndarray:
        shape = (video.height, video.width)
        if not ref_mask.any():
            return np.zeros(shape, dtype=bool)
        reference_pixels = video.pixels(ref_frame).astype(np.float64)
        color = reference_pixels[ref_mask].mean(axis=0)
        pixels = video.pixels(frame).astype(np.float64)
        candidates = np.abs(pixels - color).max(axis=2) <= self.color_tolerance
        if not candidates.any():
            return np.zeros(shape, dtype=bool)
        labels, _ = ndimage.label(candidates)  # 4-connected by default
        allowed = chebyshev_dilate(ref_mask, self.reach)
        hit = np.unique(labels[candidates & allowed])
        hit = hit[hit > 0]
        if hit.size == 0:
            return np.zeros(shape, dtype=bool)
        return np.isin(labels, hit)

    def propagate(
        self, video: VideoSequence, prompts: PromptSet, segment: PropagationSegment
    ) -> dict[int, np.ndarray]:
        bank = MemoryBank(prompts.entries, self.memory_capacity)
        output = {}
        for frame in segment.target_frames:
            ref_frame, ref_mask = bank.nearest(frame)
            mask = self._match(video, frame, ref_frame, ref_mask)
            bank.record(frame, mask)
            output[frame] = mask
        return output


# ---------------------------------------------------------------------------
# External worker protocol
# ---------------------------------------------------------------------------

class WorkerClient:
    """One worker subprocess speaking newline-delimited JSON over stdio.

    The worker must announce `{"ready": true, "protocol": 1}` on startup
    and answer every request with exactly one object echoing its id.
    Requests are serialized: one in flight at a time.
    """

    def __init__(self, cmd: str | Sequence[str], timeout: float = 60.0):
        argv = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        except OSError as exc:
            raise BackendCrash(f"cannot start worker {argv!r}: {exc}") from exc
        self._timeout = timeout
        self._buffer = b""
        self._next_id = 0
        hello = self._read_message()
        if not hello.get("ready") or hello.get("protocol") != PROTOCOL_VERSION:
            self.close()
            raise ProtocolViolation(
                f"bad handshake {hello!r}: need ready=true, protocol={PROTOCOL_VERSION}"
            )

    def _read_line(self) -> bytes:
        deadline = time.monotonic() + self._timeout
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BackendTimeout(f"no response within {self._timeout}s")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                raise BackendTimeout(f"no response within {self._timeout}s")
            chunk = os.read(fd, 65536)
            if not chunk:
                raise BackendCrash(
                    f"worker closed its output (exit code {self._proc.poll()})"
                )
            self._buffer += chunk
        line, _, self._buffer = self._buffer.partition(b"\n")
        return line

    def _read_message(self) -> dict:
        line = self._read_line()
        try:
            message = json.loads(line)
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolViolation(f"unparseable worker line {line[:200]!r}: {exc}") from exc
        if not isinstance(message, dict):
            raise ProtocolViolation(f"worker line is not an object: {line[:200]!r}")
        return message

    def request(self, payload: dict) -> dict:
        request_id = self._next_id
        self._next_id += 1
        line = json.dumps({"id": request_id, **payload}, separators=(",", ":")) + "\n"
        try:
            self._proc.stdin.write(line.encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BackendCrash(f"worker pipe closed: {exc}") from exc
        message = self._read_message()
        if message.get("id") != request_id:
            raise ProtocolViolation(
                f"response id {message.get('id')!r} does not echo request {request_id}"
            )
        if message.get("error") is not None:
            raise WorkerFailure(str(message["error"]))
        return message

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        if self._proc.stdout:
            self._proc.stdout.close()

    def __enter__(self) -> "WorkerClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def _frame_locators(video: VideoSequence) -> list[str]:
    paths = video.frame_locators()
    if paths is None:
        raise ValueError(
            f"video {video.id!r} holds in-memory frames; external backends need files"
        )
    return paths


def _decode_mask_list(
    payload, expected: set[int], shape: tuple[int, int]
) -> dict[int, np.ndarray]:
    if not isinstance(payload, list):
        raise ProtocolViolation(f"masks field must be a list, got {type(payload).__name__}")
    masks: dict[int, np.ndarray] = {}
    for item in payload:
        if not isinstance(item, dict) or "index" not in item or "rle" not in item:
            raise ProtocolViolation(f"bad mask entry {item!r}")
        index = int(item["index"])
        if index in masks:
            raise ProtocolViolation(f"duplicate mask for frame {index}")
        try:
            mask = rle_decode(str(item["rle"]))
        except ValueError as exc:
            raise ProtocolViolation(f"bad mask encoding for frame {index}: {exc}") from exc
        if mask.shape != shape:
            raise MaskShapeMismatch(
                f"frame {index}: mask shape {mask.shape}, expected {shape}"
            )
        masks[index] = mask
    if set(masks) != expected:
        raise ProtocolViolation(
            f"response frames {sorted(masks)} do not match request {sorted(expected)}"
        )
    return masks


class ExternalPredictor:
    """Predictor that forwards requests to a protocol worker."""

    def __init__(self, client: WorkerClient):
        self.client = client

    def predict(
        self, video: VideoSequence, task: ExpressionTask, indices: Sequence[int]
    ) -> MaskTrack:
        response = self.client.request(
            {
                "kind": "predict",
                "expression": task.text,
                "frames": _frame_locators(video),
                "indices": [int(i) for i in indices],
                "height": video.height,
                "width": video.width,
            }
        )
        masks = _decode_mask_list(
            response.get("masks"), set(int(i) for i in indices), (video.height, video.width)
        )
        return MaskTrack(video.id, masks)


class ExternalPropagator:
    """Propagator that forwards segment requests to a protocol worker."""

    def __init__(self, client: WorkerClient):
        self.client = client

    def propagate(
        self, video: VideoSequence, prompts: PromptSet, segment: PropagationSegment
    ) -> dict[int, np.ndarray]:
        response = self.client.request(
            {
                "kind": "propagate",
                "frames": _frame_locators(video),
                "prompts": [
                    {"index": frame, "rle": rle_encode(mask)}
                    for frame, mask in prompts.entries
                ],
                "targets": [int(i) for i in segment.target_frames],
                "direction": segment.direction.value,
                "height": video.height,
                "width": video.width,
            }
        )
        return _decode_mask_list(
            response.get("masks"), set(segment.target_frames), (video.height, video.width)
        )
