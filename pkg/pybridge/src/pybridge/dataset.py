"""Minimal reader for the harness dataset layout (oracle handlers).

Understands just enough of the "rvosh-manifest/1" schema to answer
predict requests from ground truth: videos with frame and annotation
image lists, and expressions with object-label sets.  Annotation images
are single-channel indexed PNGs whose pixel values are object labels.
"""

from __future__ import annotations

import json
from pathlib import Path

from PIL import Image

MANIFEST_SCHEMA = "rvosh-manifest/1"


class OracleError(ValueError):
    """The manifest cannot answer a request."""


class ManifestOracle:
    def __init__(self, manifest_path: str | Path):
        path = Path(manifest_path)
        payload = json.loads(path.read_text())
        if payload.get("schema") != MANIFEST_SCHEMA:
            raise OracleError(f"{path}: unsupported schema {payload.get('schema')!r}")
        self.root = path.parent
        self.videos = {v["id"]: v for v in payload.get("videos", [])}
        self.expressions = payload.get("expressions", [])
        # resolved frame path -> (video id, frame position)
        self._frame_index: dict[str, tuple[str, int]] = {}
        for video in self.videos.values():
            for position, name in enumerate(video["frames"]):
                resolved = str((self.root / name).resolve())
                self._frame_index[resolved] = (video["id"], position)

    def _video_for_frames(self, frame_paths: list[str]) -> str:
        ids = set()
        for frame in frame_paths:
            entry = self._frame_index.get(str(Path(frame).resolve()))
            if entry is None:
                raise OracleError(f"frame {frame!r} is not part of the manifest")
            ids.add(entry[0])
        if len(ids) != 1:
            raise OracleError(f"frames span {len(ids)} videos")
        return ids.pop()

    def _expression_for(self, video_id: str, text: str) -> dict:
        matches = [
            e for e in self.expressions
            if e["video_id"] == video_id and e.get("text", "") == text
        ]
        if len(matches) != 1:
            raise OracleError(
                f"{len(matches)} expressions match text {text!r} in video {video_id!r}"
            )
        return matches[0]

    def masks_for(self, frame_paths: list[str], text: str,
                  indices: list[int]) -> list[tuple[int, int, int, list[bool]]]:
        """Ground-truth masks (index, height, width, bits) for a predict request."""
        video_id = self._video_for_frames(frame_paths)
        video = self.videos[video_id]
        annotations = video.get("annotations")
        if not annotations:
            raise OracleError(f"video {video_id!r} has no annotations")
        labels = set(self._expression_for(video_id, text).get("object_ids", []))
        out = []
        for index in indices:
            if not 0 <= index < len(annotations):
                raise OracleError(f"frame index {index} out of range")
            with Image.open(self.root / annotations[index]) as img:
                if img.mode not in ("P", "L"):
                    raise OracleError(f"{annotations[index]}: not an indexed label image")
                width, height = img.size
                bits = [value in labels for value in img.tobytes()]
            out.append((index, height, width, bits))
        return out
