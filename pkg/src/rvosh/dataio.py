"""Dataset manifests, mask codecs, synthetic scenes, and result reports.

The canonical on-disk dataset layout is a JSON manifest (schema
"rvosh-manifest/1") referencing per-frame RGB images and per-frame indexed
label images, where pixel value 0 is background and positive values are
object labels.  Paths inside a manifest are relative to the manifest file.
An importer converts MeViS-style metadata into the canonical form.
"""

from __future__ import annotations

import csv
import io
import json
import os
import warnings
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np
from PIL import Image

from rvosh.core import ExpressionTask, MaskTrack, VideoSequence, ensure_mask
from rvosh.metrics import DatasetScore, ExpressionScore

MANIFEST_SCHEMA = "rvosh-manifest/1"

FRAME_NAME = "{:05d}.png"

# Indexed palette used for label/mask PNGs: background black, labels bright.
_PALETTE = [0, 0, 0, 255, 255, 255, 224, 64, 64, 64, 128, 224, 64, 200, 96, 224, 192, 64]


class ManifestError(ValueError):
    """Schema or consistency violation in a dataset manifest."""


# ---------------------------------------------------------------------------
# Run-length codec
# ---------------------------------------------------------------------------

def rle_encode(mask) -> str:
    """Encode a binary mask as canonical run-length text.

    The form is "height width c0 c1 c2 ..." where the counts alternate
    between background and foreground runs in row-major order, always
    starting with a background run (c0 may be 0, later counts may not).
    """
    m = ensure_mask(mask)
    h, w = m.shape
    flat = m.ravel()
    counts: list[int] = []
    boundaries = np.flatnonzero(np.diff(flat.view(np.uint8)))
    prev = 0
    if flat[0]:
        counts.append(0)
    for b in boundaries:
        counts.append(int(b) + 1 - prev)
        prev = int(b) + 1
    counts.append(flat.size - prev)
    return " ".join([str(h), str(w)] + [str(c) for c in counts])


def rle_decode(text: str) -> np.ndarray:
    """Decode canonical run-length text back into a binary mask."""
    tokens = text.split()
    if len(tokens) < 3:
        raise ValueError(f"run-length text too short: {text!r}")
    try:
        numbers = [int(t) for t in tokens]
    except ValueError as exc:
        raise ValueError(f"non-numeric token in run-length text: {exc}") from None
    h, w, counts = numbers[0], numbers[1], numbers[2:]
    if h < 1 or w < 1:
        raise ValueError(f"bad run-length header {h} {w}")
    if any(c < 0 for c in counts):
        raise ValueError("negative run count")
    if any(c == 0 for c in counts[1:]):
        raise ValueError("zero run count after the first")
    if sum(counts) != h * w:
        raise ValueError(f"run counts sum to {sum(counts)}, expected {h * w}")
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for c in counts:
        if value:
            flat[pos : pos + c] = True
        pos += c
        value = not value
    return flat.reshape(h, w)


# ---------------------------------------------------------------------------
# Manifest records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VideoRecord:
    id: str
    height: int
    width: int
    frames: tuple[str, ...]
    annotations: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ExpressionRecord:
    expression_id: str
    video_id: str
    text: str
    object_ids: tuple[int, ...]


@dataclass(frozen=True)
class DatasetManifest:
    dataset: str
    videos: tuple[VideoRecord, ...]
    expressions: tuple[ExpressionRecord, ...]
    root: Path = Path(".")

    def video(self, video_id: str) -> VideoRecord:
        for rec in self.videos:
            if rec.id == video_id:
                return rec
        raise ManifestError(f"unknown video id {video_id!r}")


def _manifest_payload(manifest: DatasetManifest) -> dict:
    return {
        "schema": MANIFEST_SCHEMA,
        "dataset": manifest.dataset,
        "videos": [
            {
                "id": v.id,
                "height": v.height,
                "width": v.width,
                "frames": list(v.frames),
                "annotations": list(v.annotations) if v.annotations else None,
            }
            for v in manifest.videos
        ],
        "expressions": [
            {
                "id": e.expression_id,
                "video_id": e.video_id,
                "text": e.text,
                "object_ids": list(e.object_ids),
            }
            for e in manifest.expressions
        ],
    }


def write_manifest(manifest: DatasetManifest, path: str | Path) -> Path:
    """Serialize a manifest to canonical JSON (stable field order)."""
    path = Path(path)
    path.write_text(json.dumps(_manifest_payload(manifest), indent=2) + "\n")
    return path


def read_manifest(path: str | Path) -> DatasetManifest:
    """Parse and validate a manifest file; paths stay relative to it."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: cannot read manifest: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("schema") != MANIFEST_SCHEMA:
        raise ManifestError(
            f"{path}: expected schema {MANIFEST_SCHEMA!r}, got {payload.get('schema')!r}"
        )
    videos = []
    for entry in payload.get("videos", []):
        frames = tuple(entry.get("frames") or ())
        if not frames:
            raise ManifestError(f"{path}: video {entry.get('id')!r} has no frames")
        annotations = entry.get("annotations")
        if annotations is not None:
            annotations = tuple(annotations)
            if len(annotations) != len(frames):
                raise ManifestError(
                    f"{path}: video {entry['id']!r} has {len(annotations)} annotations "
                    f"for {len(frames)} frames"
                )
        videos.append(
            VideoRecord(
                id=str(entry["id"]),
                height=int(entry["height"]),
                width=int(entry["width"]),
                frames=frames,
                annotations=annotations,
            )
        )
    video_ids = {v.id for v in videos}
    if len(video_ids) != len(videos):
        raise ManifestError(f"{path}: duplicate video ids")
    expressions = []
    for entry in payload.get("expressions", []):
        if entry["video_id"] not in video_ids:
            raise ManifestError(
                f"{path}: expression {entry.get('id')!r} references unknown video "
                f"{entry['video_id']!r}"
            )
        expressions.append(
            ExpressionRecord(
                expression_id=str(entry["id"]),
                video_id=str(entry["video_id"]),
                text=str(entry.get("text", "")),
                object_ids=tuple(int(i) for i in entry.get("object_ids", ())),
            )
        )
    return DatasetManifest(
        dataset=str(payload.get("dataset", "")),
        videos=tuple(videos),
        expressions=tuple(expressions),
        root=path.parent,
    )


# ---------------------------------------------------------------------------
# Materialized datasets
# ---------------------------------------------------------------------------

@dataclass
class LoadedDataset:
    """A manifest with videos, per-label tracks and ready-to-run tasks."""

    manifest: DatasetManifest
    videos: dict[str, VideoSequence]
    object_tracks: dict[str, dict[int, MaskTrack]]
    tasks: list[ExpressionTask]

    def video_for(self, task: ExpressionTask) -> VideoSequence:
        return self.videos[task.video_id]


def _read_label_image(path: Path, shape: tuple[int, int]) -> np.ndarray:
    try:
        with Image.open(path) as img:
            arr = np.asarray(img, dtype=np.int32)
    except OSError as exc:
        raise ManifestError(f"{path}: cannot read annotation: {exc}") from exc
    if arr.ndim != 2:
        raise ManifestError(f"{path}: annotation must be single-channel, got {arr.shape}")
    if arr.shape != shape:
        raise ManifestError(f"{path}: annotation shape {arr.shape} != video shape {shape}")
    return arr


def load_manifest(path: str | Path) -> LoadedDataset:
    """Read a manifest and materialize videos, label tracks and tasks.

    Ground truth for an expression is the union of its object labels in
    the video's annotation images.
    """
    manifest = read_manifest(path)
    root = manifest.root
    videos: dict[str, VideoSequence] = {}
    object_tracks: dict[str, dict[int, MaskTrack]] = {}

    for rec in manifest.videos:
        frame_paths = tuple(root / f for f in rec.frames)
        for p in frame_paths:
            if not p.exists():
                raise ManifestError(f"{path}: missing frame file {p}")
        videos[rec.id] = VideoSequence(rec.id, rec.height, rec.width, frame_paths)
        tracks: dict[int, dict[int, np.ndarray]] = {}
        if rec.annotations:
            shape = (rec.height, rec.width)
            for idx, name in enumerate(rec.annotations):
                labels = _read_label_image(root / name, shape)
                for label in np.unique(labels):
                    if label <= 0:
                        continue
                    tracks.setdefault(int(label), {})[idx] = labels == label
            # every labelled object gets a full track; absent frames are empty
            frame_count = len(rec.frames)
            object_tracks[rec.id] = {
                label: MaskTrack(
                    rec.id,
                    {
                        i: entries.get(i, np.zeros(shape, dtype=bool))
                        for i in range(frame_count)
                    },
                )
                for label, entries in sorted(tracks.items())
            }
        else:
            object_tracks[rec.id] = {}

    tasks = []
    for expr in manifest.expressions:
        video = videos[expr.video_id]
        labels = object_tracks[expr.video_id]
        ground_truth = None
        if labels:
            unknown = [i for i in expr.object_ids if i not in labels]
            if unknown:
                raise ManifestError(
                    f"{path}: expression {expr.expression_id!r} references labels "
                    f"{unknown} absent from the annotations of {expr.video_id!r}"
                )
            entries = {}
            for i in range(video.frame_count):
                union = np.zeros((video.height, video.width), dtype=bool)
                for label in expr.object_ids:
                    union |= labels[label].entries[i]
                entries[i] = union
            ground_truth = MaskTrack(expr.video_id, entries)
        tasks.append(
            ExpressionTask(
                video_id=expr.video_id,
                expression_id=expr.expression_id,
                text=expr.text,
                object_ids=frozenset(expr.object_ids),
                ground_truth=ground_truth,
            )
        )
    return LoadedDataset(manifest, videos, object_tracks, tasks)


def import_mevis(meta_path: str | Path, annotations_root: str | Path | None = None,
                 images_root: str | Path | None = None,
                 dataset_name: str = "mevis") -> DatasetManifest:
    """Convert MeViS-style metadata into a canonical manifest.

    Expects the usual layout: a meta expressions JSON mapping video names to
    expression records (each with "exp" text and "obj_id" label lists) and a
    per-video "frames" list, with frame images under <root>/JPEGImages and
    label images under <root>/Annotations unless overridden.
    """
    meta_path = Path(meta_path)
    base = meta_path.parent
    images_root = Path(images_root) if images_root else base / "JPEGImages"
    annotations_root = Path(annotations_root) if annotations_root else base / "Annotations"
    try:
        payload = json.loads(meta_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{meta_path}: cannot read metadata: {exc}") from exc
    video_map = payload.get("videos")
    if not isinstance(video_map, dict):
        raise ManifestError(f"{meta_path}: expected a top-level 'videos' mapping")
    if not video_map:
        warnings.warn(f"{meta_path}: metadata contains no videos", stacklevel=2)

    videos = []
    expressions = []
    for video_id in sorted(video_map):
        entry = video_map[video_id]
        frame_names = entry.get("frames")
        if not frame_names:
            raise ManifestError(f"{meta_path}: video {video_id!r} lists no frames")
        frames = []
        annotations = []
        for name in frame_names:
            frame = _find_frame_file(images_root / video_id, name)
            ann = _find_frame_file(annotations_root / video_id, name)
            frames.append(os.path.relpath(frame, base))
            annotations.append(os.path.relpath(ann, base))
        with Image.open(base / annotations[0]) as img:
            width, height = img.size
        videos.append(
            VideoRecord(video_id, height, width, tuple(frames), tuple(annotations))
        )
        for expr_id in sorted(entry.get("expressions", {})):
            record = entry["expressions"][expr_id]
            obj_ids = record.get("obj_id", record.get("anno_id", []))
            if isinstance(obj_ids, int):
                obj_ids = [obj_ids]
            expressions.append(
                ExpressionRecord(
                    expression_id=f"{video_id}/{expr_id}",
                    video_id=video_id,
                    text=str(record.get("exp", "")),
                    object_ids=tuple(int(i) for i in obj_ids),
                )
            )
    if video_map and not expressions:
        warnings.warn(f"{meta_path}: metadata contains no expressions", stacklevel=2)
    return DatasetManifest(dataset_name, tuple(videos), tuple(expressions), root=base)


def _find_frame_file(directory: Path, stem: str) -> Path:
    for suffix in (".png", ".jpg", ".jpeg"):
        candidate = directory / f"{stem}{suffix}"
        if candidate.exists():
            return candidate
    raise ManifestError(f"no frame file for {stem!r} under {directory}")


# ---------------------------------------------------------------------------
# Synthetic scenes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SceneObject:
    """A solid-colored moving shape with a visibility window.

    `size` is the disk radius or the rectangle half-side; `centers` gives
    the (row, col) center per frame; the object is painted only on frames
    within `visible` (inclusive bounds).
    """

    label: int
    shape: str  # "disk" | "rect"
    color: tuple[int, int, int]
    size: int
    centers: tuple[tuple[int, int], ...]
    visible: tuple[int, int]


@dataclass(frozen=True)
class SyntheticSceneSpec:
    video_id: str
    frame_count: int
    height: int
    width: int
    background: tuple[int, int, int] = (230, 230, 230)
    objects: tuple[SceneObject, ...] = ()
    color_margin: int = 32  # twice the default propagation color tolerance
    seed: int = 0


def _color_distance(a: tuple[int, int, int], b: tuple[int, int, int]) -> int:
    return max(abs(x - y) for x, y in zip(a, b))


def validate_scene(spec: SyntheticSceneSpec) -> None:
    if spec.frame_count < 1 or spec.height < 1 or spec.width < 1:
        raise ValueError("scene dimensions must be positive")
    colors = [spec.background] + [o.color for o in spec.objects]
    for i, a in enumerate(colors):
        for b in colors[i + 1 :]:
            if _color_distance(a, b) <= spec.color_margin:
                raise ValueError(
                    f"scene {spec.video_id}: colors {a} and {b} closer than "
                    f"margin {spec.color_margin}"
                )
    labels = [o.label for o in spec.objects]
    if len(set(labels)) != len(labels) or any(l <= 0 for l in labels):
        raise ValueError(f"scene {spec.video_id}: labels must be unique positive ints")
    for obj in spec.objects:
        if len(obj.centers) != spec.frame_count:
            raise ValueError(
                f"scene {spec.video_id}: object {obj.label} has "
                f"{len(obj.centers)} centers for {spec.frame_count} frames"
            )
        first, last = obj.visible
        if not (0 <= first <= last < spec.frame_count):
            raise ValueError(f"scene {spec.video_id}: bad visibility window {obj.visible}")
        for r, c in obj.centers:
            if not (obj.size <= r < spec.height - obj.size and obj.size <= c < spec.width - obj.size):
                raise ValueError(
                    f"scene {spec.video_id}: object {obj.label} leaves the frame "
                    f"at center ({r}, {c})"
                )


def _paint(shape: str, size: int, center: tuple[int, int], height: int, width: int) -> np.ndarray:
    r0, c0 = center
    rows, cols = np.ogrid[:height, :width]
    if shape == "disk":
        return (rows - r0) ** 2 + (cols - c0) ** 2 <= size**2
    if shape == "rect":
        return (np.abs(rows - r0) <= size) & (np.abs(cols - c0) <= size)
    raise ValueError(f"unknown shape {shape!r}")


def generate_scene(spec: SyntheticSceneSpec) -> tuple[VideoSequence, dict[int, MaskTrack]]:
    """Render a scene deterministically.

    Objects are painted in listing order so later objects occlude earlier
    ones; an object's ground-truth mask contains exactly its visible painted
    pixels and is empty outside its visibility window.
    """
    validate_scene(spec)
    frames = []
    tracks: dict[int, dict[int, np.ndarray]] = {o.label: {} for o in spec.objects}
    for i in range(spec.frame_count):
        frame = np.empty((spec.height, spec.width, 3), dtype=np.uint8)
        frame[:] = spec.background
        painted: list[int] = []
        for obj in spec.objects:
            if not (obj.visible[0] <= i <= obj.visible[1]):
                tracks[obj.label][i] = np.zeros((spec.height, spec.width), dtype=bool)
                continue
            mask = _paint(obj.shape, obj.size, obj.centers[i], spec.height, spec.width)
            for label in painted:
                tracks[label][i] &= ~mask
            frame[mask] = obj.color
            painted.append(obj.label)
            tracks[obj.label][i] = mask
        frames.append(frame)
    video = VideoSequence(spec.video_id, spec.height, spec.width, tuple(frames))
    return video, {label: MaskTrack(spec.video_id, entries) for label, entries in tracks.items()}


# ---------------------------------------------------------------------------
# Bundled presets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpressionSpec:
    expression_id: str
    text: str
    object_ids: tuple[int, ...]


@dataclass(frozen=True)
class SceneBundle:
    name: str
    spec: SyntheticSceneSpec
    expressions: tuple[ExpressionSpec, ...]


def _linear(start: tuple[int, int], step: tuple[int, int], count: int) -> tuple[tuple[int, int], ...]:
    return tuple((start[0] + k * step[0], start[1] + k * step[1]) for k in range(count))


def _static_bundle() -> SceneBundle:
    count = 10
    spec = SyntheticSceneSpec(
        video_id="static",
        frame_count=count,
        height=48,
        width=64,
        objects=(
            SceneObject(1, "disk", (200, 40, 40), 4, _linear((16, 20), (0, 0), count), (0, count - 1)),
            SceneObject(2, "rect", (40, 60, 200), 4, _linear((32, 44), (0, 0), count), (0, count - 1)),
        ),
    )
    return SceneBundle(
        "static",
        spec,
        (
            ExpressionSpec("static/0", "the round red object", (1,)),
            ExpressionSpec("static/1", "the blue square", (2,)),
        ),
    )


def _late_appearance_bundle() -> SceneBundle:
    # The disk is absent early, then drifts right and teleports between
    # frames 6 and 7, far enough that incremental tracking cannot follow.
    count = 12
    centers = (
        (24, 10), (24, 10),               # hidden (visibility starts at 2)
        (24, 10), (24, 12), (24, 14), (24, 16), (24, 18),
        (24, 44), (24, 46), (24, 48), (24, 50), (24, 52),
    )
    spec = SyntheticSceneSpec(
        video_id="late-appearance",
        frame_count=count,
        height=48,
        width=64,
        objects=(SceneObject(1, "disk", (200, 40, 40), 3, centers, (2, count - 1)),),
    )
    return SceneBundle(
        "late-appearance",
        spec,
        (ExpressionSpec("late-appearance/0", "the red disk that appears later", (1,)),),
    )


def _two_object_conflict_bundle() -> SceneBundle:
    count = 10
    spec = SyntheticSceneSpec(
        video_id="two-object-conflict",
        frame_count=count,
        height=48,
        width=64,
        objects=(
            SceneObject(1, "disk", (200, 40, 40), 3, _linear((14, 12), (0, 2), count), (0, count - 1)),
            SceneObject(2, "rect", (40, 60, 200), 5, _linear((34, 40), (0, 1), count), (0, count - 1)),
        ),
    )
    return SceneBundle(
        "two-object-conflict",
        spec,
        (ExpressionSpec("two-object-conflict/0", "the small red disk", (1,)),),
    )


PRESETS: dict[str, SceneBundle] = {
    b.name: b for b in (_static_bundle(), _late_appearance_bundle(), _two_object_conflict_bundle())
}


def synthesize_dataset(bundle: SceneBundle, out_dir: str | Path) -> Path:
    """Write a scene bundle to disk (frames, annotations, manifest)."""
    out_dir = Path(out_dir)
    video, tracks = generate_scene(bundle.spec)
    frames_dir = out_dir / "frames" / video.id
    ann_dir = out_dir / "annotations" / video.id
    frames_dir.mkdir(parents=True, exist_ok=True)
    ann_dir.mkdir(parents=True, exist_ok=True)
    frame_names = []
    ann_names = []
    for i in range(video.frame_count):
        name = FRAME_NAME.format(i)
        Image.fromarray(video.pixels(i)).save(frames_dir / name)
        labels = np.zeros((video.height, video.width), dtype=np.uint8)
        for label, track in tracks.items():
            labels[track.entries[i]] = label
        img = Image.fromarray(labels)
        img.putpalette(_PALETTE)
        img.save(ann_dir / name)
        frame_names.append(str((frames_dir / name).relative_to(out_dir)))
        ann_names.append(str((ann_dir / name).relative_to(out_dir)))
    manifest = DatasetManifest(
        dataset=bundle.name,
        videos=(
            VideoRecord(video.id, video.height, video.width, tuple(frame_names), tuple(ann_names)),
        ),
        expressions=tuple(
            ExpressionRecord(e.expression_id, video.id, e.text, e.object_ids)
            for e in bundle.expressions
        ),
        root=out_dir,
    )
    return write_manifest(manifest, out_dir / "manifest.json")


# ---------------------------------------------------------------------------
# Mask directories
# ---------------------------------------------------------------------------

def write_masks(track: MaskTrack, directory: str | Path) -> None:
    """Write one binary indexed PNG per frame (0 background, 1 foreground)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for index in track.frames():
        img = Image.fromarray(track.entries[index].astype(np.uint8))
        img.putpalette(_PALETTE)
        img.save(directory / FRAME_NAME.format(index))


def read_masks(directory: str | Path, video_id: str = "") -> MaskTrack:
    """Read a mask directory written by :func:`write_masks`."""
    directory = Path(directory)
    files = sorted(directory.glob("*.png"))
    if not files:
        raise ValueError(f"{directory}: no mask frames")
    entries = {}
    for path in files:
        with Image.open(path) as img:
            arr = np.asarray(img)
        if arr.ndim != 2:
            raise ValueError(f"{path}: mask image must be single-channel")
        if int(arr.max()) > 1:
            raise ValueError(f"{path}: non-binary annotation (max value {arr.max()})")
        entries[int(path.stem)] = arr.astype(bool)
    return MaskTrack(video_id or directory.name, entries)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def format_score(value: float) -> str:
    """Format a [0,1] score as x100 with one decimal, half away from zero."""
    scaled = Decimal(str(value)) * 100
    return str(scaled.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


REPORT_COLUMNS = ["dataset", "expressions", "J&F", "J", "F"]


def render_table(dataset: str, score: DatasetScore) -> str:
    header = "{:<24}{:>12}{:>8}{:>8}{:>8}".format(*REPORT_COLUMNS)
    row = "{:<24}{:>12}{:>8}{:>8}{:>8}".format(
        dataset,
        score.expression_count,
        format_score(score.jf),
        format_score(score.j),
        format_score(score.f),
    )
    return header + "\n" + row


def write_report(
    dataset: str,
    score: DatasetScore,
    expression_scores: list[ExpressionScore],
    path: str | Path,
    fmt: str = "structured",
) -> Path:
    """Write scores to disk as structured JSON or CSV.

    All J/F/J&F values are printed x100 with one decimal so report files
    line up with published tables.
    """
    path = Path(path)
    if fmt == "structured":
        payload = {
            "dataset": dataset,
            "expressions": score.expression_count,
            "J&F": format_score(score.jf),
            "J": format_score(score.j),
            "F": format_score(score.f),
            "per_expression": [
                {
                    "video_id": s.video_id,
                    "expression_id": s.expression_id,
                    "J&F": format_score(s.jf),
                    "J": format_score(s.mean_j),
                    "F": format_score(s.mean_f),
                    "frames": [
                        {"frame": fs.frame, "J": format_score(fs.j), "F": format_score(fs.f)}
                        for fs in s.frame_scores
                    ],
                }
                for s in expression_scores
            ],
        }
        path.write_text(json.dumps(payload, indent=2) + "\n")
    elif fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        writer.writerow(
            [dataset, score.expression_count, format_score(score.jf),
             format_score(score.j), format_score(score.f)]
        )
        path.write_text(buffer.getvalue())
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return path
