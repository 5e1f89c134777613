"""Stdio adapter session implementing wire protocol v1.

A session announces `{"ready": true, "protocol": 1}` and then answers each
request line with exactly one response line carrying the same id, in
request order.  Handlers are plain callables; to wrap a real model,
construct an :class:`AdapterSession` with your own `predict` and
`propagate` functions (signatures below) and call :meth:`serve`.

    predict(request)   -> list of (index, rle_text)
    propagate(request) -> list of (index, rle_text)

where `request` is the decoded request object.  The bundled handlers are
`empty_predict` (all-background masks), `copy_nearest_propagate` (each
target gets the nearest prompt mask, decoded and re-encoded through the
codec) and `oracle_predict` (ground truth from a dataset manifest).
"""

from __future__ import annotations

import json
import sys
from typing import Callable, TextIO

from pybridge.codec import rle_decode, rle_encode
from pybridge.dataset import ManifestOracle

PROTOCOL_VERSION = 1

Handler = Callable[[dict], list[tuple[int, str]]]

EXIT_STREAM_CORRUPTION = 3


def empty_predict(request: dict) -> list[tuple[int, str]]:
    """Echo handler: one all-background mask per requested index."""
    height = int(request["height"])
    width = int(request["width"])
    blank = rle_encode(height, width, [False] * (height * width))
    return [(int(i), blank) for i in request["indices"]]


def copy_nearest_propagate(request: dict) -> list[tuple[int, str]]:
    """Reference handler: each target frame gets the nearest prompt mask."""
    prompts = []
    for prompt in request["prompts"]:
        index = int(prompt["index"])
        height, width, bits = rle_decode(str(prompt["rle"]))
        if (height, width) != (int(request["height"]), int(request["width"])):
            raise ValueError(
                f"prompt {index} has shape {height}x{width}, "
                f"request says {request['height']}x{request['width']}"
            )
        prompts.append((index, height, width, bits))
    if not prompts:
        raise ValueError("propagate request carries no prompts")
    out = []
    for target in request["targets"]:
        target = int(target)
        index, height, width, bits = min(
            prompts, key=lambda p: (abs(target - p[0]), p[0])
        )
        out.append((target, rle_encode(height, width, bits)))
    return out


def oracle_predict(manifest_path: str) -> Handler:
    """Predict handler answering from ground-truth annotations."""
    oracle = ManifestOracle(manifest_path)

    def handler(request: dict) -> list[tuple[int, str]]:
        masks = oracle.masks_for(
            [str(p) for p in request["frames"]],
            str(request.get("expression", "")),
            [int(i) for i in request["indices"]],
        )
        return [(index, rle_encode(h, w, bits)) for index, h, w, bits in masks]

    return handler


class AdapterSession:
    """One request/response loop over a pair of text streams."""

    def __init__(self, predict: Handler | None = None, propagate: Handler | None = None):
        self.handlers: dict[str, Handler] = {
            "predict": predict or empty_predict,
            "propagate": propagate or copy_nearest_propagate,
        }

    def _respond(self, stream: TextIO, payload: dict) -> None:
        stream.write(json.dumps(payload, separators=(",", ":")) + "\n")
        stream.flush()

    def _handle_line(self, line: str, stdout: TextIO) -> None:
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            self._respond(stdout, {"id": None, "error": f"unparseable request: {exc}"})
            return
        if not isinstance(request, dict):
            self._respond(stdout, {"id": None, "error": "request is not an object"})
            return
        request_id = request.get("id")
        kind = request.get("kind")
        handler = self.handlers.get(kind)
        if handler is None:
            self._respond(stdout, {"id": request_id, "error": f"unknown kind {kind!r}"})
            return
        try:
            masks = handler(request)
        except Exception as exc:  # one bad request must not kill the session
            self._respond(stdout, {"id": request_id, "error": f"{type(exc).__name__}: {exc}"})
            return
        self._respond(
            stdout,
            {"id": request_id, "masks": [{"index": i, "rle": text} for i, text in masks]},
        )

    def serve(self, stdin: TextIO | None = None, stdout: TextIO | None = None) -> int:
        stdin = stdin if stdin is not None else sys.stdin
        stdout = stdout if stdout is not None else sys.stdout
        self._respond(stdout, {"ready": True, "protocol": PROTOCOL_VERSION})
        try:
            for line in stdin:
                if line.strip():
                    self._handle_line(line, stdout)
        except (UnicodeDecodeError, OSError) as exc:
            print(f"pybridge: stream corruption: {exc}", file=sys.stderr)
            return EXIT_STREAM_CORRUPTION
        return 0
