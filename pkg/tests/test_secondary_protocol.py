"""Conformance tests for the reference protocol adapter.

These exercise the separately-packaged adapter across a real process
boundary.  They skip when the adapter is not installed, so the primary
suite stands on its own.
"""

from __future__ import annotations

import importlib.util
import json
import subprocess
import sys

import numpy as np
import pytest

from helpers import random_mask
from rvosh import dataio
from rvosh.backends import ExternalPredictor, ExternalPropagator, WorkerClient
from rvosh.cli import EXIT_OK, main
from rvosh.pipeline import Direction, PromptSet, PropagationSegment

pytestmark = pytest.mark.skipif(
    importlib.util.find_spec("pybridge") is None,
    reason="reference adapter package not installed",
)

ADAPTER_CMD = [sys.executable, "-m", "pybridge"]


def adapter_cmd(manifest=None) -> list[str]:
    cmd = list(ADAPTER_CMD)
    if manifest is not None:
        cmd += ["--oracle", str(manifest)]
    return cmd


def test_handshake_and_scripted_session(preset_datasets):
    dataset = dataio.load_manifest(preset_datasets["static"])
    video = dataset.videos["static"]
    task = dataset.tasks[0]
    with WorkerClient(adapter_cmd()) as client:
        predicted = ExternalPredictor(client).predict(video, task, (0, 4, 9))
        assert predicted.frames() == [0, 4, 9]
        assert not any(m.any() for m in predicted.entries.values())

        mask = task.ground_truth.entries[0]
        prompts = PromptSet(((0, mask),))
        segment = PropagationSegment(0, Direction.FORWARD, (1, 2))
        propagated = ExternalPropagator(client).propagate(video, prompts, segment)
        assert sorted(propagated) == [1, 2]
        for frame in (1, 2):
            assert np.array_equal(propagated[frame], mask)


def test_cross_implementation_rle_round_trip(preset_datasets, rng):
    # harness-encoded masks travel to the adapter, get decoded and
    # re-encoded there, and must come back byte-identical
    dataset = dataio.load_manifest(preset_datasets["static"])
    video = dataset.videos["static"]
    with WorkerClient(adapter_cmd()) as client:
        for _ in range(25):
            mask = random_mask(rng, video.height, video.width, float(rng.uniform(0, 1)))
            encoded = dataio.rle_encode(mask)
            response = client.request(
                {
                    "kind": "propagate",
                    "frames": video.frame_locators(),
                    "prompts": [{"index": 0, "rle": encoded}],
                    "targets": [1],
                    "direction": "fwd",
                    "height": video.height,
                    "width": video.width,
                }
            )
            assert response["masks"][0]["rle"] == encoded


def test_adapter_golden_suite_matches_primary_codec(rng):
    # same fixture-generation recipe as the adapter's bundled golden files
    from pybridge.codec import rle_decode as bridge_decode
    from pybridge.codec import rle_encode as bridge_encode

    for _ in range(50):
        h = int(rng.integers(1, 65))
        w = int(rng.integers(1, 65))
        mask = random_mask(rng, h, w, float(rng.uniform(0, 1)))
        primary = dataio.rle_encode(mask)
        height, width, bits = bridge_decode(primary)
        assert (height, width) == (h, w)
        assert bridge_encode(height, width, bits) == primary


def test_adapter_process_responses_are_deterministic(preset_datasets):
    dataset = dataio.load_manifest(preset_datasets["static"])
    video = dataset.videos["static"]
    mask = dataset.tasks[0].ground_truth.entries[0]
    request = {
        "id": 0,
        "kind": "propagate",
        "frames": video.frame_locators(),
        "prompts": [{"index": 0, "rle": dataio.rle_encode(mask)}],
        "targets": [1, 2, 3],
        "direction": "fwd",
        "height": video.height,
        "width": video.width,
    }
    raw = json.dumps(request) + "\n"
    outputs = []
    for _ in range(2):
        proc = subprocess.run(
            adapter_cmd(), input=raw.encode(), capture_output=True, timeout=60
        )
        assert proc.returncode == 0
        outputs.append(proc.stdout)
    assert outputs[0] == outputs[1]


def test_full_run_through_adapter_matches_toy_backend(preset_datasets, tmp_path):
    manifest = preset_datasets["static"]
    toy_out = tmp_path / "toy"
    bridge_out = tmp_path / "bridge"

    assert main(["run", str(manifest), str(toy_out), "--seed", "1"]) == EXIT_OK
    cmd = " ".join(adapter_cmd(manifest))
    assert main(["run", str(manifest), str(bridge_out), "--seed", "1",
                 "--backend", "external", "--backend-cmd", cmd]) == EXIT_OK

    assert main(["eval", str(toy_out), str(manifest)]) == EXIT_OK
    assert main(["eval", str(bridge_out), str(manifest)]) == EXIT_OK

    toy_report = json.loads((toy_out / "report.json").read_text())
    bridge_report = json.loads((bridge_out / "report.json").read_text())
    assert bridge_report == toy_report
    assert bridge_report["J&F"] == "100.0"

    # identical masks, not merely identical scores
    toy_masks = sorted(p.relative_to(toy_out) for p in (toy_out / "masks").rglob("*.png"))
    for rel in toy_masks:
        assert (toy_out / rel).read_bytes() == (bridge_out / rel).read_bytes()


def test_secondary_acceptance_summary(preset_datasets, tmp_path, rng):
    # aggregate criterion line for the adapter component
    test_handshake_and_scripted_session(preset_datasets)
    test_cross_implementation_rle_round_trip(preset_datasets, rng)
    test_full_run_through_adapter_matches_toy_backend(preset_datasets, tmp_path)
    print("PASS  adapter handshake, scripted session, golden codec, full run parity")
