"""Drive a run through the out-of-process protocol adapter.

The harness talks to backends over newline-delimited JSON on the worker's
stdin/stdout.  This demo synthesizes the "static" dataset, then runs the
pipeline twice: once with the in-process toy backends and once through the
reference adapter in oracle mode, and shows that the scores agree.

Requires the adapter package:  pip install -e pybridge
Run with:  python demos/external_backend.py
"""

import json
import sys
import tempfile
from pathlib import Path

from rvosh.cli import main

with tempfile.TemporaryDirectory() as scratch:
    scratch = Path(scratch)
    data = scratch / "data"
    assert main(["synth", "static", str(data)]) == 0
    manifest = data / "manifest.json"

    print("toy backends:")
    assert main(["run", str(manifest), str(scratch / "toy"), "--seed", "1"]) == 0
    assert main(["eval", str(scratch / "toy"), str(manifest)]) == 0

    adapter = f"{sys.executable} -m pybridge --oracle {manifest}"
    print(f"\nexternal adapter ({adapter}):")
    assert main(["run", str(manifest), str(scratch / "bridge"), "--seed", "1",
                 "--backend", "external", "--backend-cmd", adapter]) == 0
    assert main(["eval", str(scratch / "bridge"), str(manifest)]) == 0

    toy = json.loads((scratch / "toy" / "report.json").read_text())
    bridge = json.loads((scratch / "bridge" / "report.json").read_text())
    print(f"\ntoy J&F = {toy['J&F']}, adapter J&F = {bridge['J&F']}, "
          f"reports identical: {toy == bridge}")
