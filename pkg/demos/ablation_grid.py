"""Sweep a mode x sampling grid with the CLI and print the ablation table.

Everything runs against the synthetic "late-appearance" dataset in a
temporary directory; the same flow works on any manifest.

Run with:  python demos/ablation_grid.py
"""

import tempfile
from pathlib import Path

from rvosh.cli import main

with tempfile.TemporaryDirectory() as scratch:
    scratch = Path(scratch)
    data = scratch / "data"
    assert main(["synth", "late-appearance", str(data)]) == 0

    print("configuration grid on the late-appearance dataset:\n")
    code = main([
        "compare", str(data / "manifest.json"), str(scratch / "grid"),
        "--modes", "legacy,consistent",
        "--samplings", "first,uniform",
        "--frames", "5",
        "--seed", "3",
    ])
    assert code == 0

    print("\nper-frame-count sweep (consistent + uniform):\n")
    code = main([
        "compare", str(data / "manifest.json"), str(scratch / "frames"),
        "--modes", "consistent",
        "--samplings", "uniform",
        "--frames", "3,5,8",
        "--seed", "3",
    ])
    assert code == 0
