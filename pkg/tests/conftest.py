from __future__ import annotations

import numpy as np
import pytest

from rvosh import dataio


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def preset_datasets(tmp_path_factory):
    """All bundled presets written to disk once per session."""
    root = tmp_path_factory.mktemp("presets")
    paths = {}
    for name, bundle in dataio.PRESETS.items():
        paths[name] = dataio.synthesize_dataset(bundle, root / name)
    return paths
