from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from facetql.pipeline import Workspace

import support


@pytest.fixture(scope="session")
def demo_workspace() -> Workspace:
    return Workspace.load()


@pytest.fixture(scope="session")
def reference_aux():
    return support.reference_aux()


@pytest.fixture(scope="session")
def reference_index():
    return support.reference_index()
