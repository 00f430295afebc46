from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from acimflow.layout import load_layout_params, load_template_library  # noqa: E402
from acimflow.netlist import load_cell_library  # noqa: E402
from acimflow.profile import default_profile  # noqa: E402


@pytest.fixture(scope="session")
def profile():
    return default_profile()


@pytest.fixture(scope="session")
def library():
    return load_cell_library()


@pytest.fixture(scope="session")
def templates():
    return load_template_library()


@pytest.fixture(scope="session")
def layout_params():
    return load_layout_params()
