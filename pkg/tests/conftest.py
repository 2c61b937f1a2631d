"""Pytest configuration and fixtures for closedsets tests."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

# Add repository root to path for imports
REPO_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(REPO_ROOT))

from closedsets.dyadic_measure import DyadicMeasure, build_diluted, build_uniform  # noqa: E402
from closedsets.encoding import Params  # noqa: E402
from closedsets.second_moment import HittingTarget  # noqa: E402


@pytest.fixture
def repo_root() -> Path:
    """Return the repository root path."""
    return REPO_ROOT


@pytest.fixture
def p21() -> Params:
    """k=2, ell=1: quaternary tree, each string kept with probability 1/2."""
    return Params(2, 1)


@pytest.fixture
def p41() -> Params:
    """k=4, ell=1: gamma = 1/4."""
    return Params(4, 1)


@pytest.fixture
def uniform8() -> DyadicMeasure:
    """Uniform measure to binary depth 8."""
    return build_uniform(8)


@pytest.fixture
def diluted8() -> DyadicMeasure:
    """Diluted measure to binary depth 8."""
    return build_diluted(8)


@pytest.fixture
def whole() -> HittingTarget:
    """The whole space as a hitting target."""
    return HittingTarget.whole_space()


@pytest.fixture
def measure_file(tmp_path: Path) -> Path:
    """A depth-2 measure file with an exact and a decimal leaf."""
    path = tmp_path / "measure.json"
    path.write_text('{"depth": 2, "masses": {"00": "1/2", "11": 0.5}}')
    return path
