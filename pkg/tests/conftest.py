from pathlib import Path

import numpy as np
import pytest

import config
from free_model import FreeGeometry

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def kink_geom() -> FreeGeometry:
    return FreeGeometry.from_degrees(0.1, config.RELAXED_RADIUS_M, 89.0)


@pytest.fixture
def straight_geom() -> FreeGeometry:
    return FreeGeometry.from_degrees(0.2, config.RELAXED_RADIUS_M, 67.5)


@pytest.fixture
def circle_arc():
    """Factory for points on a circle of ``radius`` sweeping ``sweep`` radians"""
    def make(radius: float, sweep: float, count: int) -> np.ndarray:
        theta = np.linspace(0.0, sweep, count)
        return np.column_stack([radius * np.sin(theta), radius * (1.0 - np.cos(theta))])
    return make


@pytest.fixture
def write_text(tmp_path):
    """Write ``text`` to tmp_path / name and return the path as str"""
    def write(name: str, text: str) -> str:
        path = tmp_path / name
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        return str(path)
    return write

