"""Shared fixtures: paths into the shipped sample artifacts."""

from __future__ import annotations

from pathlib import Path

import pytest

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


@pytest.fixture(scope="session")
def run_csv() -> Path:
    return SAMPLES / "run1d" / "diagnostics.csv"


@pytest.fixture(scope="session")
def run2d_csv() -> Path:
    return SAMPLES / "run2d" / "diagnostics.csv"


@pytest.fixture(scope="session")
def barrier_csv() -> Path:
    return SAMPLES / "barrier" / "barrier.csv"


@pytest.fixture(scope="session")
def dispersion_csv() -> Path:
    return SAMPLES / "dispersion" / "dispersion.csv"


@pytest.fixture(scope="session")
def snapshot_1d() -> Path:
    return SAMPLES / "run1d" / "final.chsnap"


@pytest.fixture(scope="session")
def snapshot_2d() -> Path:
    return SAMPLES / "run2d" / "final.chsnap"
