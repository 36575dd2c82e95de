"""Shared pytest fixtures."""

import numpy as np
import pytest

from vrmix.database import reset_engine
from vrmix.mixtures import attach_uniform
from vrmix.models import ComponentSet
from vrmix.run_service import run_service


@pytest.fixture(autouse=True)
def isolated_registry(tmp_path, monkeypatch):
    """Point the run registry and default output directory at tmp_path."""
    monkeypatch.setenv("VRMIX_DATABASE_URL", f"sqlite:///{tmp_path / 'registry' / 'vrmix.db'}")
    monkeypatch.setenv("VRMIX_OUTPUT_DIR", str(tmp_path / "runs"))
    run_service.close()
    reset_engine()
    yield
    run_service.close()
    reset_engine()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def random_components(n: int, k: int, rng: np.random.Generator) -> ComponentSet:
    return attach_uniform(rng.dirichlet(np.ones(n), size=k - 1), n=n)


def random_restricted_point(k: int, gamma: float, rng: np.random.Generator) -> np.ndarray:
    """A random point of the restricted simplex."""
    w = rng.dirichlet(np.ones(k))
    return (1.0 - gamma) * w + gamma * np.eye(k)[-1]


@pytest.fixture
def small_components(rng) -> ComponentSet:
    return random_components(20, 4, rng)
