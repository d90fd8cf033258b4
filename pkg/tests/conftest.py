"""Shared fixtures: isolated configuration, classical worked examples, small quantum states."""

import numpy as np
import pytest

from ccpnet import config_manager
from ccpnet.config_manager import ConfigManager
from ccpnet.localnet import LatticeNet
from ccpnet.qprob import Projection, State, TensorSpace


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Project defaults only: no user config file, no thread override."""
    monkeypatch.delenv(config_manager.THREADS_ENV_VAR, raising=False)
    manager = ConfigManager(user_file=tmp_path / "user-config.yaml")
    monkeypatch.setattr(config_manager, "_config_manager", manager)
    return manager


def diagonal_projection(n: int, atoms) -> Projection:
    diag = np.zeros(n)
    diag[list(atoms)] = 1.0
    return Projection.from_matrix(TensorSpace((n,)), np.diag(diag))


@pytest.fixture
def five_atom():
    """Refined classical space where the canonical cause is the first atom."""
    phi = State.diagonal([0.375, 0.025, 0.1, 0.1, 0.4])
    return {
        "phi": phi,
        "A": diagonal_projection(5, [0, 1, 2]),
        "B": diagonal_projection(5, [0, 1, 3]),
        "C": diagonal_projection(5, [0]),
    }


@pytest.fixture
def four_atom():
    """Unrefined classical space: the canonical value has no realization."""
    phi = State.diagonal([0.4, 0.1, 0.1, 0.4])
    return {
        "phi": phi,
        "A": diagonal_projection(4, [0, 1]),
        "B": diagonal_projection(4, [0, 2]),
    }


@pytest.fixture
def singlet() -> State:
    return State.pure(TensorSpace.qubits(2), np.array([0, 1, -1, 0]) / np.sqrt(2))


@pytest.fixture
def product_pure() -> State:
    return State.pure(TensorSpace.qubits(2), np.array([1, 0, 0, 0]))


@pytest.fixture
def demo_net() -> LatticeNet:
    return LatticeNet(6)
