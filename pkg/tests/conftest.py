import numpy as np
import pytest

from u1steer import StateVector


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)


def make_random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    dim = 1 << num_qubits
    amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    amps /= np.linalg.norm(amps)
    return StateVector(num_qubits, amps)


@pytest.fixture
def random_state():
    return make_random_state
