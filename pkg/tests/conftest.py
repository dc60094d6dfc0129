import numpy as np
import pytest

from qbanyan.fock import QubitSpec


def random_qubits(seed: int, n: int) -> list[QubitSpec]:
    rng = np.random.default_rng(seed)
    return [QubitSpec.random(rng) for _ in range(n)]


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
