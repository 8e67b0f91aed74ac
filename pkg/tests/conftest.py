import random

import pytest

from qxx.circuit import Circuit, Gate, GateKind
from qxx.device import aspen16, grid, line


def random_circuit(num_qubits, num_gates, rng, swap_prob=0.0):
    gates = []
    for _ in range(num_gates):
        a, b = rng.sample(range(num_qubits), 2)
        kind = GateKind.SWAP if rng.random() < swap_prob else GateKind.CNOT
        gates.append(Gate(a, b, kind))
    return Circuit(num_qubits, tuple(gates))


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture(scope="session")
def aspen():
    return aspen16()


@pytest.fixture(scope="session")
def chain5():
    return line(5)


@pytest.fixture(scope="session")
def grid44():
    return grid(4, 4)
