import numpy as np
import pytest
import torch

from gqco.circuits import GateSpec
from gqco.ising import IsingProblem, brute_force_solve
from gqco.model import ModelConfig, build_model

torch.set_num_threads(2)

TINY = ModelConfig(d_model=8, d_ff=16, n_layers_enc=2, n_layers_dec=2, n_heads=2, n_max_supported=5)
SMALL = ModelConfig(d_model=16, d_ff=32, n_layers_enc=2, n_layers_dec=2, n_heads=2, n_max_supported=6)


@pytest.fixture(scope="session")
def tiny_model():
    return build_model(TINY, expert_sizes=(3,), seed=11)


@pytest.fixture(scope="session")
def small_model():
    return build_model(SMALL, expert_sizes=(3, 4), seed=5)


class OracleModel:
    """Hand-built stand-in that always emits a circuit flipping the most
    probable basis state onto the true ground state (two RY(pi/3) per flip,
    padded with RZ gates to reach the four-gate minimum)."""

    def __init__(self):
        self._cache = {}

    def generate(self, problem, num_samples, temperature=2.0, generator=None):
        from gqco.circuits import Circuit

        key = problem.to_json()
        if key not in self._cache:
            target = brute_force_solve(problem).ground_states[0]
            gates = []
            for q, bit in enumerate(target):
                if bit == "1":
                    gates.append(GateSpec("RY", (q,), np.pi / 3))
                    gates.append(GateSpec("RY", (q,), np.pi / 3))
            while len(gates) < 4:
                gates.append(GateSpec("RZ", (0,), np.pi / 4))
            self._cache[key] = Circuit(n=problem.n, gates=tuple(gates))
        return [self._cache[key]] * num_samples
