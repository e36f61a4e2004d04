"""Exact statevector simulation of gate circuits and Ising expectations.

States are complex128 arrays of length 2^n with qubit 0 in the least
significant bit of the basis index. All operations return new arrays.
Rotation convention: R_P(theta) = exp(-i * theta * P / 2).
"""
from __future__ import annotations

import math

import numpy as np

from .circuits import Circuit, GateSpec, Vocabulary
from .ising import IsingProblem, basis_energies, basis_index_to_bits

NORM_TOL = 1e-10


def n_qubits_of(state: np.ndarray) -> int:
    n = int(round(math.log2(state.shape[-1])))
    if 1 << n != state.shape[-1]:
        raise ValueError(f"state length {state.shape[-1]} is not a power of two")
    return n


def zero_state(n: int) -> np.ndarray:
    state = np.zeros(1 << n, dtype=np.complex128)
    state[0] = 1.0
    return state


def _single_qubit_matrix(gate: GateSpec) -> np.ndarray:
    if gate.kind == "H":
        return np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
    half = gate.angle / 2
    c, s = math.cos(half), math.sin(half)
    if gate.kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if gate.kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if gate.kind == "RZ":
        return np.array([[np.exp(-1j * half), 0], [0, np.exp(1j * half)]], dtype=np.complex128)
    raise ValueError(f"{gate.kind} is not a single-qubit matrix gate")


def _apply_single(states: np.ndarray, matrix: np.ndarray, qubit: int, n: int) -> np.ndarray:
    # states: (..., 2^n); qubit q lives on axis -(q+1) of the [2]*n view
    batch_shape = states.shape[:-1]
    view = states.reshape(batch_shape + (2,) * n)
    axis = states.ndim - 1 + (n - 1 - qubit)
    moved = np.moveaxis(view, axis, -1)
    out = moved @ matrix.T
    return np.moveaxis(out, -1, axis).reshape(states.shape)


def _apply_cnot(states: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    batch = states.ndim - 1
    view = states.reshape(states.shape[:-1] + (2,) * n).copy()

    def idx(vc, vt):
        sel: list = [slice(None)] * (batch + n)
        sel[batch + n - 1 - control] = vc
        sel[batch + n - 1 - target] = vt
        return tuple(sel)

    view[idx(1, 0)], view[idx(1, 1)] = view[idx(1, 1)].copy(), view[idx(1, 0)].copy()
    return view.reshape(states.shape)


def _zz_signs(i: int, j: int, n: int) -> np.ndarray:
    z = np.arange(1 << n, dtype=np.int64)
    return (1 - 2 * ((z >> i) & 1)) * (1 - 2 * ((z >> j) & 1))


def _z_signs(i: int, n: int) -> np.ndarray:
    z = np.arange(1 << n, dtype=np.int64)
    return 1 - 2 * ((z >> i) & 1)


def apply_gate(state: np.ndarray, gate: GateSpec) -> np.ndarray:
    """Apply one gate to a state (or a batch of states on the last axis)."""
    n = n_qubits_of(state)
    if gate.max_qubit >= n:
        raise ValueError(f"gate {gate} touches qubit >= n={n}")
    if gate.kind == "I":
        return state.copy()
    if gate.kind in ("H", "RX", "RY"):
        return _apply_single(state, _single_qubit_matrix(gate), gate.qubits[0], n)
    if gate.kind == "RZ":
        phases = np.exp(-1j * (gate.angle / 2) * _z_signs(gate.qubits[0], n))
        return state * phases
    if gate.kind == "CNOT":
        return _apply_cnot(state, gate.qubits[0], gate.qubits[1], n)
    if gate.kind == "RZZ":
        phases = np.exp(-1j * (gate.angle / 2) * _zz_signs(gate.qubits[0], gate.qubits[1], n))
        return state * phases
    raise ValueError(f"unknown gate kind {gate.kind}")


def run_circuit(circuit: Circuit) -> np.ndarray:
    """Fold apply_gate over the gate list starting from |0...0>."""
    state = zero_state(circuit.n)
    for gate in circuit.gates:
        state = apply_gate(state, gate)
    return state


def state_probabilities(state: np.ndarray) -> np.ndarray:
    return np.abs(state) ** 2


def expectation(state: np.ndarray, problem: IsingProblem) -> float:
    """Probability-weighted Ising energy; exact for this diagonal observable."""
    if n_qubits_of(state) != problem.n:
        raise ValueError(f"state has {n_qubits_of(state)} qubits, problem has {problem.n}")
    return float(state_probabilities(state) @ basis_energies(problem))


def argmax_basis(state: np.ndarray) -> str:
    """Most probable basis state; ties go to the lowest basis index."""
    n = n_qubits_of(state)
    return basis_index_to_bits(int(np.argmax(state_probabilities(state))), n)


def sample_shots(state: np.ndarray, shots: int, rng: np.random.Generator) -> dict[str, int]:
    """Multinomial measurement histogram {bitstring: count}, observed outcomes only."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    n = n_qubits_of(state)
    probs = state_probabilities(state)
    probs = probs / probs.sum()
    counts = rng.multinomial(shots, probs)
    return {basis_index_to_bits(int(z), n): int(c) for z in np.nonzero(counts)[0] for c in (counts[z],)}


def gate_unitary(gate: GateSpec, n: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of one gate (built through apply_gate)."""
    rows = apply_gate(np.eye(1 << n, dtype=np.complex128), gate)
    return rows.T


_TOKEN_UNITARY_CACHE: dict[tuple[int, int], np.ndarray] = {}


def token_unitaries(vocab: Vocabulary, n: int) -> np.ndarray:
    """(V, 2^n, 2^n) unitary per token; tokens touching qubits >= n are NaN.

    Cached per (vocab.n, n); used for batched simulation of token matrices
    where padding/start/end slots hold token 0 (the identity).
    """
    key = (vocab.n, n)
    cached = _TOKEN_UNITARY_CACHE.get(key)
    if cached is not None:
        return cached
    dim = 1 << n
    out = np.full((vocab.size, dim, dim), np.nan, dtype=np.complex128)
    for token, gate in enumerate(vocab.gates):
        if gate.max_qubit < n:
            out[token] = gate_unitary(gate, n)
    out.setflags(write=False)
    _TOKEN_UNITARY_CACHE[key] = out
    return out


def simulate_token_batch(unitaries: np.ndarray, tokens: np.ndarray) -> np.ndarray:
    """Simulate B token rows at once; returns (B, 2^n) final states.

    ``tokens`` may include the leading start token and trailing end/padding
    zeros; token 0 is the identity so those positions are no-ops.
    """
    batch, length = tokens.shape
    dim = unitaries.shape[-1]
    states = np.zeros((batch, dim), dtype=np.complex128)
    states[:, 0] = 1.0
    for col in range(length):
        mats = unitaries[tokens[:, col]]
        states = np.einsum("bij,bj->bi", mats, states)
    return states
