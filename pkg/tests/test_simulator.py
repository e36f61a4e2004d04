import math

import numpy as np
import pytest

from gqco.circuits import Circuit, GateSpec, build_vocabulary, decode_tokens
from gqco.ising import IsingProblem, basis_index_to_bits, brute_force_solve, energy, random_problem
from gqco.simulator import (
    apply_gate,
    argmax_basis,
    expectation,
    gate_unitary,
    run_circuit,
    sample_shots,
    simulate_token_batch,
    state_probabilities,
    token_unitaries,
    zero_state,
)


def random_valid_tokens(vocab, n, length, rng):
    valid = [t for t in range(1, vocab.size) if vocab.gates[t].max_qubit < n]
    return [0] + [int(rng.choice(valid)) for _ in range(length)]


def test_hadamard_on_zero():
    state = apply_gate(zero_state(1), GateSpec("H", (0,)))
    assert np.allclose(state, np.array([1, 1]) / math.sqrt(2))


def test_three_ry_pi3_is_bit_flip():
    ry = gate_unitary(GateSpec("RY", (0,), math.pi / 3), 1)
    composed = ry @ ry @ ry
    assert np.max(np.abs(composed - np.array([[0, -1], [1, 0]]))) <= 1e-12


def test_cnot_flips_target_when_control_set():
    # qubit 0 = 1 is basis index 1; flipping target qubit 1 gives index 3
    state = np.zeros(4, dtype=complex)
    state[1] = 1.0
    out = apply_gate(state, GateSpec("CNOT", (0, 1)))
    assert out[3] == 1.0 and np.sum(np.abs(out)) == 1.0


def test_cnot_idle_when_control_clear():
    state = np.zeros(4, dtype=complex)
    state[2] = 1.0  # qubit 1 set, qubit 0 (control) clear
    out = apply_gate(state, GateSpec("CNOT", (0, 1)))
    assert out[2] == 1.0


def test_rz_rzz_phases():
    theta = math.pi / 5
    state = np.ones(4, dtype=complex) / 2.0
    out = apply_gate(state, GateSpec("RZZ", (0, 1), theta))
    # equal bits pick up exp(-i theta/2), unequal bits exp(+i theta/2)
    assert np.allclose(out[0] / state[0], np.exp(-1j * theta / 2))
    assert np.allclose(out[3] / state[3], np.exp(-1j * theta / 2))
    assert np.allclose(out[1] / state[1], np.exp(1j * theta / 2))
    out_z = apply_gate(state, GateSpec("RZ", (0,), theta))
    assert np.allclose(out_z[0] / state[0], np.exp(-1j * theta / 2))
    assert np.allclose(out_z[1] / state[1], np.exp(1j * theta / 2))


def test_identity_and_empty_circuit():
    state = run_circuit(Circuit(n=3, gates=()))
    assert state[0] == 1.0 and np.sum(np.abs(state)) == 1.0
    assert np.array_equal(apply_gate(state, GateSpec("I", ())), state)


def test_norm_preserved_on_random_circuits():
    rng = np.random.default_rng(4)
    for n in (2, 3, 4, 5):
        vocab = build_vocabulary(n)
        for _ in range(20):
            tokens = random_valid_tokens(vocab, n, int(rng.integers(4, 2 * n + 1)), rng)
            state = run_circuit(decode_tokens(vocab, tokens, n))
            assert abs(np.sum(state_probabilities(state)) - 1.0) <= 1e-10


def test_diagonal_gates_preserve_probabilities():
    rng = np.random.default_rng(5)
    vocab = build_vocabulary(3)
    tokens = random_valid_tokens(vocab, 3, 5, rng)
    state = run_circuit(decode_tokens(vocab, tokens, 3))
    before = state_probabilities(state)
    for gate in (
        GateSpec("RZ", (1,), math.pi / 4),
        GateSpec("RZZ", (0, 2), -math.pi / 3),
        GateSpec("I", ()),
    ):
        after = state_probabilities(apply_gate(state, gate))
        assert np.max(np.abs(after - before)) <= 1e-12


def test_expectation_basis_state():
    p = IsingProblem(n=2, h=np.zeros(2), J={(0, 1): -1.0})
    assert expectation(zero_state(2), p) == pytest.approx(-1.0)


def test_expectation_uniform_superposition_matches_average():
    p = random_problem(3, rng_seed=17)
    state = zero_state(3)
    for q in range(3):
        state = apply_gate(state, GateSpec("H", (q,)))
    oracle = sum(energy(p, basis_index_to_bits(z, 3)) for z in range(8)) / 8.0
    assert expectation(state, p) == pytest.approx(oracle, abs=1e-12)


def test_expectation_of_ground_state_circuit():
    p = random_problem(3, rng_seed=23)
    gt = brute_force_solve(p)
    target = gt.ground_states[0]
    state = zero_state(3)
    for q, bit in enumerate(target):
        if bit == "1":
            for _ in range(3):  # three RY(pi/3) compose to an exact flip
                state = apply_gate(state, GateSpec("RY", (q,), math.pi / 3))
    assert expectation(state, p) == pytest.approx(gt.min_energy, abs=1e-9)


def test_expectation_within_spectrum_bounds():
    rng = np.random.default_rng(6)
    for n in (3, 4, 5):
        p = random_problem(n, rng_seed=n * 7)
        vocab = build_vocabulary(n)
        energies = [energy(p, basis_index_to_bits(z, n)) for z in range(1 << n)]
        for _ in range(10):
            tokens = random_valid_tokens(vocab, n, 2 * n, rng)
            state = run_circuit(decode_tokens(vocab, tokens, n))
            e = expectation(state, p)
            assert min(energies) - 1e-9 <= e <= max(energies) + 1e-9


def test_argmax_basis_and_tie_break():
    state = np.zeros(8, dtype=complex)
    state[5] = 1.0  # qubit0=1, qubit2=1 -> "101"
    assert argmax_basis(state) == "101"
    ghz = np.zeros(8, dtype=complex)
    ghz[0] = ghz[7] = 1 / math.sqrt(2)
    assert argmax_basis(ghz) == "000"


def test_sample_shots_peaked_state():
    state = np.zeros(4, dtype=complex)
    state[3] = 1.0
    hist = sample_shots(state, 10, np.random.default_rng(0))
    assert hist == {"11": 10}


def test_sample_shots_binomial_statistics():
    state = np.array([1, 1], dtype=complex) / math.sqrt(2)
    hist = sample_shots(state, 10**6, np.random.default_rng(1))
    sigma = math.sqrt(10**6 * 0.25)
    assert abs(hist["0"] - 5 * 10**5) <= 3 * sigma
    assert abs(hist["1"] - 5 * 10**5) <= 3 * sigma


def test_sample_shots_deterministic_given_seed():
    state = apply_gate(zero_state(2), GateSpec("H", (0,)))
    a = sample_shots(state, 100, np.random.default_rng(9))
    b = sample_shots(state, 100, np.random.default_rng(9))
    assert a == b


def test_gate_out_of_range_rejected():
    with pytest.raises(ValueError):
        apply_gate(zero_state(2), GateSpec("H", (2,)))


def test_batched_token_simulation_matches_sequential():
    rng = np.random.default_rng(11)
    for n in (2, 3, 4):
        vocab = build_vocabulary(n)
        unitaries = token_unitaries(vocab, n)
        rows = []
        for _ in range(8):
            tokens = random_valid_tokens(vocab, n, 2 * n, rng)
            rows.append(tokens + [0, 0])  # trailing padding = identity
        tokens_arr = np.asarray(rows, dtype=np.int64)
        batch_states = simulate_token_batch(unitaries, tokens_arr)
        for b, row in enumerate(rows):
            circuit = decode_tokens(vocab, [t for t in row[: 2 * n + 1]], n)
            ref = run_circuit(circuit)
            assert np.max(np.abs(batch_states[b] - ref)) <= 1e-12
