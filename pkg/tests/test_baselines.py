import math

import numpy as np
import pytest

from gqco.baselines import (
    QAOAConfig,
    SAConfig,
    build_qaoa_circuit,
    qaoa_expectation,
    qaoa_optimize,
    qaoa_solve,
    qaoa_state,
    simulated_annealing,
    simulated_annealing_batch,
    solve_brute,
    solve_qaoa,
    solve_sa,
)
from gqco.circuits import circuit_metrics
from gqco.ising import IsingProblem, basis_energies, brute_force_solve, energy, is_correct_solution, random_problem
from gqco.simulator import run_circuit, state_probabilities


def test_sa_single_spin():
    p = IsingProblem(n=1, h=np.array([1.0]), J={})
    assert simulated_annealing(p, SAConfig(sweeps=100), seed=0) == "1"


def test_sa_deterministic_given_seed():
    p = random_problem(4, rng_seed=3)
    cfg = SAConfig(sweeps=200)
    assert simulated_annealing(p, cfg, seed=5) == simulated_annealing(p, cfg, seed=5)


def test_sa_matches_brute_force_on_small_instances():
    problems = [random_problem(3, rng_seed=s) for s in range(30)]
    bits = simulated_annealing_batch(problems, SAConfig(sweeps=1000), seed=1)
    correct = sum(is_correct_solution(p, b) for p, b in zip(problems, bits))
    assert correct >= 29


def test_sa_best_seen_energy_non_increasing():
    problems = [random_problem(5, rng_seed=s) for s in range(4)]
    trace: list = []
    simulated_annealing_batch(problems, SAConfig(sweeps=300), seed=2, best_energy_trace=trace)
    stacked = np.stack(trace)  # (sweeps, B)
    assert np.all(np.diff(stacked, axis=0) <= 1e-12)


def test_sa_returns_local_minimum_with_many_sweeps():
    for seed in range(5):
        p = random_problem(5, rng_seed=100 + seed)
        bits = simulated_annealing(p, SAConfig(sweeps=10_000), seed=seed)
        base = energy(p, bits)
        spins = np.array([1 if c == "0" else -1 for c in bits])
        for i in range(5):
            flipped = spins.copy()
            flipped[i] = -flipped[i]
            assert energy(p, flipped) >= base - 1e-12


def test_sa_accuracy_improves_with_sweeps():
    problems = [random_problem(6, rng_seed=s) for s in range(40)]

    def accuracy(sweeps, seed):
        bits = simulated_annealing_batch(problems, SAConfig(sweeps=sweeps), seed=seed)
        return sum(is_correct_solution(p, b) for p, b in zip(problems, bits)) / len(problems)

    assert accuracy(2000, seed=11) >= accuracy(10, seed=11)


def test_sa_config_validation():
    with pytest.raises(ValueError):
        SAConfig(sweeps=0)
    with pytest.raises(ValueError):
        SAConfig(T_start=0.001, T_end=0.01)
    with pytest.raises(ValueError):
        SAConfig(T_end=0.0)


def test_sa_batch_requires_uniform_size():
    with pytest.raises(ValueError):
        simulated_annealing_batch(
            [random_problem(3, rng_seed=0), random_problem(4, rng_seed=0)], SAConfig(), seed=0
        )


# ---- QAOA -----------------------------------------------------------------


def test_qaoa_zero_problem_has_flat_landscape():
    p = IsingProblem(n=2, h=np.zeros(2), J={(0, 1): 0.0})
    rng = np.random.default_rng(0)
    for _ in range(5):
        angles = rng.uniform(-math.pi, math.pi, size=4)
        assert qaoa_expectation(p, angles) == pytest.approx(0.0, abs=1e-12)
    bits, _ = qaoa_solve(p, QAOAConfig(layers=2, restarts=1), seed=0)
    assert is_correct_solution(p, bits)


def test_qaoa_cost_phase_preserves_probabilities():
    p = random_problem(3, rng_seed=8)
    state = qaoa_state(p, gammas=[0.7], betas=[0.0])
    assert np.allclose(state_probabilities(state), np.full(8, 1 / 8), atol=1e-12)


def test_qaoa_optimized_never_worse_than_uniform_baseline():
    for seed in range(8):
        p = random_problem(3, rng_seed=200 + seed)
        baseline = float(np.mean(basis_energies(p)))
        _, best = qaoa_optimize(p, QAOAConfig(layers=1, restarts=2), seed=seed)
        assert best <= baseline + 1e-12


def test_qaoa_circuit_matches_fast_state():
    p = random_problem(3, rng_seed=31)
    gammas, betas = [0.43, -0.9], [0.21, 1.1]
    fast = qaoa_state(p, gammas, betas)
    for decompose in (False, True):
        circuit = build_qaoa_circuit(p, gammas, betas, cnot_decomposition=decompose)
        assert np.max(np.abs(run_circuit(circuit) - fast)) <= 1e-10


def test_qaoa_circuit_structure_and_metrics():
    p = random_problem(3, rng_seed=32)
    c1 = build_qaoa_circuit(p, [0.3], [0.4])
    m1 = circuit_metrics(c1)
    assert m1["cnot_count"] == 0
    c1d = build_qaoa_circuit(p, [0.3], [0.4], cnot_decomposition=True)
    assert circuit_metrics(c1d)["cnot_count"] == 6  # two per coupling
    depths = []
    for layers in (1, 2, 3, 4):
        c = build_qaoa_circuit(p, [0.3] * layers, [0.4] * layers)
        depths.append(circuit_metrics(c)["depth"])
    diffs = set(np.diff(depths).tolist())
    assert len(diffs) == 1  # depth grows linearly with layer count


def test_qaoa_shot_mode_runs_and_is_seeded():
    p = random_problem(3, rng_seed=33)
    cfg = QAOAConfig(layers=1, restarts=1, max_evaluations=40, shots=64)
    a, _ = qaoa_solve(p, cfg, seed=4)
    b, _ = qaoa_solve(p, cfg, seed=4)
    assert a == b


def test_qaoa_config_validation():
    with pytest.raises(ValueError):
        QAOAConfig(layers=0)
    with pytest.raises(ValueError):
        QAOAConfig(shots=0)


# ---- shared solver interface ------------------------------------------------


def test_solve_result_consistency():
    p = random_problem(4, rng_seed=9)
    gt = brute_force_solve(p)
    r_brute = solve_brute(p)
    assert r_brute.bits in gt.ground_states
    assert r_brute.energy == gt.min_energy
    assert r_brute.wall_time >= 0.0
    r_sa = solve_sa(p, SAConfig(sweeps=500), seed=2)
    assert r_sa.energy == pytest.approx(energy(p, r_sa.bits))
    r_qaoa = solve_qaoa(p, QAOAConfig(layers=1, restarts=1, max_evaluations=60), seed=2)
    assert r_qaoa.energy == pytest.approx(energy(p, r_qaoa.bits))
