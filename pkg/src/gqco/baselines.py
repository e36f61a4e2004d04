"""Reference solvers: simulated annealing and QAOA.

SA runs Metropolis single-spin-flip proposals in index order (one sweep = n
proposals) under a geometric temperature schedule and returns the best
assignment seen. The batched variant anneals many instances of the same size
in lockstep, sharing one RNG stream across the batch; results are
deterministic for a given (batch, seed) but depend on batch composition.

QAOA prepares |+>^n and alternates the diagonal cost phase exp(-i*gamma*H)
(equivalently RZZ/RZ gates with exact coefficients) with the transverse
mixer exp(-i*beta*X) per qubit; angles are optimized with Nelder-Mead
restarts on the exact expectation, the first restart starting at zero
angles so the optimized energy never exceeds the uniform-superposition
baseline.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .circuits import Circuit, GateSpec
from .ising import IsingProblem, basis_energies, brute_force_solve, energy, spins_to_bits
from .simulator import apply_gate, argmax_basis, sample_shots, state_probabilities


@dataclass(frozen=True)
class SAConfig:
    sweeps: int = 1000
    T_start: float | None = None  # default: 2 * max |coefficient|
    T_end: float = 0.01

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError(f"sweeps must be >= 1, got {self.sweeps}")
        if self.T_end <= 0:
            raise ValueError("T_end must be positive")
        if self.T_start is not None and self.T_start < self.T_end:
            raise ValueError("T_start must be >= T_end")


@dataclass(frozen=True)
class QAOAConfig:
    layers: int = 1
    restarts: int = 5
    max_evaluations: int | None = None  # per restart; default 200 * layers
    shots: int | None = None  # None = exact expectation

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1 when given")


@dataclass(frozen=True)
class SolveResult:
    bits: str
    energy: float
    wall_time: float


def _coupling_matrix(problem: IsingProblem) -> np.ndarray:
    m = np.zeros((problem.n, problem.n))
    for (i, j), v in problem.J.items():
        m[i, j] = m[j, i] = v
    return m


def _default_t_start(problem: IsingProblem) -> float:
    scale = max(
        [abs(v) for v in problem.h] + [abs(v) for v in problem.J.values()], default=0.0
    )
    return 2.0 * scale if scale > 0 else 1.0


def simulated_annealing_batch(
    problems: list[IsingProblem],
    config: SAConfig,
    seed: int,
    best_energy_trace: list | None = None,
) -> list[str]:
    """Anneal several same-size instances in lockstep; returns bitstrings.

    When ``best_energy_trace`` is a list, the per-instance best-seen energy
    is appended after every sweep (diagnostics).
    """
    if not problems:
        return []
    n = problems[0].n
    if any(p.n != n for p in problems):
        raise ValueError("batched annealing requires a uniform problem size")
    b = len(problems)
    rng = np.random.default_rng(seed)
    h = np.stack([p.h for p in problems])
    jmat = np.stack([_coupling_matrix(p) for p in problems])
    t_start = (
        np.full(b, float(config.T_start))
        if config.T_start is not None
        else np.array([_default_t_start(p) for p in problems])
    )
    ratio = (
        (config.T_end / t_start) ** (1.0 / (config.sweeps - 1))
        if config.sweeps > 1
        else np.ones(b)
    )
    spins = rng.integers(0, 2, size=(b, n)) * 2 - 1
    local = h + np.einsum("bij,bj->bi", jmat, spins)
    energies = 0.5 * np.einsum("bi,bi->b", spins, local + h)
    best_energy = energies.copy()
    best_spins = spins.copy()
    temp = t_start.copy()
    for _ in range(config.sweeps):
        for i in range(n):
            delta = -2.0 * spins[:, i] * local[:, i]
            u = rng.random(b)
            accept = u < np.exp(np.minimum(0.0, -delta / temp))
            if accept.any():
                old = spins[accept, i].copy()
                spins[accept, i] = -old
                energies[accept] += delta[accept]
                local[accept] += jmat[accept, i, :] * (-2.0 * old)[:, None]
                improved = accept & (energies < best_energy)
                best_energy[improved] = energies[improved]
                best_spins[improved] = spins[improved]
        temp = temp * ratio
        if best_energy_trace is not None:
            best_energy_trace.append(best_energy.copy())
    return [spins_to_bits(s) for s in best_spins]


def simulated_annealing(problem: IsingProblem, config: SAConfig, seed: int) -> str:
    """Best-seen assignment of one annealing run; deterministic given seed."""
    return simulated_annealing_batch([problem], config, seed)[0]


def solve_sa(problem: IsingProblem, config: SAConfig, seed: int) -> SolveResult:
    start = time.perf_counter()
    bits = simulated_annealing(problem, config, seed)
    elapsed = time.perf_counter() - start
    return SolveResult(bits=bits, energy=energy(problem, bits), wall_time=elapsed)


# ---- QAOA ---------------------------------------------------------------


def qaoa_state(problem: IsingProblem, gammas, betas) -> np.ndarray:
    """Exact state of the ansatz: diagonal cost phases + RX mixers."""
    n = problem.n
    dim = 1 << n
    state = np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128)
    energies = basis_energies(problem)
    for gamma, beta in zip(gammas, betas):
        state = state * np.exp(-1j * gamma * energies)
        for q in range(n):
            state = apply_gate(state, GateSpec("RX", (q,), 2.0 * beta))
    return state


def qaoa_expectation(
    problem: IsingProblem, angles: np.ndarray, shots: int | None = None, rng=None
) -> float:
    p = len(angles) // 2
    state = qaoa_state(problem, angles[:p], angles[p:])
    energies = basis_energies(problem)
    if shots is None:
        return float(state_probabilities(state) @ energies)
    counts = sample_shots(state, shots, rng)
    total = sum(counts.values())
    return sum(energy(problem, bits) * c for bits, c in counts.items()) / total


def build_qaoa_circuit(
    problem: IsingProblem, gammas, betas, cnot_decomposition: bool = False
) -> Circuit:
    """Explicit gate list of the ansatz (for metrics and shot studies).

    RZZ(2*gamma*J_ij) implements each coupling phase; with
    ``cnot_decomposition`` it is expanded to CNOT - RZ - CNOT.
    """
    n = problem.n
    gates: list[GateSpec] = [GateSpec("H", (q,)) for q in range(n)]
    for gamma, beta in zip(gammas, betas):
        for (i, j), v in sorted(problem.J.items()):
            if cnot_decomposition:
                gates.append(GateSpec("CNOT", (i, j)))
                gates.append(GateSpec("RZ", (j,), 2.0 * gamma * v))
                gates.append(GateSpec("CNOT", (i, j)))
            else:
                gates.append(GateSpec("RZZ", (i, j), 2.0 * gamma * v))
        for i in range(n):
            gates.append(GateSpec("RZ", (i,), 2.0 * gamma * float(problem.h[i])))
        for q in range(n):
            gates.append(GateSpec("RX", (q,), 2.0 * beta))
    return Circuit(n=n, gates=tuple(gates))


def qaoa_optimize(
    problem: IsingProblem, config: QAOAConfig, seed: int
) -> tuple[np.ndarray, float]:
    """Best angles over Nelder-Mead restarts (restart 0 starts at zeros)."""
    p = config.layers
    n = problem.n
    rng = np.random.default_rng(seed)
    max_evals = config.max_evaluations if config.max_evaluations is not None else 200 * p
    energies = basis_energies(problem)
    uniform = np.full(1 << n, 1.0 / math.sqrt(1 << n), dtype=np.complex128)

    def objective(angles):
        state = uniform
        for gamma, beta in zip(angles[:p], angles[p:]):
            state = state * np.exp(-1j * gamma * energies)
            for q in range(n):
                state = apply_gate(state, GateSpec("RX", (q,), 2.0 * beta))
        if config.shots is None:
            return float(state_probabilities(state) @ energies)
        counts = sample_shots(state, config.shots, rng)
        total = sum(counts.values())
        return sum(energy(problem, bits) * c for bits, c in counts.items()) / total

    best_angles = np.zeros(2 * p)
    best_value = objective(best_angles)
    for restart in range(config.restarts):
        x0 = np.zeros(2 * p) if restart == 0 else rng.uniform(-math.pi, math.pi, size=2 * p)
        result = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"maxfev": max_evals, "xatol": 1e-4, "fatol": 1e-8},
        )
        if result.fun < best_value:
            best_value = float(result.fun)
            best_angles = np.asarray(result.x)
    return best_angles, best_value


def qaoa_solve(problem: IsingProblem, config: QAOAConfig, seed: int) -> tuple[str, np.ndarray]:
    """Optimized-ansatz answer: most probable basis state and the final state."""
    angles, _ = qaoa_optimize(problem, config, seed)
    p = config.layers
    state = qaoa_state(problem, angles[:p], angles[p:])
    return argmax_basis(state), state


def solve_qaoa(problem: IsingProblem, config: QAOAConfig, seed: int) -> SolveResult:
    start = time.perf_counter()
    bits, _ = qaoa_solve(problem, config, seed)
    elapsed = time.perf_counter() - start
    return SolveResult(bits=bits, energy=energy(problem, bits), wall_time=elapsed)


def solve_brute(problem: IsingProblem) -> SolveResult:
    start = time.perf_counter()
    ground = brute_force_solve(problem)
    elapsed = time.perf_counter() - start
    return SolveResult(bits=ground.ground_states[0], energy=ground.min_energy, wall_time=elapsed)
