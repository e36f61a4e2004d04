"""Conditional generative solver for Ising-form combinatorial optimization.

A graph-transformer encoder reads the problem coefficients, a GPT-style
decoder with qubit-gated experts emits gate tokens, an exact statevector
simulator scores the circuits, and preference training pushes probability
mass toward the lowest-energy ones. Simulated annealing, QAOA, and brute
force serve as baselines; a benchmark harness and CLI tie it together.
"""
from .baselines import (
    QAOAConfig,
    SAConfig,
    SolveResult,
    build_qaoa_circuit,
    qaoa_solve,
    simulated_annealing,
    solve_brute,
    solve_qaoa,
    solve_sa,
)
from .circuits import Circuit, GateSpec, Vocabulary, build_vocabulary, circuit_metrics, decode_tokens
from .estimators import (
    BruteForceSolver,
    GQCOSolver,
    IsingGraphEmbedder,
    QAOASolver,
    SimulatedAnnealingSolver,
)
from .exceptions import ConfigurationError, GqcoError, ResourceError
from .graph import ProblemGraph, embed, frustration_count
from .harness import BenchmarkSpec, SolveRecord, gqco_solve, maxcut_demo, run_benchmark
from .ising import (
    GroundTruth,
    IsingProblem,
    basis_energies,
    brute_force_solve,
    energy,
    is_correct_solution,
    random_problem,
)
from .model import (
    GQCOModel,
    ModelConfig,
    SamplingConfig,
    build_model,
    load_checkpoint,
    save_checkpoint,
)
from .simulator import (
    apply_gate,
    argmax_basis,
    expectation,
    run_circuit,
    sample_shots,
    zero_state,
)
from .training import (
    CurriculumState,
    PreferenceBatch,
    TrainConfig,
    Trainer,
    cpo_best_vs_others_loss,
    dpo_pair_loss,
    evaluate_accuracy,
    ref_logweight,
    size_distribution,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
