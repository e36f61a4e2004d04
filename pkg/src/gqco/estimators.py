"""scikit-learn style estimators wrapping the solvers and the graph embedding.

These follow the fit/predict/transform idiom with ``get_params`` support so
the solvers compose with pipelines, grid search, and cross-validation-style
tooling. ``X`` is a list of problems (IsingProblem instances or their dict
form); ``predict`` returns one bitstring per problem and ``score`` the
fraction of problems solved exactly (checked against brute force).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .baselines import QAOAConfig, SAConfig, simulated_annealing, qaoa_solve, solve_brute
from .exceptions import ConfigurationError
from .graph import ProblemGraph, embed
from .ising import IsingProblem, is_correct_solution
from .model import GQCOModel, ModelConfig, build_model, load_checkpoint
from .training import TrainConfig, Trainer, candidate_states, _derived_seed


def as_problems(X) -> list[IsingProblem]:
    """Validate and normalize estimator input into IsingProblem objects."""
    if isinstance(X, (IsingProblem, dict)):
        X = [X]
    problems = []
    for item in X:
        if isinstance(item, IsingProblem):
            problems.append(item)
        elif isinstance(item, dict):
            problems.append(IsingProblem.from_dict(item))
        else:
            raise ValueError(f"expected IsingProblem or problem dict, got {type(item).__name__}")
    if not problems:
        raise ValueError("X must contain at least one problem")
    return problems


class IsingGraphEmbedder(TransformerMixin, BaseEstimator):
    """Stateless transformer: problems -> ProblemGraph feature bundles."""

    def fit(self, X, y=None):
        as_problems(X)
        return self

    def transform(self, X) -> list[ProblemGraph]:
        return [embed(p) for p in as_problems(X)]


class _ScoredSolver(BaseEstimator):
    def score(self, X, y=None) -> float:
        problems = as_problems(X)
        answers = self.predict(problems)
        return float(
            np.mean([is_correct_solution(p, bits) for p, bits in zip(problems, answers)])
        )


class BruteForceSolver(_ScoredSolver):
    """Exact enumeration; predict returns the lowest-index ground state."""

    def fit(self, X=None, y=None):
        return self

    def predict(self, X) -> list[str]:
        return [solve_brute(p).bits for p in as_problems(X)]


class SimulatedAnnealingSolver(_ScoredSolver):
    def __init__(self, sweeps=1000, T_start=None, T_end=0.01, seed=0):
        self.sweeps = sweeps
        self.T_start = T_start
        self.T_end = T_end
        self.seed = seed

    def fit(self, X=None, y=None):
        return self

    def predict(self, X) -> list[str]:
        cfg = SAConfig(sweeps=self.sweeps, T_start=self.T_start, T_end=self.T_end)
        return [
            simulated_annealing(p, cfg, seed=_derived_seed(self.seed, k))
            for k, p in enumerate(as_problems(X))
        ]


class QAOASolver(_ScoredSolver):
    def __init__(self, layers=1, restarts=5, max_evaluations=None, shots=None, seed=0):
        self.layers = layers
        self.restarts = restarts
        self.max_evaluations = max_evaluations
        self.shots = shots
        self.seed = seed

    def fit(self, X=None, y=None):
        return self

    def predict(self, X) -> list[str]:
        cfg = QAOAConfig(
            layers=self.layers,
            restarts=self.restarts,
            max_evaluations=self.max_evaluations,
            shots=self.shots,
        )
        return [
            qaoa_solve(p, cfg, seed=_derived_seed(self.seed, k))[0]
            for k, p in enumerate(as_problems(X))
        ]


class GQCOSolver(_ScoredSolver):
    """Generative solver: fit trains (or loads) the circuit generator, predict
    samples circuits and answers with the lowest-expectation candidate.

    Training is self-supervised on randomly generated problems, so ``fit``
    ignores X; pass ``checkpoint`` to reuse trained weights instead.
    """

    def __init__(
        self,
        d_model=64,
        d_ff=256,
        n_layers=4,
        n_heads=4,
        train_steps=2000,
        num_samples=100,
        temperature=2.0,
        M=128,
        learning_rate=1e-4,
        seed=0,
        checkpoint=None,
        run_dir=None,
    ):
        self.d_model = d_model
        self.d_ff = d_ff
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.train_steps = train_steps
        self.num_samples = num_samples
        self.temperature = temperature
        self.M = M
        self.learning_rate = learning_rate
        self.seed = seed
        self.checkpoint = checkpoint
        self.run_dir = run_dir

    def fit(self, X=None, y=None):
        if self.checkpoint is not None:
            self.model_ = load_checkpoint(self.checkpoint)
            self.trainer_ = None
            return self
        config = ModelConfig(
            d_model=self.d_model,
            d_ff=self.d_ff,
            n_layers_enc=self.n_layers,
            n_layers_dec=self.n_layers,
            n_heads=self.n_heads,
        )
        self.model_ = build_model(config, expert_sizes=(3,), seed=self.seed)
        train_config = TrainConfig(
            M_per_n={n: self.M for n in range(3, 7)},
            learning_rate=self.learning_rate,
            seed=self.seed,
        )
        self.trainer_ = Trainer(self.model_, train_config, run_dir=self.run_dir)
        self.trainer_.run(self.train_steps)
        return self

    @property
    def model(self) -> GQCOModel:
        if not hasattr(self, "model_") or self.model_ is None:
            raise ConfigurationError("GQCOSolver is not fitted; call fit() or pass checkpoint=")
        return self.model_

    def predict(self, X) -> list[str]:
        from .simulator import argmax_basis
        from .ising import basis_energies

        answers = []
        for k, problem in enumerate(as_problems(X)):
            states, _ = candidate_states(
                self.model, problem, self.num_samples, self.temperature, _derived_seed(self.seed, 1, k)
            )
            expectations = (np.abs(states) ** 2) @ basis_energies(problem)
            answers.append(argmax_basis(states[int(np.argmin(expectations))]))
        return answers
