"""Preference-based training: sample, rank by simulated energy, update.

Each step draws a problem size from the curriculum distribution, generates a
fresh random problem, samples M circuits, computes their exact expectations
with the statevector simulator, and applies the best-vs-others contrastive
loss: the mean pairwise preference term

    L(w, l) = log(1 + exp(-beta * ((log p_w - log pi_w) - (log p_l - log pi_l))))

over all l != w_best plus an anchor on the most preferred circuit. The
reference policy pi is proportional to exp(-energy), so only the negated
expectations enter and any normalization constant cancels in the pairwise
differences.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np
import torch

from .circuits import Circuit
from .exceptions import ConfigurationError
from .ising import IsingProblem, basis_energies, brute_force_solve, is_correct_solution, random_problem
from .model import GQCOModel, ModelConfig, SampleBatch, SamplingConfig, save_checkpoint
from .simulator import argmax_basis, run_circuit, simulate_token_batch, token_unitaries

DESK_M_PER_N = {3: 128, 4: 128, 5: 64, 6: 48}
PAPER_M_PER_N = {3: 1024, 4: 1024, 5: 512, 6: 384, 7: 256, 8: 192, 9: 128, 10: 96}

METRICS_COLUMNS = ("step", "loss", "best_expectation", "optimality_gap", "accuracy")
BRUTE_GAP_MAX_N = 6


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters (desk-scale defaults)."""

    beta: float = 0.1
    M_per_n: dict[int, int] = field(default_factory=lambda: dict(DESK_M_PER_N))
    learning_rate: float = 1e-4
    adam_betas: tuple[float, float] = (0.9, 0.95)
    eval_frequency: int = 500
    accuracy_threshold: float = 0.9
    T_train: float = 1.0
    T_eval: float = 2.0
    nll_variant: str = "log_prob"
    seed: int = 0
    eval_problems: int = 200
    eval_samples: int = 20

    def __post_init__(self):
        if self.beta <= 0:
            raise ConfigurationError(f"beta must be > 0, got {self.beta}")
        if any(m < 2 for m in self.M_per_n.values()):
            raise ConfigurationError("every M must be >= 2")
        if not 0 < self.accuracy_threshold <= 1:
            raise ConfigurationError("accuracy_threshold must be in (0, 1]")
        if self.nll_variant not in ("log_prob", "raw_prob"):
            raise ConfigurationError(f"unknown nll_variant {self.nll_variant!r}")
        if self.T_train <= 0 or self.T_eval <= 0:
            raise ConfigurationError("temperatures must be positive")
        object.__setattr__(self, "M_per_n", {int(k): int(v) for k, v in self.M_per_n.items()})
        object.__setattr__(self, "adam_betas", tuple(self.adam_betas))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["M_per_n"] = {str(k): v for k, v in self.M_per_n.items()}
        d["adam_betas"] = list(self.adam_betas)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        data = dict(data)
        if "M_per_n" in data:
            data["M_per_n"] = {int(k): int(v) for k, v in data["M_per_n"].items()}
        if "adam_betas" in data:
            data["adam_betas"] = tuple(data["adam_betas"])
        return cls(**data)


@dataclass(frozen=True)
class CurriculumState:
    """Current maximum problem size and training phase."""

    n_max: int = 3
    phase: str = "base_training"

    def __post_init__(self):
        if self.n_max < 3:
            raise ConfigurationError(f"n_max must be >= 3, got {self.n_max}")
        if self.phase not in ("base_training", "expert_tuning"):
            raise ConfigurationError(f"unknown phase {self.phase!r}")


def size_distribution(n_max: int) -> dict[int, float]:
    """Probability of drawing each problem size given the curriculum cap.

    The cap gets probability 1/2 and the remainder is split evenly over all
    smaller sizes down to 3, so earlier sizes keep being revisited. At the
    first stage (n_max=3) all mass sits on 3.
    """
    if n_max < 3:
        raise ValueError(f"n_max must be >= 3, got {n_max}")
    if n_max == 3:
        return {3: 1.0}
    dist = {n: 0.5 / (n_max - 3) for n in range(3, n_max)}
    dist[n_max] = 0.5
    return dist


def ref_logweight(expectation: float) -> float:
    """Unnormalized log reference weight of a circuit with the given energy."""
    return -float(expectation)


@dataclass
class PreferenceBatch:
    """M sampled circuits for one problem, ranked by exact expectation."""

    problem: IsingProblem
    sample: SampleBatch
    expectations: np.ndarray
    log_probs: torch.Tensor  # differentiable
    ref_logweights: np.ndarray
    w_best: int
    vocab: object = None

    @cached_property
    def circuits(self) -> list[Circuit]:
        return self.sample.circuits(self.vocab)

    @property
    def size(self) -> int:
        return len(self.expectations)


def build_preference_batch(
    model: GQCOModel,
    problem: IsingProblem,
    num_samples: int,
    temperature: float,
    generator: torch.Generator | None = None,
) -> PreferenceBatch:
    """Sample M circuits, simulate them, and attach differentiable log-probs."""
    sample = model.sample_circuits(problem, num_samples, SamplingConfig(temperature=temperature), generator)
    unitaries = token_unitaries(model.vocab, problem.n)
    states = simulate_token_batch(unitaries, sample.tokens.numpy())
    expectations = (np.abs(states) ** 2) @ basis_energies(problem)
    log_probs = model.sequence_log_probs(sample.tokens, sample.gate_counts, problem, temperature)
    return PreferenceBatch(
        problem=problem,
        sample=sample,
        expectations=expectations,
        log_probs=log_probs,
        ref_logweights=-expectations,
        w_best=int(np.argmin(expectations)),
        vocab=model.vocab,
    )


def dpo_pair_loss(batch: PreferenceBatch, w: int, l: int, beta: float) -> torch.Tensor:
    """Preference loss for one (preferred, other) pair; log(2) at zero margin."""
    if w == l:
        raise ValueError("w and l must differ")
    if batch.expectations[w] > batch.expectations[l]:
        raise ValueError(
            f"preference order violated: expectation[{w}]={batch.expectations[w]} "
            f"> expectation[{l}]={batch.expectations[l]}"
        )
    ref = torch.from_numpy(batch.ref_logweights)
    margin = (batch.log_probs[w] - ref[w]) - (batch.log_probs[l] - ref[l])
    return torch.nn.functional.softplus(-beta * margin)


def cpo_best_vs_others_loss(batch: PreferenceBatch, config: TrainConfig) -> torch.Tensor:
    """Mean pair loss of the best circuit against every other plus the anchor.

    The anchor is -log p(best) by default, or -p(best) when
    ``nll_variant="raw_prob"``.
    """
    if batch.size < 2:
        raise ValueError("preference batch needs at least 2 circuits")
    lp = batch.log_probs
    ref = torch.from_numpy(batch.ref_logweights)
    w = batch.w_best
    delta = (lp[w] - ref[w]) - (lp - ref)
    pair_losses = torch.nn.functional.softplus(-config.beta * delta)
    keep = torch.ones(batch.size, dtype=torch.bool)
    keep[w] = False
    mean_pairs = pair_losses[keep].mean()
    if config.nll_variant == "log_prob":
        anchor = -lp[w]
    else:
        anchor = -torch.exp(lp[w])
    return mean_pairs + anchor


def curriculum_advance(curriculum: CurriculumState, accuracy: float, threshold: float = 0.9) -> CurriculumState:
    """Raise the size cap by one when accuracy strictly exceeds the gate."""
    if accuracy > threshold:
        return replace(curriculum, n_max=curriculum.n_max + 1)
    return curriculum


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1)[0])


def candidate_states(model, problem: IsingProblem, num_samples: int, temperature: float, seed: int):
    """Sampled circuits and their final states for any circuit source.

    Fast path for GQCOModel uses the batched token simulator; other sources
    (oracle stubs) fall back to per-circuit simulation of ``generate()``.
    """
    if isinstance(model, GQCOModel):
        generator = torch.Generator().manual_seed(seed & 0x7FFFFFFFFFFFFFFF)
        sample = model.sample_circuits(problem, num_samples, SamplingConfig(temperature=temperature), generator)
        unitaries = token_unitaries(model.vocab, problem.n)
        states = simulate_token_batch(unitaries, sample.tokens.numpy())

        def circuit_at(idx: int) -> Circuit:
            return sample.circuit_at(model.vocab, idx)

        return states, circuit_at
    circuit_list = model.generate(problem, num_samples, temperature=temperature)
    states = np.stack([run_circuit(c) for c in circuit_list])

    def listed_circuit(idx: int) -> Circuit:
        return circuit_list[idx]

    return states, listed_circuit


def evaluate_accuracy(
    model,
    n: int,
    num_problems: int,
    num_samples: int,
    seed: int = 0,
    temperature: float = 2.0,
) -> float:
    """Fraction of random problems solved by lowest-expectation selection.

    For each problem, ``num_samples`` circuits are sampled at the evaluation
    temperature, the one with the smallest exact expectation is chosen, and
    its most probable basis state is compared against the brute-force oracle.
    """
    correct = 0
    for k in range(num_problems):
        problem = random_problem(n, rng_seed=_derived_seed(seed, k))
        states, _ = candidate_states(model, problem, num_samples, temperature, _derived_seed(seed, k, 1))
        expectations = (np.abs(states) ** 2) @ basis_energies(problem)
        chosen = int(np.argmin(expectations))
        answer = argmax_basis(states[chosen])
        if is_correct_solution(problem, answer):
            correct += 1
    return correct / num_problems


@dataclass
class StepMetrics:
    step: int
    n: int
    loss: float
    best_expectation: float
    optimality_gap: float | None
    accuracy: float | None = None

    def csv_row(self) -> list[str]:
        def fmt(x):
            return "" if x is None else format(x, ".17g")

        return [str(self.step), fmt(self.loss), fmt(self.best_expectation), fmt(self.optimality_gap), fmt(self.accuracy)]


class Trainer:
    """Owns the model, optimizer, curriculum, RNG streams, and run directory.

    All randomness flows from ``config.seed`` through two streams (a numpy
    generator for problems/sizes and a torch generator for sampling), so a
    fresh run with the same config reproduces metrics.csv byte for byte.
    """

    def __init__(
        self,
        model: GQCOModel,
        config: TrainConfig | None = None,
        run_dir: str | Path | None = None,
        curriculum: CurriculumState | None = None,
    ):
        self.model = model
        self.config = config or TrainConfig()
        self.curriculum = curriculum or CurriculumState(n_max=min(model.expert_sizes))
        self.rng = np.random.default_rng(self.config.seed)
        self.torch_generator = torch.Generator().manual_seed(_derived_seed(self.config.seed, 0x7C))
        self.optimizer = torch.optim.Adam(
            self.model.parameters(), lr=self.config.learning_rate, betas=self.config.adam_betas
        )
        self.step_count = 0
        self.accuracy_history: dict[int, list[tuple[int, float]]] = {}
        self.best_accuracy: dict[int, float] = {}
        self.run_dir = Path(run_dir) if run_dir is not None else None
        if self.run_dir is not None:
            self.run_dir.mkdir(parents=True, exist_ok=True)
            (self.run_dir / "checkpoints").mkdir(exist_ok=True)
            self._write_config()
            metrics = self.run_dir / "metrics.csv"
            if not metrics.exists():
                with open(metrics, "w", newline="") as fh:
                    csv.writer(fh).writerow(METRICS_COLUMNS)

    # ---- persistence ---------------------------------------------------

    def _write_config(self):
        payload = {
            "train": self.config.to_dict(),
            "model": asdict(self.model.config),
            "experts": list(self.model.expert_sizes),
        }
        with open(self.run_dir / "config.json", "w") as fh:
            json.dump(payload, fh, indent=2)

    def _append_metrics(self, metrics: StepMetrics):
        if self.run_dir is None:
            return
        with open(self.run_dir / "metrics.csv", "a", newline="") as fh:
            csv.writer(fh).writerow(metrics.csv_row())

    def _write_state(self, checkpoint_name: str | None = None):
        if self.run_dir is None:
            return
        state = {
            "step": self.step_count,
            "n_max": self.curriculum.n_max,
            "phase": self.curriculum.phase,
            "best_accuracy": {str(k): v for k, v in self.best_accuracy.items()},
        }
        if checkpoint_name is not None:
            state["latest_checkpoint"] = checkpoint_name
        else:
            previous = self._read_state()
            if previous and "latest_checkpoint" in previous:
                state["latest_checkpoint"] = previous["latest_checkpoint"]
        with open(self.run_dir / "state.json", "w") as fh:
            json.dump(state, fh, indent=2)

    def _read_state(self) -> dict | None:
        path = self.run_dir / "state.json" if self.run_dir else None
        if path and path.exists():
            return json.loads(path.read_text())
        return None

    def save_checkpoint(self, tag: str) -> Path | None:
        if self.run_dir is None:
            return None
        name = f"step{self.step_count:06d}_{tag}.gqco"
        path = self.run_dir / "checkpoints" / name
        save_checkpoint(self.model, path)
        self._write_state(checkpoint_name=name)
        return path

    # ---- training ------------------------------------------------------

    def _draw_size(self, fixed_n: int | None) -> int:
        if fixed_n is not None:
            n = fixed_n
        else:
            dist = size_distribution(self.curriculum.n_max)
            sizes = sorted(dist)
            n = int(self.rng.choice(sizes, p=[dist[s] for s in sizes]))
        if n not in self.config.M_per_n:
            raise ConfigurationError(f"no sample count configured for n={n}")
        return n

    def train_step(self, fixed_n: int | None = None) -> StepMetrics:
        n = self._draw_size(fixed_n)
        problem = random_problem(n, rng_seed=int(self.rng.integers(1 << 62)))
        batch = build_preference_batch(
            self.model, problem, self.config.M_per_n[n], self.config.T_train, self.torch_generator
        )
        loss = cpo_best_vs_others_loss(batch, self.config)
        self.optimizer.zero_grad(set_to_none=True)
        loss.backward()
        self.optimizer.step()
        self.step_count += 1
        best = float(batch.expectations[batch.w_best])
        gap = None
        if n <= BRUTE_GAP_MAX_N:
            gap = best - float(basis_energies(problem).min())
        return StepMetrics(
            step=self.step_count, n=n, loss=float(loss.detach()), best_expectation=best, optimality_gap=gap
        )

    def evaluate(self, n: int | None = None, num_problems: int | None = None, num_samples: int | None = None) -> float:
        n = n if n is not None else self.curriculum.n_max
        return evaluate_accuracy(
            self.model,
            n,
            num_problems if num_problems is not None else self.config.eval_problems,
            num_samples if num_samples is not None else self.config.eval_samples,
            seed=_derived_seed(self.config.seed, self.step_count, n),
            temperature=self.config.T_eval,
        )

    def _maybe_advance(self, accuracy: float) -> bool:
        advanced = curriculum_advance(self.curriculum, accuracy, self.config.accuracy_threshold)
        if advanced.n_max == self.curriculum.n_max:
            return False
        if advanced.n_max not in self.config.M_per_n:
            return False  # terminal stage: no sample budget configured beyond this size
        self.curriculum = advanced
        new_n = advanced.n_max
        self.model.add_expert(new_n, init="copy")
        new_params = list(self.model.select_expert(new_n).parameters())
        self.optimizer.add_param_group({"params": new_params})
        return True

    def run(self, steps: int, fixed_n: int | None = None, advance: bool = True) -> list[StepMetrics]:
        """Run training steps with periodic evaluation and curriculum gating."""
        history = []
        for _ in range(steps):
            metrics = self.train_step(fixed_n=fixed_n)
            if self.step_count % self.config.eval_frequency == 0:
                eval_n = fixed_n if fixed_n is not None else self.curriculum.n_max
                accuracy = self.evaluate(n=eval_n)
                metrics.accuracy = accuracy
                self.accuracy_history.setdefault(eval_n, []).append((self.step_count, accuracy))
                if accuracy > self.best_accuracy.get(eval_n, -1.0):
                    self.best_accuracy[eval_n] = accuracy
                    self.save_checkpoint(f"n{eval_n}_best")
                if advance and fixed_n is None and self._maybe_advance(accuracy):
                    self.save_checkpoint(f"advance_n{self.curriculum.n_max}")
            self._append_metrics(metrics)
            history.append(metrics)
        self._write_state()
        return history

    # ---- expert tuning ---------------------------------------------------

    def expert_tune(self, n: int, steps: int) -> list[StepMetrics]:
        """Fine-tune only the expert for size n; shared weights stay frozen."""
        expert = self.model.select_expert(n)
        expert_params = set(id(p) for p in expert.parameters())
        saved_optimizer = self.optimizer
        frozen = []
        for p in self.model.parameters():
            if id(p) not in expert_params and p.requires_grad:
                p.requires_grad_(False)
                frozen.append(p)
        self.curriculum = replace(self.curriculum, phase="expert_tuning")
        self.optimizer = torch.optim.Adam(
            expert.parameters(), lr=self.config.learning_rate, betas=self.config.adam_betas
        )
        try:
            history = self.run(steps, fixed_n=n, advance=False)
        finally:
            for p in frozen:
                p.requires_grad_(True)
            self.optimizer = saved_optimizer
        return history
