"""Ising problems: random instances, energies, and the exact brute-force oracle.

Conventions used throughout the package:

* A problem couples ``n`` spin variables with external fields ``h[i]`` and
  pair couplings ``J[(i, j)]`` for ``i < j``; the cost of a spin assignment
  ``s`` (entries in {+1, -1}) is ``sum_{i<j} J_ij s_i s_j + sum_i h_i s_i``.
* Bit 0 corresponds to spin +1 and bit 1 to spin -1 (``s = 1 - 2*b``).
* Basis index ``z`` stores qubit/variable 0 in its least significant bit;
  printed bitstrings put variable 0 leftmost.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ResourceError

N_MAX_SUPPORTED = 20
BRUTE_FORCE_LIMIT = 24
MIN_RANDOM_N = 3


@dataclass(frozen=True, eq=False)
class IsingProblem:
    """Coefficients of one Ising-form optimization instance."""

    n: int
    h: np.ndarray
    J: dict[tuple[int, int], float]

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise ValueError(f"n must be an integer, got {self.n!r}")
        if not 1 <= self.n <= N_MAX_SUPPORTED:
            raise ValueError(f"n must be in [1, {N_MAX_SUPPORTED}], got {self.n}")
        h = np.asarray(self.h, dtype=np.float64)
        if h.shape != (self.n,):
            raise ValueError(f"h must have shape ({self.n},), got {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("h contains non-finite entries")
        J: dict[tuple[int, int], float] = {}
        for key, value in self.J.items():
            i, j = key
            if not 0 <= i < j < self.n:
                raise ValueError(f"J key {key} violates 0 <= i < j < n={self.n}")
            v = float(value)
            if not np.isfinite(v):
                raise ValueError(f"J[{key}] is non-finite")
            J[(int(i), int(j))] = v
        h.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", dict(sorted(J.items())))

    def coefficient_matrix(self) -> np.ndarray:
        """Symmetric n x n matrix with fields on the diagonal (heat-map layout)."""
        m = np.diag(self.h).astype(np.float64)
        for (i, j), v in self.J.items():
            m[i, j] = m[j, i] = v
        return m

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "h": [float(v) for v in self.h],
            "J": [[i, j, v] for (i, j), v in sorted(self.J.items())],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IsingProblem":
        J = {(int(i), int(j)): float(v) for i, j, v in data.get("J", [])}
        return cls(n=int(data["n"]), h=np.asarray(data["h"], dtype=np.float64), J=J)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "IsingProblem":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GroundTruth:
    """Exact minimum of a problem and every bitstring attaining it."""

    min_energy: float
    ground_states: tuple[str, ...]

    @property
    def degeneracy(self) -> int:
        return len(self.ground_states)


def random_problem(n: int, rng_seed: int) -> IsingProblem:
    """Draw a fully connected problem with i.i.d. Uniform[-1, 1] coefficients.

    Draw order is fixed (h first, then J in lexicographic pair order) so a
    seed reproduces the same instance bit-for-bit on every call.
    """
    if not MIN_RANDOM_N <= n <= N_MAX_SUPPORTED:
        raise ValueError(f"n must be in [{MIN_RANDOM_N}, {N_MAX_SUPPORTED}], got {n}")
    rng = np.random.default_rng(rng_seed)
    h = rng.uniform(-1.0, 1.0, size=n)
    J = {}
    for i in range(n):
        for j in range(i + 1, n):
            J[(i, j)] = float(rng.uniform(-1.0, 1.0))
    return IsingProblem(n=n, h=h, J=J)


def bits_to_spins(bits) -> np.ndarray:
    """'0110' or an array of bits -> array of spins with s = 1 - 2*b."""
    if isinstance(bits, str):
        if not set(bits) <= {"0", "1"}:
            raise ValueError(f"bitstring must contain only 0/1, got {bits!r}")
        b = np.array([int(c) for c in bits], dtype=np.int64)
    else:
        b = np.asarray(bits, dtype=np.int64)
        if not np.all((b == 0) | (b == 1)):
            raise ValueError("bits must be 0 or 1")
    return 1 - 2 * b


def spins_to_bits(spins) -> str:
    s = np.asarray(spins, dtype=np.int64)
    if not np.all(np.abs(s) == 1):
        raise ValueError("spins must be +1 or -1")
    return "".join("0" if v == 1 else "1" for v in s)


def energy(problem: IsingProblem, assignment) -> float:
    """Cost of one spin assignment (array of +-1, or a bitstring)."""
    if isinstance(assignment, str):
        s = bits_to_spins(assignment)
    else:
        s = np.asarray(assignment, dtype=np.int64)
        if not np.all(np.abs(s) == 1):
            raise ValueError("spins must be +1 or -1")
    if s.shape != (problem.n,):
        raise ValueError(f"assignment length {s.shape} does not match n={problem.n}")
    total = float(np.dot(problem.h, s))
    for (i, j), v in problem.J.items():
        total += v * s[i] * s[j]
    return float(total)


def basis_index_to_bits(z: int, n: int) -> str:
    """Basis index -> bitstring with variable 0 printed leftmost."""
    return "".join(str((z >> i) & 1) for i in range(n))


def bits_to_basis_index(bits: str) -> int:
    return sum((1 << i) for i, c in enumerate(bits) if c == "1")


def basis_energies(problem: IsingProblem) -> np.ndarray:
    """Energies of all 2^n basis states, indexed by basis index."""
    n = problem.n
    if n > BRUTE_FORCE_LIMIT:
        raise ResourceError(f"enumeration of 2^{n} states exceeds limit 2^{BRUTE_FORCE_LIMIT}")
    z = np.arange(1 << n, dtype=np.int64)
    spins = 1 - 2 * ((z[:, None] >> np.arange(n)) & 1)
    energies = spins @ problem.h
    for (i, j), v in problem.J.items():
        energies = energies + v * (spins[:, i] * spins[:, j])
    return energies


def brute_force_solve(problem: IsingProblem) -> GroundTruth:
    """Exact minimum by full enumeration (n <= 24)."""
    energies = basis_energies(problem)
    min_energy = float(energies.min())
    states = tuple(
        basis_index_to_bits(int(z), problem.n) for z in np.nonzero(energies == min_energy)[0]
    )
    return GroundTruth(min_energy=min_energy, ground_states=states)


CORRECTNESS_ATOL = 1e-12


def is_correct_solution(problem: IsingProblem, bits: str, ground_truth: GroundTruth | None = None) -> bool:
    """True iff the bitstring attains the exact minimum within 1e-12 absolute.

    Any degenerate ground state counts. ``ground_truth`` may be passed to
    avoid re-running the enumeration.
    """
    if len(bits) != problem.n:
        raise ValueError(f"bitstring length {len(bits)} does not match n={problem.n}")
    if ground_truth is None:
        ground_truth = brute_force_solve(problem)
    return bool(abs(energy(problem, bits) - ground_truth.min_energy) <= CORRECTNESS_ATOL)
