import json

import numpy as np
import pytest

from gqco.exceptions import ResourceError
from gqco.ising import (
    IsingProblem,
    basis_energies,
    basis_index_to_bits,
    bits_to_basis_index,
    bits_to_spins,
    brute_force_solve,
    energy,
    is_correct_solution,
    random_problem,
    spins_to_bits,
)


def test_random_problem_deterministic():
    a = random_problem(3, rng_seed=7)
    b = random_problem(3, rng_seed=7)
    assert np.array_equal(a.h, b.h)
    assert a.J == b.J


def test_random_problem_fully_connected_in_range():
    p = random_problem(3, rng_seed=11)
    assert p.h.shape == (3,)
    assert set(p.J) == {(0, 1), (0, 2), (1, 2)}
    assert np.all(np.abs(p.h) <= 1.0)
    assert all(abs(v) <= 1.0 for v in p.J.values())


def test_random_problem_mean_field_near_zero():
    # law of large numbers over 1000 seeds
    values = [random_problem(5, rng_seed=s).h[0] for s in range(1000)]
    assert abs(float(np.mean(values))) < 0.05


def test_random_problem_rejects_bad_n():
    with pytest.raises(ValueError):
        random_problem(2, rng_seed=0)
    with pytest.raises(ValueError):
        random_problem(21, rng_seed=0)


def test_energy_single_coupling():
    p = IsingProblem(n=2, h=np.zeros(2), J={(0, 1): 1.0})
    assert energy(p, np.array([1, 1])) == 1.0


def test_energy_all_zero_coefficients():
    p = IsingProblem(n=3, h=np.zeros(3), J={})
    assert energy(p, np.array([1, -1, 1])) == 0.0


def test_energy_hand_expanded():
    p = IsingProblem(
        n=3,
        h=np.array([0.5, -0.2, 0.1]),
        J={(0, 1): 0.3, (0, 2): -0.7, (1, 2): 0.4},
    )
    # J terms: 0.3*(+1*-1) + (-0.7)*(+1*+1) + 0.4*(-1*+1) = -1.4
    # h terms: 0.5*(+1) + (-0.2)*(-1) + 0.1*(+1) = 0.8
    assert energy(p, np.array([1, -1, 1])) == pytest.approx(-0.6, abs=1e-15)


def test_energy_accepts_bitstrings():
    p = IsingProblem(n=2, h=np.array([1.0, 0.0]), J={})
    assert energy(p, "10") == pytest.approx(-1.0)


def test_energy_length_mismatch():
    p = IsingProblem(n=2, h=np.zeros(2), J={})
    with pytest.raises(ValueError):
        energy(p, np.array([1, 1, 1]))


def test_brute_force_single_spin():
    p = IsingProblem(n=1, h=np.array([1.0]), J={})
    gt = brute_force_solve(p)
    assert gt.min_energy == -1.0
    assert gt.ground_states == ("1",)
    assert gt.degeneracy == 1


def test_brute_force_symmetric_ferromagnet():
    p = IsingProblem(n=2, h=np.zeros(2), J={(0, 1): -1.0})
    gt = brute_force_solve(p)
    assert gt.min_energy == -1.0
    assert set(gt.ground_states) == {"00", "11"}
    assert gt.degeneracy == 2


def test_brute_force_matches_exhaustive_energy():
    p = random_problem(4, rng_seed=123)
    energies = [energy(p, basis_index_to_bits(z, 4)) for z in range(16)]
    gt = brute_force_solve(p)
    assert gt.min_energy == pytest.approx(min(energies), abs=1e-12)
    for bits in gt.ground_states:
        assert energy(p, bits) == pytest.approx(gt.min_energy, abs=1e-12)


def test_brute_force_resource_bound():
    class Fake:
        n = 25

    p = IsingProblem(n=20, h=np.zeros(20), J={})
    object.__setattr__(p, "n", 25)
    with pytest.raises(ResourceError):
        brute_force_solve(p)


def test_is_correct_solution():
    p = IsingProblem(n=2, h=np.zeros(2), J={(0, 1): -1.0})
    assert is_correct_solution(p, "00")
    assert is_correct_solution(p, "11")
    assert not is_correct_solution(p, "01")
    with pytest.raises(ValueError):
        is_correct_solution(p, "0")


def test_spin_flip_symmetry_without_fields():
    for seed in range(5):
        p = random_problem(4, rng_seed=seed)
        q = IsingProblem(n=4, h=np.zeros(4), J=p.J)
        rng = np.random.default_rng(seed)
        s = rng.choice([-1, 1], size=4)
        assert energy(q, s) == pytest.approx(energy(q, -s), abs=1e-12)


def test_min_bounds_all_assignments():
    for n in range(2, 7):
        p = random_problem(max(n, 3), rng_seed=n) if n >= 3 else None
        if p is None:
            continue
        gt = brute_force_solve(p)
        for z in range(1 << p.n):
            assert gt.min_energy <= energy(p, basis_index_to_bits(z, p.n)) + 1e-12


def test_positive_scaling_preserves_argmin():
    p = random_problem(4, rng_seed=9)
    c = 3.7
    scaled = IsingProblem(n=4, h=c * p.h, J={k: c * v for k, v in p.J.items()})
    gt, gt_scaled = brute_force_solve(p), brute_force_solve(scaled)
    assert set(gt.ground_states) == set(gt_scaled.ground_states)
    assert gt_scaled.min_energy == pytest.approx(c * gt.min_energy, rel=1e-12)
    s = np.array([1, -1, -1, 1])
    assert energy(scaled, s) == pytest.approx(c * energy(p, s), rel=1e-12)


def test_basis_energies_matches_scalar_energy():
    p = random_problem(5, rng_seed=42)
    vec = basis_energies(p)
    for z in range(32):
        assert vec[z] == pytest.approx(energy(p, basis_index_to_bits(z, 5)), abs=1e-12)


def test_bit_spin_conversions():
    assert np.array_equal(bits_to_spins("01"), np.array([1, -1]))
    assert spins_to_bits([1, -1, 1]) == "010"
    assert basis_index_to_bits(1, 3) == "100"  # qubit 0 is LSB, printed leftmost
    assert bits_to_basis_index("100") == 1
    assert bits_to_basis_index(basis_index_to_bits(6, 3)) == 6


def test_problem_validation():
    with pytest.raises(ValueError):
        IsingProblem(n=2, h=np.zeros(3), J={})
    with pytest.raises(ValueError):
        IsingProblem(n=2, h=np.zeros(2), J={(1, 1): 0.5})
    with pytest.raises(ValueError):
        IsingProblem(n=2, h=np.zeros(2), J={(1, 0): 0.5})
    with pytest.raises(ValueError):
        IsingProblem(n=2, h=np.array([np.inf, 0.0]), J={})


def test_json_round_trip():
    p = random_problem(4, rng_seed=5)
    text = p.to_json()
    data = json.loads(text)
    assert data["n"] == 4
    assert [tuple(e[:2]) for e in data["J"]] == sorted(p.J)
    q = IsingProblem.from_json(text)
    assert np.array_equal(p.h, q.h)
    assert p.J == q.J
