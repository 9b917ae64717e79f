import itertools
import math

import numpy as np
import pytest
from scipy import stats

from hypercell.directions import (
    Isotropic, atom_mass, atoms_of, cos2theta_density, delta_max, describe, discrete, from_record,
    mixture, n_min, sample_directions, supp_condition_atoms,
)
from hypercell.errors import ConfigError, EnvelopeViolation, SupportTooLarge
from hypercell.geometry import delta_d, delta_d_batch, spanning_margin_lp

AXES2 = discrete([((1, 0), 0.5), ((0, 1), 0.5)])


def at_angles(degrees):
    k = len(degrees)
    return discrete([((math.cos(math.radians(a)), math.sin(math.radians(a))), 1 / k) for a in degrees])


def brute_n_min(dist):
    """Smallest positively spanning subset found with the LP margin alone."""
    S = dist.signed_support()
    for size in range(dist.dim + 1, len(S) + 1):
        for combo in itertools.combinations(range(len(S)), size):
            if spanning_margin_lp(S[list(combo)]) > 1e-9:
                return size
    return None


# --- sampling ---------------------------------------------------------------


def test_discrete_frequencies():
    rng = np.random.default_rng(11)
    N = 100_000
    X = sample_directions(AXES2, rng, N)
    targets = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    counts = [int(np.all(np.isclose(X, t), axis=1).sum()) for t in targets]
    assert sum(counts) == N
    sigma = math.sqrt(N * 0.25 * 0.75)
    for c in counts:
        assert abs(c - N / 4) < 3 * sigma


def test_isotropic_angles_uniform():
    rng = np.random.default_rng(12)
    N = 50_000
    X = sample_directions(Isotropic(2), rng, N)
    theta = np.mod(np.arctan2(X[:, 1], X[:, 0]), 2 * np.pi)
    D = stats.kstest(theta / (2 * np.pi), "uniform").statistic
    assert D < 1.36 / math.sqrt(N)
    assert np.allclose(np.linalg.norm(X, axis=1), 1.0)


def test_cos2theta_matches_analytic_cdf():
    dens = cos2theta_density(2, 0.5, bound=1.5 / (2 * math.pi))
    # oracle: integrate rho numerically and compare with the closed form
    grid = np.linspace(0, 2 * np.pi, 20_001)
    rho = (1 + 0.5 * np.cos(2 * grid)) / (2 * np.pi)
    numeric = np.concatenate([[0], np.cumsum((rho[1:] + rho[:-1]) / 2 * np.diff(grid))])
    closed = grid / (2 * np.pi) + np.sin(2 * grid) / (8 * np.pi)
    assert np.abs(numeric - closed).max() < 1e-8

    rng = np.random.default_rng(13)
    N = 50_000
    X = sample_directions(dens, rng, N)
    theta = np.mod(np.arctan2(X[:, 1], X[:, 0]), 2 * np.pi)
    D = stats.kstest(theta, lambda t: t / (2 * np.pi) + np.sin(2 * t) / (8 * np.pi)).statistic
    assert D < 1.5 * 1.36 / math.sqrt(N)


def test_envelope_violation_detected():
    dens = cos2theta_density(2, 0.5, bound=1.0 / (2 * math.pi))
    with pytest.raises(EnvelopeViolation):
        sample_directions(dens, np.random.default_rng(0), 1000)


def test_cos2theta_3d_normalised():
    dens = cos2theta_density(3, 0.7)
    z, w = np.polynomial.legendre.leggauss(200)
    U = np.column_stack([np.sqrt(1 - z ** 2), np.zeros_like(z), z])
    assert abs(float((dens.pdf(U) * w).sum()) * 2 * np.pi - 1) < 1e-12


@pytest.mark.parametrize("dist", [Isotropic(2), AXES2, cos2theta_density(2, 0.5),
                                  mixture([(0.5, Isotropic(3)), (0.5, discrete([((0, 0, 1), 1.0)], check_span=False))])])
def test_evenness(dist):
    rng = np.random.default_rng(14)
    N = 40_000
    X = sample_directions(dist, rng, N)
    # each coordinate has variance at most 1, so 4/sqrt(N) is beyond 3 sigma per axis
    assert np.linalg.norm(X.mean(axis=0)) <= 4 / math.sqrt(N) * math.sqrt(dist.dim)


# --- atoms ----------------------------------------------------------------------


def test_atom_mass_examples():
    assert atom_mass(AXES2, (1, 0)) == 0.5
    assert atom_mass(AXES2, (-1, 0)) == 0.5
    assert atom_mass(Isotropic(2), (0.6, 0.8)) == 0.0
    mix = mixture([(0.5, Isotropic(2)), (0.5, discrete([((1, 0), 1.0)], check_span=False))])
    assert atom_mass(mix, (1, 0)) == 0.5
    assert atom_mass(mix, (0, 1)) == 0.0


def test_atom_masses_sum_to_discrete_weight():
    d = at_angles([0, 45, 100, 170])
    assert abs(sum(m for _, m in atoms_of(d)) - 1) < 1e-12
    mix = mixture([(0.3, Isotropic(2)), (0.7, d)])
    assert abs(sum(m for _, m in atoms_of(mix)) - 0.7) < 1e-12


def test_discrete_merges_antipodes_and_checks_mass():
    d = discrete([((1, 0), 0.25), ((-1, 0), 0.25), ((0, 1), 0.5)])
    assert len(d.atoms) == 2 and atom_mass(d, (1, 0)) == 0.5
    with pytest.raises(ConfigError):
        discrete([((1, 0), 0.5), ((0, 1), 0.4)])
    with pytest.raises(ConfigError):
        discrete([((1, 0), 1.0)])


# --- n_min and the support condition ----------------------------------------------


def test_n_min_examples():
    assert n_min(AXES2) == 4
    axes3 = discrete([((1, 0, 0), 1 / 3), ((0, 1, 0), 1 / 3), ((0, 0, 1), 1 / 3)])
    assert n_min(axes3) == 6
    assert n_min(Isotropic(2)) == 3
    assert n_min(Isotropic(3)) == 4
    tri = at_angles([0, 60, 120])
    assert n_min(tri) == 3 == brute_n_min(tri)


def test_supp_condition_examples():
    assert not supp_condition_atoms(AXES2)
    mix = mixture([(0.5, Isotropic(2)), (0.5, discrete([((1, 0), 1.0)], check_span=False))])
    assert supp_condition_atoms(mix)
    assert supp_condition_atoms(at_angles([0, 60, 120]))


def test_n_min_agrees_with_brute_force_on_random_supports():
    rng = np.random.default_rng(15)
    for _ in range(40):
        k = int(rng.integers(2, 6))
        angles = rng.uniform(0, 180, k)
        d = at_angles(angles)
        got = n_min(d)
        assert got == brute_n_min(d)
        assert got >= 3
        assert (got == 3) == supp_condition_atoms(d)


def test_n_min_rotation_invariant():
    rng = np.random.default_rng(16)
    for _ in range(20):
        angles = rng.uniform(0, 180, 3)
        shift = rng.uniform(0, 360)
        assert n_min(at_angles(angles)) == n_min(at_angles(angles + shift))


def test_support_cap():
    with pytest.raises(SupportTooLarge):
        n_min(at_angles(np.linspace(0, 179, 21)))


# --- delta_max -------------------------------------------------------------------


def test_delta_max_examples():
    assert abs(delta_max(Isotropic(2)) - 3 * math.sqrt(3) / 4) < 1e-12
    tri = at_angles([0, 60, 120])
    S = tri.signed_support()
    best = max(delta_d(S[list(c)]) for c in itertools.combinations(range(6), 3))
    assert abs(delta_max(tri) - best) < 1e-12
    assert abs(delta_max(Isotropic(3)) - 8 / (9 * math.sqrt(3))) < 1e-12


@pytest.mark.parametrize("dist", [Isotropic(2), Isotropic(3), cos2theta_density(2, 0.5), at_angles([0, 60, 120])])
def test_delta_max_is_an_envelope(dist):
    rng = np.random.default_rng(17)
    d = dist.dim
    U = sample_directions(dist, rng, 10_000 * (d + 1)).reshape(10_000, d + 1, d)
    assert delta_d_batch(U).max() <= delta_max(dist) + 1e-12


# --- config records ------------------------------------------------------------------


@pytest.mark.parametrize("rec", [
    {"type": "isotropic"},
    {"type": "discrete", "atoms": [{"dir": [1.0, 0.0], "mass": 0.5}, {"dir": [0.0, 1.0], "mass": 0.5}]},
    {"type": "density", "kind": "cos2theta", "amplitude": 0.5, "bound": 1.5 / (2 * math.pi)},
    {"type": "mixture", "parts": [{"weight": 0.5, "dist": {"type": "isotropic"}},
                                  {"weight": 0.5, "dist": {"type": "discrete",
                                                           "atoms": [{"dir": [1.0, 0.0], "mass": 1.0}]}}]},
])
def test_record_round_trip(rec):
    dist = from_record(rec, 2)
    assert describe(from_record(describe(dist), 2)) == describe(dist)


def test_unknown_record_type():
    with pytest.raises(ConfigError):
        from_record({"type": "vonmises"}, 2)
