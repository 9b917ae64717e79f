import math

import numpy as np
import pytest
from scipy import stats

from hypercell.directions import Isotropic, ProcessParams, cos2theta_density, discrete, mixture, sample_directions
from hypercell.errors import UnsupportedDistribution
from hypercell.functionals import inradius
from hypercell.geometry import delta_d_batch, half_sphere_test, in_P_batch
from hypercell.rng import RandomStream
from hypercell.samplers import (
    facet_normals_in_support, inball_batch, sample_environment, sample_inradius, sample_simplex_directions_batch,
    sample_typical_cell_inball, sample_window_tessellation, window_batch,
)

ISO2 = ProcessParams(1.0, Isotropic(2), 2)
AXES2 = discrete([((1, 0), 0.5), ((0, 1), 0.5)])


def gen(seed, stream=0):
    return RandomStream(seed, stream).generator()


# --- inradius ----------------------------------------------------------------------


def test_inradius_exp2_mean():
    x = sample_inradius(2.0, None, gen(1), size=1_000_000)
    assert abs(x.mean() - 0.5) < 3 * 0.5 / math.sqrt(len(x))


def test_truncated_inradius_law():
    N = 50_000
    x = sample_inradius(1.0, 0.1, gen(2), size=N)
    assert x.max() < 0.1 and x.min() > 0
    D = stats.kstest(x, lambda t: -np.expm1(-t) / -math.expm1(-0.1)).statistic
    assert D < 1.36 / math.sqrt(N)


@pytest.mark.parametrize("a", [0.5, 1.0])
def test_inradius_cdf_within_binomial_ci(a):
    from hypercell.estimators import wilson_interval

    x = sample_inradius(1.0, None, gen(3), size=100_000)
    lo, hi = wilson_interval(int((x < a).sum()), len(x))
    assert lo <= -math.expm1(-a) <= hi


# --- environment ------------------------------------------------------------------------


def test_environment_poisson_moments():
    rng = gen(4)
    counts = np.array([len(sample_environment(ISO2, (0.0, 1.0), rng)) for _ in range(100_000)])
    n = len(counts)
    assert abs(counts.mean() - 1) < 3 / math.sqrt(n)
    # var of the sample variance of Poisson(1) is about (mu4 - sigma^4)/n = 3/n
    assert abs(counts.var() - 1) < 3 * math.sqrt(3 / n)


def test_environment_misses_inball():
    rng = gen(5)
    for _ in range(2000):
        env = sample_environment(ISO2, (0.7, 3.0), rng)
        assert np.all(env.offsets > 0.7) and np.all(env.offsets <= 3.0)
        assert np.allclose(np.linalg.norm(env.normals, axis=1), 1.0) if len(env) else True


def test_environment_superposition():
    rng = gen(6)
    whole_counts, whole_offsets, split_counts, split_offsets = [], [], [], []
    for _ in range(20_000):
        e = sample_environment(ISO2, (0.0, 2.0), rng)
        whole_counts.append(len(e))
        whole_offsets.extend(e.offsets)
        e1 = sample_environment(ISO2, (0.0, 1.0), rng)
        e2 = sample_environment(ISO2, (1.0, 2.0), rng)
        split_counts.append(len(e1) + len(e2))
        split_offsets.extend(e1.offsets)
        split_offsets.extend(e2.offsets)
    assert stats.ks_2samp(whole_offsets, split_offsets).pvalue > 0.05
    table = np.array([np.bincount(whole_counts, minlength=12)[:12], np.bincount(split_counts, minlength=12)[:12]])
    table = table[:, table.sum(axis=0) >= 10]
    assert stats.chi2_contingency(table).pvalue > 0.05


def test_invalid_shell():
    with pytest.raises(ValueError):
        sample_environment(ISO2, (1.0, 1.0), gen(0))


# --- simplex directions -------------------------------------------------------------------


def test_simplex_directions_size_biased():
    N = 40_000
    acc = sample_simplex_directions_batch(Isotropic(2), gen(7), N)
    assert np.all(in_P_batch(acc))
    assert all(half_sphere_test(t) for t in acc[:200])
    plain = np.random.default_rng(8).normal(size=(4 * N, 3, 2))
    plain /= np.linalg.norm(plain, axis=-1, keepdims=True)
    plain = plain[in_P_batch(plain)]
    d_acc, d_plain = delta_d_batch(acc), delta_d_batch(plain)
    se = math.sqrt(d_acc.var() / len(d_acc) + d_plain.var() / len(d_plain))
    assert d_acc.mean() - d_plain.mean() > 3 * se
    # the biased law has density proportional to Delta, so E_acc[1/Delta] = P_plain(P) / E_plain[Delta 1_P]
    assert abs(np.mean(1 / d_acc) / (1 / d_plain.mean()) - 1) < 0.05


def test_simplex_directions_rotation_invariant():
    N = 20_000
    acc = sample_simplex_directions_batch(Isotropic(2), gen(9), N)
    total = np.mod(np.arctan2(acc[..., 1], acc[..., 0]).sum(axis=1), 2 * np.pi)
    assert stats.kstest(total / (2 * np.pi), "uniform").pvalue > 0.05


def test_simplex_directions_reject_pure_discrete():
    with pytest.raises(UnsupportedDistribution):
        sample_simplex_directions_batch(AXES2, gen(0), 10)


# --- inball sampler ---------------------------------------------------------------------------


@pytest.mark.parametrize("params", [ISO2, ProcessParams(1.0, cos2theta_density(2, 0.5), 2),
                                    ProcessParams(2.0, Isotropic(3), 3)])
def test_inball_tangency(params):
    cells, st = inball_batch(params, 60, gen(10))
    assert st.dropped == 0
    d = params.dim
    for s in cells:
        ib = inradius(s.cell)
        assert abs(ib.radius - s.inball_r) < 1e-9
        assert np.linalg.norm(ib.center) < 1e-9
        dist = s.cell.bounds
        assert np.sum(np.abs(dist - s.inball_r) <= 1e-9) == d + 1
        assert np.all(dist >= s.inball_r - 1e-9)
        assert s.fcount >= d + 1
        assert abs(s.functionals["Inradius"] - s.inball_r) < 1e-12


def test_inball_exponential_inradius():
    cells, _ = inball_batch(ISO2, 4000, gen(11))
    r = np.array([s.inball_r for s in cells])
    assert stats.kstest(r, "expon").pvalue > 0.01


def test_inball_cap_matches_conditioned_uncapped():
    capped, _ = inball_batch(ISO2, 3000, gen(12), a_cap=0.05)
    assert all(inradius(s.cell).radius < 0.05 for s in capped[:300])
    assert all(s.inball_r < 0.05 for s in capped)
    # uncapped cells with r < 0.05, rescaled by r, share the shape law with the capped ones
    free, _ = inball_batch(ISO2, 60_000, gen(13))
    sub = [s for s in free if s.inball_r < 0.05]
    assert len(sub) > 2000
    phi_c = [s.functionals["PhiContent"] for s in capped]
    phi_f = [s.functionals["PhiContent"] for s in sub]
    assert stats.ks_2samp(phi_c, phi_f).pvalue > 0.05


def test_single_inball_draw_is_valid():
    s = sample_typical_cell_inball(ISO2, 0.3, gen(14))
    assert s.origin == "InballSampler" and s.inball_r < 0.3 and s.conditioned_a == 0.3
    rec = s.record(1, 2)
    assert set(rec) == {"origin", "seed", "stream", "slot", "fcount", "inball_r", "functionals", "summary",
                        "conditioned_a", "dropped"}


def test_inball_conditioning_on_sigma():
    cells, st = inball_batch(ISO2, 300, gen(15), sigma="Circumradius", a=0.1)
    assert all(s.functionals["Circumradius"] < 0.1 for s in cells)
    assert st.rejected_sigma > 0 and st.accepted == 300


def test_inball_rejects_atoms():
    mix = ProcessParams(1.0, mixture([(0.5, Isotropic(2)), (0.5, AXES2)]), 2)
    with pytest.raises(UnsupportedDistribution):
        inball_batch(mix, 1, gen(0))


def test_inball_deterministic():
    a, _ = inball_batch(ISO2, 50, gen(16, 3))
    b, _ = inball_batch(ISO2, 50, gen(16, 3))
    assert [s.record(16, 3) for s in a] == [s.record(16, 3) for s in b]
    c, _ = inball_batch(ISO2, 50, gen(16, 4))
    assert [s.inball_r for s in a] != [s.inball_r for s in c]


# --- window sampler ----------------------------------------------------------------------------


def test_window_axes_gives_parallelograms():
    params = ProcessParams(1.0, AXES2, 2)
    cells, st = window_batch(params, 3, 30.0, gen(17))
    assert len(cells) > 100 and st.dropped == 0
    assert all(s.fcount == 4 for s in cells)
    assert all(facet_normals_in_support(s, AXES2) for s in cells)
    for s in cells[:50]:
        assert np.linalg.norm(s.cell.vertices.mean(axis=0)) < 1e-9


def test_window_cells_are_inside_and_centred():
    cells = sample_window_tessellation(ISO2, 20.0, gen(18))
    for s in cells:
        assert s.origin == "WindowSampler" and s.center_kind == "Centroid"
        assert abs(inradius(s.cell, resolve_ties=False).radius - s.inball_r) < 1e-12


def test_window_mean_fcount_and_chi_squared_vs_inball():
    w, _ = window_batch(ISO2, 40, 40.0, gen(19))
    f_w = np.array([s.fcount for s in w])
    # windows are internally correlated: treat each window as one replicate
    assert abs(f_w.mean() - 4) < 0.1
    ib, _ = inball_batch(ISO2, 20_000, gen(20))
    f_i = np.array([s.fcount for s in ib])
    assert abs(f_i.mean() - 4) < 3 * f_i.std() / math.sqrt(len(f_i))
    bins = lambda f: [np.sum(f == 3), np.sum(f == 4), np.sum(f == 5), np.sum(f >= 6)]
    # thin the window sample to reduce within-window dependence
    table = np.array([bins(f_w[::3]), bins(f_i)])
    assert stats.chi2_contingency(table).pvalue > 0.05


def test_window_rejects_3d():
    with pytest.raises(UnsupportedDistribution):
        sample_window_tessellation(ProcessParams(1.0, Isotropic(3), 3), 10.0, gen(0))


def test_window_boundary_cells_are_cells_of_all_lines():
    from hypercell.samplers import _Shells, _boundary_cells

    rng = gen(21)
    R = 15.0
    count = rng.poisson(R)
    offsets = R * (1.0 - rng.random(count))
    normals = sample_directions(Isotropic(2), rng, count)
    shells = _Shells(ISO2, R, rng)
    cells = [c for c in _boundary_cells(normals, offsets, R, 0.9 * R, shells) if c is not None]
    assert len(cells) > 5
    N = np.vstack([normals] + shells.normals)
    T = np.concatenate([offsets] + shells.offsets)
    reach = shells.radii[-1]
    for cell in cells:
        V = cell.vertices
        assert np.linalg.norm(V, axis=1).max() < reach
        # no known line crosses the interior, and each edge lies on one of them
        side = V @ N.T - T
        assert np.all((side <= 1e-9).all(axis=0) | (side >= -1e-9).all(axis=0))
        for u in cell.normals:
            assert np.abs(np.abs(N @ u) - 1).min() < 1e-12
        # it reaches beyond the window, otherwise the arrangement would have closed it
        assert np.linalg.norm(V, axis=1).max() > R
