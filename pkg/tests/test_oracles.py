"""Tests for the independent reference layer.

These routes must stay independent of the kernel-expansion code paths, so
they are validated against hand algebra, closed forms, and statistics of
the samplers themselves.
"""

import numpy as np
import pytest

from mzgle.kernels import StatsKind, SystemSpec, dyson_coeffs, reduce
from mzgle.linalg import expm_dense
from mzgle.models import build_chain_system, build_path, build_wave_model, WaveModelSpec
from mzgle.oracles import (affine_rep, exact_mean, mc_mean, operator_oracle,
                           vacf_analytic_l2, vacf_matrix_exp)


def oscillator():
    a = np.array([[0.0, -1.0], [1.0, 0.0]])
    return SystemSpec(A=a, init_mean=np.zeros(2),
                      stats_kind=StatsKind.BERNE_EQUILIBRIUM_QUADRATIC)


def random_system(dim=6, seed=21):
    g = np.random.Generator(np.random.PCG64(seed))
    a = g.normal(size=(dim, dim)) * 0.5
    mean = g.normal(size=dim)
    return SystemSpec(A=a, init_mean=mean, stats_kind=StatsKind.CHORIN_INITIAL)


# ------------------------------------------------------- operator algebra


def test_projection_idempotent_and_complementary():
    for sys_, idx in ((oscillator(), 1), (random_system(), 2)):
        rep = affine_rep(sys_, idx)
        p, q = rep.P_rep, rep.Q_rep
        assert np.max(np.abs(p @ p - p)) == 0.0
        assert np.max(np.abs(q @ q - q)) < 1e-15
        assert np.max(np.abs(p + q - np.eye(rep.dim))) == 0.0
        assert np.max(np.abs(p @ q)) < 1e-15


def test_generator_annihilates_constants():
    rep = affine_rep(random_system(), 1)
    const = np.zeros(rep.dim)
    const[0] = 1.0
    assert np.max(np.abs(rep.L_rep @ const)) == 0.0


def test_word_order_is_mathematical():
    sys_ = random_system()
    rep = affine_rep(sys_, 1)
    pl = operator_oracle(sys_, ("P", "L"), 1)
    assert np.max(np.abs(pl - rep.P_rep @ rep.L_rep)) == 0.0
    lq = operator_oracle(sys_, ("L", "Q"), 1)
    assert np.max(np.abs(lq - rep.L_rep @ rep.Q_rep)) == 0.0


def test_unknown_symbol_rejected():
    with pytest.raises(ValueError):
        operator_oracle(random_system(), ("P", "X"), 1)


def test_memory_coefficients_match_projected_words():
    # the reduced-formula coefficients g_j = bvec . (M11^T)^j avec and the
    # forcing coefficients must agree with matrix elements of P L (Q L)^j
    sys_ = random_system()
    for idx in (1, 4):
        r = reduce(sys_, idx)
        exp = dyson_coeffs(r, 6)
        rep = affine_rep(sys_, idx)
        o = idx
        for j in range(7):
            word = ("P", "L") + ("Q", "L") * (j + 1)
            vec = operator_oracle(sys_, word, idx) @ rep.observable(idx)
            assert abs(vec[o] - exp.g[j]) < 1e-10
            assert abs(vec[0] - exp.f[j]) < 1e-10
        # the bare P L word carries the streaming pair (a, b)
        vec0 = operator_oracle(sys_, ("P", "L"), idx) @ rep.observable(idx)
        assert abs(vec0[o] - r.a) < 1e-12
        assert abs(vec0[0] - r.b) < 1e-12


def test_berne_projection_drops_constants_and_positions():
    sys_ = build_chain_system(build_path(6), clamp=(1, 6))
    rep = affine_rep(sys_, 2)
    v = np.ones(rep.dim)
    proj = rep.P_rep @ v
    assert proj[0] == 0.0
    assert proj[2] == 1.0
    assert np.sum(np.abs(proj)) == 1.0


# ------------------------------------------------------------------- VACF


def test_oscillator_autocorrelation_is_cosine():
    tr = vacf_matrix_exp(oscillator(), 1, np.linspace(0.0, 10.0, 101))
    assert abs(tr.values[0] - 1.0) == 0.0
    assert np.max(np.abs(tr.values - np.cos(tr.times))) < 1e-12


def test_analytic_l2_values():
    assert abs(vacf_analytic_l2(0.0) - 1.0) == 0.0
    assert abs(vacf_analytic_l2(1.0) - 0.18989505933366718) < 1e-12
    grid = np.linspace(0.0, 5.0, 11)
    vals = vacf_analytic_l2(grid, omega=2.0)
    assert vals.shape == grid.shape
    with pytest.raises(ValueError):
        vacf_analytic_l2(-1.0)


def test_long_interior_chain_matches_analytic_form():
    # 100 interior oscillators with fixed walls: tagged-momentum
    # autocorrelation approaches the infinite-chain closed form
    sys_ = build_chain_system(build_path(102), clamp=(1, 102))
    grid = np.linspace(0.0, 10.0, 201)
    tr = vacf_matrix_exp(sys_, 1, grid)
    ref = vacf_analytic_l2(grid)
    assert np.max(np.abs(tr.values - ref)) < 5e-3


def test_autocorrelation_bounded_by_one():
    sys_ = build_chain_system(build_path(30), clamp=(1, 30))
    grid = np.linspace(0.0, 50.0, 501)
    tr = vacf_matrix_exp(sys_, 5, grid)
    assert np.max(np.abs(tr.values)) <= 1.0 + 1e-10


def test_vacf_requires_doubled_momentum_observable():
    with pytest.raises(ValueError):
        vacf_matrix_exp(oscillator(), 2, np.linspace(0.0, 1.0, 5))
    bad = SystemSpec(A=np.array([[0.1, -1.0], [1.0, 0.0]]),
                     init_mean=np.zeros(2),
                     stats_kind=StatsKind.CHORIN_INITIAL)
    with pytest.raises(ValueError):
        vacf_matrix_exp(bad, 1, np.linspace(0.0, 1.0, 5))


# ------------------------------------------------------------------ means


def test_exact_mean_matches_dense_exponential():
    sys_ = random_system()
    grid = np.linspace(0.0, 3.0, 31)
    tr = exact_mean(sys_, 3, grid)
    for i, t in enumerate(grid):
        ref = (expm_dense(sys_.A, float(t)) @ sys_.init_mean)[2]
        assert abs(tr.values[i] - ref) < 1e-11


def test_exact_mean_override():
    sys_ = random_system()
    mu = np.arange(1.0, 7.0)
    grid = np.linspace(0.0, 1.0, 5)
    tr = exact_mean(sys_, 1, grid, init_mean=mu)
    assert abs(tr.values[0] - 1.0) < 1e-14


def test_mc_mean_deterministic_sampler_is_exact():
    sys_ = random_system()
    mu = sys_.init_mean

    def degenerate(rng, n_samples=1):
        return np.tile(mu, (n_samples, 1))

    grid = np.linspace(0.0, 2.0, 21)
    mc = mc_mean(sys_, degenerate, 2, grid, n_samples=16, seed=0)
    exact = exact_mean(sys_, 2, grid)
    assert np.max(np.abs(mc.trajectory.values - exact.values)) < 1e-12
    assert np.max(mc.stderr) < 1e-13


def test_mc_mean_seeded_and_stderr_scaling():
    wave = build_wave_model(WaveModelSpec(n_modes=9, n_random_modes=9,
                                          rng_seed=0))
    grid = np.linspace(0.0, 1.0, 6)
    a = mc_mean(wave.system, wave.sampler, wave.sensor_index, grid,
                n_samples=400, seed=5)
    b = mc_mean(wave.system, wave.sampler, wave.sensor_index, grid,
                n_samples=400, seed=5)
    assert np.array_equal(a.trajectory.values, b.trajectory.values)
    wide = mc_mean(wave.system, wave.sampler, wave.sensor_index, grid,
                   n_samples=6400, seed=5)
    ratio = np.median(a.stderr[1:] / wide.stderr[1:])
    assert 2.5 < ratio < 5.5  # 16x samples: stderr shrinks ~4x


def test_mc_mean_covers_zero_mean_population():
    wave = build_wave_model(WaveModelSpec(n_modes=9, n_random_modes=9,
                                          rng_seed=0))
    grid = np.linspace(0.0, 2.0, 9)
    mc = mc_mean(wave.system, wave.sampler, wave.sensor_index, grid,
                 n_samples=2000, seed=11)
    # population mean is identically zero: the estimate must sit within a
    # few standard errors of it
    assert np.all(np.abs(mc.trajectory.values[1:]) < 4.0 * mc.stderr[1:])
