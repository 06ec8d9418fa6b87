import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_instance, random_channel
from risbf.channel import (PhaseIndexMatrix, assemble_f, load_channel,
                           q_of_theta, save_channel, synthesize_channel,
                           user_rates)
from risbf.config import build_geometry, default_config
from risbf.digital import digital_beamforming


def test_q_values_at_landmark_phases():
    assert q_of_theta(0.0) == pytest.approx((1 + 1j) / 2, abs=1e-15)
    assert abs(q_of_theta(0.0)) ** 2 == pytest.approx(0.5, abs=1e-15)
    assert q_of_theta(np.pi / 2) == pytest.approx(1j, abs=1e-15)
    assert abs(q_of_theta(np.pi / 2)) == pytest.approx(1.0, abs=1e-15)
    assert q_of_theta(3 * np.pi / 2) == pytest.approx(0.0, abs=1e-15)


@given(st.integers(min_value=1, max_value=6))
@settings(max_examples=20, deadline=None)
def test_q_injective_over_codebook(b):
    thetas = np.arange(2 ** b) * np.pi / 2.0 ** (b - 1)
    values = q_of_theta(thetas)
    assert np.unique(np.round(values, 12)).size == values.size


def test_phase_index_matrix_validation():
    with pytest.raises(ValueError):
        PhaseIndexMatrix(np.array([[0, 2], [0, 0]]), b_bits=1)
    with pytest.raises(ValueError):
        PhaseIndexMatrix(np.array([[0, 0, 0]]), b_bits=1)
    ph = PhaseIndexMatrix(np.array([[0, 1], [1, 0]]), b_bits=1)
    assert np.allclose(ph.thetas(), [[0.0, np.pi], [np.pi, 0.0]])
    assert PhaseIndexMatrix.default_init(2, 2).m[0, 0] == 1  # theta = pi/2


def test_pure_los_mode_equals_los_component():
    cfg, geom, chan = make_instance(seed=3, rician_on=False)
    assert np.array_equal(chan.h_total, chan.h_los)


def test_los_amplitude_constant_per_user():
    cfg, geom, chan = make_instance(seed=1, n_r=3, n_t=3, k_users=2)
    mags = np.abs(chan.h_los)
    for k in range(cfg.k_users):
        assert np.allclose(mags[k], chan.pathloss_los[k], rtol=1e-12)


def test_seeded_determinism_bit_identical():
    _, _, a = make_instance(seed=42)
    _, _, b = make_instance(seed=42)
    assert np.array_equal(a.h_total, b.h_total)
    _, _, c = make_instance(seed=43)
    assert not np.array_equal(a.h_total, c.h_total)


def test_scattered_component_variance_matches_pathloss_law():
    # pooled over elements and draws, the scattered term normalized by its
    # per-element path loss is CN(0, 1/(1+kappa))
    cfg = default_config(n_r=10, n_t=1, k_users=1, seed=0, kappa=4.0)
    geom = build_geometry(cfg, "exact")
    total_dist = geom.d_bs_ris[None] + geom.d_ris_user[:, None]
    pl = total_dist ** (-cfg.alpha)
    ratio = math.sqrt(cfg.kappa / (1.0 + cfg.kappa))
    samples = []
    for seed in range(1000):
        chan = synthesize_channel(cfg, geom, np.random.default_rng(seed))
        samples.append(((chan.h_total - ratio * chan.h_los) / pl).ravel())
    pooled = np.concatenate(samples)
    assert pooled.size == 100_000
    var = np.mean(np.abs(pooled) ** 2)
    assert var == pytest.approx(1.0 / (1.0 + cfg.kappa), rel=0.02)


def test_assemble_f_single_element_single_user():
    rng = np.random.default_rng(0)
    chan = random_channel(rng, 1, 1, 1)
    ph = PhaseIndexMatrix(np.array([[1]]), b_bits=2)  # theta = pi/2, q = j
    f = assemble_f(chan, ph, np.ones(1))
    assert f.shape == (1, 1)
    assert f[0, 0] == pytest.approx(1j * chan.h_total[0, 0, 0, 0], abs=1e-15)


def test_assemble_f_off_state_annihilates():
    rng = np.random.default_rng(1)
    chan = random_channel(rng, 2, 3, 2)
    ph = PhaseIndexMatrix.uniform(2, 2, 3)  # theta = 3*pi/2 everywhere
    f = assemble_f(chan, ph, np.ones(2))
    assert np.abs(f).max() < 1e-15


def test_assemble_f_matches_naive_double_loop(rng):
    chan = random_channel(rng, 2, 2, 2)
    ph = PhaseIndexMatrix(rng.integers(0, 4, size=(2, 2)), b_bits=2)
    phi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    f = assemble_f(chan, ph, phi)
    q = ph.q_values()
    naive = np.zeros((2, 2), dtype=complex)
    for k in range(2):
        for n in range(2):
            for l1 in range(2):
                for l2 in range(2):
                    naive[k, n] += q[l1, l2] * chan.h_total[k, n, l1, l2] * phi[k]
    assert np.abs(f - naive).max() < 1e-12


def test_assemble_f_superposition(rng):
    # per-element indicator configurations must add up to the full matrix
    chan = random_channel(rng, 2, 3, 2)
    ph = PhaseIndexMatrix(rng.integers(0, 2, size=(2, 2)), b_bits=1)
    phi = np.ones(2)
    total = assemble_f(chan, ph, phi)
    acc = np.zeros_like(total)
    q = ph.q_values()
    for l1 in range(2):
        for l2 in range(2):
            mask = np.zeros((2, 2), dtype=complex)
            mask[l1, l2] = q[l1, l2]
            acc += assemble_f(chan, mask, phi)
    assert np.abs(total - acc).max() < 1e-12


def test_user_rates_zero_precoder():
    rng = np.random.default_rng(2)
    f = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    assert np.all(user_rates(f, np.zeros((4, 3)), 1.0) == 0.0)


def test_user_rates_zero_forcing_closed_form(rng):
    f = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    sol = digital_beamforming(f, p_total=4.0, noise_power=0.5)
    rates = user_rates(f, sol.v_d, 0.5)
    assert np.allclose(rates, np.log2(1.0 + sol.p / 0.5), atol=1e-12)


def test_user_rates_matches_scalar_sinr_loop(rng):
    k, n_t = 3, 4
    f = rng.standard_normal((k, n_t)) + 1j * rng.standard_normal((k, n_t))
    v = rng.standard_normal((n_t, k)) + 1j * rng.standard_normal((n_t, k))
    sigma2 = 0.7
    rates = user_rates(f, v, sigma2)
    for i in range(k):
        signal = abs(np.dot(f[i], v[:, i])) ** 2
        interference = sum(abs(np.dot(f[i], v[:, j])) ** 2
                           for j in range(k) if j != i)
        expected = math.log2(1.0 + signal / (interference + sigma2))
        assert rates[i] == pytest.approx(expected, rel=1e-12)


def test_channel_dump_round_trip(tmp_path):
    _, _, chan = make_instance(seed=9, n_r=3, n_t=2, k_users=2)
    path = tmp_path / "chan.bin"
    save_channel(chan, path)
    loaded = load_channel(path)
    assert np.array_equal(loaded.h_total, chan.h_total)
    assert np.array_equal(loaded.h_los, chan.h_los)
    assert np.array_equal(loaded.pathloss_los, chan.pathloss_los)
    assert loaded.wave_number_beta == chan.wave_number_beta
