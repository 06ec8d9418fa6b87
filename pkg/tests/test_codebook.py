import numpy as np
import pytest

from conftest import random_channel
from risbf.channel import PhaseIndexMatrix, assemble_f
from risbf.codebook import (GramExpansion, InconsistentPairError,
                            NotInCodebookError, PhaseCodebook,
                            gram_affine_expansion, ordered_pairs, pair_grams)


def test_axis_layout_b1():
    cb = PhaseCodebook.build(1)
    assert cb.length == 3
    assert np.allclose(cb.a, [-np.pi, 0.0, np.pi])
    assert list(cb.e_mask) == [1, 0, 0]
    assert np.allclose(cb.phase_values(), [0.0, np.pi])


def test_axis_layout_b2():
    cb = PhaseCodebook.build(2)
    assert cb.length == 7
    assert np.allclose(cb.phase_values(), [0.0, np.pi / 2, np.pi, 3 * np.pi / 2])
    assert cb.e_mask.sum() == 3
    assert (np.diff(cb.a) > 0).all()
    # tables are constructed directly from the angle axis
    assert np.array_equal(cb.c, np.cos(cb.a))
    assert np.array_equal(cb.s, np.sin(cb.a))


def test_encode_pi_at_b1():
    cb = PhaseCodebook.build(1)
    x = cb.encode(np.pi)
    assert x @ cb.c == pytest.approx(-1.0, abs=1e-15)
    assert x @ cb.s == pytest.approx(0.0, abs=1e-15)
    assert cb.e_mask @ x == 0


@pytest.mark.parametrize("b", [1, 2, 3, 4])
def test_round_trip_all_codewords(b):
    cb = PhaseCodebook.build(b)
    for theta in cb.phase_values():
        assert cb.decode(cb.encode(theta)) == theta


def test_off_grid_phase_rejected():
    cb = PhaseCodebook.build(2)
    with pytest.raises(NotInCodebookError):
        cb.encode(0.1)
    with pytest.raises(NotInCodebookError):
        cb.encode(-np.pi / 2)  # negative angles are not codebook phases


def test_pair_onehot_linking_identity():
    cb = PhaseCodebook.build(2)
    for t1 in cb.phase_values():
        for t2 in cb.phase_values():
            x1, x2 = cb.encode(t1), cb.encode(t2)
            y = cb.pair_onehot(t1, t2)
            assert y.sum() == 1
            assert cb.a @ (x1 - x2) == pytest.approx(cb.a @ y, abs=1e-12)


def test_pair_gram_hermitian_symmetry(rng):
    chan = random_channel(rng, 3, 4, 2)
    grams = pair_grams(chan.element_stack(), np.ones(3), rng.uniform(0.5, 2.0, 3))
    n_el = grams.shape[0]
    for p in range(n_el):
        for q in range(n_el):
            assert np.allclose(grams[p, q], grams[q, p].conj().T, atol=1e-12)


def _direct_gram(chan, phases, phi, powers):
    f = assemble_f(chan, phases, phi)
    f_t = f / np.sqrt(powers)[:, None]
    return f_t @ f_t.conj().T


def test_expansion_all_equal_phases(rng):
    # g(theta, theta) = 2 + 2 sin(theta): diagonal of the whitened product
    chan = random_channel(rng, 2, 2, 2)
    powers = np.ones(2)
    cb = PhaseCodebook.build(2)
    grams = pair_grams(chan.element_stack(), np.ones(2), powers)
    exp = GramExpansion(grams, cb)
    for level in range(4):
        ph = PhaseIndexMatrix.uniform(2, 2, level)
        xs, ys = exp.selectors_for(ph.thetas().ravel())
        value = exp.evaluate(xs, ys)
        direct = _direct_gram(chan, ph, np.ones(2), powers)
        assert np.abs(value - direct).max() < 1e-12


def test_expansion_off_state_vanishes(rng):
    chan = random_channel(rng, 2, 3, 2)
    cb = PhaseCodebook.build(2)
    grams = pair_grams(chan.element_stack(), np.ones(2), np.ones(2))
    exp = GramExpansion(grams, cb)
    ph = PhaseIndexMatrix.uniform(2, 2, 3)  # q = 0 everywhere
    xs, ys = exp.selectors_for(ph.thetas().ravel())
    assert np.abs(exp.evaluate(xs, ys)).max() < 1e-12


def test_expansion_matches_direct_product_randomized(rng):
    for _ in range(25):
        k = int(rng.integers(1, 4))
        n_t = int(rng.integers(k, k + 3))
        n_r = int(rng.integers(1, 3))
        b = int(rng.integers(1, 3))
        chan = random_channel(rng, k, n_t, n_r)
        phi = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        powers = rng.uniform(0.5, 2.0, k)
        cb = PhaseCodebook.build(b)
        grams = pair_grams(chan.element_stack(), phi, powers)
        exp = GramExpansion(grams, cb)
        ph = PhaseIndexMatrix(rng.integers(0, 2 ** b, size=(n_r, n_r)), b)
        xs, ys = exp.selectors_for(ph.thetas().ravel())
        value = exp.evaluate(xs, ys)
        direct = _direct_gram(chan, ph, phi, powers)
        assert np.abs(value - direct).max() < 1e-12


def test_expansion_is_affine_by_superposition(rng):
    # each entry must respond linearly when a one-hot mass is interpolated
    chan = random_channel(rng, 2, 2, 2)
    cb = PhaseCodebook.build(1)
    grams = pair_grams(chan.element_stack(), np.ones(2), np.ones(2))
    exp = GramExpansion(grams, cb)
    ph_a = PhaseIndexMatrix.uniform(2, 1, 0)
    ph_b = PhaseIndexMatrix(np.array([[1, 0], [0, 0]]), 1)
    xa, ya = exp.selectors_for(ph_a.thetas().ravel())
    xb, yb = exp.selectors_for(ph_b.thetas().ravel())
    ga = exp.evaluate(xa, ya, check=False)
    gb = exp.evaluate(xb, yb, check=False)
    lam = 0.37
    mixed = exp.evaluate(lam * xa + (1 - lam) * xb, lam * ya + (1 - lam) * yb,
                         check=False)
    assert np.abs(mixed - (lam * ga + (1 - lam) * gb)).max() < 1e-12


def test_inconsistent_pair_rejected(rng):
    chan = random_channel(rng, 2, 2, 2)
    cb = PhaseCodebook.build(2)
    grams = pair_grams(chan.element_stack(), np.ones(2), np.ones(2))
    exp = GramExpansion(grams, cb)
    ph = PhaseIndexMatrix(np.array([[0, 1], [2, 3]]), 2)
    xs, ys = exp.selectors_for(ph.thetas().ravel())
    ys_bad = ys.copy()
    ys_bad[0] = np.roll(ys_bad[0], 1)  # wrong difference for pair (0, 1)
    with pytest.raises(InconsistentPairError):
        exp.evaluate(xs, ys_bad)


def test_pair_contribution_conjugates_on_swap(rng):
    chan = random_channel(rng, 2, 2, 2)
    grams = pair_grams(chan.element_stack(), np.ones(2), np.ones(2))
    cb = PhaseCodebook.build(2)
    thetas = np.array([0.0, np.pi / 2, np.pi, 3 * np.pi / 2])
    q = (1j + np.exp(1j * thetas)) / 2.0
    for (p, r) in ordered_pairs(4):
        fwd = grams[p, r] * (q[p] * q[r].conjugate())
        rev = grams[r, p] * (q[r] * q[p].conjugate())
        assert np.allclose(fwd, rev.conj().T, atol=1e-12)


def test_one_shot_function_wrapper(rng):
    chan = random_channel(rng, 2, 2, 1)
    cb = PhaseCodebook.build(1)
    grams = pair_grams(chan.element_stack(), np.ones(2), np.ones(2))
    ph = PhaseIndexMatrix(np.array([[1]]), 1)
    exp = GramExpansion(grams, cb)
    xs, ys = exp.selectors_for(ph.thetas().ravel())
    a = gram_affine_expansion(grams, xs, ys, cb)
    b = exp.evaluate(xs, ys)
    assert np.allclose(a, b, atol=1e-15)
