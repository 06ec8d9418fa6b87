import math

import numpy as np
import pytest

from conftest import make_instance
from risbf.baselines import random_phase_search
from risbf.channel import PhaseIndexMatrix, assemble_f, user_rates
from risbf.driver import TRACE_COLUMNS, maximize_sum_rate


def test_infinite_threshold_stops_after_one_digital_step():
    cfg, _, chan = make_instance(seed=0)
    trace = maximize_sum_rate(cfg, chan, eps=math.inf)
    assert len(trace.records) == 1
    assert trace.converged
    assert trace.records[0].t == 0
    assert math.isnan(trace.records[0].w_star)


def test_rate_sequence_monotone_and_converges():
    for seed in (0, 1, 2, 3):
        cfg, _, chan = make_instance(seed=seed)
        trace = maximize_sum_rate(cfg, chan, eps=1e-3, max_iter=20)
        rates = trace.sum_rates
        assert np.all(np.diff(rates) >= -1e-9)
        assert trace.converged
        assert len(trace.records) <= 21


def test_beats_random_baseline_on_shared_instance():
    cfg, _, chan = make_instance(seed=5)
    trace = maximize_sum_rate(cfg, chan, eps=1e-3, max_iter=20)
    _, rate_random = random_phase_search(chan, cfg, np.random.default_rng(0), 8)
    assert trace.final.sum_rate >= rate_random - 1e-9


def test_chained_step_inequalities_hold_on_trace():
    # the full chain (phase step at the frozen precoder, then the digital
    # refresh) holds on this seeded instance; only the end-to-end inequality
    # is guaranteed unconditionally, and the next test covers that
    cfg, _, chan = make_instance(seed=2)
    trace = maximize_sum_rate(cfg, chan, eps=1e-6, max_iter=10)
    assert len(trace.records) >= 2
    for prev, rec in zip(trace.records, trace.records[1:]):
        assert rec.rate_fixed_precoder >= prev.sum_rate - 1e-9
        assert rec.sum_rate >= rec.rate_fixed_precoder - 1e-9
        assert rec.sum_rate >= prev.sum_rate - 1e-9


def test_end_to_end_rate_never_regresses_across_seeds():
    for seed in range(8):
        cfg, _, chan = make_instance(seed=seed)
        trace = maximize_sum_rate(cfg, chan, eps=1e-6, max_iter=10)
        for prev, rec in zip(trace.records, trace.records[1:]):
            assert rec.sum_rate >= prev.sum_rate - 1e-9


def test_recorded_mid_rate_matches_direct_evaluation():
    cfg, _, chan = make_instance(seed=2)
    trace = maximize_sum_rate(cfg, chan, eps=1e-6, max_iter=5)
    assert len(trace.records) >= 2
    first, second = trace.records[0], trace.records[1]
    f_old = assemble_f(chan, first.phases, cfg.phi_array())
    from risbf.digital import digital_beamforming
    digital_old = digital_beamforming(f_old, cfg.p_total, cfg.noise_power)
    f_new = assemble_f(chan, second.phases, cfg.phi_array())
    direct = float(user_rates(f_new, digital_old.v_d, cfg.noise_power).sum())
    assert second.rate_fixed_precoder == pytest.approx(direct, rel=1e-12)


def test_deterministic_under_fixed_seed():
    cfg, _, chan = make_instance(seed=9)
    a = maximize_sum_rate(cfg, chan, eps=1e-3, max_iter=20)
    b = maximize_sum_rate(cfg, chan, eps=1e-3, max_iter=20)
    assert np.array_equal(a.sum_rates, b.sum_rates)
    assert np.array_equal(a.final.phases.m, b.final.phases.m)


def test_three_user_instance_runs_clean():
    for seed in (0, 1):
        cfg, _, chan = make_instance(seed=seed, k_users=3, n_t=3)
        trace = maximize_sum_rate(cfg, chan, eps=1e-3, max_iter=20)
        assert np.all(np.diff(trace.sum_rates) >= -1e-9)
        assert trace.converged


def test_custom_init_phases_are_respected():
    cfg, _, chan = make_instance(seed=4)
    init = PhaseIndexMatrix.uniform(cfg.n_r, cfg.b_bits, 1)
    trace = maximize_sum_rate(cfg, chan, init_phases=init, eps=math.inf)
    assert np.array_equal(trace.records[0].phases.m, init.m)


def test_trace_csv_round_trips_columns(tmp_path):
    cfg, _, chan = make_instance(seed=0)
    trace = maximize_sum_rate(cfg, chan, eps=1e-3, max_iter=3)
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert len(lines) == len(trace.records) + 1


def test_rank_deficient_initial_configuration_raises():
    from risbf.digital import RankDeficientError
    # one surface element gives a rank-one pure-LoS channel: two users
    # cannot be separated (scattering would restore the rank)
    cfg, _, chan = make_instance(seed=0, n_r=1, k_users=2, n_t=2,
                                 rician_on=False)
    with pytest.raises(RankDeficientError):
        maximize_sum_rate(cfg, chan, eps=1e-3)
