"""Comparison algorithms: simulated annealing over the discrete codebook,
best-of-random phase draws, and continuous-phase projected gradient ascent.

All three score configurations with the same digital step (zero forcing plus
water filling), so differences against the main solver isolate the phase
selection.  Configurations that cannot separate the users score -inf.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import PhaseIndexMatrix, assemble_f, q_of_theta
from .digital import RankDeficientError, digital_beamforming

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling with single-element re-draw proposals."""

    t_initial: float = 1.0
    cooling: float = 0.999
    max_iters: int = 100_000

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0.0 < self.cooling < 1.0:
            raise ValueError("cooling must lie in (0, 1)")
        if self.t_initial < 0.0:
            raise ValueError("t_initial must be >= 0")


def _rate_of_f(f, cfg):
    try:
        return digital_beamforming(f, cfg.p_total, cfg.noise_power).sum_rate
    except RankDeficientError:
        return -math.inf


def sum_rate_of_thetas(channel, cfg, thetas):
    """Sum rate of an arbitrary (possibly off-codebook) phase grid."""
    f = np.einsum("ab,knab->kn", q_of_theta(np.asarray(thetas)),
                  channel.h_total) * cfg.phi_array()[:, None]
    return _rate_of_f(f, cfg)


def simulated_annealing(channel, cfg, schedule, rng):
    """Metropolis search over the discrete codebook; returns the best seen.

    Zero temperature degenerates to pure hill climbing.  Deterministic for a
    fixed generator state.
    """
    n_levels = 2 ** cfg.b_bits
    step = np.pi / 2.0 ** (cfg.b_bits - 1)
    phi = cfg.phi_array()
    # per-element channel slices let proposals update F incrementally
    slices = np.moveaxis(channel.h_total, (2, 3), (0, 1)) * phi[None, None, :, None]

    m = np.array(PhaseIndexMatrix.default_init(cfg.n_r, cfg.b_bits).m)
    f = np.einsum("ab,abkn->kn", q_of_theta(m * step), slices)
    current = _rate_of_f(f, cfg)
    best_m, best_rate = m.copy(), current

    temp = schedule.t_initial
    for _ in range(schedule.max_iters):
        l1 = int(rng.integers(cfg.n_r))
        l2 = int(rng.integers(cfg.n_r))
        new_level = int(rng.integers(n_levels))
        old_level = m[l1, l2]
        delta_q = q_of_theta(new_level * step) - q_of_theta(old_level * step)
        f_new = f + delta_q * slices[l1, l2]
        proposal = _rate_of_f(f_new, cfg)
        if proposal > best_rate:
            best_rate = proposal
            best_m = m.copy()
            best_m[l1, l2] = new_level
        gain = proposal - current
        accept = gain >= 0 or (temp > 0 and math.isfinite(gain)
                               and rng.random() < math.exp(gain / temp))
        if accept:
            m[l1, l2] = new_level
            f, current = f_new, proposal
        temp *= schedule.cooling
    return PhaseIndexMatrix(best_m, cfg.b_bits), float(best_rate)


def random_phase_search(channel, cfg, rng, draws):
    """Best of ``draws`` uniform codebook configurations."""
    if draws < 1:
        raise ValueError("draws must be >= 1")
    phi = cfg.phi_array()
    best_phases, best_rate = None, -math.inf
    for _ in range(draws):
        phases = PhaseIndexMatrix.random(cfg.n_r, cfg.b_bits, rng)
        rate = _rate_of_f(assemble_f(channel, phases, phi), cfg)
        if rate > best_rate:
            best_phases, best_rate = phases, rate
    return best_phases, float(best_rate)


def sum_rate_gradient(channel, cfg, thetas, h=1e-5):
    """Central-difference gradient of the sum rate w.r.t. each phase."""
    thetas = np.asarray(thetas, dtype=float)
    grad = np.zeros_like(thetas)
    it = np.nditer(thetas, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        bumped = thetas.copy()
        bumped[idx] = thetas[idx] + h
        up = sum_rate_of_thetas(channel, cfg, bumped)
        bumped[idx] = thetas[idx] - h
        down = sum_rate_of_thetas(channel, cfg, bumped)
        grad[idx] = (up - down) / (2.0 * h)
    return grad


def continuous_phase_ascent(channel, cfg, step, iters, init_thetas=None,
                            fd_step=1e-5):
    """Projected gradient ascent over continuous phases in [0, 2*pi).

    Returns the best iterate seen (which includes the starting point).
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    if init_thetas is None:
        thetas = np.full((cfg.n_r, cfg.n_r), np.pi / 2.0)
    else:
        thetas = np.asarray(init_thetas, dtype=float).copy()
    best_thetas = thetas.copy()
    best_rate = sum_rate_of_thetas(channel, cfg, thetas)
    for _ in range(iters):
        grad = sum_rate_gradient(channel, cfg, thetas, h=fd_step)
        thetas = np.mod(thetas + step * grad, TWO_PI)
        rate = sum_rate_of_thetas(channel, cfg, thetas)
        if rate > best_rate:
            best_rate = rate
            best_thetas = thetas.copy()
    return best_thetas, float(best_rate)


__all__ = ["AnnealSchedule", "simulated_annealing", "random_phase_search",
           "sum_rate_of_thetas", "sum_rate_gradient", "continuous_phase_ascent"]
