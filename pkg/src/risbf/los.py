"""Pure line-of-sight design rules: when do the per-antenna links through the
surface become orthogonal, how large must the surface be for that to happen,
and can the scheme emulate a fully digital array.

The orthogonality rule pairs a geometric condition (the product of element
and antenna separations against wavelength and standoff distance) with a
phase condition (equal per-row sums of 1 + sin(theta)).  Both are evaluated
under the first-order (paraxial) distance expansion, which is where the
cancellation identity holds.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import q_of_theta
from .config import build_geometry


class DegenerateOrientationError(ValueError):
    """An array heading is perpendicular to the boresight plane."""


class DimensionMismatchError(ValueError):
    """Input matrices do not agree on their shared dimensions."""


def ris_size_threshold(cfg):
    """Surface side length at which the LoS links orthogonalize:
    wavelength * d_00 / (d_r1 * d_b * cos(theta_r) * cos(theta_b))."""
    cc = math.cos(cfg.theta_r) * math.cos(cfg.theta_b)
    if abs(cc) < 1e-12:
        raise DegenerateOrientationError("cos(theta_r) * cos(theta_b) vanishes")
    return cfg.wavelength * cfg.d_00 / (cfg.d_r1 * cfg.d_b * cc)


def required_antenna_separation(cfg, n_r=None):
    """Antenna spacing that satisfies the separation-product rule at size n_r."""
    n_r = cfg.n_r if n_r is None else n_r
    cc = math.cos(cfg.theta_r) * math.cos(cfg.theta_b)
    if abs(cc) < 1e-12:
        raise DegenerateOrientationError("cos(theta_r) * cos(theta_b) vanishes")
    return cfg.wavelength * cfg.d_00 / (n_r * cfg.d_r1 * cc)


def link_vectors(cfg, geom, phases):
    """Pure-LoS per-antenna link vectors across all surface elements.

    Entry [n, k, p] is the response of antenna n to user k through element p
    (flattened l1-major), with the common amplitude dropped since every use
    here is normalized.
    """
    q = phases.q_values() if hasattr(phases, "q_values") else q_of_theta(phases)
    total = geom.d_bs_ris[:, None, :, :] + geom.d_ris_user[None, :, :, :]
    vec = q[None, None, :, :] * np.exp(-1j * 2.0 * np.pi / cfg.wavelength * total)
    n_t, k = vec.shape[:2]
    return vec.reshape(n_t, k, -1)


def orthogonality_residual(cfg, geom, phases):
    """Worst normalized inner product between two same-user link vectors.

    0 means the links are orthogonal.  Meaningful under a pure-LoS channel;
    the design rule is stated for paraxial geometry.
    """
    if cfg.n_t == 1:
        return 0.0
    vec = link_vectors(cfg, geom, phases)
    norms = np.linalg.norm(vec, axis=2)
    worst = 0.0
    for na in range(cfg.n_t):
        for nb in range(na + 1, cfg.n_t):
            inner = np.abs(np.einsum("kp,kp->k", vec[na].conj(), vec[nb]))
            denom = norms[na] * norms[nb]
            worst = max(worst, float((inner / denom).max()))
    return worst


def fully_digital_achievability(h_fd, v_fd, cfg):
    """Can free element responses reproduce a fully digital beamformer?

    ``h_fd`` (K x P) is the element-to-user channel of the hypothetical fully
    digital array and ``v_fd`` (P x K) its precoder.  The checker treats the
    element responses as free complex values, reconstructs the per-antenna
    steering from the configured geometry (first P elements) and solves the
    matching equations in least squares.  Achievable requires the normalized
    residual below 1e-8, at least K*N_t free responses, and N_t >= K (fewer
    antennas cannot reach the required rank).

    Returns (achievable, residual, q) with q the solved responses.
    """
    h_fd = np.asarray(h_fd, dtype=complex)
    v_fd = np.asarray(v_fd, dtype=complex)
    if h_fd.ndim != 2 or v_fd.ndim != 2:
        raise DimensionMismatchError("h_fd and v_fd must be matrices")
    k, p = h_fd.shape
    if v_fd.shape != (p, k):
        raise DimensionMismatchError(
            f"v_fd shape {v_fd.shape} does not match h_fd {h_fd.shape}")
    if k != cfg.k_users:
        raise DimensionMismatchError("h_fd rows must equal k_users")
    if cfg.n_t < k:
        return False, math.inf, None
    if p > cfg.n_r ** 2:
        raise DimensionMismatchError("more responses than configured elements")

    geom = build_geometry(cfg, "exact")
    bs_phase = np.exp(-1j * 2.0 * np.pi / cfg.wavelength
                      * geom.d_bs_ris.reshape(cfg.n_t, -1)[:, :p])
    target = h_fd @ v_fd
    # one equation per (user m, stream n): sum_p q_p h_fd[m,p] bs[n,p] = target[m,n]
    a = (h_fd[:, None, :] * bs_phase[None, :k, :]).reshape(k * k, p)
    t = target.reshape(k * k)
    q, *_ = np.linalg.lstsq(a, t, rcond=None)
    residual = float(np.linalg.norm(a @ q - t) / max(np.linalg.norm(t), 1e-300))
    achievable = residual < 1e-8 and p >= k * cfg.n_t
    return achievable, residual, q


@dataclass(frozen=True)
class LosDesignReport:
    """Closed-form design quantities plus residuals for a phase choice."""

    threshold_size: float
    required_separation_product: float
    actual_separation_product: float
    required_d_b: float
    row_balance: np.ndarray      # per-row sums of 1 + sin(theta)
    row_balance_spread: float
    orthogonality: float


def build_los_report(cfg, phases=None):
    if phases is None:
        from .channel import PhaseIndexMatrix
        phases = PhaseIndexMatrix.default_init(cfg.n_r, cfg.b_bits)
    threshold = ris_size_threshold(cfg)
    cc = math.cos(cfg.theta_r) * math.cos(cfg.theta_b)
    required_product = cfg.wavelength * cfg.d_00 / (cfg.n_r * cc)
    balance = (1.0 + np.sin(phases.thetas())).sum(axis=1)
    geom = build_geometry(cfg, "paraxial")
    return LosDesignReport(
        threshold_size=threshold,
        required_separation_product=required_product,
        actual_separation_product=cfg.d_r1 * cfg.d_b,
        required_d_b=required_antenna_separation(cfg),
        row_balance=balance,
        row_balance_spread=float(balance.max() - balance.min()),
        orthogonality=orthogonality_residual(cfg, geom, phases))


__all__ = [
    "DegenerateOrientationError", "DimensionMismatchError",
    "ris_size_threshold", "required_antenna_separation", "link_vectors",
    "orthogonality_residual", "fully_digital_achievability",
    "LosDesignReport", "build_los_report",
]
