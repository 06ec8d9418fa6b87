"""Zero-forcing digital beamforming with exact water-filling power allocation."""

from dataclasses import dataclass

import numpy as np

from .config import _freeze

LOG2 = np.log(2.0)


class RankDeficientError(RuntimeError):
    """The transmission matrix cannot separate the users."""

    def __init__(self, sigma_min):
        super().__init__(f"transmission matrix is rank deficient (sigma_min={sigma_min:.3e})")
        self.sigma_min = float(sigma_min)


@dataclass(frozen=True)
class ZfSolution:
    """Zero-forcing precoder, allocated powers and the resulting sum rate."""

    v_tilde: np.ndarray   # (n_t, k) unnormalized ZF columns
    nu: np.ndarray        # (k,) diagonal of v_tilde^H v_tilde
    p: np.ndarray         # (k,) received powers
    mu: float             # water level
    v_d: np.ndarray       # (n_t, k) final precoder v_tilde * diag(sqrt(p))
    sum_rate: float

    def __post_init__(self):
        for name in ("v_tilde", "nu", "p", "v_d"):
            _freeze(self, name, getattr(self, name))


def zf_precoder(f, rank_rtol=1e-10):
    """Unnormalized zero-forcing precoder f^H (f f^H)^{-1}.

    Returns (v_tilde, nu).  Raises RankDeficientError when the smallest
    singular value falls below rank_rtol times the largest, which signals
    that the current surface configuration cannot separate the users.
    """
    f = np.asarray(f, dtype=complex)
    k, n_t = f.shape
    sv = np.linalg.svd(f, compute_uv=False)
    if k > n_t or sv[-1] <= rank_rtol * sv[0]:
        raise RankDeficientError(sv[-1] if k <= n_t else 0.0)
    gram = f @ f.conj().T
    x = np.linalg.solve(gram, f)
    # one refinement pass keeps the f @ v_tilde residual near machine level
    x += np.linalg.solve(gram, f - gram @ x)
    v_tilde = x.conj().T
    nu = np.einsum("nk,nk->k", v_tilde.conj(), v_tilde).real
    return v_tilde, nu


def water_filling(nu, p_total, noise_power):
    """Optimal received powers under the weighted budget sum(nu * p) <= p_total.

    Solves the allocation exactly by sorting the per-user floors and closing
    the active set in closed form, so the budget is met with equality up to
    rounding.  Returns (p, mu) with p_k = max(1/mu - nu_k sigma^2, 0) / nu_k.
    """
    nu = np.asarray(nu, dtype=float)
    if (nu <= 0).any():
        raise ValueError("all nu must be > 0")
    floors = nu * noise_power
    order = np.argsort(floors, kind="stable")
    sorted_floors = floors[order]
    k = nu.size
    water = p_total + sorted_floors[0]  # overwritten; m = 1 always feasible
    for m in range(k, 0, -1):
        water = (p_total + sorted_floors[:m].sum()) / m
        if water > sorted_floors[m - 1]:
            break
    consumed = np.maximum(water - floors, 0.0)
    return consumed / nu, 1.0 / water


def digital_beamforming(f, p_total, noise_power):
    """Zero-forcing precoder plus water-filling, packaged as one step."""
    v_tilde, nu = zf_precoder(f)
    p, mu = water_filling(nu, p_total, noise_power)
    v_d = v_tilde * np.sqrt(p)[None, :]
    sum_rate = float(np.sum(np.log1p(p / noise_power)) / LOG2)
    return ZfSolution(v_tilde=v_tilde, nu=nu, p=p, mu=mu, v_d=v_d,
                      sum_rate=sum_rate)


__all__ = ["RankDeficientError", "ZfSolution", "zf_precoder", "water_filling",
           "digital_beamforming"]
