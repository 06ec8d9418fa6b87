"""Surface element responses, per-element channels, the end-to-end
transmission matrix and user rates.

The per-element gain tensor has shape (k_users, n_t, n_r, n_r): entry
``h[k, n, l1, l2]`` is the gain of the antenna-n -> element-(l1,l2) -> user-k
path.  The dominant reflected path carries a common amplitude per user (the
element-to-element spread is negligible against the total path length); the
scattered remainder enters as an independent complex Gaussian term weighted
by the Ricean factor.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .config import _freeze

LOG2 = np.log(2.0)


def q_of_theta(theta):
    """Element response (j + e^{j theta}) / 2.

    theta = pi/2 is the max-amplitude state (|q| = 1); theta = 3*pi/2 turns
    the element off (q = 0).  Accepts scalars or arrays.
    """
    return (1j + np.exp(1j * np.asarray(theta))) / 2.0


@dataclass(frozen=True)
class PhaseIndexMatrix:
    """Integer phase indices, one per surface element.

    Entry m in {0, ..., 2^b - 1} encodes the phase m * pi / 2^(b-1).
    """

    m: np.ndarray
    b_bits: int

    def __post_init__(self):
        m = np.asarray(self.m, dtype=int)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("phase index matrix must be square")
        if (m < 0).any() or (m >= 2 ** self.b_bits).any():
            raise ValueError(f"phase indices must lie in [0, {2 ** self.b_bits})")
        _freeze(self, "m", m)

    @property
    def n_r(self):
        return self.m.shape[0]

    def thetas(self):
        return self.m * np.pi / 2.0 ** (self.b_bits - 1)

    def q_values(self):
        return q_of_theta(self.thetas())

    @classmethod
    def uniform(cls, n_r, b_bits, index=0):
        return cls(np.full((n_r, n_r), index, dtype=int), b_bits)

    @classmethod
    def default_init(cls, n_r, b_bits):
        """All elements near the max-|q| state (exact for b >= 2)."""
        idx = min(2 ** b_bits - 1, round(2.0 ** (b_bits - 2)))
        return cls.uniform(n_r, b_bits, idx)

    @classmethod
    def random(cls, n_r, b_bits, rng):
        return cls(rng.integers(0, 2 ** b_bits, size=(n_r, n_r)), b_bits)


@dataclass(frozen=True)
class ChannelTensor:
    """Per-element complex gains plus bookkeeping scalars.

    ``h_los`` is the deterministic reflected-path tensor, ``h_total`` the
    Ricean mixture actually used downstream (equal to ``h_los`` when the
    scattered term is disabled).
    """

    h_los: np.ndarray        # (k, n_t, n_r, n_r) complex
    h_total: np.ndarray      # (k, n_t, n_r, n_r) complex
    pathloss_los: np.ndarray  # (k,) common amplitude per user
    wave_number_beta: float

    def __post_init__(self):
        for name in ("h_los", "h_total", "pathloss_los"):
            _freeze(self, name, getattr(self, name))
        if self.h_los.shape != self.h_total.shape:
            raise ValueError("h_los and h_total shapes differ")

    @property
    def k_users(self):
        return self.h_total.shape[0]

    @property
    def n_t(self):
        return self.h_total.shape[1]

    @property
    def n_r(self):
        return self.h_total.shape[2]

    def element_stack(self):
        """h_total reshaped to (n_r^2, k, n_t), element index p = l1*n_r + l2."""
        k, n_t, n_r, _ = self.h_total.shape
        return np.moveaxis(self.h_total.reshape(k, n_t, n_r * n_r), -1, 0)

    def save(self, path):
        save_channel(self, path)

    @classmethod
    def load(cls, path):
        return load_channel(path)


def synthesize_channel(cfg, geom, rng=None):
    """Draw the per-element channel tensor for one instance.

    Deterministic for a fixed (cfg, seed): the channel is the only RNG
    consumer and pulls one stream from cfg.seed unless an explicit generator
    is supplied.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    total_dist = geom.d_bs_ris[None, :, :, :] + geom.d_ris_user[:, None, :, :]
    # common amplitude per user, referenced to the (0, 0) pair
    amp = (cfg.d_00 + geom.d_ris_user[:, 0, 0]) ** (-cfg.alpha)
    phase = np.exp(-1j * cfg.beta * (2.0 * np.pi / cfg.wavelength) * total_dist)
    h_los = amp[:, None, None, None] * phase
    if cfg.rician_on:
        shape = h_los.shape
        gauss = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
        pl_nlos = total_dist ** (-cfg.alpha)
        h_total = (np.sqrt(cfg.kappa / (1.0 + cfg.kappa)) * h_los
                   + np.sqrt(1.0 / (1.0 + cfg.kappa)) * pl_nlos * gauss)
    else:
        h_total = h_los.copy()
    return ChannelTensor(h_los=h_los, h_total=h_total, pathloss_los=amp,
                         wave_number_beta=cfg.beta)


def assemble_f(channel, phases, phi=None):
    """End-to-end K x N_t transmission matrix.

    Sums q_{l1,l2} * (H_{l1,l2} o Phi) over all elements, where Phi has
    constant rows phi[k].  Linear in every element response.
    """
    q = phases.q_values() if isinstance(phases, PhaseIndexMatrix) else np.asarray(phases)
    if q.shape != channel.h_total.shape[2:]:
        raise ValueError("phase grid does not match the channel tensor")
    f = np.einsum("ab,knab->kn", q, channel.h_total)
    if phi is not None:
        f = f * np.asarray(phi)[:, None]
    return f


def user_rates(f, v_d, noise_power):
    """Per-user achievable rates log2(1 + SINR) in bits/s/Hz."""
    gains = f @ v_d
    power = np.abs(gains) ** 2
    signal = np.diag(power)
    interference = power.sum(axis=1) - signal
    sinr = signal / (interference + noise_power)
    return np.log1p(sinr) / LOG2


# --- regression-fixture dump -------------------------------------------------
#
# Layout: one ASCII header line b"RISCHAN1 k n_t n_r\n", then little-endian
# float64 blocks in order: pathloss_los (k), wave_number_beta (1), h_los and
# h_total as row-major re/im interleaved pairs.

_MAGIC = b"RISCHAN1"


def _write_complex(fh, arr):
    flat = np.ascontiguousarray(arr, dtype=complex).view(np.float64)
    fh.write(flat.astype("<f8", copy=False).tobytes())


def save_channel(channel, path):
    k, n_t, n_r, _ = channel.h_total.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC + f" {k} {n_t} {n_r}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(channel.pathloss_los, dtype="<f8").tobytes())
        fh.write(struct.pack("<d", channel.wave_number_beta))
        _write_complex(fh, channel.h_los)
        _write_complex(fh, channel.h_total)


def load_channel(path):
    with open(path, "rb") as fh:
        header = fh.readline().split()
        if not header or header[0] != _MAGIC:
            raise ValueError("not a channel dump file")
        k, n_t, n_r = (int(v) for v in header[1:])
        pathloss = np.frombuffer(fh.read(8 * k), dtype="<f8")
        beta = struct.unpack("<d", fh.read(8))[0]
        n = k * n_t * n_r * n_r
        h_los = np.frombuffer(fh.read(16 * n), dtype="<f8").view(complex)
        h_total = np.frombuffer(fh.read(16 * n), dtype="<f8").view(complex)
    shape = (k, n_t, n_r, n_r)
    return ChannelTensor(h_los=h_los.reshape(shape), h_total=h_total.reshape(shape),
                         pathloss_los=pathloss, wave_number_beta=beta)


__all__ = [
    "q_of_theta", "PhaseIndexMatrix", "ChannelTensor", "synthesize_channel",
    "assemble_f", "user_rates", "save_channel", "load_channel",
]
