"""System parameters and array geometry for the reflecting-surface downlink simulator.

Coordinate convention: antenna 0 of the transmit array sits at the origin and
the surface reference element (0, 0) sits at distance ``d_00`` along +y.  Both
array headings ``theta_b`` and ``theta_r`` are measured in the x-y plane from
the +x axis; the second surface axis runs along +z (the surface stands
perpendicular to the ground).  Users live on the transmitter side of the
surface plane (y <= d_00).

Angles are radians internally.  The flat config-file format and the CLI take
degrees; distances are meters and powers are watts everywhere.
"""

from dataclasses import dataclass, replace

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

# Salt so user placement and channel fading consume unrelated seed streams.
_PLACEMENT_SALT = 0x9E3779B97F4A7C15


class ParaxialApproximationError(ValueError):
    """First-order distance expansion requested outside its validity range."""


def _freeze(obj, name, value):
    arr = np.asarray(value)
    arr.setflags(write=False)
    object.__setattr__(obj, name, arr)


@dataclass(frozen=True)
class SystemConfig:
    """All physical and algorithmic knobs for one simulation instance.

    ``user_positions`` must hold exactly ``k_users`` (x, y, z) triples.
    ``phi_k`` holds one complex reflection coefficient per user and defaults
    to 1 for everyone.
    """

    user_positions: tuple
    n_t: int = 2
    k_users: int = 2
    n_r: int = 2
    b_bits: int = 1
    p_total: float = 20.0
    noise_power: float = 2e-6
    wavelength: float = SPEED_OF_LIGHT / 5.9e9
    d_b: float = 1.0
    d_r1: float = 0.03
    d_r2: float = 0.03
    theta_b: float = float(np.deg2rad(15.0))
    theta_r: float = float(np.deg2rad(30.0))
    d_00: float = 20.0
    alpha: float = 2.0
    kappa: float = 4.0
    rician_on: bool = True
    beta: float = 1.0
    phi_k: tuple = ()
    seed: int = 0

    def __post_init__(self):
        for name in ("n_t", "k_users", "n_r", "b_bits"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
            object.__setattr__(self, name, int(getattr(self, name)))
        for name in ("p_total", "noise_power", "wavelength", "d_b", "d_r1",
                     "d_r2", "d_00"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        positions = tuple(tuple(float(v) for v in p) for p in self.user_positions)
        if len(positions) != self.k_users:
            raise ValueError(
                f"user_positions has {len(positions)} entries, expected {self.k_users}")
        if any(len(p) != 3 for p in positions):
            raise ValueError("user positions must be (x, y, z) triples")
        object.__setattr__(self, "user_positions", positions)
        phi = tuple(complex(v) for v in self.phi_k)
        if not phi:
            phi = (1 + 0j,) * self.k_users
        if len(phi) != self.k_users:
            raise ValueError("phi_k must have one entry per user")
        object.__setattr__(self, "phi_k", phi)
        object.__setattr__(self, "seed", int(self.seed))

    def user_array(self):
        return np.array(self.user_positions, dtype=float)

    def phi_array(self):
        return np.array(self.phi_k, dtype=complex)

    @property
    def snr(self):
        """Transmit SNR p_total / noise_power (linear)."""
        return self.p_total / self.noise_power


def half_circle_user_placement(rng_seed, k_users, radius, *,
                               ris_center_xy=(0.0, 0.0), z=0.0):
    """Drop ``k_users`` points uniformly on the half disc facing the transmitter.

    The half disc has the given radius, is centered on the surface footprint
    ``ris_center_xy`` and occupies y <= center_y (the reflection side).
    Deterministic for a fixed ``rng_seed``.
    """
    if not radius > 0:
        raise ValueError("radius must be > 0")
    rng = np.random.default_rng(rng_seed)
    # sqrt law makes the density uniform over the disc area
    r = radius * np.sqrt(rng.random(k_users))
    ang = np.pi + np.pi * rng.random(k_users)
    cx, cy = ris_center_xy
    pts = np.column_stack([cx + r * np.cos(ang), cy + r * np.sin(ang),
                           np.full(k_users, float(z))])
    return [tuple(p) for p in pts]


def default_config(n_r=2, b_bits=1, k_users=2, n_t=2, seed=0, snr_db=70.0,
                   user_radius=60.0, user_height=0.0, rician_on=True,
                   **overrides):
    """Desk-scale config with the benchmark geometry and seeded user drop.

    ``snr_db`` fixes noise_power = p_total / 10^(snr_db/10).  A high default
    keeps the post-path-loss rates at a workable magnitude on tiny arrays.
    """
    p_total = overrides.pop("p_total", 20.0)
    d_00 = overrides.pop("d_00", 20.0)
    positions = overrides.pop("user_positions", None)
    if positions is None:
        positions = half_circle_user_placement(
            seed ^ _PLACEMENT_SALT, k_users, user_radius,
            ris_center_xy=(0.0, d_00), z=user_height)
    return SystemConfig(
        user_positions=positions, n_t=n_t, k_users=k_users, n_r=n_r,
        b_bits=b_bits, p_total=p_total,
        noise_power=p_total / 10.0 ** (snr_db / 10.0),
        d_00=d_00, rician_on=rician_on, seed=seed, **overrides)


@dataclass(frozen=True)
class GeometrySolution:
    """Element positions and path lengths for one configuration.

    ``d_bs_ris[n, l1, l2]`` is the antenna-n to element-(l1,l2) distance in
    the requested approximation mode; ``d_ris_user[k, l1, l2]`` is always the
    exact Euclidean element-to-user distance.
    """

    bs_positions: np.ndarray      # (n_t, 3)
    ris_positions: np.ndarray     # (n_r, n_r, 3)
    d_bs_ris: np.ndarray          # (n_t, n_r, n_r)
    d_ris_user: np.ndarray        # (k, n_r, n_r)
    approx_mode: str

    def __post_init__(self):
        for name in ("bs_positions", "ris_positions", "d_bs_ris", "d_ris_user"):
            _freeze(self, name, getattr(self, name))
        if self.approx_mode not in ("exact", "paraxial"):
            raise ValueError(f"unknown approx mode {self.approx_mode!r}")
        if not (self.d_bs_ris > 0).all() or not (self.d_ris_user > 0).all():
            raise ValueError("all path lengths must be positive")


def build_geometry(cfg, mode="exact"):
    """Compute element positions and path lengths.

    ``mode`` selects exact Euclidean transmitter-to-surface distances or the
    first-order (paraxial) expansion around d_00.  Paraxial mode is rejected
    when the quadratic correction exceeds 10% of d_00, i.e. when the
    small-offset premise of the expansion no longer holds.
    """
    if mode not in ("exact", "paraxial"):
        raise ValueError(f"unknown approx mode {mode!r}")
    dir_b = np.array([np.cos(cfg.theta_b), np.sin(cfg.theta_b), 0.0])
    dir_r1 = np.array([np.cos(cfg.theta_r), np.sin(cfg.theta_r), 0.0])
    dir_r2 = np.array([0.0, 0.0, 1.0])

    n_idx = np.arange(cfg.n_t)
    bs = n_idx[:, None] * cfg.d_b * dir_b
    l1, l2 = np.meshgrid(np.arange(cfg.n_r), np.arange(cfg.n_r), indexing="ij")
    ris = (l1[..., None] * cfg.d_r1 * dir_r1
           + l2[..., None] * cfg.d_r2 * dir_r2
           + cfg.d_00 * np.array([0.0, 1.0, 0.0]))

    # split into the along-boresight part and the squared transverse offset
    axial = (l1[None] * cfg.d_r1 * np.sin(cfg.theta_r) + cfg.d_00
             - n_idx[:, None, None] * cfg.d_b * np.sin(cfg.theta_b))
    cross_sq = ((l1[None] * cfg.d_r1 * np.cos(cfg.theta_r)
                 - n_idx[:, None, None] * cfg.d_b * np.cos(cfg.theta_b)) ** 2
                + (l2[None] * cfg.d_r2) ** 2)
    if mode == "exact":
        d_bs_ris = np.sqrt(axial ** 2 + cross_sq)
    else:
        correction = cross_sq / (2.0 * cfg.d_00)
        worst = float(correction.max())
        if worst > 0.1 * cfg.d_00:
            raise ParaxialApproximationError(
                f"paraxial correction {worst:.3g} m exceeds 10% of d_00={cfg.d_00} m")
        d_bs_ris = axial + correction

    users = cfg.user_array()
    diff = ris[None, :, :, :] - users[:, None, None, :]
    d_ris_user = np.linalg.norm(diff, axis=-1)
    return GeometrySolution(bs_positions=bs, ris_positions=ris,
                            d_bs_ris=d_bs_ris, d_ris_user=d_ris_user,
                            approx_mode=mode)


# --- flat key=value serialization ------------------------------------------
#
# Keys match SystemConfig field names except the two headings, which are
# stored in degrees as theta_b / theta_r per the documented file format.

_BOOL_WORDS = {"true": True, "1": True, "yes": True,
               "false": False, "0": False, "no": False}


def _format_positions(positions):
    return "; ".join(",".join(repr(float(v)) for v in p) for p in positions)


def _parse_positions(text):
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            out.append(tuple(float(v) for v in chunk.split(",")))
    return tuple(out)


def save_config(cfg, path):
    lines = [
        "# flat key = value configuration; angles in degrees, meters, watts",
        f"n_t = {cfg.n_t}",
        f"k_users = {cfg.k_users}",
        f"n_r = {cfg.n_r}",
        f"b_bits = {cfg.b_bits}",
        f"p_total = {cfg.p_total!r}",
        f"noise_power = {cfg.noise_power!r}",
        f"wavelength = {cfg.wavelength!r}",
        f"d_b = {cfg.d_b!r}",
        f"d_r1 = {cfg.d_r1!r}",
        f"d_r2 = {cfg.d_r2!r}",
        f"theta_b = {float(np.rad2deg(cfg.theta_b))!r}",
        f"theta_r = {float(np.rad2deg(cfg.theta_r))!r}",
        f"d_00 = {cfg.d_00!r}",
        f"alpha = {cfg.alpha!r}",
        f"kappa = {cfg.kappa!r}",
        f"rician_on = {str(cfg.rician_on).lower()}",
        f"beta = {cfg.beta!r}",
        f"user_positions = {_format_positions(cfg.user_positions)}",
        f"phi_k = {'; '.join(repr(v) for v in cfg.phi_k)}",
        f"seed = {cfg.seed}",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_config_text(text):
    """Parse the flat key=value format into a kwargs dict (radians inside)."""
    kw = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in ("n_t", "k_users", "n_r", "b_bits", "seed"):
            kw[key] = int(value)
        elif key in ("p_total", "noise_power", "wavelength", "d_b", "d_r1",
                     "d_r2", "d_00", "alpha", "kappa", "beta"):
            kw[key] = float(value)
        elif key in ("theta_b", "theta_r"):
            kw[key] = float(np.deg2rad(float(value)))
        elif key == "rician_on":
            kw[key] = _BOOL_WORDS[value.lower()]
        elif key == "user_positions":
            kw[key] = _parse_positions(value)
        elif key == "phi_k":
            kw[key] = tuple(complex(v.strip()) for v in value.split(";") if v.strip())
        else:
            raise ValueError(f"unknown config key {key!r}")
    return kw


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        kw = parse_config_text(fh.read())
    return SystemConfig(**kw)


__all__ = [
    "SPEED_OF_LIGHT", "SystemConfig", "GeometrySolution",
    "ParaxialApproximationError", "build_geometry",
    "half_circle_user_placement", "default_config",
    "save_config", "load_config", "parse_config_text", "replace",
]
