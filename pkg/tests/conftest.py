import numpy as np
import pytest

from risbf import build_geometry, default_config, synthesize_channel
from risbf.channel import ChannelTensor


def make_instance(seed=0, mode="exact", **kw):
    cfg = default_config(seed=seed, **kw)
    geom = build_geometry(cfg, mode)
    chan = synthesize_channel(cfg, geom)
    return cfg, geom, chan


def random_channel(rng, k, n_t, n_r):
    """Synthetic unit-scale channel tensor for algebra-level tests."""
    shape = (k, n_t, n_r, n_r)
    h = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return ChannelTensor(h_los=h, h_total=h, pathloss_los=np.ones(k),
                         wave_number_beta=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
