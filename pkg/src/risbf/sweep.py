"""Experiment harness: sweep one parameter, run the selected algorithms on
fresh seeded channels, aggregate, and emit a CSV table plus an SVG figure.

Every (value, trial) cell owns its RNG stream (seed mixed from the sweep seed
base and the cell coordinates), so cells are independent and the whole sweep
is reproducible byte for byte.
"""

import csv
import hashlib
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

import numpy as np

from .baselines import (AnnealSchedule, continuous_phase_ascent,
                        random_phase_search, simulated_annealing)
from .config import half_circle_user_placement
from .config import replace as cfg_replace
from .config import build_geometry
from .channel import synthesize_channel
from .driver import maximize_sum_rate

SWEEPABLE = ("snr", "n_r", "b", "k_users", "d_b")
ALGORITHMS = ("srm", "sa", "random", "continuous", "los")
CSV_COLUMNS = ("param", "value", "trial", "algorithm", "sum_rate", "seconds",
               "iterations", "status")

# branch-and-bound cost of the exact phase solver grows fast in these
DESK_LIMITS = {"n_r": 4, "b_bits": 2, "k_users": 3}


@dataclass(frozen=True)
class SweepSpec:
    """One swept parameter, its values, and the algorithms to run per cell."""

    base: object
    param: str
    values: tuple
    algorithms: tuple = ("srm",)
    trials: int = 1
    seed_base: int = 0
    sa_iters: int = 10_000
    random_draws: int = 8
    cont_step: float = 0.1
    cont_iters: int = 150
    cont_restarts: int = 2
    srm_eps: float = 1e-3
    srm_max_iter: int = 20
    user_radius: float = 60.0

    def __post_init__(self):
        if self.param not in SWEEPABLE:
            raise ValueError(f"param must be one of {SWEEPABLE}")
        if not self.values:
            raise ValueError("values must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        object.__setattr__(self, "values", tuple(self.values))
        algorithms = tuple(self.algorithms)
        unknown = set(algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")
        if not algorithms:
            raise ValueError("at least one algorithm is required")
        object.__setattr__(self, "algorithms", algorithms)


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: float
    trial: int
    algorithm: str
    sum_rate: float
    seconds: float
    iterations: int
    status: str


def cell_seed(seed_base, value, trial):
    """Stable 63-bit seed mixed from the base seed and the cell coordinates."""
    digest = hashlib.blake2b(f"{value!r}|{trial}".encode(), digest_size=8).digest()
    return (int(seed_base) ^ int.from_bytes(digest, "little")) & (2 ** 63 - 1)


def _cell_config(spec, value, seed):
    cfg = spec.base
    if spec.param == "snr":
        cfg = cfg_replace(cfg, noise_power=cfg.p_total / 10.0 ** (value / 10.0))
    elif spec.param == "n_r":
        cfg = cfg_replace(cfg, n_r=int(value))
    elif spec.param == "b":
        cfg = cfg_replace(cfg, b_bits=int(value))
    elif spec.param == "d_b":
        cfg = cfg_replace(cfg, d_b=float(value))
    elif spec.param == "k_users":
        k = int(value)
        positions = half_circle_user_placement(
            seed ^ 0xA5A5A5A5, k, spec.user_radius,
            ris_center_xy=(0.0, cfg.d_00), z=0.0)
        cfg = cfg_replace(cfg, k_users=k, n_t=k, user_positions=positions,
                          phi_k=())
    return cfg_replace(cfg, seed=seed)


def _alg_rng(seed, tag):
    digest = hashlib.blake2b(f"alg|{tag}".encode(), digest_size=8).digest()
    return np.random.default_rng(seed ^ int.from_bytes(digest, "little"))


def run_cell(spec, value, trial):
    """Run every requested algorithm on one fresh channel; never raises."""
    seed = cell_seed(spec.seed_base, value, trial)
    rows = []
    try:
        cfg = _cell_config(spec, value, seed)
        geom = build_geometry(cfg, "exact")
        chan = synthesize_channel(cfg, geom)
    except Exception as exc:  # config-level failure poisons the whole cell
        return [SweepRow(spec.param, float(value), trial, alg, math.nan, 0.0, 0,
                         f"error: {exc}") for alg in spec.algorithms]

    for alg in spec.algorithms:
        t0 = time.perf_counter()
        try:
            if alg == "srm":
                trace = maximize_sum_rate(cfg, chan, eps=spec.srm_eps,
                                          max_iter=spec.srm_max_iter)
                rate, iters = trace.final.sum_rate, trace.final.t
            elif alg == "los":
                cfg_los = cfg_replace(cfg, rician_on=False)
                chan_los = synthesize_channel(cfg_los, geom)
                trace = maximize_sum_rate(cfg_los, chan_los, eps=spec.srm_eps,
                                          max_iter=spec.srm_max_iter,
                                          los_mode=True)
                rate, iters = trace.final.sum_rate, trace.final.t
            elif alg == "sa":
                schedule = AnnealSchedule(max_iters=spec.sa_iters)
                _, rate = simulated_annealing(chan, cfg, schedule,
                                              _alg_rng(seed, "sa"))
                iters = spec.sa_iters
            elif alg == "random":
                _, rate = random_phase_search(chan, cfg, _alg_rng(seed, "random"),
                                              spec.random_draws)
                iters = spec.random_draws
            elif alg == "continuous":
                rng = _alg_rng(seed, "continuous")
                best = -math.inf
                for restart in range(spec.cont_restarts + 1):
                    init = None if restart == 0 else rng.uniform(
                        0.0, 2.0 * np.pi, size=(cfg.n_r, cfg.n_r))
                    _, rate_r = continuous_phase_ascent(
                        chan, cfg, spec.cont_step, spec.cont_iters,
                        init_thetas=init)
                    best = max(best, rate_r)
                rate, iters = best, spec.cont_iters
            rows.append(SweepRow(spec.param, float(value), trial, alg,
                                 float(rate), time.perf_counter() - t0, iters,
                                 "ok"))
        except Exception as exc:
            rows.append(SweepRow(spec.param, float(value), trial, alg, math.nan,
                                 time.perf_counter() - t0, 0, f"error: {exc}"))
    return rows


def _warn_desk_scale(spec):
    heavy = {"srm", "los"} & set(spec.algorithms)
    if not heavy:
        return
    cfg = spec.base
    probes = {"n_r": max([cfg.n_r] + ([int(v) for v in spec.values]
                                      if spec.param == "n_r" else [])),
              "b_bits": max([cfg.b_bits] + ([int(v) for v in spec.values]
                                            if spec.param == "b" else [])),
              "k_users": max([cfg.k_users] + ([int(v) for v in spec.values]
                                              if spec.param == "k_users" else []))}
    for key, limit in DESK_LIMITS.items():
        if probes[key] > limit:
            warnings.warn(
                f"{key}={probes[key]} exceeds the desk-scale limit {limit} for "
                f"the exact phase solver; expect long runtimes", RuntimeWarning)


def run_sweep(spec, workers=1):
    """All (value, trial) cells, merged deterministically by cell index."""
    _warn_desk_scale(spec)
    cells = [(value, trial) for value in spec.values
             for trial in range(spec.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell_star,
                                    [(spec, v, t) for v, t in cells]))
    else:
        results = [run_cell(spec, v, t) for v, t in cells]
    rows = [row for cell_rows in results for row in cell_rows]
    return rows


def _run_cell_star(args):
    return run_cell(*args)


def aggregate(rows):
    """Mean and half-width of the 95% CI per (value, algorithm)."""
    groups = {}
    for row in rows:
        if math.isnan(row.sum_rate):
            continue
        groups.setdefault((row.value, row.algorithm), []).append(row.sum_rate)
    out = {}
    for key, rates in groups.items():
        arr = np.asarray(rates)
        half = 1.96 * arr.std(ddof=1) / math.sqrt(arr.size) if arr.size > 1 else 0.0
        out[key] = (float(arr.mean()), float(half))
    return out


def write_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([r.param, repr(r.value), r.trial, r.algorithm,
                             repr(r.sum_rate), repr(r.seconds), r.iterations,
                             r.status])


def read_csv(path):
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError("unexpected CSV header")
        for rec in reader:
            rows.append(SweepRow(rec[0], float(rec[1]), int(rec[2]), rec[3],
                                 float(rec[4]), float(rec[5]), int(rec[6]),
                                 rec[7]))
    return rows


def plot_rows(rows, path):
    """Mean sum rate with CI band per algorithm, rendered to an SVG file."""
    plt.rcParams["svg.fonttype"] = "none"  # keep legend text searchable
    stats = aggregate(rows)
    algorithms = sorted({r.algorithm for r in rows})
    param = rows[0].param
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for alg in algorithms:
        values = sorted({v for (v, a) in stats if a == alg})
        if not values:
            continue
        means = np.array([stats[(v, alg)][0] for v in values])
        half = np.array([stats[(v, alg)][1] for v in values])
        ax.plot(values, means, marker="o", label=alg)
        ax.fill_between(values, means - half, means + half, alpha=0.2)
    ax.set_xlabel(param)
    ax.set_ylabel("sum rate (bits/s/Hz)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def emit_outputs(rows, formats, prefix):
    """Write the requested outputs; validates before touching any file."""
    if not rows:
        raise ValueError("no rows to emit")
    if not {r.algorithm for r in rows}:
        raise ValueError("no algorithm series present")
    unknown = set(formats) - {"csv", "svg-plot"}
    if unknown:
        raise ValueError(f"unknown output formats: {sorted(unknown)}")
    written = []
    if "csv" in formats:
        path = f"{prefix}.csv"
        write_csv(rows, path)
        written.append(path)
    if "svg-plot" in formats:
        path = f"{prefix}.svg"
        plot_rows(rows, path)
        written.append(path)
    return written


__all__ = [
    "SWEEPABLE", "ALGORITHMS", "CSV_COLUMNS", "SweepSpec", "SweepRow",
    "cell_seed", "run_cell", "run_sweep", "aggregate", "write_csv",
    "read_csv", "plot_rows", "emit_outputs",
]
