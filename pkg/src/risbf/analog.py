"""Surface phase selection by power minimization: a mixed-integer
positive-semidefinite program solved through outer approximation.

The epigraph form minimizes w subject to

    Z(w, phases) = [[ (w/K) I, I ], [ I, G(phases) ]]  being PSD,

where G is the whitened Gram P^{-1/2} F F^H P^{-1/2}.  For fixed phases the
smallest feasible w equals K * lambda_max(G^{-1}), an upper bound on the
power objective trace(G^{-1}); both numbers are reported.  The PSD cone is
enforced with eigenvector cuts u^T Z u >= 0 inside a branch-and-bound over
the one-hot phase binaries.

Internally the Gram is normalized by a per-instance scale so that the
eigenvalue feasibility tolerance and the LP coefficients stay O(1) whatever
the physical path losses; all reported objectives are converted back.
"""

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import PhaseIndexMatrix, assemble_f, q_of_theta
from .codebook import GramExpansion, PhaseCodebook, pair_grams
from .milp import Cut, LpProblem, MilpModel, solve_milp, solve_lp, LpInfeasibleError

PSD_TOL = -1e-9


class SingularMatrixError(RuntimeError):
    """The whitened Gram is numerically singular."""


def whitening_powers(powers, rel_floor=1e-8):
    """Incumbent powers made safe for whitening.

    Water filling may allocate exactly zero to a starved user; flooring at a
    small fraction of the largest power keeps P^{-1/2} defined while weighting
    that user's separation heavily in the phase objective.
    """
    powers = np.asarray(powers, dtype=float)
    if (powers < 0).any() or not powers.max() > 0:
        raise ValueError("powers must be nonnegative with a positive maximum")
    return np.maximum(powers, rel_floor * powers.max())


def whitened_gram(f, powers):
    f_t = np.asarray(f, dtype=complex) / np.sqrt(np.asarray(powers, float))[:, None]
    return f_t @ f_t.conj().T


def inverse_gram_trace(f, powers):
    """Power objective trace((P^{-1/2} F F^H P^{-1/2})^{-1})."""
    lam = np.linalg.eigvalsh(whitened_gram(f, powers))
    if lam[0] <= 1e-12 * max(lam[-1], 1e-300):
        raise SingularMatrixError("whitened Gram is singular")
    return float(np.sum(1.0 / lam))


def assemble_schur(w, gram):
    """Complex 2K x 2K epigraph block matrix [[(w/K) I, I], [I, gram]]."""
    gram = np.asarray(gram, dtype=complex)
    k = gram.shape[0]
    z = np.zeros((2 * k, 2 * k), dtype=complex)
    z[:k, :k] = (w / k) * np.eye(k)
    z[:k, k:] = np.eye(k)
    z[k:, :k] = np.eye(k)
    z[k:, k:] = gram
    return z


def real_embedding(z):
    """Real symmetric embedding [[Re, -Im], [Im, Re]]; eigenvalues match the
    Hermitian input with doubled multiplicity."""
    return np.block([[z.real, -z.imag], [z.imag, z.real]])


def min_epigraph_weight(gram):
    """Smallest w making the epigraph block PSD: K * lambda_max(gram^{-1})."""
    gram = np.asarray(gram, dtype=complex)
    lam_min = float(np.linalg.eigvalsh(gram)[0])
    if lam_min <= 0.0:
        return np.inf
    return gram.shape[0] / lam_min


@dataclass(frozen=True)
class EigenCut:
    """Linear inequality u^T Z(vars) u >= 0 from one negative eigenvector.

    ``u`` is the eigenvector in the real embedding; ``coeffs``/``const`` give
    the same inequality as an affine function of the solver variables.
    """

    u: np.ndarray
    coeffs: np.ndarray
    const: float
    eigenvalue: float

    def violation(self, point):
        return float(self.coeffs @ np.asarray(point) + self.const)

    def as_cut(self):
        return Cut(coeffs=self.coeffs, const=self.const)


@dataclass
class AnalogPhaseModel:
    """Variable layout, affine Gram map and base constraints of the solver.

    Variable vector: [w, x blocks (one per element), y blocks (one per
    ordered element pair)].  Negative-angle selector entries are pinned to
    zero through their bounds.  All Gram data is in normalized units
    (physical Gram = gram_scale * normalized Gram).
    """

    cfg: object
    codebook: PhaseCodebook
    expansion: GramExpansion
    pair_gram: np.ndarray
    gram_scale: float
    w_lo: float
    w_hi: float
    los_mode: bool
    seed_phases: PhaseIndexMatrix | None = None
    seed_w: float = np.inf
    lp: LpProblem = field(init=False)
    integrality: np.ndarray = field(init=False)
    sos1_groups: list = field(init=False)

    def __post_init__(self):
        cb = self.codebook
        L = cb.length
        n_el = self.expansion.n_el
        pairs = self.expansion.pairs
        n = 1 + (n_el + len(pairs)) * L
        self.n_vars = n
        self.x_offset = 1
        self.y_offset = 1 + n_el * L

        a_eq_rows, b_eq = [], []
        bounds = [(self.w_lo, self.w_hi)] + [(0.0, 1.0)] * (n - 1)
        for p in range(n_el):
            row = np.zeros(n)
            row[self.x_slice(p)] = 1.0
            a_eq_rows.append(row)
            b_eq.append(1.0)
            lo = self.x_offset + p * L
            for i in np.nonzero(cb.e_mask)[0]:
                bounds[lo + int(i)] = (0.0, 0.0)
        a_ub_rows, b_ub = [], []
        offset = cb.zero_offset
        n_levels = cb.n_levels
        for idx, (p, q) in enumerate(pairs):
            row = np.zeros(n)
            row[self.y_slice(idx)] = 1.0
            a_eq_rows.append(row)
            b_eq.append(1.0)
            link = np.zeros(n)
            link[self.x_slice(p)] = cb.a
            link[self.x_slice(q)] = -cb.a
            link[self.y_slice(idx)] -= cb.a
            a_eq_rows.append(link)
            b_eq.append(0.0)
            # window inequalities: mass on a difference level requires mass
            # on phase levels that can produce it (tightens the relaxation;
            # implied at every integral point)
            y_start = self.y_offset + idx * L
            for d_pos in range(L):
                d_level = d_pos - offset
                windows = ((p, max(0, d_level),
                            min(n_levels - 1, n_levels - 1 + d_level)),
                           (q, max(0, -d_level),
                            min(n_levels - 1, n_levels - 1 - d_level)))
                for el, lo_m, hi_m in windows:
                    row = np.zeros(n)
                    row[y_start + d_pos] = 1.0
                    el_start = self.x_offset + el * L
                    for m_level in range(lo_m, hi_m + 1):
                        row[el_start + offset + m_level] = -1.0
                    a_ub_rows.append(row)
                    b_ub.append(0.0)
        if self.los_mode:
            n_r = self.cfg.n_r
            for r1 in range(n_r):
                for r2 in range(r1 + 1, n_r):
                    row = np.zeros(n)
                    for l2 in range(n_r):
                        row[self.x_slice(r1 * n_r + l2)] += cb.s
                        row[self.x_slice(r2 * n_r + l2)] -= cb.s
                    a_eq_rows.append(row)
                    b_eq.append(0.0)

        c = np.zeros(n)
        c[0] = 1.0
        a_ub = np.array(a_ub_rows) if a_ub_rows else None
        b_ub_arr = np.array(b_ub) if a_ub_rows else None
        self.lp = LpProblem(c=c, a_ub=a_ub, b_ub=b_ub_arr,
                            a_eq=np.array(a_eq_rows), b_eq=np.array(b_eq),
                            bounds=bounds)
        self.integrality = np.ones(n, dtype=bool)
        self.integrality[0] = False
        self.sos1_groups = (
            [np.arange(*self.x_range(p)) for p in range(n_el)]
            + [np.arange(*self.y_range(i)) for i in range(len(pairs))])

    # --- variable layout helpers
    def x_range(self, p):
        L = self.codebook.length
        start = self.x_offset + p * L
        return start, start + L

    def y_range(self, idx):
        L = self.codebook.length
        start = self.y_offset + idx * L
        return start, start + L

    def x_slice(self, p):
        return slice(*self.x_range(p))

    def y_slice(self, idx):
        return slice(*self.y_range(idx))

    def split_point(self, point):
        L = self.codebook.length
        n_el = self.expansion.n_el
        xs = point[self.x_offset:self.y_offset].reshape(n_el, L)
        ys = point[self.y_offset:].reshape(len(self.expansion.pairs), L)
        return float(point[0]), xs, ys

    # --- model evaluation
    def point_from_phases(self, phases, w=None):
        thetas = np.asarray(phases.thetas()).ravel()
        xs, ys = self.expansion.selectors_for(thetas)
        if w is None:
            w = min_epigraph_weight(self.gram_of_thetas(thetas))
        point = np.zeros(self.n_vars)
        point[0] = w
        point[self.x_offset:self.y_offset] = xs.ravel()
        point[self.y_offset:] = ys.ravel()
        return point

    def gram_of_thetas(self, thetas_flat):
        """Normalized Gram straight from element responses (no binaries)."""
        qv = q_of_theta(np.asarray(thetas_flat))
        return np.einsum("p,q,pqkl->kl", qv, qv.conj(), self.pair_gram)

    def gram_at(self, point):
        _, xs, ys = self.split_point(point)
        return self.expansion.evaluate(xs, ys, check=False)

    def z_at(self, point):
        return assemble_schur(point[0], self.gram_at(point))

    def decode(self, point):
        _, xs, ys = self.split_point(point)
        n_r = self.cfg.n_r
        thetas = np.array([self.codebook.decode(np.round(x).astype(int))
                           for x in xs])
        m = np.round(thetas * 2.0 ** (self.cfg.b_bits - 1) / np.pi).astype(int)
        return PhaseIndexMatrix(m.reshape(n_r, n_r), self.cfg.b_bits)

    def eigen_cuts(self, point, tol=PSD_TOL, max_cuts=None):
        """Zero or more violated eigenvector cuts at the given point.

        Returns nothing when lambda_min of the (real-embedded) epigraph block
        is above the tolerance.  Every returned cut is affine in the solver
        variables and evaluates to its eigenvalue at the generating point.
        """
        z = self.z_at(point)
        lam, vec = np.linalg.eigh(z)
        neg = np.nonzero(lam < tol)[0]
        if max_cuts is not None:
            neg = neg[:max_cuts]
        k = self.expansion.k
        cuts = []
        for i in neg:
            v = vec[:, i]
            v1, v2 = v[:k], v[k:]
            coeffs = np.zeros(self.n_vars)
            coeffs[0] = float(np.vdot(v1, v1).real) / k
            xs_c = np.einsum("i,plij,j->pl", v2.conj(), self.expansion.x_coeffs,
                             v2).real
            ys_c = np.einsum("i,plij,j->pl", v2.conj(), self.expansion.y_coeffs,
                             v2).real
            coeffs[self.x_offset:self.y_offset] = xs_c.ravel()
            coeffs[self.y_offset:] = ys_c.ravel()
            const = float(2.0 * np.vdot(v1, v2).real
                          + np.vdot(v2, self.expansion.g0 @ v2).real)
            cuts.append(EigenCut(u=np.concatenate([v.real, v.imag]),
                                 coeffs=coeffs, const=const,
                                 eigenvalue=float(lam[i])))
        return cuts

    def no_good_cut(self, point):
        """Exclude one exact phase assignment (used for singular Grams)."""
        _, xs, _ = self.split_point(point)
        coeffs = np.zeros(self.n_vars)
        coeffs[self.x_offset:self.y_offset] = -np.round(xs).ravel()
        return Cut(coeffs=coeffs, const=float(self.expansion.n_el) - 1.0)


def _gram_of_levels(pair_gram, m_flat, b_bits):
    qv = q_of_theta(np.asarray(m_flat) * np.pi / 2.0 ** (b_bits - 1))
    return np.einsum("p,q,pqkl->kl", qv, qv.conj(), pair_gram)


def _row_balance_ok(m_flat, n_r, b_bits):
    sins = np.sin(m_flat.reshape(n_r, n_r) * np.pi / 2.0 ** (b_bits - 1))
    row_sums = sins.sum(axis=1)
    return bool(np.allclose(row_sums, row_sums[0], atol=1e-9))


def _coordinate_descent(pair_gram, cfg, start_m, los_mode=False, passes=3):
    """Cheap exact-per-element sweep; returns (levels, lambda_min of its Gram).

    Works on the raw pair Grams, so the result doubles as the normalization
    anchor: lambda_min at the returned configuration sets the Gram scale.
    """
    levels = np.arange(2 ** cfg.b_bits)
    m = np.array(start_m, dtype=int).ravel()

    def lam_min(m_flat):
        if los_mode and not _row_balance_ok(m_flat, cfg.n_r, cfg.b_bits):
            return -np.inf
        return float(np.linalg.eigvalsh(
            _gram_of_levels(pair_gram, m_flat, cfg.b_bits))[0])

    best = lam_min(m)
    for _ in range(passes):
        improved = False
        for p in range(m.size):
            current = m[p]
            for lev in levels:
                if lev == current:
                    continue
                m[p] = lev
                value = lam_min(m)
                if value > best + 1e-15:
                    best, current, improved = value, lev, True
                m[p] = current
            m[p] = current
        if not improved:
            break
    return m.reshape(cfg.n_r, cfg.n_r), best


def build_phase_model(cfg, channel, powers, los_mode=False,
                      incumbent_phases=None):
    """Assemble the phase-selection model around the incumbent powers.

    The pair Grams are normalized so that the best configuration found by a
    quick per-element sweep has lambda_min = 1, i.e. its epigraph weight is
    exactly K in solver units.  That keeps LP coefficients, w bounds and the
    PSD tolerance commensurate whatever the physical power scale.
    """
    codebook = PhaseCodebook.build(cfg.b_bits)
    stack = channel.element_stack()
    raw = pair_grams(stack, cfg.phi_array(), powers)
    if incumbent_phases is None:
        incumbent_phases = PhaseIndexMatrix.default_init(cfg.n_r, cfg.b_bits)
    seed_m, seed_lam = _coordinate_descent(raw, cfg, incumbent_phases.m,
                                           los_mode=los_mode)
    scale = seed_lam
    if not np.isfinite(scale) or not scale > 0:
        scale = float(np.abs(np.trace(raw, axis1=2, axis2=3)).sum()) / cfg.k_users
    if not scale > 0:
        scale = 1.0
    scaled = raw / scale
    expansion = GramExpansion(scaled, codebook)

    tr_bound = float(np.abs(np.trace(scaled, axis1=2, axis2=3)).sum())
    w_lo = (cfg.k_users ** 2) / tr_bound if tr_bound > 0 else 0.0
    if np.isfinite(seed_lam) and seed_lam > 0:
        w_seed = cfg.k_users * scale / seed_lam  # = K in solver units
    else:
        w_seed = 1e9
    w_hi = w_seed * (1.0 + 1e-6) + 1e-9

    return AnalogPhaseModel(
        cfg=cfg, codebook=codebook, expansion=expansion, pair_gram=scaled,
        gram_scale=scale, w_lo=min(w_lo, w_hi), w_hi=w_hi, los_mode=los_mode,
        seed_phases=PhaseIndexMatrix(seed_m, cfg.b_bits),
        seed_w=w_seed if np.isfinite(seed_lam) and seed_lam > 0 else np.inf)


@dataclass(frozen=True)
class PhaseSearchResult:
    phases: PhaseIndexMatrix
    w_star: float             # physical units
    trace_objective: float    # physical units
    status: str
    cuts: int
    nodes: int
    root_rounds: int
    seconds: float


def optimize_phases(cfg, channel, incumbent, *, los_mode=False,
                    incumbent_phases=None, feas_tol=PSD_TOL, gap_tol=1e-6,
                    node_limit=200_000, max_root_rounds=120, max_cuts=None,
                    trace_path=None):
    """Outer-approximation solve for the surface phase configuration.

    ``incumbent`` is the current digital solution (its powers freeze the
    whitening).  Returns decoded phases plus both the epigraph value w* and
    the true trace objective, in physical units.
    """
    t0 = time.perf_counter()
    if incumbent_phases is None:
        incumbent_phases = PhaseIndexMatrix.default_init(cfg.n_r, cfg.b_bits)
    powers = whitening_powers(incumbent.p)
    model = build_phase_model(cfg, channel, powers, los_mode=los_mode,
                              incumbent_phases=incumbent_phases)
    seed_phases, seed_w = model.seed_phases, model.seed_w

    trace_rows = []

    def record(stage, lam_min, point, n_cuts):
        if trace_path is None:
            return
        lam = np.linalg.eigvalsh(model.gram_at(point))
        if lam[0] > 1e-12 * max(abs(lam[-1]), 1e-300):
            objective = float(np.sum(1.0 / lam)) / model.gram_scale
        else:
            objective = np.inf
        trace_rows.append((stage, len(trace_rows), lam_min, float(point[0]),
                           objective, n_cuts))

    # root rounds: cut at the relaxation optimum until it is PSD-feasible
    cut_rows, cut_rhs = [], []
    root_rounds = 0
    relaxed = model.lp

    def with_rows(problem):
        if not cut_rows:
            return problem
        extra_a = np.vstack(cut_rows)
        extra_b = np.asarray(cut_rhs)
        if problem.a_ub is None:
            a_ub, b_ub = extra_a, extra_b
        else:
            a_ub = np.vstack([problem.a_ub, extra_a])
            b_ub = np.concatenate([problem.b_ub, extra_b])
        return LpProblem(c=problem.c, a_ub=a_ub, b_ub=b_ub,
                         a_eq=problem.a_eq, b_eq=problem.b_eq,
                         bounds=problem.bounds)

    for _ in range(max_root_rounds):
        try:
            sol = solve_lp(with_rows(relaxed))
        except LpInfeasibleError:
            break
        cuts = model.eigen_cuts(sol.x, tol=feas_tol, max_cuts=max_cuts)
        if not cuts:
            break
        for cut in cuts:
            cut_rows.append(-cut.coeffs)
            cut_rhs.append(cut.const)
        root_rounds += 1
        record("root", cuts[0].eigenvalue, sol.x, len(cuts))

    # frontier cuts at the seeded configuration sharpen the w geometry
    if np.isfinite(seed_w):
        probe_point = model.point_from_phases(seed_phases,
                                              w=seed_w * (1 - 1e-6) - 1e-9)
        for cut in model.eigen_cuts(probe_point, tol=feas_tol, max_cuts=max_cuts):
            cut_rows.append(-cut.coeffs)
            cut_rhs.append(cut.const)

    base = with_rows(model.lp)

    def callback(point):
        gram = model.gram_at(point)
        lam = np.linalg.eigvalsh(gram)
        if lam[0] <= 1e-12 * max(abs(lam[-1]), 1e-300):
            record("nogood", float(lam[0]), point, 1)
            return [model.no_good_cut(point)]
        cuts = model.eigen_cuts(point, tol=feas_tol, max_cuts=max_cuts)
        if cuts:
            record("node", cuts[0].eigenvalue, point, len(cuts))
        return [c.as_cut() for c in cuts]

    warm = None
    if np.isfinite(seed_w):
        warm = (model.point_from_phases(seed_phases, w=seed_w), seed_w)
    result = solve_milp(MilpModel(problem=base, integrality=model.integrality,
                                  cut_callback=callback,
                                  sos1_groups=model.sos1_groups,
                                  node_limit=node_limit, gap_tol=gap_tol,
                                  incumbent=warm))

    if result.x is None:
        raise SingularMatrixError("no feasible phase configuration found")
    phases = model.decode(result.x)
    f = assemble_f(channel, phases, cfg.phi_array())
    gram_phys = whitened_gram(f, powers)
    w_star = min_epigraph_weight(gram_phys)
    if not np.isfinite(w_star):
        raise SingularMatrixError("decoded configuration is rank deficient")
    trace_objective = inverse_gram_trace(f, powers)
    seconds = time.perf_counter() - t0
    if trace_path is not None:
        with open(trace_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["stage", "event", "lambda_min", "w",
                             "trace_objective", "cuts"])
            writer.writerows(trace_rows)
    return PhaseSearchResult(phases=phases, w_star=float(w_star),
                             trace_objective=float(trace_objective),
                             status=result.status, cuts=result.cuts_added,
                             nodes=result.nodes, root_rounds=root_rounds,
                             seconds=seconds)


__all__ = [
    "PSD_TOL", "SingularMatrixError", "whitening_powers", "whitened_gram",
    "inverse_gram_trace", "assemble_schur", "real_embedding",
    "min_epigraph_weight", "EigenCut", "AnalogPhaseModel", "build_phase_model",
    "PhaseSearchResult", "optimize_phases",
]
