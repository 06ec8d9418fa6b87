"""Mixed-integer linear programming: an exact LP interface plus best-first
branch and bound with a lazy-cut callback.

The LP sub-solves are delegated to HiGHS dual simplex through scipy, which
returns optimal basic solutions and carries its own anti-cycling safeguards;
every result is re-checked here against the residual contract.  The search
tree, SOS1-aware branching and the cut loop are implemented in this module.
"""

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

FEAS_TOL = 1e-8
# a cut violated by less than this cannot be enforced reliably by the LP;
# a point that keeps recurring with only such cuts counts as feasible
CUT_NUMERIC_TOL = 1e-7


class LpInfeasibleError(RuntimeError):
    """No point satisfies the constraints."""


class LpUnboundedError(RuntimeError):
    """The objective decreases without bound."""


@dataclass
class LpProblem:
    """min c @ x subject to a_ub @ x <= b_ub, a_eq @ x = b_eq, bounds.

    ``bounds`` is one (lo, hi) pair per variable with None for an open side;
    the default is (0, None) everywhere.
    """

    c: np.ndarray
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    bounds: list | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        for mat_name, vec_name in (("a_ub", "b_ub"), ("a_eq", "b_eq")):
            mat = getattr(self, mat_name)
            vec = getattr(self, vec_name)
            if (mat is None) != (vec is None):
                raise ValueError(f"{mat_name} and {vec_name} must come together")
            if mat is not None:
                mat = np.asarray(mat, dtype=float).reshape(-1, n)
                vec = np.asarray(vec, dtype=float).reshape(-1)
                if mat.shape[0] != vec.size:
                    raise ValueError(f"{mat_name} rows do not match {vec_name}")
                if not np.isfinite(mat).all() or not np.isfinite(vec).all():
                    raise ValueError("constraint coefficients must be finite")
                setattr(self, mat_name, mat)
                setattr(self, vec_name, vec)
        if not np.isfinite(self.c).all():
            raise ValueError("objective coefficients must be finite")
        if self.bounds is None:
            self.bounds = [(0.0, None)] * n
        if len(self.bounds) != n:
            raise ValueError("bounds length does not match variable count")

    @property
    def n(self):
        return self.c.size


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray
    objective: float


def _check_residuals(problem, x, bounds):
    # residuals are judged in row-scaled units so wide-coefficient cut rows
    # are held to the same relative standard as unit rows
    if problem.a_eq is not None and problem.a_eq.size:
        scale = np.maximum(1.0, np.abs(problem.a_eq).max(axis=1))
        res = (np.abs(problem.a_eq @ x - problem.b_eq) / scale).max()
        if res > FEAS_TOL:
            raise RuntimeError(f"equality residual {res:.2e} above tolerance")
    if problem.a_ub is not None and problem.a_ub.size:
        scale = np.maximum(1.0, np.abs(problem.a_ub).max(axis=1))
        res = ((problem.a_ub @ x - problem.b_ub) / scale).max()
        if res > FEAS_TOL:
            raise RuntimeError(f"inequality residual {res:.2e} above tolerance")
    for xi, (lo, hi) in zip(x, bounds):
        if lo is not None and xi < lo - FEAS_TOL:
            raise RuntimeError("lower bound violated beyond tolerance")
        if hi is not None and xi > hi + FEAS_TOL:
            raise RuntimeError("upper bound violated beyond tolerance")


_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10,
               "dual_feasibility_tolerance": 1e-9}


def solve_lp(problem, bounds=None):
    """Solve the LP to optimality; raises on infeasible/unbounded models."""
    bounds = problem.bounds if bounds is None else bounds
    res = linprog(problem.c, A_ub=problem.a_ub, b_ub=problem.b_ub,
                  A_eq=problem.a_eq, b_eq=problem.b_eq, bounds=bounds,
                  method="highs-ds", options=_LP_OPTIONS)
    if res.status == 2:
        raise LpInfeasibleError(res.message)
    if res.status == 3:
        raise LpUnboundedError(res.message)
    if res.status != 0:
        raise RuntimeError(f"LP solver failure: {res.message}")
    x = np.asarray(res.x, dtype=float)
    _check_residuals(problem, x, bounds)
    return LpSolution(x=x, objective=float(res.fun))


def lp_to_text(problem):
    """Small LP-format dump (minimize/st/bounds sections) for debugging."""
    def term(coef, j):
        return f"{coef:+.12g} x{j}"

    lines = ["Minimize", " obj: " + " ".join(
        term(c, j) for j, c in enumerate(problem.c) if c != 0.0)]
    lines.append("Subject To")
    if problem.a_eq is not None:
        for i, (row, rhs) in enumerate(zip(problem.a_eq, problem.b_eq)):
            body = " ".join(term(c, j) for j, c in enumerate(row) if c != 0.0)
            lines.append(f" e{i}: {body} = {rhs:.12g}")
    if problem.a_ub is not None:
        for i, (row, rhs) in enumerate(zip(problem.a_ub, problem.b_ub)):
            body = " ".join(term(c, j) for j, c in enumerate(row) if c != 0.0)
            lines.append(f" c{i}: {body} <= {rhs:.12g}")
    lines.append("Bounds")
    for j, (lo, hi) in enumerate(problem.bounds):
        lo_s = "-inf" if lo is None else f"{lo:.12g}"
        hi_s = "+inf" if hi is None else f"{hi:.12g}"
        lines.append(f" {lo_s} <= x{j} <= {hi_s}")
    lines.append("End")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Cut:
    """Affine inequality coeffs @ z + const >= 0."""

    coeffs: np.ndarray
    const: float

    def violation(self, z):
        return float(self.coeffs @ np.asarray(z) + self.const)


@dataclass
class MilpModel:
    """LP relaxation plus integrality mask and the lazy-cut contract.

    ``cut_callback`` maps a candidate integer point to zero or more violated
    Cut objects; returned cuts are appended globally and the triggering node
    is re-solved.  ``sos1_groups`` lists index blocks known to sum to one,
    which branching splits wholesale instead of one variable at a time.
    ``incumbent`` may carry a known-feasible (point, objective) warm start.
    """

    problem: LpProblem
    integrality: np.ndarray
    cut_callback: object = None
    sos1_groups: list = field(default_factory=list)
    node_limit: int = 200_000
    gap_tol: float = 1e-6
    int_tol: float = 1e-6
    incumbent: tuple | None = None

    def __post_init__(self):
        self.integrality = np.asarray(self.integrality, dtype=bool)
        if self.integrality.size != self.problem.n:
            raise ValueError("integrality mask length must equal variable count")


@dataclass(frozen=True)
class MilpResult:
    status: str               # optimal | infeasible | node-limit
    x: np.ndarray | None
    objective: float
    nodes: int
    cuts_added: int


def _with_cuts(problem, cut_rows, cut_rhs):
    if not cut_rows:
        return problem
    a_extra = np.vstack(cut_rows)
    b_extra = np.asarray(cut_rhs)
    if problem.a_ub is None:
        a_ub, b_ub = a_extra, b_extra
    else:
        a_ub = np.vstack([problem.a_ub, a_extra])
        b_ub = np.concatenate([problem.b_ub, b_extra])
    return LpProblem(c=problem.c, a_ub=a_ub, b_ub=b_ub, a_eq=problem.a_eq,
                     b_eq=problem.b_eq, bounds=problem.bounds)


def _fractionality(x, integrality, int_tol):
    frac = np.abs(x - np.round(x))
    frac[~integrality] = 0.0
    frac[frac <= int_tol] = 0.0
    return frac


def _pick_branch(x, frac, model):
    """Choose an SOS1 group split or a single-variable dichotomy."""
    # most fractional variable, ties by lowest index
    score = np.where(frac > 0, -np.abs(frac - 0.5), -np.inf)
    j_star = int(np.argmax(score))
    for group in model.sos1_groups:
        if frac[group].max() > 0 and j_star in set(int(g) for g in group):
            order = sorted(group, key=lambda j: (-x[j], j))
            cum, split = 0.0, []
            for j in order[:-1]:
                split.append(int(j))
                cum += x[j]
                if cum >= 0.5:
                    break
            rest = [int(j) for j in group if j not in set(split)]
            return ("sos", split, rest)
    return ("var", j_star, None)


def solve_milp(model):
    """Best-first branch and bound over LP relaxations with global lazy cuts."""
    problem = model.problem
    n = problem.n
    base_bounds = list(problem.bounds)
    lb0 = np.array([-np.inf if lo is None else lo for lo, _ in base_bounds])
    ub0 = np.array([np.inf if hi is None else hi for _, hi in base_bounds])

    cut_rows, cut_rhs = [], []
    cuts_added = 0
    counter = itertools.count()
    inc_x, inc_obj = None, np.inf
    if model.incumbent is not None:
        inc_x = np.asarray(model.incumbent[0], dtype=float)
        inc_obj = float(model.incumbent[1])

    heap = [(-np.inf, next(counter), lb0, ub0)]
    nodes = 0
    hit_limit = False

    def node_bounds(lb, ub):
        return [(None if np.isneginf(lo) else lo, None if np.isposinf(hi) else hi)
                for lo, hi in zip(lb, ub)]

    while heap:
        bound, _, lb, ub = heapq.heappop(heap)
        if bound >= inc_obj - model.gap_tol:
            break  # best-bound order: everything left is at least this bad
        if nodes >= model.node_limit:
            hit_limit = True
            break
        nodes += 1

        solution = None
        recent_points = []
        while True:
            try:
                sol = solve_lp(_with_cuts(problem, cut_rows, cut_rhs),
                               bounds=node_bounds(lb, ub))
            except LpInfeasibleError:
                break
            if sol.objective >= inc_obj - model.gap_tol:
                break
            frac = _fractionality(sol.x, model.integrality, model.int_tol)
            if frac.max() > 0:
                solution = sol
                break
            point = sol.x.copy()
            point[model.integrality] = np.round(point[model.integrality])
            if model.cut_callback is not None:
                new_cuts = model.cut_callback(point)
                if new_cuts:
                    repeated = any(np.allclose(point, seen, atol=1e-11)
                                   for seen in recent_points)
                    if repeated:
                        worst = min(c.violation(point) for c in new_cuts)
                        if worst > -CUT_NUMERIC_TOL:
                            pass  # feasible to solver precision; accept below
                        else:
                            raise RuntimeError(
                                "cut callback failed to separate the repeated "
                                f"point (violation {worst:.2e})")
                    if not repeated:
                        recent_points.append(point)
                        if len(recent_points) > 8:
                            recent_points.pop(0)
                        for cut in new_cuts:
                            cut_rows.append(-np.asarray(cut.coeffs, dtype=float))
                            cut_rhs.append(float(cut.const))
                        cuts_added += len(new_cuts)
                        continue
            if sol.objective < inc_obj - 1e-12:
                inc_x, inc_obj = point, sol.objective
            break

        if solution is None:
            continue
        kind, first, second = _pick_branch(solution.x, frac, model)
        children = []
        if kind == "sos":
            lb_a, ub_a = lb.copy(), ub.copy()
            ub_a[second] = np.minimum(ub_a[second], 0.0)
            lb_b, ub_b = lb.copy(), ub.copy()
            ub_b[first] = np.minimum(ub_b[first], 0.0)
            children = [(lb_a, ub_a), (lb_b, ub_b)]
        else:
            j = first
            lb_a, ub_a = lb.copy(), ub.copy()
            ub_a[j] = np.floor(solution.x[j])
            lb_b, ub_b = lb.copy(), ub.copy()
            lb_b[j] = np.ceil(solution.x[j])
            children = [(lb_a, ub_a), (lb_b, ub_b)]
        for clb, cub in children:
            if (clb <= cub + 1e-12).all():
                heapq.heappush(heap, (solution.objective, next(counter), clb, cub))

    if hit_limit:
        status = "node-limit"
    elif inc_x is not None:
        status = "optimal"
    else:
        status = "infeasible"
    return MilpResult(status=status, x=inc_x,
                      objective=float(inc_obj) if inc_x is not None else np.inf,
                      nodes=nodes, cuts_added=cuts_added)


__all__ = [
    "FEAS_TOL", "LpInfeasibleError", "LpUnboundedError", "LpProblem",
    "LpSolution", "solve_lp", "lp_to_text", "Cut", "MilpModel", "MilpResult",
    "solve_milp",
]
