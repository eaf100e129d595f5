"""Single-loop RBDO driver and a FORM double-loop baseline.

Pipeline: deterministic solve, DOE around the deterministic optimum,
quadratic surrogate fits, then one constrained optimization over
closed-form probabilistic constraints that never touches the original
limit states again.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .doe import DoeBox, Scheme, bbd_points, ccd_points, doe_box, fit_quadratic, inscribed_ccd_2
from .errors import DomainError, SolverFailureError, UnsupportedDesignError
from .form import form_mpp
from .montecarlo import mc_pf
from .pf import pf_quadratic
from .quadratic import CorrelationModel, QuadraticForm, to_standard_normal
from .variables import RandomVariable, Role, std_normal, std_normal_inv

# Tolerated closed-form constraint violation at the reported optimum.
FEASIBILITY_SLACK = 1e-9


@dataclass(frozen=True)
class ConstraintSpec:
    """One probabilistic constraint: Prob[g(z) < 0] <= pf target.

    Exactly one of ``beta_d`` / ``pf_all`` must be given; ``g`` is a
    black-box evaluator over (m, n) arrays unless ``quadratic`` supplies
    the limit state explicitly.
    """

    name: str
    g: object = None
    quadratic: QuadraticForm = None
    beta_d: float = None
    pf_all: float = None

    def __post_init__(self):
        if (self.beta_d is None) == (self.pf_all is None):
            raise DomainError(f"{self.name}: give exactly one of beta_d / pf_all")
        if self.g is None and self.quadratic is None:
            raise DomainError(f"{self.name}: need a black-box g or an explicit quadratic")

    @property
    def pf_target(self) -> float:
        if self.pf_all is not None:
            return self.pf_all
        return float(std_normal(-self.beta_d)[1])

    @property
    def beta_target(self) -> float:
        if self.beta_d is not None:
            return self.beta_d
        return -std_normal_inv(self.pf_all)

    def evaluate(self, z):
        if self.quadratic is not None:
            return self.quadratic(z)
        return self.g(z)


@dataclass
class StdMode:
    """Constant sigma, or proportional sigma = t * mu for design variables."""

    proportional: bool = False
    t: np.ndarray = None

    def __post_init__(self):
        if self.proportional:
            self.t = np.asarray(self.t, dtype=float)
            if np.any(self.t <= 0.0):
                raise DomainError("proportional std mode requires t > 0")


@dataclass
class EvalCounters:
    deterministic_g_evals: int = 0
    gstar_evals: int = 0
    objective_evals: int = 0


@dataclass
class RbdoProblem:
    """Full problem description over the stacked variable vector."""

    variables: list
    objective: object  # callable over the design-mean vector
    constraints: list
    corr: CorrelationModel = None
    std_mode: StdMode = field(default_factory=StdMode)
    shared_evaluations: bool = False
    doe_scheme: Scheme = None
    doe_halfwidth_overrides: dict = field(default_factory=dict)
    doe_c_r_design: float = None
    doe_c_r_parameter: float = None

    def __post_init__(self):
        self.design_indices = [
            i for i, v in enumerate(self.variables) if v.is_design
        ]
        if not self.design_indices:
            raise DomainError("problem has no design variables")
        for i in self.design_indices:
            v = self.variables[i]
            if not (np.isfinite(v.lower) and np.isfinite(v.upper)):
                raise DomainError(f"{v.name}: design variables need finite bounds")
        if self.std_mode.proportional and self.std_mode.t.shape != (len(self.design_indices),):
            raise DomainError("proportional t must have one entry per design variable")

    @property
    def n_z(self) -> int:
        return len(self.variables)

    @property
    def bounds(self):
        return [
            (self.variables[i].lower, self.variables[i].upper) for i in self.design_indices
        ]

    def design_start(self) -> np.ndarray:
        return np.array([self.variables[i].mean for i in self.design_indices])

    def full_mean(self, mu_design) -> np.ndarray:
        """Assemble the stacked mean vector from a design-mean vector."""
        mu = np.array([v.mean for v in self.variables], dtype=float)
        mu[self.design_indices] = np.asarray(mu_design, dtype=float)
        return mu

    def variables_at(self, mu_full) -> list:
        """Variable list with means set to ``mu_full`` (and proportional stds)."""
        out = []
        design_pos = {idx: j for j, idx in enumerate(self.design_indices)}
        for i, v in enumerate(self.variables):
            if self.std_mode.proportional and i in design_pos and v.role is Role.DESIGN_VARIABLE:
                std = self.std_mode.t[design_pos[i]] * abs(mu_full[i])
                out.append(v.with_mean(mu_full[i], std))
            else:
                out.append(v.with_mean(mu_full[i]))
        return out


@dataclass
class RbdoResult:
    method: str
    mu_opt: np.ndarray
    objective_value: float
    pf_closed_form: list
    counters: EvalCounters
    trace: list
    success: bool
    message: str = ""
    pf_mc: list = None
    mu_det: np.ndarray = None
    doe_evals: int = 0


class _CountingEvaluator:
    """Counts black-box limit-state evaluations with a shared-call cache.

    With shared evaluations, distinct constraints probed at the same
    point cost a single system call; the cache keys points by their
    bytes so repeated solver probes are counted once per point.
    """

    def __init__(self, problem: RbdoProblem, counters: EvalCounters):
        self.problem = problem
        self.counters = counters
        self._seen = set()

    def eval_constraint(self, spec: ConstraintSpec, z_batch: np.ndarray):
        z_batch = np.atleast_2d(np.asarray(z_batch, dtype=float))
        if spec.quadratic is None:
            if self.problem.shared_evaluations:
                for row in z_batch:
                    key = row.tobytes()
                    if key not in self._seen:
                        self._seen.add(key)
                        self.counters.deterministic_g_evals += 1
            else:
                self.counters.deterministic_g_evals += z_batch.shape[0]
        return np.asarray(spec.evaluate(z_batch), dtype=float)


def solve_deterministic(problem: RbdoProblem, start=None,
                        counters: EvalCounters = None) -> np.ndarray:
    """Minimize the objective subject to g_i >= 0 at the means and bounds."""
    counters = counters if counters is not None else EvalCounters()
    evaluator = _CountingEvaluator(problem, counters)
    x0 = np.asarray(start, dtype=float) if start is not None else problem.design_start()

    def objective(mu):
        counters.objective_evals += 1
        return float(problem.objective(np.asarray(mu, dtype=float)))

    def make_con(spec):
        def fun(mu):
            z = problem.full_mean(mu)
            return float(evaluator.eval_constraint(spec, z[None, :])[0])
        return fun

    cons = [{"type": "ineq", "fun": make_con(spec)} for spec in problem.constraints]
    res = minimize(objective, x0, method="SLSQP", bounds=problem.bounds,
                   constraints=cons, options={"maxiter": 500, "ftol": 1e-10})
    if not res.success:
        raise SolverFailureError(
            f"deterministic solve failed: {res.message}", phase="deterministic"
        )
    return np.asarray(res.x, dtype=float)


def _default_plan(n: int, box: DoeBox, scheme: Scheme = None):
    if scheme is Scheme.BBD or (scheme is None and n >= 3):
        return bbd_points(n, box)
    if scheme is Scheme.CCD:
        return ccd_points(n, box)
    if n == 2:
        return inscribed_ccd_2(box)
    raise UnsupportedDesignError(f"no default DOE scheme for n = {n}")


def build_surrogates(problem: RbdoProblem, mu_det, beta_d_max: float,
                     counters: EvalCounters = None):
    """Fit one quadratic per constraint around the deterministic solution.

    Constraints that already carry an explicit quadratic are passed
    through untouched and cost no evaluations.  Returns
    (surrogates, plan_or_None).
    """
    counters = counters if counters is not None else EvalCounters()
    evaluator = _CountingEvaluator(problem, counters)
    blackbox = [s for s in problem.constraints if s.quadratic is None]
    if not blackbox:
        return [s.quadratic for s in problem.constraints], None

    mu_full = problem.full_mean(np.asarray(mu_det, dtype=float))
    vars_at = problem.variables_at(mu_full)
    box = doe_box(vars_at, problem.corr, beta_d_max, mu_full,
                  halfwidth_overrides=problem.doe_halfwidth_overrides,
                  c_r_design=problem.doe_c_r_design,
                  c_r_parameter=problem.doe_c_r_parameter)
    plan = _default_plan(problem.n_z, box, problem.doe_scheme)

    surrogates = []
    for spec in problem.constraints:
        if spec.quadratic is not None:
            surrogates.append(spec.quadratic)
            continue
        values = evaluator.eval_constraint(spec, plan.points)
        surrogates.append(fit_quadratic(plan.points, values))
    return surrogates, plan


def probabilistic_constraint(q: QuadraticForm, problem: RbdoProblem,
                             spec: ConstraintSpec, counters: EvalCounters = None):
    """Analytic constraint g*(mu_design) = pf_target - pf_closed_form(mu).

    Evaluation never calls the original black-box limit state.
    """
    target = spec.pf_target

    def gstar(mu_design):
        if counters is not None:
            counters.gstar_evals += 1
        mu_full = problem.full_mean(mu_design)
        vars_at = problem.variables_at(mu_full)
        qn = to_standard_normal(q, vars_at, problem.corr, mu_full)
        pf, _ = pf_quadratic(qn)
        return target - pf

    return gstar


def _central_diff_jac(fun, rel_step=1e-6):
    def jac(x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for i in range(x.size):
            h = rel_step * max(1.0, abs(x[i]))
            xp = x.copy(); xp[i] += h
            xm = x.copy(); xm[i] -= h
            out[i] = (fun(xp) - fun(xm)) / (2.0 * h)
        return out
    return jac


def _constrained_minimize(objective, gstars, scales, x0, bounds, trace,
                          shift=0.0, maxiter=400):
    """One SLSQP pass over scaled inequality constraints g*/scale >= shift."""
    cons = []
    for gs, sc in zip(gstars, scales):
        fun = (lambda gs=gs, sc=sc: lambda mu: gs(mu) / sc - shift)()
        cons.append({"type": "ineq", "fun": fun, "jac": _central_diff_jac(fun)})

    def record(xk):
        gmin = min(gs(xk) for gs in gstars) if gstars else np.inf
        trace.append((len(trace), np.array(xk), float(objective(xk)), float(gmin)))

    res = minimize(objective, x0, jac=_central_diff_jac(objective), method="SLSQP",
                   bounds=bounds, constraints=cons, callback=record,
                   options={"maxiter": maxiter, "ftol": 1e-12})
    return res


def rssl_solve(problem: RbdoProblem, start=None, extra_starts: int = 4) -> RbdoResult:
    """Response-surface single-loop solve.

    Deterministic solve, one DOE batch, quadratic fits, then a single
    constrained optimization over analytic probabilistic constraints.
    ``extra_starts`` deterministic perturbations of the deterministic
    solution guard against poor local minima of the single loop.
    """
    counters = EvalCounters()
    mu_det = solve_deterministic(problem, start=start, counters=counters)
    evals_before_doe = counters.deterministic_g_evals

    beta_d_max = max(s.beta_target for s in problem.constraints)
    surrogates, plan = build_surrogates(problem, mu_det, beta_d_max, counters=counters)
    doe_evals = counters.deterministic_g_evals - evals_before_doe
    frozen_evals = counters.deterministic_g_evals

    gstars = [
        probabilistic_constraint(q, problem, spec, counters=counters)
        for q, spec in zip(surrogates, problem.constraints)
    ]
    scales = [spec.pf_target for spec in problem.constraints]

    def objective(mu):
        counters.objective_evals += 1
        return float(problem.objective(np.asarray(mu, dtype=float)))

    trace = []
    lo = np.array([b[0] for b in problem.bounds])
    hi = np.array([b[1] for b in problem.bounds])
    starts = [np.asarray(mu_det, dtype=float)]
    rng = np.random.default_rng(0)
    for _ in range(extra_starts):
        jitter = rng.uniform(-0.25, 0.25, size=mu_det.size) * np.where(
            np.isfinite(hi - lo), hi - lo, 1.0
        )
        starts.append(np.clip(mu_det + jitter, lo, hi))

    best = None
    for x0 in starts:
        res = _constrained_minimize(objective, gstars, scales, x0, problem.bounds, trace)
        if not res.success:
            continue
        viol = max((-gs(res.x) for gs in gstars), default=0.0)
        # restoration: shift the scaled constraints inward until the
        # unscaled model is satisfied to FEASIBILITY_SLACK
        shift = 0.0
        attempts = 0
        while viol > FEASIBILITY_SLACK and attempts < 5:
            shift += 2.0 * max(viol / min(scales), 1e-12)
            res = _constrained_minimize(objective, gstars, scales, res.x,
                                        problem.bounds, trace, shift=shift)
            if not res.success:
                break
            viol = max((-gs(res.x) for gs in gstars), default=0.0)
            attempts += 1
        if not res.success or viol > FEASIBILITY_SLACK:
            continue
        if best is None or res.fun < best.fun:
            best = res

    if best is None:
        raise SolverFailureError("single-loop optimization failed", phase="single-loop",
                                 trace=trace)
    assert counters.deterministic_g_evals == frozen_evals, (
        "black-box limit state called during the single loop"
    )

    mu_opt = np.asarray(best.x, dtype=float)
    pf_cf = [spec.pf_target - gs(mu_opt) for gs, spec in zip(gstars, problem.constraints)]
    return RbdoResult(
        method="rssl", mu_opt=mu_opt, objective_value=float(best.fun),
        pf_closed_form=pf_cf, counters=counters, trace=trace, success=True,
        message=str(best.message), mu_det=mu_det, doe_evals=doe_evals,
    )


def rbdo_double_loop_form(problem: RbdoProblem, start=None) -> RbdoResult:
    """FORM-based double loop: constraints beta_HL_i(mu) >= beta_d_i.

    Baseline method; every constraint evaluation runs an MPP search.
    """
    counters = EvalCounters()
    cache = [dict() for _ in problem.constraints]

    def beta_con(idx, spec):
        def fun(mu):
            mu = np.asarray(mu, dtype=float)
            key = mu.tobytes()
            hit = cache[idx].get(key)
            if hit is not None:
                return hit
            mu_full = problem.full_mean(mu)
            vars_at = problem.variables_at(mu_full)

            def g(z):
                counters.deterministic_g_evals += np.atleast_2d(z).shape[0]
                return spec.evaluate(z)

            # the inner MPP search must be a deterministic function of mu,
            # otherwise the outer finite differences see solver noise
            beta, _, _ = form_mpp(g, vars_at, problem.corr)
            out = beta - spec.beta_target
            cache[idx][key] = out
            return out
        return fun

    def objective(mu):
        counters.objective_evals += 1
        return float(problem.objective(np.asarray(mu, dtype=float)))

    x0 = np.asarray(start, dtype=float) if start is not None else problem.design_start()
    trace = []

    def record(xk):
        trace.append((len(trace), np.array(xk), float(objective(xk)), np.nan))

    # central differences with a step far above the inner solver tolerance
    cons = []
    for i, s in enumerate(problem.constraints):
        fun = beta_con(i, s)
        cons.append({"type": "ineq", "fun": fun,
                     "jac": _central_diff_jac(fun, rel_step=1e-5)})
    res = minimize(objective, x0, jac=_central_diff_jac(objective),
                   method="SLSQP", bounds=problem.bounds,
                   constraints=cons, callback=record,
                   options={"maxiter": 300, "ftol": 1e-10})
    if not res.success:
        raise SolverFailureError(f"double-loop FORM solve failed: {res.message}",
                                 phase="double-loop", trace=trace)

    mu_opt = np.asarray(res.x, dtype=float)
    pf_cf = []
    for i, spec in enumerate(problem.constraints):
        beta = beta_con(i, spec)(mu_opt) + spec.beta_target
        pf_cf.append(float(std_normal(-beta)[1]))
    return RbdoResult(
        method="form-double-loop", mu_opt=mu_opt, objective_value=float(res.fun),
        pf_closed_form=pf_cf, counters=counters, trace=trace, success=True,
        message=str(res.message),
    )


def mc_audit(problem: RbdoProblem, mu_design, n: int, seed: int):
    """Per-constraint Monte Carlo estimates at a design point."""
    mu_full = problem.full_mean(np.asarray(mu_design, dtype=float))
    vars_at = problem.variables_at(mu_full)
    out = []
    for i, spec in enumerate(problem.constraints):
        out.append(mc_pf(spec.evaluate, vars_at, problem.corr, n=n, seed=seed + i))
    return out
