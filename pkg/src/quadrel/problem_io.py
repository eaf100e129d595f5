"""Problem-file ingestion and result serialization.

A problem file is a JSON document with sections ``variables``,
``correlation`` (optional), ``objective``, ``constraints``, ``targets``
(optional global default), ``solver`` and ``doe`` (both optional).
Validation reports the JSON path of the offending field.  Documents
round-trip: saving a loaded document and reloading it reproduces an
identical in-memory problem.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import ProblemFormatError
from .montecarlo import McEstimate
from .pf import beta_generalized
from .quadratic import QuadraticForm, correlation_decompose
from .solver import ConstraintSpec, RbdoProblem, RbdoResult, StdMode
from .variables import Kind, RandomVariable, Role

_KINDS = {k.value for k in Kind}
_ROLES = {r.value for r in Role}
_SCHEMES = {"bbd", "ccd", "inscribed-ccd2"}

# Names usable inside constraint/objective expressions besides the
# variable columns themselves.
_EXPR_NAMES = {
    "sqrt": np.sqrt, "exp": np.exp, "log": np.log, "abs": np.abs,
    "sin": np.sin, "cos": np.cos, "pi": math.pi,
}


def _require(cond, message, path):
    if not cond:
        raise ProblemFormatError(message, path=path)


def _get_number(obj, key, path, default=None, required=False):
    if key not in obj:
        _require(not required, f"missing required field {key!r}", path)
        return default
    val = obj[key]
    _require(isinstance(val, (int, float)) and not isinstance(val, bool),
             f"{key!r} must be a number, got {type(val).__name__}", f"{path}.{key}")
    return float(val)


def load_document(path) -> dict:
    """Read and validate a problem file, returning the raw document."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError(f"invalid JSON: {exc}", path="") from exc
    validate_document(doc)
    return doc


def save_document(doc: dict, path):
    validate_document(doc)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def validate_document(doc: dict):
    _require(isinstance(doc, dict), "problem file must be a JSON object", "")
    variables = doc.get("variables")
    _require(isinstance(variables, list) and variables,
             "'variables' must be a non-empty list", "variables")
    names = []
    for i, v in enumerate(variables):
        p = f"variables[{i}]"
        _require(isinstance(v, dict), "variable entries must be objects", p)
        name = v.get("name")
        _require(isinstance(name, str) and name.isidentifier(),
                 "variable name must be an identifier", f"{p}.name")
        _require(name not in names, f"duplicate variable name {name!r}", f"{p}.name")
        names.append(name)
        _require(v.get("kind") in _KINDS,
                 f"kind must be one of {sorted(_KINDS)}", f"{p}.kind")
        _require(v.get("role") in _ROLES,
                 f"role must be one of {sorted(_ROLES)}", f"{p}.role")
        has_mean = "mean" in v
        has_value = "value" in v
        _require(has_mean != has_value,
                 "give exactly one of 'mean' / 'value'", p)
        mean = _get_number(v, "mean" if has_mean else "value", p, required=True)
        _require("std" not in v or "cv" not in v,
                 "give at most one of 'std' / 'cv'", p)
        std = _get_number(v, "std", p)
        cv = _get_number(v, "cv", p)
        if cv is not None:
            _require(cv >= 0.0, "cv must be >= 0", f"{p}.cv")
            std = cv * abs(mean)
        if std is not None:
            _require(std >= 0.0, "std must be >= 0", f"{p}.std")
        _get_number(v, "lower", p)
        _get_number(v, "upper", p)

    corr = doc.get("correlation")
    if corr is not None:
        n = len(variables)
        _require(isinstance(corr, list) and len(corr) == n
                 and all(isinstance(row, list) and len(row) == n for row in corr),
                 f"correlation must be a {n}x{n} matrix", "correlation")

    objective = doc.get("objective")
    _require(isinstance(objective, dict), "'objective' must be an object", "objective")
    obj_keys = {"linear", "quadratic", "expression", "builtin"} & set(objective)
    _require(len(obj_keys) == 1,
             "objective needs exactly one of 'linear', 'quadratic', "
             "'expression', 'builtin'", "objective")
    if "builtin" in objective:
        _require(objective["builtin"] in ("sum", "sum-of-squares"),
                 "builtin objective must be 'sum' or 'sum-of-squares'",
                 "objective.builtin")

    constraints = doc.get("constraints")
    _require(isinstance(constraints, list) and constraints,
             "'constraints' must be a non-empty list", "constraints")
    targets = doc.get("targets", {})
    _require(isinstance(targets, dict), "'targets' must be an object", "targets")
    global_target = ("beta_d" in targets) or ("pf_all" in targets)
    _require(not ("beta_d" in targets and "pf_all" in targets),
             "give at most one of targets.beta_d / targets.pf_all", "targets")
    for i, con in enumerate(constraints):
        p = f"constraints[{i}]"
        _require(isinstance(con, dict), "constraint entries must be objects", p)
        kind_keys = {"quadratic", "expression"} & set(con)
        _require(len(kind_keys) == 1,
                 "constraint needs exactly one of 'quadratic' / 'expression'", p)
        if "quadratic" in con:
            n = len(variables)
            expected = 1 + n + n * (n + 1) // 2
            coeffs = con["quadratic"]
            _require(isinstance(coeffs, list) and len(coeffs) == expected,
                     f"flat quadratic over {n} variables needs {expected} "
                     f"coefficients", f"{p}.quadratic")
        else:
            _require(isinstance(con["expression"], str),
                     "'expression' must be a string", f"{p}.expression")
        own_target = ("beta_d" in con) or ("pf_all" in con)
        _require(not ("beta_d" in con and "pf_all" in con),
                 "give at most one of beta_d / pf_all", p)
        _require(own_target or global_target,
                 "constraint has no target and no global targets section", p)

    solver = doc.get("solver", {})
    _require(isinstance(solver, dict), "'solver' must be an object", "solver")
    doe = doc.get("doe", {})
    _require(isinstance(doe, dict), "'doe' must be an object", "doe")
    if "scheme" in doe:
        _require(doe["scheme"] in _SCHEMES,
                 f"doe scheme must be one of {sorted(_SCHEMES)}", "doe.scheme")
    if "halfwidth_overrides" in doe:
        hw = doe["halfwidth_overrides"]
        _require(isinstance(hw, dict), "halfwidth_overrides must be an object",
                 "doe.halfwidth_overrides")
        for key in hw:
            _require(key in names, f"unknown variable {key!r}",
                     f"doe.halfwidth_overrides.{key}")


def _compile_expression(expr: str, names: list[str], path: str):
    """Compile an expression over named variable columns into g(z)."""
    try:
        code = compile(expr, "<constraint>", "eval")
    except SyntaxError as exc:
        raise ProblemFormatError(f"bad expression: {exc}", path=path) from exc
    for used in code.co_names:
        if used not in names and used not in _EXPR_NAMES:
            raise ProblemFormatError(f"unknown name {used!r} in expression",
                                     path=path)
    idx = {name: i for i, name in enumerate(names)}

    def g(z):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        env = {name: z[:, idx[name]] for name in names}
        env.update(_EXPR_NAMES)
        return np.asarray(eval(code, {"__builtins__": {}}, env), dtype=float)

    return g


def _build_objective(spec: dict, design_names: list[str]):
    nd = len(design_names)
    if "builtin" in spec:
        if spec["builtin"] == "sum":
            return lambda mu: float(np.sum(mu))
        return lambda mu: float(np.sum(np.asarray(mu) ** 2))
    if "linear" in spec:
        coeffs = np.asarray(spec["linear"], dtype=float)
        if coeffs.shape != (nd,):
            raise ProblemFormatError(
                f"linear objective needs {nd} coefficients", path="objective.linear")
        const = float(spec.get("constant", 0.0))
        return lambda mu: float(coeffs @ np.asarray(mu, dtype=float) + const)
    if "quadratic" in spec:
        try:
            q = QuadraticForm.from_flat(np.asarray(spec["quadratic"], dtype=float), nd)
        except Exception as exc:
            raise ProblemFormatError(str(exc), path="objective.quadratic") from exc
        return lambda mu: float(q(np.asarray(mu, dtype=float)))
    g = _compile_expression(spec["expression"], design_names, "objective.expression")
    return lambda mu: float(g(np.atleast_2d(mu))[0])


def build_problem(doc: dict) -> RbdoProblem:
    """Construct an RbdoProblem from a validated document."""
    validate_document(doc)
    variables = []
    for v in doc["variables"]:
        mean = float(v["mean"] if "mean" in v else v["value"])
        std = float(v["std"]) if "std" in v else (
            float(v["cv"]) * abs(mean) if "cv" in v else 0.0)
        variables.append(RandomVariable(
            name=v["name"], kind=Kind(v["kind"]), role=Role(v["role"]),
            mean=mean, std=std,
            lower=float(v.get("lower", -math.inf)),
            upper=float(v.get("upper", math.inf)),
        ))
    names = [v.name for v in variables]
    design_names = [v.name for v in variables if v.is_design]

    corr = None
    if doc.get("correlation") is not None:
        corr = correlation_decompose(np.asarray(doc["correlation"], dtype=float))

    targets = doc.get("targets", {})
    constraints = []
    for i, con in enumerate(doc["constraints"]):
        target = {}
        if "beta_d" in con:
            target["beta_d"] = float(con["beta_d"])
        elif "pf_all" in con:
            target["pf_all"] = float(con["pf_all"])
        elif "beta_d" in targets:
            target["beta_d"] = float(targets["beta_d"])
        else:
            target["pf_all"] = float(targets["pf_all"])
        name = con.get("name", f"g{i+1}")
        if "quadratic" in con:
            q = QuadraticForm.from_flat(np.asarray(con["quadratic"], dtype=float),
                                        len(variables))
            constraints.append(ConstraintSpec(name=name, quadratic=q, **target))
        else:
            g = _compile_expression(con["expression"], names,
                                    f"constraints[{i}].expression")
            constraints.append(ConstraintSpec(name=name, g=g, **target))

    doe = doc.get("doe", {})
    scheme = doe.get("scheme")
    std_mode = StdMode()
    solver = doc.get("solver", {})
    if "proportional_t" in solver:
        std_mode = StdMode(proportional=True,
                           t=np.asarray(solver["proportional_t"], dtype=float))

    return RbdoProblem(
        variables=variables,
        objective=_build_objective(doc["objective"], design_names),
        constraints=constraints,
        corr=corr,
        std_mode=std_mode,
        shared_evaluations=bool(doc.get("shared_evaluations", False)),
        doe_scheme=scheme,
        doe_halfwidth_overrides=dict(doe.get("halfwidth_overrides", {})),
        doe_c_r_design=doe.get("c_r_design"),
        doe_c_r_parameter=doe.get("c_r_parameter"),
    )


def load_problem(path) -> RbdoProblem:
    return build_problem(load_document(path))


def mc_estimate_to_dict(est: McEstimate) -> dict:
    return {
        "pf": est.pf_hat,
        "ci95_halfwidth": est.ci95_halfwidth,
        "beta_mc": beta_generalized(est.pf_hat),
        "n": est.n,
        "seed": est.seed,
    }


def result_to_dict(res: RbdoResult, wall_time: float = None) -> dict:
    """Serializable report of a solver run (schema documented in README)."""
    out = {
        "method": res.method,
        "success": res.success,
        "message": res.message,
        "mu_opt": np.asarray(res.mu_opt, dtype=float).tolist(),
        "objective": res.objective_value,
        "pf_closed_form": [float(p) for p in res.pf_closed_form],
        "beta_closed_form": [beta_generalized(float(p)) for p in res.pf_closed_form],
        "counters": {
            "deterministic_g_evals": res.counters.deterministic_g_evals,
            "gstar_evals": res.counters.gstar_evals,
            "objective_evals": res.counters.objective_evals,
        },
        "doe_evals": res.doe_evals,
    }
    if res.mu_det is not None:
        out["mu_det"] = np.asarray(res.mu_det, dtype=float).tolist()
    if res.pf_mc is not None:
        out["pf_mc"] = [mc_estimate_to_dict(e) for e in res.pf_mc]
    if wall_time is not None:
        out["wall_time_s"] = wall_time
    return out


def save_result(res: RbdoResult, path, wall_time: float = None):
    with open(path, "w") as fh:
        json.dump(result_to_dict(res, wall_time=wall_time), fh, indent=2)
        fh.write("\n")


def trace_to_csv(trace, path):
    """Write a solver trace as CSV: iteration, mu components, objective, min g*."""
    with open(path, "w") as fh:
        if trace:
            ncomp = len(trace[0][1])
            cols = ["iteration"] + [f"mu{i+1}" for i in range(ncomp)]
            fh.write(",".join(cols + ["objective", "min_gstar"]) + "\n")
        for it, mu, obj, gmin in trace:
            row = [str(it)] + [repr(float(m)) for m in mu] + [repr(obj), repr(gmin)]
            fh.write(",".join(row) + "\n")
