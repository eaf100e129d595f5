"""Builtin problem registry, problem files and the command-line interface."""

import json
import os

import numpy as np
import pytest

from quadrel.cli import main
from quadrel.errors import DomainError, ProblemFormatError
from quadrel.problem_io import (
    build_problem,
    load_document,
    result_to_dict,
    save_document,
    validate_document,
)
from quadrel.problems import (
    builtin_problems,
    crashworthiness,
    ellipse_form,
    load_crash_coefficients,
)
from quadrel.solver import rssl_solve
from quadrel.variables import std_normal, std_normal_inv

DATA = os.path.join(os.path.dirname(__file__), "data")
CRASH_CSV = os.path.join(DATA, "crash_coefficients.csv")


def ellipse_doc():
    """A complete problem document used by the file-based tests."""
    flat = [31.0 / 30.0, -8.0 / 15.0, -2.0 / 15.0,
            1.0 / 24.0, 2.0 / 40.0, 1.0 / 24.0]
    return {
        "variables": [
            {"name": "x1", "kind": "normal", "role": "design-variable", "mean": 2.0,
             "std": 0.3, "lower": 0.0, "upper": 15.0},
            {"name": "p1", "kind": "normal", "role": "parameter", "mean": 3.4,
             "std": 0.3},
        ],
        "objective": {"builtin": "sum"},
        "constraints": [{"name": "g", "quadratic": flat}],
        "targets": {"beta_d": 3.0},
    }


class TestRegistry:
    def test_expected_names(self):
        names = set(builtin_problems())
        assert {"bench-3g", "bench-quad4", "demo-ellipse", "demo-ellipse-varstd",
                "demo-ellipse-lognormal", "demo-ellipse-det",
                "crashworthiness"} <= names

    def test_builders_return_problems(self):
        for name, builder in builtin_problems().items():
            if name == "crashworthiness":
                continue
            problem = builder()
            assert problem.constraints and problem.design_indices


class TestSignConventions:
    def test_quad4_safe_at_origin(self):
        # the second limit state is published with a Prob[g > 0] bound and
        # negated at load: the origin must read +43 (safe) internally
        problem = builtin_problems()["bench-quad4"]()
        z = np.zeros((1, 4))
        assert problem.constraints[1].evaluate(z)[0] == pytest.approx(43.0)
        assert problem.constraints[0].evaluate(z)[0] == pytest.approx(13.0)

    def test_ellipse_value_at_reference_point(self):
        assert ellipse_form()(np.array([5.0, 3.4])) == pytest.approx(0.2867, abs=1e-4)

    def test_bench_3g_deterministic_objective(self):
        problem = builtin_problems()["bench-3g"]()
        assert problem.objective(np.array([3.11, 2.06])) == pytest.approx(5.176, abs=1e-2)


class TestCrashworthiness:
    def test_requires_coefficient_file(self):
        with pytest.raises(DomainError):
            crashworthiness()

    def test_loads_shipped_synthetic_file(self):
        obj, forms = load_crash_coefficients(CRASH_CSV)
        assert len(forms) == 10
        assert np.all(obj.a == 0.0)
        problem = crashworthiness(CRASH_CSV)
        assert len(problem.variables) == 11
        assert len(problem.design_indices) == 7
        assert problem.shared_evaluations

    def test_solves_end_to_end(self):
        problem = crashworthiness(CRASH_CSV)
        result = rssl_solve(problem, extra_starts=0)
        assert result.success
        assert result.doe_evals == 0
        lo = np.array([b[0] for b in problem.bounds])
        hi = np.array([b[1] for b in problem.bounds])
        assert np.all(result.mu_opt >= lo - 1e-9) and np.all(result.mu_opt <= hi + 1e-9)

    def test_malformed_rows(self, tmp_path):
        short = tmp_path / "short.csv"
        short.write_text("name,c\nobjective,1.0,2.0\n")
        with pytest.raises(ProblemFormatError):
            load_crash_coefficients(short)

    def test_missing_objective_row(self, tmp_path):
        n_flat = 78
        path = tmp_path / "noobj.csv"
        row = ",".join(["0.0"] * n_flat)
        lines = ["name," + ",".join(f"c{k}" for k in range(n_flat))]
        lines += [f"g{i}," + row for i in range(10)]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ProblemFormatError) as err:
            load_crash_coefficients(path)
        assert "objective" in str(err.value)

    def test_nonlinear_objective_rejected(self, tmp_path):
        n_flat = 78
        path = tmp_path / "nonlin.csv"
        coeffs = ["0.0"] * n_flat
        coeffs[12] = "1.0"  # first quadratic slot
        zero = ",".join(["1.0"] * n_flat)
        lines = ["name," + ",".join(f"c{k}" for k in range(n_flat)),
                 "objective," + ",".join(coeffs)]
        lines += [f"g{i}," + zero for i in range(10)]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ProblemFormatError):
            load_crash_coefficients(path)


class TestProblemDocuments:
    def test_round_trip_identity(self, tmp_path):
        doc = ellipse_doc()
        path = tmp_path / "ellipse.json"
        save_document(doc, path)
        loaded = load_document(path)
        save_document(loaded, tmp_path / "again.json")
        assert (tmp_path / "again.json").read_text() == path.read_text()
        a = build_problem(doc)
        b = build_problem(loaded)
        z = np.array([[4.0, 3.0]])
        assert a.constraints[0].evaluate(z)[0] == b.constraints[0].evaluate(z)[0]
        assert a.objective(np.array([4.0])) == b.objective(np.array([4.0]))

    def test_expression_constraint(self):
        doc = ellipse_doc()
        doc["constraints"] = [{"expression": "x1**2 * p1 / 20 - 1"}]
        problem = build_problem(doc)
        assert problem.constraints[0].name == "g1"
        z = np.array([[4.0, 2.0]])
        assert problem.constraints[0].evaluate(z)[0] == pytest.approx(4.0 ** 2 * 2.0 / 20.0 - 1.0)

    def test_cv_shorthand(self):
        doc = ellipse_doc()
        doc["variables"][0] = {"name": "x1", "kind": "normal", "role": "design-variable",
                               "mean": 2.0, "cv": 0.15, "lower": 0.0, "upper": 15.0}
        problem = build_problem(doc)
        assert problem.variables[0].std == pytest.approx(0.3)

    @pytest.mark.parametrize("mutate,path", [
        (lambda d: d.pop("variables"), "variables"),
        (lambda d: d["variables"][0].update(kind="weird"), "variables[0].kind"),
        (lambda d: d["variables"][1].update(name="x1"), "variables[1].name"),
        (lambda d: d["variables"][0].update(value=1.0), "variables[0]"),
        (lambda d: d["variables"][0].update(cv=0.1), "variables[0]"),
        (lambda d: d["variables"][0].update(std=-1.0), "variables[0].std"),
        (lambda d: d.update(correlation=[[1.0]]), "correlation"),
        (lambda d: d["objective"].update(linear=[1.0]), "objective"),
        (lambda d: d["objective"].update(builtin="mean"), "objective.builtin"),
        (lambda d: d["constraints"][0].update(expression="x1"), "constraints[0]"),
        (lambda d: d["constraints"][0].update(quadratic=[1.0, 2.0]),
         "constraints[0].quadratic"),
        (lambda d: d.pop("targets"), "constraints[0]"),
        (lambda d: d["targets"].update(pf_all=0.01), "targets"),
        (lambda d: d.update(doe={"scheme": "latin"}), "doe.scheme"),
        (lambda d: d.update(doe={"halfwidth_overrides": {"zz": 1.0}}),
         "doe.halfwidth_overrides.zz"),
    ])
    def test_validation_reports_json_path(self, mutate, path):
        doc = ellipse_doc()
        mutate(doc)
        with pytest.raises(ProblemFormatError) as err:
            validate_document(doc)
        assert err.value.path == path

    def test_unknown_expression_name(self):
        doc = ellipse_doc()
        doc["constraints"] = [{"expression": "x1 + nonsense"}]
        with pytest.raises(ProblemFormatError) as err:
            build_problem(doc)
        assert "nonsense" in str(err.value)

    def test_objective_builtin_sum_of_squares(self):
        doc = ellipse_doc()
        doc["objective"] = {"builtin": "sum-of-squares"}
        problem = build_problem(doc)
        assert problem.objective(np.array([3.0])) == 9.0


class TestCli:
    def test_solve_builtin_ok(self, capsys):
        assert main(["solve", "demo-ellipse"]) == 0
        out = capsys.readouterr().out
        assert "mu_opt" in out and "pf_cf[g]" in out

    def test_solve_writes_result_json(self, tmp_path, capsys):
        out = tmp_path / "result.json"
        assert main(["solve", "demo-ellipse", "--out", str(out)]) == 0
        res = json.loads(out.read_text())
        assert res["method"] == "rssl" and res["success"]
        assert len(res["mu_opt"]) == 1
        assert set(res["counters"]) == {"deterministic_g_evals", "gstar_evals",
                                        "objective_evals"}
        # reported beta and pf agree to machine precision
        for pf, beta in zip(res["pf_closed_form"], res["beta_closed_form"]):
            if 0.0 < pf < 1.0:
                assert abs(beta - (-std_normal_inv(pf))) <= 1e-12
                assert abs(std_normal(-beta)[1] - pf) <= 1e-12

    def test_solve_problem_file_matches_builtin(self, tmp_path, capsys):
        path = tmp_path / "ellipse.json"
        save_document(ellipse_doc(), path)
        out_file = tmp_path / "file.json"
        out_builtin = tmp_path / "builtin.json"
        assert main(["solve", str(path), "--out", str(out_file)]) == 0
        assert main(["solve", "demo-ellipse", "--out", str(out_builtin)]) == 0
        a = json.loads(out_file.read_text())
        b = json.loads(out_builtin.read_text())
        assert a["mu_opt"] == pytest.approx(b["mu_opt"], abs=1e-8)

    def test_beta_override(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert main(["solve", "demo-ellipse", "--beta", "2.0", "--out", str(out)]) == 0
        res = json.loads(out.read_text())
        assert res["success"]

    def test_pf_subcommand(self, capsys):
        assert main(["pf", "demo-ellipse", "--at", "3.0"]) == 0
        out = capsys.readouterr().out
        assert "q0" in out and "branch" in out

    def test_pf_blackbox_rejected(self, capsys):
        assert main(["pf", "bench-3g"]) == 2
        assert "black-box" in capsys.readouterr().err

    def test_mc_check(self, capsys):
        assert main(["mc-check", "demo-ellipse", "--mc-n", "100000",
                     "--at", "4.85", "--seed", "3"]) == 0
        assert "pf_mc[g]" in capsys.readouterr().out

    def test_doe_csv(self, tmp_path, capsys):
        out = tmp_path / "plan.csv"
        assert main(["doe", "bench-3g", "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "x1,x2"
        assert len(lines) == 1 + 9

    def test_doe_scheme_option(self, tmp_path, capsys):
        out = tmp_path / "plan.csv"
        assert main(["doe", "bench-3g", "--scheme", "ccd", "--out", str(out)]) == 0
        assert len(out.read_text().strip().splitlines()) == 1 + 9

    def test_bench_list(self, capsys):
        assert main(["bench", "--list"]) == 0
        assert "demo-ellipse" in capsys.readouterr().out

    def test_missing_file_is_input_error(self, capsys):
        assert main(["solve", "/no/such/file.json"]) == 2

    def test_invalid_document_is_input_error(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{\"variables\": []}")
        assert main(["solve", str(path)]) == 2
        assert "input error" in capsys.readouterr().err

    def test_crash_without_file_is_input_error(self, capsys):
        assert main(["solve", "crashworthiness"]) == 2
        assert "coefficient file" in capsys.readouterr().err

    def test_bad_at_vector(self, capsys):
        assert main(["pf", "demo-ellipse", "--at", "1,2,3"]) == 2

    def test_trace_csv(self, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        assert main(["solve", "demo-ellipse", "--trace", str(trace)]) == 0
        lines = trace.read_text().strip().splitlines()
        assert lines[0].startswith("iteration,mu1")
        assert len(lines) > 1
