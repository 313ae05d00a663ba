import json
import math

import numpy as np
import pytest

import uhdg


def test_mesh_and_space():
    disk = uhdg.DomainBoundary.circle()
    mesh = uhdg.build_mesh(disk, 0.3)
    assert mesh.num_elements > 0
    assert mesh.vertices.shape[1] == 2
    assert mesh.elements.shape == (mesh.num_elements, 3)
    assert np.all(np.hypot(mesh.vertices[:, 0], mesh.vertices[:, 1]) < 1.0)
    space = uhdg.HdgSpace(mesh, disk, 1)
    assert space.num_trace_dofs == 2 * mesh.num_faces


def test_linear_solution_is_reproduced():
    disk = uhdg.DomainBoundary.circle()
    mc = uhdg.make_manufactured("2*x - y + 0.5", uhdg.KappaVariant.OfU, "1")
    problem = mc.problem(1, 1.0, 1.0)
    space = uhdg.HdgSpace(uhdg.build_mesh(disk, 0.3), disk, 1)
    sol, trace = uhdg.solve(problem, space)
    assert trace["converged"]
    assert sol.u.shape == (3, space.mesh.num_elements)
    errors = uhdg.compute_errors(mc, problem, space, sol)
    assert errors["u_error"] < 1e-9
    assert errors["q_error"] < 1e-9


def test_nonlinear_solve_and_rate():
    disk = uhdg.DomainBoundary.circle()
    mc = uhdg.make_manufactured("exp(x)*sin(y)", uhdg.KappaVariant.OfU, "2 + sin(u)")
    problem = mc.problem(1, 1.0, 3.0)
    errs, hs = [], []
    for h in (0.2, 0.1):
        space = uhdg.HdgSpace(uhdg.build_mesh(disk, h), disk, 1)
        sol, trace = uhdg.solve(problem, space)
        assert trace["converged"]
        assert len(trace["ratios"]) == trace["iterations"] - 1
        rep = uhdg.compute_errors(mc, problem, space, sol)
        errs.append(rep["u_error"])
        hs.append(rep["h"])
    rate = uhdg.eoc(errs, hs)[0]
    assert 1.6 < rate < 2.4


def test_manufactured_source():
    mc = uhdg.make_manufactured("x^2 + y^2", uhdg.KappaVariant.OfU, "1")
    assert mc.fc(0.3, -0.2) == pytest.approx(-4.0)
    assert mc.u(0.3, -0.2) == pytest.approx(0.13)


def test_config_errors_are_reported(tmp_path):
    code, log = uhdg.run({"mesh": {"h": [0.3]}, "problem": {"kappa": "1"}}, out=str(tmp_path))
    assert code == 2
    assert "problem.kappa_lo" in log
    code, _ = uhdg.run("{not json", out=str(tmp_path))
    assert code == 2


def test_run_check_mesh(tmp_path):
    cfg = {
        "subcommand": "check-mesh",
        "problem": {"kappa": "1", "kappa_lo": 1, "kappa_hi": 1, "u_expr": "x"},
        "mesh": {"h": [0.2]},
        "tau": 1e6,
    }
    code, _ = uhdg.run(cfg, out=str(tmp_path), strict=True)
    assert code == 3
    report = json.loads((tmp_path / "admissibility_0.json").read_text())
    assert report["config_hash"] == uhdg.config_hash(cfg)
    assert not report["report"]["overall_ok"]


def test_boundary_queries():
    kite = uhdg.DomainBoundary.kite()
    x, y = kite.point(0.25)
    assert abs(kite.level(x, y)) < 1e-8
    assert kite.level(0.0, 0.0) < 0.0
    circle = uhdg.DomainBoundary.circle(2.0)
    assert circle.level(0.0, 0.0) == pytest.approx(-2.0, abs=1e-8)
    assert math.isfinite(circle.level(3.0, 0.0))


def test_divergence_raises():
    disk = uhdg.DomainBoundary.circle()
    mc = uhdg.make_manufactured("exp(x)*sin(y)", uhdg.KappaVariant.OfU, "2 + sin(u)", "500*u")
    problem = mc.problem(1, 1.0, 3.0)
    space = uhdg.HdgSpace(uhdg.build_mesh(disk, 0.3), disk, 1)
    with pytest.raises(uhdg.MaxItersExceeded):
        uhdg.solve(problem, space)
