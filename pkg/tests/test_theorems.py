import math

import numpy as np
import pytest

from bivcpe import measures as M
from bivcpe import theorems as T
from bivcpe.distributions import (EvalPoint, make_independent_uniform,
                                  make_linear_transform, make_log_interaction_uniform)


def small_grid(model, n=3):
    return T.grid_points(model, n)


def test_check_result_invariants():
    with pytest.raises(ValueError):
        T.CheckResult("x", "m", "maybe", 0.0, None, 1.0)
    with pytest.raises(ValueError):
        T.CheckResult("x", "m", "fail", 2.0, None, 1.0)
    r = T.CheckResult("x", "m", "pass", -1.0, EvalPoint(0.1, 0.2), 1.0, 9, values={"v": math.inf})
    assert r.passed
    assert r.to_dict()["values"]["v"] is None


def test_grid_points(triangle):
    g = T.grid_points(triangle)
    assert len(g) == 81
    assert g[0] == EvalPoint(0.1, 0.1) and g[-1] == EvalPoint(0.9, 0.9)


def test_static_bounds_on_catalogue(cat):
    for model in cat.values():
        assert T.check_crude_lower_bound(model).passed
        assert T.check_sharper_lower_bound(model).passed


def test_sharper_bound_uniform(unif):
    C1, H1 = T.sharper_bound_terms(unif, 1)
    assert H1 == pytest.approx(0.0, abs=1e-9)
    assert C1 <= 0.25


def test_too_few_points_never_pass(cat):
    model = cat["extreme_value_b"]
    r = T.check_monotonicity_iff(model, grid=T.grid_points(model, 2))
    assert r.status == "skipped" and r.n_points == 4


def test_monotonicity_iff_ev(cat):
    model = cat["extreme_value_b"]
    for kind in ("interval", "exact"):
        r = T.check_monotonicity_iff(model, grid=small_grid(model), kind=kind)
        assert r.passed, r


def test_cdcpe_below_eit_triangle(triangle):
    r = T.check_cdcpe_below_eit(triangle, grid=small_grid(triangle))
    assert r.passed
    assert r.values["max_gap_to_quoted_half_quarter"] > 1e-3


@pytest.mark.parametrize("name", ["triangle", "linear_density", "reciprocal_g"])
def test_derivative_identities(cat, name):
    model = cat[name]
    for kind in ("interval", "exact"):
        assert T.check_derivative_identity(model, kind).passed
    assert T.check_eit_identity(model).passed


def test_representations_uniform_value(unif):
    at = EvalPoint(0.5, 0.5)
    assert M.cdcpe_interval(unif, at, 1).value == pytest.approx(0.125, abs=1e-9)
    assert M.expected_tau_form(unif, at, 1) == pytest.approx(0.125, abs=1e-7)
    assert M.eit_mixture_form(unif, at, 1) == pytest.approx(0.125, abs=1e-7)
    assert T.check_representation_identities(unif).passed


def test_representations_undefined_points_excluded(triangle):
    r = T.check_representation_identities(triangle)
    assert r.passed and r.values["undefined_points"] > 0


def test_independence_and_collapse(cat):
    assert T.check_independence_decomposition(cat["independent_uniform"]).passed
    assert T.check_independence_decomposition(cat["triangle"]).status == "skipped"
    assert T.check_boundary_collapse(cat["linear_density"]).passed


def test_transformation_laws(unif):
    r = T.check_transformation_laws(unif, c=(2.0, 2.0), d=(1.0, 1.0))
    assert r.passed
    Y = make_linear_transform(unif, 2.0, 2.0, 1.0, 1.0)
    Y_val = M.cdcpe_interval(Y, (2.0, 2.0), 1).value
    assert Y_val == pytest.approx(2 * M.cdcpe_interval(unif, (0.5, 0.5), 1).value, abs=1e-8)


def test_sandwich_quadratic(triangle):
    phi, inv, dphi, a, b, name = T._phi_quadratic(1.0)
    assert (a, b) == (1.0, 1.5)
    r = T.check_monotone_transform_sandwich(triangle, phi, inv, dphi, a, b, name=name)
    assert r.passed
    assert r.values["comparisons"] == 162
    with pytest.raises(ValueError):
        T.check_monotone_transform_sandwich(triangle, phi, inv, dphi, 2.0, 1.0)


def test_characterization_uniform(cat):
    assert T.check_characterization_uniform(make_independent_uniform(2.0, 5.0)).passed
    r = T.check_characterization_uniform(cat["triangle"])
    assert r.passed and r.values["max_deviation_from_quarter"] > 1e-3
    assert T.check_characterization_uniform(make_log_interaction_uniform(0.0)).passed


@pytest.mark.parametrize("theta", [0.0, -0.5, -2.0])
def test_characterization_log_interaction(theta):
    assert T.check_characterization_log_interaction(theta).passed


def test_characterization_power():
    r = T.check_characterization_power()
    assert r.passed and r.values["max_ratio_variation"] < 1e-5
    assert T.check_characterization_power(1.0, 1.0, 0.0, 1.0, 1.0).passed
    assert T.check_characterization_power(ti_values=[0.5]).status == "skipped"


def test_uniqueness(cat):
    r = T.check_cdcpe_uniqueness_separation(cat["reciprocal_f"], cat["reciprocal_g"])
    assert r.passed and r.values["separated"]
    same = T.check_cdcpe_uniqueness_separation(cat["triangle"], cat["triangle"])
    assert same.detail == "expected-equal" and not same.values["separated"]


def test_deterministic(cat):
    model = cat["power"]
    a = T.check_derivative_identity(model)
    b = T.check_derivative_identity(model)
    assert a == b and a.worst_violation == b.worst_violation


def test_run_suite_selection(cat):
    res = T.run_suite({"triangle": cat["triangle"]}, ["crude_lower_bound", "characterization_power"])
    assert [r.check_id for r in res] == ["crude_lower_bound"] + ["characterization_power"] * 2
    with pytest.raises(KeyError):
        T.run_suite(None, ["nope"])
    assert len(T.CHECKS) == len(set(T.CHECKS))
    assert np.all([isinstance(r.to_dict(), dict) for r in res])
