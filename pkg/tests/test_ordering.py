import pytest

from bivcpe.distributions import EvalPoint, make_independent_uniform, make_log_interaction_uniform
from bivcpe.ordering import (ORDER_TOL, OrderVerdict, check_order_preservation, comparison_grid,
                             compare_cdcpe, compare_usual_stochastic)


def test_verdict_validates():
    with pytest.raises(ValueError):
        OrderVerdict("sideways", (), "", 1e-7)


def test_comparison_grid(cat):
    g = comparison_grid(cat["reciprocal_f"], cat["reciprocal_g"], 9)
    assert len(g) == 81
    assert g[0] == EvalPoint(0.05, 0.05) and g[-1] == EvalPoint(0.95, 0.95)
    shifted = make_independent_uniform(1.0, 1.0)
    from bivcpe.distributions import make_linear_transform
    far = make_linear_transform(shifted, 1.0, 1.0, 2.0, 2.0)
    with pytest.raises(ValueError):
        comparison_grid(shifted, far)


def test_reflexive(cat):
    v = compare_cdcpe(cat["triangle"], cat["triangle"])
    assert v.direction == "equal" and v.certification == "grid-certified"
    assert v.tolerance == ORDER_TOL


def test_uniform_vs_log_interaction_stable():
    U = make_independent_uniform()
    L = make_log_interaction_uniform(-1.0, validate=False)
    coarse = compare_cdcpe(U, L, n=9)
    fine = compare_cdcpe(U, L, n=17)
    assert coarse.direction == fine.direction
    # eps*_i(L) = t_i (1 + k)/(2 + k)^2 <= t_i / 4 with k = -log t_j >= 0
    assert coarse.direction == "Y_geq_X"


def test_antisymmetry():
    U = make_independent_uniform()
    L = make_log_interaction_uniform(-1.0, validate=False)
    a = compare_cdcpe(U, L, n=5)
    b = compare_cdcpe(L, U, n=5)
    assert {a.direction, b.direction} == {"X_geq_Y", "Y_geq_X"}


def test_transitivity_spot_check():
    models = [make_log_interaction_uniform(th, validate=False) for th in (0.0, -0.5, -1.0)]
    grid = comparison_grid(models[0], models[1], 5)
    ab = compare_cdcpe(models[0], models[1], grid).direction
    bc = compare_cdcpe(models[1], models[2], grid).direction
    ac = compare_cdcpe(models[0], models[2], grid).direction
    assert ab == bc == ac == "Y_geq_X"


def test_usual_stochastic(cat):
    v = compare_usual_stochastic(cat["reciprocal_f"], cat["reciprocal_g"])
    assert v.direction == "neither"
    assert v.extra["F1-G1@0.1"] == pytest.approx(0.015, abs=1e-12)
    same = compare_usual_stochastic(cat["triangle"], cat["triangle"])
    assert same.direction == "equal"


def test_order_preservation_same_shift():
    U = make_independent_uniform()
    L = make_log_interaction_uniform(-1.0, validate=False)
    # L <=_CDCPE U fails, U <=_CDCPE L holds, so run with X = L, X' = U
    r = check_order_preservation(L, U, (1.0, 1.0), (0.1, 0.1), (0.1, 0.1), n=5)
    assert r.status == "skipped" or r.values["premise_direction"] in ("X_geq_Y", "equal")
    r = check_order_preservation(U, L, (2.0, 1.0), (0.3, 0.3), (0.3, 0.3), n=9)
    assert r.passed, r


def test_order_preservation_premise_swap_skips():
    U = make_independent_uniform()
    L = make_log_interaction_uniform(-1.0, validate=False)
    r = check_order_preservation(L, U, (1.0, 1.0), (0.1, 0.1), (0.2, 0.2), n=5)
    assert r.status == "skipped" and "premise" in r.detail


def test_order_preservation_rejects_bad_shifts(cat):
    with pytest.raises(ValueError):
        check_order_preservation(cat["triangle"], cat["triangle"], (1, 1), (0.2, 0.2), (0.1, 0.1))
    with pytest.raises(ValueError):
        check_order_preservation(cat["triangle"], cat["triangle"], (0, 1), (0.1, 0.1), (0.1, 0.1))
