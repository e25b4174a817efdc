import json
import math

import numpy as np
import pytest

from bivcpe import measures as M
from bivcpe.distributions import (CATALOGUE_NAMES, BivariateModel, EvalPoint, InvalidModelError,
                                  SupportBox, load_tabulated, make_extreme_value_b,
                                  make_independent,
                                  make_linear_transform, make_log_interaction_uniform,
                                  make_monotone_transform, make_power, model_from_spec,
                                  power_marginal, truncated_exponential_marginal,
                                  uniform_marginal, write_tabulated)

TRIANGLE_CPE = 11.0 / 24.0 - math.log(2) / 3.0


def test_support_box_rejects_bad_limits():
    with pytest.raises(ValueError):
        SupportBox(0.0, 1.0)
    with pytest.raises(ValueError):
        SupportBox(1.0, math.inf)


def test_every_catalogue_model_validates(cat):
    assert set(cat) == set(CATALOGUE_NAMES)
    for model in cat.values():
        model.validate()
        b1, b2 = model.b
        assert float(model.cdf(b1, b2)) == pytest.approx(1.0, abs=1e-9)
        assert float(model.cdf(0.0, b2)) == 0.0


def test_triangle(triangle):
    assert float(triangle.cdf(1, 1)) == 1.0
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(triangle.marginal_cdf(1, x), x ** 2, atol=1e-15)
    np.testing.assert_allclose(triangle.marginal_cdf(2, x), 2 * x - x ** 2, atol=1e-15)
    assert float(triangle.pdf(0.6, 0.2)) == 2.0 and float(triangle.pdf(0.2, 0.6)) == 0.0
    assert M.cpe_univariate(triangle.marginal(1)).value == pytest.approx(2 / 9, abs=1e-9)
    assert M.cpe_univariate(triangle.marginal(2)).value == pytest.approx(
        10 / 9 - 4 / 3 * math.log(2), abs=1e-9)


def test_extreme_value_b_formula():
    m = 2.0
    model = make_extreme_value_b(m)
    x0 = model.params["shift"]

    def raw(a, b):
        return math.exp(-(math.exp(-m * a) + math.exp(-m * b)) ** (1 / m))

    hi = x0 + 12.0
    mass = raw(hi, hi) - raw(x0, hi) - raw(hi, x0) + raw(x0, x0)
    for t in (1.0, 3.0, 6.0):
        want = (raw(x0 + t, x0 + t) - 2 * raw(x0, x0 + t) + raw(x0, x0)) / mass
        assert float(model.cdf(t, t)) == pytest.approx(want, rel=1e-12)
    # untruncated F(x, x) = exp(-2^{1/m} e^{-x}) far from the cut
    assert raw(x0 + 6, x0 + 6) == pytest.approx(math.exp(-2 ** 0.5 * math.exp(-(x0 + 6))))
    assert raw(x0, x0) == pytest.approx(1e-12, rel=1e-9)
    with pytest.raises(ValueError):
        make_extreme_value_b(0.5)


def test_extreme_value_b_independent_case():
    model = make_extreme_value_b(1.0)
    x0 = model.params["shift"]
    a, b = x0 + 2.0, x0 + 5.0
    raw = math.exp(-math.exp(-a) - math.exp(-b))
    assert raw == pytest.approx(math.exp(-math.exp(-a)) * math.exp(-math.exp(-b)))


def test_reciprocal_pair(cat):
    f, g = cat["reciprocal_f"], cat["reciprocal_g"]
    assert float(f.cdf(4, 4)) == pytest.approx(1.0)
    assert float(f.marginal_cdf(1, 0.4)) == pytest.approx(0.1)
    assert float(g.marginal_cdf(1, 0.4)) == pytest.approx(0.16)
    assert float(f.cdf(1.0, 2.0)) == pytest.approx(1 / (4 + 2 - 1))
    assert float(g.cdf(0.5, 0.5)) == pytest.approx(1 / (4 + 4 - 1))


def test_log_interaction():
    with pytest.raises(ValueError):
        make_log_interaction_uniform(0.5)
    m0 = make_log_interaction_uniform(0.0)
    for t in ((0.3, 0.7), (0.9, 0.2)):
        assert float(m0.cdf(*t)) == pytest.approx(t[0] * t[1], rel=1e-14)
    m = make_log_interaction_uniform(-0.5)
    want = 0.5 / (2 - 0.5 * math.log(0.5))
    assert m.closed_forms["eit"](0.5, 0.5, 1) == pytest.approx(want)
    from bivcpe.reliability import eit
    assert eit(m, (0.5, 0.5), 1, use_closed_form=False) == pytest.approx(want, abs=1e-9)


def test_log_interaction_theta_minus_two_fails_battery():
    with pytest.raises(InvalidModelError):
        make_log_interaction_uniform(-2.0, validate=True)
    make_log_interaction_uniform(-2.0, validate=False)


def test_power_family():
    uni = make_power(1.0, 1.0, 0.0, 1.0, 1.0)
    x = np.linspace(0.05, 1, 7)
    X1, X2 = np.meshgrid(x, x)
    np.testing.assert_allclose(uni.cdf(X1, X2), X1 * X2, atol=1e-14)
    p = make_power(2.0, 1.5, 0.0, 1.0, 1.0)
    np.testing.assert_allclose(p.marginal_cdf(1, x), x ** 2, atol=1e-14)
    ind = make_independent(power_marginal(2.0, 1.0), power_marginal(1.5, 1.0))
    np.testing.assert_allclose(p.cdf(X1, X2), ind.cdf(X1, X2), atol=1e-12)
    with pytest.raises(ValueError):
        make_power(2.0, 1.5, 0.5)
    with pytest.raises(InvalidModelError):
        make_power(0.2, 0.2, -3.0)


def test_linear_density(linear_density):
    assert float(linear_density.cdf(2, 1)) == pytest.approx(1.0)
    assert float(linear_density.pdf(1, 0.5)) == pytest.approx(0.5)


def test_independent_uniform(unif):
    x = np.linspace(0.1, 1, 5)
    np.testing.assert_allclose(unif.cdf(x, x[::-1]), x * x[::-1])
    assert M.bivariate_cpe(unif, use_closed_form=False).value == pytest.approx(0.25, abs=1e-9)


def test_independent_decomposition_truncated_exponential():
    m1 = truncated_exponential_marginal(1.5, 2.0)
    m2 = uniform_marginal(3.0)
    model = make_independent(m1, m2)
    e1 = M.cpe_univariate(m1).value
    e2 = M.cpe_univariate(m2).value
    want = (m2.b - m2.mean) * e1 + (m1.b - m1.mean) * e2
    assert M.bivariate_cpe(model, use_closed_form=False).value == pytest.approx(want, abs=1e-6)


def test_linear_transform(triangle):
    same = make_linear_transform(triangle)
    assert float(same.cdf(0.4, 0.3)) == float(triangle.cdf(0.4, 0.3))
    y = make_linear_transform(triangle, 2.0, 3.0)
    assert M.bivariate_cpe(y).value == pytest.approx(6 * TRIANGLE_CPE, abs=1e-6)
    shifted = make_linear_transform(triangle, 2.0, 3.0, 0.5, 1.0)
    assert float(shifted.cdf(0.4, 2.0)) == 0.0
    assert shifted.mass_lower == (0.5, 1.0)
    a = M.cdcpe_interval(shifted, (1.5, 2.5), 1).value
    b = M.cdcpe_interval(triangle, (0.5, 0.5), 1).value
    assert a == pytest.approx(2 * b, abs=1e-8)
    with pytest.raises(ValueError):
        make_linear_transform(triangle, -1.0, 1.0)


def test_monotone_transform(triangle):
    ident = make_monotone_transform(triangle, lambda x: x, lambda y: y, np.ones_like)
    assert float(ident.cdf(0.7, 0.2)) == pytest.approx(float(triangle.cdf(0.7, 0.2)))
    with pytest.raises(ValueError):
        make_monotone_transform(triangle, lambda x: np.sin(6 * x), np.arcsin,
                                lambda x: 6 * np.cos(6 * x))
    with pytest.raises(ValueError):
        make_monotone_transform(triangle, lambda x: x + 1, lambda y: y - 1, np.ones_like)


def test_tabulated_round_trip(tmp_path, triangle, unif):
    path = write_tabulated(tmp_path / "tri.csv", triangle, 201, 201)
    tab = load_tabulated(path, (1.0, 1.0))
    assert M.bivariate_cpe(tab).value == pytest.approx(TRIANGLE_CPE, abs=1e-3)
    path = write_tabulated(tmp_path / "unif.csv", unif, 51, 51)
    assert M.bivariate_cpe(load_tabulated(path)).value == pytest.approx(0.25, abs=1e-3)


def test_tabulated_rejects(tmp_path):
    p = tmp_path / "ones.csv"
    rows = ["x1,x2,F"] + [f"{a},{b},1.0" for a in (0, 0.5, 1) for b in (0, 0.5, 1)]
    p.write_text("\n".join(rows) + "\n")
    with pytest.raises(InvalidModelError):
        load_tabulated(p)
    p.write_text("a,b,c\n0,0,0\n")
    with pytest.raises(ValueError):
        load_tabulated(p)
    rows = ["x1,x2,F"] + [f"{a},{b},{a * b}" for a in (1, 0.5, 0) for b in (0, 0.5, 1)]
    p.write_text("\n".join(rows) + "\n")
    with pytest.raises(ValueError):
        load_tabulated(p)
    rows = ["x1,x2,F"] + [f"{a},{b},{a * b}" for a in (0.1, 0.5, 1) for b in (0.1, 0.5, 1)]
    p.write_text("\n".join(rows) + "\n")
    with pytest.raises(ValueError):
        load_tabulated(p)


def test_model_from_spec(tmp_path):
    assert model_from_spec("triangle").name == "triangle"
    m = model_from_spec('{"family": "power", "params": {"c1": 1.0, "c2": 1.0, "theta": 0.0, '
                        '"b1": 1.0, "b2": 1.0}}')
    assert float(m.cdf(0.5, 0.5)) == pytest.approx(0.25)
    spec = {"family": "independent_uniform", "transform": {"linear": {"c1": 2, "c2": 1, "d1": 0.5}}}
    f = tmp_path / "m.json"
    f.write_text(json.dumps(spec))
    m = model_from_spec(str(f))
    assert m.b == (2.5, 1.0)
    with pytest.raises(ValueError):
        model_from_spec("no_such_family")
    with pytest.raises(ValueError):
        model_from_spec({"params": {}})


def test_check_point(triangle):
    assert triangle.check_point((0.5, 0.5)) == EvalPoint(0.5, 0.5)
    for bad in ((0.0, 0.5), (1.2, 0.5), (0.5, -0.1)):
        with pytest.raises(ValueError):
            triangle.check_point(bad)


def test_validate_catches_bad_cdf():
    bad = BivariateModel("bad", SupportBox(1.0, 1.0), lambda a, b: np.minimum(1.0, a + b),
                         marginals=(uniform_marginal(), uniform_marginal()))
    with pytest.raises(InvalidModelError):
        bad.validate()
