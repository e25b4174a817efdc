import math

import pytest

from bivcpe import reliability as R
from bivcpe.distributions import (make_independent, make_log_interaction_uniform, make_power,
                                  truncated_exponential_marginal, uniform_marginal)

import oracle


def test_uniform(unif):
    for at in ((0.6, 0.3), (0.2, 0.9)):
        assert R.reversed_hazard(unif, at, 1) == pytest.approx(1 / at[0], rel=1e-8)
        assert R.eit(unif, at, 1) == pytest.approx(at[0] / 2, rel=1e-9)
        assert R.eit(unif, at, 2) == pytest.approx(at[1] / 2, rel=1e-9)


@pytest.mark.parametrize("theta", [-0.5, -1.0])
def test_log_interaction(theta):
    model = make_log_interaction_uniform(theta, validate=False)
    t1, t2 = 0.4, 0.7
    want_phi = (1 + theta * math.log(t2)) / t1
    want_m = t1 / (2 + theta * math.log(t2))
    assert R.reversed_hazard(model, (t1, t2), 1, use_closed_form=False) == pytest.approx(want_phi)
    assert R.reversed_hazard(model, (t1, t2), 1) == pytest.approx(want_phi)
    assert R.eit(model, (t1, t2), 1, use_closed_form=False) == pytest.approx(want_m, abs=1e-9)


def test_power_eit_slope_constant_in_ti():
    model = make_power()
    for tj in (0.3, 0.8):
        slopes = []
        for ti in (0.4, 0.9, 1.6):
            h = 1e-5
            up = R.eit(model, (ti + h, tj), 1, use_closed_form=False)
            dn = R.eit(model, (ti - h, tj), 1, use_closed_form=False)
            slopes.append((up - dn) / (2 * h))
        assert max(slopes) - min(slopes) < 1e-5


def test_nonnegative_and_bounded(cat):
    for model in cat.values():
        b1, b2 = model.b
        at = (0.5 * b1, 0.5 * b2)
        for i in (1, 2):
            assert R.reversed_hazard(model, at, i) >= 0
            m = R.eit(model, at, i)
            assert 0 < m <= at[i - 1]


def test_conditional_linear_density(linear_density):
    # slice f(z, 0.5) = (z + 2)/6, integral over (0, 1) is 5/12
    assert R.cond_reversed_hazard(linear_density, (1.0, 0.5), 1) == pytest.approx(0.5 / (5 / 12))
    for at in ((1.0, 0.5), (1.8, 0.9)):
        for i in (1, 2):
            m = R.cond_eit(linear_density, at, i)
            assert 0 < m <= at[i - 1]
            assert m == pytest.approx(oracle.cond_eit(linear_density, *at, i), abs=1e-6)


def test_conditional_independent_reduces():
    m1 = truncated_exponential_marginal(0.9, 2.0)
    model = make_independent(m1, uniform_marginal())
    at = (1.1, 0.4)
    assert R.cond_eit(model, at, 1) == pytest.approx(R.eit_univariate(m1, 1.1), abs=1e-9)
    want = float(m1.pdf(1.1)) / float(m1.cdf(1.1))
    assert R.cond_reversed_hazard(model, at, 1) == pytest.approx(want, rel=1e-8)


def test_empty_conditioning(triangle):
    with pytest.raises(R.EmptyConditioningError):
        R.cond_eit(triangle, (0.2, 0.5), 1)
    with pytest.raises(R.EmptyConditioningError):
        R.eit_univariate(uniform_marginal(), 0.0)


def test_vector(triangle):
    v = R.reliability_vector(triangle, (0.7, 0.3), "eit")
    a, b = v
    assert a == pytest.approx(R.eit(triangle, (0.7, 0.3), 1))
    assert b == pytest.approx(R.eit(triangle, (0.7, 0.3), 2))
    assert not v.near_origin
    assert R.reliability_vector(triangle, (1e-4, 1e-4), "reversed_hazard").near_origin
    with pytest.raises(ValueError):
        R.reliability_vector(triangle, (1.5, 0.3), "eit")
    with pytest.raises(KeyError):
        R.reliability_vector(triangle, (0.5, 0.3), "hazard")
