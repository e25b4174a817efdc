"""Entropy measures built from distribution functions.

Univariate baselines (CPE, CRE and their dynamic versions), the bivariate CPE
and its dynamic version, and the two conditional dynamic CPE families:
``cdcpe_interval`` (conditioning on ``{X1 < t1, X2 < t2}``) and
``cdcpe_exact`` (conditioning on ``{Xi < ti, Xj = tj}``).

The ``*_form`` functions evaluate the alternative representations of the
conditional measures (EIT mixtures and expectations of the T / tau
functionals). They exist so the identities can be checked against the direct
integrals; nothing else depends on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .distributions import BivariateModel, EvalPoint, Marginal
from .numerics import (DEFAULT_TOL, QuadResult, Tolerances, integrate_1d, integrate_2d,
                       integrate_batch, neg_xlogx)
from .reliability import (EmptyConditioningError, SliceCDF, _coords, _slice_cdf,
                          cdf_slice, cond_eit, eit, joint_mass, partial_slice,
                          slice_points)

__all__ = [
    "MeasureReport",
    "shannon_joint",
    "shannon_marginal",
    "cpe_univariate",
    "dcpe_univariate",
    "cre_univariate",
    "dcre_univariate",
    "bivariate_cpe",
    "bivariate_dcpe",
    "crude_bound_integral",
    "cdcpe_interval",
    "cdcpe_exact",
    "t_functional",
    "tau_functional",
    "t_bar_functional",
    "tau_bar_functional",
    "log_t_form",
    "expected_tau_form",
    "eit_mixture_form",
    "expected_tau_bar_form",
    "log_t_bar_form",
    "cond_eit_mixture_form",
    "MEASURES",
    "evaluate",
]


@dataclass(frozen=True)
class MeasureReport:
    measure: str
    value: float
    est_error: float
    at: Optional[EvalPoint] = None
    i: Optional[int] = None
    used_closed_form: bool = False
    meta: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"{self.measure}: non-finite value {self.value!r}")
        if not self.est_error >= 0:
            raise ValueError(f"{self.measure}: negative error estimate {self.est_error!r}")

    def __float__(self):
        return float(self.value)


def _report(name, res: QuadResult, at=None, i=None, closed=False, **meta):
    return MeasureReport(name, float(res.value), float(abs(res.error)),
                         None if at is None else EvalPoint(float(at[0]), float(at[1])),
                         i, closed, meta)


def _breaks(marginal: Marginal):
    return np.asarray(marginal.breaks, dtype=float) if marginal.breaks else None


# -- univariate baselines ---------------------------------------------------

def cpe_univariate(marginal: Marginal, tol: Tolerances = DEFAULT_TOL) -> MeasureReport:
    """``-int_0^b F log F``."""
    res = integrate_1d(lambda x: neg_xlogx(marginal.cdf(x)), (0.0, marginal.b), tol,
                       _breaks(marginal))
    return _report("cpe", res)


def dcpe_univariate(marginal: Marginal, t: float, tol: Tolerances = DEFAULT_TOL) -> MeasureReport:
    """``-int_0^t (F(x)/F(t)) log(F(x)/F(t)) dx``."""
    Ft = float(marginal.cdf(t))
    if Ft < 1e-12:
        raise EmptyConditioningError(f"F({t:g}) = {Ft:.3g}: no mass before t")
    res = integrate_1d(lambda x: neg_xlogx(marginal.cdf(x) / Ft), (0.0, t), tol,
                       _breaks(marginal))
    return _report("dcpe", res)


def cre_univariate(marginal: Marginal, tol: Tolerances = DEFAULT_TOL) -> MeasureReport:
    """``-int_0^b Fbar log Fbar``."""
    res = integrate_1d(lambda x: neg_xlogx(marginal.survival(x)), (0.0, marginal.b), tol,
                       _breaks(marginal))
    return _report("cre", res)


def dcre_univariate(marginal: Marginal, t: float, tol: Tolerances = DEFAULT_TOL) -> MeasureReport:
    """``-int_t^b (Fbar(x)/Fbar(t)) log(Fbar(x)/Fbar(t)) dx``."""
    St = float(marginal.survival(t))
    if St < 1e-12:
        raise EmptyConditioningError(f"survival at {t:g} is {St:.3g}: no mass after t")
    res = integrate_1d(lambda x: neg_xlogx(marginal.survival(x) / St), (t, marginal.b), tol,
                       _breaks(marginal))
    return _report("dcre", res)


def shannon_marginal(model: BivariateModel, i: int, tol: Tolerances = DEFAULT_TOL) -> MeasureReport:
    m = model.marginal(i)
    res = integrate_1d(lambda x: neg_xlogx(m.pdf(x)), (0.0, m.b), tol, _breaks(m))
    return _report("shannon_marginal", res, i=i)


# -- bivariate static / dynamic ----------------------------------------------

def shannon_joint(model: BivariateModel, tol: Tolerances = DEFAULT_TOL) -> MeasureReport:
    """``-int int f log f`` with ``0 log 0 = 0``."""
    b1, b2 = model.b
    res = integrate_2d(lambda x1, x2: neg_xlogx(model.pdf(x1, x2)), ((0, b1), (0, b2)), tol,
                       model.inner_points_pdf())
    return _report("shannon_joint", res)


def bivariate_cpe(model: BivariateModel, tol: Tolerances = DEFAULT_TOL,
                  use_closed_form: bool = True) -> MeasureReport:
    """``-int_0^b1 int_0^b2 F log F``."""
    if use_closed_form and "bivariate_cpe" in model.closed_forms:
        return MeasureReport("bivariate_cpe", float(model.closed_forms["bivariate_cpe"]()), 0.0,
                             used_closed_form=True)
    b1, b2 = model.b
    res = integrate_2d(lambda x1, x2: neg_xlogx(model.cdf(x1, x2)), ((0, b1), (0, b2)), tol,
                       model.inner_points_pdf())
    return _report("bivariate_cpe", res)


def crude_bound_integral(model: BivariateModel, tol: Tolerances = DEFAULT_TOL) -> QuadResult:
    """``int int F (1 - F)``, the lower bound obtained from ``log x <= x - 1``."""
    b1, b2 = model.b

    def f(x1, x2):
        F = model.cdf(x1, x2)
        return F * (1.0 - F)

    return integrate_2d(f, ((0, b1), (0, b2)), tol, model.inner_points_pdf())


def bivariate_dcpe(model: BivariateModel, at, tol: Tolerances = DEFAULT_TOL) -> MeasureReport:
    p = model.check_point(at)
    Ft = joint_mass(model, p)
    res = integrate_2d(lambda x1, x2: neg_xlogx(model.cdf(x1, x2) / Ft),
                       ((0, p.t1), (0, p.t2)), tol, model.inner_points_pdf())
    return _report("bivariate_dcpe", res, at=p)


# -- conditional dynamic CPE -------------------------------------------------

def cdcpe_interval(model: BivariateModel, at, i: int, tol: Tolerances = DEFAULT_TOL,
                   use_closed_form: bool = True) -> MeasureReport:
    """``eps*_i``: dynamic CPE of ``X_i`` given ``X1 < t1, X2 < t2``."""
    p = model.check_point(at)
    ti, tj = _coords(p, i)
    if use_closed_form and "cdcpe_interval" in model.closed_forms:
        v = float(model.closed_forms["cdcpe_interval"](p.t1, p.t2, i))
        return MeasureReport("cdcpe_interval", v, 0.0, p, i, True)
    Ft = joint_mass(model, p)
    F = cdf_slice(model, i, tj)
    res = integrate_1d(lambda x: neg_xlogx(F(x) / Ft), (0.0, ti), tol,
                       slice_points(model, i, tj))
    return _report("cdcpe_interval", res, at=p, i=i)


def cdcpe_exact(model: BivariateModel, at, i: int, tol: Tolerances = DEFAULT_TOL) -> MeasureReport:
    """``gamma*_i``: dynamic CPE of ``X_i`` given ``X_i < t_i, X_j = t_j``."""
    p = model.check_point(at)
    ti, _ = _coords(p, i)
    S = _slice_cdf(model, p, i, tol)
    St = S.mass
    res = integrate_1d(lambda x: neg_xlogx(S(x) / St), (0.0, ti), tol, S.points)
    # relative slice error propagates through u log u with |d/du| <= 1 + |log u|
    err = res.error + ti * S.error / St * 2.0
    return _report("cdcpe_exact", QuadResult(res.value, err), at=p, i=i,
                   slice_panels=S._cum.n_panels)


# -- T and tau functionals ---------------------------------------------------

def _neg_log(u):
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise EmptyConditioningError("log of a vanishing distribution function")
    return -np.log(u)


def _batch_neg_log_integral(G, a, b, tol, points):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.broadcast_to(np.asarray(b, dtype=float), a.shape)
    v, e = integrate_batch(lambda x, k: _neg_log(G(x)), a, b, tol, points)
    return v, e


def t_functional(model: BivariateModel, a, b, i: int, tj: float,
                 tol: Tolerances = DEFAULT_TOL):
    """``T_i(a, b; t_j) = -int_a^b log F(x; t_j) dx``; vectorized over ``a``."""
    v, _ = _batch_neg_log_integral(cdf_slice(model, i, tj), a, b, tol,
                                   slice_points(model, i, tj))
    return v if np.ndim(a) else float(v[0])


def tau_functional(model: BivariateModel, a, b, i: int, at, tol: Tolerances = DEFAULT_TOL):
    """``tau_i(a, b; t) = -int_a^b log(F(x; t_j) / F(t1, t2)) dx``."""
    _, tj = _coords(at, i)
    logF = math.log(joint_mass(model, at))
    T = t_functional(model, a, b, i, tj, tol)
    return T + (np.asarray(b, dtype=float) - np.asarray(a, dtype=float)) * logF


def t_bar_functional(S: SliceCDF, a, b, tol: Tolerances = DEFAULT_TOL):
    """``-int_a^b log S(z) dz`` over the slice CDF."""
    v, _ = _batch_neg_log_integral(S, a, b, tol, S.points)
    return v if np.ndim(a) else float(v[0])


def tau_bar_functional(S: SliceCDF, a, b, tol: Tolerances = DEFAULT_TOL):
    """``-int_a^b log(S(z) / S(b)) dz``."""
    T = t_bar_functional(S, a, b, tol)
    return T + (np.asarray(b, dtype=float) - np.asarray(a, dtype=float)) * math.log(S(b))


def _expect_interval(model, at, i, h, tol):
    """``E[h(X_i) | X1 < t1, X2 < t2]`` for a vectorized ``h``."""
    ti, tj = _coords(at, i)
    Ft = joint_mass(model, at)
    dens = partial_slice(model, i, tj)

    def integrand(x):
        w = dens(x)
        out = np.zeros_like(w)
        nz = w != 0
        if nz.any():
            out[nz] = h(x[nz]) * w[nz]
        return out

    res = integrate_1d(integrand, (0.0, ti), tol, slice_points(model, i, tj))
    return res.value / Ft


def log_t_form(model: BivariateModel, at, i: int, tol: Tolerances = DEFAULT_TOL) -> float:
    """``m_i log F(t) + E[T_i(X_i, t_i; t_j) | X1 < t1, X2 < t2]``."""
    ti, tj = _coords(at, i)
    inner = tol.scaled(0.1)
    ET = _expect_interval(model, at, i, lambda x: t_functional(model, x, ti, i, tj, inner), tol)
    return eit(model, at, i, tol, use_closed_form=False) * math.log(joint_mass(model, at)) + ET


def expected_tau_form(model: BivariateModel, at, i: int, tol: Tolerances = DEFAULT_TOL) -> float:
    """``E[tau_i(X_i, t_i; t) | X1 < t1, X2 < t2]``."""
    ti, _ = _coords(at, i)
    inner = tol.scaled(0.1)
    return _expect_interval(model, at, i,
                            lambda x: tau_functional(model, x, ti, i, at, inner), tol)


def eit_mixture_form(model: BivariateModel, at, i: int, tol: Tolerances = DEFAULT_TOL) -> float:
    """``int_0^{t_i} m_i(x, t_j) f_i(x; t) dx`` with ``f_i(x; t) = dF(x, t_j)/dx / F(t)``."""
    ti, tj = _coords(at, i)
    F = cdf_slice(model, i, tj)
    pts = slice_points(model, i, tj)
    inner = tol.scaled(0.1)

    def m_times_f(x):
        Fx = F(x)
        num, _ = integrate_batch(lambda z, k: F(z), np.zeros_like(x), x, inner, pts)
        return num / Fx

    return _expect_interval(model, at, i, m_times_f, tol)


def _expect_exact(S: SliceCDF, ti, h, tol):
    def integrand(x):
        w = S.density(x)
        out = np.zeros_like(w)
        nz = w != 0
        if nz.any():
            out[nz] = h(x[nz]) * w[nz]
        return out

    res = integrate_1d(integrand, (0.0, ti), tol, S.points)
    return res.value / S.mass


def expected_tau_bar_form(model: BivariateModel, at, i: int,
                          tol: Tolerances = DEFAULT_TOL) -> float:
    """``E[tau_bar_i(X_i, t_i) | X_i < t_i, X_j = t_j]``."""
    ti, _ = _coords(at, i)
    S = _slice_cdf(model, at, i, tol)
    inner = tol.scaled(0.1)
    return _expect_exact(S, ti, lambda x: tau_bar_functional(S, x, ti, inner), tol)


def log_t_bar_form(model: BivariateModel, at, i: int, tol: Tolerances = DEFAULT_TOL) -> float:
    """``m_bar_i log S(t_i) + E[T_bar_i(X_i, t_i) | X_i < t_i, X_j = t_j]``."""
    ti, _ = _coords(at, i)
    S = _slice_cdf(model, at, i, tol)
    inner = tol.scaled(0.1)
    ET = _expect_exact(S, ti, lambda x: t_bar_functional(S, x, ti, inner), tol)
    return cond_eit(model, at, i, tol) * math.log(S.mass) + ET


def cond_eit_mixture_form(model: BivariateModel, at, i: int,
                          tol: Tolerances = DEFAULT_TOL) -> float:
    """``int_0^{t_i} m_bar_i(x) f(x | t_j) dx`` with ``f(x | t_j) = f(x, t_j) / S(t_i)``."""
    ti, _ = _coords(at, i)
    S = _slice_cdf(model, at, i, tol)
    inner = tol.scaled(0.1)

    def mbar(x):
        num, _ = integrate_batch(lambda z, k: (x[k] - z) * S.density(z), np.zeros_like(x), x,
                                 inner, S.points)
        return num / S(x)

    return _expect_exact(S, ti, mbar, tol)


# -- registry ----------------------------------------------------------------

def _static(fn):
    return lambda model, at, i, tol: fn(model, tol)


def _per_component(fn):
    return lambda model, at, i, tol: fn(model, i, tol)


def _marginal(fn, dynamic):
    def run(model, at, i, tol):
        m = model.marginal(i)
        if dynamic:
            ti, _ = _coords(model.check_point(at), i)
            return fn(m, ti, tol)
        return fn(m, tol)
    return run


def _reliability(name, fn):
    def run(model, at, i, tol):
        p = model.check_point(at)
        return MeasureReport(name, float(fn(model, p, i, tol=tol)), 0.0, p, i,
                             name in ("eit", "reversed_hazard") and name in model.closed_forms)
    return run


def _registry() -> Dict[str, Callable]:
    from . import reliability as rel

    return {
        "shannon_joint": _static(shannon_joint),
        "shannon_marginal": _per_component(shannon_marginal),
        "cpe_marginal": _marginal(cpe_univariate, False),
        "dcpe_marginal": _marginal(dcpe_univariate, True),
        "cre_marginal": _marginal(cre_univariate, False),
        "dcre_marginal": _marginal(dcre_univariate, True),
        "bivariate_cpe": _static(bivariate_cpe),
        "bivariate_dcpe": lambda model, at, i, tol: bivariate_dcpe(model, at, tol),
        "cdcpe_interval": lambda model, at, i, tol: cdcpe_interval(model, at, i, tol),
        "cdcpe_exact": lambda model, at, i, tol: cdcpe_exact(model, at, i, tol),
        "reversed_hazard": _reliability("reversed_hazard", rel.reversed_hazard),
        "eit": _reliability("eit", rel.eit),
        "cond_reversed_hazard": _reliability("cond_reversed_hazard", rel.cond_reversed_hazard),
        "cond_eit": _reliability("cond_eit", rel.cond_eit),
    }


MEASURES: Dict[str, Callable] = _registry()

# measures that need an evaluation point / a component index
NEEDS_POINT = frozenset({"dcpe_marginal", "dcre_marginal", "bivariate_dcpe", "cdcpe_interval",
                         "cdcpe_exact", "reversed_hazard", "eit", "cond_reversed_hazard",
                         "cond_eit"})
NEEDS_COMPONENT = frozenset({"shannon_marginal", "cpe_marginal", "dcpe_marginal",
                             "cre_marginal", "dcre_marginal", "cdcpe_interval", "cdcpe_exact",
                             "reversed_hazard", "eit", "cond_reversed_hazard", "cond_eit"})


def evaluate(name: str, model: BivariateModel, at=None, i: Optional[int] = None,
             tol: Tolerances = DEFAULT_TOL) -> MeasureReport:
    """Evaluate a registered measure by name."""
    if name not in MEASURES:
        raise KeyError(f"unknown measure {name!r}; known: {', '.join(sorted(MEASURES))}")
    if name in NEEDS_POINT and at is None:
        raise ValueError(f"measure {name!r} needs an evaluation point (t1, t2)")
    if name in NEEDS_COMPONENT and i not in (1, 2):
        raise ValueError(f"measure {name!r} needs a component index i in {{1, 2}}")
    rep = MEASURES[name](model, at, i, tol)
    point = rep.at
    if point is None and at is not None and name in NEEDS_POINT:
        point = EvalPoint(float(at[0]), float(at[1]))
    comp = rep.i if rep.i is not None else (i if name in NEEDS_COMPONENT else None)
    return MeasureReport(name, rep.value, rep.est_error, point, comp, rep.used_closed_form,
                         rep.meta)
