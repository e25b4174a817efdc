"""Numerical checks of the bounds, identities, transformation laws and
characterizations satisfied by the bivariate CPE family of measures.

Each ``check_*`` function returns a :class:`CheckResult`. Grid checks report
how many points were actually evaluated; fewer than :data:`MIN_POINTS` is
never a pass. Points where a conditional measure is undefined (no mass in
the conditioning event) are excluded and counted separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from . import measures as M
from . import reliability as R
from .distributions import (BivariateModel, EvalPoint, catalogue,
                            make_linear_transform, make_log_interaction_uniform,
                            make_monotone_transform, make_power)
from .numerics import (DEFAULT_TOL, QuadratureError, Tolerances, integrate_1d, integrate_2d,
                       integrate_batch, neg_xlogx, partial_derivative)

__all__ = [
    "CheckResult",
    "MIN_POINTS",
    "DEAD_BAND",
    "FD_TOL",
    "grid_points",
    "check_crude_lower_bound",
    "check_sharper_lower_bound",
    "sharper_bound_terms",
    "check_monotonicity_iff",
    "check_cdcpe_below_eit",
    "check_never_decreasing_at_full_window",
    "check_derivative_identity",
    "check_eit_identity",
    "check_transformation_laws",
    "check_monotone_transform_sandwich",
    "check_characterization_uniform",
    "check_characterization_log_interaction",
    "check_characterization_power",
    "check_representation_identities",
    "check_independence_decomposition",
    "check_boundary_collapse",
    "check_cdcpe_uniqueness_separation",
    "CHECKS",
    "run_suite",
]

MIN_POINTS = 9
# "increasing" means a finite difference above -DEAD_BAND
DEAD_BAND = 1e-6
# quadrature targets used underneath finite differences
FD_TOL = Tolerances(abs_tol=1e-14, rel_tol=1e-13, max_depth=60, fd_step_scale=1e-4)
# derivatives smaller than this are at finite-difference noise level and compared absolutely
FD_NOISE = 1e-7

_STATUSES = ("pass", "fail", "skipped")


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    model_name: str
    status: str
    worst_violation: float
    witness: Optional[EvalPoint]
    tolerance_used: float
    n_points: int = 0
    detail: str = ""
    values: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.status not in _STATUSES:
            raise ValueError(f"status must be one of {_STATUSES}, got {self.status!r}")
        if self.status == "fail" and (self.witness is None
                                      or not self.worst_violation > self.tolerance_used):
            raise ValueError("a failed check needs a witness and a violation above tolerance")

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> Dict:
        return {
            "check_id": self.check_id,
            "model": self.model_name,
            "status": self.status,
            "worst_violation": _jsonable(self.worst_violation),
            "witness": None if self.witness is None else [self.witness.t1, self.witness.t2],
            "tolerance_used": self.tolerance_used,
            "n_points": self.n_points,
            "detail": self.detail,
            "values": {k: _jsonable(v) for k, v in self.values.items()},
        }


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, EvalPoint):
        return [v.t1, v.t2]
    return v


class _Tally:
    """Collects per-point violations and turns them into a CheckResult."""

    def __init__(self, check_id, model, tol):
        self.check_id = check_id
        self.model_name = model if isinstance(model, str) else model.name
        self.tol = tol
        self.worst = -math.inf
        self.witness = None
        self.points = set()
        self.undefined = 0
        self.values = {}

    def add(self, violation, at=None):
        violation = float(violation)
        if at is not None:
            self.points.add((float(at[0]), float(at[1])))
        if violation > self.worst:
            self.worst = violation
            if at is not None:
                self.witness = EvalPoint(float(at[0]), float(at[1]))

    def result(self, static=False, min_points=MIN_POINTS, detail="") -> CheckResult:
        n = len(self.points)
        vals = dict(self.values)
        if self.undefined:
            vals["undefined_points"] = self.undefined
        if self.worst == -math.inf:
            return CheckResult(self.check_id, self.model_name, "skipped", math.nan, None,
                               self.tol, n, detail or "nothing evaluated", vals)
        if self.worst > self.tol:
            return CheckResult(self.check_id, self.model_name, "fail", self.worst,
                               self.witness, self.tol, n, detail, vals)
        if not static and n < min_points:
            return CheckResult(self.check_id, self.model_name, "skipped", self.worst,
                               self.witness, self.tol, n,
                               detail or f"only {n} grid points evaluated (< {min_points})", vals)
        return CheckResult(self.check_id, self.model_name, "pass", self.worst, self.witness,
                           self.tol, n, detail, vals)


def _skipped(check_id, model, tol, reason) -> CheckResult:
    name = model if isinstance(model, str) else model.name
    return CheckResult(check_id, name, "skipped", math.nan, None, tol, 0, reason)


def grid_points(model: BivariateModel, n: int = 9, lo: float = 0.1,
                hi: float = 0.9) -> List[EvalPoint]:
    """``n x n`` interior points at relative positions ``lo..hi`` of each axis.

    Positions are measured from the lowest point carrying mass, so shifted
    models do not put grid points in the empty strip below the shift.
    """
    rel = np.linspace(lo, hi, n) if n > 1 else np.array([0.5 * (lo + hi)])
    axes = []
    for k in (0, 1):
        start = model.mass_lower[k]
        axes.append(start + rel * (model.b[k] - start))
    return [EvalPoint(float(a), float(c)) for a in axes[0] for c in axes[1]]


def _points(model, grid):
    if grid is None:
        return grid_points(model)
    return [p if isinstance(p, EvalPoint) else EvalPoint(float(p[0]), float(p[1])) for p in grid]


def _measure_fn(model, kind, i, tol):
    if kind == "interval":
        return lambda t1, t2: M.cdcpe_interval(model, (t1, t2), i, tol,
                                               use_closed_form=False).value
    if kind == "exact":
        return lambda t1, t2: M.cdcpe_exact(model, (t1, t2), i, tol).value
    raise ValueError(f"measure kind must be 'interval' or 'exact', got {kind!r}")


def _eit_fn(model, kind, i, tol):
    if kind == "interval":
        return lambda at: R.eit(model, at, i, tol, use_closed_form=False)
    return lambda at: R.cond_eit(model, at, i, tol)


def _hazard_fn(model, kind, i, tol):
    if kind == "interval":
        return lambda at: R.reversed_hazard(model, at, i, tol, use_closed_form=False)
    return lambda at: R.cond_reversed_hazard(model, at, i, tol)


def _axis_bounds(model, i):
    return (model.mass_lower[i - 1], model.upper(i))


def _fd(fn, at, i, model, tol):
    return partial_derivative(fn, (at.t1, at.t2), i, tol, bounds=_axis_bounds(model, i)).value


_UNDEFINED = (R.EmptyConditioningError, QuadratureError)


# -- static bounds -----------------------------------------------------------

def check_crude_lower_bound(model: BivariateModel, tol: float = 1e-6,
                            qtol: Tolerances = DEFAULT_TOL) -> CheckResult:
    """``cpe >= int int F (1 - F)``."""
    t = _Tally("crude_lower_bound", model, tol)
    cpe = M.bivariate_cpe(model, qtol, use_closed_form=False).value
    bound = M.crude_bound_integral(model, qtol).value
    t.add(bound - cpe, model.b)
    t.values.update(cpe=cpe, bound=bound)
    return t.result(static=True)


def sharper_bound_terms(model: BivariateModel, i: int,
                        qtol: Tolerances = DEFAULT_TOL) -> Tuple[float, float]:
    """``(C_i, H(X_i))`` for the log-sum lower bound ``C_i exp(H(X_i))``."""
    j = 3 - i
    bi, bj = model.upper(i), model.upper(j)
    marg = model.marginal(i)
    inner_tol = qtol.scaled(0.1)

    def inner(x):
        pts = model.slice_breaks(j, x)
        if i == 1:
            g = lambda y, k: neg_xlogx(model.cdf(x[k], y))  # noqa: E731
        else:
            g = lambda y, k: neg_xlogx(model.cdf(y, x[k]))  # noqa: E731
        v, _ = integrate_batch(g, np.zeros_like(x), np.full_like(x, bj), inner_tol, pts)
        return v

    def integrand(x):
        f = marg.pdf(x)
        out = np.zeros_like(x)
        live = f > 0
        if live.any():
            g = inner(x[live])
            # slices where F(x, .) carries no entropy have measure zero under f_i
            ok = g > 0
            vals = np.zeros_like(g)
            vals[ok] = f[live][ok] * np.log(g[ok])
            out[live] = vals
        return out

    pts = np.asarray(marg.breaks, dtype=float) if marg.breaks else model.knots[i - 1]
    E = integrate_1d(integrand, (0.0, bi), qtol, pts).value
    H = M.shannon_marginal(model, i, qtol).value
    return math.exp(E), H


def check_sharper_lower_bound(model: BivariateModel, tol: float = 1e-6,
                              qtol: Tolerances = DEFAULT_TOL) -> CheckResult:
    """``cpe >= max(C_1 e^{H(X_1)}, C_2 e^{H(X_2)})``."""
    t = _Tally("sharper_lower_bound", model, tol)
    cpe = M.bivariate_cpe(model, qtol, use_closed_form=False).value
    C1, H1 = sharper_bound_terms(model, 1, qtol)
    C2, H2 = sharper_bound_terms(model, 2, qtol)
    bound = max(C1 * math.exp(H1), C2 * math.exp(H2))
    t.add(bound - cpe, model.b)
    t.values.update(cpe=cpe, bound=bound, C1=C1, C2=C2, H1=H1, H2=H2)
    return t.result(static=True)


# -- monotonicity ------------------------------------------------------------

def check_monotonicity_iff(model: BivariateModel, i: Optional[int] = None, grid=None,
                           kind: str = "interval", dead_band: float = DEAD_BAND,
                           qtol: Tolerances = FD_TOL) -> CheckResult:
    """Sign of ``d/dt_i`` of the measure agrees with the sign of ``EIT - measure``.

    ``kind="interval"`` checks eps*_i against m_i, ``kind="exact"`` checks
    gamma*_i against the conditional EIT.
    """
    cid = "monotonicity_iff" if kind == "interval" else "cond_monotonicity_iff"
    t = _Tally(cid, model, dead_band)
    comps = (1, 2) if i is None else (i,)
    increasing = 0
    for at in _points(model, grid):
        for c in comps:
            fn = _measure_fn(model, kind, c, qtol)
            try:
                d = _fd(fn, at, c, model, qtol)
                gap = _eit_fn(model, kind, c, qtol)(at) - fn(at.t1, at.t2)
            except _UNDEFINED:
                t.undefined += 1
                continue
            increasing += d > dead_band
            # disagreement only counts when both signs are outside the dead band
            if d > dead_band and gap < -dead_band or d < -dead_band and gap > dead_band:
                t.add(min(abs(d), abs(gap)), at)
            else:
                t.add(-max(dead_band - min(abs(d), abs(gap)), 0.0), at)
    t.values["increasing_points"] = increasing
    return t.result()


def check_cdcpe_below_eit(model: BivariateModel, grid=None, dead_band: float = DEAD_BAND,
                          qtol: Tolerances = FD_TOL) -> CheckResult:
    """``eps*_i <= m_i`` and ``eps*_i`` nondecreasing in ``t_i`` at every grid point.

    For the triangle model the values ``t_i/2`` and ``t_i/4`` quoted for m_i
    and eps*_i are recorded next to the computed ones, but not asserted.
    """
    t = _Tally("cdcpe_below_eit", model, dead_band)
    quoted_gap = 0.0
    for at in _points(model, grid):
        for c in (1, 2):
            fn = _measure_fn(model, "interval", c, qtol)
            try:
                e = fn(at.t1, at.t2)
                m = R.eit(model, at, c, qtol, use_closed_form=False)
                d = _fd(fn, at, c, model, qtol)
            except _UNDEFINED:
                t.undefined += 1
                continue
            t.add(max(e - m, -d), at)
            ti = at.coord(c)
            quoted_gap = max(quoted_gap, abs(m - ti / 2), abs(e - ti / 4))
    t.values["max_gap_to_quoted_half_quarter"] = quoted_gap
    return t.result()


def check_never_decreasing_at_full_window(model: BivariateModel, i: Optional[int] = None,
                                          n: int = 9, dead_band: float = DEAD_BAND,
                                          qtol: Tolerances = FD_TOL) -> CheckResult:
    """With ``t_j = b_j`` the measure is the marginal dynamic CPE, which never decreases."""
    t = _Tally("never_decreasing_at_full_window", model, dead_band)
    for c in ((1, 2) if i is None else (i,)):
        bj = model.upper(3 - c)
        lo = model.mass_lower[c - 1]
        for r in np.linspace(0.1, 0.9, n):
            ti = lo + r * (model.upper(c) - lo)
            at = EvalPoint(ti, bj) if c == 1 else EvalPoint(bj, ti)
            fn = _measure_fn(model, "interval", c, qtol)
            try:
                d = _fd(fn, at, c, model, qtol)
            except _UNDEFINED:
                t.undefined += 1
                continue
            t.add(-d, at)
    return t.result()


# -- identities --------------------------------------------------------------

def _rel_gap(a, b, floor=FD_NOISE):
    return abs(a - b) / max(abs(a), abs(b), floor)


def _kink_aware_gap(fn, at, c, model, qtol, lhs, rhs, metric, tol):
    """Gap between a central-difference derivative and ``rhs``.

    Where the measure has a kink or a curvature jump (the triangle diagonal)
    the central stencil straddles it and is biased, while the identity holds
    for the one-sided derivatives. Those are tried when the central gap is
    over 1% of ``tol``; the second return value says whether one was used.
    """
    gap = metric(lhs, rhs)
    if gap <= 0.01 * tol:
        return gap, False
    sides = [partial_derivative(fn, (at.t1, at.t2), c, qtol, _axis_bounds(model, c),
                                side=s).value for s in ("forward", "backward")]
    best = min(metric(d, rhs) for d in sides)
    if best < gap:
        return best, True
    return gap, False


def check_derivative_identity(model: BivariateModel, kind: str = "interval", grid=None,
                              tol: float = 1e-4, qtol: Tolerances = FD_TOL) -> CheckResult:
    """``d/dt_i measure = hazard * (EIT - measure)``, relative error, 5x5 grid by default.

    Both sides are computed independently: the left by finite differences of
    the directly integrated measure, the right from the reversed hazard rate
    and EIT of the same conditioning convention.
    """
    cid = "derivative_identity" if kind == "interval" else "cond_derivative_identity"
    t = _Tally(cid, model, tol)
    pts = grid_points(model, 5) if grid is None else _points(model, grid)
    kinks = 0
    for at in pts:
        for c in (1, 2):
            fn = _measure_fn(model, kind, c, qtol)
            try:
                lhs = _fd(fn, at, c, model, qtol)
                rhs = _hazard_fn(model, kind, c, qtol)(at) * (
                    _eit_fn(model, kind, c, qtol)(at) - fn(at.t1, at.t2))
            except _UNDEFINED:
                t.undefined += 1
                continue
            gap, one_sided = _kink_aware_gap(fn, at, c, model, qtol, lhs, rhs, _rel_gap, tol)
            kinks += one_sided
            t.add(gap, at)
    t.values["one_sided_points"] = kinks
    return t.result()


def check_eit_identity(model: BivariateModel, grid=None, tol: float = 1e-4,
                       qtol: Tolerances = FD_TOL) -> CheckResult:
    """``phi_i m_i = 1 - d m_i / d t_i`` on a 5x5 grid (absolute error)."""
    t = _Tally("eit_identity", model, tol)
    pts = grid_points(model, 5) if grid is None else _points(model, grid)
    kinks = 0
    for at in pts:
        for c in (1, 2):
            m = lambda t1, t2, c=c: R.eit(model, (t1, t2), c, qtol, use_closed_form=False)  # noqa: E731
            try:
                target = 1.0 - R.reversed_hazard(model, at, c, qtol, use_closed_form=False) * m(*at)
                d = _fd(m, at, c, model, qtol)
            except _UNDEFINED:
                t.undefined += 1
                continue
            gap, one_sided = _kink_aware_gap(m, at, c, model, qtol, d, target,
                                             lambda u, v: abs(u - v), tol)
            kinks += one_sided
            t.add(gap, at)
    t.values["one_sided_points"] = kinks
    return t.result()


def check_representation_identities(model: BivariateModel, grid=None, tol: float = 1e-6,
                                    qtol: Tolerances = DEFAULT_TOL) -> CheckResult:
    """Alternative forms of eps*_i and gamma*_i against the direct integrals.

    Forms: the EIT mixture, the expectation of tau and the log-plus-T
    decomposition, for both conditioning conventions. Default grid is 3x3.
    """
    t = _Tally("representation_identities", model, tol)
    pts = grid_points(model, 3, 0.2, 0.8) if grid is None else _points(model, grid)
    worst = {}
    forms = {
        "interval": (lambda at, c: M.cdcpe_interval(model, at, c, qtol, False).value,
                     [M.eit_mixture_form, M.expected_tau_form, M.log_t_form]),
        "exact": (lambda at, c: M.cdcpe_exact(model, at, c, qtol).value,
                  [M.cond_eit_mixture_form, M.expected_tau_bar_form, M.log_t_bar_form]),
    }
    for at in pts:
        for kind, (direct, alts) in forms.items():
            for c in (1, 2):
                try:
                    v = direct(at, c)
                except _UNDEFINED:
                    t.undefined += 1
                    continue
                for form in alts:
                    gap = abs(form(model, at, c, qtol) - v)
                    worst[form.__name__] = max(worst.get(form.__name__, 0.0), gap)
                    t.add(gap, at)
    t.values.update(worst)
    return t.result()


def check_independence_decomposition(model: BivariateModel, tol: float = 1e-6,
                                     qtol: Tolerances = DEFAULT_TOL) -> CheckResult:
    """For product models: ``cpe = (b2 - mu2) cpe(X1) + (b1 - mu1) cpe(X2)``
    and the dynamic version ``m2 dcpe(X1) + m1 dcpe(X2)`` on a 3x3 grid."""
    if model.family not in ("independent", "independent_uniform"):
        return _skipped("independence_decomposition", model, tol, "not a product model")
    t = _Tally("independence_decomposition", model, tol)
    m1, m2 = model.marginal(1), model.marginal(2)
    e1 = M.cpe_univariate(m1, qtol).value
    e2 = M.cpe_univariate(m2, qtol).value
    area = [integrate_1d(m.cdf, (0.0, m.b), qtol).value for m in (m1, m2)]
    cpe = M.bivariate_cpe(model, qtol, use_closed_form=False).value
    t.add(abs(cpe - (area[1] * e1 + area[0] * e2)), model.b)
    if m1.mean is not None and m2.mean is not None:
        t.add(abs(cpe - ((m2.b - m2.mean) * e1 + (m1.b - m1.mean) * e2)), model.b)
    for at in grid_points(model, 3, 0.2, 0.8):
        dyn = M.bivariate_dcpe(model, at, qtol).value
        rhs = (R.eit_univariate(m2, at.t2, qtol) * M.dcpe_univariate(m1, at.t1, qtol).value
               + R.eit_univariate(m1, at.t1, qtol) * M.dcpe_univariate(m2, at.t2, qtol).value)
        t.add(abs(dyn - rhs), at)
    return t.result()


def check_boundary_collapse(model: BivariateModel, tol: float = 1e-8,
                            qtol: Tolerances = DEFAULT_TOL) -> CheckResult:
    """Dynamic measures at the full support equal their static counterparts."""
    t = _Tally("boundary_collapse", model, tol)
    b1, b2 = model.b
    q = qtol.scaled(0.01)
    t.add(abs(M.bivariate_dcpe(model, (b1, b2), q).value
              - M.bivariate_cpe(model, q, use_closed_form=False).value), (b1, b2))
    for c in (1, 2):
        marg = model.marginal(c)
        t.add(abs(M.dcpe_univariate(marg, marg.b, q).value - M.cpe_univariate(marg, q).value),
              (b1, b2))
        for r in np.linspace(0.1, 0.9, 9):
            ti = model.mass_lower[c - 1] + r * (model.upper(c) - model.mass_lower[c - 1])
            at = (ti, b2) if c == 1 else (b1, ti)
            e = M.cdcpe_interval(model, at, c, q, use_closed_form=False).value
            t.add(abs(e - M.dcpe_univariate(marg, ti, q).value), at)
    return t.result()


# -- transformations ---------------------------------------------------------

def _square_transform(model):
    return make_monotone_transform(model, lambda x: np.square(x), lambda y: np.sqrt(y),
                                   lambda x: 2.0 * np.asarray(x, dtype=float), name="square",
                                   validate=False)


def check_transformation_laws(model: BivariateModel, c: Tuple[float, float] = (2.0, 3.0),
                              d: Tuple[float, float] = (1.0, 0.5), tol: float = 1e-6,
                              scale_rel_tol: float = 1e-8,
                              qtol: Tolerances = DEFAULT_TOL) -> CheckResult:
    """Linear-transformation laws and the Jacobian form of the CPE.

    * ``cpe(Y) = c1 c2 cpe(X)`` (relative, ``scale_rel_tol``);
    * ``eps*_i(Y; t) = c_i eps*_i(X; (t - d)/c)`` and the same for gamma*_i;
    * with ``Y = (X1^2, X2^2)``: the CPE and the dynamic CPE of ``Y`` equal
      the ``|J|``-weighted integrals over the ``X`` coordinates.

    Violations are normalized by the tolerance of their own law so the
    result is a single pass/fail; the raw worst gaps are in ``values``.
    """
    t = _Tally("transformation_laws", model, 1.0)
    Y = make_linear_transform(model, c[0], c[1], d[0], d[1], validate=False)
    q = qtol.scaled(0.01)
    cx = M.bivariate_cpe(model, q, use_closed_form=False).value
    cy = M.bivariate_cpe(Y, q, use_closed_form=False).value
    scale_gap = abs(cy - c[0] * c[1] * cx) / abs(c[0] * c[1] * cx)
    t.add(scale_gap / scale_rel_tol, Y.b)
    gaps = {"interval": 0.0, "exact": 0.0}
    for at in grid_points(model, 3, 0.2, 0.8):
        ty = (c[0] * at.t1 + d[0], c[1] * at.t2 + d[1])
        for i in (1, 2):
            ci = c[i - 1]
            lhs = M.cdcpe_interval(Y, ty, i, qtol, False).value
            rhs = ci * M.cdcpe_interval(model, at, i, qtol, False).value
            gaps["interval"] = max(gaps["interval"], abs(lhs - rhs))
            t.add(abs(lhs - rhs) / tol, ty)
            try:
                lhs = M.cdcpe_exact(Y, ty, i, qtol).value
                rhs = ci * M.cdcpe_exact(model, at, i, qtol).value
            except _UNDEFINED:
                t.undefined += 1
                continue
            gaps["exact"] = max(gaps["exact"], abs(lhs - rhs))
            t.add(abs(lhs - rhs) / tol, ty)
    # Jacobian form with phi(x) = x^2
    sq = _square_transform(model)
    b1, b2 = model.b
    direct = M.bivariate_cpe(sq, q, use_closed_form=False).value
    jac = integrate_2d(lambda x1, x2: neg_xlogx(model.cdf(x1, x2)) * 4.0 * x1 * x2,
                       ((0, b1), (0, b2)), q, model.inner_points_pdf()).value
    at = grid_points(model, 1)[0]
    Ft = float(model.cdf(at.t1, at.t2))
    direct_dyn = M.bivariate_dcpe(sq, (at.t1 ** 2, at.t2 ** 2), q).value
    jac_dyn = integrate_2d(lambda x1, x2: neg_xlogx(model.cdf(x1, x2) / Ft) * 4.0 * x1 * x2,
                           ((0, at.t1), (0, at.t2)), q, model.inner_points_pdf()).value
    jac_gap = max(abs(direct - jac), abs(direct_dyn - jac_dyn))
    t.add(jac_gap / tol, (b1 ** 2, b2 ** 2))
    t.values.update(cpe_scale_rel_gap=scale_gap, cdcpe_law_gap=gaps["interval"],
                    cond_cdcpe_law_gap=gaps["exact"], jacobian_form_gap=jac_gap,
                    c=list(c), d=list(d))
    return t.result()


def check_monotone_transform_sandwich(model: BivariateModel, phi: Callable, phi_inv: Callable,
                                      phi_prime: Callable, a: float, b: float, grid=None,
                                      name: str = "phi", tol: float = 1e-6,
                                      qtol: Tolerances = FD_TOL) -> CheckResult:
    """``min(a v, b v) <= eps*_i(X_phi; t) <= max(a v, b v)`` with ``v = eps*_i(X; phi^-1(t))``.

    Also records how often the literal order ``b v <= eps* <= a v`` holds,
    and, when ``phi' < 1``, that eps*_i(X_phi) is nondecreasing in t_i
    wherever eps*_i(X) is.
    """
    if not 0 < a <= b:
        raise ValueError(f"need 0 < a <= b, got a={a}, b={b}")
    Xp = make_monotone_transform(model, phi, phi_inv, phi_prime, name=name, validate=False)
    t = _Tally(f"monotone_transform_sandwich[{name}]", model, tol)
    literal_ok = 0
    binds_low = 0
    pts = _points(Xp, grid)
    for at in pts:
        pre = (float(phi_inv(at.t1)), float(phi_inv(at.t2)))
        for c in (1, 2):
            v = M.cdcpe_interval(model, pre, c, qtol, False).value
            w = M.cdcpe_interval(Xp, at, c, qtol, False).value
            lo, hi = min(a * v, b * v), max(a * v, b * v)
            t.add(max(lo - w, w - hi), at)
            literal_ok += (b * v - tol <= w <= a * v + tol)
            binds_low += abs(w - lo) <= abs(w - hi)
            if b < 1:
                fx = _measure_fn(model, "interval", c, qtol)
                dx = partial_derivative(fx, pre, c, qtol, bounds=_axis_bounds(model, c)).value
                if dx > DEAD_BAND:
                    dphi = _fd(_measure_fn(Xp, "interval", c, qtol), at, c, Xp, qtol)
                    t.add(-dphi - DEAD_BAND + tol, at)
    t.values.update(a=a, b=b, literal_order_holds=literal_ok, lower_side_binds=binds_low,
                    comparisons=2 * len(pts))
    return t.result()


# -- characterizations -------------------------------------------------------

def _is_independent_uniform(model: BivariateModel) -> bool:
    p = model.params
    if model.family == "independent_uniform":
        return True
    if model.family == "log_interaction_uniform":
        return p.get("theta") == 0
    if model.family == "power":
        return p.get("c1") == 1 and p.get("c2") == 1 and p.get("theta") == 0
    if model.family == "independent":
        return all(str(p.get(k, "")).startswith("uniform") for k in ("marginal1", "marginal2"))
    return False


def check_characterization_uniform(model: BivariateModel, grid=None, tol: float = 1e-8,
                                   qtol: Tolerances = DEFAULT_TOL) -> CheckResult:
    """Independent uniform models have ``eps*_i = t_i / 4`` everywhere; any
    other model must break that identity at some grid point."""
    uniform = _is_independent_uniform(model)
    t = _Tally("characterization_uniform", model, tol)
    q = qtol.scaled(0.01)
    gaps = []
    for at in _points(model, grid):
        for c in (1, 2):
            try:
                e = M.cdcpe_interval(model, at, c, q, False).value
            except _UNDEFINED:
                t.undefined += 1
                continue
            gap = abs(e - at.coord(c) / 4.0)
            gaps.append((gap, at))
            if uniform:
                t.add(gap, at)
    if not uniform:
        if not gaps:
            return t.result()
        biggest, where = max(gaps, key=lambda g: g[0])
        # the identity must fail somewhere by more than the separation threshold
        for gap, at in gaps:
            t.points.add((at.t1, at.t2))
        t.worst = DEAD_BAND - biggest
        t.witness = where
        t.tol = 0.0
        t.values["max_deviation_from_quarter"] = biggest
    t.values["expects_uniform"] = uniform
    return t.result()


def check_characterization_log_interaction(theta: float, grid=None, tol: float = 1e-6,
                                           qtol: Tolerances = DEFAULT_TOL,
                                           model: Optional[BivariateModel] = None) -> CheckResult:
    """``eps*_i = [(1 + theta log t_j) / (2 + theta log t_j)] m_i`` on the grid.

    Uses quadrature for both sides and cross-checks the registered closed forms.
    """
    X = model if model is not None else make_log_interaction_uniform(theta, validate=False)
    t = _Tally(f"characterization_log_interaction[theta={theta:g}]", X, tol)
    closed_gap = 0.0
    for at in _points(X, grid):
        for c in (1, 2):
            tj = at.coord(3 - c)
            e = M.cdcpe_interval(X, at, c, qtol, False).value
            m = R.eit(X, at, c, qtol, use_closed_form=False)
            k = theta * math.log(tj)
            t.add(abs(e - (1.0 + k) / (2.0 + k) * m), at)
            closed_gap = max(closed_gap,
                             abs(e - M.cdcpe_interval(X, at, c, qtol).value),
                             abs(m - R.eit(X, at, c, qtol)))
    t.add(closed_gap, None)
    t.values["closed_form_gap"] = closed_gap
    return t.result()


def check_characterization_power(c1: float = 2.0, c2: float = 1.5, theta: float = -0.5,
                                 b1: float = 2.0, b2: float = 1.0, ti_values=None,
                                 tj_values=None, ratio_tol: float = 1e-5,
                                 recover_tol: float = 1e-4,
                                 qtol: Tolerances = DEFAULT_TOL) -> CheckResult:
    """``eps*_i / m_i`` is free of ``t_i``, lies in (0, 1), and at ``t_j = b_j``
    recovers ``c_i = r / (1 - r)``.

    ``ti_values``/``tj_values`` are relative positions along each line; a
    single ``t_i`` position gives nothing to compare and the check is skipped.
    """
    X = make_power(c1, c2, theta, b1, b2, validate=False)
    ti_rel = np.linspace(0.1, 0.9, 9) if ti_values is None else np.asarray(ti_values, float)
    tj_rel = np.linspace(0.1, 0.9, 9) if tj_values is None else np.asarray(tj_values, float)
    cid = "characterization_power"
    if ti_rel.size < 2:
        return _skipped(cid, X, ratio_tol, "a single t_i position cannot show t_i-independence")
    t = _Tally(cid, X, 1.0)
    worst_var = 0.0
    worst_rec = 0.0
    for c in (1, 2):
        bi, bj = X.upper(c), X.upper(3 - c)
        ci = c1 if c == 1 else c2

        def ratio(ti, tj):
            at = (ti, tj) if c == 1 else (tj, ti)
            return (M.cdcpe_interval(X, at, c, qtol, False).value
                    / R.eit(X, at, c, qtol, use_closed_form=False)), at

        for tj in list(tj_rel * bj) + [bj]:
            rs = [ratio(r * bi, tj) for r in ti_rel]
            vals = np.array([r for r, _ in rs])
            var = float(vals.max() - vals.min())
            worst_var = max(worst_var, var)
            for r, at in rs:
                # outside (0, 1) counts as a full violation
                t.add(var / ratio_tol if 0 < r < 1 else 1.0 + abs(r), at)
            if tj == bj:
                r = float(vals.mean())
                rec = abs(r / (1.0 - r) - ci)
                worst_rec = max(worst_rec, rec)
                t.add(rec / recover_tol, rs[0][1])
    t.values.update(max_ratio_variation=worst_var, max_recovery_gap=worst_rec,
                    ratio_tol=ratio_tol, recover_tol=recover_tol)
    return t.result()


def check_cdcpe_uniqueness_separation(model_a: BivariateModel, model_b: BivariateModel,
                                      grid=None, threshold: float = 1e-6,
                                      qtol: Tolerances = DEFAULT_TOL) -> CheckResult:
    """Distinct models must have CDCPE pairs differing somewhere on the overlap grid."""
    cid = "cdcpe_uniqueness_separation"
    name = f"{model_a.name} vs {model_b.name}"
    lo = [max(model_a.mass_lower[k], model_b.mass_lower[k]) for k in (0, 1)]
    hi = [min(model_a.b[k], model_b.b[k]) for k in (0, 1)]
    if hi[0] <= lo[0] or hi[1] <= lo[1]:
        return _skipped(cid, name, 0.0, "supports do not overlap")
    if grid is None:
        rel = np.linspace(0.1, 0.9, 9)
        grid = [EvalPoint(lo[0] + r1 * (hi[0] - lo[0]), lo[1] + r2 * (hi[1] - lo[1]))
                for r1 in rel for r2 in rel]
    best, where, n = 0.0, None, 0
    for at in _points(model_a, grid):
        n += 1
        for c in (1, 2):
            diff = abs(M.cdcpe_interval(model_a, at, c, qtol).value
                       - M.cdcpe_interval(model_b, at, c, qtol).value)
            if diff > best or where is None:
                best, where = diff, at
    values = {"max_difference": best, "threshold": threshold}
    if model_a is model_b:
        return CheckResult(cid, name, "pass", -best, where, 0.0, n, "expected-equal",
                           {**values, "separated": False})
    values["separated"] = best > threshold
    status = "pass" if best > threshold else "fail"
    if n < MIN_POINTS and status == "pass":
        status = "skipped"
    return CheckResult(cid, name, status, threshold - best, where, 0.0, n, "", values)


# -- suite -------------------------------------------------------------------

def _phi_half():
    return (lambda x: 0.5 * np.asarray(x, dtype=float), lambda y: 2.0 * np.asarray(y, dtype=float),
            lambda x: np.full_like(np.asarray(x, dtype=float), 0.5), 0.5, 0.5, "half")


def _phi_quadratic(top: float):
    # phi(x) = x + x^2/4, phi' = 1 + x/2 in [1, 1 + top/2] on (0, top)
    return (lambda x: np.asarray(x, dtype=float) + np.square(x) / 4.0,
            lambda y: 2.0 * (np.sqrt(1.0 + np.asarray(y, dtype=float)) - 1.0),
            lambda x: 1.0 + np.asarray(x, dtype=float) / 2.0, 1.0, 1.0 + top / 2.0,
            "x_plus_quarter_x2")


def _sandwich(model, spec, tol=1e-6):
    phi, inv, dphi, a, b, name = spec
    return check_monotone_transform_sandwich(model, phi, inv, dphi, a, b, name=name, tol=tol)


def _model_checks() -> Dict[str, Callable[[BivariateModel], CheckResult]]:
    return {
        "crude_lower_bound": check_crude_lower_bound,
        "sharper_lower_bound": check_sharper_lower_bound,
        "monotonicity_iff": lambda m: check_monotonicity_iff(m, kind="interval"),
        "cond_monotonicity_iff": lambda m: check_monotonicity_iff(m, kind="exact"),
        "cdcpe_below_eit": check_cdcpe_below_eit,
        "never_decreasing_at_full_window": check_never_decreasing_at_full_window,
        "derivative_identity": lambda m: check_derivative_identity(m, "interval"),
        "cond_derivative_identity": lambda m: check_derivative_identity(m, "exact"),
        "eit_identity": check_eit_identity,
        "representation_identities": check_representation_identities,
        "independence_decomposition": check_independence_decomposition,
        "boundary_collapse": check_boundary_collapse,
        "transformation_laws": check_transformation_laws,
        "monotone_transform_sandwich": lambda m: _sandwich(m, _phi_half()),
        "monotone_transform_sandwich_quadratic": lambda m: _sandwich(m, _phi_quadratic(max(m.b))),
        "characterization_uniform": check_characterization_uniform,
    }


def _family_checks() -> Dict[str, Callable[[], List[CheckResult]]]:
    from .ordering import check_order_preservation

    def log_interaction():
        return [check_characterization_log_interaction(th) for th in (0.0, -0.5, -2.0)]

    def power():
        return [check_characterization_power(),
                check_characterization_power(1.0, 1.0, 0.0, 1.0, 1.0)]

    def uniqueness():
        cat = catalogue()
        return [
            check_cdcpe_uniqueness_separation(cat["reciprocal_f"], cat["reciprocal_g"]),
            check_cdcpe_uniqueness_separation(cat["independent_uniform"],
                                              make_log_interaction_uniform(-0.5)),
            check_cdcpe_uniqueness_separation(cat["triangle"], cat["triangle"]),
        ]

    def order_preservation():
        cat = catalogue()
        X, Xp = cat["reciprocal_f"], cat["reciprocal_g"]
        return [check_order_preservation(X, Xp, (1.0, 1.0), (0.1, 0.1), (0.2, 0.2), kind=k)
                for k in ("interval", "exact")]

    return {
        "characterization_log_interaction": log_interaction,
        "characterization_power": power,
        "cdcpe_uniqueness_separation": uniqueness,
        "order_preservation": order_preservation,
    }


CHECKS: Tuple[str, ...] = tuple(_model_checks()) + (
    "characterization_log_interaction", "characterization_power",
    "cdcpe_uniqueness_separation", "order_preservation")


def run_suite(models: Optional[Dict[str, BivariateModel]] = None,
              check_ids: Optional[Iterable[str]] = None) -> List[CheckResult]:
    """Run the selected checks (default: all) over the selected models (default:
    the catalogue). Family-level checks build their own models and run once."""
    ids = list(CHECKS) if check_ids is None else list(check_ids)
    unknown = [c for c in ids if c not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check id(s) {unknown}; known: {', '.join(CHECKS)}")
    models = catalogue() if models is None else models
    per_model = _model_checks()
    family = _family_checks()
    out: List[CheckResult] = []
    for cid in ids:
        if cid in per_model:
            for model in models.values():
                out.append(per_model[cid](model))
        else:
            out.extend(family[cid]())
    return out
