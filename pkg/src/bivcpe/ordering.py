"""Grid-based comparison of bivariate laws in the CDCPE order.

``X >=_CDCPE Y`` means ``eps*_i(X; t) <= eps*_i(Y; t)`` for every ``t`` and
``i = 1, 2``. Numerics can only sample ``t``, so every verdict here is
grid-certified, never proven.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import measures as M
from .distributions import BivariateModel, EvalPoint, make_linear_transform
from .numerics import DEFAULT_TOL, Tolerances, partial_derivative
from .theorems import DEAD_BAND, FD_TOL, CheckResult, MIN_POINTS

__all__ = [
    "ORDER_TOL",
    "OrderVerdict",
    "comparison_grid",
    "compare_cdcpe",
    "compare_usual_stochastic",
    "check_order_preservation",
]

ORDER_TOL = 1e-7
# comparison region: support overlap shrunk by this fraction per side
SHRINK = 0.05

_DIRECTIONS = ("X_geq_Y", "Y_geq_X", "neither", "equal")


@dataclass(frozen=True)
class OrderVerdict:
    direction: str
    witness_points: Tuple[Tuple[EvalPoint, int, float, float], ...]
    grid: str
    tolerance: float
    n_points: int = 0
    max_diff: float = math.nan
    min_diff: float = math.nan
    measure: str = "cdcpe_interval"
    certification: str = "grid-certified"
    extra: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"direction must be one of {_DIRECTIONS}, got {self.direction!r}")

    def to_dict(self) -> Dict:
        return {
            "direction": self.direction,
            "measure": self.measure,
            "certification": self.certification,
            "grid": self.grid,
            "tolerance": self.tolerance,
            "n_points": self.n_points,
            "max_x_minus_y": self.max_diff,
            "min_x_minus_y": self.min_diff,
            "witness_points": [
                {"t1": p.t1, "t2": p.t2, "i": i, "x": lhs, "y": rhs}
                for p, i, lhs, rhs in self.witness_points
            ],
            **({"extra": self.extra} if self.extra else {}),
        }


def _classify(diffs: np.ndarray, tol: float) -> str:
    """``diffs`` are X-minus-Y values of a quantity where smaller means larger in the order."""
    below = bool(np.all(diffs <= tol))
    above = bool(np.all(diffs >= -tol))
    if below and above:
        return "equal"
    if below:
        return "X_geq_Y"
    if above:
        return "Y_geq_X"
    return "neither"


def comparison_grid(model_x: BivariateModel, model_y: BivariateModel, n: int = 9,
                    shrink: float = SHRINK) -> List[EvalPoint]:
    """``n x n`` grid spanning the support overlap shrunk by ``shrink`` per side."""
    lo = [max(model_x.mass_lower[k], model_y.mass_lower[k]) for k in (0, 1)]
    hi = [min(model_x.b[k], model_y.b[k]) for k in (0, 1)]
    if hi[0] <= lo[0] or hi[1] <= lo[1]:
        raise ValueError(f"supports of {model_x.name} and {model_y.name} do not overlap")
    axes = []
    for k in (0, 1):
        w = hi[k] - lo[k]
        axes.append(np.linspace(lo[k] + shrink * w, hi[k] - shrink * w, n))
    return [EvalPoint(float(a), float(b)) for a in axes[0] for b in axes[1]]


def _describe(grid: Sequence[EvalPoint]) -> str:
    t1 = sorted({p.t1 for p in grid})
    t2 = sorted({p.t2 for p in grid})
    return (f"{len(t1)}x{len(t2)} on [{t1[0]:.6g}, {t1[-1]:.6g}] x "
            f"[{t2[0]:.6g}, {t2[-1]:.6g}]")


def _measure(model, at, i, kind, tol):
    if kind == "interval":
        return M.cdcpe_interval(model, at, i, tol).value
    return M.cdcpe_exact(model, at, i, tol).value


def compare_cdcpe(model_x: BivariateModel, model_y: BivariateModel, grid=None,
                  tol: float = ORDER_TOL, kind: str = "interval", n: int = 9,
                  qtol: Tolerances = DEFAULT_TOL) -> OrderVerdict:
    """Decide the CDCPE order between two models on a grid.

    ``kind="exact"`` compares gamma*_i instead of eps*_i (same orientation).
    Witnesses are the grid points of largest and smallest ``X - Y`` difference.
    """
    if grid is None:
        grid = comparison_grid(model_x, model_y, n)
    grid = [p if isinstance(p, EvalPoint) else EvalPoint(float(p[0]), float(p[1])) for p in grid]
    if not grid:
        raise ValueError("empty comparison grid")
    rows = []
    for at in grid:
        for i in (1, 2):
            x = _measure(model_x, at, i, kind, qtol)
            y = x if model_y is model_x else _measure(model_y, at, i, kind, qtol)
            rows.append((at, i, x, y))
    diffs = np.array([x - y for _, _, x, y in rows])
    direction = _classify(diffs, tol)
    hi = int(np.argmax(diffs))
    lo = int(np.argmin(diffs))
    witnesses = (rows[hi],) if hi == lo else (rows[hi], rows[lo])
    return OrderVerdict(direction, tuple(witnesses), _describe(grid), tol, len(grid),
                        float(diffs.max()), float(diffs.min()),
                        "cdcpe_interval" if kind == "interval" else "cdcpe_exact")


def compare_usual_stochastic(model_x: BivariateModel, model_y: BivariateModel, grid=None,
                             tol: float = ORDER_TOL, probes: Sequence[float] = (0.1, 0.4),
                             n: int = 201) -> OrderVerdict:
    """Marginal necessary condition for the usual stochastic order.

    ``X >=_st Y`` requires ``F_Xi(t) <= G_Yi(t)`` for all ``t`` and both
    marginals. A sign change of ``F_Xi - G_Yi`` rules out comparability in
    either direction. ``probes`` are extra abscissae whose differences are
    reported in ``extra``.
    """
    top = max(max(model_x.b), max(model_y.b))
    ts = np.linspace(0.0, top, n)[1:] if grid is None else np.asarray(grid, dtype=float)
    rows = []
    for i in (1, 2):
        F = model_x.marginal_cdf(i, ts)
        G = model_y.marginal_cdf(i, ts)
        for t, f, g in zip(ts, F, G):
            rows.append((EvalPoint(float(t), float(t)), i, float(f), float(g)))
    diffs = np.array([f - g for _, _, f, g in rows])
    direction = _classify(diffs, tol)
    hi = int(np.argmax(diffs))
    lo = int(np.argmin(diffs))
    witnesses = (rows[hi],) if hi == lo else (rows[hi], rows[lo])
    extra = {
        f"F{i}-G{i}@{p:g}": float(model_x.marginal_cdf(i, p) - model_y.marginal_cdf(i, p))
        for i in (1, 2) for p in probes
    }
    return OrderVerdict(direction, witnesses, f"marginals on {ts.size} points in (0, {top:g}]",
                        tol, int(ts.size), float(diffs.max()), float(diffs.min()),
                        "marginal_cdf", extra=extra)


def _increasing_both_axes(model, grid, kind, dead_band=DEAD_BAND, qtol=FD_TOL):
    """Worst finite-difference slope of the measure along either axis (both i)."""
    worst = math.inf
    where = None
    for at in grid:
        for i in (1, 2):
            fn = ((lambda t1, t2, i=i: M.cdcpe_interval(model, (t1, t2), i, qtol, False).value)
                  if kind == "interval" else
                  (lambda t1, t2, i=i: M.cdcpe_exact(model, (t1, t2), i, qtol).value))
            for axis in (1, 2):
                bounds = (model.mass_lower[axis - 1], model.upper(axis))
                d = partial_derivative(fn, (at.t1, at.t2), axis, qtol, bounds).value
                if d < worst:
                    worst, where = d, at
    return worst >= -dead_band, worst, where


def check_order_preservation(model_x: BivariateModel, model_xp: BivariateModel,
                             a: Tuple[float, float], c: Tuple[float, float],
                             d: Tuple[float, float], grid=None, kind: str = "interval",
                             tol: float = ORDER_TOL, n: int = 9) -> CheckResult:
    """Preservation of ``X <=_CDCPE X'`` under ``Y = a X + c``, ``Y' = a X' + d``.

    With ``c == d`` no monotonicity premise is needed. Otherwise
    ``d_i >= c_i > 0`` and the measure of ``X`` or ``X'`` must be increasing
    in both ``t1`` and ``t2``. ``kind="exact"`` runs the gamma* analogue.
    A failed premise gives ``skipped``; the conclusion is still evaluated
    and reported in ``values`` for diagnosis.
    """
    cid = "order_preservation" if kind == "interval" else "cond_order_preservation"
    name = f"{model_x.name} vs {model_xp.name}"
    if min(a) <= 0:
        raise ValueError(f"scale factors must be > 0, got {a}")
    same_shift = tuple(c) == tuple(d)
    if not same_shift and not all(di >= ci > 0 for ci, di in zip(c, d)):
        raise ValueError(f"need d_i >= c_i > 0, got c={c}, d={d}")

    pre_grid = grid if grid is not None else comparison_grid(model_x, model_xp, n)
    premise = compare_cdcpe(model_x, model_xp, pre_grid, tol, kind)
    reasons = []
    if premise.direction not in ("Y_geq_X", "equal"):
        at, i, x, y = premise.witness_points[-1]
        reasons.append(f"premise X <=_CDCPE X' fails: at ({at.t1:.6g}, {at.t2:.6g}), i={i}, "
                       f"X - X' = {x - y:.3g}")
    inc = None
    if not same_shift:
        inc_x = _increasing_both_axes(model_x, pre_grid, kind)
        inc_xp = _increasing_both_axes(model_xp, pre_grid, kind) if not inc_x[0] else inc_x
        inc = inc_x[0] or inc_xp[0]
        if not inc:
            reasons.append(f"neither measure is increasing in both t1 and t2 "
                           f"(slopes down to {min(inc_x[1], inc_xp[1]):.3g})")

    Y = make_linear_transform(model_x, a[0], a[1], c[0], c[1], validate=False)
    Yp = make_linear_transform(model_xp, a[0], a[1], d[0], d[1], validate=False)
    conclusion = compare_cdcpe(Y, Yp, None, tol, kind, n)
    values = {
        "premise_direction": premise.direction,
        "premise_min_diff": premise.min_diff,
        "conclusion_direction": conclusion.direction,
        "conclusion_min_diff": conclusion.min_diff,
        "conclusion_grid": conclusion.grid,
        "a": list(a), "c": list(c), "d": list(d),
    }
    if inc is not None:
        values["monotone_premise"] = inc
    if reasons:
        return CheckResult(cid, name, "skipped", math.nan, None, tol, premise.n_points,
                           "; ".join(reasons), values)
    # Y <=_CDCPE Y' means eps*(Y) >= eps*(Y') everywhere
    violation = -conclusion.min_diff
    witness = conclusion.witness_points[-1][0]
    if conclusion.direction in ("Y_geq_X", "equal"):
        status = "pass" if conclusion.n_points >= MIN_POINTS else "skipped"
    else:
        status = "fail"
    return CheckResult(cid, name, status, violation, witness, tol, conclusion.n_points,
                       "" if status != "skipped" else "too few grid points", values)
