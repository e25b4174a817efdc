"""Reversed hazard rates and expected inactivity times.

Two conditioning conventions are covered. The *interval* one conditions on
``{X1 < t1, X2 < t2}`` and works with slices ``F(., t2)`` of the joint CDF.
The *exact* one conditions on ``{Xi < ti, Xj = tj}`` and works with the slice
CDF ``S(s) = int_0^s f(z, tj) dz`` (up to the factor ``fj(tj)``, which
cancels in every ratio).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import BivariateModel, EvalPoint, Marginal
from .numerics import (DEFAULT_TOL, CumulativeIntegral, Tolerances, integrate_1d,
                       partial_derivative)

__all__ = [
    "MASS_FLOOR",
    "EmptyConditioningError",
    "ReliabilityVector",
    "SliceCDF",
    "cdf_slice",
    "reversed_hazard",
    "eit",
    "cond_reversed_hazard",
    "cond_eit",
    "eit_univariate",
    "reliability_vector",
]

# conditional measures refuse to divide by less mass than this
MASS_FLOOR = 1e-12
# below this fraction of b_i the finite-difference error is flagged
NEAR_ORIGIN = 1e-3


class EmptyConditioningError(ValueError):
    """The conditioning event has (numerically) zero probability."""


def _coords(at, i):
    if i not in (1, 2):
        raise ValueError(f"component index must be 1 or 2, got {i}")
    t1, t2 = float(at[0]), float(at[1])
    return (t1, t2) if i == 1 else (t2, t1)


def cdf_slice(model: BivariateModel, i: int, tj: float):
    """``x -> F(x, tj)`` along axis ``i`` (the other coordinate fixed at ``tj``)."""
    if i == 1:
        return lambda x: model.cdf(x, tj)
    return lambda x: model.cdf(tj, x)


def partial_slice(model: BivariateModel, i: int, tj: float):
    """``x -> dF/dx_i`` along the same slice as :func:`cdf_slice`."""
    if i == 1:
        return lambda x: model.cdf_partial(x, tj, 1)
    return lambda x: model.cdf_partial(tj, x, 2)


def pdf_slice(model: BivariateModel, i: int, tj: float):
    if i == 1:
        return lambda z: model.pdf(z, tj)
    return lambda z: model.pdf(tj, z)


def slice_points(model: BivariateModel, i: int, tj: float) -> Optional[np.ndarray]:
    br = model.slice_breaks(i, np.array([tj]))
    return None if br is None else br[0]


def joint_mass(model: BivariateModel, at) -> float:
    F = float(model.cdf(at[0], at[1]))
    if F < MASS_FLOOR:
        raise EmptyConditioningError(
            f"F({at[0]:g}, {at[1]:g}) = {F:.3g} is below the conditioning floor {MASS_FLOOR:g}")
    return F


class SliceCDF:
    """Unnormalized slice CDF ``S(s) = int_0^s f(z, tj) dz`` along axis ``i``.

    Built once per ``(model, i, tj)`` on ``[0, upper]`` and cached as a
    cumulative adaptive partition.
    """

    def __init__(self, model: BivariateModel, i: int, tj: float, upper: float,
                 tol: Tolerances = DEFAULT_TOL):
        self.model = model
        self.i = i
        self.tj = float(tj)
        self.upper = float(upper)
        self.density = pdf_slice(model, i, tj)
        self.points = slice_points(model, i, tj)
        self._cum = CumulativeIntegral(self.density, 0.0, self.upper, tol.scaled(0.1),
                                       self.points)
        self.error = self._cum.total.error

    def __call__(self, s):
        return self._cum(s)

    @property
    def mass(self) -> float:
        return self._cum.total.value


def _slice_cdf(model, at, i, tol) -> SliceCDF:
    ti, tj = _coords(at, i)
    S = SliceCDF(model, i, tj, ti, tol)
    if S.mass < MASS_FLOOR:
        raise EmptyConditioningError(
            f"slice mass up to t{i}={ti:g} at t{3 - i}={tj:g} is {S.mass:.3g}")
    return S


def reversed_hazard(model: BivariateModel, at, i: int, tol: Tolerances = DEFAULT_TOL,
                    use_closed_form: bool = True) -> float:
    """``phi_i = d/dt_i log F(t1, t2)``."""
    ti, tj = _coords(at, i)
    if use_closed_form and "reversed_hazard" in model.closed_forms:
        return float(model.closed_forms["reversed_hazard"](float(at[0]), float(at[1]), i))
    F = joint_mass(model, at)
    if model.raw_grad is not None:
        return float(model.cdf_partial(at[0], at[1], i)) / F

    def log_f(t1, t2):
        return math.log(max(float(model.cdf(t1, t2)), 1e-300))

    return partial_derivative(log_f, (float(at[0]), float(at[1])), i, tol,
                              bounds=(0.0, model.upper(i))).value


def eit(model: BivariateModel, at, i: int, tol: Tolerances = DEFAULT_TOL,
        use_closed_form: bool = True) -> float:
    """``m_i = int_0^{t_i} F(x, t_j) dx / F(t1, t2)``."""
    ti, tj = _coords(at, i)
    if use_closed_form and "eit" in model.closed_forms:
        return float(model.closed_forms["eit"](float(at[0]), float(at[1]), i))
    F = joint_mass(model, at)
    res = integrate_1d(cdf_slice(model, i, tj), (0.0, ti), tol.scaled(0.1),
                       slice_points(model, i, tj))
    return res.value / F


def cond_reversed_hazard(model: BivariateModel, at, i: int,
                         tol: Tolerances = DEFAULT_TOL) -> float:
    """``phi_bar_i = f(t1, t2) / int_0^{t_i} f(z, t_j) dz``."""
    S = _slice_cdf(model, at, i, tol)
    return float(model.pdf(at[0], at[1])) / S.mass


def cond_eit(model: BivariateModel, at, i: int, tol: Tolerances = DEFAULT_TOL) -> float:
    """``m_bar_i = int_0^{t_i} S(x) dx / S(t_i)``, computed as ``int (t_i - z) f(z) dz / S``."""
    ti, tj = _coords(at, i)
    S = _slice_cdf(model, at, i, tol)
    g = S.density
    res = integrate_1d(lambda z: (ti - z) * g(z), (0.0, ti), tol.scaled(0.1), S.points)
    return res.value / S.mass


def eit_univariate(marginal: Marginal, t: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """``E(t - X | X <= t) = int_0^t F(x) dx / F(t)``."""
    Ft = float(marginal.cdf(t))
    if Ft < MASS_FLOOR:
        raise EmptyConditioningError(f"F({t:g}) = {Ft:.3g} is below the conditioning floor")
    pts = np.asarray(marginal.breaks, dtype=float) if marginal.breaks else None
    return integrate_1d(marginal.cdf, (0.0, t), tol.scaled(0.1), pts).value / Ft


@dataclass(frozen=True)
class ReliabilityVector:
    component_1: float
    component_2: float
    at: EvalPoint
    kind: str
    near_origin: bool = False

    def __iter__(self):
        return iter((self.component_1, self.component_2))

    def __post_init__(self):
        if self.kind not in ("reversed_hazard", "eit", "cond_reversed_hazard", "cond_eit"):
            raise ValueError(f"unknown reliability kind {self.kind!r}")


_KINDS = {
    "reversed_hazard": reversed_hazard,
    "eit": eit,
    "cond_reversed_hazard": cond_reversed_hazard,
    "cond_eit": cond_eit,
}


def reliability_vector(model: BivariateModel, at, kind: str,
                       tol: Tolerances = DEFAULT_TOL) -> ReliabilityVector:
    p = model.check_point(at)
    fn = _KINDS[kind]
    near = p.t1 < NEAR_ORIGIN * model.upper(1) or p.t2 < NEAR_ORIGIN * model.upper(2)
    return ReliabilityVector(fn(model, p, 1, tol=tol), fn(model, p, 2, tol=tol), p, kind, near)
