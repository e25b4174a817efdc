"""Bivariate lifetime models on a finite support box.

A :class:`BivariateModel` bundles the joint CDF with whatever else is known in
closed form (pdf, CDF gradient, marginals, registered measure values). Missing
pieces are derived numerically, so a bare CDF is enough to use every measure.
All callables are vectorized over numpy arrays.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from .numerics import DEFAULT_TOL, Tolerances, integrate_2d

__all__ = [
    "SupportBox",
    "EvalPoint",
    "Marginal",
    "BivariateModel",
    "InvalidModelError",
    "uniform_marginal",
    "power_marginal",
    "truncated_exponential_marginal",
    "make_triangle",
    "make_extreme_value_b",
    "make_reciprocal_f",
    "make_reciprocal_g",
    "make_log_interaction_uniform",
    "make_power",
    "make_linear_density",
    "make_independent",
    "make_independent_uniform",
    "make_linear_transform",
    "make_monotone_transform",
    "load_tabulated",
    "model_from_spec",
    "catalogue",
    "CATALOGUE_NAMES",
]

# invariant battery slack for analytic models
_BATTERY_TOL = 1e-9
# tabulated grids are rejected beyond this
_TABULATED_TOL = 1e-6


class InvalidModelError(ValueError):
    """A model failed its construction-time invariant battery."""


@dataclass(frozen=True)
class SupportBox:
    b1: float
    b2: float

    def __post_init__(self):
        for name in ("b1", "b2"):
            v = getattr(self, name)
            if not (0.0 < v < math.inf):
                raise ValueError(f"support limit {name} must be finite and > 0, got {v}")

    def upper(self, i: int) -> float:
        return self.b1 if i == 1 else self.b2


@dataclass(frozen=True)
class EvalPoint:
    t1: float
    t2: float

    def __iter__(self):
        return iter((self.t1, self.t2))

    def __getitem__(self, i):
        return (self.t1, self.t2)[i]

    def coord(self, i: int) -> float:
        return self.t1 if i == 1 else self.t2


def _as_point(at) -> EvalPoint:
    if isinstance(at, EvalPoint):
        return at
    t1, t2 = at
    return EvalPoint(float(t1), float(t2))


def _fd_step(x, tol):
    return tol.fd_step_scale * np.maximum(1.0, np.abs(x))


def _scalar_or_array(out, scalar):
    return float(out.reshape(-1)[0]) if scalar else out


@dataclass(frozen=True, eq=False)
class Marginal:
    """A univariate lifetime law on ``(0, b)``."""

    cdf_fn: Callable
    b: float
    pdf_fn: Optional[Callable] = None
    mean: Optional[float] = None
    name: str = "marginal"
    breaks: Tuple[float, ...] = ()
    tol: Tolerances = DEFAULT_TOL

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        c = np.minimum(x, self.b)
        out = np.zeros(c.shape)
        pos = c > 0
        if pos.any():
            out[pos] = self.cdf_fn(c[pos])
        return _scalar_or_array(out, scalar)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        inside = (x > 0) & (x < self.b)
        out = np.zeros(x.shape)
        if inside.any():
            xi = x[inside]
            if self.pdf_fn is not None:
                out[inside] = self.pdf_fn(xi)
            else:
                h = _fd_step(xi, self.tol)
                lo = np.maximum(xi - h, 0.0)
                hi = np.minimum(xi + h, self.b)
                out[inside] = (self.cdf(hi) - self.cdf(lo)) / (hi - lo)
        return _scalar_or_array(out, scalar)

    def survival(self, x):
        return 1.0 - self.cdf(x)


def uniform_marginal(b: float = 1.0) -> Marginal:
    return Marginal(lambda x: x / b, b, lambda x: np.full_like(x, 1.0 / b),
                    mean=b / 2.0, name=f"uniform(0,{b:g})")


def power_marginal(c: float, b: float = 1.0) -> Marginal:
    """``F(x) = (x/b)**c`` on ``(0, b)``."""
    if c <= 0:
        raise ValueError(f"power exponent must be > 0, got {c}")
    return Marginal(lambda x: (x / b) ** c, b, lambda x: c / b * (x / b) ** (c - 1.0),
                    mean=b * c / (c + 1.0), name=f"power({c:g},{b:g})")


def truncated_exponential_marginal(rate: float, b: float) -> Marginal:
    """Exponential law with the given rate, truncated to ``(0, b)``."""
    if rate <= 0:
        raise ValueError(f"rate must be > 0, got {rate}")
    z = -math.expm1(-rate * b)
    mean = (1.0 / rate - b * math.exp(-rate * b) / z)
    return Marginal(lambda x: -np.expm1(-rate * x) / z, b,
                    lambda x: rate * np.exp(-rate * x) / z,
                    mean=mean, name=f"texp({rate:g},{b:g})")


@dataclass(frozen=True, eq=False)
class BivariateModel:
    """Joint law of a pair of lifetimes supported in ``(0, b1) x (0, b2)``.

    ``raw_cdf``, ``raw_pdf`` and ``raw_grad`` are only ever called with
    coordinates in ``(0, b1] x (0, b2]``; the public methods handle clamping
    and the zero region. ``raw_grad`` returns the pair ``(dF/dx1, dF/dx2)``.

    ``pdf_breaks(axis, other)`` returns, for an array ``other`` of fixed
    coordinates, an ``(n, p)`` array of positions along ``axis`` where the
    pdf slice jumps. ``knots`` lists axis-aligned break positions.
    ``closed_forms`` maps measure names to exact evaluators
    ``fn(t1, t2, i)``; see :mod:`bivcpe.measures`.
    """

    name: str
    support: SupportBox
    raw_cdf: Callable
    raw_pdf: Optional[Callable] = None
    raw_grad: Optional[Callable] = None
    marginals: Tuple[Optional[Marginal], Optional[Marginal]] = (None, None)
    closed_forms: Mapping[str, Callable] = field(default_factory=dict)
    pdf_breaks: Optional[Callable] = None
    knots: Tuple[Optional[np.ndarray], Optional[np.ndarray]] = (None, None)
    mass_lower: Tuple[float, float] = (0.0, 0.0)
    family: str = "custom"
    params: Mapping = field(default_factory=dict)
    tol: Tolerances = DEFAULT_TOL

    def __repr__(self):
        return (f"BivariateModel(name={self.name!r}, support=({self.support.b1:g}, "
                f"{self.support.b2:g}))")

    @property
    def b(self) -> Tuple[float, float]:
        return (self.support.b1, self.support.b2)

    def upper(self, i: int) -> float:
        return self.support.upper(i)

    def _prep(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float),
                                     np.asarray(x2, dtype=float))
        scalar = x1.ndim == 0
        return np.atleast_1d(x1), np.atleast_1d(x2), scalar

    def cdf(self, x1, x2):
        x1, x2, scalar = self._prep(x1, x2)
        c1 = np.minimum(x1, self.support.b1)
        c2 = np.minimum(x2, self.support.b2)
        out = np.zeros(c1.shape)
        pos = (c1 > 0) & (c2 > 0)
        if pos.any():
            out[pos] = np.clip(self.raw_cdf(c1[pos], c2[pos]), 0.0, 1.0)
        return _scalar_or_array(out, scalar)

    def cdf_partial(self, x1, x2, axis: int):
        """``dF/dx_axis``; zero outside the box along that axis."""
        x1, x2, scalar = self._prep(x1, x2)
        xs = (x1, x2)
        b = self.b
        xa = xs[axis - 1]
        inside = (xa > 0) & (xa < b[axis - 1]) & (xs[2 - axis] > 0)
        out = np.zeros(x1.shape)
        if inside.any():
            c1 = np.minimum(x1[inside], b[0])
            c2 = np.minimum(x2[inside], b[1])
            if self.raw_grad is not None:
                out[inside] = self.raw_grad(c1, c2)[axis - 1]
            else:
                c = (c1, c2)[axis - 1]
                h = _fd_step(c, self.tol)
                lo = np.maximum(c - h, 0.0)
                hi = np.minimum(c + h, b[axis - 1])
                if axis == 1:
                    out[inside] = (self.cdf(hi, c2) - self.cdf(lo, c2)) / (hi - lo)
                else:
                    out[inside] = (self.cdf(c1, hi) - self.cdf(c1, lo)) / (hi - lo)
        return _scalar_or_array(out, scalar)

    def pdf(self, x1, x2):
        x1, x2, scalar = self._prep(x1, x2)
        inside = (x1 > 0) & (x2 > 0) & (x1 < self.support.b1) & (x2 < self.support.b2)
        out = np.zeros(x1.shape)
        if inside.any():
            a1 = x1[inside]
            a2 = x2[inside]
            if self.raw_pdf is not None:
                out[inside] = self.raw_pdf(a1, a2)
            else:
                h = _fd_step(a2, self.tol)
                lo = np.maximum(a2 - h, 0.0)
                hi = np.minimum(a2 + h, self.support.b2)
                out[inside] = (self.cdf_partial(a1, hi, 1)
                               - self.cdf_partial(a1, lo, 1)) / (hi - lo)
        return _scalar_or_array(out, scalar)

    def marginal(self, i: int) -> Marginal:
        given = self.marginals[i - 1]
        if given is not None:
            return given
        bj = self.upper(3 - i)
        if i == 1:
            cdf_fn = lambda x: self.cdf(x, bj)  # noqa: E731
            pdf_fn = lambda x: self.cdf_partial(x, bj, 1)  # noqa: E731
        else:
            cdf_fn = lambda x: self.cdf(bj, x)  # noqa: E731
            pdf_fn = lambda x: self.cdf_partial(bj, x, 2)  # noqa: E731
        knots = self.knots[i - 1]
        return Marginal(cdf_fn, self.upper(i), pdf_fn, name=f"{self.name}[X{i}]",
                        breaks=tuple(knots) if knots is not None else (),
                        tol=self.tol)

    def marginal_cdf(self, i: int, x):
        return self.marginal(i).cdf(x)

    def marginal_pdf(self, i: int, x):
        return self.marginal(i).pdf(x)

    def slice_breaks(self, axis: int, other) -> Optional[np.ndarray]:
        """Break points along ``axis`` of the pdf slice at fixed ``other``."""
        other = np.atleast_1d(np.asarray(other, dtype=float))
        parts = []
        if self.pdf_breaks is not None:
            parts.append(np.asarray(self.pdf_breaks(axis, other), dtype=float)
                         .reshape(other.size, -1))
        knots = self.knots[axis - 1]
        if knots is not None and len(knots):
            parts.append(np.broadcast_to(np.asarray(knots, dtype=float)[None, :],
                                         (other.size, len(knots))))
        if not parts:
            return None
        return np.concatenate(parts, axis=1)

    def check_point(self, at) -> EvalPoint:
        p = _as_point(at)
        if not (0 < p.t1 <= self.support.b1 and 0 < p.t2 <= self.support.b2):
            raise ValueError(f"evaluation point ({p.t1}, {p.t2}) outside support "
                             f"(0, {self.support.b1:g}] x (0, {self.support.b2:g}]")
        return p

    def validate(self, n: int = 21, tol: float = _BATTERY_TOL,
                 check_pdf_mass: bool = True) -> "BivariateModel":
        """Run the invariant battery on an ``n x n`` grid; raise on failure."""
        b1, b2 = self.b
        g1 = np.linspace(0.0, b1, n)
        g2 = np.linspace(0.0, b2, n)
        # the public cdf is 0 on the edges by construction, so probe just inside
        g1[0], g2[0] = 1e-10 * b1, 1e-10 * b2
        X1, X2 = np.meshgrid(g1, g2, indexing="ij")
        F = self.cdf(X1, X2)
        problems = []
        if np.max(np.abs(F[0, :])) > tol or np.max(np.abs(F[:, 0])) > tol:
            problems.append("cdf does not vanish on the lower edges")
        if abs(F[-1, -1] - 1.0) > tol:
            problems.append(f"cdf(b1, b2) = {F[-1, -1]!r} != 1")
        for i in (1, 2):
            m = self.marginals[i - 1]
            if m is not None:
                g = g1 if i == 1 else g2
                edge = F[:, -1] if i == 1 else F[-1, :]
                if np.max(np.abs(m.cdf(g) - edge)) > tol:
                    problems.append(f"marginal {i} disagrees with the joint cdf")
        if np.min(np.diff(F, axis=0)) < -tol or np.min(np.diff(F, axis=1)) < -tol:
            problems.append("cdf is not nondecreasing")
        rect = F[1:, 1:] - F[:-1, 1:] - F[1:, :-1] + F[:-1, :-1]
        if np.min(rect) < -tol:
            k = np.unravel_index(np.argmin(rect), rect.shape)
            problems.append(f"rectangle inequality fails near ({g1[k[0]]:.4g}, "
                            f"{g2[k[1]]:.4g}) by {-rect[k]:.3g}")
        if self.raw_pdf is not None:
            mid1 = 0.5 * (g1[1:] + g1[:-1])
            mid2 = 0.5 * (g2[1:] + g2[:-1])
            M1, M2 = np.meshgrid(mid1, mid2, indexing="ij")
            if np.min(self.pdf(M1, M2)) < -tol:
                problems.append("pdf takes negative values")
            if check_pdf_mass and not problems:
                mass = integrate_2d(lambda a, c: self.pdf(a, c), ((0, b1), (0, b2)),
                                    self.tol, points=self.inner_points_pdf()).value
                if abs(mass - 1.0) > 1e3 * (self.tol.abs_tol + self.tol.rel_tol):
                    problems.append(f"pdf integrates to {mass!r}")
        if problems:
            raise InvalidModelError(f"{self.name}: " + "; ".join(problems))
        return self

    def inner_points_pdf(self):
        """Break points for iterated integration of the pdf (outer x1, inner x2)."""
        outer = self.knots[0]
        if self.pdf_breaks is None and self.knots[1] is None:
            return (outer, None)
        return (outer, lambda x1: self.slice_breaks(2, x1))


def _finish(model: BivariateModel, validate: bool, **kw) -> BivariateModel:
    return model.validate(**kw) if validate else model


def make_triangle(validate: bool = True) -> BivariateModel:
    """Uniform law on the triangle ``0 < x2 < x1 < 1`` (density 2)."""

    def cdf(x1, x2):
        return np.where(x2 <= x1, 2.0 * x1 * x2 - x2 * x2, x1 * x1)

    def grad(x1, x2):
        below = x2 <= x1
        return (np.where(below, 2.0 * x2, 2.0 * x1),
                np.where(below, 2.0 * (x1 - x2), 0.0))

    def pdf(x1, x2):
        return np.where(x2 < x1, 2.0, 0.0)

    def breaks(axis, other):
        return other[:, None]

    m1 = Marginal(lambda x: x * x, 1.0, lambda x: 2.0 * x, mean=2.0 / 3.0, name="triangle[X1]")
    m2 = Marginal(lambda x: 2.0 * x - x * x, 1.0, lambda x: 2.0 - 2.0 * x,
                  mean=1.0 / 3.0, name="triangle[X2]")
    model = BivariateModel("triangle", SupportBox(1.0, 1.0), cdf, pdf, grad, (m1, m2),
                           pdf_breaks=breaks, family="triangle")
    return _finish(model, validate)


def _evb_parts(m):
    def log_a(x1, x2):
        return np.logaddexp(-m * x1, -m * x2)

    def cdf(x1, x2):
        return np.exp(-np.exp(log_a(x1, x2) / m))

    def d1(x1, x2):
        la = log_a(x1, x2)
        return np.exp(-np.exp(la / m) + (1.0 / m - 1.0) * la - m * x1)

    def pdf(x1, x2):
        la = log_a(x1, x2)
        core = np.exp((2.0 / m - 2.0) * la) + (m - 1.0) * np.exp((1.0 / m - 2.0) * la)
        return np.exp(-np.exp(la / m) - m * (x1 + x2)) * core

    return cdf, d1, pdf


def make_extreme_value_b(m: float = 2.0, length: float = 12.0,
                         lower_mass: float = 1e-12, validate: bool = True) -> BivariateModel:
    """Bivariate extreme-value law of type B, ``F = exp(-(e^{-m x1} + e^{-m x2})^{1/m})``.

    The law lives on the whole plane, so it is realized on a finite box:
    coordinates are shifted by ``x0`` with ``F(x0, x0) = lower_mass`` and the
    law is truncated to ``[x0, x0 + length]^2`` (inclusion-exclusion, then
    renormalized). Conditional measures at interior points only see ratios of
    the CDF, so they differ from the untruncated law by ``O(lower_mass)``.
    """
    if not m >= 1:
        raise ValueError(f"extreme value type B requires m >= 1, got {m}")
    F, d1, f = _evb_parts(m)
    # F(x, x) = exp(-2^{1/m} e^{-x})
    x0 = -math.log(-math.log(lower_mass) / 2.0 ** (1.0 / m))
    hi = x0 + length
    mass = F(hi, hi) - F(x0, hi) - F(hi, x0) + F(x0, x0)

    def cdf(y1, y2):
        a1 = x0 + y1
        a2 = x0 + y2
        return (F(a1, a2) - F(x0, a2) - F(a1, x0) + F(x0, x0)) / mass

    def grad(y1, y2):
        a1 = x0 + y1
        a2 = x0 + y2
        g1 = (d1(a1, a2) - d1(a1, x0)) / mass
        # symmetric law: dF/dx2 (a1, a2) = d1(a2, a1)
        g2 = (d1(a2, a1) - d1(a2, x0)) / mass
        return g1, g2

    def pdf(y1, y2):
        return f(x0 + y1, x0 + y2) / mass

    model = BivariateModel(
        f"extreme_value_b(m={m:g})", SupportBox(length, length), cdf, pdf, grad,
        family="extreme_value_b",
        params={"m": m, "length": length, "lower_mass": lower_mass, "shift": x0})
    return _finish(model, validate)


def make_reciprocal_f(validate: bool = True) -> BivariateModel:
    """``F(t1, t2) = 1 / (4/t1 + 4/t2 - 1)`` on ``(0, 4)^2``, marginals ``t/4``."""

    def cdf(t1, t2):
        return t1 * t2 / (4.0 * t1 + 4.0 * t2 - t1 * t2)

    def grad(t1, t2):
        d = 4.0 * t1 + 4.0 * t2 - t1 * t2
        # dF/dt1 = 4 t2^2 / d^2
        return 4.0 * t2 * t2 / (d * d), 4.0 * t1 * t1 / (d * d)

    def pdf(t1, t2):
        d = 4.0 * t1 + 4.0 * t2 - t1 * t2
        return 32.0 * t1 * t2 / d ** 3

    model = BivariateModel("reciprocal_f", SupportBox(4.0, 4.0), cdf, pdf, grad,
                           (uniform_marginal(4.0), uniform_marginal(4.0)),
                           family="reciprocal_f")
    return _finish(model, validate)


def make_reciprocal_g(validate: bool = True) -> BivariateModel:
    """``G(t1, t2) = 1 / (1/t1^2 + 1/t2^2 - 1)`` on ``(0, 1)^2``, marginals ``t^2``."""

    def cdf(t1, t2):
        s1 = t1 * t1
        s2 = t2 * t2
        return s1 * s2 / (s1 + s2 - s1 * s2)

    def grad(t1, t2):
        s1 = t1 * t1
        s2 = t2 * t2
        d = s1 + s2 - s1 * s2
        return 2.0 * t1 * s2 * s2 / (d * d), 2.0 * t2 * s1 * s1 / (d * d)

    def pdf(t1, t2):
        s1 = t1 * t1
        s2 = t2 * t2
        d = s1 + s2 - s1 * s2
        return 8.0 * (t1 * t2) ** 3 / d ** 3

    model = BivariateModel("reciprocal_g", SupportBox(1.0, 1.0), cdf, pdf, grad,
                           (power_marginal(2.0), power_marginal(2.0)),
                           family="reciprocal_g")
    return _finish(model, validate)


def _power_parts(c1, c2, theta, b1, b2):
    def logs(t1, t2):
        return np.log(t1 / b1), np.log(t2 / b2)

    def cdf(t1, t2):
        u, v = logs(t1, t2)
        return np.exp(c1 * u + c2 * v + theta * u * v)

    def grad(t1, t2):
        u, v = logs(t1, t2)
        F = np.exp(c1 * u + c2 * v + theta * u * v)
        return F * (c1 + theta * v) / t1, F * (c2 + theta * u) / t2

    def pdf(t1, t2):
        u, v = logs(t1, t2)
        F = np.exp(c1 * u + c2 * v + theta * u * v)
        return F * ((c1 + theta * v) * (c2 + theta * u) + theta) / (t1 * t2)

    def exponent(i, tj):
        # F(., tj) is a power law along axis i with this exponent
        if i == 1:
            return c1 + theta * np.log(tj / b2)
        return c2 + theta * np.log(tj / b1)

    def eit(t1, t2, i):
        ti, tj = (t1, t2) if i == 1 else (t2, t1)
        return ti / (exponent(i, tj) + 1.0)

    def cdcpe(t1, t2, i):
        ti, tj = (t1, t2) if i == 1 else (t2, t1)
        k = exponent(i, tj)
        return ti * k / (k + 1.0) ** 2

    def rhr(t1, t2, i):
        ti, tj = (t1, t2) if i == 1 else (t2, t1)
        return exponent(i, tj) / ti

    forms = {"eit": eit, "cdcpe_interval": cdcpe, "reversed_hazard": rhr}
    return cdf, grad, pdf, forms


def make_log_interaction_uniform(theta: float = -0.5, validate: bool = True) -> BivariateModel:
    """``F(t1, t2) = t1^(1 + theta log t2) t2`` on ``(0, 1)^2``, ``theta <= 0``.

    Every slice ``F(., t2)`` is a power law, so the EIT and the conditional
    dynamic CPE are registered in closed form. The joint law is a proper
    distribution only for ``theta >= -1``; below that the mixed partial turns
    negative near ``(1, 1)`` and the invariant battery rejects the model
    (pass ``validate=False`` to work with the slice functionals anyway).
    """
    if theta > 0:
        raise ValueError(f"log-interaction family requires theta <= 0, got {theta}")
    cdf, grad, pdf, forms = _power_parts(1.0, 1.0, theta, 1.0, 1.0)
    model = BivariateModel(f"log_interaction_uniform(theta={theta:g})", SupportBox(1.0, 1.0),
                           cdf, pdf, grad, (uniform_marginal(1.0), uniform_marginal(1.0)),
                           closed_forms=forms, family="log_interaction_uniform",
                           params={"theta": theta})
    return _finish(model, validate)


def make_power(c1: float = 2.0, c2: float = 1.5, theta: float = -0.5,
               b1: float = 2.0, b2: float = 1.0, validate: bool = True) -> BivariateModel:
    """``F = (t1/b1)^c1 (t2/b2)^(c2 + theta log(t1/b1))``, ``theta <= 0``.

    Parameter validity beyond the signs is decided by the rectangle
    inequality on the battery grid.
    """
    if c1 <= 0 or c2 <= 0:
        raise ValueError(f"power family requires c1, c2 > 0, got ({c1}, {c2})")
    if theta > 0:
        raise ValueError(f"power family requires theta <= 0, got {theta}")
    cdf, grad, pdf, forms = _power_parts(c1, c2, theta, b1, b2)
    model = BivariateModel(
        f"power(c1={c1:g},c2={c2:g},theta={theta:g})", SupportBox(b1, b2), cdf, pdf, grad,
        (power_marginal(c1, b1), power_marginal(c2, b2)), closed_forms=forms,
        family="power", params={"c1": c1, "c2": c2, "theta": theta, "b1": b1, "b2": b2})
    return _finish(model, validate)


def make_linear_density(validate: bool = True) -> BivariateModel:
    """Density ``(x1 + 4 x2) / 6`` on ``[0, 2] x [0, 1]``."""

    def cdf(x1, x2):
        return (x1 * x1 * x2 + 4.0 * x1 * x2 * x2) / 12.0

    def grad(x1, x2):
        return (2.0 * x1 * x2 + 4.0 * x2 * x2) / 12.0, (x1 * x1 + 8.0 * x1 * x2) / 12.0

    def pdf(x1, x2):
        return (x1 + 4.0 * x2) / 6.0

    m1 = Marginal(lambda x: (x * x + 4.0 * x) / 12.0, 2.0,
                  lambda x: (x + 2.0) / 6.0, mean=10.0 / 9.0, name="linear_density[X1]")
    m2 = Marginal(lambda x: (4.0 * x + 8.0 * x * x) / 12.0, 1.0,
                  lambda x: (1.0 + 4.0 * x) / 3.0, mean=11.0 / 18.0,
                  name="linear_density[X2]")
    model = BivariateModel("linear_density", SupportBox(2.0, 1.0), cdf, pdf, grad, (m1, m2),
                           family="linear_density")
    return _finish(model, validate)


def make_independent(marginal1: Marginal, marginal2: Marginal, name: Optional[str] = None,
                     validate: bool = True) -> BivariateModel:
    """Product law with the given marginals."""
    F1, F2 = marginal1.cdf, marginal2.cdf
    f1, f2 = marginal1.pdf, marginal2.pdf

    def cdf(x1, x2):
        return F1(x1) * F2(x2)

    def grad(x1, x2):
        return f1(x1) * F2(x2), F1(x1) * f2(x2)

    def pdf(x1, x2):
        return f1(x1) * f2(x2)

    knots = tuple(np.asarray(m.breaks, dtype=float) if m.breaks else None
                  for m in (marginal1, marginal2))
    model = BivariateModel(name or f"independent({marginal1.name},{marginal2.name})",
                           SupportBox(marginal1.b, marginal2.b), cdf, pdf, grad,
                           (marginal1, marginal2), knots=knots, family="independent",
                           params={"marginal1": marginal1.name, "marginal2": marginal2.name})
    return _finish(model, validate)


def make_independent_uniform(b1: float = 1.0, b2: float = 1.0,
                             validate: bool = True) -> BivariateModel:
    model = make_independent(uniform_marginal(b1), uniform_marginal(b2),
                             name=f"independent_uniform({b1:g},{b2:g})", validate=False)
    model = BivariateModel(**{**model.__dict__, "params": {"b1": b1, "b2": b2},
                              "family": "independent_uniform"})
    return _finish(model, validate)


def _shift_knots(knots, c, d, extra):
    vals = [] if knots is None else list(np.asarray(knots, dtype=float) * c + d)
    vals += extra
    return np.asarray(sorted(set(vals)), dtype=float) if vals else None


def make_linear_transform(base: BivariateModel, c1: float = 1.0, c2: float = 1.0,
                          d1: float = 0.0, d2: float = 0.0,
                          validate: bool = True) -> BivariateModel:
    """Law of ``(c1 X1 + d1, c2 X2 + d2)``."""
    if c1 <= 0 or c2 <= 0:
        raise ValueError(f"scale factors must be > 0, got ({c1}, {c2})")
    if d1 < 0 or d2 < 0:
        raise ValueError(f"shifts must be >= 0, got ({d1}, {d2})")

    def cdf(y1, y2):
        return base.cdf((y1 - d1) / c1, (y2 - d2) / c2)

    def grad(y1, y2):
        x1 = (y1 - d1) / c1
        x2 = (y2 - d2) / c2
        return base.cdf_partial(x1, x2, 1) / c1, base.cdf_partial(x1, x2, 2) / c2

    def pdf(y1, y2):
        return base.pdf((y1 - d1) / c1, (y2 - d2) / c2) / (c1 * c2)

    def breaks(axis, other):
        c, d = (c1, d1) if axis == 1 else (c2, d2)
        co, do = (c2, d2) if axis == 1 else (c1, d1)
        inner = base.slice_breaks(axis, (other - do) / co)
        if inner is None:
            return np.empty((other.size, 0))
        return inner * c + d

    marg = []
    for i, (c, d) in enumerate(((c1, d1), (c2, d2)), start=1):
        m = base.marginal(i)
        marg.append(Marginal(lambda y, m=m, c=c, d=d: m.cdf((y - d) / c), c * m.b + d,
                             lambda y, m=m, c=c, d=d: m.pdf((y - d) / c) / c,
                             mean=None if m.mean is None else c * m.mean + d,
                             name=f"{c:g}*{m.name}+{d:g}",
                             breaks=tuple(np.asarray(m.breaks) * c + d) + ((d,) if d > 0 else ())))
    knots = (_shift_knots(base.knots[0], c1, d1, [d1] if d1 > 0 else []),
             _shift_knots(base.knots[1], c2, d2, [d2] if d2 > 0 else []))
    model = BivariateModel(
        f"linear({base.name};c=({c1:g},{c2:g}),d=({d1:g},{d2:g}))",
        SupportBox(c1 * base.support.b1 + d1, c2 * base.support.b2 + d2),
        cdf, pdf, grad, tuple(marg),
        pdf_breaks=breaks if base.pdf_breaks is not None else None, knots=knots,
        mass_lower=(c1 * base.mass_lower[0] + d1, c2 * base.mass_lower[1] + d2),
        family="linear_transform",
        params={"base": base.name, "c1": c1, "c2": c2, "d1": d1, "d2": d2}, tol=base.tol)
    return _finish(model, validate)


def make_monotone_transform(base: BivariateModel, phi: Callable, phi_inv: Callable,
                            phi_prime: Callable, name: str = "phi",
                            validate: bool = True, n_check: int = 201) -> BivariateModel:
    """Law of ``(phi(X1), phi(X2))`` for a strictly increasing ``phi`` with ``phi(0) = 0``."""
    if abs(float(phi(0.0))) > 1e-12:
        raise ValueError("phi(0) must be 0")
    top = max(base.b)
    xs = np.linspace(0.0, top, n_check)
    dphi = np.asarray(phi_prime(xs), dtype=float)
    if np.any(dphi < 0) or np.any(np.diff(np.asarray(phi(xs), dtype=float)) <= 0):
        raise ValueError("phi is not strictly increasing on the support")
    if np.max(np.abs(phi_inv(phi(xs)) - xs)) > 1e-9 * max(1.0, top):
        raise ValueError("phi_inv is not the inverse of phi on the support")

    def cdf(y1, y2):
        return base.cdf(phi_inv(y1), phi_inv(y2))

    def grad(y1, y2):
        x1 = phi_inv(y1)
        x2 = phi_inv(y2)
        return (base.cdf_partial(x1, x2, 1) / phi_prime(x1),
                base.cdf_partial(x1, x2, 2) / phi_prime(x2))

    def pdf(y1, y2):
        x1 = phi_inv(y1)
        x2 = phi_inv(y2)
        return base.pdf(x1, x2) / (phi_prime(x1) * phi_prime(x2))

    def breaks(axis, other):
        inner = base.slice_breaks(axis, phi_inv(other))
        if inner is None:
            return np.empty((other.size, 0))
        return phi(inner)

    knots = tuple(None if k is None else phi(np.asarray(k, dtype=float)) for k in base.knots)
    model = BivariateModel(
        f"{name}({base.name})",
        SupportBox(float(phi(base.support.b1)), float(phi(base.support.b2))),
        cdf, pdf, grad,
        pdf_breaks=breaks if base.pdf_breaks is not None else None, knots=knots,
        mass_lower=(float(phi(base.mass_lower[0])), float(phi(base.mass_lower[1]))),
        family="monotone_transform", params={"base": base.name, "phi": name}, tol=base.tol)
    return _finish(model, validate)


def _bilinear_model(g1, g2, F, name, validate):
    b1, b2 = float(g1[-1]), float(g2[-1])
    cell = (F[1:, 1:] - F[:-1, 1:] - F[1:, :-1] + F[:-1, :-1])
    dens = cell / (np.diff(g1)[:, None] * np.diff(g2)[None, :])

    def locate(x1, x2):
        i = np.clip(np.searchsorted(g1, x1, side="right") - 1, 0, g1.size - 2)
        j = np.clip(np.searchsorted(g2, x2, side="right") - 1, 0, g2.size - 2)
        w1 = (x1 - g1[i]) / (g1[i + 1] - g1[i])
        w2 = (x2 - g2[j]) / (g2[j + 1] - g2[j])
        return i, j, w1, w2

    def cdf(x1, x2):
        i, j, w1, w2 = locate(x1, x2)
        return ((1 - w1) * (1 - w2) * F[i, j] + w1 * (1 - w2) * F[i + 1, j]
                + (1 - w1) * w2 * F[i, j + 1] + w1 * w2 * F[i + 1, j + 1])

    def grad(x1, x2):
        i, j, w1, w2 = locate(x1, x2)
        h1 = g1[i + 1] - g1[i]
        h2 = g2[j + 1] - g2[j]
        d1 = ((1 - w2) * (F[i + 1, j] - F[i, j]) + w2 * (F[i + 1, j + 1] - F[i, j + 1])) / h1
        d2 = ((1 - w1) * (F[i, j + 1] - F[i, j]) + w1 * (F[i + 1, j + 1] - F[i + 1, j])) / h2
        return d1, d2

    def pdf(x1, x2):
        i, j, _, _ = locate(x1, x2)
        return dens[i, j]

    model = BivariateModel(name, SupportBox(b1, b2), cdf, pdf, grad,
                           knots=(np.asarray(g1[1:-1]), np.asarray(g2[1:-1])),
                           family="tabulated", params={"n1": g1.size, "n2": g2.size})
    if validate:
        model.validate(n=min(g1.size, g2.size, 41), tol=_TABULATED_TOL, check_pdf_mass=False)
        if np.min(cell) < -_TABULATED_TOL:
            raise InvalidModelError(f"{name}: grid violates the rectangle inequality")
    return model


def load_tabulated(path, support: Optional[Tuple[float, float]] = None,
                   validate: bool = True) -> BivariateModel:
    """Build a model from a CSV grid with header ``x1,x2,F`` (row-major).

    The CDF is bilinearly interpolated, which preserves monotonicity and the
    rectangle inequality of the grid; the pdf is the exact mixed partial of
    the interpolant (piecewise constant).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["x1", "x2", "F"]:
            raise ValueError(f"{path}: expected header 'x1,x2,F', got {reader.fieldnames}")
        rows = np.array([[float(r["x1"]), float(r["x2"]), float(r["F"])] for r in reader])
    if rows.size == 0:
        raise ValueError(f"{path}: no data rows")
    x1, x2, F = rows.T
    g1 = np.unique(x1)
    g2 = np.unique(x2)
    if g1.size < 2 or g2.size < 2 or rows.shape[0] != g1.size * g2.size:
        raise ValueError(f"{path}: rows do not form a rectangular grid")
    if not (np.all(np.diff(x1.reshape(g1.size, g2.size)[:, 0]) > 0)
            and np.all(x1.reshape(g1.size, g2.size) == g1[:, None])
            and np.all(x2.reshape(g1.size, g2.size) == g2[None, :])):
        raise ValueError(f"{path}: coordinates are not sorted in row-major order")
    if g1[0] != 0.0 or g2[0] != 0.0:
        raise ValueError(f"{path}: grid is missing the lower support corner (0, 0)")
    if support is not None and (not math.isclose(g1[-1], support[0])
                                or not math.isclose(g2[-1], support[1])):
        raise ValueError(f"{path}: grid is missing the upper support corner {tuple(support)}")
    grid = F.reshape(g1.size, g2.size)
    return _bilinear_model(g1, g2, grid, f"tabulated({path.name})", validate)


def write_tabulated(path, model: BivariateModel, n1: int = 201, n2: int = 201) -> Path:
    """Sample ``model.cdf`` on a regular grid and write it in the tabulated CSV format."""
    path = Path(path)
    g1 = np.linspace(0.0, model.support.b1, n1)
    g2 = np.linspace(0.0, model.support.b2, n2)
    X1, X2 = np.meshgrid(g1, g2, indexing="ij")
    F = model.cdf(X1, X2)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "F"])
        for a, c, v in zip(X1.ravel(), X2.ravel(), F.ravel()):
            w.writerow([repr(float(a)), repr(float(c)), repr(float(v))])
    return path


def _marginal_from_spec(spec: Mapping) -> Marginal:
    kind = spec.get("kind", "uniform")
    if kind == "uniform":
        return uniform_marginal(float(spec.get("b", 1.0)))
    if kind == "power":
        return power_marginal(float(spec["c"]), float(spec.get("b", 1.0)))
    if kind == "truncated_exponential":
        return truncated_exponential_marginal(float(spec["rate"]), float(spec["b"]))
    raise ValueError(f"unknown marginal kind {kind!r}")


def _family(name: str, params: Mapping) -> BivariateModel:
    p = dict(params)
    if name == "triangle":
        return make_triangle()
    if name == "extreme_value_b":
        return make_extreme_value_b(**p)
    if name == "reciprocal_f":
        return make_reciprocal_f()
    if name == "reciprocal_g":
        return make_reciprocal_g()
    if name == "log_interaction_uniform":
        return make_log_interaction_uniform(**p)
    if name == "power":
        return make_power(**p)
    if name == "linear_density":
        return make_linear_density()
    if name == "independent":
        m1 = _marginal_from_spec(p.get("marginal1", {}))
        m2 = _marginal_from_spec(p.get("marginal2", {}))
        return make_independent(m1, m2)
    if name == "independent_uniform":
        return make_independent_uniform(**p)
    if name == "tabulated":
        support = p.get("support")
        return load_tabulated(p["path"], tuple(support) if support else None)
    raise ValueError(f"unknown model family {name!r}")


def model_from_spec(spec) -> BivariateModel:
    """Build a model from a JSON spec (dict, JSON text, path, or catalogue name).

    ``{"family": <name>, "params": {...}, "transform": {"linear": {c1, c2, d1, d2}}}``
    """
    if isinstance(spec, BivariateModel):
        return spec
    if isinstance(spec, (str, Path)):
        text = str(spec).strip()
        if text.startswith("{"):
            spec = json.loads(text)
        elif Path(text).suffix == ".json" and Path(text).exists():
            spec = json.loads(Path(text).read_text())
        else:
            spec = {"family": text}
    if not isinstance(spec, Mapping) or "family" not in spec:
        raise ValueError(f"model spec must be a mapping with a 'family' key, got {spec!r}")
    model = _family(spec["family"], spec.get("params", {}) or {})
    transform = spec.get("transform")
    if transform:
        if set(transform) != {"linear"}:
            raise ValueError(f"unsupported transform {sorted(transform)}")
        lin = transform["linear"]
        model = make_linear_transform(model, float(lin.get("c1", 1.0)), float(lin.get("c2", 1.0)),
                                      float(lin.get("d1", 0.0)), float(lin.get("d2", 0.0)))
    return model


CATALOGUE_NAMES = (
    "triangle",
    "extreme_value_b",
    "reciprocal_f",
    "reciprocal_g",
    "log_interaction_uniform",
    "power",
    "linear_density",
    "independent_uniform",
)


def catalogue() -> Dict[str, BivariateModel]:
    """Default-parameter instance of every catalogue family, keyed by family name."""
    return {name: _family(name, {}) for name in CATALOGUE_NAMES}

