"""Adaptive quadrature and finite differences.

Every integral and derivative in the package goes through this module. The
integrator is a globally adaptive Gauss-Kronrod (10/21) bisection scheme that
is vectorized over *batches* of independent integrals: nested integrals (the
inner axis of an iterated 2-D integral, slice CDFs, EIT numerators, ...) are
evaluated for all outer nodes at once instead of one Python call per node.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "Tolerances",
    "Interval",
    "QuadResult",
    "FiniteDifference",
    "QuadratureError",
    "DepthExhaustedError",
    "NonFiniteIntegrandError",
    "DEFAULT_TOL",
    "neg_xlogx",
    "integrate_batch",
    "integrate_1d",
    "integrate_2d",
    "CumulativeIntegral",
    "partial_derivative",
]

# u*log(u) is treated as 0 below this value
XLOGX_FLOOR = 1e-300

# Kronrod abscissae on [0, 1) (symmetric rule); Gauss nodes are the odd entries.
_XK_POS = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
])
_WK_POS = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
])
_WK_MID = 0.149445554002916905664936468389821
_WG_POS = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

_XK = np.concatenate([-_XK_POS, [0.0], _XK_POS[::-1]])
_WK = np.concatenate([_WK_POS, [_WK_MID], _WK_POS[::-1]])
_GAUSS_IDX = np.array([1, 3, 5, 7, 9, 11, 13, 15, 17, 19])
_WG = np.concatenate([_WG_POS, _WG_POS[::-1]])


class QuadratureError(ArithmeticError):
    """Base class for quadrature failures."""


class DepthExhaustedError(QuadratureError):
    """Adaptive bisection reached ``max_depth`` without meeting the tolerance."""


class NonFiniteIntegrandError(QuadratureError):
    """The integrand returned NaN or inf at a sample point."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical targets shared by quadrature and differentiation."""

    abs_tol: float = 1e-9
    rel_tol: float = 1e-8
    max_depth: int = 50
    fd_step_scale: float = 1e-5

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be > 0, got {self.abs_tol}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol}")
        if int(self.max_depth) < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if not self.fd_step_scale > 0:
            raise ValueError(f"fd_step_scale must be > 0, got {self.fd_step_scale}")

    def scaled(self, factor: float) -> "Tolerances":
        return Tolerances(self.abs_tol * factor, self.rel_tol * factor,
                          self.max_depth, self.fd_step_scale)


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValueError(f"interval limits must be finite: ({self.lo}, {self.hi})")
        if self.lo > self.hi:
            raise ValueError(f"interval requires lo <= hi, got ({self.lo}, {self.hi})")

    @property
    def width(self) -> float:
        return self.hi - self.lo


IntervalLike = Union[Interval, Tuple[float, float], Sequence[float]]


def _as_interval(iv: IntervalLike) -> Interval:
    if isinstance(iv, Interval):
        return iv
    lo, hi = iv
    return Interval(float(lo), float(hi))


class QuadResult(NamedTuple):
    value: float
    error: float


class FiniteDifference(NamedTuple):
    value: float
    step: float
    one_sided: bool

    def __float__(self):
        return float(self.value)


def neg_xlogx(u):
    """Return ``-u*log(u)`` elementwise, with the limit 0 for ``u -> 0``."""
    u = np.asarray(u, dtype=float)
    small = u < XLOGX_FLOOR
    safe = np.where(small, 1.0, u)
    return np.where(small, 0.0, -safe * np.log(safe))


def _gk21(f, a, b, owner):
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = center[:, None] + half[:, None] * _XK[None, :]
    k = np.broadcast_to(owner[:, None], x.shape)
    fx = np.asarray(f(x.ravel(), k.ravel()), dtype=float)
    if fx.shape != (x.size,):
        fx = np.broadcast_to(fx, (x.size,))
    fx = fx.reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        bad = np.argwhere(~np.isfinite(fx))[0]
        raise NonFiniteIntegrandError(
            f"non-finite integrand value {fx[tuple(bad)]!r} at x={x[tuple(bad)]!r}")
    kron = half * (fx @ _WK)
    gauss = half * (fx[:, _GAUSS_IDX] @ _WG)
    return kron, np.abs(kron - gauss)


def _seed_partition(a, b, owners, points, n):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = np.broadcast_to(pts[None, :], (owners.size, pts.size))
    elif pts.shape[0] == n:
        pts = pts[owners]
    elif pts.shape[0] != owners.size:
        raise ValueError(f"points has {pts.shape[0]} rows for {n} integrals")
    if pts.shape[1] == 0:
        return a, b, owners
    inside = (pts > a[:, None]) & (pts < b[:, None])
    cuts = np.where(inside, pts, np.nan)
    cuts = np.sort(np.concatenate([a[:, None], cuts, b[:, None]], axis=1), axis=1)
    left = cuts[:, :-1]
    right = cuts[:, 1:]
    ok = np.isfinite(right) & (right > left)
    rows = np.broadcast_to(owners[:, None], left.shape)
    return left[ok], right[ok], rows[ok]


def _refine(f, a, b, owners, n, lo, hi, tol):
    """Bisect panels until every owner meets its target; return the final panels."""
    depth = np.zeros(owners.size, dtype=int)
    val, err = _gk21(f, a, b, owners)
    while True:
        tot_val = np.bincount(owners, weights=val, minlength=n)
        tot_err = np.bincount(owners, weights=err, minlength=n)
        target = np.maximum(tol.abs_tol, tol.rel_tol * np.abs(tot_val))
        unconverged = tot_err > target
        if not unconverged.any():
            return a, b, owners, val, err
        npan = np.bincount(owners, minlength=n)
        share = target / np.maximum(npan, 1)
        split = unconverged[owners] & (err > share[owners])
        if np.any(depth[split] >= tol.max_depth):
            k = owners[split & (depth >= tol.max_depth)][0]
            raise DepthExhaustedError(
                f"max_depth={tol.max_depth} reached on [{lo[k]}, {hi[k]}]: "
                f"error estimate {tot_err[k]:.3g} > target {target[k]:.3g}")
        mid = 0.5 * (a[split] + b[split])
        ca = np.concatenate([a[split], mid])
        cb = np.concatenate([mid, b[split]])
        co = np.concatenate([owners[split], owners[split]])
        cd = np.concatenate([depth[split], depth[split]]) + 1
        cv, ce = _gk21(f, ca, cb, co)
        keep = ~split
        a = np.concatenate([a[keep], ca])
        b = np.concatenate([b[keep], cb])
        owners = np.concatenate([owners[keep], co])
        depth = np.concatenate([depth[keep], cd])
        val = np.concatenate([val[keep], cv])
        err = np.concatenate([err[keep], ce])


def integrate_batch(f: Callable, lo, hi, tol: Tolerances = DEFAULT_TOL,
                    points=None) -> Tuple[np.ndarray, np.ndarray]:
    """Integrate a family of 1-D integrands over per-member intervals.

    Parameters
    ----------
    f : callable
        ``f(x, k)`` with ``x`` a float array of abscissae and ``k`` the int
        array (same shape) of batch indices each abscissa belongs to. Must be
        vectorized.
    lo, hi : array_like
        Integration limits, one pair per batch member. ``lo == hi`` gives 0.
    tol : Tolerances
        Each member is refined until its summed error estimate is at most
        ``max(abs_tol, rel_tol * |value|)``.
    points : array_like, optional
        Break points (jumps, kinks) seeding the initial partition. A 1-D
        array is shared by all members; a 2-D ``(n, p)`` array gives one row
        per member (NaN entries are ignored). Only points strictly inside a
        member's interval are used. Jumps should always be declared: a jump
        between the outermost Kronrod node and a panel edge is invisible to
        the error estimate.

    Returns
    -------
    values, errors : ndarray
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    lo, hi = np.broadcast_arrays(lo, hi)
    lo = lo.ravel()
    hi = hi.ravel()
    n = lo.size
    if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)):
        raise ValueError("integration limits must be finite")
    if np.any(lo > hi):
        raise ValueError("integration limits require lo <= hi")

    active = hi > lo
    owners = np.flatnonzero(active)
    a = lo[owners]
    b = hi[owners]
    if points is not None and owners.size:
        a, b, owners = _seed_partition(a, b, owners, points, n)

    values = np.zeros(n)
    errors = np.zeros(n)
    if owners.size == 0:
        return values, errors

    a, b, owners, val, err = _refine(f, a, b, owners, n, lo, hi, tol)
    return (np.bincount(owners, weights=val, minlength=n),
            np.bincount(owners, weights=err, minlength=n))


class CumulativeIntegral:
    """``s -> integral of f over [lo, s]`` for any ``s`` in ``[lo, hi]``.

    The adaptive partition of ``[lo, hi]`` is built once; an evaluation adds
    the cached panel prefix sum to one Kronrod rule on the partial panel, so
    repeated calls never re-integrate from ``lo``.
    """

    def __init__(self, f: Callable, lo: float, hi: float, tol: Tolerances = DEFAULT_TOL,
                 points=None):
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise ValueError(f"invalid cumulative range [{lo}, {hi}]")
        self.f = f
        self.lo = float(lo)
        self.hi = float(hi)
        g = lambda x, k: f(x)  # noqa: E731
        self._g = g
        if hi == lo:
            self.left = np.array([self.lo])
            self.right = np.array([self.hi])
            self.prefix = np.zeros(2)
            self.total = QuadResult(0.0, 0.0)
            return
        a = np.array([self.lo])
        b = np.array([self.hi])
        owners = np.zeros(1, dtype=int)
        if points is not None:
            a, b, owners = _seed_partition(a, b, owners, np.atleast_1d(points), 1)
        a, b, _, val, err = _refine(g, a, b, owners, 1, np.array([self.lo]),
                                    np.array([self.hi]), tol)
        order = np.argsort(a)
        self.left = a[order]
        self.right = b[order]
        self.prefix = np.concatenate([[0.0], np.cumsum(val[order])])
        self.total = QuadResult(float(self.prefix[-1]), float(err.sum()))

    @property
    def n_panels(self) -> int:
        return self.left.size

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.clip(np.atleast_1d(s), self.lo, self.hi)
        idx = np.clip(np.searchsorted(self.left, s, side="right") - 1, 0, self.left.size - 1)
        out = self.prefix[idx].copy()
        part = s > self.left[idx]
        if part.any():
            pv, _ = _gk21(self._g, self.left[idx][part], s[part],
                          np.zeros(int(part.sum()), dtype=int))
            out[part] += pv
        return float(out[0]) if scalar else out


def integrate_1d(f: Callable, iv: IntervalLike, tol: Tolerances = DEFAULT_TOL,
                 points=None) -> QuadResult:
    """Adaptive integral of a vectorized ``f(x)`` over ``iv``.

    >>> integrate_1d(lambda x: x**2, (0.0, 1.0)).value  # doctest: +ELLIPSIS
    0.33333333333333...
    """
    iv = _as_interval(iv)
    v, e = integrate_batch(lambda x, k: f(x), [iv.lo], [iv.hi], tol, points)
    return QuadResult(float(v[0]), float(e[0]))


def integrate_2d(f: Callable, box: Tuple[IntervalLike, IntervalLike],
                 tol: Tolerances = DEFAULT_TOL, points=(None, None)) -> QuadResult:
    """Iterated adaptive integral of ``f(x1, x2)`` over a rectangle.

    The inner integral runs over ``x2`` and is batched across all outer
    abscissae of a refinement round. The inner tolerance is a tenth of the
    outer one, scaled by the outer width, so inner errors cannot dominate.
    ``points[1]`` may be a callable mapping an array of ``x1`` values to a
    ``(len(x1), p)`` array of inner break points.
    """
    iv1 = _as_interval(box[0])
    iv2 = _as_interval(box[1])
    if iv1.width == 0 or iv2.width == 0:
        return QuadResult(0.0, 0.0)
    inner_tol = Tolerances(0.1 * tol.abs_tol / max(iv1.width, 1.0), 0.1 * tol.rel_tol,
                           tol.max_depth, tol.fd_step_scale)
    inner_err = [0.0]

    def outer(x1):
        x1 = np.asarray(x1, dtype=float)
        m = x1.size
        inner_points = points[1](x1) if callable(points[1]) else points[1]
        v, e = integrate_batch(lambda x2, k: f(x1[k], x2),
                               np.full(m, iv2.lo), np.full(m, iv2.hi),
                               inner_tol, inner_points)
        inner_err[0] = max(inner_err[0], float(e.max(initial=0.0)))
        return v

    res = integrate_1d(outer, iv1, tol, points[0])
    return QuadResult(res.value, res.error + iv1.width * inner_err[0])


def partial_derivative(g: Callable, at: Sequence[float], axis: int,
                       tol: Tolerances = DEFAULT_TOL,
                       bounds: Optional[Tuple[float, float]] = None,
                       side: str = "central") -> FiniteDifference:
    """Finite-difference partial derivative of ``g(t1, t2)`` along ``axis``.

    Central differences with step ``h = fd_step_scale * max(1, |t|)``,
    Richardson-extrapolated once. When ``t -/+ h`` would leave ``bounds``
    along the axis, a second-order one-sided difference is used instead and
    ``one_sided`` is set on the result. ``side="forward"`` or ``"backward"``
    forces the one-sided form, which is how kinks are probed.
    """
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis}")
    if side not in ("central", "forward", "backward"):
        raise ValueError(f"side must be central, forward or backward, got {side!r}")
    t = [float(at[0]), float(at[1])]
    ti = t[axis - 1]
    h = tol.fd_step_scale * max(1.0, abs(ti))

    def g_at(s):
        p = list(t)
        p[axis - 1] = s
        return float(g(p[0], p[1]))

    lo, hi = bounds if bounds is not None else (-np.inf, np.inf)
    if side == "central" and ti - h >= lo and ti + h <= hi:
        def d(step):
            return (g_at(ti + step) - g_at(ti - step)) / (2.0 * step)
        one_sided = False
    else:
        if side == "central":
            sign = 1.0 if ti - h < lo else -1.0
        else:
            sign = 1.0 if side == "forward" else -1.0
        if sign > 0 and ti + 2 * h > hi or sign < 0 and ti - 2 * h < lo:
            raise ValueError(f"interval around t={ti} too narrow for step {h}")
        g0 = g_at(ti)

        def d(step):
            s = sign * step
            return (-3.0 * g0 + 4.0 * g_at(ti + s) - g_at(ti + 2 * s)) / (2.0 * s)
        one_sided = True
    d_h = d(h)
    d_h2 = d(0.5 * h)
    return FiniteDifference((4.0 * d_h2 - d_h) / 3.0, h, one_sided)
