"""Exact convolution of piecewise log-linear densities.

For one piece of ``f`` and one piece of ``g`` the integrand of
``(f*g)(x) = ∫ f(y) g(x-y) dy`` is ``exp(const + (a1 - a2) y)`` on an
interval, so every piece pair contributes a closed-form term.  The
closure sums those terms over all pairs in a fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from .density import (
    LogConcaveDensity,
    build_density,
    concave_repair,
    log_decay_integral,
    reflect,
)
from .errors import FitBudgetExceeded
from .rearrange import decreasing_rearrangement

_CHUNK = 400_000


class SupNorm(NamedTuple):
    value: float
    argmax: float
    error: float


class ConvolutionClosure:
    """Evaluator for ``f * g`` built from the piece-pair decomposition."""

    def __init__(self, f: LogConcaveDensity, g: LogConcaveDensity):
        self.f = f
        self.g = g
        pf, pg = f.pieces, g.pieces
        nf, ng = len(pf), len(pg)
        rep = lambda arr: np.repeat(arr, ng)  # noqa: E731
        til = lambda arr: np.tile(arr, nf)  # noqa: E731
        self._lo1, self._hi1 = rep(pf.lo), rep(pf.hi)
        self._an1, self._w1, self._a1 = rep(pf.anchor), rep(pf.w), rep(pf.slope)
        self._lo2, self._hi2 = til(pg.lo), til(pg.hi)
        self._an2, self._w2, self._a2 = til(pg.anchor), til(pg.w), til(pg.slope)
        self._c = self._a1 - self._a2
        self._decay = -np.abs(self._c)
        self.n_pairs = nf * ng

    @property
    def support(self) -> tuple[float, float]:
        (a1, b1), (a2, b2) = self.f.support, self.g.support
        return a1 + a2, b1 + b2

    @cached_property
    def breakpoints(self) -> np.ndarray:
        """Sorted pairwise knot sums; the closure is smooth between them."""
        return np.unique(np.add.outer(self.f.knots, self.g.knots).ravel())

    @cached_property
    def right_decay(self) -> Optional[float]:
        """Asymptotic slope of ``log(f*g)`` at ``+inf`` (None if bounded)."""
        s = [d.right_tail_slope for d in (self.f, self.g) if d.right_tail_slope is not None]
        return max(s) if s else None

    @cached_property
    def left_decay(self) -> Optional[float]:
        s = [d.left_tail_slope for d in (self.f, self.g) if d.left_tail_slope is not None]
        return min(s) if s else None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.empty(flat.shape)
        step = max(1, _CHUNK // self.n_pairs)
        for i in range(0, flat.size, step):
            out[i:i + step] = self._eval(flat[i:i + step])
        out = out.reshape(x.shape)
        return out[()] if out.ndim == 0 else out

    def _eval(self, x):
        X = x[:, None]
        with np.errstate(invalid="ignore", over="ignore"):
            lo = np.maximum(self._lo1, X - self._hi2)
            hi = np.minimum(self._hi1, X - self._lo2)
            valid = hi > lo
            start = np.where(self._c <= 0, lo, hi)
            expo = (self._w1 + self._a1 * (start - self._an1)
                    + self._w2 + self._a2 * (X - start - self._an2))
            terms = np.exp(expo + log_decay_integral(self._decay, hi - lo))
        terms = np.where(valid, terms, 0.0)
        return terms.sum(axis=1)

    def log(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self(x))

    @cached_property
    def sup(self) -> SupNorm:
        return _sup_search(self)


def conv_eval(f: LogConcaveDensity, g: LogConcaveDensity, x):
    """``(f*g)(x)`` for scalar or array ``x``."""
    return ConvolutionClosure(f, g)(x)


def conv_sup_norm(f: LogConcaveDensity, g: LogConcaveDensity) -> SupNorm:
    """``‖f*g‖_∞`` with its argmax and a search-error estimate."""
    return ConvolutionClosure(f, g).sup


# ---------------------------------------------------------------------------
# sup-norm search
# ---------------------------------------------------------------------------

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _sup_search(cl: ConvolutionClosure) -> SupNorm:
    bp = cl.breakpoints
    scale = max(1.0, float(bp[-1] - bp[0]))
    # knot sums that agree to rounding would make a degenerate bracket
    keep = np.concatenate([[True], np.diff(bp) > 1e-12 * max(scale, float(np.abs(bp).max()))])
    cand = list(bp[keep])
    lo_s, hi_s = cl.support
    vals = list(cl(np.asarray(cand)))

    # extend the candidate grid into unbounded tails until the value drops
    if math.isinf(hi_s):
        step = 1.0 / abs(cl.right_decay)
        while True:
            cand.append(cand[-1] + step)
            vals.append(float(cl(cand[-1])))
            step *= 2.0
            if vals[-1] < vals[-2]:
                break
    if math.isinf(lo_s):
        step = 1.0 / abs(cl.left_decay)
        while True:
            cand.insert(0, cand[0] - step)
            vals.insert(0, float(cl(cand[0])))
            step *= 2.0
            if vals[0] < vals[1]:
                break

    cand = np.asarray(cand)
    vals = np.asarray(vals)
    i = int(np.argmax(vals))
    a = cand[max(i - 1, 0)]
    b = cand[min(i + 1, len(cand) - 1)]
    if a == b:
        return SupNorm(float(vals[i]), float(cand[i]), 0.0)

    best_x, best_v = float(cand[i]), float(vals[i])
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = float(cl(c)), float(cl(d))
    for _ in range(200):
        if b - a <= 1e-12 * max(1.0, abs(a), abs(b), scale * 1e-3):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = float(cl(c))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = float(cl(d))
    for x, v in ((c, fc), (d, fd)):
        if v > best_v:
            best_x, best_v = float(x), float(v)
    edge = cl(np.array([a, b]))
    err = float(max(abs(best_v - edge[0]), abs(best_v - edge[1]))) + 4e-16 * best_v
    return SupNorm(best_v, _refine_argmax(cl, best_x, bp), err)


def _refine_argmax(cl: ConvolutionClosure, x: float, bp: np.ndarray) -> float:
    """Sharpen a smooth interior maximizer by a root of the central slope.

    Comparing values pins the argmax only to ~sqrt(eps); the slope changes
    sign linearly, so its root is good to ~1e-10.  Kinks (a breakpoint
    nearby) are left alone.
    """
    w = 1e-6 * max(1.0, abs(x))
    h = 0.25 * w
    if np.any(np.abs(bp - x) <= 2.0 * w):
        return x

    def slope(t):
        return float(cl(t + h) - cl(t - h)) / (2.0 * h)

    lo, hi = x - w, x + w
    if not (slope(lo) > 0.0 > slope(hi)):
        return x
    return float(brentq(slope, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))


# ---------------------------------------------------------------------------
# piecewise log-linear fit of a closure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    density: LogConcaveDensity
    max_potential_error: float
    l1_error: float
    n_knots: int


def _level_crossing(cl: ConvolutionClosure, x_in: float, x_out: float, target: float) -> float:
    """Point between ``x_in`` (log h > target) and ``x_out`` (<= target)."""
    for _ in range(200):
        mid = 0.5 * (x_in + x_out)
        if mid in (x_in, x_out):
            break
        if cl.log(mid) > target:
            x_in = mid
        else:
            x_out = mid
    return x_in


def _fit_end(cl, peak_x, target, side):
    lo_s, hi_s = cl.support
    bound = hi_s if side > 0 else lo_s
    if math.isinf(bound):
        decay = cl.right_decay if side > 0 else cl.left_decay
        step = 1.0 / abs(decay)
        x = peak_x + side * step
        while cl.log(x) > target:
            step *= 2.0
            x = peak_x + side * step
        return _level_crossing(cl, peak_x, x, target)
    return _level_crossing(cl, peak_x, bound, target)


def fit_density(cl: ConvolutionClosure, rel_tol: float = 1e-6, *, mass_tol: float = 1e-13,
                drop: float = 60.0, max_knots: int = 100_000) -> FitResult:
    """Piecewise log-linear approximant of a convolution closure.

    Knots start at the pairwise knot sums and the argmax; an interval is
    bisected while its midpoint potential error exceeds ``rel_tol`` and
    the error weighted by the interval's mass exceeds ``mass_tol``.  The
    fit covers the region where ``log h`` is within ``drop`` of its
    maximum; unbounded sides get a tail with the closure's asymptotic
    slope.  ``l1_error`` bounds ``∫|fit - h|`` including the truncated
    mass and renormalization.
    """
    peak = cl.sup
    log_peak = math.log(peak.value)
    target = log_peak - drop
    left = _fit_end(cl, peak.argmax, target, -1)
    right = _fit_end(cl, peak.argmax, target, +1)
    bp = cl.breakpoints
    xs = np.unique(np.concatenate([[left, right, peak.argmax], bp[(bp > left) & (bp < right)]]))
    ys = cl.log(xs)

    while True:
        mids = 0.5 * (xs[:-1] + xs[1:])
        ym = cl.log(mids)
        dev = np.abs(ym - 0.5 * (ys[:-1] + ys[1:]))
        width = np.diff(xs)
        mass = width * np.exp(np.maximum(np.maximum(ys[:-1], ys[1:]), ym))
        refine = (dev > rel_tol) & (dev * mass > mass_tol) & (
            width > 1e-13 * np.maximum(1.0, np.abs(mids)))
        if not refine.any():
            break
        if xs.size + int(refine.sum()) > max_knots:
            raise FitBudgetExceeded(f"fit needs more than {max_knots} knots")
        xs = np.concatenate([xs, mids[refine]])
        ys = np.concatenate([ys, ym[refine]])
        order = np.argsort(xs)
        xs, ys = xs[order], ys[order]

    secants = np.diff(ys) / np.diff(xs)
    s_right = s_left = None
    tail_mass = 0.0
    lo_s, hi_s = cl.support
    h_left, h_right = math.exp(ys[0]), math.exp(ys[-1])
    if math.isinf(hi_s):
        s_right = min(cl.right_decay, float(secants[-1]))
        tail_mass += 2.0 * h_right / abs(s_right)
    else:
        tail_mass += h_right * (hi_s - right)
    if math.isinf(lo_s):
        s_left = max(cl.left_decay, float(secants[0]))
        tail_mass += 2.0 * h_left / abs(s_left)
    else:
        tail_mass += h_left * (left - lo_s)

    ys = concave_repair(xs, ys, s_left, s_right)
    dens = build_density(xs, ys, s_left, s_right, concavity_tol=1e-9)
    matters = mass > mass_tol / max(rel_tol, 1e-300)
    max_dev = float(dev[matters].max()) if matters.any() else 0.0
    l1 = 2.0 * float(np.sum(dev * mass)) + tail_mass + abs(math.expm1(dens.normalization))
    return FitResult(dens, max_dev, l1, int(xs.size))


# ---------------------------------------------------------------------------
# theorem-facing comparisons
# ---------------------------------------------------------------------------

def rearranged_sup_bound(f: LogConcaveDensity, g: LogConcaveDensity) -> tuple[float, float]:
    """``(‖f*g‖_∞, ‖f↓*g↓‖_∞)``; the first dominates the second."""
    lhs = conv_sup_norm(f, g).value
    rhs = conv_sup_norm(decreasing_rearrangement(f), decreasing_rearrangement(g)).value
    return lhs, rhs


def symmetrization_identity_check(d: LogConcaveDensity) -> tuple[float, float]:
    """``(h_2(d), h_∞(d * reflect(d)))``; the two agree."""
    from .entropy import renyi

    h2 = renyi(d, 2)
    hinf = -math.log(conv_sup_norm(d, reflect(d)).value)
    return h2, hinf
