"""Level-set measures and the decreasing rearrangement.

For a log-concave ``f`` every super-level set ``{f > t}`` is an interval
``(L(t), R(t))``.  On the piecewise log-linear class both endpoints are
affine in ``log t`` between consecutive knot levels, so ``m_f`` and the
rearrangement ``f↓`` (its generalized inverse) are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import LogConcaveDensity, build_density, cdf, concave_repair, integrate
from .errors import SupportExceedsInterval
from .quadrature import adaptive_quad

_PLATEAU_TOL = 1e-13


@dataclass(frozen=True)
class _Sides:
    """Increasing branch (left) and decreasing branch (right) of the potential."""

    max_log: float
    left_x: np.ndarray      # knots up to the first maximizer, log-values increasing
    left_v: np.ndarray
    right_x: np.ndarray     # knots from the last maximizer on, log-values decreasing
    right_v: np.ndarray
    left_tail: float | None
    right_tail: float | None

    def left_end(self, ell):
        ell = np.asarray(ell, dtype=float)
        x0, v0 = self.left_x[0], self.left_v[0]
        inner = np.interp(ell, self.left_v, self.left_x)
        if self.left_tail is None:
            below = np.full_like(ell, x0)
        else:
            below = x0 + (ell - v0) / self.left_tail
        return np.where(ell < v0, below, inner)

    def right_end(self, ell):
        ell = np.asarray(ell, dtype=float)
        xn, vn = self.right_x[-1], self.right_v[-1]
        inner = np.interp(ell, self.right_v[::-1], self.right_x[::-1])
        if self.right_tail is None:
            below = np.full_like(ell, xn)
        else:
            below = xn + (ell - vn) / self.right_tail
        return np.where(ell < vn, below, inner)


def _sides(d: LogConcaveDensity) -> _Sides:
    x, v = d.knots, d.potential
    m = float(v.max())
    top = np.flatnonzero(v >= m - _PLATEAU_TOL * max(1.0, abs(m)))
    i_l, i_r = int(top[0]), int(top[-1])
    lv = np.minimum(np.maximum.accumulate(v[: i_l + 1]), m)
    lv[-1] = m
    rv = np.minimum(np.minimum.accumulate(v[i_r:]), m)
    rv[0] = m
    return _Sides(m, x[: i_l + 1], lv, x[i_r:], rv, d.left_tail_slope, d.right_tail_slope)


def level_measure(d: LogConcaveDensity, t):
    """Lebesgue measure of ``{f > t}`` for ``t > 0`` (vectorized)."""
    t = np.asarray(t, dtype=float)
    s = _sides(d)
    with np.errstate(divide="ignore"):
        ell = np.log(t)
    out = np.where(ell < s.max_log, s.right_end(ell) - s.left_end(ell), 0.0)
    out = np.maximum(out, 0.0)
    return out[()] if out.ndim == 0 else out


def excess_mass(d: LogConcaveDensity, t: float) -> float:
    """``∫ (f - t)_+``: mass of ``{f > t}`` minus ``t`` times its measure."""
    if t <= 0:
        return 1.0 if t == 0 else 1.0 - t * math.inf
    s = _sides(d)
    ell = math.log(t)
    if ell >= s.max_log:
        return 0.0
    lo = float(s.left_end(ell))
    hi = float(s.right_end(ell))
    return max(integrate(d, lo, hi) - t * (hi - lo), 0.0)


def excess_mass_curve(d: LogConcaveDensity, ts) -> np.ndarray:
    """Vectorized :func:`excess_mass` for positive levels."""
    ts = np.asarray(ts, dtype=float)
    s = _sides(d)
    ell = np.log(ts)
    lo, hi = s.left_end(ell), s.right_end(ell)
    out = cdf(d, hi) - cdf(d, lo) - ts * (hi - lo)
    return np.where(ell >= s.max_log, 0.0, np.maximum(out, 0.0))


@dataclass(frozen=True)
class LevelProfile:
    """``m_f(t) = alpha_k - beta_k log t`` on ``levels[k+1] <= t < levels[k]``.

    ``levels`` descend from ``max_value``; the final band extends to 0 when
    the support is unbounded and ends at a jump otherwise.
    """

    levels: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    max_value: float
    support_length: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            ell = np.log(t)
        k = np.searchsorted(-self.levels, -t, side="right") - 1
        k = np.clip(k, 0, len(self.alpha) - 1)
        out = self.alpha[k] - self.beta[k] * ell
        out = np.where(t < self.levels[-1], self.support_length, out)
        out = np.where(t >= self.max_value, 0.0, np.minimum(out, self.support_length))
        return out[()] if out.ndim == 0 else out


def decreasing_rearrangement(d: LogConcaveDensity) -> LogConcaveDensity:
    """Exact ``f↓`` on ``[0, |supp f|)`` with the same level-set measures.

    Its knots sit at ``m_f`` of the original knot levels; between them the
    log-density is linear in ``x`` because ``m_f`` is affine in ``log t``.
    """
    s = _sides(d)
    levels = np.concatenate([s.left_v, s.right_v])
    bounded = s.left_tail is None and s.right_tail is None
    floor = min(s.left_v[0], s.right_v[-1]) if bounded else -math.inf
    levels = np.unique(levels[levels >= floor])[::-1]
    xs = s.right_end(levels) - s.left_end(levels)
    xs[0] = max(xs[0], 0.0)
    if xs[0] > 0:
        xs = np.concatenate([[0.0], xs])
        levels = np.concatenate([[s.max_log], levels])
    keep = np.concatenate([[True], np.diff(xs) > 1e-14 * max(1.0, float(xs[-1]))])
    xs, levels = xs[keep], levels[keep]

    if s.left_tail is not None and s.right_tail is not None:
        tail = 1.0 / (1.0 / s.right_tail - 1.0 / s.left_tail)
    elif s.right_tail is not None:
        tail = s.right_tail
    elif s.left_tail is not None:
        tail = -s.left_tail
    else:
        tail = None
    if xs.size == 1 and tail is None:
        xs = np.array([0.0, float(s.right_end(floor) - s.left_end(floor))])
        levels = np.array([s.max_log, s.max_log])
    levels = concave_repair(xs, levels, None, tail)
    return build_density(xs, levels, None, tail, concavity_tol=1e-9)


def level_profile(d: LogConcaveDensity) -> LevelProfile:
    """Closed-form ``m_f`` read off the rearranged knots."""
    r = decreasing_rearrangement(d)
    x, v = r.knots, r.potential
    uppers, alpha, beta = [], [], []
    for k in range(len(x) - 1):
        sl = (v[k + 1] - v[k]) / (x[k + 1] - x[k])
        if sl == 0.0:
            continue
        uppers.append(math.exp(v[k]))
        alpha.append(x[k] - v[k] / sl)
        beta.append(-1.0 / sl)
    if r.right_tail_slope is not None:
        sl = r.right_tail_slope
        uppers.append(math.exp(v[-1]))
        alpha.append(x[-1] - v[-1] / sl)
        beta.append(-1.0 / sl)
        floor = 0.0
    else:
        floor = math.exp(v[-1])
    if not alpha:
        uppers, alpha, beta = [math.exp(v[0])], [float(x[-1])], [0.0]
    lo, hi = r.support
    return LevelProfile(np.asarray(uppers + [floor]), np.asarray(alpha), np.asarray(beta),
                        math.exp(float(v.max())), hi - lo)


def hardy_littlewood(f: LogConcaveDensity, g: LogConcaveDensity, a: float, b: float,
                     tol: float = 1e-12) -> tuple[float, float]:
    """Both sides of ``∫_a^b f g >= ∫_0^{b-a} f↓(x) g↓(b-a-x) dx``."""
    for d in (f, g):
        outside = 1.0 - integrate(d, a, b)
        if outside > tol:
            raise SupportExceedsInterval(f"mass {outside:.3g} lies outside [{a}, {b}]")
    fr, gr = decreasing_rearrangement(f), decreasing_rearrangement(g)
    width = b - a
    edges = np.concatenate([[a, b], f.knots, g.knots])
    edges = edges[(edges >= a) & (edges <= b)]
    lhs = adaptive_quad(lambda x: f(x) * g(x), edges).value
    edges_r = np.concatenate([[0.0, width], fr.knots, width - gr.knots])
    edges_r = edges_r[(edges_r >= 0) & (edges_r <= width)]
    rhs = adaptive_quad(lambda x: fr(x) * gr(width - x), edges_r).value
    return lhs, rhs
