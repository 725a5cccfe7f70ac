"""Exponentialization of monotone log-concave variables.

For ``Y`` non-increasing on ``[0, ∞)`` with peak ``f_Y(0)``, the monotone
map ``φ = F_W^{-1} ∘ F_Y`` pushes ``Y`` onto ``W ~ Exp(f_Y(0))``:

    φ(y) = -log(1 - F_Y(y)) / f_Y(0),   φ'(y) = f_Y(y) / (f_Y(0) (1 - F_Y(y))) >= 1.

At the right end of a bounded support ``φ`` is ``+inf``; on an exponential
right tail it is affine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .convolve import ConvolutionClosure, fit_density
from .density import (
    LogConcaveDensity,
    cdf,
    evaluate,
    exponential,
    exponential_match,
    integrate,
    is_nonincreasing,
    quantile,
    reflect,
    sup_norm,
)
from .entropy import RenyiOrder, renyi
from .errors import NotMonotone
from .majorize import MajorizationVerdict, majorizes


def require_monotone(d: LogConcaveDensity, name: str = "density") -> None:
    if not is_nonincreasing(d) or abs(float(d.knots[0])) > 1e-12:
        raise NotMonotone(f"{name} must be non-increasing on [0, inf) with its peak at 0")


@dataclass(frozen=True)
class TransportMap:
    """``φ`` on ``[0, ∞)`` with ``φ(y) = 0`` for ``y <= 0``."""

    source: LogConcaveDensity
    peak: float

    @cached_property
    def _mirror(self) -> LogConcaveDensity:
        return reflect(self.source)

    def survival(self, y):
        """``1 - F_Y(y)`` computed on the mirrored density (no cancellation)."""
        return cdf(self._mirror, -np.asarray(y, dtype=float))

    @cached_property
    def _tail(self) -> tuple[float, float, float] | None:
        """``(start, φ(start), slope)`` of the affine piece of ``φ`` on an
        exponential right tail, where ``1 - F_Y = f_Y / |rate|`` exactly."""
        rate = self.source.right_tail_slope
        if rate is None:
            return None
        start = float(self.source.knots[-1])
        return start, float(-np.log(self.survival(start)) / self.peak), -rate / self.peak

    def __call__(self, y):
        """``φ(y)``; ``+inf`` where the survival function vanishes."""
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        with np.errstate(divide="ignore"):
            out = -np.log(self.survival(y)) / self.peak
        if self._tail is not None:
            start, base, slope = self._tail
            out = np.where(y > start, base + slope * (y - start), out)
        out = np.maximum(out, 0.0)
        return out[()] if out.ndim == 0 else out

    def inverse(self, u):
        """``φ^{-1}(u) = F_Y^{-1}(1 - e^{-peak u})`` via the inverse survival."""
        u = np.asarray(u, dtype=float)
        tail = self._tail
        flat = []
        for v in u.ravel().tolist():
            if v <= 0:
                flat.append(0.0)
            elif tail is not None and v > tail[1]:
                flat.append(tail[0] + (v - tail[1]) / tail[2])
            else:
                flat.append(-quantile(self._mirror, math.exp(-self.peak * v)))
        out = np.asarray(flat).reshape(u.shape)
        return out[()] if out.ndim == 0 else out

    def derivative(self, y):
        """``φ'(y) = f_Y(y) / (peak (1 - F_Y(y)))``."""
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = evaluate(self.source, y) / (self.peak * self.survival(y))
        if self._tail is not None:
            out = np.where(y > self._tail[0], self._tail[2], out)
        return out[()] if np.ndim(out) == 0 else out

    @property
    def target(self) -> LogConcaveDensity:
        return exponential(self.peak)


def transport_map(d_y: LogConcaveDensity) -> TransportMap:
    """Map sending ``d_y`` onto its ``h_∞``-matched exponential."""
    require_monotone(d_y, "d_Y")
    return TransportMap(d_y, sup_norm(d_y))


def expansion_check(m: TransportMap, y_grid) -> float:
    """Smallest ``φ'`` over ``y_grid`` (at least 1 for log-concave sources)."""
    lo, hi = m.source.support
    y = np.asarray(y_grid, dtype=float)
    y = y[(y >= lo) & (y < hi)]
    return float(np.min(m.derivative(y)))


def pushforward_cdf(m: TransportMap, t) -> np.ndarray:
    """``P(φ(Y) <= t) = F_Y(φ^{-1}(t))``."""
    return cdf(m.source, np.atleast_1d(m.inverse(np.atleast_1d(t))))


def interval_mass_comparison(d_x: LogConcaveDensity, m: TransportMap, a: float,
                             delta: float, y: float) -> tuple[float, float]:
    """Both sides of ``P(X ∈ [a, a+δ] - φ(y)) <= P(X ∈ [b, b+δ] - y)``, ``b = φ^{-1}(a)``."""
    phi_y = float(m(y))
    b = float(m.inverse(a))
    lhs = 0.0 if math.isinf(phi_y) else integrate(d_x, a - phi_y, a + delta - phi_y)
    rhs = integrate(d_x, b - y, b + delta - y)
    return lhs, rhs


def pointwise_domination(d_x: LogConcaveDensity, d_y: LogConcaveDensity, y_grid) -> float:
    """Worst ``(f_X*f_Y)(φ^{-1}(y)) - (f_X*f_W)(y)`` over ``y_grid``."""
    require_monotone(d_x, "d_X")
    m = transport_map(d_y)
    y = np.asarray(y_grid, dtype=float)
    lhs = ConvolutionClosure(d_x, m.target)(y)
    rhs = ConvolutionClosure(d_x, d_y)(m.inverse(y))
    return float(np.min(rhs - lhs))


@dataclass
class ChainReport:
    """Entropies of ``X+Y``, ``X+W``, ``Z+W`` and the two majorization steps."""

    orders: list[str]
    h_xy: list[float]
    h_xw: list[float]
    h_zw: list[float]
    budget: list[float]
    ordered: list[bool]
    step1: MajorizationVerdict
    step2: MajorizationVerdict
    fit_l1: list[float] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return all(self.ordered) and self.step1.holds and self.step2.holds

    def margins(self) -> list[float]:
        """Worst of the two entropy gaps per order (positive = ordered)."""
        return [min(b - a, c - b) for a, b, c in zip(self.h_xy, self.h_xw, self.h_zw)]


def exponentialization_chain(d_x: LogConcaveDensity, d_y: LogConcaveDensity, p_grid,
                             t_count: int = 400, fit_tol: float = 1e-6) -> ChainReport:
    """``h_p(X+Y) <= h_p(X+W) <= h_p(Z+W)`` with ``Z, W`` the matched exponentials."""
    require_monotone(d_x, "d_X")
    require_monotone(d_y, "d_Y")
    z, w = exponential_match(d_x), exponential_match(d_y)
    closures = [ConvolutionClosure(d_x, d_y), ConvolutionClosure(d_x, w),
                ConvolutionClosure(z, w)]
    orders = [RenyiOrder.of(p) for p in p_grid]
    rows = [[renyi(cl, o, return_error=True) for o in orders] for cl in closures]
    fits = [fit_density(cl, fit_tol) for cl in closures]
    l1 = [f.l1_error for f in fits]
    step1 = majorizes(fits[0].density, fits[1].density, t_count, tol=1e-10 + l1[0] + l1[1])
    step2 = majorizes(fits[1].density, fits[2].density, t_count, tol=1e-10 + l1[1] + l1[2])
    h = [[v for v, _ in row] for row in rows]
    budget = [1e-10 + sum(row[i][1] for row in rows) for i in range(len(orders))]
    ordered = [h[0][i] <= h[1][i] + budget[i] and h[1][i] <= h[2][i] + budget[i]
               for i in range(len(orders))]
    return ChainReport([str(o) for o in orders], h[0], h[1], h[2], budget, ordered,
                       step1, step2, l1)
