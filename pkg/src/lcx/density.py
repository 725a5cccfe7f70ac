"""Piecewise log-linear log-concave densities on the real line.

A density is stored through its log-values at strictly increasing knots,
linearly interpolated between knots, with optional linear tails outside
the knot range.  Every integral of ``f``, ``f**p`` and ``f log f`` over a
piece has a closed form, so mass, CDF, quantiles and entropies are exact
up to floating point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.optimize import isotonic_regression
from scipy.special import logsumexp

from .errors import (
    EmptySupport,
    InvalidDensity,
    NonConcavePotential,
    NonIntegrable,
)

FLAT_SLOPE = 1e-12
CONCAVITY_TOL = 1e-12
MASS_TOL = 1e-9


# ---------------------------------------------------------------------------
# closed-form segment kernels (vectorized)
# ---------------------------------------------------------------------------

def log_decay_integral(s, length):
    """``log ∫_0^length exp(s t) dt`` for ``s <= 0``; ``length`` may be inf."""
    s = np.asarray(s, dtype=float)
    length = np.asarray(length, dtype=float)
    s, length = np.broadcast_arrays(s, length)
    out = np.empty(s.shape)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inf_len = np.isinf(length)
        flat = np.abs(s) < FLAT_SLOPE
        gen = ~inf_len & ~flat
        out[inf_len] = -np.log(-s[inf_len])
        fl = ~inf_len & flat
        out[fl] = np.log(length[fl]) + np.log1p(0.5 * s[fl] * length[fl])
        out[gen] = np.log(-np.expm1(s[gen] * length[gen])) - np.log(-s[gen])
    return out


def decay_moment(s, length):
    """``∫_0^length t exp(s t) dt`` for ``s <= 0``; ``length`` may be inf."""
    s = np.asarray(s, dtype=float)
    length = np.asarray(length, dtype=float)
    s, length = np.broadcast_arrays(s, length)
    out = np.empty(s.shape)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inf_len = np.isinf(length)
        z = s * length
        small = ~inf_len & (np.abs(z) < 1e-2)
        gen = ~inf_len & ~small
        out[inf_len] = 1.0 / s[inf_len] ** 2
        zs = z[small]
        series = np.zeros_like(zs)
        term = np.ones_like(zs)
        for k in range(12):
            series += term / (k + 2)
            term = term * zs / (k + 1)
        out[small] = length[small] ** 2 * series
        zg = z[gen]
        out[gen] = (-np.expm1(zg) + zg * np.exp(zg)) / s[gen] ** 2
    return out


# ---------------------------------------------------------------------------
# the density type
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LogConcaveDensity:
    """Validated, normalized log-concave density.

    ``log_values`` are the values as supplied; the log-density at the knots
    is ``log_values - normalization`` (see :attr:`potential`).
    """

    knots: np.ndarray
    log_values: np.ndarray
    left_tail_slope: Optional[float]
    right_tail_slope: Optional[float]
    normalization: float

    @cached_property
    def potential(self) -> np.ndarray:
        p = self.log_values - self.normalization
        p.flags.writeable = False
        return p

    @property
    def support(self) -> tuple[float, float]:
        lo = -math.inf if self.left_tail_slope is not None else float(self.knots[0])
        hi = math.inf if self.right_tail_slope is not None else float(self.knots[-1])
        return lo, hi

    @property
    def n_knots(self) -> int:
        return len(self.knots)

    @cached_property
    def pieces(self) -> "Pieces":
        return _make_pieces(self.knots, self.potential,
                            self.left_tail_slope, self.right_tail_slope)

    @cached_property
    def secant_slopes(self) -> np.ndarray:
        return np.diff(self.potential) / np.diff(self.knots)

    def __call__(self, x):
        return evaluate(self, x)

    def __repr__(self) -> str:
        return (f"LogConcaveDensity(n_knots={self.n_knots}, support={self.support}, "
                f"sup={sup_norm(self):.6g})")


@dataclass(frozen=True)
class Pieces:
    """Flat arrays describing every log-linear piece.

    On piece ``i`` the log-density is ``w[i] + slope[i] * (x - anchor[i])``
    for ``lo[i] <= x <= hi[i]``; ``anchor`` is always a finite endpoint.
    """

    lo: np.ndarray
    hi: np.ndarray
    anchor: np.ndarray
    w: np.ndarray
    slope: np.ndarray

    def __len__(self) -> int:
        return len(self.lo)


def _make_pieces(knots, pot, s_left, s_right) -> Pieces:
    lo, hi, anchor, w, slope = [], [], [], [], []
    if s_left is not None:
        lo.append(-math.inf); hi.append(knots[0]); anchor.append(knots[0])
        w.append(pot[0]); slope.append(s_left)
    if len(knots) > 1:
        lo.extend(knots[:-1]); hi.extend(knots[1:]); anchor.extend(knots[:-1])
        w.extend(pot[:-1]); slope.extend(np.diff(pot) / np.diff(knots))
    if s_right is not None:
        lo.append(knots[-1]); hi.append(math.inf); anchor.append(knots[-1])
        w.append(pot[-1]); slope.append(s_right)
    arr = [np.asarray(v, dtype=float) for v in (lo, hi, anchor, w, slope)]
    return Pieces(*arr)


def piece_log_masses(pieces: Pieces, a=-math.inf, b=math.inf, p=1.0) -> np.ndarray:
    """Per-piece ``log ∫_{[a,b] ∩ piece} f(x)**p dx`` (``-inf`` when empty)."""
    lo = np.maximum(pieces.lo, a)
    hi = np.minimum(pieces.hi, b)
    valid = hi > lo
    out = np.full(len(pieces), -math.inf)
    if not valid.any():
        return out
    lo, hi = lo[valid], hi[valid]
    slope, anchor, w = pieces.slope[valid], pieces.anchor[valid], pieces.w[valid]
    ps = p * slope
    start = np.where(ps <= 0, lo, hi)
    with np.errstate(invalid="ignore"):
        w0 = p * (w + slope * (start - anchor))
    out[valid] = w0 + log_decay_integral(-np.abs(ps), hi - lo)
    return out


def _clipped_log_masses(pieces: Pieces, b: np.ndarray) -> np.ndarray:
    """Elementwise ``log ∫_{lo_i}^{min(hi_i, b_i)} f`` (one piece per entry)."""
    hi = np.minimum(pieces.hi, b)
    lo = pieces.lo
    valid = hi > lo
    out = np.full(lo.shape, -math.inf)
    if valid.any():
        sel = Pieces(lo[valid], hi[valid], pieces.anchor[valid], pieces.w[valid],
                     pieces.slope[valid])
        lo, hi = sel.lo, sel.hi
        start = np.where(sel.slope <= 0, lo, hi)
        with np.errstate(invalid="ignore"):
            w0 = sel.w + sel.slope * (start - sel.anchor)
        out[valid] = w0 + log_decay_integral(-np.abs(sel.slope), hi - lo)
    return out


def piece_entropy_terms(pieces: Pieces) -> np.ndarray:
    """Per-piece ``∫ f log f`` (closed form, normalized density)."""
    ps = pieces.slope
    start = np.where(ps <= 0, pieces.lo, pieces.hi)
    w0 = pieces.w + ps * (start - pieces.anchor)
    s = -np.abs(ps)
    length = pieces.hi - pieces.lo
    e1 = np.exp(log_decay_integral(s, length))
    e2 = decay_moment(s, length)
    return np.exp(w0) * (w0 * e1 + s * e2)


# ---------------------------------------------------------------------------
# construction and validation
# ---------------------------------------------------------------------------

def _check_concavity(knots, values, s_left, s_right, tol):
    slopes = np.diff(values) / np.diff(knots)
    seq = list(slopes)
    if s_left is not None:
        seq.insert(0, s_left)
    if s_right is not None:
        seq.append(s_right)
    seq = np.asarray(seq, dtype=float)
    if len(seq) < 2:
        return
    rise = np.diff(seq)
    scale = np.maximum(1.0, np.maximum(np.abs(seq[:-1]), np.abs(seq[1:])))
    bad = rise > tol * scale
    if bad.any():
        i = int(np.argmax(bad))
        raise NonConcavePotential(
            f"slope sequence increases from {seq[i]:.6g} to {seq[i + 1]:.6g} "
            f"(position {i})")


def build_density(knots, log_values, left_tail_slope=None, right_tail_slope=None,
                  *, concavity_tol: float = CONCAVITY_TOL) -> LogConcaveDensity:
    """Validate a piecewise log-linear potential and normalize it.

    Raises :class:`NonConcavePotential`, :class:`NonIntegrable` or
    :class:`EmptySupport` for inputs outside the log-concave class.
    """
    knots = np.array(knots, dtype=float).ravel()
    values = np.array(log_values, dtype=float).ravel()
    if knots.size == 0:
        raise EmptySupport("at least one knot is required")
    if knots.shape != values.shape:
        raise InvalidDensity("knots and log_values differ in length")
    if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
        raise InvalidDensity("knots and log_values must be finite")
    if np.any(np.diff(knots) <= 0):
        raise InvalidDensity("knots must be strictly increasing")
    for name, s, sign in (("left", left_tail_slope, 1), ("right", right_tail_slope, -1)):
        if s is not None and not (math.isfinite(s) and sign * s > 0):
            raise NonIntegrable(f"{name} tail slope {s!r} does not decay")
    if left_tail_slope is not None:
        left_tail_slope = float(left_tail_slope)
    if right_tail_slope is not None:
        right_tail_slope = float(right_tail_slope)
    if knots.size == 1 and left_tail_slope is None and right_tail_slope is None:
        raise EmptySupport("a single knot without tails has zero-length support")

    _check_concavity(knots, values, left_tail_slope, right_tail_slope, concavity_tol)

    raw = _make_pieces(knots, values, left_tail_slope, right_tail_slope)
    log_z = float(logsumexp(piece_log_masses(raw)))
    if not math.isfinite(log_z):
        raise InvalidDensity("density mass is not finite")
    knots.flags.writeable = False
    values.flags.writeable = False
    return LogConcaveDensity(knots, values, left_tail_slope, right_tail_slope, log_z)


def concave_repair(knots, log_values, left_tail_slope=None, right_tail_slope=None):
    """Project a nearly concave knot potential onto the concave cone.

    Used on outputs that are concave in exact arithmetic (rearrangements,
    fits) but carry rounding noise in their secant slopes.  Returns the
    repaired log-values; the maximum is preserved.
    """
    knots = np.asarray(knots, dtype=float)
    values = np.asarray(log_values, dtype=float)
    if knots.size < 2:
        return values.copy()
    dx = np.diff(knots)
    slopes = np.diff(values) / dx
    if np.all(np.diff(slopes) <= 0):
        return values.copy()
    fixed = isotonic_regression(slopes, weights=dx, increasing=False).x
    if left_tail_slope is not None:
        fixed = np.minimum(fixed, left_tail_slope)
    if right_tail_slope is not None:
        fixed = np.maximum(fixed, right_tail_slope)
    out = np.concatenate([[0.0], np.cumsum(fixed * dx)])
    i = int(np.argmax(values))
    return out + (values[i] - out[i])


# ---------------------------------------------------------------------------
# calculus
# ---------------------------------------------------------------------------

def log_evaluate(d: LogConcaveDensity, x):
    """Log-density at ``x`` (``-inf`` outside the support)."""
    x = np.asarray(x, dtype=float)
    k, v = d.knots, d.potential
    out = np.interp(x, k, v)
    left = x < k[0]
    right = x > k[-1]
    if d.left_tail_slope is None:
        out = np.where(left, -np.inf, out)
    else:
        out = np.where(left, v[0] + d.left_tail_slope * (x - k[0]), out)
    if d.right_tail_slope is None:
        out = np.where(right, -np.inf, out)
    else:
        out = np.where(right, v[-1] + d.right_tail_slope * (x - k[-1]), out)
    return out[()] if out.ndim == 0 else out


def evaluate(d: LogConcaveDensity, x):
    """Density value at ``x``; zero outside the support."""
    return np.exp(log_evaluate(d, x))


def integrate(d: LogConcaveDensity, a: float = -math.inf, b: float = math.inf) -> float:
    """Exact mass of ``[a, b]``."""
    if b <= a:
        return 0.0
    lm = piece_log_masses(d.pieces, a, b)
    return float(np.exp(logsumexp(lm))) if np.isfinite(lm).any() else 0.0


def cdf(d: LogConcaveDensity, x):
    """``P(X <= x)``; vectorized over ``x``."""
    if np.ndim(x) == 0:
        return integrate(d, -math.inf, float(x))
    x = np.asarray(x, dtype=float)
    pcs = d.pieces
    full = np.exp(piece_log_masses(pcs))
    before = np.concatenate([[0.0], np.cumsum(full)])
    i = np.clip(np.searchsorted(pcs.hi, x, side="left"), 0, len(pcs) - 1)
    sub = Pieces(pcs.lo[i], pcs.hi[i], pcs.anchor[i], pcs.w[i], pcs.slope[i])
    part = np.exp(_clipped_log_masses(sub, x))
    out = np.where(x <= pcs.lo[0], 0.0, before[i] + part)
    return np.minimum(np.where(x >= pcs.hi[-1], 1.0, out), 1.0)


def sf(d: LogConcaveDensity, x: float) -> float:
    """Survival function ``P(X > x)``, computed without ``1 - cdf`` cancellation."""
    return integrate(d, x, math.inf)


def quantile(d: LogConcaveDensity, q: float) -> float:
    """Monotone inverse of :func:`cdf` by per-piece closed form."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    lo_s, hi_s = d.support
    if q == 0.0:
        return lo_s
    if q == 1.0:
        return hi_s
    pcs = d.pieces
    masses = np.exp(piece_log_masses(pcs))
    cum = np.cumsum(masses)
    i = int(np.searchsorted(cum, q, side="left"))
    i = min(i, len(pcs) - 1)
    r = q - (cum[i - 1] if i > 0 else 0.0)
    lo, hi, a = pcs.lo[i], pcs.hi[i], pcs.slope[i]
    with np.errstate(all="ignore"):
        if math.isinf(lo):
            x = pcs.anchor[i] + (math.log(a * r) - pcs.w[i]) / a
        else:
            w_lo = pcs.w[i] + a * (lo - pcs.anchor[i])
            if abs(a) < FLAT_SLOPE:
                x = lo + r * math.exp(-w_lo)
            else:
                x = lo + math.log1p(a * r * math.exp(-w_lo)) / a
    if not math.isfinite(x) or not (lo - 1e-9 <= x <= hi + 1e-9):
        x = _bisect_quantile(d, q)
    return float(min(max(x, lo), hi))


def isf(d: LogConcaveDensity, s: float) -> float:
    """Inverse survival function, accurate for tiny ``s``."""
    return -quantile(reflect(d), s)


def _bisect_quantile(d, q):
    lo, hi = d.support
    if math.isinf(lo):
        lo = float(d.knots[0]) - 1.0
        while cdf(d, lo) > q:
            lo = float(d.knots[0]) - 2 * (float(d.knots[0]) - lo)
    if math.isinf(hi):
        hi = float(d.knots[-1]) + 1.0
        while cdf(d, hi) < q:
            hi = float(d.knots[-1]) + 2 * (hi - float(d.knots[-1]))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(d, mid) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def sup_norm(d: LogConcaveDensity, return_argmax: bool = False):
    """``‖f‖_∞``; concavity puts the maximum at a knot."""
    i = int(np.argmax(d.potential))
    val = math.exp(d.potential[i])
    if return_argmax:
        return val, float(d.knots[i])
    return val


def support_length(d: LogConcaveDensity) -> float:
    lo, hi = d.support
    return hi - lo


# ---------------------------------------------------------------------------
# named families and affine maps
# ---------------------------------------------------------------------------

def exponential(rate: float = 1.0, loc: float = 0.0) -> LogConcaveDensity:
    if rate <= 0:
        raise ValueError("rate must be positive")
    return build_density([loc], [math.log(rate)], None, -rate)


def uniform(a: float = 0.0, b: float = 1.0) -> LogConcaveDensity:
    if b <= a:
        raise ValueError("need a < b")
    return build_density([a, b], [0.0, 0.0])


def laplace(rate: float = 1.0, loc: float = 0.0) -> LogConcaveDensity:
    return build_density([loc], [0.0], rate, -rate)


def truncated_exponential(rate: float, upper: float) -> LogConcaveDensity:
    return build_density([0.0, upper], [0.0, -rate * upper])


def exponential_match(d: LogConcaveDensity) -> LogConcaveDensity:
    """The exponential density sharing ``h_∞`` with ``d`` (rate ``‖f‖_∞``)."""
    return exponential(sup_norm(d))


def reflect(d: LogConcaveDensity) -> LogConcaveDensity:
    s_l = None if d.right_tail_slope is None else -d.right_tail_slope
    s_r = None if d.left_tail_slope is None else -d.left_tail_slope
    return build_density(-d.knots[::-1], d.potential[::-1], s_l, s_r)


def shift(d: LogConcaveDensity, c: float) -> LogConcaveDensity:
    return build_density(d.knots + c, d.potential, d.left_tail_slope, d.right_tail_slope)


def scale(d: LogConcaveDensity, lam: float) -> LogConcaveDensity:
    """Density of ``lam * X`` for ``lam > 0``."""
    if lam <= 0:
        raise ValueError("scale factor must be positive")
    s_l = None if d.left_tail_slope is None else d.left_tail_slope / lam
    s_r = None if d.right_tail_slope is None else d.right_tail_slope / lam
    return build_density(d.knots * lam, d.potential - math.log(lam), s_l, s_r)


def is_nonincreasing(d: LogConcaveDensity, tol: float = 1e-12) -> bool:
    """True when ``d`` is non-increasing on its support (no left tail)."""
    if d.left_tail_slope is not None:
        return False
    if d.n_knots > 1 and np.any(d.secant_slopes > tol):
        return False
    return True


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------

def random_logconcave(seed, n_knots: int = 5, domain=(0.0, 4.0), *,
                      monotone: bool = False) -> LogConcaveDensity:
    """Seeded random log-concave density.

    Slopes are drawn and sorted decreasing, which forces concavity.  With
    ``monotone=True`` the density is non-increasing on ``[0, ∞)`` with its
    peak at 0 (knots are laid out on ``[0, domain width]``).
    """
    if n_knots < 1:
        raise ValueError("n_knots must be >= 1")
    rng = np.random.default_rng(seed)
    a, b = map(float, domain)
    width = b - a
    if monotone:
        a, b = 0.0, width
    inner = np.sort(rng.uniform(a, b, size=max(n_knots - 2, 0)))
    knots = np.concatenate([[a], inner, [b]])[: n_knots] if n_knots > 1 else np.array([a])
    if n_knots > 1 and np.any(np.diff(knots) <= 1e-9 * width):
        knots = np.linspace(a, b, n_knots)
    spread = 4.0 / width
    slopes = rng.normal(0.0, 1.5 * spread, size=n_knots - 1)
    if monotone:
        slopes = -np.abs(slopes)
    slopes = np.sort(slopes)[::-1]
    values = np.concatenate([[0.0], np.cumsum(slopes * np.diff(knots))])

    first = slopes[0] if slopes.size else 0.0
    last = slopes[-1] if slopes.size else 0.0
    if monotone:
        want_left, want_right = False, bool(rng.random() < 0.5) or n_knots == 1
    else:
        want_left, want_right = bool(rng.random() < 0.5), bool(rng.random() < 0.5)
        if n_knots == 1:
            want_left = want_right = True
    s_left = max(first, 0.0) + spread * (0.1 + rng.exponential(1.0)) if want_left else None
    s_right = min(last, 0.0) - spread * (0.1 + rng.exponential(1.0)) if want_right else None
    return build_density(knots, values, s_left, s_right)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def density_to_dict(d: LogConcaveDensity) -> dict:
    return {
        "knots": [float(x) for x in d.knots],
        "log_values": [float(v) for v in d.potential],
        "left_tail_slope": d.left_tail_slope,
        "right_tail_slope": d.right_tail_slope,
    }


def density_from_dict(obj: dict) -> LogConcaveDensity:
    missing = {"knots", "log_values"} - set(obj)
    if missing:
        raise InvalidDensity(f"density JSON lacks {sorted(missing)}")
    return build_density(obj["knots"], obj["log_values"],
                         obj.get("left_tail_slope"), obj.get("right_tail_slope"))


def load_density(path) -> LogConcaveDensity:
    with open(path) as fh:
        return density_from_dict(json.load(fh))


def save_density(d: LogConcaveDensity, path) -> None:
    with open(path, "w") as fh:
        json.dump(density_to_dict(d), fh, indent=2)
        fh.write("\n")
