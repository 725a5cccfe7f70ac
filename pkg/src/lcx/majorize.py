"""Majorization of densities and of sequences.

``g`` majorizes ``f`` (equal masses) when ``∫(f - t)_+ <= ∫(g - t)_+`` for
every level ``t >= 0``; the majorant is the more concentrated of the two
and has the smaller Rényi entropy of every order.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .density import LogConcaveDensity, integrate, sup_norm
from .entropy import RenyiOrder, renyi
from .errors import MassMismatch, PreconditionUnverified, SumMismatch
from .rearrange import decreasing_rearrangement, excess_mass_curve

DEFAULT_LEVELS = 400


@dataclass
class MajorizationVerdict:
    holds: bool
    worst_margin: float
    worst_t: float
    levels_checked: int
    tol: float

    def to_dict(self) -> dict:
        return asdict(self)


def check_levels(f: LogConcaveDensity, g: LogConcaveDensity, t_count: int) -> np.ndarray:
    """Log-spaced levels below the larger peak plus every knot level of both."""
    top = max(sup_norm(f), sup_norm(g))
    grid = top * np.logspace(-14, 0, t_count + 1, endpoint=False)[1:]
    knot_levels = np.exp(np.concatenate([f.potential, g.potential]))
    levels = np.unique(np.concatenate([grid, knot_levels]))
    return levels[(levels > 0) & (levels < top)]


def majorizes(g: LogConcaveDensity, f: LogConcaveDensity, t_count: int = DEFAULT_LEVELS,
              tol: float = 1e-10) -> MajorizationVerdict:
    """Check that ``g`` majorizes ``f`` on a finite level grid.

    ``worst_margin`` is the smallest ``M_g(t) - M_f(t)``; the verdict holds
    when it is at least ``-tol``.
    """
    mass_gap = abs(integrate(f) - integrate(g))
    if mass_gap > 1e-9:
        raise MassMismatch(f"masses differ by {mass_gap:.3g}")
    levels = check_levels(f, g, t_count)
    margins = excess_mass_curve(g, levels) - excess_mass_curve(f, levels)
    if margins.size == 0:
        return MajorizationVerdict(True, 0.0, 0.0, 0, tol)
    i = int(np.argmin(margins))
    worst = float(margins[i])
    return MajorizationVerdict(worst >= -tol, worst, float(levels[i]), int(levels.size), tol)


def window_mass_curve(d: LogConcaveDensity, widths: Iterable[float]) -> list[float]:
    """Largest mass of an interval of each width.

    For a unimodal density the best window of width ``δ`` is the
    super-level set of measure ``δ``, so the curve is ``∫_0^δ f↓``.
    """
    r = decreasing_rearrangement(d)
    return [integrate(r, 0.0, float(w)) if w > 0 else 0.0 for w in widths]


@dataclass
class ConvexOrderReport:
    orders: list[str]
    gaps: list[float]
    holds: list[bool]
    tol: float
    majorization: MajorizationVerdict = field(repr=False)

    @property
    def all_hold(self) -> bool:
        return all(self.holds)


def convex_order_consequence(g: LogConcaveDensity, f: LogConcaveDensity, p_grid,
                             tol: float = 1e-7, t_count: int = DEFAULT_LEVELS) -> ConvexOrderReport:
    """Entropy consequence of majorization: ``h_p(g) <= h_p(f)`` for each order.

    Uses ``φ(x) = x^p`` (p > 1) or ``φ(x) = -x^p`` (0 < p < 1), both convex
    with ``φ(0) = 0``; the orders 1 and ∞ follow as limits.
    """
    verdict = majorizes(g, f, t_count)
    if not verdict.holds:
        raise PreconditionUnverified(
            f"g does not majorize f (worst margin {verdict.worst_margin:.3g} "
            f"at t={verdict.worst_t:.3g})")
    orders = [RenyiOrder.of(p) for p in p_grid]
    gaps = [renyi(g, o) - renyi(f, o) for o in orders]
    return ConvexOrderReport([str(o) for o in orders], gaps, [gp <= tol for gp in gaps],
                             tol, verdict)


# ---------------------------------------------------------------------------
# sequences
# ---------------------------------------------------------------------------

def sequence_majorizes(a: Sequence[float], b: Sequence[float], tol: float = 1e-12) -> bool:
    """Prefix sums of ``a`` sorted descending dominate those of ``b``."""
    a = np.sort(np.asarray(a, dtype=float))[::-1]
    b = np.sort(np.asarray(b, dtype=float))[::-1]
    if abs(a.sum() - b.sum()) > tol * max(1.0, abs(a.sum())):
        raise SumMismatch(f"sums differ: {a.sum()!r} vs {b.sum()!r}")
    n = max(a.size, b.size)
    a = np.pad(a, (0, n - a.size))
    b = np.pad(b, (0, n - b.size))
    return bool(np.all(np.cumsum(a) >= np.cumsum(b) - tol))


def hinge(c: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: np.maximum(np.asarray(x) - c, 0.0)


STANDARD_CONVEX = {
    "square": lambda x: np.asarray(x) ** 2,
    "exp": lambda x: np.exp(np.asarray(x)),
    "hinge_0.1": hinge(0.1),
    "hinge_0.25": hinge(0.25),
}


@dataclass
class KaramataReport:
    names: list[str]
    lhs: list[float]
    rhs: list[float]
    holds: list[bool]

    @property
    def all_hold(self) -> bool:
        return all(self.holds)


def karamata(a: Sequence[float], b: Sequence[float], phi_samples=None,
             tol: float = 1e-12) -> KaramataReport:
    """``Σ φ(a) >= Σ φ(b)`` for convex ``φ`` when ``a`` majorizes ``b``.

    ``phi_samples`` maps names to vectorized convex functions (defaults to
    squares, the exponential and two hinges).  Sequences of unequal length
    are zero-padded, so ``φ(0)`` terms cancel only if ``φ(0) = 0``; the
    padding is applied to both sides identically.
    """
    if not sequence_majorizes(a, b):
        raise PreconditionUnverified("a does not majorize b")
    phis = STANDARD_CONVEX if phi_samples is None else phi_samples
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = max(a.size, b.size)
    a = np.pad(a, (0, n - a.size))
    b = np.pad(b, (0, n - b.size))
    names, lhs, rhs, ok = [], [], [], []
    for name, phi in phis.items():
        sa, sb = float(np.sum(phi(a))), float(np.sum(phi(b)))
        names.append(name)
        lhs.append(sa)
        rhs.append(sb)
        ok.append(sa >= sb - tol * max(1.0, abs(sa)))
    return KaramataReport(names, lhs, rhs, ok)

