"""Log-concave probability mass functions on the integers.

Covers the ``H_2`` increment bound, the ``e^{-1}`` sup-convolution bound for
monotone pmfs, geometric tightness and the symmetric refinement.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .entropy import renyi_discrete
from .errors import InvalidDensity, InvalidParameter, NotMonotone, NotSymmetric
from .majorize import KaramataReport, karamata, sequence_majorizes

TAIL_MASS = 1e-15
LOGCONCAVITY_TOL = 1e-15
SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LogConcavePMF:
    """``probs[i] = P(X = offset + i)`` with positive, log-concave entries.

    ``dropped_mass`` records the tail mass removed when an analytically
    infinite family is truncated; it is part of every error budget.
    """

    offset: int
    probs: np.ndarray
    family: str = "general"
    lam: Optional[float] = None
    dropped_mass: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "offset", int(self.offset))
        validate_pmf(probs, self.dropped_mass)

    @property
    def support(self) -> tuple[int, int]:
        return self.offset, self.offset + len(self.probs) - 1

    @property
    def peak(self) -> float:
        return float(self.probs.max())

    def __len__(self) -> int:
        return len(self.probs)

    def __call__(self, k):
        k = np.asarray(k) - self.offset
        inside = (k >= 0) & (k < len(self.probs))
        return np.where(inside, self.probs[np.clip(k, 0, len(self.probs) - 1)], 0.0)

    def __repr__(self) -> str:
        return (f"LogConcavePMF(offset={self.offset}, len={len(self.probs)}, "
                f"family={self.family!r})")


def validate_pmf(probs: np.ndarray, dropped_mass: float = 0.0) -> None:
    if probs.ndim != 1 or probs.size == 0:
        raise InvalidDensity("probs must be a non-empty vector")
    if not np.all(np.isfinite(probs)) or np.any(probs <= 0):
        raise InvalidDensity("probs must be finite and positive (contiguous support)")
    total = float(probs.sum()) + dropped_mass
    if abs(total - 1.0) > SUM_TOL:
        raise InvalidDensity(f"probabilities sum to {total!r}")
    if probs.size > 2:
        defect = probs[:-2] * probs[2:] - probs[1:-1] ** 2
        if defect.max() > LOGCONCAVITY_TOL:
            k = int(defect.argmax())
            raise InvalidDensity(f"log-concavity fails at index {k + 1} (defect {defect[k]:.3g})")


def pmf_from_probs(probs, offset: int = 0) -> LogConcavePMF:
    """Normalize a positive vector into a general pmf."""
    probs = np.asarray(probs, dtype=float)
    return LogConcavePMF(offset, probs / probs.sum())


def point_mass(k: int = 0) -> LogConcavePMF:
    return LogConcavePMF(k, np.ones(1))


def discrete_uniform(lo: int, hi: int) -> LogConcavePMF:
    n = hi - lo + 1
    return LogConcavePMF(lo, np.full(n, 1.0 / n))


# ---------------------------------------------------------------------------
# geometric family
# ---------------------------------------------------------------------------

def _check_lambda(lam: float) -> None:
    if not 0 < lam < 1:
        raise InvalidParameter(f"geometric parameter must lie in (0, 1), got {lam!r}")


def geometric(lam: float) -> LogConcavePMF:
    """``f(k) = (1-λ) λ^k`` on ``k >= 0``, cut where the tail ``λ^n`` drops below 1e-15."""
    _check_lambda(lam)
    n = max(1, math.ceil(math.log(TAIL_MASS) / math.log(lam)))
    k = np.arange(n)
    probs = -math.expm1(math.log(lam)) * np.exp(k * math.log(lam))
    return LogConcavePMF(0, probs, "geometric", lam, lam ** n)


def geometric_self_conv(lam: float) -> LogConcavePMF:
    """``(f*f)(k) = (k+1)(1-λ)² λ^k``; tail ``P(S >= n) = λ^n (1 + n(1-λ))``."""
    _check_lambda(lam)
    q = -math.expm1(math.log(lam))
    n = max(1, math.ceil(math.log(TAIL_MASS) / math.log(lam)))
    while lam ** n * (1 + n * q) > TAIL_MASS:
        n += max(1, n // 16)
    k = np.arange(n)
    probs = (k + 1) * q * q * np.exp(k * math.log(lam))
    return LogConcavePMF(0, probs, "general", None, lam ** n * (1 + n * q))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def discrete_convolve(f: LogConcavePMF, g: LogConcavePMF) -> LogConcavePMF:
    """Exact finite convolution; the output is revalidated.

    Two truncated geometrics of the same parameter use the closed form so
    the result keeps a 1e-15 tail budget instead of a truncation artifact.
    """
    if (f.family == "geometric" and g.family == "geometric" and f.lam == g.lam
            and f.offset == g.offset == 0):
        return geometric_self_conv(f.lam)
    probs = np.maximum(np.convolve(f.probs, g.probs), np.finfo(float).tiny)
    dropped = 1.0 - (1.0 - f.dropped_mass) * (1.0 - g.dropped_mass)
    return LogConcavePMF(f.offset + g.offset, probs, "general", None, dropped)


def reflect_pmf(f: LogConcavePMF) -> LogConcavePMF:
    """pmf of ``-X``."""
    return LogConcavePMF(-f.support[1], f.probs[::-1].copy(), "general", None, f.dropped_mass)


def symmetrize(f: LogConcavePMF) -> LogConcavePMF:
    """pmf of ``X - X'`` for an independent copy ``X'``."""
    return discrete_convolve(f, reflect_pmf(f))


def discrete_sequence_rearrange(f: LogConcavePMF) -> np.ndarray:
    """Probabilities sorted in decreasing order."""
    return np.sort(f.probs)[::-1]


def is_monotone_pmf(f: LogConcavePMF) -> str | None:
    """``"decreasing"``, ``"increasing"`` or ``None``."""
    d = np.diff(f.probs)
    if np.all(d <= 0):
        return "decreasing"
    if np.all(d >= 0):
        return "increasing"
    return None


def symmetry_centre(f: LogConcavePMF) -> float | None:
    """Centre of symmetry (integer or half-integer), checked exactly."""
    if np.array_equal(f.probs, f.probs[::-1]):
        lo, hi = f.support
        return 0.5 * (lo + hi)
    return None


# ---------------------------------------------------------------------------
# H_2 bound
# ---------------------------------------------------------------------------

@dataclass
class DiscreteH2Report:
    """``H_2(f) + log 2 - H_2(f*f)`` and the objects of its proof.

    ``symmetrized`` is the pmf ``s`` of ``X - X'``; ``matched`` is
    ``g(k) = s(0) r^k`` with ``r = (1 - s(0)) / (1 + s(0))`` on ``k >= 0``,
    which ``s`` restricted to ``k >= 0`` majorizes.  The collision
    probability of ``s`` is then at least ``(1 + s(0)²) s(0) / 2``.
    """

    margin: float
    ratio: float
    h2: float
    h2_sum: float
    budget: float
    symmetrized: LogConcavePMF = field(repr=False)
    matched: np.ndarray = field(repr=False)
    majorizes: bool = True
    karamata: Optional[KaramataReport] = field(default=None, repr=False)
    collision: float = 0.0
    collision_bound: float = 0.0


def geometric_h2_ratio(lam: float) -> float:
    """Closed form ``Σf² / Σ(f*f)² = (1+λ)² / (1+λ²)``."""
    return (1 + lam) ** 2 / (1 + lam * lam)


def _matched_geometric(s0: float) -> np.ndarray:
    r = (1.0 - s0) / (1.0 + s0)
    if r <= 0:
        return np.array([s0])
    n = max(1, math.ceil(math.log(TAIL_MASS) / math.log(r)))
    return s0 * np.exp(np.arange(n) * math.log(r))


def verify_discrete_h2(f: LogConcavePMF, with_karamata: bool = True) -> DiscreteH2Report:
    ff = discrete_convolve(f, f)
    sq_f = float(np.dot(f.probs, f.probs))
    sq_ff = float(np.dot(ff.probs, ff.probs))
    ratio = sq_f / sq_ff
    margin = math.log(2.0) - math.log(ratio)
    budget = 4.0 * (f.dropped_mass + ff.dropped_mass) / min(sq_f, sq_ff)

    s = symmetrize(f)
    zero = -s.offset
    s0 = float(s.probs[zero])
    half = s.probs[zero:]
    g = _matched_geometric(s0)
    kar = None
    maj = True
    if with_karamata:
        # the geometric tail beyond 1e-15 is dropped, so rescale to equal sums
        g_eq = g * (half.sum() / g.sum())
        maj = sequence_majorizes(half, g_eq, tol=1e-12)
        if maj:
            kar = karamata(half, g_eq, {"square": lambda x: np.asarray(x) ** 2}, tol=1e-12)
    collision = float(np.dot(s.probs, s.probs))
    return DiscreteH2Report(margin, ratio, -math.log(sq_f), -math.log(sq_ff), budget, s, g,
                            maj, kar, collision, 0.5 * (1.0 + s0 * s0) * s0)


# ---------------------------------------------------------------------------
# H_inf bound for monotone pmfs
# ---------------------------------------------------------------------------

@dataclass
class DiscreteHinfReport:
    """``‖f*f‖_∞ / ‖f‖_∞`` against ``1/e``.

    ``witness`` is ``sup_k (k+1) f(k)`` for the non-increasing orientation,
    a lower bound of the ratio since ``(f*f)(k) >= (k+1) f(k) ‖f‖_∞``.
    """

    ratio: float
    margin: float
    witness: float
    k_star: int
    case: str
    budget: float
    case_bound: float

    def __iter__(self):
        yield self.ratio
        yield self.margin


def geometric_hinf_ratio(lam: float) -> float:
    """``max_k (k+1)(1-λ) λ^k``; the maximum sits at ``k = floor(λ/(1-λ))``."""
    _check_lambda(lam)
    q = -math.expm1(math.log(lam))
    k0 = math.floor(lam / q)
    return max((k + 1) * q * math.exp(k * math.log(lam)) for k in (max(k0 - 1, 0), k0, k0 + 1))


def verify_discrete_hinf(f: LogConcavePMF) -> DiscreteHinfReport:
    orientation = is_monotone_pmf(f)
    if orientation is None:
        raise NotMonotone("the pmf must be monotone on its support")
    probs = f.probs if orientation == "decreasing" else f.probs[::-1]
    k = np.arange(probs.size)
    phi = (k + 1) * probs
    k_star = int(np.argmax(phi))
    witness = float(phi[k_star])
    if k_star == 0:
        case, case_bound = "k*=0", 2.0 * witness
    else:
        case = "k*>=1"
        case_bound = witness * (1.0 / (k_star + 1) + (1.0 + 1.0 / k_star) ** k_star)
    if f.family == "geometric":
        ratio = geometric_hinf_ratio(f.lam)
    else:
        ff = np.convolve(probs, probs)
        ratio = float(ff.max()) / float(probs[0])
    return DiscreteHinfReport(ratio, ratio - math.exp(-1.0), witness, k_star, case,
                              2.0 * f.dropped_mass, case_bound)


# ---------------------------------------------------------------------------
# symmetric refinement
# ---------------------------------------------------------------------------

def verify_symmetric_half(f: LogConcavePMF) -> float:
    """``H_∞(f) + 1/2 - H_∞(f*f)`` for a pmf symmetric about an integer or half-integer."""
    if symmetry_centre(f) is None:
        raise NotSymmetric("pmf is not symmetric about an integer or half-integer")
    ff = discrete_convolve(f, f)
    return renyi_discrete(f, math.inf) + 0.5 - renyi_discrete(ff, math.inf)


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------

def _concave_potential(slopes: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(np.sort(slopes)[::-1])])


def _from_potential(v: np.ndarray, offset: int) -> LogConcavePMF:
    v = v - v.max()
    keep = np.flatnonzero(v > -600.0)
    v = v[keep[0]: keep[-1] + 1]
    p = np.exp(v)
    return LogConcavePMF(offset + int(keep[0]), p / p.sum())


def random_logconcave_pmf(seed, max_len: int = 50, *, monotone: bool = False) -> LogConcavePMF:
    """Concave random potential on a window of random length up to ``max_len``.

    The monotone variant uses only negative slopes, so the pmf decreases.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_len + 1))
    scale = float(rng.choice([0.05, 0.3, 1.0, 3.0]))
    slopes = rng.normal(0.0, scale, n - 1)
    if monotone:
        slopes = -np.abs(slopes)
    v = _concave_potential(slopes)
    return _from_potential(v, int(rng.integers(-5, 6)))


def random_symmetric_pmf(seed, max_half: int = 25) -> LogConcavePMF:
    """Symmetric log-concave pmf about an integer or a half-integer centre."""
    rng = np.random.default_rng(seed)
    h = int(rng.integers(1, max_half + 1))
    scale = float(rng.choice([0.05, 0.3, 1.0, 3.0]))
    right = _concave_potential(-np.abs(rng.normal(0.0, scale, h - 1)))
    if rng.random() < 0.5:
        v = np.concatenate([right[:0:-1], right])
    else:
        v = np.concatenate([right[::-1], right])
    return _from_potential(v, -(len(v) // 2))


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def pmf_to_dict(f: LogConcavePMF) -> dict:
    return {"offset": f.offset, "probs": f.probs.tolist(), "family": f.family,
            "lambda": f.lam}


def pmf_from_dict(obj: dict) -> LogConcavePMF:
    family = obj.get("family", "general")
    if family == "geometric":
        return geometric(float(obj["lambda"]))
    if family != "general":
        raise InvalidDensity(f"unknown pmf family {family!r}")
    return LogConcavePMF(int(obj["offset"]), np.asarray(obj["probs"], dtype=float))


def load_pmf(path) -> LogConcavePMF:
    return pmf_from_dict(json.loads(Path(path).read_text()))


def save_pmf(f: LogConcavePMF, path) -> None:
    Path(path).write_text(json.dumps(pmf_to_dict(f)))
