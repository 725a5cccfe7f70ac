"""End-to-end checks of the increment bounds with explicit error budgets.

Every check returns a margin (positive when the inequality holds) and the
numeric budget ``ε_num`` accumulated from the estimates the pipeline
actually produced.  A margin below ``-ε_num`` is a violation; one within
``±ε_num`` is numerically indeterminate.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .convolve import ConvolutionClosure, conv_sup_norm
from .density import LogConcaveDensity, random_logconcave, sup_norm
from .discrete import (
    LogConcavePMF,
    random_logconcave_pmf,
    random_symmetric_pmf,
    verify_discrete_h2,
    verify_discrete_hinf,
    verify_symmetric_half,
)
from .entropy import renyi
from .rearrange import decreasing_rearrangement

PASS = "pass"
INDETERMINATE = "numerically-indeterminate"
VIOLATED = "violated"

# rounding floor for a difference of two log-scale quantities of size ~1
ROUNDING = 64 * np.finfo(float).eps


def classify(margin: float, budget: float) -> str:
    if margin < -budget:
        return VIOLATED
    if abs(margin) <= budget:
        return INDETERMINATE
    return PASS


@dataclass
class InstanceResult:
    descriptor: dict
    margin: float
    budget: float
    verdict: str
    details: dict = field(default_factory=dict)


@dataclass
class VerificationReport:
    theorem_id: str
    instances: list[InstanceResult]
    wall_clock: float = 0.0

    @property
    def margins(self) -> list[float]:
        return [r.margin for r in self.instances]

    @property
    def budget(self) -> float:
        return max((r.budget for r in self.instances), default=0.0)

    @property
    def min_margin(self) -> float:
        return min(self.margins, default=math.inf)

    def count(self, verdict: str) -> int:
        return sum(r.verdict == verdict for r in self.instances)

    @property
    def verdict(self) -> str:
        if self.count(VIOLATED):
            return VIOLATED
        if self.count(INDETERMINATE):
            return INDETERMINATE
        return PASS

    @property
    def violated(self) -> bool:
        return self.count(VIOLATED) > 0

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "verdict": self.verdict,
            "n_instances": len(self.instances),
            "n_pass": self.count(PASS),
            "n_indeterminate": self.count(INDETERMINATE),
            "n_violated": self.count(VIOLATED),
            "min_margin": self.min_margin,
            "budget": self.budget,
            "wall_clock": self.wall_clock if timing else None,
            "instances": [asdict(r) for r in self.instances],
        }


def _single(theorem_id: str, result: InstanceResult, start: float) -> VerificationReport:
    return VerificationReport(theorem_id, [result], time.perf_counter() - start)


def _instance(descriptor, margin, budget, **details) -> InstanceResult:
    return InstanceResult(dict(descriptor or {}), float(margin), float(budget),
                          classify(margin, budget), details)


# ---------------------------------------------------------------------------
# continuous checks
# ---------------------------------------------------------------------------

def hypoexponential_sup(lam: float, mu: float) -> float:
    """Peak of the ``Exp(λ) * Exp(μ)`` density, in closed form."""
    if lam == mu:
        return lam / math.e
    x = math.log(mu / lam) / (mu - lam)
    return lam * mu / (mu - lam) * (math.exp(-lam * x) - math.exp(-mu * x))


def hypoexponential_argmax(lam: float, mu: float) -> float:
    return 1.0 / lam if lam == mu else math.log(mu / lam) / (mu - lam)


def verify_thm_main(d_x: LogConcaveDensity, d_y: LogConcaveDensity,
                    descriptor: dict | None = None) -> VerificationReport:
    """``h_∞(X+Y) <= h_∞(Z+W)`` with ``Z, W`` the ``h_∞``-matched exponentials.

    The intermediate comparison ``‖f*g‖_∞ >= ‖f↓*g↓‖_∞`` is reported in
    ``details`` with its own margin.
    """
    start = time.perf_counter()
    lam, mu = sup_norm(d_x), sup_norm(d_y)
    s = conv_sup_norm(d_x, d_y)
    sup_xy = s.value
    sup_rr = conv_sup_norm(decreasing_rearrangement(d_x), decreasing_rearrangement(d_y)).value
    lhs = -math.log(sup_xy)
    rhs = -math.log(hypoexponential_sup(lam, mu))
    budget = s.error / s.value + ROUNDING * max(1.0, abs(lhs), abs(rhs))
    lemma_margin = math.log(sup_xy) - math.log(sup_rr)
    result = _instance(descriptor, rhs - lhs, budget, h_inf_sum=lhs, h_inf_exp_sum=rhs,
                       sup_sum=sup_xy, sup_rearranged_sum=sup_rr,
                       rearrangement_margin=lemma_margin, argmax=s.argmax)
    return _single("main", result, start)


def verify_prop_h2(d: LogConcaveDensity, descriptor: dict | None = None) -> VerificationReport:
    """``h_2(X+Y) <= h_2(X) + log 2`` for i.i.d. ``X, Y``."""
    start = time.perf_counter()
    h2 = renyi(d, 2)
    h2_sum, err = renyi(ConvolutionClosure(d, d), 2, return_error=True)
    margin = h2 + math.log(2.0) - h2_sum
    budget = err + ROUNDING * max(1.0, abs(h2), abs(h2_sum))
    return _single("h2", _instance(descriptor, margin, budget, h2=h2, h2_sum=h2_sum), start)


def verify_rogozin_pair(d_x: LogConcaveDensity, d_y: LogConcaveDensity,
                        descriptor: dict | None = None) -> VerificationReport:
    """``h_∞(X+Y) >= h_∞(U_1+U_2)`` with uniforms of matching peaks.

    ``U_1 + U_2`` has a trapezoid (or triangle) density whose apex is
    ``1 / max(len_1, len_2)``.
    """
    start = time.perf_counter()
    s = conv_sup_norm(d_x, d_y)
    lhs = -math.log(s.value)
    lengths = (1.0 / sup_norm(d_x), 1.0 / sup_norm(d_y))
    rhs = math.log(max(lengths))
    budget = s.error / s.value + ROUNDING * max(1.0, abs(lhs), abs(rhs))
    return _single("rogozin", _instance(descriptor, lhs - rhs, budget, h_inf_sum=lhs,
                                        h_inf_uniform_sum=rhs), start)


def verify_cover_zhang(d: LogConcaveDensity, descriptor: dict | None = None) -> VerificationReport:
    """``h(X+Y) - h(X) <= log 2`` for i.i.d. ``X, Y`` (Shannon entropy)."""
    start = time.perf_counter()
    h = renyi(d, 1)
    h_sum, err = renyi(ConvolutionClosure(d, d), 1, return_error=True)
    increment = h_sum - h
    budget = err + ROUNDING * max(1.0, abs(h), abs(h_sum))
    return _single("cover-zhang", _instance(descriptor, math.log(2.0) - increment, budget,
                                            h=h, h_sum=h_sum, increment=increment), start)


# ---------------------------------------------------------------------------
# discrete checks
# ---------------------------------------------------------------------------

def verify_discrete_h2_report(f: LogConcavePMF, descriptor: dict | None = None) -> VerificationReport:
    start = time.perf_counter()
    r = verify_discrete_h2(f)
    budget = r.budget + ROUNDING
    return _single("discrete-h2", _instance(descriptor, r.margin, budget, ratio=r.ratio,
                                            majorizes=r.majorizes), start)


def verify_discrete_hinf_report(f: LogConcavePMF,
                                descriptor: dict | None = None) -> VerificationReport:
    start = time.perf_counter()
    r = verify_discrete_hinf(f)
    budget = r.budget + ROUNDING
    return _single("discrete-hinf", _instance(descriptor, r.margin, budget, ratio=r.ratio,
                                              witness=r.witness, k_star=r.k_star,
                                              case=r.case), start)


def verify_discrete_sym_report(f: LogConcavePMF,
                               descriptor: dict | None = None) -> VerificationReport:
    start = time.perf_counter()
    margin = verify_symmetric_half(f)
    budget = 2.0 * f.dropped_mass / f.peak + ROUNDING
    return _single("discrete-sym", _instance(descriptor, margin, budget), start)


# ---------------------------------------------------------------------------
# batches
# ---------------------------------------------------------------------------

def instance_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Counter-based stream for instance ``index`` of a batch."""
    return np.random.SeedSequence([seed, index])


def random_density(ss: np.random.SeedSequence, *, monotone: bool = False) -> LogConcaveDensity:
    rng = np.random.default_rng(ss)
    n = int(rng.integers(1, 9))
    width = float(rng.uniform(0.5, 6.0))
    lo = float(rng.uniform(-3.0, 3.0))
    return random_logconcave(rng, n, (lo, lo + width), monotone=monotone)


def _density_pair(ss):
    a, b = ss.spawn(2)
    return random_density(a), random_density(b)


THEOREMS: dict[str, tuple[Callable, Callable]] = {
    "main": (verify_thm_main, _density_pair),
    "h2": (verify_prop_h2, lambda ss: (random_density(ss),)),
    "rogozin": (verify_rogozin_pair, _density_pair),
    "cover-zhang": (verify_cover_zhang, lambda ss: (random_density(ss),)),
    "discrete-h2": (verify_discrete_h2_report, lambda ss: (random_logconcave_pmf(ss),)),
    "discrete-hinf": (verify_discrete_hinf_report,
                      lambda ss: (random_logconcave_pmf(ss, monotone=True),)),
    "discrete-sym": (verify_discrete_sym_report, lambda ss: (random_symmetric_pmf(ss),)),
}


def run_instance(theorem: str, args: Sequence, descriptor: dict) -> InstanceResult:
    check, _ = THEOREMS[theorem]
    return check(*args, descriptor=descriptor).instances[0]


def _random_instance(theorem: str, seed: int, index: int) -> InstanceResult:
    _, make = THEOREMS[theorem]
    args = make(instance_seed(seed, index))
    return run_instance(theorem, args, {"seed": seed, "index": index})


def run_random_batch(theorem: str, n: int, seed: int, jobs: int = 1) -> VerificationReport:
    """``n`` seeded random instances; results are aggregated in index order."""
    if theorem not in THEOREMS:
        raise KeyError(f"unknown theorem {theorem!r}")
    start = time.perf_counter()
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_random_instance, [theorem] * n, [seed] * n, range(n)))
    else:
        results = [_random_instance(theorem, seed, i) for i in range(n)]
    return VerificationReport(theorem, results, time.perf_counter() - start)


def run_batch(theorem: str, instances: Sequence[tuple[Sequence, dict]]) -> VerificationReport:
    """Explicit instances given as ``(args, descriptor)`` pairs."""
    start = time.perf_counter()
    results = [run_instance(theorem, args, desc) for args, desc in instances]
    return VerificationReport(theorem, results, time.perf_counter() - start)
