"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import numpy as np
from scipy import integrate as sci

from lcx.convolve import conv_sup_norm
from lcx.density import (
    exponential,
    laplace,
    log_evaluate,
    random_logconcave,
    reflect,
    sup_norm,
    uniform,
)
from lcx.discrete import (
    discrete_convolve,
    geometric,
    random_logconcave_pmf,
    random_symmetric_pmf,
    reflect_pmf,
    verify_discrete_h2,
    verify_discrete_hinf,
    verify_symmetric_half,
)
from lcx.entropy import renyi, renyi_discrete
from lcx.rearrange import decreasing_rearrangement, level_measure
from lcx.search import SearchConfig, maximize_increment
from lcx.transport import (
    exponentialization_chain,
    expansion_check,
    pointwise_domination,
    pushforward_cdf,
    transport_map,
)
from lcx.verify import (
    INDETERMINATE,
    VIOLATED,
    hypoexponential_argmax,
    hypoexponential_sup,
    instance_seed,
    random_density,
    run_random_batch,
    verify_prop_h2,
    verify_thm_main,
)

ACCEPT_SEED = 2024


def densities(n, monotone=False):
    return [random_density(instance_seed(ACCEPT_SEED, i), monotone=monotone) for i in range(n)]


def monotone_pairs(n):
    return [(random_logconcave(np.random.SeedSequence([ACCEPT_SEED, i, 0]), 4, (0, 3),
                               monotone=True),
             random_logconcave(np.random.SeedSequence([ACCEPT_SEED, i, 1]), 4, (0, 3),
                               monotone=True)) for i in range(n)]


def test_criterion_01_main_equality_case(criterion):
    start = time.perf_counter()
    rep = verify_thm_main(exponential(1), exponential(1)).instances[0]
    h_sum = rep.details["h_inf_sum"]
    h_x = renyi(exponential(1), math.inf)
    s = conv_sup_norm(exponential(1), exponential(2))
    closed, x_star = hypoexponential_sup(1, 2), hypoexponential_argmax(1, 2)
    elapsed = time.perf_counter() - start
    checks = [abs(h_sum - 1) <= 1e-8, h_x == 0.0, abs(h_sum - h_x - 1) <= 1e-8,
              abs(closed - 0.5) <= 1e-15, abs(x_star - math.log(2)) <= 1e-15,
              abs(s.value - closed) <= 1e-9, abs(s.argmax - x_star) <= 1e-9, elapsed < 1.0]
    criterion(1, all(checks),
              f"h_inf(X+Y)-h_inf(X)={h_sum - h_x:.12f}, sup(1,2)={s.value:.12f} "
              f"at {s.argmax:.12f} (log 2={math.log(2):.12f}), {elapsed:.3f}s")


def test_criterion_02_main_random_batch(criterion):
    start = time.perf_counter()
    rep = run_random_batch("main", 500, 42)
    elapsed = time.perf_counter() - start
    n_viol, n_ind = rep.count(VIOLATED), rep.count(INDETERMINATE)
    ok = n_viol == 0 and n_ind <= 5 and elapsed < 60
    criterion(2, ok, f"500 pairs: violated={n_viol}, indeterminate={n_ind}, "
                     f"min margin={rep.min_margin:.3e}, {elapsed:.1f}s")


def test_criterion_03_h2_bound(criterion):
    exp_margin = verify_prop_h2(exponential(1)).instances[0].margin
    tri_sq = sci.quad(lambda x: (1 - abs(x - 1)) ** 2, 0, 2, points=[1], epsabs=1e-14)[0]
    unif = verify_prop_h2(uniform()).instances[0]
    rand = [verify_prop_h2(d).instances[0] for d in densities(200)]
    bad = sum(r.margin < -r.budget for r in rand)
    ok = (abs(exp_margin) <= 1e-7 and abs(tri_sq - 2 / 3) <= 1e-12
          and abs(unif.margin - math.log(4 / 3)) <= 1e-6
          and abs(unif.details["h2_sum"] + math.log(tri_sq)) <= 1e-6 and bad == 0)
    criterion(3, ok, f"Exp margin={exp_margin:.2e}, Uniform margin={unif.margin:.9f} "
                     f"(log 4/3={math.log(4 / 3):.9f}), random below budget={bad}/200")


def test_criterion_04_rearrangement(criterion):
    r = decreasing_rearrangement(laplace(1.0))
    x = np.linspace(0, 40, 4001)
    pot_err = float(np.max(np.abs(log_evaluate(r, x) - (math.log(0.5) - 0.5 * x))))
    worst = 0.0
    for d in densities(100):
        levels = sup_norm(d) * np.logspace(-12, 0, 200, endpoint=False)
        rd = decreasing_rearrangement(d)
        worst = max(worst, float(np.max(np.abs(level_measure(rd, levels)
                                               - level_measure(d, levels)))))
    criterion(4, pot_err <= 1e-12 and worst <= 1e-9,
              f"Laplace(1) rearranged vs Exp(1/2) potential error={pot_err:.2e}, "
              f"equimeasurability worst={worst:.2e} over 100x200 levels")


def test_criterion_05_exponentialization_chain(criterion):
    orders = [0.5, 1, 2, math.inf]
    n_bad, worst = 0, math.inf
    for x, y in monotone_pairs(200):
        rep = exponentialization_chain(x, y, orders, t_count=400)
        if not rep.holds:
            n_bad += 1
        worst = min(worst, min(rep.margins()))
    criterion(5, n_bad == 0, f"200 monotone pairs, p in {{0.5,1,2,inf}}: failures={n_bad}, "
                             f"worst entropy gap={worst:.3e}")


def test_criterion_06_transport(criterion):
    worst_exp, worst_push, worst_dom = math.inf, 0.0, math.inf
    for i, (x, y) in enumerate(monotone_pairs(200)):
        m = transport_map(y)
        hi = min(y.support[1], float(y.knots[-1]) + 10)
        worst_exp = min(worst_exp, expansion_check(m, np.linspace(0, hi, 100)))
        t = np.linspace(0.02, 20 / m.peak, 50)
        worst_push = max(worst_push, float(np.max(np.abs(
            pushforward_cdf(m, t) - (1 - np.exp(-m.peak * t))))))
        worst_dom = min(worst_dom, pointwise_domination(x, y, np.linspace(0, 8, 50)))
    ok = worst_exp >= 1 - 1e-10 and worst_push <= 1e-9 and worst_dom >= -1e-10
    criterion(6, ok, f"min phi'={worst_exp:.12f}, pushforward err={worst_push:.2e}, "
                     f"domination worst={worst_dom:.2e} (200 instances)")


def test_criterion_07_discrete_h2(criterion):
    ratio = verify_discrete_h2(geometric(0.5)).ratio
    closed = (1.5 ** 2) / 1.25
    reports = [verify_discrete_h2(random_logconcave_pmf(instance_seed(ACCEPT_SEED, i)))
               for i in range(1000)]
    n_bad = sum(not (r.margin > r.budget) for r in reports)
    trend = [verify_discrete_h2(geometric(lam), with_karamata=False).margin
             for lam in (0.5, 0.9, 0.99, 0.999)]
    ok = abs(ratio - 1.8) <= 1e-12 and abs(closed - 1.8) <= 1e-15 and n_bad == 0 \
        and all(np.diff(trend) < 0) and trend[-1] > 0
    criterion(7, ok, f"geometric(1/2) ratio={ratio:.15f}, non-strict={n_bad}/1000, "
                     f"trend={[f'{t:.2e}' for t in trend]}")


def test_criterion_08_discrete_hinf(criterion):
    reports = [verify_discrete_hinf(random_logconcave_pmf(instance_seed(ACCEPT_SEED, i),
                                                          monotone=True))
               for i in range(1000)]
    n_bad = sum(not (r.ratio > math.exp(-1) and r.margin > r.budget) for r in reports)
    lam = math.exp(-1 / 1001)
    tight = verify_discrete_hinf(geometric(lam)).ratio
    k = np.arange(200_000)
    direct = float(np.max((k + 1) * (1 - lam) * lam ** k))
    in_window = math.exp(-1) < tight < math.exp(-1) + 5e-4 and abs(direct - tight) <= 1e-13
    sym = [verify_symmetric_half(random_symmetric_pmf(instance_seed(ACCEPT_SEED, i)))
           for i in range(500)]
    n_sym_bad = sum(m <= 0 for m in sym)
    ok = n_bad == 0 and in_window and n_sym_bad == 0
    criterion(8, ok, f"monotone non-strict={n_bad}/1000, geometric(e^-1/1001) ratio="
                     f"{tight:.9f} (1/e={math.exp(-1):.9f}), symmetric +1/2 margin <= 0 on "
                     f"{n_sym_bad}/500 (min {min(sym):.4f})")


def test_criterion_09_cross_identities(criterion):
    worst_c = 0.0
    for d in densities(100):
        h_inf = -math.log(conv_sup_norm(d, reflect(d)).value)
        worst_c = max(worst_c, abs(renyi(d, 2) - h_inf))
    worst_d = 0.0
    for i in range(100):
        f = random_logconcave_pmf(instance_seed(ACCEPT_SEED, i))
        diff = discrete_convolve(f, reflect_pmf(f))
        worst_d = max(worst_d, abs(renyi_discrete(f, 2) - renyi_discrete(diff, math.inf)))
    criterion(9, worst_c <= 1e-7 and worst_d <= 1e-13,
              f"continuous worst={worst_c:.2e}, discrete worst={worst_d:.2e}")


def test_criterion_10_search(criterion):
    start = time.perf_counter()
    inf_res = maximize_increment(SearchConfig(p=math.inf, n_knots=12, restarts=8))
    two_res = maximize_increment(SearchConfig(p=2, n_knots=12, restarts=8))
    elapsed = time.perf_counter() - start
    sh_res = maximize_increment(SearchConfig(p=1, n_knots=12, restarts=8))
    caps = [(inf_res, 1.0), (two_res, math.log(2)), (sh_res, math.log(2))]
    within_caps = all(r.best_delta <= cap + 1e-6 + r.budget for r, cap in caps)
    ok = (0.99 <= inf_res.best_delta <= 1 + 1e-6
          and math.log(2) - 1e-2 <= two_res.best_delta <= math.log(2) + 1e-6
          and within_caps and elapsed < 300)
    criterion(10, ok, f"p=inf delta={inf_res.best_delta:.7f} ({inf_res.classification}), "
                      f"p=2 delta={two_res.best_delta:.7f}, shannon delta="
                      f"{sh_res.best_delta:.7f}, caps respected={within_caps}, {elapsed:.0f}s")
