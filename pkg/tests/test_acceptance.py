"""The twelve acceptance criteria, each at its stated tolerance.

Every test prints one ``criterion N: PASS/FAIL`` line (collected again in
the terminal summary) before asserting.
"""

from __future__ import annotations

import itertools
import math
import time
from pathlib import Path

import numpy as np

from _oracles import explicit_dual, random_lp
from rankchoice.bench import mmnl_complexity_sweep
from rankchoice.core import (
    Assortment,
    ObservationScheme,
    PriceVector,
    SparseChoiceModel,
    all_rankings,
    exact_marginals,
    revenue,
)
from rankchoice.lp import LpCyclingError, LpProblem, solve
from rankchoice.models import (
    GenerativeSpec,
    amzn,
    amzn_table,
    amzn_utilities,
    family_prices,
    generate_random_model,
    make_family_model,
    simulate_pairwise_marginals,
    transaction_marginals,
)
from rankchoice.robust import (
    RobustQuery,
    robust_bruteforce,
    robust_cutting_plane,
    robust_ranking_exact,
    robust_sampled_dual,
    uniform_sampler,
)
from rankchoice.sparse import bfs_sparsity_audit, recovery_phase_diagram, sparsify, sparsify_sample_size

TOL = 1e-6


def random_assortment(n: int, rng: np.random.Generator) -> Assortment:
    return Assortment.of(rng.choice(np.arange(1, n), size=int(rng.integers(1, n)), replace=False))


def sparse_instance(seed, n: int, kmax: int = 6):
    rng = np.random.default_rng(seed)
    model = generate_random_model(GenerativeSpec(int(rng.integers(2, kmax + 1))), n, rng)
    prices = PriceVector((0.0,) + tuple(np.round(rng.uniform(1, 10, size=n - 1), 2)))
    return model, random_assortment(n, rng), prices


def test_criterion_01_ranking_exact_equals_bruteforce(report):
    start = time.perf_counter()
    worst = 0.0
    for seed in range(100):
        model, target, prices = sparse_instance([1, seed], 5)
        q = RobustQuery(exact_marginals(model, ObservationScheme.ranking(5)), target, prices)
        worst = max(worst, abs(robust_ranking_exact(q).bound - robust_bruteforce(q).bound))
    elapsed = time.perf_counter() - start
    ok = worst <= TOL and elapsed < 60
    report(1, ok, f"ranking LP vs brute force, 100 pairs at N=5: max diff {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_criterion_02_cutting_plane(report):
    worst_n4 = 0.0
    for seed in range(50):
        model, target, prices = sparse_instance([2, seed], 4)
        q = RobustQuery(exact_marginals(model, ObservationScheme.comparison(4)), target, prices)
        worst_n4 = max(worst_n4, abs(robust_cutting_plane(q, 1).bound - robust_bruteforce(q).bound))
    monotone, below = True, True
    for seed in range(10):
        model, target, prices = sparse_instance([3, seed], 5)
        q = RobustQuery(exact_marginals(model, ObservationScheme.comparison(5)), target, prices)
        rounds = robust_cutting_plane(q, 6).rounds
        monotone &= all(b >= a - TOL for a, b in zip(rounds, rounds[1:]))
        below &= max(rounds) <= robust_bruteforce(q).bound + TOL
    ok = worst_n4 <= TOL and monotone and below
    report(2, ok, f"round-1 vs brute at N=4 (50): max diff {worst_n4:.2e}; N=5 (10) monotone={monotone} "
                  f"<=brute={below}")
    assert ok


def _sandwich(family: str, seed: int) -> int:
    rng = np.random.default_rng([4, seed])
    model = make_family_model(family, 6, rng)
    prices = family_prices(family, 6)
    y = simulate_pairwise_marginals(model)
    violations = 0
    for _ in range(20):
        m = random_assortment(6, rng)
        true = revenue(model, m, prices)
        lo = robust_bruteforce(RobustQuery(y, m, prices, "min")).bound
        hi = robust_bruteforce(RobustQuery(y, m, prices, "max")).bound
        violations += not (lo <= true + TOL and true <= hi + TOL)
    return violations


def test_criterion_03_lower_bound_sandwich(report):
    families = ["mnl-rand", "cnl-rand", "mmnl-rand"]
    violations = sum(_sandwich(families[i % 3], i) for i in range(50))
    ok = violations == 0
    report(3, ok, f"min <= true <= max over 50 MNL/CNL/MMNL instances x 20 assortments at N=6: "
                  f"{violations} violations")
    assert ok


def test_criterion_04_transaction_self_consistency(report):
    worst = 0.0
    for seed in range(30):
        rng = np.random.default_rng([5, seed])
        family = ("mnl-rand", "cnl-rand", "sparse")[seed % 3]
        model = (generate_random_model(GenerativeSpec(5), 5, rng) if family == "sparse"
                 else make_family_model(family, 5, rng))
        prices = family_prices("amzn", 5)
        offered = []
        while len(offered) < 3:
            a = random_assortment(5, rng)
            if a not in offered:
                offered.append(a)
        y = transaction_marginals(model, offered)
        target = offered[int(rng.integers(3))]
        a = offered.index(target)
        rows = [y.scheme.row_of(("sale", j, a)) for j in target.members]
        direct = float(sum(prices.prices[j] * y.y[r] for j, r in zip(target.members, rows)))
        worst = max(worst, abs(robust_bruteforce(RobustQuery(y, target, prices)).bound - direct))
    ok = worst <= TOL
    report(4, ok, f"|robust min - sum p_j y_jM| over 30 transaction instances: max {worst:.2e}")
    assert ok


def test_criterion_05_constraint_sampling(report):
    monotone, close, exact = True, 0.0, 0.0
    everything = all_rankings(5)
    for seed in range(10):
        model, target, prices = sparse_instance([6, seed], 5)
        q = RobustQuery(exact_marginals(model, ObservationScheme.comparison(5)), target, prices)
        brute = robust_bruteforce(q).bound
        draws = uniform_sampler(5)(np.random.default_rng([6, seed]), 10_000)
        bounds = []
        for s in (100, 1000, 10_000):
            res = robust_sampled_dual(q, rank_lists=draws[:s])
            bounds.append(res.bound if res.ok else math.inf)
        monotone &= all(b <= a + TOL for a, b in zip(bounds, bounds[1:]))
        close = max(close, abs(bounds[-1] - brute))
        exact = max(exact, abs(robust_sampled_dual(q, rank_lists=everything).bound - brute))
    ok = monotone and close <= TOL and exact <= TOL
    report(5, ok, f"nested 1e2/1e3/1e4 samples at N=5 (10 instances): non-increasing={monotone}, "
                  f"|1e4 - brute| {close:.2e}, |all 120 - brute| {exact:.2e}")
    assert ok


def test_criterion_06_sparsest_fit_recovery(report):
    regimes = [("ranking", 10, 5), ("topset", 100, 2), ("comparison", 30, 2)]
    counts = [recovery_phase_diagram(kind, [n], [k], trials=100, seed=8)[0].recovered for kind, n, k in regimes]
    ok = all(c >= 95 for c in counts)
    detail = ", ".join(f"{kind} N={n} K={k}: {c}/100" for (kind, n, k), c in zip(regimes, counts))
    report(6, ok, detail)
    assert ok


def test_criterion_07_bfs_support_audit(report):
    # generic data: lambda drawn from a flat Dirichlet over every rank list, so y has a density on the hull
    ranks = all_rankings(5)
    in_gap, in_bound = 0, 0
    for i in range(50):
        rng = np.random.default_rng([9, i])
        model = SparseChoiceModel.from_weights(ranks, rng.dirichlet(np.ones(len(ranks))))
        y = exact_marginals(model, ObservationScheme.ranking(5))
        prices = PriceVector((0.0,) + tuple(rng.uniform(1, 10, size=4)))
        audit = bfs_sparsity_audit(y, random_assortment(5, rng), prices)
        in_gap += 0 <= audit.gap <= 1
        in_bound += audit.within_bfs_bound
    ok = in_gap >= 48 and in_bound == 50
    report(7, ok, f"generic N=5 ranking data: gap in {{0,1}} for {in_gap}/50, support <= m+1 for {in_bound}/50")
    assert ok


def test_criterion_08_sparsification(report):
    n, c, eps = 7, 3, 0.1
    prices = PriceVector.unit(n)
    truth = amzn(n)
    approx = sparsify(truth, eps, c, prices, np.random.default_rng(10))
    worst = 0.0
    for size in range(1, c + 1):
        for prods in itertools.combinations(range(1, n), size):
            m = Assortment(prods)
            worst = max(worst, abs(revenue(truth, m, prices) - revenue(approx, m, prices)))
    ok = worst <= eps
    report(8, ok, f"N=7 C=3 eps=0.1, M={sparsify_sample_size(eps, c, 1.0, n)} draws, {approx.k} rank lists: "
                  f"max |R - R_hat| {worst:.4f}")
    assert ok


def test_criterion_09_amzn_fidelity(report):
    table = amzn_table()
    theta0, theta1, theta2 = table["theta"]
    col = {name: k for k, name in enumerate(table["columns"])}
    row = next(r for r in table["products"] if r[col["product"]] == 12)
    v12 = theta0 + theta1 * row[col["price_per_disc"]] + theta2 * row[col["helpful_votes"]]
    printed = np.array([r[col["mean_utility"]] for r in table["products"]])
    worst = float(np.max(np.abs(amzn_utilities(16) - printed)))
    ok = abs(v12 - (-3.589)) <= 1e-3 and worst <= 1e-3
    report(9, ok, f"product 12 utility {v12:.4f} (printed -3.589); max deviation over 15 products {worst:.2e}")
    assert ok


def test_criterion_10_mmnl_complexity(report):
    sweep = mmnl_complexity_sweep([0.1, 0.25, 0.4], n=6, instances=10, assortments=10, seed=0)
    means = [e for _, e in sweep]
    ok = all(b >= a for a, b in zip(means, means[1:]))
    report(10, ok, "MMNL-Rand mean relative error by s: " + ", ".join(f"s={s}: {e:.4f}" for s, e in sweep))
    assert ok


def test_criterion_11_case_study_stated(report):
    readme = (Path(__file__).resolve().parents[1] / "README.md").read_text()
    ok = "not reproduced" in readme
    report(11, ok, "automaker case-study percentages need proprietary data: stated as not reproduced; "
                   "k-fold harness validated on synthetic data (criteria 3-5, test_bench)")
    assert ok


def test_criterion_12_lp_engine(report):
    worst, cycled, failed = 0.0, 0, 0
    for seed in range(200):
        c, A, rel, b = random_lp(np.random.default_rng([12, seed]))
        obj, At, drel, rhs, lo, hi = explicit_dual(c, A, rel, b)
        try:
            # debug mode raises as soon as a pivot would return to a basis already visited
            primal = solve(LpProblem(c, A, rel, b), debug=True)
            dual = solve(LpProblem(obj, At, drel, rhs, lower=lo, upper=hi, sense="max"), debug=True)
        except LpCyclingError:
            cycled += 1
            continue
        if not (primal.ok and dual.ok):
            failed += 1
            continue
        worst = max(worst, abs(primal.objective - dual.objective))
    ok = worst <= TOL and cycled == 0 and failed == 0
    report(12, ok, f"200 random LPs: max |primal - explicit dual| {worst:.2e}, {cycled} cycled, "
                   f"{failed} not optimal")
    assert ok
