"""Acceptance criteria, one test each; every test logs a PASS/FAIL line.

The lines are printed at the end of the pytest run under
"acceptance criteria" (and inline with ``-s``).
"""

import time

import numpy as np

from sepgap import algebra, classical, gap, locc, separable
from sepgap.measures import EQMeasure, mu_condition_check

SEED = 20240611
REFERENCE = (0.2, 0.7, 0.08)
Q_AUDIT = 0.2
RA_FEASIBLE = ((0.7, 0.08), (0.5, 0.05), (0.9, 0.3), (0.6, 0.12))
Q_GRID = tuple(k / 20 for k in range(1, 20))


def test_ac1_optimal_separable_instrument(acceptance_log):
    t0 = time.perf_counter()
    q = 0.2
    inst = separable.build_optimal_instrument(q)
    ebar, stats, eff = separable.evaluate_ebar(inst, EQMeasure(q))
    elapsed = time.perf_counter() - t0
    errs = [
        abs(stats[0].q - 0.1), abs(stats[1].q - 0.1),
        abs(stats[0].p), abs(stats[1].p),
        abs(ebar - 1.0), abs(eff - 0.2),
    ]
    for st in stats[2:]:
        errs += [abs(st.p_plus - 0.5), abs(st.p_minus - 0.5),
                 abs(st.c_plus - 0.8), abs(st.c_minus - 0.8)]
    worst = max(errs)
    ok = worst <= 1e-12 and elapsed < 1.0
    acceptance_log("AC1", ok, f"optimal instrument at Q=0.2: max error {worst:.2e}, {elapsed:.3f}s")
    assert ok


def test_ac2_concurrence_bound(acceptance_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    n = 100_000
    a = rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))
    b = rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))
    _, x, _ = algebra.gram_params_batch(algebra.gram(a))
    _, y, _ = algebra.gram_params_batch(algebra.gram(b))
    bound = separable.c_bound(x, y)
    worst = -np.inf
    for bell in (algebra.PHI_PLUS, algebra.PHI_MINUS):
        c = algebra.concurrence_pure(algebra.apply_product_kraus(a, b, bell))
        worst = max(worst, float(np.max(c - bound)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10.0
    acceptance_log("AC2", ok, f"{n} Kraus pairs x 2 Bell states: max(C - bound) = {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_ac3_zigzag_and_completeness(corpus, acceptance_log):
    zigzag = all(locc.verify_zigzag(sim.branches) for _, _, sim in corpus)
    leaf_err = max(
        float(np.abs(locc.leaf_povm_sum(sim.branches) - np.eye(4)).max()) for _, _, sim in corpus
    )
    parent_err = max(locc.parent_child_error(sim) for _, _, sim in corpus)
    recompute = max(locc.trajectory_recompute_error(sim.branches) for _, _, sim in corpus)
    depth = max(proto.depth() for _, proto, _ in corpus)
    ok = zigzag and leaf_err <= 1e-10 and parent_err <= 1e-10 and depth <= 6
    acceptance_log(
        "AC3", ok,
        f"{len(corpus)} protocols (depth <= {depth}): zigzag={zigzag}, leaf sum {leaf_err:.1e}, "
        f"parent-child {parent_err:.1e}, recomputed coords {recompute:.1e}",
    )
    assert ok


def test_ac4_discriminating_leaves_enter_regions(corpus, acceptance_log):
    counter = 0
    zero_leaves = 0
    for r in (0.5, 0.7, 0.9):
        assert gap.r_min(Q_AUDIT) < r < 1.0
        for _, _, sim in corpus:
            for rec in sim.branches:
                if rec.stats.p <= separable.ZERO_P:
                    zero_leaves += 1
                    if locc.first_entry(rec.trajectory, r)[1] == 0:
                        counter += 1
    ok = counter == 0 and zero_leaves > 0
    acceptance_log("AC4", ok, f"{zero_leaves} (leaf, r) cases with p = 0: {counter} counterexamples")
    assert ok


def _efficient(corpus, q):
    return [(name, sim) for name, _, sim in corpus if locc.efficiency(sim.branches) >= q - 1e-12]


def test_ac5_inequality_audits(corpus, acceptance_log):
    m = EQMeasure(Q_AUDIT)
    efficient = _efficient(corpus, Q_AUDIT)
    failures = []
    for r, alpha in RA_FEASIBLE:
        for name, sim in efficient:
            report = locc.audit_inequalities(
                sim.branches, locc.classify(sim.branches, r), Q_AUDIT, r, alpha, m
            )
            if not (report.passed and all(c.applicable for c in report.checks)):
                failures.append((name, r, alpha))
    ok = not failures and len(efficient) > 0
    acceptance_log(
        "AC5", ok,
        f"{len(efficient)} protocols meeting Q={Q_AUDIT} x {len(RA_FEASIBLE)} (r, alpha): "
        f"{len(failures)} audit failures",
    )
    assert ok, failures[:5]


def test_ac6_delta_min_cross_validation(acceptance_log):
    t0 = time.perf_counter()
    q, r, a = REFERENCE
    star = gap.solve_star_point(q, r, a)
    analytic = gap.delta_min_analytic(q, r, a)
    grid = gap.delta_min_grid(q, r, a, star.mu_star, n=2001)
    elapsed = time.perf_counter() - t0
    diff = abs(analytic - grid)
    ok = diff <= 1e-4 and analytic > 0 and 0 < star.mu_star < 1.25 and elapsed < 30.0
    acceptance_log(
        "AC6", ok,
        f"delta_min analytic {analytic:.12g} vs grid {grid:.12g} (diff {diff:.1e}), "
        f"mu* = {star.mu_star:.6g}, {elapsed:.2f}s",
    )
    assert ok


def test_ac7_global_locc_bound(corpus, acceptance_log):
    m = EQMeasure(Q_AUDIT)
    efficient = _efficient(corpus, Q_AUDIT)
    opt = gap.optimize_gap(Q_AUDIT)
    params = list(RA_FEASIBLE) + [(opt.params.r, opt.params.alpha)]
    worst = -np.inf
    for r, alpha in params:
        limit = locc.global_bound(Q_AUDIT, r, alpha, m)
        for _, sim in efficient:
            worst = max(worst, locc.ebar_locc(sim.branches, m)[0] - limit)
    ok = worst <= 1e-9 and len(efficient) > 0
    acceptance_log(
        "AC7", ok,
        f"{len(efficient)} protocols x {len(params)} (r, alpha): max(ebar - bound) = {worst:.4g}",
    )
    assert ok


def test_ac8_figure2_sweep(acceptance_log):
    t0 = time.perf_counter()
    first = gap.sweep_figure2(Q_GRID, phase=0.5)
    second = gap.sweep_figure2(Q_GRID, phase=0.25)
    ends = gap.sweep_figure2((0.005, 0.995))
    repeat = gap.sweep_figure2(Q_GRID, phase=0.5)
    elapsed = time.perf_counter() - t0
    positive = all(row.delta_low > 0 for row in first)
    rel = max(abs(a.delta_low - b.delta_low) / a.delta_low for a, b in zip(first, second))
    end_vals = [row.delta_low for row in ends]
    deterministic = gap.figure2_csv(first) == gap.figure2_csv(repeat)
    ok = (
        positive and rel <= 1e-5 and all(0 < v <= 1e-3 for v in end_vals)
        and deterministic and elapsed < 300.0
    )
    peak = max(first, key=lambda row: row.delta_low)
    acceptance_log(
        "AC8", ok,
        f"19-point sweep positive={positive}, restart rel diff {rel:.1e}, "
        f"endpoints {end_vals[0]:.3e}/{end_vals[1]:.3e}, peak {peak.delta_low:.4g} at Q={peak.q}, "
        f"deterministic={deterministic}, {elapsed:.1f}s",
    )
    assert ok


def test_ac9_classical_analogue(acceptance_log):
    kbar_err = max(
        abs(classical.kbar(classical.build_classical_separable(q).channel(), EQMeasure(q), q).kbar - 1.0)
        for q in Q_GRID
    )
    m = EQMeasure(Q_AUDIT)
    reports = [
        classical.compile_report(classical.random_pc_protocol(SEED + i), m, Q_AUDIT)
        for i in range(100)
    ]
    failed = sum(not rep.passed(1e-10) for rep in reports)
    worst = max(
        max(rep.max_p_error, rep.max_q_error, rep.max_lambda_error, abs(rep.ebar - rep.kbar))
        for rep in reports
    )
    ok = kbar_err <= 1e-12 and failed == 0
    acceptance_log(
        "AC9", ok,
        f"K-bar of separable agent on 19 Q values: max |K-bar - 1| = {kbar_err:.1e}; "
        f"100 compiled PC protocols: {failed} failures, max deviation {worst:.1e}",
    )
    assert ok


def test_ac10_mu_condition(acceptance_log):
    qs = [k / 10 for k in range(1, 10)]
    holds = [
        mu_condition_check(EQMeasure(q), q, f / (1 - q), 10_000) for q in qs for f in (0.1, 0.5, 0.9, 0.99)
    ]
    fails = [
        mu_condition_check(EQMeasure(q), q, f / (1 - q), 10_000) for q in qs for f in (1.5, 2.0, 3.0)
    ]
    ok = all(holds) and not any(fails)
    acceptance_log(
        "AC10", ok,
        f"mu < 1/(1-Q): {sum(holds)}/{len(holds)} pass; mu >= 1.5/(1-Q): {sum(not f for f in fails)}/{len(fails)} fail",
    )
    assert ok
