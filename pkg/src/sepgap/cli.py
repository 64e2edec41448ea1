"""Command-line entry point: ``sepgap <command> [options]``.

Exit status is 0 when every check passes, 1 when a check fails and 2 on
usage or validation errors. Tables go to stdout; files are written only
to paths given with ``--out``.
"""

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import classical, gap, locc, separable
from .measures import EQMeasure

DEFAULT_Q, DEFAULT_R, DEFAULT_ALPHA = 0.2, 0.7, 0.08
FIXTURES = ("projective-zz", "partial-diagonal", "full-reveal-pc", "random-pc-seed7")


def _g(v):
    return "-" if v is None else f"{v:.17g}"


def _print_checks(checks, out):
    failed = []
    for name, ok, detail in checks:
        out.write(f"[{'pass' if ok else 'FAIL'}] {name}: {detail}\n")
        if not ok:
            failed.append(name)
    return failed


def _unit_q(value):
    q = float(value)
    if not 0.0 < q < 1.0:
        raise argparse.ArgumentTypeError(f"Q must lie in (0, 1), got {value}")
    return q


def _write(path, text):
    Path(path).write_text(text)


def load_fixture_text(name):
    if name not in FIXTURES:
        raise ValueError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    return resources.files("sepgap").joinpath("fixtures", f"{name}.json").read_text()


def _load_document(args, random_source=None):
    if getattr(args, "random", False):
        text = random_source(args.seed)
    elif args.fixture:
        text = load_fixture_text(args.fixture)
    elif args.input:
        text = Path(args.input).read_text()
    else:
        raise ValueError("give --in PATH, --fixture NAME or --random")
    return json.loads(text), text


# -- commands -----------------------------------------------------------------


def cmd_verify_separable(args, out):
    q, tol = args.q, args.tol if args.tol is not None else 1e-12
    inst = separable.build_optimal_instrument(q)
    m = EQMeasure(q)
    res = separable.evaluate_ebar(inst, m)
    out.write(f"optimal separable instrument at Q = {_g(q)}\n")
    out.write("k  w  x  y  p  q  p+  p-  C+  C-\n")
    for k, (e, st) in enumerate(zip(inst, res.stats), start=1):
        out.write(
            f"{k}  {_g(e.w)}  {_g(e.x)}  {_g(e.y)}  {_g(st.p)}  {_g(st.q)}  "
            f"{_g(st.p_plus)}  {_g(st.p_minus)}  {_g(st.c_plus)}  {_g(st.c_minus)}\n"
        )
    out.write(f"ebar = {_g(res.ebar)}\nefficiency = {_g(res.efficiency)}\n")
    target = m(1.0 - q)
    checks = [
        ("completeness", inst.completeness_error() <= 1e-10, _g(inst.completeness_error())),
        ("efficiency >= Q", separable.check_efficiency(inst, q), _g(res.efficiency)),
        ("ebar = E(1-Q)", abs(res.ebar - target) <= tol, f"{_g(res.ebar)} vs {_g(target)}"),
        (
            "C(3,4) = 1-Q",
            all(abs(st.c_plus - (1 - q)) <= tol and abs(st.c_minus - (1 - q)) <= tol for st in res.stats[2:]),
            _g(res.stats[2].c_plus),
        ),
        ("p(1,2) = 0", all(st.p <= separable.ZERO_P for st in res.stats[:2]), _g(res.stats[0].p)),
    ]
    if args.out:
        _write(args.out, separable.instrument_to_json(inst))
    return _print_checks(checks, out)


def cmd_simulate(args, out):
    q, r, alpha = args.q, args.r, args.alpha
    gap.check_feasible(q, r, alpha)
    doc, text = _load_document(
        args, lambda seed: locc.protocol_to_json(locc.random_protocol(seed, depth=6))
    )
    m = EQMeasure(q)
    kbar_value = None
    if classical.is_pc_document(doc):
        pc = classical.pc_from_json(text)
        proto = classical.compile_pc_to_locc(pc)
        kbar_value = classical.kbar(classical.channel_of_pc(pc), m, q).kbar
    else:
        proto = locc.protocol_from_json(text)
    sim = locc.simulate_full(proto)
    records = sim.branches
    cls = locc.classify(records, r)
    report = locc.audit_inequalities(records, cls, q, r, alpha, measure=m)
    ebar, bound_variant = locc.ebar_locc(records, m)
    global_bound = locc.global_bound(q, r, alpha, m)

    out.write(f"branches: {len(records)} (pruned {sim.pruned})\n")
    out.write("history  x  y  p  q  C+  C-  class\n")
    for rec in records:
        hist = ".".join(str(k) for k in rec.history)
        out.write(
            f"{hist}  {_g(rec.x)}  {_g(rec.y)}  {_g(rec.p)}  {_g(rec.q)}  "
            f"{_g(rec.stats.c_plus)}  {_g(rec.stats.c_minus)}  {cls.label(rec.history)}\n"
        )
    out.write(f"efficiency = {_g(report.efficiency)} (meets Q: {report.meets_efficiency})\n")
    for c in report.checks:
        out.write(f"  {c.status:4}  {c.name}: {_g(c.lhs)} >= {_g(c.rhs)}\n")
    out.write(f"ebar = {_g(ebar)}\nbound variant = {_g(bound_variant)}\n")
    out.write(f"E(1-Q) - delta_low = {_g(global_bound)}\n")
    if kbar_value is not None:
        out.write(f"kbar = {_g(kbar_value)}\n")

    tol = args.tol if args.tol is not None else 1e-10
    checks = [
        ("zigzag", locc.verify_zigzag(records), "frozen coordinates preserved"),
        (
            "completeness",
            float(np.abs(locc.leaf_povm_sum(records) - np.eye(4)).max()) <= 1e-10,
            "sum of leaf POVM elements",
        ),
        ("entry consistency", locc.entry_consistency_error(records, cls) <= 1e-10, "entry sums"),
        ("audits", report.passed, f"{sum(c.passed for c in report.checks)}/{len(report.checks)}"),
    ]
    if kbar_value is not None:
        checks.append(("ebar = kbar", abs(ebar - kbar_value) <= tol, f"{_g(ebar)} vs {_g(kbar_value)}"))
    if args.out:
        _write(
            args.out,
            json.dumps(
                {
                    "branches": [
                        {
                            "history": list(rec.history),
                            "x": rec.x,
                            "y": rec.y,
                            "p": rec.p,
                            "q": rec.q,
                            "c_plus": rec.stats.c_plus,
                            "c_minus": rec.stats.c_minus,
                            "class": cls.label(rec.history),
                        }
                        for rec in records
                    ],
                    "pruned": sim.pruned,
                    "efficiency": report.efficiency,
                    "audits": [
                        {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "status": c.status}
                        for c in report.checks
                    ],
                    "ebar": ebar,
                    "bound_variant": bound_variant,
                    "global_bound": global_bound,
                    "kbar": kbar_value,
                },
                indent=1,
            ),
        )
    return _print_checks(checks, out)


def cmd_gap(args, out):
    q, r, alpha = args.q, args.r, args.alpha
    tol = args.tol if args.tol is not None else 1e-4
    res = gap.delta_low(q, r, alpha)
    grid_min = gap.delta_min_grid(q, r, alpha, res.star.mu_star, n=args.grid)
    out.write(f"Q = {_g(q)}  r = {_g(r)}  alpha = {_g(alpha)}\n")
    out.write(f"x* = {_g(res.star.x_star)}\ny* = {_g(res.star.y_star)}\nmu* = {_g(res.star.mu_star)}\n")
    out.write(f"delta_min (analytic) = {_g(res.delta_min)}\n")
    out.write(f"delta_min (grid {args.grid}) = {_g(grid_min)}\n")
    out.write(f"delta_low = {_g(res.delta_low)}\n")
    checks = [
        ("analytic vs grid", abs(res.delta_min - grid_min) <= tol, _g(abs(res.delta_min - grid_min))),
        ("delta_min > 0", res.delta_min > 0, _g(res.delta_min)),
        ("0 < mu* < 1/(1-Q)", 0 < res.star.mu_star < 1 / (1 - q), _g(res.star.mu_star)),
        ("delta_low > 0", res.delta_low > 0, _g(res.delta_low)),
    ]
    return _print_checks(checks, out)


def _parse_q_list(text):
    return [_unit_q(v) for v in text.split(",") if v.strip()]


def cmd_figure2(args, out):
    qs = _parse_q_list(args.qs) if args.qs else list(gap.SWEEP_Q)
    rows = gap.sweep_figure2(qs, grid=args.grid, phase=args.phase, workers=args.jobs)
    out.write("Q  delta_low  r_opt  alpha_opt\n")
    for row in rows:
        out.write(f"{_g(row.q)}  {_g(row.delta_low)}  {_g(row.r_opt)}  {_g(row.alpha_opt)}\n")
    _write(args.out, gap.figure2_csv(rows))
    checks = [("delta_low > 0", all(row.delta_low > 0 for row in rows), f"{len(rows)} rows")]
    return _print_checks(checks, out)


def cmd_classical(args, out):
    q = args.q
    tol = args.tol if args.tol is not None else 1e-12
    agent = classical.build_classical_separable(q)
    ch = agent.channel()
    m = EQMeasure(q)
    res = classical.kbar(ch, m, q)
    out.write(f"classical separable agent at Q = {_g(q)}\n")
    out.write("k  w  x  y  p_cl  q_cl  lambda_cl\n")
    for (w, x, y), st in zip(agent.elements, classical.channel_stats(ch)):
        out.write(f"{st.outcome}  {_g(w)}  {_g(x)}  {_g(y)}  {_g(st.p_cl)}  {_g(st.q_cl)}  {_g(st.lambda_cl)}\n")
    out.write(f"kbar = {_g(res.kbar)}\nefficiency = {_g(res.efficiency)}\n")
    target = m(1.0 - q)
    checks = [
        ("kbar = E(1-Q)", abs(res.kbar - target) <= tol, f"{_g(res.kbar)} vs {_g(target)}"),
        ("efficiency = Q", abs(res.efficiency - q) <= tol, _g(res.efficiency)),
        ("separable form", classical.is_separable_channel(ch), _g(classical.factorization_error(ch))),
    ]
    if args.out:
        _write(args.out, classical.channel_to_json(ch))
    return _print_checks(checks, out)


def cmd_compile_pc(args, out):
    q = args.q
    tol = args.tol if args.tol is not None else 1e-10
    _, text = _load_document(
        args, lambda seed: classical.pc_to_json(classical.random_pc_protocol(seed))
    )
    pc = classical.pc_from_json(text)
    proto = classical.compile_pc_to_locc(pc)
    rep = classical.compile_report(pc, EQMeasure(q), q)
    out.write(f"max |p - p_cl| = {_g(rep.max_p_error)}\n")
    out.write(f"max |q - q_cl| = {_g(rep.max_q_error)}\n")
    out.write(f"max state/lambda deviation = {_g(rep.max_lambda_error)}\n")
    out.write(f"max off-diagonal = {_g(rep.max_offdiag)}\n")
    out.write(f"unmatched outcomes = {rep.unmatched}\n")
    out.write(f"ebar = {_g(rep.ebar)}\nkbar = {_g(rep.kbar)}\n")
    if args.out:
        _write(args.out, locc.protocol_to_json(proto))
    return _print_checks([("compiled protocol reproduces the channel", rep.passed(tol), f"tol {_g(tol)}")], out)


def cmd_fixture(args, out):
    text = load_fixture_text(args.name)
    if args.out:
        _write(args.out, text)
    else:
        out.write(text)
    return []


def build_parser():
    parser = argparse.ArgumentParser(prog="sepgap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, r_alpha=False, io=False):
        p.add_argument("--q", type=_unit_q, default=DEFAULT_Q, help="efficiency target Q")
        if r_alpha:
            p.add_argument("--r", type=float, default=DEFAULT_R)
            p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
        if io:
            p.add_argument("--in", dest="input", help="input JSON path")
            p.add_argument("--fixture", choices=FIXTURES, help="use a bundled fixture")
            p.add_argument("--random", action="store_true", help="use a protocol drawn from --seed")
        p.add_argument("--out", help="output path")
        p.add_argument("--tol", type=float, help="override the pass tolerance")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized steps")

    common(sub.add_parser("verify-separable", help="check the optimal separable instrument"))
    common(sub.add_parser("simulate", help="simulate and audit an LOCC or PC protocol"), True, True)
    p = sub.add_parser("gap", help="star point, delta_min and delta_low")
    common(p, True)
    p.add_argument("--grid", type=int, default=gap.DEFAULT_GRID)
    p = sub.add_parser("figure2", help="optimized gap sweep to CSV")
    common(p)
    p.set_defaults(out=None)
    p.add_argument("--qs", help="comma-separated Q values")
    p.add_argument("--grid", type=int, default=200, help="coarse optimizer grid size")
    p.add_argument("--phase", type=float, default=0.5, help="coarse grid offset in cells")
    p.add_argument("--jobs", type=int, default=None, help="worker processes")
    common(sub.add_parser("classical", help="classical separable agent and K-bar"))
    common(sub.add_parser("compile-pc", help="compile a PC protocol to LOCC"), io=True)
    p = sub.add_parser("fixture", help="print or save a bundled fixture")
    p.add_argument("name", choices=FIXTURES)
    p.add_argument("--out")
    return parser


COMMANDS = {
    "verify-separable": cmd_verify_separable,
    "simulate": cmd_simulate,
    "gap": cmd_gap,
    "figure2": cmd_figure2,
    "classical": cmd_classical,
    "compile-pc": cmd_compile_pc,
    "fixture": cmd_fixture,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "figure2" and not args.out:
        parser.error("figure2 requires --out PATH")
    try:
        failed = COMMANDS[args.command](args, out)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    if failed:
        sys.stderr.write(f"failed checks: {', '.join(failed)}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
