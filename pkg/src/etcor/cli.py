"""Command-line front end.

Exit codes: 0 ok, 1 assumption failure, 2 parse/usage error, 3 divergence.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import analysis, regulator, sim
from .controller import Mode
from .errors import ConfigError, DivergenceError, EtcorError, NumericError
from .graph import check_assumptions
from .scenario import example_scenario_path, load_scenario

EXIT_OK, EXIT_ASSUMPTION, EXIT_PARSE, EXIT_DIVERGED = 0, 1, 2, 3
REPORT_SCHEMA = "etcor-report/1"


def _load(args):
    path = args.scenario or str(example_scenario_path())
    s = load_scenario(path)
    kw = {}
    if args.dt is not None:
        kw["dt"] = args.dt
    if args.horizon is not None:
        kw["horizon"] = args.horizon
    if getattr(args, "decimate", None) is not None:
        kw["decimate"] = args.decimate
    if kw:
        s = s.with_integrator(**kw)
    return s


def assumption_report(s):
    """Ordered (label, passed, detail) rows for every standing assumption."""
    rows = [("exosystem: S semi-simple with imaginary-axis spectrum",
             s.exosystem.satisfies_assumption1(), "")]
    for i, p in enumerate(s.agents, 1):
        lam = np.linalg.eigvals(p.A1).real.max()
        rows.append((f"plant: agent {i} minimum phase", p.is_minimum_phase(),
                     f"max Re eig(A1) = {lam:.4g}"))
    for key, ok in check_assumptions(s.topology).items():
        rows.append((f"graph: {key.replace('_', ' ')}", ok, ""))
    return rows


def _regulator_rows(s):
    cp, sols = regulator.synthesize(s)
    rows = []
    for i, sol in enumerate(sols, 1):
        for name, val in sol.residuals.items():
            rows.append((i, name, val))
    return cp, sols, rows


def cmd_check(args, out=None):
    out = out or sys.stdout
    s = _load(args)
    rows = assumption_report(s)
    ok = all(r[1] for r in rows)
    for label, passed, detail in rows:
        print(f"{'PASS' if passed else 'FAIL'}  {label}" + (f"  ({detail})" if detail else ""), file=out)
    try:
        _, _, res = _regulator_rows(s)
        worst = max(r[2] for r in res)
        res_ok = worst <= 1e-9
        print(f"{'PASS' if res_ok else 'FAIL'}  regulator equation residuals (max {worst:.3g})", file=out)
    except EtcorError as exc:
        res_ok = False
        print(f"FAIL  regulator synthesis: {exc}", file=out)
    return EXIT_OK if ok and res_ok else EXIT_ASSUMPTION


def _write_summary(path, s, tr, window, diverged_at=None):
    stats = analysis.event_stats(tr, t_end=window, n_agents=s.n_agents)
    bound = analysis.ultimate_bound(s.topology, [p.kappa for p in s.params], [p.beta for p in s.params])
    tail = analysis.tracking_metrics(tr, 1.0 / 6.0) if len(tr.t) > 1 else np.abs(tr.e[-1])
    with open(path, "w", newline="") as fh:
        fh.write(f"# {REPORT_SCHEMA} scenario={tr.scenario_hash} mode={tr.mode} dt={tr.dt!r} window={window!r}\n")
        w = csv.writer(fh)
        w.writerow(["agent", "count", "min_gap", "avg_gap", "max_gap", "tail_error", "ultimate_bound", "status"])
        for i, a in enumerate(stats.agents):
            if diverged_at is not None:
                status = "diverged"
            else:
                status = "pass" if tail[i] <= bound else "fail"
            w.writerow([i + 1, a.count, _fmt(a.min_gap), _fmt(a.avg_gap), _fmt(a.max_gap),
                        _fmt(tail[i]), _fmt(bound), status])
        w.writerow(["total", stats.total, _fmt(stats.min_gap), "", "", _fmt(tail.max()), _fmt(bound),
                    "diverged" if diverged_at is not None else ""])
    return stats, tail, bound


def _fmt(x):
    return "" if x is None else f"{float(x):.6g}"


def _parse_periods(text, n):
    vals = [float(v) for v in text.split(",")]
    if len(vals) == 1:
        vals = vals * n
    if len(vals) != n:
        raise ConfigError(f"--periods needs 1 or {n} values")
    return vals


def matched_periods(s, window):
    """Average inter-event times of the dynamic run over ``[0, window]``."""
    tr = sim.run(s.with_mode(Mode.DYNAMIC).with_integrator(horizon=max(window, s.integrator.dt)))
    stats = analysis.event_stats(tr, t_end=window)
    return [a.avg_gap if a.avg_gap is not None else window for a in stats.agents]


def cmd_run(args, out=None):
    out = out or sys.stdout
    s = _load(args)
    if not args.unchecked and not all(r[1] for r in assumption_report(s)):
        print("assumption check failed; rerun `check` for details or pass --unchecked", file=out)
        return EXIT_ASSUMPTION
    mode = Mode(args.mode) if args.mode else None
    if mode is Mode.PERIODIC:
        if args.periods in (None, "matched"):
            periods = matched_periods(s, args.window)
        else:
            periods = _parse_periods(args.periods, s.n_agents)
        s = s.with_mode(mode, periods)
    elif mode is not None:
        s = s.with_mode(mode)
    os.makedirs(args.out, exist_ok=True)
    code = EXIT_OK
    diverged_at = None
    try:
        tr = sim.run(s)
    except DivergenceError as exc:
        tr = exc.trace
        diverged_at = exc.t
        code = EXIT_DIVERGED
        print(f"diverged: {exc}", file=out)
    except NumericError as exc:
        print(f"diverged: {exc}", file=out)
        return EXIT_DIVERGED
    tr.write_csv(os.path.join(args.out, "trace.csv"))
    tr.write_events_csv(os.path.join(args.out, "events.csv"))
    stats, tail, bound = _write_summary(os.path.join(args.out, "summary.csv"), s, tr, args.window, diverged_at)
    print(f"mode={tr.mode} samples={len(tr.t)} events={len(tr.events)} ultimate_bound={bound:.6g}", file=out)
    for i, a in enumerate(stats.agents, 1):
        print(f"  agent {i}: updates in [0,{args.window:g}] s = {a.count}, tail |e| = {tail[i - 1]:.4g}", file=out)
    if args.figures and len(tr.t) > 1:
        from . import plotting
        plotting.render_run(tr, s, args.out, window=args.window)
    return code


def compare_modes(s, window, periodic=True):
    """Run dynamic, static and (optionally) matched-period periodic sampling.

    Returns ``{mode: (trace_or_None, EventStats, tail_errors_or_None, diverged_at)}``.
    """
    out = {}
    for mode in (Mode.DYNAMIC, Mode.STATIC):
        tr = sim.run(s.with_mode(mode))
        out[mode.value] = (tr, analysis.event_stats(tr, t_end=window), analysis.tracking_metrics(tr, 1.0 / 6.0), None)
    if periodic:
        periods = [a.avg_gap if a.avg_gap is not None else window for a in out["dynamic"][1].agents]
        try:
            tr = sim.run_baseline(s, periods)
            out["periodic"] = (tr, analysis.event_stats(tr, t_end=window), analysis.tracking_metrics(tr, 1.0 / 6.0), None)
        except DivergenceError as exc:
            out["periodic"] = (exc.trace, analysis.event_stats(exc.trace, t_end=window), None, exc.t)
    return out


def cmd_compare(args, out=None):
    out = out or sys.stdout
    s = _load(args)
    if not args.unchecked and not all(r[1] for r in assumption_report(s)):
        print("assumption check failed; rerun `check` for details or pass --unchecked", file=out)
        return EXIT_ASSUMPTION
    res = compare_modes(s, args.window, periodic=not args.no_periodic)
    bound = analysis.ultimate_bound(s.topology, [p.kappa for p in s.params], [p.beta for p in s.params])
    dyn_total = res["dynamic"][1].total
    static_total = res["static"][1].total
    ordering = "pass" if dyn_total <= static_total else "fail"
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "compare.csv")
    with open(path, "w", newline="") as fh:
        fh.write(f"# {REPORT_SCHEMA} scenario={s.digest()} dt={s.integrator.dt!r} window={args.window!r}\n")
        w = csv.writer(fh)
        w.writerow(["mode", "agent", "count", "min_gap", "avg_gap", "max_gap", "tail_error", "ultimate_bound", "status"])
        for mode, (tr, stats, tail, div) in res.items():
            for i, a in enumerate(stats.agents):
                if div is not None:
                    status, te = f"diverged@{div:.6g}", None
                else:
                    te = tail[i]
                    status = "pass" if te <= bound else "fail"
                w.writerow([mode, i + 1, a.count, _fmt(a.min_gap), _fmt(a.avg_gap), _fmt(a.max_gap),
                            _fmt(te), _fmt(bound), status])
            w.writerow([mode, "total", stats.total, _fmt(stats.min_gap), "", "",
                        "" if tail is None else _fmt(np.max(tail)), _fmt(bound), ""])
        w.writerow(["check", "dynamic_total<=static_total", dyn_total, "", "", "", "", "", ordering])
    print(f"updates in [0,{args.window:g}] s:", file=out)
    for mode, (tr, stats, tail, div) in res.items():
        counts = ", ".join(str(a.count) for a in stats.agents)
        extra = f" (diverged at t={div:.4g} s)" if div is not None else f", tail max |e| = {np.max(tail):.4g}"
        print(f"  {mode:8s} [{counts}] total {stats.total}{extra}", file=out)
    print(f"dynamic total <= static total: {ordering}", file=out)
    if args.figures:
        from . import plotting
        plotting.render_comparison({m: [a.count for a in r[1].agents] for m, r in res.items()}, args.out)
    return EXIT_OK


def cmd_regulator(args, out=None):
    out = out or sys.stdout
    s = _load(args)
    cp, sols, rows = _regulator_rows(s)
    T, psi = sols[0].T, sols[0].Psi_sigma
    np.set_printoptions(precision=6, suppress=True)
    print(f"minimal polynomial coefficients [a_0 .. a_l-1]: {(-cp.Phi[-1]).tolist()}", file=out)
    print(f"T =\n{T}", file=out)
    print(f"T^-1 =\n{np.linalg.inv(T)}", file=out)
    print(f"Psi_sigma = {psi}", file=out)
    for i, sol in enumerate(sols, 1):
        print(f"agent {i}: Pi =\n{sol.Pi}\n  U = {sol.U}", file=out)
    print("residuals:", file=out)
    for i, name, val in rows:
        print(f"  agent {i} {name:8s} {val:.3g}", file=out)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "regulator.csv"), "w", newline="") as fh:
            fh.write(f"# {REPORT_SCHEMA} scenario={s.digest()}\n")
            w = csv.writer(fh)
            w.writerow(["agent", "quantity", "row", "col", "value"])
            Tinv = np.linalg.inv(T)
            for name, m in (("T", T), ("T_inv", Tinv), ("Psi_sigma", psi)):
                for (r, c), val in np.ndenumerate(m):
                    w.writerow(["", name, r, c, repr(float(val))])
            for i, sol in enumerate(sols, 1):
                for name, m in (("Pi", sol.Pi), ("U", sol.U)):
                    for (r, c), val in np.ndenumerate(m):
                        w.writerow([i, name, r, c, repr(float(val))])
            for i, name, val in rows:
                w.writerow([i, f"residual_{name}", "", "", repr(float(val))])
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="etcor", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", help="scenario YAML (default: bundled four-agent example)")
        p.add_argument("--dt", type=float)
        p.add_argument("--horizon", type=float)

    p = sub.add_parser("check", help="check standing assumptions and regulator residuals")
    common(p)
    p.set_defaults(func=cmd_check)

    for name, func, help_ in (("run", cmd_run, "simulate one mode and write trace files"),
                              ("compare", cmd_compare, "compare dynamic, static and periodic sampling")):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("--out", default="out")
        p.add_argument("--decimate", type=int)
        p.add_argument("--unchecked", action="store_true", help="skip the assumption gate")
        p.add_argument("--window", type=float, default=4.0, help="event-count window [0, W] in seconds")
        p.add_argument("--no-figures", dest="figures", action="store_false")
        if name == "run":
            p.add_argument("--mode", choices=[m.value for m in Mode])
            p.add_argument("--periods", help="periodic mode: comma list, one value, or 'matched'")
        else:
            p.add_argument("--no-periodic", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("regulator", help="print T, Psi_sigma, Pi_i, U_i and residuals")
    common(p)
    p.add_argument("--out", help="also write regulator.csv into this directory")
    p.set_defaults(func=cmd_regulator)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
