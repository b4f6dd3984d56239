"""Command-line entry point: ``droopreg {design,simulate,verify,compare}``.

Exit codes: 0 success; 1 infeasible design or scenario; 2 voltage band
violated (``verify``); 3 non-physical voltage during ``simulate``; 4 bad config.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import metrics
from .errors import (
    ConfigParseError,
    ConfigValidationError,
    Infeasible,
    InfeasibleScenario,
    NonPhysicalVoltage,
)
from .scenario import build_scenario, builtin_cigre, load_config
from .simulation import read_trace_csv, run

EXIT_OK, EXIT_INFEASIBLE, EXIT_VIOLATED, EXIT_NONPHYSICAL, EXIT_CONFIG = 0, 1, 2, 3, 4


def _load(cfg: str):
    if cfg == "builtin:cigre":
        return builtin_cigre()
    return load_config(cfg)


def _overrides(args) -> dict:
    return {
        "seed": args.seed,
        "h": args.step,
        "safety": args.safety,
        "non_adaptive": True if args.non_adaptive else None,
    }


def write_plot_data(trace, outdir, label: str, v_bar: float, delta: float) -> None:
    """Per-panel CSVs: controller outputs, injected active power, voltages with band edges."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    n = trace.N
    t = trace.times[:, None]

    def dump(name, cols, data):
        with open(outdir / f"{label}_{name}.csv", "w", newline="\n") as fh:
            fh.write(",".join(cols) + "\n")
            np.savetxt(fh, data, fmt="%.17g", delimiter=",")

    idx = [str(i) for i in range(1, n + 1)]
    dump("qg", ["t"] + [f"qg_{i}" for i in idx], np.hstack([t, trace.q_g]))
    dump("rhog", ["t"] + [f"rhog_{i}" for i in idx], np.hstack([t, trace.rho_g]))
    band = np.tile([v_bar - delta, v_bar + delta], (len(trace.times), 1))
    dump("v", ["t"] + [f"v_{i}" for i in idx] + ["v_lo", "v_hi"], np.hstack([t, trace.v_cust, band]))
    instants = np.array([e["t"] for e in trace.events])[:, None]
    dump("instants", ["t_k"], instants)


def cmd_design(args) -> int:
    config = _load(args.config)
    _, result = _design_only(config, args)
    print(result.to_text())
    if args.csv:
        Path(args.csv).write_text(result.to_csv())
    return EXIT_OK if result.all_feasible else EXIT_INFEASIBLE


def _design_only(config, args):
    from .design import design_all_windows

    sched = config.window_schedule()
    if args.non_adaptive or config.design.mode == "non-adaptive":
        sched = sched.non_adaptive()
    result = design_all_windows(
        config.feeder_params(),
        sched,
        config.delta_volts(),
        config.substation_profile(),
        config.tau_array(),
        safety=args.safety if args.safety is not None else config.design.safety,
        index_range=config.design.index_range,
        strict=False,
    )
    return sched, result


def cmd_simulate(args) -> int:
    config = _load(args.config)
    scenario, _ = build_scenario(config, **_overrides(args))
    trace = run(scenario)
    delta = config.delta_volts()
    rep = metrics.report(trace, config.feeder.v_bar, delta)
    if args.out:
        trace.to_csv(args.out)
    if args.plot_data:
        label = "non_adaptive" if args.non_adaptive or config.design.mode == "non-adaptive" else "adaptive"
        write_plot_data(trace, args.plot_data, label, config.feeder.v_bar, delta)
    print(
        f"P_q = {rep.P_q:.6g} var*s, P_rho = {rep.P_rho:.6g} W*s, max|y| = {rep.max_abs_y:.6g} V^2, "
        f"in band: {rep.regulation_ok} (margin {rep.worst_margin:.4g} V)"
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    data = read_trace_csv(args.trace)
    ok, margin = metrics.check_regulation(data["v"], args.vbar, args.delta)
    print(f"{'in band' if ok else 'VIOLATED'}: worst margin {margin:.6g} V")
    return EXIT_OK if ok else EXIT_VIOLATED


def cmd_compare(args) -> int:
    config = _load(args.config)
    ov = _overrides(args)
    ov.pop("non_adaptive")
    v_bar, delta = config.feeder.v_bar, config.delta_volts()
    reports = {}
    for label, non_adaptive in (("adaptive", False), ("non_adaptive", True)):
        scenario, _ = build_scenario(config, non_adaptive=non_adaptive, **ov)
        trace = run(scenario)
        reports[label] = metrics.report(trace, v_bar, delta)
        if args.plot_data:
            write_plot_data(trace, args.plot_data, label, v_bar, delta)
    cmp = metrics.compare(reports["adaptive"], reports["non_adaptive"])
    print(cmp.to_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="droopreg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sim=True, mode=True):
        sp.add_argument("config", help="scenario YAML file, or builtin:cigre")
        sp.add_argument("--safety", type=float, default=None, help="scale designed slopes by this factor in (0, 1]")
        if mode:
            sp.add_argument("--non-adaptive", action="store_true", help="one design from the largest bounds")
        if sim:
            sp.add_argument("--seed", type=int, default=None)
            sp.add_argument("--step", type=float, default=None, help="integration step h in s")
            sp.add_argument("--plot-data", default=None, metavar="DIR", help="write per-panel CSVs here")

    sp = sub.add_parser("design", help="per-window droop design report")
    common(sp, sim=False)
    sp.add_argument("--csv", default=None, help="also write the report as CSV")
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("simulate", help="run the closed loop")
    common(sp)
    sp.add_argument("--out", default=None, help="trace CSV path")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="check a trace CSV against the voltage band")
    sp.add_argument("trace")
    sp.add_argument("--vbar", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("compare", help="adaptive vs non-adaptive on identical loads")
    common(sp, mode=False)
    sp.set_defaults(func=cmd_compare, non_adaptive=False)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigParseError, ConfigValidationError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (Infeasible, InfeasibleScenario) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NonPhysicalVoltage as exc:
        print(f"non-physical voltage: {exc}", file=sys.stderr)
        return EXIT_NONPHYSICAL


if __name__ == "__main__":
    sys.exit(main())
