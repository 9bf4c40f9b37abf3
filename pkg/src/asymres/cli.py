"""Command-line front end: spectra, evolution, sweeps, validation.

Data (CSV rows, key-value summaries) goes to standard output or the
requested files; diagnostics and errors go to standard error.  Exit codes:
0 success, 1 assertion/criterion failure (outputs are still written),
2 bad parameters or configuration.
"""

from __future__ import annotations

import argparse
import io
import os
import sys

import numpy as np

from . import __version__, analysis, dynamics, scenarios, spectra, validation
from .integrator import Trajectory


def _err(message: str) -> None:
    print(message, file=sys.stderr)


def _parse_sweep(text: str) -> spectra.ParamSweep:
    parts = text.split(":")
    if len(parts) != 4:
        raise scenarios.ConfigError(f"sweep must be name:start:end:count, got {text!r}")
    name, start, end, count = parts
    try:
        return spectra.ParamSweep(name, float(start), float(end), int(count))
    except ValueError as exc:
        raise scenarios.ConfigError(f"invalid sweep {text!r}: {exc}") from exc


def _output_dir(args) -> str:
    if getattr(args, "output_dir", None):
        return args.output_dir
    return os.environ.get("ASYMRES_OUTPUT_DIR", ".")


_FAMILY_FLAGS = {
    "two_mode": ("omega", "lambda", "epsilon"),
    "gain_loss": ("omega", "mu", "kappa"),
    "chain": ("omega", "lambda", "n", "epsilons"),
    "chaos_subsystem": (
        "delta_c",
        "delta_ceff",
        "kappa_c",
        "kappa_ceff",
        "lambda_c",
        "asymmetric",
    ),
}

_CHAOS_SUBSYSTEM_DEFAULTS = {
    "omega_cm": 1.0,
    "gamma": 0.0,
    "g0": 0.0,
    "drive": 0.0,
    "asymmetric": True,
}


def _spectrum_fixed_params(args, family: str, sweep_key: str) -> dict:
    fixed: dict = {}
    if family == "chaos_subsystem":
        fixed.update(_CHAOS_SUBSYSTEM_DEFAULTS)
    for flag in _FAMILY_FLAGS[family]:
        attr = flag.replace("-", "_")
        value = getattr(args, attr, None)
        if value is None:
            continue
        if flag == "epsilons":
            fixed["epsilons"] = tuple(float(v) for v in value.split(","))
        elif flag == "asymmetric":
            fixed["asymmetric"] = value == "on"
        elif flag == "n":
            fixed["n"] = int(value)
        else:
            fixed[spectra._FIELD_ALIASES.get(flag, flag)] = float(value)
    fixed.pop(sweep_key, None)
    return fixed


def _cmd_spectrum(args) -> int:
    family = args.family.replace("-", "_")
    if family not in _FAMILY_FLAGS:
        _err(f"unknown family {args.family!r}")
        return 2
    try:
        if args.sweep:
            sweep = _parse_sweep(args.sweep)
        else:
            primary = {"two_mode": "lambda", "gain_loss": "mu",
                       "chain": "lambda", "chaos_subsystem": "lambda_c"}[family]
            attr = primary.replace("-", "_")
            value = getattr(args, attr, None)
            if value is None:
                raise scenarios.ConfigError(
                    f"either --sweep or --{primary.replace('_', '-')} is required"
                )
            sweep = spectra.ParamSweep(primary, float(value), float(value), 1)
        key = spectra._FIELD_ALIASES.get(sweep.param, sweep.param)
        fixed = _spectrum_fixed_params(args, family, key)
        values, results = spectra.sweep_spectra(family, sweep, fixed)
    except (scenarios.ConfigError, ValueError, TypeError) as exc:
        _err(f"spectrum: {exc}")
        return 2

    buffer = io.StringIO()
    spectra.write_spectrum_csv(buffer, sweep.param, values, results)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(buffer.getvalue())
    else:
        sys.stdout.write(buffer.getvalue())

    if args.find_eps and sweep.count >= 3:
        eps = spectra.find_exceptional_points(family, sweep, fixed)
        for ep in eps:
            _err(f"exceptional point: {sweep.param} = {ep.value!r} (gap {ep.gap:.3e})")
    return 0


def _parse_overrides(pairs) -> dict:
    overrides = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise scenarios.ConfigError(f"--set expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        overrides[key.strip()] = value.strip()
    return overrides


def _load_for_run(args):
    if args.config:
        return scenarios.load_scenario(args.config)
    if args.scenario:
        return scenarios.load_scenario(args.scenario)
    raise scenarios.ConfigError("one of --scenario or --config is required")


def _cmd_evolve(args) -> int:
    try:
        scenario = _load_for_run(args)
        overrides = _parse_overrides(args.set)
        manifest = scenarios.run_scenario(scenario, _output_dir(args), overrides)
    except scenarios.ConfigError as exc:
        _err(f"evolve: {exc}")
        return 2
    for check in manifest.checks:
        print(f"{check.case}.{check.name} = {'pass' if check.passed else 'fail'} ({check.detail})")
    print(f"overall = {'pass' if manifest.passed else 'fail'}")
    return 0 if manifest.passed else 1


def _cmd_sweep(args) -> int:
    try:
        scenario = _load_for_run(args)
        base_overrides = _parse_overrides(args.set)
        parts = args.range.split(":")
        if len(parts) != 3:
            raise scenarios.ConfigError(f"--range must be start:end:count, got {args.range!r}")
        start, end, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise scenarios.ConfigError("sweep count must be >= 1")
        if args.param not in scenario.resolved:
            raise scenarios.ConfigError(f"unknown sweep parameter {args.param!r}")
        wanted = [d.strip() for d in args.diagnostics.split(",") if d.strip()]
        unknown = set(wanted) - {"growth", "beat", "lle"}
        if unknown:
            raise scenarios.ConfigError(f"unknown diagnostics {sorted(unknown)}")
    except scenarios.ConfigError as exc:
        _err(f"sweep: {exc}")
        return 2

    grid = np.linspace(start, end, count)
    rows = []
    for value in grid:
        overrides = dict(base_overrides)
        overrides[args.param] = repr(float(value))
        varied = scenario.with_overrides(overrides)
        case = varied.cases()[0]
        params_raw, init_raw, t_end = scenarios._merged_case_inputs(varied, case)
        params = scenarios._build_params(varied.kind, varied.model, params_raw)
        init = scenarios._init_dict(init_raw)
        traj = dynamics.integrate(varied.model, params, init, t_end, varied.integrator_config())
        row = {"value": float(value)}
        ctx = scenarios._EvolveContext(varied, params, init, traj)
        for diag in wanted:
            try:
                if diag == "growth":
                    fit = ctx.growth()
                    row["growth_rate"] = fit.rate
                    row["growth_stderr"] = fit.stderr
                elif diag == "beat":
                    row["beat_splitting"] = ctx.beat()
                else:
                    res = ctx.lle()
                    row["lle"] = res.lle
                    row["lle_stderr"] = res.stderr
            except (analysis.AnalysisError, RuntimeError):
                pass
        rows.append(row)

    columns = ["value"]
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    buffer = io.StringIO()
    buffer.write(args.param + "," + ",".join(columns[1:]) + "\n")
    for row in rows:
        buffer.write(
            ",".join(repr(row[c]) if c in row else "nan" for c in columns) + "\n"
        )
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(buffer.getvalue())
    else:
        sys.stdout.write(buffer.getvalue())
    return 0


def _cmd_pearson(args) -> int:
    try:
        if args.input:
            traj = Trajectory.from_csv(args.input)
        else:
            scenario = _load_for_run(args)
            case = None
            for spec_case in scenario.cases():
                if args.case is None or spec_case.label == args.case:
                    case = spec_case
                    break
            if case is None:
                raise scenarios.ConfigError(f"no case {args.case!r} in {scenario.name}")
            params_raw, init_raw, t_end = scenarios._merged_case_inputs(scenario, case)
            params = scenarios._build_params(scenario.kind, scenario.model, params_raw)
            traj = dynamics.integrate(
                scenario.model, params, scenarios._init_dict(init_raw), t_end,
                scenario.integrator_config(),
            )
        fields = tuple(f.strip() for f in args.fields.split(","))
        if len(fields) != 2:
            raise scenarios.ConfigError("--fields expects exactly two selectors")
        cfg = analysis.PearsonConfig(window=args.window, stride=args.stride, fields=fields)
        starts, values = analysis.pearson_factor(
            traj.times, traj.series(fields[0]), traj.series(fields[1]), cfg
        )
    except (scenarios.ConfigError, analysis.AnalysisError, KeyError, OSError) as exc:
        _err(f"pearson: {exc}")
        return 2
    buffer = io.StringIO()
    buffer.write("t,C\n")
    for t, c in zip(starts, values):
        buffer.write(f"{float(t)!r},{float(c)!r}\n")
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(buffer.getvalue())
    else:
        sys.stdout.write(buffer.getvalue())
    return 0


def _cmd_chaos(args) -> int:
    try:
        scenario = _load_for_run(args)
        if scenario.kind not in ("evolve", "divergence") or scenario.model != "chaos":
            raise scenarios.ConfigError(
                f"scenario {scenario.name!r} is not a chaos-model run"
            )
        overrides = _parse_overrides(args.set)
        outdir = _output_dir(args)
        manifest = scenarios.run_scenario(scenario, outdir, overrides)
        if args.subsystem_spectrum:
            params_raw = scenario.section("params")
            fixed = scenarios._params_dict(params_raw)
            fixed.pop("lambda_c", None)
            sweep = spectra.ParamSweep("lambda_c", 0.0, 0.3, 301)
            values, results = spectra.sweep_spectra("chaos_subsystem", sweep, fixed)
            path = os.path.join(outdir, f"{scenario.name}_subsystem_spectrum.csv")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                spectra.write_spectrum_csv(fh, "lambda_c", values, results)
            _err(f"subsystem spectrum written to {path}")
    except scenarios.ConfigError as exc:
        _err(f"chaos: {exc}")
        return 2
    for check in manifest.checks:
        print(f"{check.case}.{check.name} = {'pass' if check.passed else 'fail'} ({check.detail})")
    print(f"overall = {'pass' if manifest.passed else 'fail'}")
    return 0 if manifest.passed else 1


def _cmd_validate(args) -> int:
    try:
        results = validation.run_suite(args.suite)
    except KeyError:
        _err(f"unknown suite {args.suite!r}; have {', '.join(validation.SUITES)}")
        return 2
    all_pass = True
    for res in results:
        status = "pass" if res.passed else "fail"
        all_pass &= res.passed
        print(f"criterion={res.cid} name={res.name} status={status} detail={res.detail}")
    print(f"suite={args.suite} overall={'pass' if all_pass else 'fail'}")
    return 0 if all_pass else 1


def _cmd_list_scenarios(_args) -> int:
    for name in scenarios.PRESET_NAMES:
        print(f"{name}: {scenarios.scenario_description(name)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asymres",
        description="Spectra, exceptional points and dynamics of asymmetrically coupled resonators.",
    )
    parser.add_argument("--version", action="version", version=f"asymres {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="spectra along a parameter sweep (CSV)")
    sp.add_argument("--family", required=True,
                    choices=["two-mode", "gain-loss", "chain", "chaos-subsystem"])
    sp.add_argument("--sweep", help="name:start:end:count (inclusive endpoints)")
    sp.add_argument("--output", "-o")
    sp.add_argument("--find-eps", action="store_true",
                    help="report exceptional points in the sweep on stderr")
    for flag in ("omega", "lambda", "epsilon", "mu", "kappa", "n", "epsilons",
                 "delta-c", "delta-ceff", "kappa-c", "kappa-ceff", "lambda-c"):
        sp.add_argument(f"--{flag}", dest=flag.replace("-", "_"))
    sp.add_argument("--asymmetric", choices=["on", "off"])
    sp.set_defaults(func=_cmd_spectrum)

    ev = sub.add_parser("evolve", help="run a scenario: integrate, diagnose, assert")
    ev.add_argument("--scenario")
    ev.add_argument("--config")
    ev.add_argument("--set", action="append", metavar="KEY=VALUE")
    ev.add_argument("--output-dir")
    ev.set_defaults(func=_cmd_evolve)

    sw = sub.add_parser("sweep", help="rerun a scenario over a parameter grid")
    sw.add_argument("--scenario")
    sw.add_argument("--config")
    sw.add_argument("--param", required=True, help="config key, e.g. params.lambda")
    sw.add_argument("--range", required=True, help="start:end:count")
    sw.add_argument("--diagnostics", default="growth", help="comma list of growth,beat,lle")
    sw.add_argument("--set", action="append", metavar="KEY=VALUE")
    sw.add_argument("--output", "-o")
    sw.set_defaults(func=_cmd_sweep)

    pe = sub.add_parser("pearson", help="windowed synchronization factor (CSV)")
    pe.add_argument("--scenario")
    pe.add_argument("--config")
    pe.add_argument("--case")
    pe.add_argument("--input", help="trajectory CSV instead of a scenario run")
    pe.add_argument("--window", type=float, default=10.0)
    pe.add_argument("--stride", type=float)
    pe.add_argument("--fields", default="re_a1,re_a2")
    pe.add_argument("--output", "-o")
    pe.set_defaults(func=_cmd_pearson)

    ch = sub.add_parser("chaos", help="run a chaos-model scenario")
    ch.add_argument("--scenario", default="fig7c")
    ch.add_argument("--config")
    ch.add_argument("--set", action="append", metavar="KEY=VALUE")
    ch.add_argument("--output-dir")
    ch.add_argument("--subsystem-spectrum", action="store_true",
                    help="also write the linearized cavity-pair spectrum sweep")
    ch.set_defaults(func=_cmd_chaos)

    va = sub.add_parser("validate", help="run the acceptance criteria")
    va.add_argument("--suite", default="all", choices=list(validation.SUITES))
    va.set_defaults(func=_cmd_validate)

    ls = sub.add_parser("list-scenarios", help="list built-in presets")
    ls.set_defaults(func=_cmd_list_scenarios)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
