"""Command-line front end.

Parameter precedence, lowest first: built-in preset (--scenario), config file
(--config), explicit flags.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import metrics, qbd, simulator, sweep
from ._accel import BACKEND
from .channel import ChannelParams, SystemParams, average_rate, is_stable
from .errors import ConfigError, ConvergenceError, InstabilityError
from .scenarios import PRESETS, Scenario, load_config, parse_tau_grid

EXIT_UNSTABLE = 2
EXIT_NOT_CONVERGED = 3


def _add_model_flags(p: argparse.ArgumentParser, tau_required: bool = False) -> None:
    p.add_argument("--scenario", choices=sorted(PRESETS))
    p.add_argument("--config", help="flat JSON file keyed by scenario field names")
    p.add_argument("--f-c", type=float, dest="f_C")
    p.add_argument("--f-f", type=float, dest="f_F")
    p.add_argument("--mu1", type=float)
    p.add_argument("--mu2", type=float)
    p.add_argument("--lambda", type=float, dest="lam")
    p.add_argument("--tau", type=float, required=tau_required)


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, default=100_000, help="files completed per replication")
    p.add_argument("--replications", type=int, default=10)


def _resolve(args) -> tuple[Scenario, float | None]:
    base = PRESETS[args.scenario] if args.scenario else None
    values = {}
    if base is not None:
        values = dict(name=base.name, f_C=base.channel.f_C, f_F=base.channel.f_F,
                      mu1=base.mu1, mu2=base.mu2, lam=base.lam, tau_grid=base.tau_grid)
    tau = None
    if args.config:
        cfg = load_config(args.config)
        for key, value in cfg.items():
            if key == "lambda":
                values["lam"] = float(value)
            elif key == "tau_grid":
                values["tau_grid"] = (parse_tau_grid(value) if isinstance(value, str)
                                      else tuple(float(v) for v in value))
            elif key == "tau":
                tau = float(value)
            elif key == "name":
                values["name"] = str(value)
            else:
                values[key] = float(value)
    for key in ("f_C", "f_F", "mu1", "mu2", "lam"):
        if getattr(args, key, None) is not None:
            values[key] = getattr(args, key)
    if getattr(args, "tau", None) is not None:
        tau = args.tau
    if getattr(args, "tau_grid", None):
        values["tau_grid"] = parse_tau_grid(args.tau_grid)
    missing = [k for k in ("f_C", "f_F") if k not in values]
    if missing:
        raise ConfigError(f"missing channel parameters {missing}; give --scenario or --f-c/--f-f")
    kwargs = dict(
        name=values.get("name", "custom"),
        channel=ChannelParams(values["f_C"], values["f_F"]),
        mu1=values.get("mu1", 0.564),
        mu2=values.get("mu2", 0.564),
        lam=values.get("lam", 0.1),
    )
    if "tau_grid" in values:
        kwargs["tau_grid"] = tuple(values["tau_grid"])
    return Scenario(**kwargs), tau


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def _instability_message(params: SystemParams) -> str:
    mu_hat = average_rate(params)
    _, rho = is_stable(params)
    return (f"unstable: lambda={params.lam:.4g} >= mean service rate {mu_hat:.4g} "
            f"(rho={rho:.4g}); with R*mu2={params.channel.wifi_ratio * params.mu2:.4g}")


def cmd_analyze(args) -> int:
    scenario, tau = _resolve(args)
    if tau is None:
        raise ConfigError("analyze needs --tau")
    params = scenario.params(tau)
    stable, _ = is_stable(params)
    if not stable:
        print(_instability_message(params), file=sys.stderr)
        return EXIT_UNSTABLE
    report = metrics.evaluate(params)
    data = report.to_dict()
    if args.diagnostics:
        data["diagnostics"] = metrics.known_discrepancies(params)
    if args.dump_distribution:
        qbd.solve(params).to_csv(args.dump_distribution)
    if args.json:
        print(json.dumps(data, indent=2, allow_nan=True))
        return 0
    prov = report.provenance
    print(f"scenario {scenario.name}  tau={_fmt(tau)}  backend={BACKEND}")
    for key, value in data.items():
        if key in ("provenance", "diagnostics"):
            continue
        base = key.rstrip("012") if key not in ("mu1", "mu2") else key
        print(f"  {key:<10} {_fmt(value):>12}  {prov.get(base, 'input')}")
    if "diagnostics" in data:
        print(json.dumps(data["diagnostics"], indent=2))
    return 0


def cmd_sweep(args) -> int:
    scenario, _ = _resolve(args)
    result = sweep.sweep(
        scenario,
        simulate=args.simulate,
        seed=args.seed,
        n_files=args.horizon,
        replications=args.replications,
    )
    if args.out:
        result.to_csv(args.out)
    else:
        result.to_csv(sys.stdout)
    return 0


def cmd_compare(args) -> int:
    scenario, tau = _resolve(args)
    if tau is None:
        raise ConfigError("compare needs --tau")
    params = scenario.params(tau)
    stable, _ = is_stable(params)
    if not stable:
        print(_instability_message(params), file=sys.stderr)
        return EXIT_UNSTABLE
    table = sweep.compare(params, seed=args.seed, n_files=args.horizon,
                          replications=args.replications)
    if args.json:
        print(json.dumps(table, indent=2))
        return 0
    print(f"{'quantity':<9}{'analytic':>12}{'sim':>12}{'ci_low':>12}{'ci_high':>12}  inside")
    for row in table:
        print(f"{row['quantity']:<9}{_fmt(row['analytic']):>12}{_fmt(row['sim']):>12}"
              f"{_fmt(row['ci_low']):>12}{_fmt(row['ci_high']):>12}  "
              f"{'yes' if row['inside'] else 'NO'}")
    return 0


def cmd_simulate(args) -> int:
    scenario, tau = _resolve(args)
    if tau is None:
        raise ConfigError("simulate needs --tau")
    params = scenario.params(tau)
    config = simulator.SimConfig(params, n_files=args.horizon, replications=args.replications,
                                 seed=args.seed)
    if args.trace:
        events = simulator.state_machine_trace(config, args.trace_duration)
        simulator.write_trace_csv(events, args.trace)
    est = simulator.run(config)
    out = {
        "method": "simulation",
        "scenario": scenario.name,
        "tau": tau,
        "D": est.mean_delay[0], "D_ci_low": est.mean_delay[1], "D_ci_high": est.mean_delay[2],
        "W": est.mean_wait[0], "W_ci_low": est.mean_wait[1], "W_ci_high": est.mean_wait[2],
        "eta": est.efficiency[0], "eta_ci_low": est.efficiency[1],
        "eta_ci_high": est.efficiency[2],
        "files_completed": est.files_completed,
        "files_via_wifi": est.files_via_wifi,
        "pi0": float(est.state_fractions[0]), "pi1": float(est.state_fractions[1]),
        "pi2": float(est.state_fractions[2]),
        "p00": float(est.empty_fractions[0]), "p01": float(est.empty_fractions[1]),
        "p02": float(est.empty_fractions[2]),
        "unstable_trend": est.unstable_trend,
        "growth_pvalue": est.growth_pvalue,
    }
    if args.json:
        print(json.dumps(out, indent=2, allow_nan=True))
    else:
        for key, value in out.items():
            print(f"  {key:<16} {_fmt(value)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmsp-offload",
        description="Delay/efficiency analysis of delayed Wi-Fi offloading (M/MMSP/1).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analytic report for one point")
    _add_model_flags(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--diagnostics", action="store_true",
                   help="include closed-form vs recursion discrepancy report")
    p.add_argument("--dump-distribution", metavar="CSV",
                   help="write p[n, j] as CSV (n, p0, p1, p2)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="tau sweep as CSV")
    _add_model_flags(p)
    p.add_argument("--tau-grid", help='comma list or "logspace:lo:hi:n"')
    p.add_argument("--simulate", action="store_true")
    p.add_argument("--out")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="analytic vs simulation table")
    _add_model_flags(p)
    _add_sim_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="run the simulator directly")
    _add_model_flags(p)
    _add_sim_flags(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--trace", metavar="CSV", help="export an event trace (t, event, n_after, j_after)")
    p.add_argument("--trace-duration", type=float, default=10_000.0)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InstabilityError as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
