"""Command-line entry point: discover, simulate, generate, perturb, evaluate, sweep.

Exit codes: 0 success, 1 usage, 2 invalid input, 3 runtime failure.
"""

import argparse
import csv
import json
import os
import sys

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _non_negative_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _unit_float(text):
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {text}")
    return v


def _granule(text):
    v = _positive_int(text)
    if 1440 % v:
        raise argparse.ArgumentTypeError(f"granule minutes must divide 1440, got {text}")
    return v


def _fraction(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text}")
    return v


def _default_seed():
    env = os.environ.get("PROSIM_SEED")
    if env is None or not env.strip():
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"PROSIM_SEED must be an integer, got {env!r}") from None


def build_parser() -> Parser:
    p = Parser(prog="prosim", description="Business process simulation with probabilistic resources.")
    sub = p.add_subparsers(dest="command", parser_class=Parser)
    sub.required = True

    d = sub.add_parser("discover", help="discover a simulation model from an event log")
    d.add_argument("--log", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--multitask", choices=("none", "global", "local"), default="none")
    d.add_argument("--granule", type=_granule, default=60, help="calendar granule in minutes")
    d.add_argument("--local-granule", type=_granule, default=60, help="granule of local multitasking cells")
    d.add_argument("--beta", type=_unit_float, default=0.5)
    d.add_argument("--kappa", type=_non_negative_int, default=20)
    d.add_argument("--availability", choices=("abs", "rel", "max"), default="max")
    d.add_argument("--graph", help="JSON process graph (or model file) to use instead of trace variants")
    d.add_argument("--dump-calendars", help="also write the discovered calendars to this JSON file")
    d.add_argument("--figures", help="directory for calendar heatmaps")

    s = sub.add_parser("simulate", help="simulate a model into an event log")
    s.add_argument("--model", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--cases", type=_positive_int)

    g = sub.add_parser("generate", help="generate a ground-truth log with round-robin allocation")
    g.add_argument("--model", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--balance", choices=("balanced", "unbalanced"), default="balanced")
    g.add_argument("--cases", type=_positive_int)
    g.add_argument("--seed", type=int)
    g.add_argument("--overlap", action="store_true", help="start at enablement even if the resource is busy")

    q = sub.add_parser("perturb", help="inject a vacation into a log")
    q.add_argument("--log", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--scenario", choices=("train", "test", "tnt"), required=True)
    q.add_argument("--weeks", type=_positive_int, default=1)
    q.add_argument("--resource")
    q.add_argument("--substitute", help="relabel the resource's events in the break instead of shifting")

    e = sub.add_parser("evaluate", help="compare a real log with simulated behaviour")
    e.add_argument("--real", required=True)
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--sim", help="simulated log")
    src.add_argument("--model", help="model to simulate against the real arrivals")
    e.add_argument("--repetitions", type=_positive_int, default=5)
    e.add_argument("--seed", type=int)
    e.add_argument("--format", choices=("json", "table"), default="json")
    e.add_argument("--figures", help="directory for cycle-time and event-hour histograms")

    w = sub.add_parser("sweep", help="grid search (granule, beta, kappa) on a chronological split")
    w.add_argument("--log", required=True)
    w.add_argument("--out", required=True, help="CSV of RED per grid cell")
    w.add_argument("--train-fraction", type=_fraction, default=0.5)
    w.add_argument("--multitask", choices=("none", "global", "local"), default="none")
    w.add_argument("--graph")
    w.add_argument("--seed", type=int)
    w.add_argument("--repetitions", type=_positive_int, default=1)
    w.add_argument("--granules", help="comma-separated override of the granule grid")
    w.add_argument("--betas", help="comma-separated override of the beta grid")
    w.add_argument("--kappas", help="comma-separated override of the kappa grid")
    w.add_argument("--figures", help="directory for the sweep plot")
    return p


def _load_graph(path):
    from .model import ProcessGraph
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return ProcessGraph.from_dict(data.get("graph", data)).validate()


def cmd_discover(args, out):
    from .calendar_discovery import discover_calendars
    from .eventlog import compute_enabling_times, parse_csv_log
    from .model import save_calendars, save_model
    from .pipeline import DiscoveryConfig, discover_model

    log = compute_enabling_times(parse_csv_log(args.log))
    graph = _load_graph(args.graph) if args.graph else None
    cfg = DiscoveryConfig(args.granule, args.beta, args.kappa, args.multitask, args.local_granule)
    calendars = discover_calendars(log, args.granule, args.beta)
    model = discover_model(log, cfg, graph=graph, calendars=calendars)
    if args.availability != model.availability_mode:
        from dataclasses import replace
        model = replace(model, availability_mode=args.availability)
    save_model(model, args.out)
    print(f"model\t{args.out}\tresources={len(model.profiles)}\tactivities={len(model.graph.activities)}", file=out)
    if args.dump_calendars:
        save_calendars(calendars, args.dump_calendars)
        print(f"calendars\t{args.dump_calendars}", file=out)
    if args.figures:
        from .report import plot_calendars
        for path in plot_calendars(calendars, args.figures):
            print(f"figure\t{path}", file=out)


def cmd_simulate(args, out):
    from dataclasses import replace
    from .engine import simulate
    from .eventlog import write_csv_log
    from .model import load_model

    model = load_model(args.model)
    if args.cases:
        model = replace(model, case_count=args.cases)
    log = simulate(model, seed=args.seed)
    write_csv_log(log, args.out)
    print(f"log\t{args.out}\tcases={len(log.traces)}\tevents={log.event_count}", file=out)


def cmd_generate(args, out):
    from .eventlog import write_csv_log
    from .model import load_model
    from .synthgen import GenerationConfig, generate_synthetic_log

    cfg = GenerationConfig(load_model(args.model), args.balance, args.seed, args.cases, args.overlap)
    log = generate_synthetic_log(cfg)
    write_csv_log(log, args.out)
    print(f"log\t{args.out}\tcases={len(log.traces)}\tevents={log.event_count}", file=out)


def cmd_perturb(args, out):
    from .eventlog import parse_csv_log, write_csv_log
    from .synthgen import PerturbationConfig, inject_unavailability

    cfg = PerturbationConfig(args.scenario, args.weeks, resource=args.resource, substitute=args.substitute)
    log = inject_unavailability(parse_csv_log(args.log), cfg)
    write_csv_log(log, args.out)
    print(f"log\t{args.out}\tscenario={cfg.scenario}\tweeks={cfg.break_weeks}", file=out)


def _print_report(report, fmt, out):
    if fmt == "json":
        print(json.dumps(report.to_dict(), sort_keys=True), file=out)
        return
    print(f"{'metric':<8}{'value':>14}", file=out)
    for name in ("red", "ctd", "mmr"):
        print(f"{name:<8}{getattr(report, name):>14.6f}", file=out)
    print(f"{'cases':<8}{report.real_cases:>7}/{report.sim_cases:<6}", file=out)


def cmd_evaluate(args, out):
    from .eventlog import parse_csv_log
    from .metrics import evaluate_logs

    real = parse_csv_log(args.real)
    if args.sim:
        sim = parse_csv_log(args.sim)
        report = evaluate_logs(real, sim)
    else:
        from .model import load_model
        from .pipeline import evaluate_repetitions, simulate_against
        model = load_model(args.model)
        report = evaluate_repetitions(real, model, args.repetitions, args.seed)
        sim = simulate_against(model, real, args.seed) if args.figures else None
    _print_report(report, args.format, out)
    if args.figures:
        from .report import plot_distributions
        for path in plot_distributions(real, sim, args.figures):
            print(f"figure\t{path}", file=out)


def _floats(text, cast):
    return tuple(cast(x) for x in text.split(",") if x.strip())


def cmd_sweep(args, out):
    from .eventlog import parse_csv_log
    from .pipeline import sweep

    grid = {}
    if args.granules:
        grid["granule_minutes"] = _floats(args.granules, _granule)
    if args.betas:
        grid["beta"] = _floats(args.betas, _unit_float)
    if args.kappas:
        grid["kappa"] = _floats(args.kappas, _non_negative_int)
    graph = _load_graph(args.graph) if args.graph else None
    rows, best = sweep(parse_csv_log(args.log), args.train_fraction, grid, args.seed,
                       args.multitask, graph, args.repetitions)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["granule_minutes", "beta", "kappa", "red"])
        for r in rows:
            writer.writerow([r.granule_minutes, r.beta, r.kappa, f"{r.red:.6f}"])
    print(f"best\tgranule_minutes={best.granule_minutes}\tbeta={best.beta}\tkappa={best.kappa}\t"
          f"red={best.red:.6f}", file=out)
    if args.figures:
        from .report import plot_sweep
        print(f"figure\t{plot_sweep(rows, os.path.join(args.figures, 'sweep.png'))}", file=out)


COMMANDS = {"discover": cmd_discover, "simulate": cmd_simulate, "generate": cmd_generate,
            "perturb": cmd_perturb, "evaluate": cmd_evaluate, "sweep": cmd_sweep}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
    except UsageError as exc:
        print(exc, file=err)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE

    from .engine import SimulationError
    try:
        COMMANDS[args.command](args, out)
    except argparse.ArgumentTypeError as exc:
        print(f"prosim {args.command}: {exc}", file=err)
        return EXIT_USAGE
    except SimulationError as exc:
        print(f"prosim {args.command}: simulation failed: {exc}", file=err)
        return EXIT_RUNTIME
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"prosim {args.command}: invalid input: {exc}", file=err)
        return EXIT_INVALID
    except (RuntimeError, OSError) as exc:
        print(f"prosim {args.command}: {exc}", file=err)
        return EXIT_RUNTIME
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
