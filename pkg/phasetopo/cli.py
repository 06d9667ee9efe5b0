"""
Command line interface.

Subcommands: ``gen-net``, ``simulate``, ``recover``, ``eval``, ``check-cond``
and ``sweep``. Failures print a JSON object ``{"error", "message",
"command"}`` on stderr and exit with code 1.
"""

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from phasetopo.__about__ import __version__
from phasetopo.exceptions import ConfigurationError, PhaseTopoError
from phasetopo.harness import (
    build_network,
    load_sweep_config,
    phase_error,
    save_sweep,
    sweep,
    topology_error,
)
from phasetopo.network import (
    FEEDER_PRESETS,
    ImpedanceParams,
    check_line_condition,
    load_network,
    preset_network,
    random_radial,
    save_network,
)
from phasetopo.recover import (
    RecoveryResult,
    gpt,
    load_result,
    phase_id_known_topology,
    recover_from_magnitudes,
    save_result,
    topology_known_phases,
)
from phasetopo.simulate import (
    InjectionSpec,
    load_panel,
    save_panel,
    simulate_panel,
    true_labels_from_meta,
)
from phasetopo.utils import read_json, replace_bad_path_characters, sidecar_path

logger = logging.getLogger(__name__)


def _print_json(obj: Any) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _gen_net(args: argparse.Namespace) -> int:
    params = ImpedanceParams(dominance=args.dominance, jitter=args.jitter)
    if args.preset is not None:
        net = preset_network(args.preset, seed=args.seed, impedance_params=params)
    else:
        net = random_radial(
            args.n3, args.n2, args.n1, params, seed=args.seed, name=args.name
        )
    out = (
        Path(args.out)
        if args.out is not None
        else Path(f"{replace_bad_path_characters(net.name)}.json")
    )
    save_network(net, out)
    logger.info(f"Network '{net.name}' with {net.n_nodes} nodes written to {out}.")
    _print_json({"out": str(out), "nodes": net.n_nodes, "name": net.name})
    return 0


def _simulate(args: argparse.Namespace) -> int:
    net = build_network(args.net, seed=args.seed)
    panel = simulate_panel(
        net,
        InjectionSpec(s2=args.s2, epsilon=args.epsilon),
        n_samples=args.samples,
        seed=args.seed,
        noise=args.noise,
        mode=args.mode,
        v_ref=args.v_ref,
        scramble=args.scramble,
    )
    out = save_panel(panel, args.out, network=args.net)
    _print_json({"out": str(out), "sidecar": str(sidecar_path(out))})
    return 0


def _recover(args: argparse.Namespace) -> int:
    panel = load_panel(args.panel)
    if args.variant == "joint":
        if panel.mode == "magnitude":
            result = recover_from_magnitudes(
                panel, reference=args.reference, normalize=args.normalize
            )
        else:
            result = gpt(panel, reference=args.reference, normalize=args.normalize)
    elif args.variant == "phase":
        if args.net is None:
            raise ConfigurationError("The phase variant needs the true network --net!")
        net = load_network(args.net)
        edges = net.tree_edges()
        phases = phase_id_known_topology(
            panel, edges, reference=args.reference, normalize=args.normalize
        )
        root = net.reference
        result = RecoveryResult(root=root, edges=tuple(edges), phases=phases)
    else:
        result = topology_known_phases(panel, reference=args.reference)
    out = save_result(result, args.out)
    logger.info(f"Recovery result written to {out}.")
    _print_json({"out": str(out), "edges": len(result.edges)})
    return 0


def _eval(args: argparse.Namespace) -> int:
    result = load_result(args.result)
    net = load_network(args.net)
    truth = {i: net.phase_sets[i].members for i in net.node_ids}
    if args.sidecar is not None:
        labels = true_labels_from_meta(read_json(args.sidecar))
        if labels is not None:
            truth.update(labels)
    metrics: Dict[str, Any] = {
        "topology_error": topology_error(result.edges, net.tree_edges()),
        "phase_error": phase_error(result.phases, truth, reference=net.reference),
    }
    if args.out is not None:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(metrics, sort_keys=True, indent=2) + "\n")
    _print_json(metrics)
    return 0


def _check_cond(args: argparse.Namespace) -> int:
    report = check_line_condition(build_network(args.net, seed=args.seed))
    _print_json(report.to_dict())
    return 0


def _sweep(args: argparse.Namespace) -> int:
    grid, base = load_sweep_config(args.config)
    if args.jobs is not None:
        base = dataclasses.replace(base, n_jobs=args.jobs)
    if args.trials is not None:
        base = dataclasses.replace(base, trials=args.trials)
    frame = sweep(grid, base, timings=args.timings)
    out = save_sweep(frame, args.out)
    _print_json({"out": str(out), "rows": len(frame)})
    return 0


def _add_network_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--net",
        type=str,
        required=True,
        help=f"Network JSON file or preset ({', '.join(['toynet', *FEEDER_PRESETS])}).",
    )


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser with every subcommand."""
    parser = argparse.ArgumentParser(
        prog="phasetopo",
        description="Joint topology and phase recovery of radial distribution grids.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Increase the logging verbosity (-v info, -vv debug).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-net", help="Generate a random radial network (JSON).")
    p.add_argument("--n3", type=int, default=13, help="Three-phase nodes (default: 13).")
    p.add_argument("--n2", type=int, default=0, help="Two-phase nodes (default: 0).")
    p.add_argument("--n1", type=int, default=0, help="One-phase nodes (default: 0).")
    p.add_argument(
        "--preset", type=str, default=None, choices=["toynet", *FEEDER_PRESETS]
    )
    p.add_argument("--name", type=str, default=None, help="Network name.")
    p.add_argument("--seed", type=int, default=0, help="Seed (default: 0).")
    p.add_argument(
        "--dominance", type=float, default=3.0, help="Diagonal dominance (default: 3)."
    )
    p.add_argument(
        "--jitter", type=float, default=0.05, help="Impedance jitter (default: 0.05)."
    )
    p.add_argument("--out", type=str, default=None, help="Output JSON file.")
    p.set_defaults(func=_gen_net)

    p = sub.add_parser("simulate", help="Simulate a measurement panel (CSV + JSON).")
    _add_network_source(p)
    p.add_argument("--samples", type=int, default=7200, help="Samples (default: 7200).")
    p.add_argument("--noise", type=float, default=0.0, help="Noise level (default: 0).")
    p.add_argument(
        "--epsilon", type=float, default=0.0, help="Injection correlation (default: 0)."
    )
    p.add_argument(
        "--s2", type=float, default=1e-6, help="Injection variance (default: 1e-6)."
    )
    p.add_argument("--mode", choices=["phasor", "magnitude"], default="phasor")
    p.add_argument("--v-ref", type=float, default=1.0, help="Reference voltage (p.u.).")
    p.add_argument("--seed", type=int, default=0, help="Seed (default: 0).")
    p.add_argument(
        "--scramble", action="store_true", help="Scramble the local phase order."
    )
    p.add_argument("--out", type=str, default="panel.csv", help="Output CSV file.")
    p.set_defaults(func=_simulate)

    p = sub.add_parser("recover", help="Recover the topology and phases of a panel.")
    p.add_argument("--panel", type=str, required=True, help="Panel CSV file.")
    p.add_argument("--variant", choices=["joint", "phase", "topology"], default="joint")
    p.add_argument(
        "--net", type=str, default=None, help="True network (phase variant only)."
    )
    p.add_argument("--reference", type=int, default=0, help="Reference node id.")
    p.add_argument(
        "--normalize", action="store_true", help="Match phases with correlations."
    )
    p.add_argument("--out", type=str, default="result.json", help="Output JSON file.")
    p.set_defaults(func=_recover)

    p = sub.add_parser("eval", help="Score a recovery result against the truth.")
    p.add_argument("--result", type=str, required=True, help="Recovery result JSON.")
    p.add_argument("--net", type=str, required=True, help="True network JSON.")
    p.add_argument(
        "--sidecar", type=str, default=None, help="Panel sidecar with the true labels."
    )
    p.add_argument("--out", type=str, default=None, help="Output JSON file.")
    p.set_defaults(func=_eval)

    p = sub.add_parser("check-cond", help="Check the line impedance condition.")
    _add_network_source(p)
    p.add_argument("--seed", type=int, default=0, help="Seed of preset networks.")
    p.set_defaults(func=_check_cond)

    p = sub.add_parser("sweep", help="Run a YAML configured sweep (CSV).")
    p.add_argument("--config", type=str, required=True, help="YAML configuration.")
    p.add_argument("--jobs", type=int, default=None, help="Threads per cell.")
    p.add_argument("--trials", type=int, default=None, help="Override the trials.")
    p.add_argument(
        "--timings",
        action="store_true",
        help="Add the measured wall_time column (not reproducible).",
    )
    p.add_argument("--out", type=str, default="sweep.csv", help="Output CSV file.")
    p.set_defaults(func=_sweep)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(verbosity, 2)]
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    logging.getLogger("phasetopo").setLevel(level)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point of the ``phasetopo`` command.

    Parameters
    ----------
    argv : Optional[List[str]], optional
        Arguments, the default is ``sys.argv[1:]``.

    Returns
    -------
    int
        Exit code.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    func: Callable[[argparse.Namespace], int] = args.func
    try:
        return func(args)
    except (PhaseTopoError, OSError, KeyError, ValueError) as e:
        sys.stderr.write(
            json.dumps(
                {"command": args.command, "error": type(e).__name__, "message": str(e)},
                sort_keys=True,
            )
            + "\n"
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
