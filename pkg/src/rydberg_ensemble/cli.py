"""Command-line front end: ``rydberg-ensemble <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .circuit import parse_circuit
from .dynamics import TWO_PI
from .errors import CircuitError, EnsembleError
from .physics import (
    TRAP_SHAPES,
    TrapGeometry,
    blockade_statistics,
    default_forster_params,
    degenerate_transition_check,
    load_defaults,
    zeeman_selectivity,
)
from .runner import emit_interaction_curve, format_csv, load_run_config, run_circuit, sweep


def _parse_grid(text: str) -> list[float]:
    """``1,2,5`` or ``start:stop:count`` (inclusive, linear)."""
    if text.count(":") == 2:
        a, b, n = text.split(":")
        return [float(v) for v in np.linspace(float(a), float(b), int(n))]
    return [float(v) for v in text.split(",") if v.strip()]


def _overrides(pairs) -> dict[str, str]:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _config(args):
    overrides = _overrides(args.set)
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    return load_run_config(args.config, overrides)


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    config = _config(args)
    with open(args.circuit) as fh:
        circuit = parse_circuit(fh.read())
    samples = args.samples if circuit.measure else 0
    report = run_circuit(circuit, config, args.initial, samples=samples)
    text = report.to_json(args.timing) if args.format == "json" else report.to_text(args.timing, threshold=1e-12)
    _emit(text, args.out)
    if args.json_out:
        _emit(report.to_json(args.timing), args.json_out)
    return 0


def cmd_sweep(args) -> int:
    config = _config(args)
    with open(args.circuit) as fh:
        circuit = parse_circuit(fh.read())
    csv, _ = sweep(args.axis, _parse_grid(args.grid), circuit, config, workers=args.workers)
    _emit(csv, args.out)
    return 0


def cmd_interaction_curve(args) -> int:
    config = _config(args)
    params = default_forster_params(config.rydberg_n)
    _emit(emit_interaction_curve(params, _parse_grid(args.r)), args.out)
    return 0


def cmd_zeeman_report(args) -> int:
    config = _config(args)
    scheme = config.level_scheme()
    report = zeeman_selectivity(scheme, config.rabi_frequency)
    data = {
        "field_gauss": config.field_gauss,
        "rabi_mhz": config.rabi_mhz,
        "usable_states": len(scheme.usable),
        "register_capacity": scheme.register_capacity,
        "min_separation_mhz": float(f"{report.min_separation_mhz:.12g}"),
        "peak_probability": float(f"{report.peak_probability:.12g}"),
        "mean_probability": float(f"{report.mean_probability:.12g}"),
        "degenerate_pairs": [list(map(list, p)) for p in degenerate_transition_check(scheme)],
        "degenerate_pairs_without_exclusion": [
            list(map(list, p)) for p in degenerate_transition_check(scheme.without_exclusions())
        ],
    }
    if args.format == "json":
        text = json.dumps(data, indent=2) + "\n"
    else:
        text = "".join(f"{k}: {v}\n" for k, v in data.items())
    _emit(text, args.out)
    return 0


def cmd_blockade_mc(args) -> int:
    config = _config(args)
    params = default_forster_params(config.rydberg_n)
    scale = args.scale if args.scale is not None else load_defaults()["trap_scale_um"]
    geometry = TrapGeometry(args.shape, scale, args.atoms if args.atoms is not None else config.atoms)
    stats = blockade_statistics(geometry, params, args.mc_samples, config.seed)
    rows = [(k, u / TWO_PI, d) for k, (u, d) in enumerate(zip(stats.u_min, stats.min_distance))]
    text = format_csv(("sample", "u_min_MHz", "min_distance_um"), rows)
    _emit(text, args.out)
    ratio = stats.median / config.rabi_frequency
    print(f"median u_min: {stats.median / TWO_PI:.12g} MHz ({ratio:.12g} x Omega)", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a configuration key")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--initial", help="initial register bitstring (default all zeros)")
    common.add_argument("--samples", type=int, default=0, help="measurement samples for circuits with 'measure'")

    parser = argparse.ArgumentParser(prog="rydberg-ensemble", description="Collective-encoding Rydberg register simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run a circuit file")
    p.add_argument("circuit")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--json-out", help="also write the JSON report here")
    p.add_argument("--timing", action="store_true", help="include wall-clock time")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="fidelity versus one parameter")
    p.add_argument("axis", help="U, K, B, Omega or n")
    p.add_argument("grid", help="comma list or start:stop:count")
    p.add_argument("--circuit", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("interaction-curve", parents=[common], help="pair shift versus distance")
    p.add_argument("--r", default="2:10:33", help="distances in um")
    p.set_defaults(func=cmd_interaction_curve)

    p = sub.add_parser("zeeman-report", parents=[common], help="level scheme selectivity")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_zeeman_report)

    p = sub.add_parser("blockade-mc", parents=[common], help="Monte-Carlo weakest-pair blockade")
    p.add_argument("--shape", choices=TRAP_SHAPES, default="box")
    p.add_argument("--scale", type=float, help="largest trap extent in um")
    p.add_argument("--atoms", type=int)
    p.add_argument("--mc-samples", type=int, default=200)
    p.set_defaults(func=cmd_blockade_mc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CircuitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EnsembleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
