"""Command line entry point: schedule | construct | simulate | analyze."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import simulation as sim
from .construction import McParams, construct_pup, construct_sup
from .factor_graph import get_graph
from .noma_phy import NomaSystem, default_system, load_codebooks, noise_var_from_snr
from .scheduling import (MAX_BRUTE_FORCE_USERS, average_scheduling, brute_force_optimal_orders,
                         greedy_sinr_schedule, order_statistics)

EXIT_USAGE = 2
EXIT_IO = 1


class CliError(Exception):
    def __init__(self, msg: str, code: int = EXIT_USAGE):
        super().__init__(msg)
        self.code = code


def parse_snr_list(text: str) -> list[float]:
    """``"2,4,6"`` or an inclusive range ``"2:8:0.5"``."""
    text = text.strip()
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise argparse.ArgumentTypeError(f"bad SNR range {text!r}; use start:stop:step")
        start, stop, step = parts
        n = int(round((stop - start) / step))
        return [round(start + i * step, 10) for i in range(n + 1)]
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from None


def parse_order(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad order {text!r}") from None


def _graph(spec: str):
    try:
        return get_graph(spec)
    except KeyError as e:
        raise CliError(e.args[0]) from None


def _system(graph_id: str, codebook: str | None) -> NomaSystem:
    graph = _graph(graph_id)
    if codebook is None:
        return default_system(graph)
    if not Path(codebook).is_file():
        raise CliError(f"codebook file not found: {codebook}", EXIT_IO)
    return NomaSystem(graph, tuple(load_codebooks(codebook)))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_schedule(args) -> None:
    graph = _graph(args.graph)
    lam = args.lam if args.lam is not None else noise_var_from_snr(args.snr)
    ps = greedy_sinr_schedule(graph, lam)
    avg = average_scheduling(graph, lam)
    out = {"graph": graph.name, "lambda": lam, **ps.as_dict(),
           "as_order": list(avg.order), "as_theta": avg.theta}
    if graph.num_users <= MAX_BRUTE_FORCE_USERS:
        orders, theta_max = brute_force_optimal_orders(graph, lam)
        stats = order_statistics(graph, lam)
        out.update({
            "theta_max": theta_max,
            "num_optimal_orders": len(orders),
            "greedy_is_optimal": tuple(ps.order) in orders,
            "fraction_satisfactory": stats.fraction_satisfactory,
            "fraction_optimal": stats.fraction_optimal,
        })
    _emit(json.dumps(out, indent=1) + "\n", args.out)


def cmd_construct(args) -> None:
    system = _system(args.graph, args.codebook)
    mc = McParams(args.samples, args.seed, args.channel)
    if args.mode == "psc":
        res = construct_pup(system, args.design_snr, args.N, args.rate, mc)
    else:
        if args.scheduler == "explicit" and args.order is None:
            raise CliError("--scheduler explicit needs --order")
        scheduler = {"ps": args.ps_method, "as": "as", "explicit": "explicit"}[args.scheduler]
        res = construct_sup(system, args.design_snr, args.N, args.rate, mc, scheduler, args.order)
    res.metadata["codebook"] = args.codebook or "default"
    _emit(json.dumps(res.to_json(), indent=1) + "\n", args.out)


_OVERRIDES = {
    "graph": "graph", "codebook": "codebook", "mode": "mode", "scheduler": "scheduler",
    "ps_method": "ps_method", "order": "order", "snr": "snr_db", "seed": "seed",
    "blocks": "max_blocks", "errors": "target_errors", "min_blocks": "min_blocks",
    "batch_size": "batch_size", "out": "out", "list_size": "list_size", "N": "N", "rate": "rate",
    "design_snr": "design_snr_db", "construction": "construction", "channel": "channel",
    "workers": "workers", "samples": "mc_samples", "iterations": "iterations",
}


def build_config(args) -> sim.SimConfig:
    base: dict = {}
    if args.preset:
        base.update(sim.PRESETS[args.preset])
    if args.config:
        if not Path(args.config).is_file():
            raise CliError(f"config file not found: {args.config}", EXIT_IO)
        base.update(json.loads(Path(args.config).read_text()))
    for flag, key in _OVERRIDES.items():
        val = getattr(args, flag, None)
        if val is not None:
            base[key] = val
    try:
        return sim.SimConfig.from_dict(base)
    except (TypeError, ValueError) as e:
        raise CliError(f"invalid configuration: {e}") from None


def cmd_simulate(args) -> None:
    cfg = build_config(args)
    _graph(cfg.graph)
    if cfg.codebook is not None and not Path(cfg.codebook).is_file():
        raise CliError(f"codebook file not found: {cfg.codebook}", EXIT_IO)
    if cfg.construction is not None and not Path(cfg.construction).is_file():
        raise CliError(f"construction file not found: {cfg.construction}", EXIT_IO)
    constructions: list = []
    try:
        records = sim.run_bler(cfg, constructions)
    except ValueError as e:
        raise CliError(str(e)) from None
    if cfg.out:
        sim.write_csv(records, cfg.out)
        meta = {
            "config": cfg.to_dict(),
            "config_hash": cfg.config_hash(),
            "version": sim.version_string(),
            "stopping_rule": {"target_errors": cfg.target_errors, "max_blocks": cfg.max_blocks,
                              "min_blocks": cfg.min_blocks},
            "construction_per_point": cfg.construction is None and cfg.design_snr_db is None,
            "constructions": [{"design_snr_db": c.design_snr_db, "scheme": c.scheme,
                               "order": list(c.order) if c.order else None, "user_K": c.user_K}
                              for c in constructions],
        }
        Path(cfg.out + ".meta.json").write_text(json.dumps(meta, indent=1) + "\n")
    else:
        sim.write_csv(records, sys.stdout)


def cmd_analyze(args) -> None:
    rows = []
    for path in args.inputs:
        if not Path(path).is_file():
            raise CliError(f"CSV file not found: {path}", EXIT_IO)
        rows += sim.to_long_format(sim.read_csv(path), args.metric, Path(path).stem)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=["snr_db", "scheme", "metric", "value"])
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()


def _add_system_args(p, defaults: bool) -> None:
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--graph", default=d("pdma2x3"), help="built-in id (pdma2x3, pdma3x6, scma4x6) or graph file")
    p.add_argument("--codebook", help="codebook JSON file (default: spread QPSK)")
    p.add_argument("--mode", choices=("jsc", "psc"), default=d("jsc"))
    p.add_argument("--scheduler", choices=("ps", "as", "explicit"), default=d("ps"))
    p.add_argument("--ps-method", dest="ps_method", choices=("exit-mc", "sinr-greedy"), default=d("exit-mc"))
    p.add_argument("--order", type=parse_order, help="explicit detecting order, e.g. 2,3,1")
    p.add_argument("-N", type=int, default=d(256), help="block length per user")
    p.add_argument("--rate", type=float, default=d(0.5))
    p.add_argument("--seed", type=int, default=d(1))
    p.add_argument("--channel", choices=("awgn", "rayleigh"), default=d("awgn"))
    p.add_argument("--samples", type=int, default=d(50_000), help="Monte-Carlo symbols per estimate")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcnoma", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", help="detecting orders and order statistics")
    p.add_argument("--graph", default="pdma2x3")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--lambda", dest="lam", type=float, help="noise-to-power ratio")
    g.add_argument("--snr", type=float, default=0.0, help="SNR in dB (lambda = 10^(-snr/10))")
    p.add_argument("--out")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("construct", help="build a code construction JSON")
    _add_system_args(p, defaults=True)
    p.add_argument("--design-snr", "--snr", dest="design_snr", type=float, default=4.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("simulate", help="Monte-Carlo BLER over an SNR grid, CSV output")
    p.add_argument("--config", help="JSON config; flags override its values")
    p.add_argument("--preset", choices=sorted(sim.PRESETS))
    _add_system_args(p, defaults=False)
    p.add_argument("--snr", type=parse_snr_list, help="e.g. 2,4,6 or 2:8:1")
    p.add_argument("--blocks", type=int, help="max blocks per SNR point")
    p.add_argument("--errors", type=float, help="target average block-error events per point")
    p.add_argument("--min-blocks", dest="min_blocks", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--list-size", "-L", dest="list_size", type=int)
    p.add_argument("--iterations", type=int, help="MPA iterations")
    p.add_argument("--design-snr", dest="design_snr", type=float,
                   help="construct once at this SNR (default: at every SNR point)")
    p.add_argument("--construction", help="construction JSON from `construct`")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV path; metadata goes to <out>.meta.json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="merge CSVs into long format")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--metric", choices=("bler", "ber", "block_errors", "blocks"), default="bler")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        args.func(args)
    except CliError as e:
        print(f"pcnoma {args.command}: error: {e}", file=sys.stderr)
        return e.code
    except OSError as e:
        print(f"pcnoma {args.command}: error: {e}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
