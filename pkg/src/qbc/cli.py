"""Command-line front end: ``qbc <command> ...``.

Exit status is 0 on success, 2 on a configuration error and 1 when a resource
guard refuses the request.  Every file written embeds the package version,
the seed and the full configuration (including the argument vector, so an
artifact can be reproduced by re-running it).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, codesim, regions, relay
from .channels import BroadcastChannel, bundled, bundled_names, check_degraded
from .jsonio import dump

EXIT_OK, EXIT_GUARD, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _grid(text: str) -> list[float]:
    try:
        a, b, n = text.split(":")
        return [float(x) for x in np.linspace(float(a), float(b), int(n))]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must look like a:b:n, got {text!r}") from exc


def _add_channel(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--channel", type=Path, help="broadcast channel JSON file")
    g.add_argument("--bundled", choices=bundled_names(), help="one of the shipped channels")


def _add_opt(p: argparse.ArgumentParser, restarts: int, maxiter: int) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=restarts)
    p.add_argument("--maxiter", type=int, default=maxiter)


def _add_out(p: argparse.ArgumentParser, csv: bool = True) -> None:
    p.add_argument("--out", type=Path, help="JSON output path")
    if csv:
        p.add_argument("--csv", type=Path, help="CSV output path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qbc", description="Rate regions and bounds for broadcast channels "
                                 "with cooperating receivers.")
    ap.add_argument("--version", action="version", version=f"qbc {__version__}")
    ap.add_argument("--workers", type=int, default=None,
                    help="worker processes (default: $QBC_WORKERS or 1)")
    sub = ap.add_subparsers(dest="command", required=True)

    ch = sub.add_parser("channel", help="inspect or export a channel").add_subparsers(dest="action", required=True)
    info = ch.add_parser("info", help="dimensions, flags and a degradedness check")
    _add_channel(info)
    info.add_argument("--no-degraded-check", action="store_true")
    info.add_argument("--seed", type=int, default=0)
    _add_out(info, csv=False)
    exp = ch.add_parser("export", help="write a bundled channel to a JSON file")
    exp.add_argument("--bundled", choices=bundled_names(), required=True)
    exp.add_argument("--out", type=Path, required=True)

    rg = sub.add_parser("region", help="rate regions").add_subparsers(dest="action", required=True)
    cl = rg.add_parser("classical", help="classical messages with a bit link of rate C12")
    _add_channel(cl)
    cl.add_argument("--c12", type=float, required=True)
    cl.add_argument("--card0", type=int)
    cl.add_argument("--card1", type=int)
    cl.add_argument("--weights", type=int, default=33)
    _add_opt(cl, 8, 200)
    _add_out(cl)
    for name, helptext in (("quantum-inner", "quantum messages, inner bound"),
                           ("quantum-outer", "quantum messages, single-letter outer bound")):
        q = rg.add_parser(name, help=helptext)
        _add_channel(q)
        q.add_argument("--cq12", type=float, required=True)
        q.add_argument("--weights", type=int, default=33)
        if name == "quantum-outer":
            q.add_argument("--t-dim", type=int, default=4)
        _add_opt(q, 8, 200)
        _add_out(q)

    rl = sub.add_parser("relay", help="primitive relay bounds").add_subparsers(dest="action", required=True)
    rb = rl.add_parser("bounds", help="cutset, decode-forward and entanglement-formation bounds")
    _add_channel(rb)
    grp = rb.add_mutually_exclusive_group(required=True)
    grp.add_argument("--cq12", type=float)
    grp.add_argument("--grid", type=_grid, help="a:b:n grid of CQ12 values")
    rb.add_argument("--t-dim", type=int, default=4)
    rb.add_argument("--no-eof", action="store_true", help="skip the entanglement-formation bound")
    _add_opt(rb, 16, 300)
    _add_out(rb)

    sm = sub.add_parser("simulate", help="Monte-Carlo simulation of the binning code")
    _add_channel(sm)
    sm.add_argument("--n", type=int, required=True)
    sm.add_argument("--r0", type=float, required=True)
    sm.add_argument("--r1", type=float, required=True)
    sm.add_argument("--c12", type=float, required=True)
    sm.add_argument("--trials", type=int, default=1000)
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--decoder", choices=codesim.DECODERS, default="ml")
    sm.add_argument("--quantum", action="store_true", help="quantum outputs, square-root measurements")
    sm.add_argument("--pmf", type=str, help="JSON nested list p(x0, x1) (default: X0 = X1 uniform)")
    sm.add_argument("--delta", type=float)
    _add_out(sm, csv=False)

    cv = sub.add_parser("convert", help="teleportation / super-dense coding rate conversion")
    grp = cv.add_mutually_exclusive_group(required=True)
    grp.add_argument("--c12", type=float, help="classical link rate, converted to qubits")
    grp.add_argument("--cq12", type=float, help="qubit link rate, converted to bits")
    return ap


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _workers(args) -> int:
    if args.workers is not None:
        w = args.workers
    else:
        try:
            w = int(os.environ.get("QBC_WORKERS", "1"))
        except ValueError as exc:
            raise ConfigError("QBC_WORKERS must be an integer") from exc
    if w < 1:
        raise ConfigError("workers must be at least 1")
    return w


def _channel(args) -> BroadcastChannel:
    if getattr(args, "bundled", None):
        return bundled(args.bundled)
    try:
        return BroadcastChannel.load(args.channel)
    except FileNotFoundError as exc:
        raise ConfigError(f"channel file not found: {args.channel}") from exc
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read channel {args.channel}: {exc}") from exc


def _config(args, argv: Sequence[str], workers: int) -> dict:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}
    cfg["workers"] = workers
    return {"version": __version__, "seed": cfg.get("seed"), "config": cfg, "argv": list(argv)}


def _nonneg(**rates) -> None:
    for k, v in rates.items():
        if v is not None and v < 0:
            raise ConfigError(f"{k} must be nonnegative")


def _write_csv(path: Path | None, text: str, header: dict) -> None:
    if path is None:
        return
    comment = "# " + json.dumps(header, sort_keys=True) + "\n"
    path.write_text(comment + text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_channel(args, meta, workers) -> int:
    if args.action == "export":
        bundled(args.bundled).save(args.out)
        print(f"wrote {args.out}")
        return EXIT_OK
    bc = _channel(args)
    info = {
        "kind": bc.kind, "params": bc.params, "d_in": bc.d_in, "d1": bc.d1, "d2": bc.d2,
        "kraus_count": int(bc.channel.kraus.shape[0]), "is_classical": bc.is_classical,
        "is_hadamard": bc.is_hadamard,
    }
    if not args.no_degraded_check:
        info["degraded"] = check_degraded(bc, seed=args.seed).to_dict()
    for k, v in info.items():
        if k != "degraded":
            print(f"{k}: {v}")
    if "degraded" in info:
        d = info["degraded"]
        print(f"degraded: {d['found']} (residual {d['residual']:.3g}) {d.get('note', '')}".rstrip())
    if args.out:
        dump({"type": "channel_info", "info": info, **meta}, args.out)
    return EXIT_OK


def _cmd_region(args, meta, workers) -> int:
    bc = _channel(args)
    common = dict(n_weights=args.weights, restarts=args.restarts, seed=args.seed, maxiter=args.maxiter,
                  workers=workers)
    if args.action == "classical":
        _nonneg(c12=args.c12)
        reg = regions.classical_region(bc, args.c12, card0=args.card0, card1=args.card1, **common)
    elif args.action == "quantum-inner":
        _nonneg(cq12=args.cq12)
        reg = regions.quantum_inner_region(bc, args.cq12, **common)
    else:
        _nonneg(cq12=args.cq12)
        reg = regions.quantum_outer_region_single_letter(bc, args.cq12, t_dim=args.t_dim, **common)
    reg.metadata["run"] = meta
    ax = reg.axes
    print(f"{reg.kind} region, {len(reg.hull)} hull vertices; max {ax[0]} = {reg.max_along(0):.6f}, "
          f"max {ax[1]} = {reg.max_along(1):.6f}, max sum = {reg.support((1.0, 1.0)):.6f}")
    if args.out:
        reg.save(args.out)
    _write_csv(args.csv, reg.to_csv(), meta)
    return EXIT_OK


def _cmd_relay(args, meta, workers) -> int:
    bc = _channel(args)
    grid = [args.cq12] if args.cq12 is not None else args.grid
    _nonneg(cq12=min(grid))
    out = relay.relay_bounds_grid(bc, grid, workers=workers, seed=args.seed, restarts=args.restarts,
                                  t_dim=args.t_dim, with_eof=not args.no_eof)
    for b in out:
        print(f"CQ12 = {b.cq12:.4f}: cutset {b.cutset:.6f}  decode-forward {b.decode_forward:.6f}  "
              f"eof-lower {b.eof_lower:.6f}")
    if args.out:
        relay.save_bounds(out, args.out, meta)
    _write_csv(args.csv, relay.bounds_csv(out), meta)
    return EXIT_OK


def _cmd_simulate(args, meta, workers) -> int:
    bc = _channel(args)
    _nonneg(r0=args.r0, r1=args.r1, c12=args.c12, delta=args.delta)
    if args.trials < 1 or args.n < 1:
        raise ConfigError("n and trials must be positive")
    if args.pmf:
        try:
            pmf = np.asarray(json.loads(args.pmf), dtype=float)
        except (json.JSONDecodeError, ValueError) as exc:
            raise ConfigError(f"bad --pmf: {exc}") from exc
    else:
        pmf = np.eye(bc.d_in) / bc.d_in
    cb = codesim.build_codebook(pmf, args.n, args.r0, args.r1, args.c12, seed=args.seed)
    if args.quantum:
        rep = codesim.simulate_cq(bc, cb, args.trials, seed=args.seed, delta=args.delta, workers=workers)
    else:
        if not bc.is_classical:
            raise ConfigError("channel is not classical; use --quantum")
        rep = codesim.simulate_classical(bc, cb, args.trials, args.decoder, seed=args.seed, delta=args.delta,
                                         workers=workers)
    print(f"n = {rep.n}, rates = ({rep.rates[0]:.4f}, {rep.rates[1]:.4f}), C12 = {rep.c12:.4f}: "
          f"error {rep.empirical_error:.4f} over {rep.trials} trials; events {rep.error_counts}")
    if args.out:
        rep.save(args.out, meta)
    return EXIT_OK


def _cmd_convert(args, meta, workers) -> int:
    if args.c12 is not None:
        _nonneg(c12=args.c12)
        print(f"CQ12 = {relay.teleport_convert(args.c12):g}")
    else:
        _nonneg(cq12=args.cq12)
        print(f"C12 = {relay.superdense_convert(args.cq12):g}")
    return EXIT_OK


COMMANDS = {"channel": _cmd_channel, "region": _cmd_region, "relay": _cmd_relay,
            "simulate": _cmd_simulate, "convert": _cmd_convert}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints usage and exits with 2 on errors
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        workers = _workers(args)
        meta = _config(args, argv, workers)
        return COMMANDS[args.command](args, meta, workers)
    except regions.ResourceGuardError as exc:
        print(f"qbc: guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"qbc: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
