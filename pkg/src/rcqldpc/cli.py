"""Command-line entry point: ``rcqldpc <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .channel import DEFAULT_BINS, DEFAULT_CLIP, ChannelParams, awgn_bin_edges, discretize_awgn
from .dde import DEFAULT_LS, DesignError, design_for_awgn
from .ldpc import CodeParseError, degree_distributions
from .quantizer import DegenerateAlphabetError, hdq, mutual_info
from .sim import (
    BUILTIN_CODES,
    DECODERS,
    SimConfig,
    SimConfigError,
    cross_decode_experiment,
    load_graph,
    run_fer_sweep,
)

log = logging.getLogger("rcqldpc")


def _float_list(text: str) -> list:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}")


def _precision(text: str):
    if text == "inf":
        return "inf"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"precision must be an integer or 'inf', got {text!r}")


def cmd_quantize_channel(args) -> int:
    cp = ChannelParams.from_ebno(args.ebno, args.rate)
    P = discretize_awgn(cp, args.bins, args.clip)
    q = hdq(P, args.bits)
    edges = awgn_bin_edges(cp.sigma, args.bins, args.clip)
    doc = {
        "channel": cp.to_dict(),
        "bins": args.bins,
        "bits": args.bits,
        "thresholds_y": edges[q.spec.boundary_indices].tolist(),
        "thresholds_llr": q.spec.thresholds.tolist(),
        "recon_llr": q.recon.values.tolist(),
        "mi_bits": q.mi_bits,
        "mi_fine_bits": mutual_info(P),
    }
    Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    log.info("I(X;T) = %.8f bits (fine channel %.8f)", q.mi_bits, doc["mi_fine_bits"])
    return 0


def cmd_design(args) -> int:
    cfg = SimConfig(args.code, "bp-inf", [args.ebno], code_format=args.format)
    g = load_graph(cfg)
    deg = degree_distributions(g)
    params = design_for_awgn(deg, args.ebno, args.mode, args.bits, args.iters, args.ls,
                             rate=g.rate, num_bins=args.bins)
    params.save(args.out)
    log.info("designed %d iterations; final I(X;T) = %.8f bits; OSA loss %.3g bits",
             args.iters, params.mi_trajectory[-1], params.osa_loss_bits)
    return 0


def cmd_simulate(args) -> int:
    cfg = SimConfig(
        code=args.code,
        code_format=args.format,
        decoder=args.decoder,
        params=args.params,
        ebno=args.ebno,
        max_frames=args.max_frames,
        min_frame_errors=args.min_errors,
        max_iters=args.max_iters,
        seed=args.seed,
        workers=args.workers,
        output=args.out,
        nc=args.nc,
        nv=args.nv,
        record_timing=args.timing,
    )
    result = run_fer_sweep(cfg)
    for r in result.records:
        log.info("Eb/N0 %.3f dB: %d frames, %d errors, FER %.4g%s", r.ebno_db, r.frames, r.frame_errors,
                 r.fer, "" if r.confident else " (below 95%/20% confidence target)")
    return 0


def cmd_cross_decode(args) -> int:
    cfg_a = SimConfig.load(args.config_a)
    cfg_b = SimConfig.load(args.config_b)
    rep = cross_decode_experiment(cfg_a, cfg_b, args.out)
    frac = rep.rescue_fraction
    log.info("%s failed %d frames; %s rescued %d (%s)", rep.decoder_a, rep.failures, rep.decoder_b,
             rep.rescued, "n/a" if frac is None else f"{frac:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rcqldpc", description="Design and simulate RCQ LDPC decoders.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    code_help = f"code file (.alist or QC base matrix) or one of: {', '.join(BUILTIN_CODES)}"

    q = sub.add_parser("quantize-channel", help="HDQ-quantize the discretized BI-AWGN channel")
    q.add_argument("--ebno", type=float, required=True)
    q.add_argument("--rate", type=float, required=True)
    q.add_argument("--bins", type=int, default=DEFAULT_BINS)
    q.add_argument("--bits", type=int, required=True)
    q.add_argument("--clip", type=float, default=DEFAULT_CLIP)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_quantize_channel)

    d = sub.add_parser("design", help="run MIM-DDE and write an RCQ parameter file")
    d.add_argument("--code", required=True, help=code_help)
    d.add_argument("--format", choices=["alist", "qc"])
    d.add_argument("--mode", choices=["bp", "ms"], required=True)
    d.add_argument("--bits", type=int, required=True)
    d.add_argument("--ebno", type=float, required=True)
    d.add_argument("--iters", type=int, default=50)
    d.add_argument("--ls", type=float, default=DEFAULT_LS)
    d.add_argument("--bins", type=int, default=DEFAULT_BINS)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_design)

    s = sub.add_parser("simulate", help="FER/BER sweep")
    s.add_argument("--code", required=True, help=code_help)
    s.add_argument("--format", choices=["alist", "qc"])
    s.add_argument("--decoder", choices=DECODERS, required=True)
    s.add_argument("--params")
    s.add_argument("--ebno", type=_float_list, required=True, help="comma- or space-separated dB values")
    s.add_argument("--max-frames", type=int, default=100_000)
    s.add_argument("--min-errors", type=int, default=100)
    s.add_argument("--max-iters", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--nc", type=_precision, help="override check-node precision (bits or 'inf')")
    s.add_argument("--nv", type=_precision, help="override variable-node precision (bits or 'inf')")
    s.add_argument("--timing", action="store_true", help="record wall-clock seconds (output is then not reproducible)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("cross-decode", help="re-decode decoder A's failures with decoder B")
    c.add_argument("--config-a", required=True)
    c.add_argument("--config-b", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_cross_decode)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    try:
        return args.func(args)
    except (SimConfigError, CodeParseError, DesignError, DegenerateAlphabetError, ValueError, OSError) as exc:
        print(f"rcqldpc {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
