"""Compare the compiled and numpy kernel backends on the 802.11n code.

Decodes the same frames with each backend, checks that the decisions agree
and prints throughput.  Usage::

    python3 benchmarks/bench_decoders.py --frames 200 --ebno 1.6 --bp-params bp.json --ms-params ms.json
"""

import argparse
import time

import numpy as np

from rcqldpc import kernels
from rcqldpc.channel import ChannelParams, frame_rng, sample_channel
from rcqldpc.dde import RcqParameters, design_for_awgn
from rcqldpc.decoder import RcqDecoder, decode_bp_float, decode_minsum_float
from rcqldpc.ldpc import degree_distributions, ieee80211n_1296


def time_decoder(decode, frames):
    t0 = time.perf_counter()
    out = [decode(y) for y in frames]
    return time.perf_counter() - t0, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=200)
    ap.add_argument("--ebno", type=float, default=1.6)
    ap.add_argument("--iters", type=int, default=50)
    ap.add_argument("--bp-params", help="bp-RCQ parameter file; designed at 0.9 dB if omitted")
    ap.add_argument("--ms-params", help="ms-RCQ parameter file; designed at 0.9 dB if omitted")
    args = ap.parse_args(argv)

    backends = kernels.available()
    if "cython" not in backends:
        print("compiled kernels not built; only the numpy backend is available")

    g = ieee80211n_1296()
    cp = ChannelParams.from_ebno(args.ebno, g.rate)
    frames = [sample_channel(np.zeros(g.n_vars, np.uint8), cp, frame_rng(1, 0, k)) for k in range(args.frames)]
    llr_scale = 2.0 / cp.sigma**2

    params = {}
    for mode, path in (("bp", args.bp_params), ("ms", args.ms_params)):
        if path:
            params[mode] = RcqParameters.load(path)
        else:
            print(f"designing {mode}-RCQ tables at 0.9 dB ...", flush=True)
            params[mode] = design_for_awgn(degree_distributions(g), 0.9, mode, 4, args.iters)

    cases = {
        "bp-inf": lambda b: (lambda y: decode_bp_float(g, llr_scale * y, args.iters, backend=b)),
        "minsum": lambda b: (lambda y: decode_minsum_float(g, llr_scale * y, args.iters, backend=b)),
        "bp-rcq": lambda b: RcqDecoder(g, params["bp"], max_iters=args.iters, backend=b).decode,
        "ms-rcq": lambda b: RcqDecoder(g, params["ms"], max_iters=args.iters, backend=b).decode,
    }
    print(f"{'decoder':8s} {'backend':8s} {'frames/s':>10s} {'speedup':>8s}")
    for name, make in cases.items():
        results = {}
        for b in backends:
            secs, out = time_decoder(make(b), frames)
            results[b] = (secs, out)
        base = results["python"][0]
        for b, (secs, _) in results.items():
            print(f"{name:8s} {b:8s} {len(frames) / secs:10.1f} {base / secs:8.1f}x")
        if len(results) == 2:
            a, c = results["python"][1], results["cython"][1]
            same = all(np.array_equal(x.hard_decision, y.hard_decision) and x.iterations_used == y.iterations_used for x, y in zip(a, c))
            print(f"{name:8s} backends agree on all frames: {same}")


if __name__ == "__main__":
    main()
