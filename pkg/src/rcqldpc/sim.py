"""Monte-Carlo FER/BER simulation of the decoders over BI-AWGN.

Every frame transmits the all-zero codeword.  The noise of frame ``k`` at
SNR index ``i`` comes from its own generator keyed by ``(seed, i, k)``, and
the stopping rule is evaluated in frame order, so the counts do not depend
on how frames are spread over worker processes.
"""

from __future__ import annotations

import csv
import json
import math
import multiprocessing as mp
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .channel import ChannelParams, frame_rng, sample_channel
from .dde import RcqParameters
from .decoder import RcqDecoder, decode_bp_float, decode_minsum_float
from .ldpc import TannerGraph, ieee80211n_path, load_code

DECODERS = ("bp-inf", "minsum-inf", "bp-rcq", "ms-rcq")

# Names accepted in place of a code file.
BUILTIN_CODES = {"ieee80211n-1296": ieee80211n_path}

CSV_HEADER = [
    "ebno_db",
    "frames",
    "bit_errors",
    "frame_errors",
    "ber",
    "fer",
    "undetected_frame_errors",
    "avg_iterations",
    "wall_seconds",
]

# Two-sided 95% normal quantile and the relative half-width we accept.
Z95 = 1.959963984540054
MAX_REL_HALFWIDTH = 0.2


class SimConfigError(ValueError):
    """A simulation configuration that cannot be run."""


def _precision_value(n):
    if n is None:
        return None
    if n == "inf" or (isinstance(n, float) and math.isinf(n)):
        return "inf"
    n = int(n)
    if n < 1:
        raise SimConfigError(f"precision must be positive, got {n}")
    return n


@dataclass
class SimConfig:
    """Inputs of one FER sweep.

    ``code`` is a file path or a name from :data:`BUILTIN_CODES`.  ``nc`` and
    ``nv`` override the internal precisions stored in the parameter file
    (an integer bit width or ``"inf"``).  With ``record_timing`` off the
    ``wall_seconds`` column is written as 0 so that output files are
    reproducible byte for byte.
    """

    code: str
    decoder: str
    ebno: list
    params: Optional[str] = None
    code_format: Optional[str] = None
    max_frames: int = 100_000
    min_frame_errors: int = 100
    max_iters: int = 50
    seed: int = 0
    workers: int = 1
    output: Optional[str] = None
    nc: Optional[object] = None
    nv: Optional[object] = None
    batch_frames: int = 32
    record_timing: bool = False

    def __post_init__(self):
        if self.decoder not in DECODERS:
            raise SimConfigError(f"decoder must be one of {', '.join(DECODERS)}; got {self.decoder!r}")
        self.ebno = [float(e) for e in np.atleast_1d(self.ebno)]
        if not self.ebno:
            raise SimConfigError("the Eb/N0 list is empty")
        for name in ("max_frames", "min_frame_errors", "max_iters", "workers", "batch_frames"):
            if int(getattr(self, name)) < 1:
                raise SimConfigError(f"{name} must be at least 1")
            setattr(self, name, int(getattr(self, name)))
        self.seed = int(self.seed)
        if not 0 <= self.seed < 2**64:
            raise SimConfigError("seed must fit in 64 unsigned bits")
        self.nc = _precision_value(self.nc)
        self.nv = _precision_value(self.nv)
        if self.decoder.endswith("-rcq") and not self.params:
            raise SimConfigError(f"decoder {self.decoder} needs a parameter file")

    @property
    def code_path(self) -> Path:
        if self.code in BUILTIN_CODES:
            return BUILTIN_CODES[self.code]()
        return Path(self.code)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise SimConfigError(f"unknown configuration keys {sorted(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise SimConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "SimConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SimConfigError(f"cannot read configuration {path}: {exc}") from exc
        return cls.from_dict(doc)


@dataclass
class SimRecord:
    ebno_db: float
    frames: int
    bit_errors: int
    frame_errors: int
    undetected_frame_errors: int
    total_iterations: int
    block_length: int
    wall_seconds: float = 0.0

    @property
    def detected_failures(self) -> int:
        return self.frame_errors - self.undetected_frame_errors

    @property
    def successes(self) -> int:
        return self.frames - self.frame_errors

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.block_length) if self.frames else 0.0

    @property
    def avg_iterations(self) -> float:
        return self.total_iterations / self.frames if self.frames else 0.0

    @property
    def fer_ci95_halfwidth(self) -> float:
        """Normal-approximation 95% half-width of the FER estimate."""
        if not self.frames:
            return math.inf
        p = self.fer
        return Z95 * math.sqrt(p * (1.0 - p) / self.frames)

    @property
    def confident(self) -> bool:
        """Whether the 95% half-width is within 20% of the FER."""
        return self.frame_errors > 0 and self.fer_ci95_halfwidth <= MAX_REL_HALFWIDTH * self.fer


@dataclass
class SimResult:
    config: SimConfig
    records: list = field(default_factory=list)
    n_vars: int = 0
    n_checks: int = 0


# -- decoder construction ---------------------------------------------------


def load_parameters(cfg: SimConfig) -> Optional[RcqParameters]:
    if not cfg.decoder.endswith("-rcq"):
        return None
    try:
        params = RcqParameters.load(cfg.params)
    except (OSError, ValueError, KeyError) as exc:
        raise SimConfigError(f"cannot load parameter file {cfg.params}: {exc}") from exc
    want = cfg.decoder.split("-")[0]
    if params.mode != want:
        raise SimConfigError(f"parameter file is for {params.mode}-RCQ but decoder is {cfg.decoder}")
    m = params.m
    nc = params.precision[1] if cfg.nc is None else (math.inf if cfg.nc == "inf" else cfg.nc)
    nv = params.precision[2] if cfg.nv is None else (math.inf if cfg.nv == "inf" else cfg.nv)
    if params.mode == "ms" and nc != m:
        raise SimConfigError("ms-RCQ has no internal check precision; nc must equal m")
    if len(params.iterations) < cfg.max_iters:
        raise SimConfigError(
            f"max_iters = {cfg.max_iters} but the parameter file has tables for {len(params.iterations)} iterations"
        )
    return params.with_precision(nc, nv)


def load_graph(cfg: SimConfig) -> TannerGraph:
    try:
        return load_code(cfg.code_path, cfg.code_format)
    except OSError as exc:
        raise SimConfigError(f"cannot read code file {cfg.code}: {exc}") from exc


def channel_for(cfg: SimConfig, g: TannerGraph, ebno_db: float) -> ChannelParams:
    return ChannelParams.from_ebno(ebno_db, g.rate)


def make_decoder(cfg: SimConfig, g: TannerGraph, params: Optional[RcqParameters], channel: ChannelParams):
    """``y -> DecodeOutcome`` for the decoder selected in ``cfg``."""
    scale = 2.0 / channel.sigma**2
    if cfg.decoder == "bp-inf":
        return lambda y: decode_bp_float(g, scale * y, cfg.max_iters)
    if cfg.decoder == "minsum-inf":
        return lambda y: decode_minsum_float(g, scale * y, cfg.max_iters)
    return RcqDecoder(g, params, max_iters=cfg.max_iters).decode


# -- frame loop ---------------------------------------------------------------

# Per-process state, filled once by _init_worker (or directly in-process).
_STATE: dict = {}


def _init_worker(cfg_dict, keep_frames):
    cfg = SimConfig.from_dict(cfg_dict)
    g = load_graph(cfg)
    params = load_parameters(cfg)
    _STATE.clear()
    _STATE.update(cfg=cfg, graph=g, params=params, keep=keep_frames, decoders={})


def _decoder_for(snr_idx):
    dec = _STATE["decoders"].get(snr_idx)
    if dec is None:
        cfg, g = _STATE["cfg"], _STATE["graph"]
        ch = channel_for(cfg, g, cfg.ebno[snr_idx])
        dec = (ch, make_decoder(cfg, g, _STATE["params"], ch))
        _STATE["decoders"][snr_idx] = dec
    return dec


def _run_chunk(snr_idx, start, stop):
    """Decode frames ``start..stop-1``; returns per-frame counters and failed frames."""
    cfg, g = _STATE["cfg"], _STATE["graph"]
    ch, decode = _decoder_for(snr_idx)
    zeros = np.zeros(g.n_vars, dtype=np.uint8)
    n = stop - start
    bits = np.zeros(n, dtype=np.int64)
    failed = np.zeros(n, dtype=bool)
    undetected = np.zeros(n, dtype=bool)
    iters = np.zeros(n, dtype=np.int64)
    kept = []
    for j, k in enumerate(range(start, stop)):
        y = sample_channel(zeros, ch, frame_rng(cfg.seed, snr_idx, k))
        out = decode(y)
        wrong = int(np.count_nonzero(out.hard_decision))
        bits[j] = wrong
        iters[j] = out.iterations_used
        failed[j] = not out.success
        undetected[j] = out.success and wrong > 0
        if _STATE["keep"] and (failed[j] or undetected[j]):
            kept.append((k, y, out.iterations_used))
    return bits, failed, undetected, iters, kept


def _chunks(cfg: SimConfig):
    for start in range(0, cfg.max_frames, cfg.batch_frames):
        yield start, min(start + cfg.batch_frames, cfg.max_frames)


def _simulate_snr(cfg: SimConfig, snr_idx: int, submit):
    """Accumulate chunks in frame order until the stopping rule fires."""
    rec = dict(frames=0, bit_errors=0, frame_errors=0, undetected=0, iterations=0)
    kept = []
    for bits, failed, undetected, iters, chunk_kept in submit(snr_idx, _chunks(cfg)):
        errors = failed | undetected
        need = cfg.min_frame_errors - rec["frame_errors"]
        cum = np.cumsum(errors)
        stop = len(errors)
        if cum.size and cum[-1] >= need:
            stop = int(np.searchsorted(cum, need)) + 1
        first = rec["frames"]
        rec["frames"] += stop
        rec["bit_errors"] += int(bits[:stop].sum())
        rec["frame_errors"] += int(errors[:stop].sum())
        rec["undetected"] += int(undetected[:stop].sum())
        rec["iterations"] += int(iters[:stop].sum())
        kept += [f for f in chunk_kept if f[0] < first + stop]
        if rec["frame_errors"] >= cfg.min_frame_errors:
            break
    return rec, kept


def _serial_submit(snr_idx, chunks):
    for start, stop in chunks:
        yield _run_chunk(snr_idx, start, stop)


def _pool_submitter(pool, window):
    def submit(snr_idx, chunks):
        pending = deque()
        chunks = iter(chunks)
        for start, stop in chunks:
            pending.append(pool.apply_async(_run_chunk, (snr_idx, start, stop)))
            if len(pending) >= window:
                break
        while pending:
            res = pending.popleft().get()
            nxt = next(chunks, None)
            if nxt is not None:
                pending.append(pool.apply_async(_run_chunk, (snr_idx, *nxt)))
            yield res
    return submit


def _sweep(cfg: SimConfig, keep_frames: bool):
    g = load_graph(cfg)
    load_parameters(cfg)
    # Build every decoder once up front so that configuration errors surface
    # before any frame is simulated.
    _init_worker(cfg.to_dict(), keep_frames)
    for i in range(len(cfg.ebno)):
        _decoder_for(i)
    records, kept_all = [], []
    pool = None
    if cfg.workers > 1:
        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
        pool = ctx.Pool(cfg.workers, initializer=_init_worker, initargs=(cfg.to_dict(), keep_frames))
        submit = _pool_submitter(pool, 2 * cfg.workers)
    else:
        submit = _serial_submit
    try:
        for i, ebno in enumerate(cfg.ebno):
            t0 = time.perf_counter()
            rec, kept = _simulate_snr(cfg, i, submit)
            wall = time.perf_counter() - t0 if cfg.record_timing else 0.0
            records.append(
                SimRecord(ebno, rec["frames"], rec["bit_errors"], rec["frame_errors"], rec["undetected"],
                          rec["iterations"], g.n_vars, wall)
            )
            kept_all.append(kept)
    finally:
        if pool is not None:
            pool.terminate()
            pool.join()
    return SimResult(cfg, records, g.n_vars, g.n_checks), kept_all


def run_fer_sweep(cfg: SimConfig) -> SimResult:
    """Simulate every Eb/N0 point of ``cfg``; writes results if ``cfg.output`` is set."""
    result, _ = _sweep(cfg, keep_frames=False)
    if cfg.output:
        write_results(result, cfg.output)
    return result


# -- output -------------------------------------------------------------------


def _g6(x: float) -> str:
    return f"{x:.6g}"


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_results(result: SimResult, path) -> Path:
    """Write the CSV table and its JSON provenance sidecar; returns the sidecar path."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in result.records:
            w.writerow([
                _g6(r.ebno_db), r.frames, r.bit_errors, r.frame_errors, _g6(r.ber), _g6(r.fer),
                r.undetected_frame_errors, _g6(r.avg_iterations), _g6(r.wall_seconds),
            ])
    side = {
        "config": result.config.to_dict(),
        "code": {"n_vars": result.n_vars, "n_checks": result.n_checks},
        "records": [
            {
                "ebno_db": r.ebno_db,
                "frames": r.frames,
                "frame_errors": r.frame_errors,
                "detected_failures": r.detected_failures,
                "undetected_frame_errors": r.undetected_frame_errors,
                "fer_ci95_halfwidth": r.fer_ci95_halfwidth if r.frames else None,
                "confident": r.confident,
            }
            for r in result.records
        ],
    }
    spath = sidecar_path(path)
    spath.write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    return spath


def read_results(path) -> list:
    """Rows of a results CSV as dicts with ints for the count columns."""
    ints = {"frames", "bit_errors", "frame_errors", "undetected_frame_errors"}
    with open(path, newline="") as fh:
        return [{k: (int(v) if k in ints else float(v)) for k, v in row.items()} for row in csv.DictReader(fh)]


# -- cross decoding -------------------------------------------------------------


@dataclass
class CrossDecodeReport:
    decoder_a: str
    decoder_b: str
    per_snr: list
    frames_file: Optional[str]

    @property
    def failures(self) -> int:
        return sum(p["failures_a"] for p in self.per_snr)

    @property
    def rescued(self) -> int:
        return sum(p["rescued_by_b"] for p in self.per_snr)

    @property
    def rescue_fraction(self) -> Optional[float]:
        """Share of A's failures that B decodes correctly; ``None`` when A never failed."""
        return self.rescued / self.failures if self.failures else None

    def to_dict(self) -> dict:
        return {
            "decoder_a": self.decoder_a,
            "decoder_b": self.decoder_b,
            "failures": self.failures,
            "rescued": self.rescued,
            "rescue_fraction": self.rescue_fraction,
            "per_snr": self.per_snr,
            "frames_file": self.frames_file,
        }


def cross_decode_experiment(cfg_a: SimConfig, cfg_b: SimConfig, out=None) -> CrossDecodeReport:
    """Re-decode every frame decoder A gets wrong with decoder B.

    A runs under its own stopping rule.  The noisy observations of its
    failed frames go to ``<out>.frames.npz`` (when ``out`` is given) together
    with their SNR and frame index, and the report is written to ``out`` as
    JSON.
    """
    if cfg_a.code_path.resolve() != cfg_b.code_path.resolve() or cfg_a.code_format != cfg_b.code_format:
        raise ValueError("both configurations must use the same code")
    if cfg_a.ebno != cfg_b.ebno:
        raise ValueError("both configurations must use the same Eb/N0 points")
    result_a, kept = _sweep(cfg_a, keep_frames=True)
    g = load_graph(cfg_b)
    params_b = load_parameters(cfg_b)
    per_snr = []
    ebno_col, index_col, ys, rescued_col = [], [], [], []
    for i, (rec, frames) in enumerate(zip(result_a.records, kept)):
        ch = channel_for(cfg_b, g, cfg_b.ebno[i])
        decode_b = make_decoder(cfg_b, g, params_b, ch)
        rescued = 0
        for k, y, _ in frames:
            out_b = decode_b(y)
            ok = out_b.success and not out_b.hard_decision.any()
            rescued += ok
            ebno_col.append(rec.ebno_db)
            index_col.append(k)
            ys.append(y)
            rescued_col.append(ok)
        per_snr.append({
            "ebno_db": rec.ebno_db,
            "frames_a": rec.frames,
            "failures_a": len(frames),
            "rescued_by_b": rescued,
        })
    frames_file = None
    if out is not None:
        out = Path(out)
        frames_file = str(out.with_name(out.name + ".frames.npz"))
        np.savez_compressed(
            frames_file,
            ebno_db=np.asarray(ebno_col, dtype=np.float64),
            frame_index=np.asarray(index_col, dtype=np.int64),
            y=np.asarray(ys, dtype=np.float64).reshape(len(ys), g.n_vars),
            rescued=np.asarray(rescued_col, dtype=bool),
            seed=np.uint64(cfg_a.seed),
        )
    report = CrossDecodeReport(cfg_a.decoder, cfg_b.decoder, per_snr, frames_file)
    if out is not None:
        Path(out).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return report
