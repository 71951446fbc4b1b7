"""Mutual-information-maximizing discrete density evolution (MIM-DDE).

Tracks the joint p.m.f. of a code bit and the m-bit message on an edge
through check and variable nodes, quantizing after every node with
:func:`~rcqldpc.quantizer.hdq`.  The quantizers and reconstructions found on
the way are the per-iteration tables of an RCQ decoder.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import kernels
from .channel import DEFAULT_BINS, DEFAULT_CLIP, ChannelParams, awgn_bin_edges, discretize_awgn
from .pmf import BinaryJointDistribution, canonicalize, mirror_half, positive_half, symmetric_from_half
from .quantizer import (
    DegenerateAlphabetError,
    QuantizationResult,
    _saturate,
    hdq,
    mutual_info,
)

log = logging.getLogger(__name__)

DEFAULT_LS = 1e-3


class DesignError(RuntimeError):
    """Density evolution could not produce a consistent set of tables."""


@dataclass(frozen=True)
class DegreeDistribution:
    """Edge-perspective degree distribution: ``{degree: fraction of edges}``."""

    lambda_coeffs: dict
    rho_coeffs: dict

    def __post_init__(self):
        for name, coeffs in (("lambda", self.lambda_coeffs), ("rho", self.rho_coeffs)):
            if not coeffs:
                raise ValueError(f"{name} distribution is empty")
            if any(int(d) < 2 for d in coeffs):
                raise ValueError(f"{name} distribution has a degree below 2: {sorted(coeffs)}")
            if abs(sum(float(v) for v in coeffs.values()) - 1.0) > 1e-9:
                raise ValueError(f"{name} coefficients do not sum to 1")
            if any(float(v) < 0 for v in coeffs.values()):
                raise ValueError(f"{name} coefficients must be non-negative")

    @classmethod
    def regular(cls, dv: int, dc: int) -> "DegreeDistribution":
        return cls({dv: 1.0}, {dc: 1.0})

    def design_rate(self) -> float:
        """``1 - (sum rho_i/i) / (sum lambda_i/i)``."""
        lam = sum(Fraction(float(v)) / int(d) for d, v in self.lambda_coeffs.items())
        rho = sum(Fraction(float(v)) / int(d) for d, v in self.rho_coeffs.items())
        return float(1 - rho / lam)


@dataclass(frozen=True)
class SignMagnitudeAlphabet:
    """Signed levels ``±1 .. ±2**(m-1)`` for the ``2**m`` symbols of a min-sum message.

    Symbol 0 is ``+2**(m-1)`` (most reliable zero), symbol ``2**m - 1`` is
    ``-2**(m-1)``; the two symbols at the centre are ``+1`` and ``-1``.
    """

    m: int

    @property
    def size(self) -> int:
        return 1 << self.m

    def levels(self) -> np.ndarray:
        half = self.size // 2
        t = np.arange(self.size)
        return np.where(t < half, half - t, -(t - half + 1))

    def symbol(self, level):
        level = np.asarray(level)
        half = self.size // 2
        return np.where(level > 0, half - level, half - 1 - level)

    def lut(self) -> np.ndarray:
        """``lut[a, b]``: symbol of ``sign(a) sign(b) min(|a|, |b|)``."""
        lv = self.levels()
        mag = np.minimum(np.abs(lv)[:, None], np.abs(lv)[None, :])
        sign = np.sign(lv)[:, None] * np.sign(lv)[None, :]
        return self.symbol(sign * mag).astype(np.int64)


def _combine(Pa, Pb, p0, p1, merge: bool) -> BinaryJointDistribution:
    sym = Pa.is_symmetric() and Pb.is_symmetric()
    if merge:
        return canonicalize(p0.ravel(), p1.ravel(), symmetric=sym)
    out = BinaryJointDistribution(p0.ravel(), p1.ravel()).normalized()
    return out.sorted()


def _halves(P: BinaryJointDistribution):
    h = len(P) // 2
    return P.p0[:h], P.p1[:h]


def check_conv_bp(Pa: BinaryJointDistribution, Pb: BinaryJointDistribution, merge: bool = True):
    """Joint p.m.f. of the XOR of two code bits and the pair of messages.

    With ``merge`` the product alphabet is sorted and entries with equal LLR
    are combined, which loses nothing.
    """
    if merge and _even_symmetric(Pa) and _even_symmetric(Pb):
        # The product of two symmetric alphabets is, as a multiset, two
        # copies of the block of positive-half pairs plus two bit-swapped
        # copies; the positive half of the result is one such block.
        a0, a1 = _halves(Pa)
        b0, b1 = _halves(Pb)
        return symmetric_from_half(np.outer(a0, b0) + np.outer(a1, b1), np.outer(a0, b1) + np.outer(a1, b0))
    p0 = np.outer(Pa.p0, Pb.p0) + np.outer(Pa.p1, Pb.p1)
    p1 = np.outer(Pa.p0, Pb.p1) + np.outer(Pa.p1, Pb.p0)
    return _combine(Pa, Pb, p0, p1, merge)


def var_conv(Pa: BinaryJointDistribution, Pb: BinaryJointDistribution, merge: bool = True):
    """Joint p.m.f. of a code bit and two independent observations of it.

    Assumes the uniform prior ``P(X) = (1/2, 1/2)``, so the entry LLRs add.
    """
    if merge and _even_symmetric(Pa) and _even_symmetric(Pb):
        # Pairs from the two positive halves, and mixed-sign pairs folded
        # onto the positive side by mirroring those with negative LLR.
        a0, a1 = _halves(Pa)
        b0, b1 = _halves(Pb)
        pp0, pp1 = np.outer(a0, b0), np.outer(a1, b1)
        mx0, mx1 = np.outer(a0, b1), np.outer(a1, b0)
        flip = mx0 < mx1
        mx0, mx1 = np.where(flip, mx1, mx0), np.where(flip, mx0, mx1)
        return symmetric_from_half(np.concatenate([pp0.ravel(), mx0.ravel()]),
                                    np.concatenate([pp1.ravel(), mx1.ravel()]))
    p0 = 2.0 * np.outer(Pa.p0, Pb.p0)
    p1 = 2.0 * np.outer(Pa.p1, Pb.p1)
    return _combine(Pa, Pb, p0, p1, merge)


def _even_symmetric(P: BinaryJointDistribution) -> bool:
    return len(P) % 2 == 0 and P.is_symmetric() and P.is_sorted()


def osa(P: BinaryJointDistribution, l_s: float) -> BinaryJointDistribution:
    """One-step annealing: merge runs of entries within ``l_s`` of the run's first LLR.

    A symmetric input is processed on its positive half and mirrored, so the
    output stays exactly symmetric.
    """
    llr = P.llr
    if not P.is_sorted():
        raise ValueError("osa needs a p.m.f. sorted by decreasing LLR")
    if P.is_symmetric() and len(P) % 2 == 0:
        p0h, p1h = positive_half(P.p0, P.p1)
        llr_h = llr[: p0h.size].copy()
        llr_h[-1] = np.log(p0h[-1]) - np.log(p1h[-1])
        starts = kernels.osa_starts(llr_h, float(l_s))
        return mirror_half(np.add.reduceat(p0h, starts), np.add.reduceat(p1h, starts))
    starts = kernels.osa_starts(llr, float(l_s))
    return BinaryJointDistribution(np.add.reduceat(P.p0, starts), np.add.reduceat(P.p1, starts))


def _symmetrize_fixed(p0: np.ndarray, p1: np.ndarray) -> BinaryJointDistribution:
    q0 = 0.5 * (p0 + p1[::-1])
    s = 2.0 * q0.sum()
    q0 = q0 / s
    return BinaryJointDistribution(q0, q0[::-1].copy())


def check_conv_ms(Pa: BinaryJointDistribution, Pb: BinaryJointDistribution, alphabet: SignMagnitudeAlphabet):
    """Min-sum check node density update on a fixed ``2**m`` symbol alphabet."""
    k = alphabet.size
    if len(Pa) != k or len(Pb) != k:
        raise ValueError(f"both inputs must have {k} symbols, got {len(Pa)} and {len(Pb)}")
    lut = alphabet.lut().ravel()
    p0 = np.outer(Pa.p0, Pb.p0) + np.outer(Pa.p1, Pb.p1)
    p1 = np.outer(Pa.p0, Pb.p1) + np.outer(Pa.p1, Pb.p0)
    q0 = np.bincount(lut, weights=p0.ravel(), minlength=k)
    q1 = np.bincount(lut, weights=p1.ravel(), minlength=k)
    if Pa.is_symmetric() and Pb.is_symmetric():
        return _symmetrize_fixed(q0, q1)
    s = q0.sum() + q1.sum()
    return BinaryJointDistribution(q0 / s, q1 / s)


def mixture(parts) -> BinaryJointDistribution:
    """``sum_i w_i P_i`` over the union of the alphabets, re-sorted."""
    parts = [(float(w), P) for w, P in parts if float(w) > 0]
    p0 = np.concatenate([w * P.p0 for w, P in parts])
    p1 = np.concatenate([w * P.p1 for w, P in parts])
    sym = all(P.is_symmetric() for _, P in parts)
    return canonicalize(p0, p1, symmetric=sym)


@dataclass
class IterationTables:
    var_recon: np.ndarray
    var_thresholds: np.ndarray
    check_recon: Optional[np.ndarray] = None
    check_thresholds: Optional[np.ndarray] = None


@dataclass
class RcqParameters:
    """Everything an RCQ decoder needs: channel tables plus one table set per iteration.

    ``precision`` is ``(m, nc, nv)``; ``math.inf`` stands for floating point.
    ``channel_thresholds`` are in the received-signal domain.
    """

    mode: str
    precision: tuple
    channel_thresholds: np.ndarray
    channel_recon: np.ndarray
    iterations: list
    design_point: Optional[ChannelParams] = None
    mi_trajectory: list = field(default_factory=list)
    osa_loss_bits: float = 0.0

    def __post_init__(self):
        if self.mode not in ("bp", "ms"):
            raise ValueError(f"mode must be 'bp' or 'ms', got {self.mode!r}")
        m, nc, nv = self.precision
        self.precision = (int(m), _prec(nc), _prec(nv))
        if self.mode == "ms" and self.precision[1] != self.precision[0]:
            raise ValueError("ms mode requires nc == m")

    @property
    def m(self) -> int:
        return self.precision[0]

    def with_precision(self, nc=None, nv=None) -> "RcqParameters":
        m, nc0, nv0 = self.precision
        out = RcqParameters(
            self.mode,
            (m, nc0 if nc is None else nc, nv0 if nv is None else nv),
            self.channel_thresholds,
            self.channel_recon,
            self.iterations,
            self.design_point,
            self.mi_trajectory,
            self.osa_loss_bits,
        )
        return out

    def to_json(self) -> str:
        m, nc, nv = self.precision
        doc = {
            "mode": self.mode,
            "precision": {"m": m, "nc": _prec_out(nc), "nv": _prec_out(nv)},
            "design_point": self.design_point.to_dict() if self.design_point else None,
            "channel": {
                "thresholds_y": list(map(float, self.channel_thresholds)),
                "recon_llr": list(map(float, self.channel_recon)),
            },
            "iterations": [],
            "mi_trajectory": list(map(float, self.mi_trajectory)),
        }
        for it in self.iterations:
            entry = {}
            if self.mode == "bp":
                entry["check_recon"] = list(map(float, it.check_recon))
                entry["check_thresholds"] = list(map(float, it.check_thresholds))
            entry["var_recon"] = list(map(float, it.var_recon))
            entry["var_thresholds"] = list(map(float, it.var_thresholds))
            doc["iterations"].append(entry)
        return _dump17(doc) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RcqParameters":
        doc = json.loads(text)
        missing = {"mode", "precision", "channel", "iterations"} - doc.keys()
        if missing:
            raise ValueError(f"parameter file lacks keys {sorted(missing)}")
        prec = doc["precision"]
        dp = doc.get("design_point")
        design_point = None
        if dp:
            design_point = ChannelParams(float(dp["sigma"]), float(dp["ebno_db"]), float(dp["rate"]))
        iters = []
        for entry in doc["iterations"]:
            iters.append(
                IterationTables(
                    var_recon=np.asarray(entry["var_recon"], dtype=np.float64),
                    var_thresholds=np.asarray(entry["var_thresholds"], dtype=np.float64),
                    check_recon=_opt_array(entry.get("check_recon")),
                    check_thresholds=_opt_array(entry.get("check_thresholds")),
                )
            )
        return cls(
            doc["mode"],
            (prec["m"], prec["nc"], prec["nv"]),
            np.asarray(doc["channel"]["thresholds_y"], dtype=np.float64),
            np.asarray(doc["channel"]["recon_llr"], dtype=np.float64),
            iters,
            design_point,
            list(doc.get("mi_trajectory", [])),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "RcqParameters":
        with open(path) as fh:
            return cls.from_json(fh.read())


def _opt_array(v):
    return None if v is None else np.asarray(v, dtype=np.float64)


def _prec(n):
    if n is None or n == "inf" or (isinstance(n, float) and math.isinf(n)):
        return math.inf
    return int(n)


def _prec_out(n):
    return "inf" if math.isinf(n) else int(n)


def _dump17(obj) -> str:
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_dump17(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_dump17(v) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError("non-finite value in parameter file")
        return "%.17g" % obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


class _OsaMeter:
    def __init__(self, l_s):
        self.l_s = l_s
        self.loss = 0.0
        self.calls = 0

    def __call__(self, P):
        out = osa(P, self.l_s)
        self.loss += max(mutual_info(P) - mutual_info(out), 0.0)
        self.calls += 1
        return out


def check_powers(Pv: BinaryJointDistribution, max_power: int, reduce) -> dict:
    """``{k: (Pv)^(check k)}`` for ``k = 1..max_power``, with ``reduce`` after each step."""
    powers = {1: Pv}
    cur = Pv
    for k in range(2, max_power + 1):
        cur = reduce(check_conv_bp(cur, Pv))
        powers[k] = cur
    return powers


def var_powers(Pc: BinaryJointDistribution, max_power: int, reduce) -> dict:
    powers = {0: None, 1: Pc}
    cur = Pc
    for k in range(2, max_power + 1):
        cur = reduce(var_conv(cur, Pc))
        powers[k] = cur
    return powers


def ms_check_powers(Pv, max_power, alphabet) -> dict:
    powers = {1: Pv}
    cur = Pv
    for k in range(2, max_power + 1):
        cur = check_conv_ms(cur, Pv, alphabet)
        powers[k] = cur
    return powers


def _quantize(P, m, what, iteration) -> QuantizationResult:
    try:
        return hdq(P, m)
    except DegenerateAlphabetError as exc:
        raise DesignError(f"iteration {iteration}: {what} quantization failed: {exc}") from exc


def design_rcq(
    deg: DegreeDistribution,
    channel: BinaryJointDistribution,
    mode: str,
    m: int,
    iters: int,
    l_s: float = DEFAULT_LS,
    *,
    y_edges: Optional[np.ndarray] = None,
    design_point: Optional[ChannelParams] = None,
    mi_tol: float = 1e-9,
) -> RcqParameters:
    """Run MIM-DDE for ``iters`` iterations and collect the RCQ tables.

    ``channel`` is the fine channel p.m.f. (e.g. from
    :func:`~rcqldpc.channel.discretize_awgn`).  When ``y_edges`` is given the
    channel thresholds are reported as received-signal values, taken from
    the bin edges at the channel quantizer's boundaries; otherwise they are
    LLR thresholds.
    """
    if mode not in ("bp", "ms"):
        raise ValueError(f"mode must be 'bp' or 'ms', got {mode!r}")
    if m < 2 or iters < 1:
        raise ValueError("need m >= 2 and at least one iteration")
    if not channel.is_sorted() or not channel.is_symmetric():
        raise ValueError("channel p.m.f. must be LLR-sorted and symmetric")
    meter = _OsaMeter(l_s)
    alphabet = SignMagnitudeAlphabet(m)
    lam = {int(d): float(v) for d, v in deg.lambda_coeffs.items() if float(v) > 0}
    rho = {int(d): float(v) for d, v in deg.rho_coeffs.items() if float(v) > 0}

    ch = _quantize(channel, m, "channel", 0)
    if y_edges is not None:
        ch_thresholds = np.asarray(y_edges, dtype=np.float64)[ch.spec.boundary_indices]
    else:
        ch_thresholds = ch.spec.thresholds
    P_ch = ch.quantized
    P_v = P_ch
    v_recon = ch.recon.values
    tables = []
    trajectory = []
    for i in range(iters):
        if mode == "bp":
            powers = check_powers(P_v, max(rho) - 1, meter)
            mix = mixture((w, powers[d - 1]) for d, w in rho.items())
            cq = _quantize(mix, m, "check node", i)
            P_c = cq.quantized
            c_thresholds, c_out_recon = cq.spec.thresholds, cq.recon.values
        else:
            powers = ms_check_powers(P_v, max(rho) - 1, alphabet)
            P_c = mixture_fixed((w, powers[d - 1]) for d, w in rho.items())
            c_thresholds, c_out_recon = None, _saturate(P_c.llr)
        vpow = var_powers(P_c, max(lam) - 1, meter)
        parts = [(w, vpow[d - 1]) for d, w in lam.items()]
        mix = mixture(parts)
        v_full = meter(var_conv(P_ch, mix))
        vq = _quantize(v_full, m, "variable node", i)
        tables.append(
            IterationTables(
                var_recon=np.asarray(c_out_recon, dtype=np.float64),
                var_thresholds=vq.spec.thresholds,
                check_recon=np.asarray(v_recon, dtype=np.float64) if mode == "bp" else None,
                check_thresholds=c_thresholds,
            )
        )
        P_v = vq.quantized
        v_recon = vq.recon.values
        trajectory.append(vq.mi_bits)
        log.debug("iteration %d: I(X;T) = %.12f, |T_v| = %d", i, vq.mi_bits, len(v_full))
        if i and trajectory[-1] < trajectory[-2] - mi_tol:
            raise DesignError(
                f"iteration {i}: mutual information fell from {trajectory[-2]!r} to {trajectory[-1]!r}"
            )
    params = RcqParameters(
        mode,
        (m, m if mode == "ms" else math.inf, math.inf),
        ch_thresholds,
        ch.recon.values,
        tables,
        design_point,
        trajectory,
        meter.loss,
    )
    return params


def mixture_fixed(parts) -> BinaryJointDistribution:
    """Weighted sum of p.m.f.s on one common fixed alphabet (no re-sorting)."""
    parts = [(float(w), P) for w, P in parts if float(w) > 0]
    p0 = sum(w * P.p0 for w, P in parts)
    p1 = sum(w * P.p1 for w, P in parts)
    if all(P.is_symmetric() for _, P in parts):
        return _symmetrize_fixed(p0, p1)
    s = p0.sum() + p1.sum()
    return BinaryJointDistribution(p0 / s, p1 / s)


def design_for_awgn(
    deg: DegreeDistribution,
    ebno_db: float,
    mode: str,
    m: int,
    iters: int,
    l_s: float = DEFAULT_LS,
    rate: Optional[float] = None,
    num_bins: int = DEFAULT_BINS,
    clip: float = DEFAULT_CLIP,
) -> RcqParameters:
    """:func:`design_rcq` on the discretized BI-AWGN channel at ``ebno_db``.

    ``rate`` defaults to the design rate of ``deg``.  Channel thresholds come
    out in the received-signal domain.
    """
    if rate is None:
        rate = deg.design_rate()
    cp = ChannelParams.from_ebno(ebno_db, rate)
    P = discretize_awgn(cp, num_bins, clip)
    edges = awgn_bin_edges(cp.sigma, num_bins, clip)
    return design_rcq(deg, P, mode, m, iters, l_s, y_edges=edges, design_point=cp)
