"""Flooding message-passing decoders: BP and Min-Sum baselines and RCQ.

All decoders share the same schedule.  Every iteration updates all check
nodes, then all variable nodes; the posterior of each variable gives a hard
decision (bit 1 iff the posterior is negative) and decoding stops as soon as
the syndrome is zero.  The arithmetic lives in :mod:`rcqldpc.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _pykernels, kernels
from .dde import RcqParameters
from .ldpc import TannerGraph

# Integer bits (sign included) of every finite internal word.
INTEGER_BITS = 5


class ConfigurationError(ValueError):
    """Decoder parameters that cannot drive the given graph."""


@dataclass(frozen=True)
class FixedPointFormat:
    """Two's-complement word of ``total_bits`` with ``frac_bits`` fractional bits."""

    total_bits: int
    frac_bits: int

    def __post_init__(self):
        if not (0 <= self.frac_bits < self.total_bits <= 32):
            raise ValueError(f"need 0 <= frac_bits < total_bits <= 32, got {self.total_bits}, {self.frac_bits}")

    @classmethod
    def for_width(cls, total_bits: int) -> "FixedPointFormat":
        """Format with :data:`INTEGER_BITS` integer bits and the rest fractional."""
        return cls(int(total_bits), max(int(total_bits) - INTEGER_BITS, 0))

    @property
    def step(self) -> float:
        return 2.0 ** -self.frac_bits

    @property
    def min_value(self) -> float:
        return -(2.0 ** (self.total_bits - 1)) * self.step

    @property
    def max_value(self) -> float:
        return (2.0 ** (self.total_bits - 1) - 1) * self.step


def fixed_point_quantize(value, fmt: FixedPointFormat):
    """Round half away from zero onto the ``2**-f`` grid, then saturate.

    Examples
    --------
    >>> fixed_point_quantize(1.37, FixedPointFormat(8, 3))
    1.375
    >>> fixed_point_quantize(1e6, FixedPointFormat(12, 7))
    15.9921875
    """
    x = np.asarray(value, dtype=np.float64)
    scale = 2.0 ** fmt.frac_bits
    out = np.sign(x) * np.floor(np.abs(x) * scale + 0.5) / scale
    out = np.clip(out, fmt.min_value, fmt.max_value) + 0.0
    return float(out) if out.ndim == 0 else out


def _format(n) -> FixedPointFormat | None:
    return None if math.isinf(n) else FixedPointFormat.for_width(n)


def _range(fmt: FixedPointFormat | None):
    if fmt is None:
        return -math.inf, math.inf
    return fmt.min_value, fmt.max_value


def tanh_domain_cuts(thresholds, fmt: FixedPointFormat | None) -> np.ndarray:
    """Check-node thresholds moved to the domain of the tanh product.

    The check output is ``x = 2 atanh(p)`` for the extrinsic product ``p``,
    optionally rounded onto the grid of ``fmt`` before quantization.  Since
    both maps are monotone, "threshold ``th`` exceeds the (rounded) output"
    is equivalent to "cut ``c`` exceeds ``p``" for the cut returned here, so
    the decoder never evaluates ``atanh``.
    """
    th = np.asarray(thresholds, dtype=np.float64)
    if fmt is None:
        return np.tanh(0.5 * th)
    step = fmt.step
    # Largest grid value below th; the rounded output lies under th iff it is
    # at most this value, i.e. iff x is below the rounding midpoint above it.
    below = (np.ceil(th / step) - 1.0) * step
    mid = below + 0.5 * step
    cut = np.tanh(0.5 * mid)
    # Half away from zero: a negative midpoint itself rounds down to `below`.
    cut = np.where(mid < 0, np.nextafter(cut, np.inf), cut)
    cut = np.where(below < fmt.min_value, -2.0, cut)
    cut = np.where(below >= fmt.max_value, 2.0, cut)
    return cut


def boxplus_extrinsic(llrs) -> np.ndarray:
    """BP check-node outputs for one check: entry ``j`` combines all inputs but ``j``."""
    x = np.atleast_2d(np.asarray(llrs, dtype=np.float64))
    t = np.tanh(np.clip(x, -_pykernels.TANH_CLIP, _pykernels.TANH_CLIP) * 0.5)
    return 2.0 * np.arctanh(_pykernels._boxplus_ext(t))[0]


def minsum_extrinsic(llrs) -> np.ndarray:
    """Min-Sum check-node outputs for one check."""
    return _pykernels._minsum_ext(np.atleast_2d(np.asarray(llrs, dtype=np.float64)))[0]


def ms_check_symbols(symbols, m: int) -> np.ndarray:
    """ms-RCQ check-node outputs for one check, computed on m-bit symbols."""
    s = np.atleast_2d(np.asarray(symbols, dtype=np.int64))
    return _pykernels.ms_symbol_ext(s, 1 << m)[0]


@dataclass
class DecodeOutcome:
    success: bool
    iterations_used: int
    hard_decision: np.ndarray
    unsatisfied_checks: int


def _outcome(ret) -> DecodeOutcome:
    hard, used, ok, unsat = ret
    return DecodeOutcome(bool(ok), int(used), np.asarray(hard, dtype=np.uint8), int(unsat))


def _check_length(g: TannerGraph, x, what: str) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (g.n_vars,):
        raise ValueError(f"{what} has shape {x.shape}, expected ({g.n_vars},)")
    return x


def decode_bp_float(g: TannerGraph, llr_in, max_iters: int, backend=None) -> DecodeOutcome:
    """Sum-product decoding in double precision.

    Check outputs are ``2 atanh(prod tanh(l / 2))`` over the other inputs,
    with each input clipped to ``±19.07`` first.
    """
    llr = _check_length(g, llr_in, "llr_in")
    if not np.all(np.isfinite(llr)):
        raise ValueError("channel LLRs must be finite")
    return _outcome(kernels.get_backend(backend).decode_float(g.layout, llr, int(max_iters), False))


def decode_minsum_float(g: TannerGraph, llr_in, max_iters: int, backend=None) -> DecodeOutcome:
    """Plain Min-Sum (no scaling or offset) in double precision."""
    llr = _check_length(g, llr_in, "llr_in")
    if not np.all(np.isfinite(llr)):
        raise ValueError("channel LLRs must be finite")
    return _outcome(kernels.get_backend(backend).decode_float(g.layout, llr, int(max_iters), True))


class RcqDecoder:
    """An RCQ decoder bound to one graph and one parameter set.

    Construction validates the tables and puts the reconstructions on the
    internal fixed-point grids once, so repeated :meth:`decode` calls only
    run the message passing.
    """

    def __init__(self, g: TannerGraph, params: RcqParameters, max_iters: int | None = None, backend=None):
        self.graph = g
        self.params = params
        self.backend = kernels.get_backend(backend)
        m, nc, nv = params.precision
        k = 1 << m
        n_iter = len(params.iterations)
        if n_iter < 1:
            raise ConfigurationError("parameter set holds no iteration tables")
        if max_iters is not None:
            if max_iters < 1:
                raise ConfigurationError("max_iters must be at least 1")
            if max_iters > n_iter:
                raise ConfigurationError(f"{max_iters} iterations requested but tables exist for {n_iter}")
            n_iter = int(max_iters)
        self.iterations = n_iter
        ch_thr = np.asarray(params.channel_thresholds, dtype=np.float64)
        ch_recon = np.asarray(params.channel_recon, dtype=np.float64)
        if ch_thr.shape != (k - 1,) or ch_recon.shape != (k,):
            raise ConfigurationError(f"channel tables do not match m = {m}")
        self.nc_fmt = None if params.mode == "ms" else _format(nc)
        self.nv_fmt = _format(nv)
        var_recon, var_thr, check_recon, check_thr = [], [], [], []
        for i, it in enumerate(params.iterations[:n_iter]):
            if np.shape(it.var_recon) != (k,) or np.shape(it.var_thresholds) != (k - 1,):
                raise ConfigurationError(f"iteration {i}: variable tables do not match m = {m}")
            var_recon.append(it.var_recon)
            var_thr.append(it.var_thresholds)
            if params.mode == "bp":
                if it.check_recon is None or it.check_thresholds is None:
                    raise ConfigurationError(f"iteration {i}: bp mode needs check tables")
                if np.shape(it.check_recon) != (k,) or np.shape(it.check_thresholds) != (k - 1,):
                    raise ConfigurationError(f"iteration {i}: check tables do not match m = {m}")
                check_recon.append(it.check_recon)
                check_thr.append(it.check_thresholds)
        if params.mode == "ms":
            check_recon = np.zeros((n_iter, k))
            check_thr = np.zeros((n_iter, k - 1))
        self._ch_thr = ch_thr
        self._ch_recon = self._on_grid(ch_recon, self.nv_fmt)
        self._var_recon = self._on_grid(np.array(var_recon, dtype=np.float64), self.nv_fmt)
        self._var_thr = np.ascontiguousarray(var_thr, dtype=np.float64)
        check_recon = self._on_grid(np.array(check_recon, dtype=np.float64), self.nc_fmt)
        # Same guard as the float decoder: beyond it tanh rounds to exactly 1
        # and a product of such inputs would tie with the outermost cut.
        clipped = np.clip(check_recon, -_pykernels.TANH_CLIP, _pykernels.TANH_CLIP)
        self._check_tanh = np.ascontiguousarray(np.tanh(0.5 * clipped))
        self._check_cut = np.ascontiguousarray(tanh_domain_cuts(np.array(check_thr, dtype=np.float64), self.nc_fmt))

    @staticmethod
    def _on_grid(x, fmt):
        x = np.ascontiguousarray(x, dtype=np.float64)
        return x if fmt is None else np.ascontiguousarray(fixed_point_quantize(x, fmt))

    def channel_symbols(self, y) -> np.ndarray:
        """m-bit channel symbols; received values equal to a threshold take the lower index."""
        y = np.asarray(y, dtype=np.float64)
        return np.searchsorted(-self._ch_thr, -y, side="left").astype(np.int64)

    def decode(self, y) -> DecodeOutcome:
        y = _check_length(self.graph, y, "channel_obs")
        sym = self.channel_symbols(y)
        nv_lo, nv_hi = _range(self.nv_fmt)
        ret = self.backend.decode_rcq(
            self.graph.layout,
            sym,
            self._ch_recon,
            self._check_tanh,
            self._check_cut,
            self._var_recon,
            self._var_thr,
            self.params.mode == "ms",
            nv_lo,
            nv_hi,
        )
        return _outcome(ret)


def decode_rcq(g: TannerGraph, params: RcqParameters, channel_obs, max_iters=None, backend=None) -> DecodeOutcome:
    """Decode one received vector with an RCQ parameter set.

    Builds a throwaway :class:`RcqDecoder`; simulation loops should keep one.
    """
    return RcqDecoder(g, params, max_iters=max_iters, backend=backend).decode(channel_obs)
