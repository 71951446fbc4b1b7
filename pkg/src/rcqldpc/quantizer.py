"""Mutual-information-maximizing quantization of binary-input channels.

The central routine is :func:`hdq`, which places the ``2**m - 1`` region
boundaries of an LLR-sorted p.m.f. one bit level at a time, each boundary by
a single sequential scan (:func:`sts_boundary`).  :func:`dp_optimal_quantizer`
is the exact O(K N^2) dynamic program over contiguous partitions; it is much
slower and is kept as a reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pmf import BinaryJointDistribution, mirror_half

# Magnitude given to LLRs that are infinite because one bit value has no mass.
LLR_SAT = 25.0


class DegenerateAlphabetError(ValueError):
    """The source alphabet is too small to carry the requested number of bits."""


@dataclass(frozen=True)
class QuantizerSpec:
    """``2**m - 1`` boundaries into an LLR-sorted alphabet and their LLR thresholds.

    Region ``t`` holds source entries ``boundary_indices[t-1] <= j <
    boundary_indices[t]``.  ``thresholds`` are non-increasing; a real value
    ``v`` maps to the number of thresholds strictly greater than ``v``.
    """

    num_bits: int
    boundary_indices: np.ndarray
    thresholds: np.ndarray

    @property
    def levels(self) -> int:
        return 1 << self.num_bits


@dataclass(frozen=True)
class ReconstructionTable:
    values: np.ndarray

    def __len__(self):
        return self.values.size

    def __getitem__(self, t):
        return self.values[t]


@dataclass(frozen=True)
class QuantizationResult:
    spec: QuantizerSpec
    recon: ReconstructionTable
    quantized: BinaryJointDistribution
    mi_bits: float


def _xlogx_ratio(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elementwise ``p * log2(p / q)`` with ``0 * log 0 = 0``."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = p * np.log2(p / q)
    return np.where(p > 0, out, 0.0)


def _term(c0, c1, px0: float, px1: float):
    """Contribution ``sum_x P(x,c) log2(P(x,c) / (P(x) P(c)))`` of a cluster."""
    c0 = np.asarray(c0, dtype=np.float64)
    c1 = np.asarray(c1, dtype=np.float64)
    pc = c0 + c1
    return _xlogx_ratio(c0, px0 * pc) + _xlogx_ratio(c1, px1 * pc)


def mutual_info(P: BinaryJointDistribution) -> float:
    """I(X;T) in bits."""
    s = P.total()
    if abs(s - 1.0) > 1e-9:
        raise ValueError(f"distribution is not normalized (total mass {s!r})")
    px0, px1 = P.marginal()
    return float(np.sum(_term(P.p0, P.p1, px0, px1)))


def merge_cost(cluster_a, cluster_b, marginal=None) -> float:
    """Mutual-information loss (bits) from merging two clusters ``(p0, p1)``.

    Equal to ``term(a) + term(b) - term(a + b)``; the marginal cancels and is
    accepted only for interface symmetry.
    """
    a0, a1 = cluster_a
    b0, b1 = cluster_b
    return float(_merge_cost_vec(a0, a1, b0, b1))


def _log_ratio(num, den, x):
    # log(num/den) where num/den = 1 + x; log1p near 1, the plain ratio elsewhere.
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.abs(x) < 0.5, np.log1p(x), np.log(num / den))


def _merge_cost_vec(a0, a1, b0, b1):
    # a KL(p_a || mix) + b KL(p_b || mix).  Written this way no term is a
    # difference of two large cluster contributions, which would cancel
    # catastrophically when one cluster is much heavier than the other.
    a0, a1, b0, b1 = (np.asarray(v, dtype=np.float64) for v in (a0, a1, b0, b1))
    a = a0 + a1
    b = b0 + b1
    ab = a + b
    s0 = a0 + b0
    s1 = a1 + b1
    delta = a0 * b1 - a1 * b0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (
            np.where(a0 > 0, a0 * _log_ratio(a0 * ab, s0 * a, delta / (s0 * a)), 0.0)
            + np.where(a1 > 0, a1 * _log_ratio(a1 * ab, s1 * a, -delta / (s1 * a)), 0.0)
            + np.where(b0 > 0, b0 * _log_ratio(b0 * ab, s0 * b, -delta / (s0 * b)), 0.0)
            + np.where(b1 > 0, b1 * _log_ratio(b1 * ab, s1 * b, delta / (s1 * b)), 0.0)
        )
    t = np.where((a > 0) & (b > 0), t, 0.0)
    return np.maximum(t, 0.0) / np.log(2.0)


def sts_boundary(P: BinaryJointDistribution, a_l: int, a_r: int, min_width: int = 1) -> int:
    """Place one boundary inside ``[a_l, a_r)`` by sequential threshold searching.

    Candidates are scanned left to right.  The left cluster holds everything
    from ``a_l`` up to the candidate, the right cluster everything after it.
    The scan absorbs the candidate into the left cluster while merging it
    there is strictly cheaper than merging it into the right cluster, and
    returns the first candidate for which it is not.  The returned ``b``
    splits the interval into ``[a_l, b)`` and ``[b, a_r)``.

    ``min_width`` reserves that many entries on each side so that deeper
    levels of :func:`hdq` still have room to split.
    """
    if a_r - a_l < 2 * min_width or a_r - a_l < 2:
        raise DegenerateAlphabetError(
            f"interval [{a_l}, {a_r}) is too narrow for a boundary with {min_width} entries per side"
        )
    p0 = P.p0[a_l:a_r]
    p1 = P.p1[a_l:a_r]
    lo, hi = min_width, a_r - a_l - min_width
    if lo == hi:
        return a_l + lo
    # Left sums by forward cumsum, right sums by reverse cumsum: each side stays
    # accurate in its own tail.
    left0 = np.cumsum(p0)[lo - 1 : hi]
    left1 = np.cumsum(p1)[lo - 1 : hi]
    suf0 = np.concatenate([np.cumsum(p0[::-1])[::-1], [0.0]])
    suf1 = np.concatenate([np.cumsum(p1[::-1])[::-1], [0.0]])
    right0 = suf0[lo + 1 : hi + 2]
    right1 = suf1[lo + 1 : hi + 2]
    cand0 = p0[lo : hi + 1]
    cand1 = p1[lo : hi + 1]
    c_left = _merge_cost_vec(left0, left1, cand0, cand1)
    c_right = _merge_cost_vec(right0, right1, cand0, cand1)
    stop = np.flatnonzero(c_left >= c_right)
    return a_l + lo + (int(stop[0]) if stop.size else hi - lo)


def _saturate(values: np.ndarray) -> np.ndarray:
    """Replace ``±inf`` by a finite magnitude that keeps the ordering strict."""
    values = np.array(values, dtype=np.float64)
    finite = np.isfinite(values)
    big = LLR_SAT
    if finite.any():
        big = max(LLR_SAT, float(np.abs(values[finite]).max()) + 1.0)
    values[values == np.inf] = big
    values[values == -np.inf] = -big
    return values


def _build_result(P: BinaryJointDistribution, m: int, bounds: np.ndarray, symmetric: bool) -> QuantizationResult:
    bounds = np.asarray(bounds, dtype=np.int64)
    n = len(P)
    if symmetric:
        half = n // 2
        left = bounds[bounds < half]
        starts = np.concatenate([[0], left])
        q = mirror_half(np.add.reduceat(P.p0[:half], starts), np.add.reduceat(P.p1[:half], starts))
    else:
        starts = np.concatenate([[0], bounds])
        q = BinaryJointDistribution(np.add.reduceat(P.p0, starts), np.add.reduceat(P.p1, starts))
    llr = P.llr
    with np.errstate(invalid="ignore"):
        th = 0.5 * (llr[bounds - 1] + llr[bounds])
    # inf + (-inf) only occurs when a boundary separates two infinite LLRs of
    # opposite sign; the zero threshold is then exact.
    th = np.where(np.isnan(th), 0.0, th)
    recon = _saturate(q.llr)
    th = np.clip(th, -np.abs(recon).max(), np.abs(recon).max())
    spec = QuantizerSpec(m, bounds, th)
    return QuantizationResult(spec, ReconstructionTable(recon), q, mutual_info(q))


def hdq(P: BinaryJointDistribution, m: int) -> QuantizationResult:
    """Hierarchical dynamic quantization of ``P`` to ``m`` bits.

    Level 0 places the middle boundary over the whole alphabet; level ``i``
    splits each of the ``2**i`` current intervals once, independently.  For an
    exactly symmetric input of even size the middle boundary is the centre
    and only the left half is searched; its boundaries are then mirrored, so
    the quantizer, its thresholds and its reconstructions are symmetric.
    """
    n = len(P)
    levels = 1 << m
    if m < 1:
        raise ValueError("m must be at least 1")
    if n < levels:
        raise DegenerateAlphabetError(f"{n} source symbols cannot fill {levels} quantization regions")
    symmetric = n % 2 == 0 and P.is_symmetric()
    if symmetric:
        half = n // 2
        if half < levels // 2:
            raise DegenerateAlphabetError(f"half alphabet of {half} symbols is too small for {m} bits")
        intervals = [(0, half)]
        first_level = 1
    else:
        intervals = [(0, n)]
        first_level = 0
    found: list[int] = []
    for level in range(first_level, m):
        width = 1 << (m - 1 - level)
        nxt = []
        for a_l, a_r in intervals:
            b = sts_boundary(P, a_l, a_r, min_width=width)
            found.append(b)
            nxt += [(a_l, b), (b, a_r)]
        intervals = nxt
    if symmetric:
        left = np.sort(np.array(found, dtype=np.int64))
        bounds = np.concatenate([left, [n // 2], (n - left)[::-1]])
    else:
        bounds = np.sort(np.array(found, dtype=np.int64))
    return _build_result(P, m, bounds, symmetric)


def dp_optimal_quantizer(P: BinaryJointDistribution, m: int) -> QuantizationResult:
    """MI-optimal partition of the sorted alphabet into ``2**m`` contiguous regions."""
    n = len(P)
    levels = 1 << m
    if n < levels:
        raise DegenerateAlphabetError(f"{n} source symbols cannot fill {levels} quantization regions")
    px0, px1 = P.marginal()
    c0 = np.concatenate([[0.0], np.cumsum(P.p0)])
    c1 = np.concatenate([[0.0], np.cumsum(P.p1)])
    # gain[i, j]: contribution of the region [i, j), -inf unless i < j.
    r0 = np.maximum(c0[None, :] - c0[:, None], 0.0)
    r1 = np.maximum(c1[None, :] - c1[:, None], 0.0)
    gain = _term(r0, r1, px0, px1)
    gain[np.tril_indices(n + 1)] = -np.inf
    best = gain[0].copy()
    back = []
    for _ in range(1, levels):
        cand = best[:, None] + gain
        arg = np.argmax(cand, axis=0)
        best = cand[arg, np.arange(n + 1)]
        back.append(arg)
    bounds = []
    j = n
    for arg in reversed(back):
        j = int(arg[j])
        bounds.append(j)
    bounds = np.array(sorted(bounds), dtype=np.int64)
    symmetric = n % 2 == 0 and P.is_symmetric() and np.array_equal(bounds, n - bounds[::-1])
    return _build_result(P, m, bounds, symmetric)


def apply_quantizer(spec: QuantizerSpec, value, by_index: bool = False):
    """Map LLR values (or source indices) to quantizer symbols.

    A value equal to a threshold goes to the lower-indexed of the two symbols
    it separates.
    """
    if by_index:
        out = np.searchsorted(spec.boundary_indices, value, side="right")
    else:
        out = np.searchsorted(-spec.thresholds, -np.asarray(value, dtype=np.float64), side="left")
    return int(out) if np.ndim(out) == 0 else out
