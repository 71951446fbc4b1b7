"""BPSK over AWGN: parameter conversion, fine discretization and sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .pmf import BinaryJointDistribution, mirror_half

DEFAULT_BINS = 2000
DEFAULT_CLIP = 6.0


def sigma_from_ebno(ebno_db: float, rate: float) -> float:
    """Noise standard deviation for unit-energy BPSK at the given Eb/N0."""
    if not rate > 0 or rate > 1:
        raise ValueError(f"code rate must lie in (0, 1], got {rate!r}")
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebno_db / 10.0)))


def ebno_from_sigma(sigma: float, rate: float) -> float:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not rate > 0 or rate > 1:
        raise ValueError(f"code rate must lie in (0, 1], got {rate!r}")
    return 10.0 * math.log10(1.0 / (2.0 * rate * sigma**2))


@dataclass(frozen=True)
class ChannelParams:
    sigma: float
    ebno_db: float
    rate: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        expected = sigma_from_ebno(self.ebno_db, self.rate)
        if not math.isclose(self.sigma, expected, rel_tol=1e-9):
            raise ValueError(
                f"sigma={self.sigma} inconsistent with Eb/N0={self.ebno_db} dB at rate {self.rate}"
            )

    @classmethod
    def from_ebno(cls, ebno_db: float, rate: float) -> "ChannelParams":
        return cls(sigma_from_ebno(ebno_db, rate), float(ebno_db), float(rate))

    @classmethod
    def from_sigma(cls, sigma: float, rate: float = 1.0) -> "ChannelParams":
        return cls(float(sigma), ebno_from_sigma(sigma, rate), float(rate))

    def to_dict(self) -> dict:
        return {"ebno_db": self.ebno_db, "rate": self.rate, "sigma": self.sigma}


def _std_normal_interval(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """P(lo < Z <= hi) for standard normal Z, accurate in both tails."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    upper = lo >= 0
    lower = hi <= 0
    out = 1.0 - ndtr(lo) - ndtr(-hi)
    out = np.where(upper, ndtr(-lo) - ndtr(-hi), out)
    out = np.where(lower, ndtr(hi) - ndtr(lo), out)
    return np.maximum(out, 0.0)


def awgn_bin_edges(sigma: float, num_bins: int, clip: float = DEFAULT_CLIP) -> np.ndarray:
    """The ``num_bins + 1`` bin edges in y, in decreasing order.

    Bin ``j`` of :func:`discretize_awgn` covers ``(edges[j+1], edges[j]]``;
    the two outermost bins extend to infinity.
    """
    span = 1.0 + clip * sigma
    if num_bins % 2:
        return np.linspace(span, -span, num_bins + 1)
    # Mirror the positive half so that edges[M - j] == -edges[j] exactly.
    pos = np.linspace(span, 0.0, num_bins // 2 + 1)[:-1]
    return np.concatenate([pos, [0.0], -pos[::-1]])


def discretize_awgn(
    params: ChannelParams, num_bins: int = DEFAULT_BINS, clip: float = DEFAULT_CLIP
) -> BinaryJointDistribution:
    """Uniformly bin the BI-AWGN output into a joint p.m.f. sorted by LLR.

    The first half is computed from the ``x = 0`` (``s = +1``) density and the
    second half mirrored from it, so ``p0[j] == p1[M-1-j]`` holds exactly.
    Tail mass beyond ``±(1 + clip*sigma)`` is folded into the end bins.
    """
    if num_bins % 2 or num_bins < 4:
        raise ValueError(f"bin count must be even and at least 4, got {num_bins}")
    sigma = params.sigma
    edges = awgn_bin_edges(sigma, num_bins, clip)
    hi = edges[:-1].copy()
    lo = edges[1:].copy()
    hi[0] = np.inf
    lo[-1] = -np.inf
    half = num_bins // 2
    p0 = 0.5 * _std_normal_interval((lo[:half] - 1.0) / sigma, (hi[:half] - 1.0) / sigma)
    p1 = 0.5 * _std_normal_interval((lo[:half] + 1.0) / sigma, (hi[:half] + 1.0) / sigma)
    s = 2.0 * (p0.sum() + p1.sum())
    return mirror_half(p0 / s, p1 / s)


def frame_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one frame, derived by hashing ``(seed, *key)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, key)])))


def sample_channel(codeword, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """BPSK-modulate ``codeword`` (``s(x) = 1 - 2x``) and add Gaussian noise."""
    x = np.asarray(codeword)
    if x.size and (x.min() < 0 or x.max() > 1):
        raise ValueError("codeword bits must be 0 or 1")
    return (1.0 - 2.0 * x) + params.sigma * rng.standard_normal(x.shape)
