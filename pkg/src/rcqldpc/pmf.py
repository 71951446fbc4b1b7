"""Joint probability mass functions between a code bit and a discrete message."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Adjacent entries whose LLRs differ by no more than this are the same point.
LLR_TIE_TOL = 1e-12


def _llr(p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(p0) - np.log(p1)


@dataclass(frozen=True, eq=False)
class BinaryJointDistribution:
    """Joint p.m.f. ``P(X, T)`` for a binary code bit ``X``.

    Entry ``j`` carries the masses ``p0[j] = P(X=0, T=j)`` and
    ``p1[j] = P(X=1, T=j)``.  Distributions produced by this package are kept
    sorted by decreasing LLR ``ln(p0/p1)``, most reliable "0" first.
    """

    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        p0 = np.ascontiguousarray(self.p0, dtype=np.float64).reshape(-1)
        p1 = np.ascontiguousarray(self.p1, dtype=np.float64).reshape(-1)
        if p0.shape != p1.shape:
            raise ValueError("p0 and p1 must have the same length")
        if np.any(p0 < 0) or np.any(p1 < 0):
            raise ValueError("probability masses must be non-negative")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)

    @classmethod
    def from_pairs(cls, pairs) -> "BinaryJointDistribution":
        arr = np.asarray(pairs, dtype=np.float64).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    def __len__(self) -> int:
        return self.p0.size

    def __repr__(self) -> str:
        return f"BinaryJointDistribution(size={len(self)}, mass={self.total():.15g})"

    @property
    def llr(self) -> np.ndarray:
        """Natural-log LLR of every entry (``±inf`` where one mass is zero)."""
        return _llr(self.p0, self.p1)

    @property
    def mass(self) -> np.ndarray:
        return self.p0 + self.p1

    def pairs(self) -> np.ndarray:
        return np.column_stack([self.p0, self.p1])

    def total(self) -> float:
        return float(self.p0.sum() + self.p1.sum())

    def marginal(self) -> tuple[float, float]:
        return float(self.p0.sum()), float(self.p1.sum())

    def is_sorted(self) -> bool:
        llr = self.llr
        if np.any(np.isnan(llr)):
            return False
        return bool(np.all(llr[:-1] >= llr[1:]))

    def is_symmetric(self) -> bool:
        """Exact bit symmetry: ``p0[j] == p1[N-1-j]`` for every ``j``."""
        return bool(np.array_equal(self.p0, self.p1[::-1]))

    def normalized(self) -> "BinaryJointDistribution":
        s = self.total()
        return BinaryJointDistribution(self.p0 / s, self.p1 / s)

    def sorted(self) -> "BinaryJointDistribution":
        order = np.argsort(-self.llr, kind="stable")
        return BinaryJointDistribution(self.p0[order], self.p1[order])


def mirror_half(p0h: np.ndarray, p1h: np.ndarray) -> BinaryJointDistribution:
    """Build the exactly symmetric p.m.f. whose first half is ``(p0h, p1h)``."""
    return BinaryJointDistribution(
        np.concatenate([p0h, p1h[::-1]]), np.concatenate([p1h, p0h[::-1]])
    )


def positive_half(p0: np.ndarray, p1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return the LLR > 0 half of a sorted p.m.f. known to be symmetric.

    Zero-LLR mass (within :data:`LLR_TIE_TOL`) is split evenly so that it
    lands as one ``(z/4, z/4)`` entry at the end of the half; the mirror adds
    the matching entry on the other side.
    """
    llr = _llr(p0, p1)
    pos = llr > LLR_TIE_TOL
    zero = np.abs(llr) <= LLR_TIE_TOL
    p0h, p1h = p0[pos], p1[pos]
    z = float(p0[zero].sum() + p1[zero].sum())
    if z > 0:
        p0h = np.append(p0h, z / 4)
        p1h = np.append(p1h, z / 4)
    return p0h, p1h


def canonicalize(p0, p1, symmetric: bool = False) -> BinaryJointDistribution:
    """Sort by LLR, merge tied entries, drop empty entries and renormalize.

    With ``symmetric`` set, the input is known to be bit-symmetric up to
    rounding and the result is rebuilt from its positive half so that the
    symmetry holds exactly.
    """
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    keep = (p0 + p1) > 0
    p0, p1 = p0[keep], p1[keep]
    llr = _llr(p0, p1)
    # Entries with equal LLR are merged below, so the sort need not be stable.
    order = np.argsort(-llr)
    p0, p1, llr = p0[order], p1[order], llr[order]
    if p0.size > 1:
        with np.errstate(invalid="ignore"):
            gap = llr[:-1] - llr[1:]
        same = (gap <= LLR_TIE_TOL) | (llr[:-1] == llr[1:])
        if np.any(same):
            starts = np.flatnonzero(np.concatenate([[True], ~same]))
            p0 = np.add.reduceat(p0, starts)
            p1 = np.add.reduceat(p1, starts)
    if symmetric:
        p0h, p1h = positive_half(p0, p1)
        s = 2.0 * float(p0h.sum() + p1h.sum())
        return mirror_half(p0h / s, p1h / s)
    s = float(p0.sum() + p1.sum())
    return BinaryJointDistribution(p0 / s, p1 / s)


def symmetric_from_half(p0, p1) -> BinaryJointDistribution:
    """Canonical symmetric p.m.f. from unnormalized entries of its LLR >= 0 half.

    Each entry stands for itself and its mirror image.  Entries within
    :data:`LLR_TIE_TOL` of zero LLR are pooled into the ``(z/4, z/4)`` centre
    entry, as in :func:`positive_half`.
    """
    p0 = np.asarray(p0, dtype=np.float64).ravel()
    p1 = np.asarray(p1, dtype=np.float64).ravel()
    keep = (p0 + p1) > 0
    p0, p1 = p0[keep], p1[keep]
    llr = _llr(p0, p1)
    zero = np.abs(llr) <= LLR_TIE_TOL
    if np.any(llr[~zero] < 0):
        raise ValueError("entries must have non-negative LLR")
    w = 0.5 * float(p0[zero].sum() + p1[zero].sum())
    pos = ~zero
    p0, p1, llr = p0[pos], p1[pos], llr[pos]
    order = np.argsort(-llr)
    p0, p1, llr = p0[order], p1[order], llr[order]
    if p0.size > 1:
        with np.errstate(invalid="ignore"):
            gap = llr[:-1] - llr[1:]
        same = (gap <= LLR_TIE_TOL) | (llr[:-1] == llr[1:])
        if np.any(same):
            starts = np.flatnonzero(np.concatenate([[True], ~same]))
            p0 = np.add.reduceat(p0, starts)
            p1 = np.add.reduceat(p1, starts)
    if w > 0:
        p0 = np.append(p0, w)
        p1 = np.append(p1, w)
    s = 2.0 * float(p0.sum() + p1.sum())
    return mirror_half(p0 / s, p1 / s)
