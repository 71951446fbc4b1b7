import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from rcqldpc.channel import ChannelParams, discretize_awgn
from rcqldpc.pmf import BinaryJointDistribution, canonicalize, mirror_half
from rcqldpc.quantizer import (
    LLR_SAT,
    DegenerateAlphabetError,
    apply_quantizer,
    dp_optimal_quantizer,
    hdq,
    merge_cost,
    mutual_info,
    sts_boundary,
)

P4 = BinaryJointDistribution.from_pairs([(0.30, 0.02), (0.15, 0.08), (0.08, 0.15), (0.02, 0.30)]).normalized()


def random_sorted_pmf(rng, n):
    return canonicalize(rng.random(n) ** 2, rng.random(n) ** 2)


def random_biawgn(rng, max_bins=64):
    sigma = float(rng.uniform(0.4, 1.6))
    M = 2 * int(rng.integers(4, max_bins // 2 + 1))
    return discretize_awgn(ChannelParams.from_sigma(sigma), M)


def random_channel_pmf(rng, n):
    """BI-AWGN output probabilities over ``n`` bins with random edges."""
    sigma = rng.uniform(0.3, 2.0)
    edges = np.concatenate([[np.inf], np.sort(rng.uniform(-3, 3, n - 1))[::-1], [-np.inf]])
    p0 = 0.5 * (ndtr((edges[:-1] - 1) / sigma) - ndtr((edges[1:] - 1) / sigma))
    p1 = 0.5 * (ndtr((edges[:-1] + 1) / sigma) - ndtr((edges[1:] + 1) / sigma))
    return canonicalize(p0, p1)


def partition_mi(P, bounds):
    starts = np.concatenate([[0], bounds])
    q = BinaryJointDistribution(np.add.reduceat(P.p0, starts), np.add.reduceat(P.p1, starts))
    return mutual_info(q)


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


@pytest.mark.parametrize(
    "pairs, expected",
    [
        ([(0.5, 0), (0, 0.5)], 1.0),
        ([(0.25, 0.25), (0.25, 0.25)], 0.0),
        ([(0.45, 0.05), (0.05, 0.45)], 1 - h2(0.1)),
    ],
)
def test_mutual_info_examples(pairs, expected):
    assert mutual_info(BinaryJointDistribution.from_pairs(pairs)) == pytest.approx(expected, abs=1e-12)


def test_mutual_info_rejects_unnormalized():
    with pytest.raises(ValueError):
        mutual_info(BinaryJointDistribution.from_pairs([(0.5, 0.1), (0.1, 0.5)]))


def test_merge_cost_examples():
    assert merge_cost((0.2, 0.1), (0.1, 0.05), (0.5, 0.5)) == pytest.approx(0.0, abs=1e-15)
    assert merge_cost((0.25, 0.0), (0.0, 0.25), (0.5, 0.5)) == pytest.approx(0.5, abs=1e-14)
    assert merge_cost((0.0, 0.0), (0.3, 0.1)) == 0.0


def test_merge_cost_matches_mi_difference(rng):
    for _ in range(200):
        P = random_sorted_pmf(rng, 8)
        i, j = sorted(rng.choice(len(P), 2, replace=False))
        cost = merge_cost((P.p0[i], P.p1[i]), (P.p0[j], P.p1[j]), P.marginal())
        keep = [k for k in range(len(P)) if k not in (i, j)]
        merged = BinaryJointDistribution(
            np.append(P.p0[keep], P.p0[i] + P.p0[j]), np.append(P.p1[keep], P.p1[i] + P.p1[j])
        )
        assert cost == pytest.approx(mutual_info(P) - mutual_info(merged), abs=1e-12)


@settings(max_examples=200)
@given(st.floats(1e-9, 1), st.floats(0, 1), st.floats(1e-9, 1), st.floats(0, 1))
def test_merge_cost_nonnegative_and_zero_iff_equal_conditionals(a0, a1, b0, b1):
    c = merge_cost((a0, a1), (b0, b1))
    assert c >= 0
    if math.isclose(a0 * b1, a1 * b0, rel_tol=0, abs_tol=0):
        assert c == pytest.approx(0.0, abs=1e-15)
    elif abs(a0 * b1 - a1 * b0) > 1e-3:
        assert c > 0


def test_merge_cost_stable_for_unbalanced_clusters():
    # A tiny cluster against a huge one: the naive difference of terms cancels.
    a, b = (0.49, 0.01), (1e-9, 2e-9)
    full = BinaryJointDistribution.from_pairs([a, b, (0.01 - 1e-9, 0.49 - 2e-9)])
    merged = BinaryJointDistribution.from_pairs([(a[0] + b[0], a[1] + b[1]), (0.01 - 1e-9, 0.49 - 2e-9)])
    ref = mutual_info(full) - mutual_info(merged)
    assert merge_cost(a, b) == pytest.approx(ref, rel=1e-3)


def test_sts_examples():
    assert sts_boundary(P4, 1, 3) == 2
    assert sts_boundary(P4, 0, 4) == 2
    with pytest.raises(DegenerateAlphabetError):
        sts_boundary(P4, 2, 3)


def test_sts_near_best_single_boundary(rng):
    worst = 0.0
    for _ in range(300):
        P = random_channel_pmf(rng, 16)
        n = len(P)
        b = sts_boundary(P, 0, n)
        best = max(partition_mi(P, [c]) for c in range(1, n))
        worst = max(worst, best - partition_mi(P, [b]))
    assert worst <= 1e-4


def test_hdq_m1_example():
    q = hdq(P4, 1)
    assert list(q.spec.boundary_indices) == [2]
    assert np.allclose(q.quantized.pairs() * 1.1, [(0.45, 0.10), (0.10, 0.45)], atol=1e-15)
    assert q.mi_bits == pytest.approx(mutual_info(q.quantized), abs=1e-12)


def test_hdq_m2_sixteen_bins_close_to_dp():
    P = discretize_awgn(ChannelParams.from_ebno(0.9, 0.5), 16)
    assert hdq(P, 2).mi_bits >= dp_optimal_quantizer(P, 2).mi_bits - 1e-5


def test_hdq_degenerate_alphabet():
    with pytest.raises(DegenerateAlphabetError):
        hdq(P4, 3)


def test_dp_identity_partition():
    P = discretize_awgn(ChannelParams.from_sigma(0.8), 8)
    q = dp_optimal_quantizer(P, 3)
    assert list(q.spec.boundary_indices) == list(range(1, 8))
    assert q.mi_bits == pytest.approx(mutual_info(P), abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_dp_matches_exhaustive_partitions(seed):
    rng = np.random.default_rng(seed)
    P = random_sorted_pmf(rng, 12)
    assert len(P) == 12
    combos = list(itertools.combinations(range(1, 12), 3))
    assert len(combos) == 165
    best = max(partition_mi(P, list(c)) for c in combos)
    assert dp_optimal_quantizer(P, 2).mi_bits == pytest.approx(best, abs=1e-12)


def test_hdq_close_to_dp_on_random_symmetric_channels(rng):
    # 200 random BI-AWGN discretizations (random noise level and bin count).
    worst = 0.0
    for k in range(200):
        P = random_biawgn(rng)
        m = 1 + k % 2
        i_h = hdq(P, m).mi_bits
        i_d = dp_optimal_quantizer(P, m).mi_bits
        assert i_d >= i_h - 1e-12
        worst = max(worst, i_d - i_h)
    assert worst <= 1e-5


def test_dp_dominates_hdq_generally(rng):
    for _ in range(50):
        P = random_sorted_pmf(rng, int(rng.integers(8, 40)))
        for m in (1, 2, 3):
            if len(P) >= 1 << m + 1:
                assert dp_optimal_quantizer(P, m).mi_bits >= hdq(P, m).mi_bits - 1e-12


def test_data_processing(rng):
    for _ in range(40):
        P = random_biawgn(rng, 200)
        I = mutual_info(P)
        for m in (1, 2, 3, 4):
            assert hdq(P, m).mi_bits <= I + 1e-12


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_hdq_symmetry(m):
    P = discretize_awgn(ChannelParams.from_ebno(1.3, 0.5), 400)
    q = hdq(P, m)
    n = len(P)
    b = q.spec.boundary_indices
    assert np.array_equal(b, n - b[::-1])
    assert np.array_equal(q.recon.values, -q.recon.values[::-1])
    assert np.array_equal(q.spec.thresholds, -q.spec.thresholds[::-1])
    assert np.all(np.diff(q.recon.values) < 0)
    assert q.quantized.is_symmetric()


def test_saturated_reconstructions():
    P = BinaryJointDistribution.from_pairs([(0.4, 0), (0.1, 0.0), (0.0, 0.1), (0, 0.4)])
    q = hdq(P, 1)
    assert np.array_equal(q.recon.values, [LLR_SAT, -LLR_SAT])
    assert np.all(np.isfinite(q.spec.thresholds))


def test_quantized_regions_are_sums():
    P = discretize_awgn(ChannelParams.from_sigma(0.9), 100)
    q = hdq(P, 3)
    starts = np.concatenate([[0], q.spec.boundary_indices])
    assert np.allclose(q.quantized.p0, np.add.reduceat(P.p0, starts), atol=1e-15)


def test_apply_quantizer_ends_and_ties():
    q = hdq(discretize_awgn(ChannelParams.from_sigma(0.9), 100), 3)
    th = q.spec.thresholds
    assert apply_quantizer(q.spec, 1e9) == 0
    assert apply_quantizer(q.spec, -1e9) == 7
    for j, t in enumerate(th):
        # A value on a threshold takes the lower-indexed symbol.
        assert apply_quantizer(q.spec, t) == j
        assert apply_quantizer(q.spec, np.nextafter(t, -np.inf)) == j + 1
    idx = apply_quantizer(q.spec, np.arange(100), by_index=True)
    assert idx[0] == 0 and idx[-1] == 7
    assert np.all(np.diff(idx) >= 0)


@given(st.lists(st.floats(-30, 30), min_size=2, max_size=30))
def test_apply_quantizer_monotone(values):
    q = hdq(discretize_awgn(ChannelParams.from_sigma(0.7), 64), 2)
    v = np.sort(np.array(values))[::-1]
    s = apply_quantizer(q.spec, v)
    assert np.all(np.diff(s) >= 0)
