import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcqldpc.channel import ChannelParams, discretize_awgn
from rcqldpc.dde import (
    DegreeDistribution,
    DesignError,
    RcqParameters,
    SignMagnitudeAlphabet,
    check_conv_bp,
    check_conv_ms,
    design_for_awgn,
    design_rcq,
    osa,
    var_conv,
)
from rcqldpc.pmf import BinaryJointDistribution, canonicalize, mirror_half
from rcqldpc.quantizer import hdq, mutual_info

PAIR = BinaryJointDistribution.from_pairs([(0.4, 0.1), (0.1, 0.4)])


def same_multiset(P, Q, tol=1e-12):
    return len(P) == len(Q) and np.allclose(P.pairs(), Q.pairs(), atol=tol, rtol=0)


def random_pmf(rng, n):
    return canonicalize(rng.random(n), rng.random(n))


def random_symmetric(rng, n):
    a, b = rng.random(n), rng.random(n)
    return canonicalize(np.concatenate([a, b]), np.concatenate([b, a]), symmetric=True)


def single_pair(llr):
    # Symmetric two-entry p.m.f. whose positive entry has the given LLR.
    p, q = 0.5 / (1 + math.exp(-llr)), 0.5 / (1 + math.exp(llr))
    return BinaryJointDistribution.from_pairs([(p, q), (q, p)])


def test_check_conv_known_bits():
    out = check_conv_bp(BinaryJointDistribution([1.0], [0.0]), BinaryJointDistribution([0.0], [1.0]))
    assert np.array_equal(out.pairs(), [[0.0, 1.0]])


def test_check_conv_pair_example():
    out = check_conv_bp(PAIR, PAIR, merge=False)
    assert np.allclose(np.sort(out.p0), [0.08, 0.08, 0.17, 0.17], atol=1e-15)
    assert np.allclose(np.sort(out.p1), [0.08, 0.08, 0.17, 0.17], atol=1e-15)
    merged = check_conv_bp(PAIR, PAIR)
    assert np.allclose(merged.pairs(), [(0.34, 0.16), (0.16, 0.34)], atol=1e-15)


@settings(max_examples=200)
@given(st.floats(-25, 25), st.floats(-25, 25))
def test_check_conv_matches_boxplus(l1, l2):
    out = check_conv_bp(single_pair(l1), single_pair(l2))
    # 2 atanh(tanh(l1/2) tanh(l2/2)) in a form that stays accurate near |t| = 1.
    ref = np.logaddexp(0.0, l1 + l2) - np.logaddexp(l1, l2)
    if abs(l1) < 5 and abs(l2) < 5:
        assert ref == pytest.approx(2 * math.atanh(math.tanh(l1 / 2) * math.tanh(l2 / 2)), abs=1e-12)
    lo = out.llr[0]
    # The merged output holds one pair; its positive entry carries |ref|.
    assert len(out) <= 2
    if len(out) == 2:
        assert lo == pytest.approx(abs(ref), abs=1e-12)
    else:
        assert ref == pytest.approx(0.0, abs=1e-12)


def test_var_conv_pair_example():
    out = var_conv(PAIR, PAIR, merge=False)
    assert np.allclose(out.pairs(), [(0.32, 0.02), (0.08, 0.08), (0.08, 0.08), (0.02, 0.32)], atol=1e-15)


def test_var_conv_llrs_add(rng):
    for _ in range(20):
        Pa, Pb = random_pmf(rng, 5), random_pmf(rng, 4)
        out = var_conv(Pa, Pb, merge=False)
        sums = np.sort((Pa.llr[:, None] + Pb.llr[None, :]).ravel())[::-1]
        assert np.allclose(out.llr, sums, atol=1e-12)


def test_var_conv_with_no_information_keeps_llrs(rng):
    flat = BinaryJointDistribution.from_pairs([(0.25, 0.25), (0.25, 0.25)])
    P = random_pmf(rng, 7)
    assert np.allclose(var_conv(P, flat).llr, P.llr, atol=1e-12)


@pytest.mark.parametrize("conv", [check_conv_bp, var_conv])
def test_convolutions_commutative_associative(conv, rng):
    for _ in range(10):
        a, b, c = random_pmf(rng, 3), random_pmf(rng, 4), random_pmf(rng, 3)
        assert same_multiset(conv(a, b), conv(b, a))
        assert same_multiset(conv(conv(a, b), c), conv(a, conv(b, c)))


@pytest.mark.parametrize("conv", [check_conv_bp, var_conv])
def test_convolutions_normalized_and_symmetric(conv, rng):
    for _ in range(20):
        a, b = random_symmetric(rng, 5), random_symmetric(rng, 6)
        out = conv(a, b)
        assert abs(out.total() - 1) <= 1e-12
        assert out.is_symmetric() and out.is_sorted()
        a, b = random_pmf(rng, 5), random_pmf(rng, 6)
        assert abs(conv(a, b, merge=False).total() - 1) <= 1e-12


@pytest.mark.parametrize("conv", [check_conv_bp, var_conv])
def test_symmetric_fast_path_matches_full_product(conv, rng):
    for _ in range(20):
        a, b = random_symmetric(rng, 7), random_symmetric(rng, 5)
        full = canonicalize(conv(a, b, merge=False).p0, conv(a, b, merge=False).p1)
        assert same_multiset(conv(a, b), full, tol=1e-14)


def test_osa_examples():
    P = canonicalize(*np.array([single_pair(2.0).pairs()[0], single_pair(1.9995).pairs()[0],
                                single_pair(1.9995).pairs()[1], single_pair(2.0).pairs()[1]]).T)
    assert len(osa(P, 1e-3)) == 2
    Q = random_pmf(np.random.default_rng(1), 10)
    assert same_multiset(osa(Q, 0.0), Q, tol=0)


def test_osa_rejects_unsorted():
    with pytest.raises(ValueError):
        osa(BinaryJointDistribution.from_pairs([(0.1, 0.4), (0.4, 0.1)]), 1e-3)


def test_osa_anchor_rule():
    # Gaps 0.6 + 0.6 from the anchor: the third entry is 1.2 away and starts a new cluster.
    llrs = [3.0, 2.4, 1.8]
    p1 = np.array([1 / (1 + math.exp(l)) for l in llrs]) / 3
    P = BinaryJointDistribution(p1 * np.exp(llrs), p1).normalized()
    assert len(osa(P, 1.0)) == 2


def test_osa_loss_nonnegative_and_symmetric(rng):
    P = random_symmetric(rng, 200)
    out = osa(P, 0.05)
    assert out.is_symmetric() and out.is_sorted()
    assert mutual_info(P) - mutual_info(out) >= -1e-15


def test_ms_conv_certain_inputs():
    alpha = SignMagnitudeAlphabet(3)
    strong = BinaryJointDistribution(np.eye(8)[0], np.zeros(8))
    out = check_conv_ms(strong, strong, alpha)
    assert out.p0[0] == pytest.approx(1.0) and out.p1.sum() == 0


def test_ms_conv_weak_input_dominates(rng):
    alpha = SignMagnitudeAlphabet(3)
    weak = BinaryJointDistribution(np.eye(8)[3] * 0.7 + np.eye(8)[4] * 0.1, np.eye(8)[3] * 0.05 + np.eye(8)[4] * 0.15)
    other = random_symmetric(rng, 4)
    assert len(other) == 8
    out = check_conv_ms(weak, other, alpha)
    assert out.mass[[0, 1, 2, 5, 6, 7]].sum() == 0.0


def test_ms_conv_brute_force_m2(rng):
    alpha = SignMagnitudeAlphabet(2)
    lv = alpha.levels()
    for _ in range(10):
        a, b = random_pmf(rng, 4), random_pmf(rng, 4)
        if len(a) != 4 or len(b) != 4:
            continue
        q0, q1 = np.zeros(4), np.zeros(4)
        for i, j in itertools.product(range(4), repeat=2):
            level = np.sign(lv[i]) * np.sign(lv[j]) * min(abs(lv[i]), abs(lv[j]))
            t = int(np.flatnonzero(lv == level)[0])
            q0[t] += a.p0[i] * b.p0[j] + a.p1[i] * b.p1[j]
            q1[t] += a.p0[i] * b.p1[j] + a.p1[i] * b.p0[j]
        out = check_conv_ms(a, b, alpha)
        assert np.allclose(out.p0, q0 / (q0.sum() + q1.sum()), atol=1e-15)
        assert np.allclose(out.p1, q1 / (q0.sum() + q1.sum()), atol=1e-15)


def test_ms_conv_alphabet_mismatch():
    with pytest.raises(ValueError):
        check_conv_ms(PAIR, PAIR, SignMagnitudeAlphabet(2))


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_sign_magnitude_alphabet(m):
    alpha = SignMagnitudeAlphabet(m)
    lv = alpha.levels()
    half = 1 << (m - 1)
    assert lv[0] == half and lv[-1] == -half
    assert np.all(np.diff(lv) < 0)
    assert sorted(np.abs(lv[lv > 0])) == sorted(np.abs(lv[lv < 0])) == list(range(1, half + 1))
    assert np.array_equal(alpha.symbol(lv), np.arange(alpha.size))
    assert np.array_equal(lv, -lv[::-1])


def test_degree_distribution_validation():
    with pytest.raises(ValueError):
        DegreeDistribution({1: 0.5, 2: 0.5}, {6: 1.0})
    with pytest.raises(ValueError):
        DegreeDistribution({3: 0.9}, {6: 1.0})
    assert DegreeDistribution.regular(3, 6).design_rate() == pytest.approx(0.5)


def population_de_error(sigma, dv, dc, iters=200, n=200_000, seed=0):
    """Sampled BP density evolution; returns the final error fraction."""
    rng = np.random.default_rng(seed)
    ch = lambda: 2 / sigma**2 * (1 + sigma * rng.standard_normal(n))
    v = ch()
    for _ in range(iters):
        t = np.ones(n)
        for _ in range(dc - 1):
            t *= np.tanh(np.clip(v[rng.integers(0, n, n)], -40, 40) / 2)
        c = 2 * np.arctanh(np.clip(t, -1 + 1e-16, 1 - 1e-16))
        v = ch() + sum(c[rng.integers(0, n, n)] for _ in range(dv - 1))
        err = np.mean(v < 0)
        if err == 0:
            return 0.0
    return float(err)


@pytest.fixture(scope="module")
def design36():
    deg = DegreeDistribution.regular(3, 6)
    return {mode: design_for_awgn(deg, 1.5, mode, 4, 50) for mode in ("bp", "ms")}


def test_regular36_design_below_threshold(design36):
    sigma = ChannelParams.from_ebno(1.5, 0.5).sigma
    assert population_de_error(sigma, 3, 6) == 0.0
    for params in design36.values():
        traj = np.array(params.mi_trajectory)
        assert len(traj) == 50 and len(params.iterations) == 50
        first = int(np.argmax(traj > 0.999))
        assert traj[first] > 0.999
        assert np.all(np.diff(traj[: first + 1]) > 0)
        assert np.all(np.diff(traj) >= -1e-9)


def test_design_tables_symmetric(design36):
    for params in design36.values():
        assert np.array_equal(params.channel_recon, -params.channel_recon[::-1])
        assert np.allclose(params.channel_thresholds, -params.channel_thresholds[::-1], atol=1e-15)
        for it in params.iterations:
            assert np.array_equal(it.var_recon, -it.var_recon[::-1])
            assert np.array_equal(it.var_thresholds, -it.var_thresholds[::-1])
            if params.mode == "bp":
                assert np.array_equal(it.check_recon, -it.check_recon[::-1])
                assert np.array_equal(it.check_thresholds, -it.check_thresholds[::-1])
            else:
                assert it.check_recon is None and it.check_thresholds is None
    assert design36["ms"].precision == (4, 4, math.inf)


def test_single_iteration_design():
    deg = DegreeDistribution.regular(3, 6)
    cp = ChannelParams.from_ebno(1.5, 0.5)
    P = discretize_awgn(cp, 2000)
    params = design_rcq(deg, P, "bp", 4, 1, 1e-3)
    assert len(params.iterations) == 1 and len(params.mi_trajectory) == 1
    # Unroll by hand: channel hdq, check powers, variable side, hdq.
    Pch = hdq(P, 4).quantized
    c = Pch
    for _ in range(4):
        c = osa(check_conv_bp(c, Pch), 1e-3)
    Pc = hdq(c, 4).quantized
    v = osa(var_conv(Pc, Pc), 1e-3)
    v = osa(var_conv(Pch, v), 1e-3)
    assert params.mi_trajectory[0] == pytest.approx(hdq(v, 4).mi_bits, abs=1e-12)


def test_design_rejects_bad_input():
    deg = DegreeDistribution.regular(3, 6)
    P = discretize_awgn(ChannelParams.from_sigma(0.8), 100)
    with pytest.raises(ValueError):
        design_rcq(deg, P, "xx", 4, 5)
    with pytest.raises(ValueError):
        design_rcq(deg, P, "bp", 4, 0)
    with pytest.raises(DesignError):
        design_rcq(deg, discretize_awgn(ChannelParams.from_sigma(0.8), 8), "bp", 4, 3)


def test_parameter_json_round_trip(design36, tmp_path):
    for params in design36.values():
        path = tmp_path / f"{params.mode}.json"
        params.save(path)
        doc = json.loads(path.read_text())
        assert set(doc) == {"mode", "precision", "design_point", "channel", "iterations", "mi_trajectory"}
        assert doc["precision"]["nv"] == "inf"
        back = RcqParameters.load(path)
        assert back.precision == params.precision
        assert np.array_equal(back.channel_thresholds, params.channel_thresholds)
        for a, b in zip(back.iterations, params.iterations):
            assert np.array_equal(a.var_recon, b.var_recon)
            assert np.array_equal(a.var_thresholds, b.var_thresholds)
        assert back.mi_trajectory == params.mi_trajectory
        assert back.to_json() == params.to_json()


def test_parameter_file_errors(tmp_path):
    with pytest.raises(ValueError):
        RcqParameters.from_json('{"mode": "bp"}')
    with pytest.raises(ValueError):
        RcqParameters("ms", (4, 3, "inf"), np.zeros(15), np.zeros(16), [])


@pytest.mark.slow
def test_wifi_design_tables(wifi_bp_params, wifi_ms_params):
    for params in (wifi_bp_params, wifi_ms_params):
        assert len(params.iterations) == 50
        for it in params.iterations:
            assert np.array_equal(it.var_recon, -it.var_recon[::-1])
        assert np.all(np.diff(params.mi_trajectory) >= -1e-9)


def test_osa_loss_small_on_wifi_design(wifi_code):
    from rcqldpc.ldpc import degree_distributions

    params = design_for_awgn(degree_distributions(wifi_code), 0.9, "bp", 4, 3)
    assert params.osa_loss_bits < 1e-6
