"""Pure numpy versions of the hot kernels.

Each node update is vectorized over all nodes of one degree.  Arithmetic is
ordered exactly as in the compiled kernels (left-to-right sums, prefix and
suffix products) so both backends agree on decisions.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

TANH_CLIP = 19.07


def osa_starts(llr, l_s):
    llr = np.asarray(llr, dtype=np.float64)
    n = llr.size
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    starts = [0]
    i = 0
    neg = -llr
    while True:
        # First entry farther than l_s below the anchor; nan-safe because
        # canonical inputs never hold nan.
        anchor = llr[i]
        if np.isinf(anchor):
            j = i + 1
            while j < n and llr[j] == anchor:
                j += 1
        else:
            j = int(np.searchsorted(neg, -(anchor - l_s), side="right"))
            j = max(j, i + 1)
        if j >= n:
            break
        starts.append(j)
        i = j
    return np.asarray(starts, dtype=np.int64)


def _syndrome_ok(layout, hard):
    bits = hard[layout.edge_var]
    for edges in layout.check_groups.values():
        if np.any(np.bitwise_xor.reduce(bits[edges], axis=1)):
            return False
    return True


def _unsat(layout, hard):
    bits = hard[layout.edge_var]
    return int(sum(np.bitwise_xor.reduce(bits[e], axis=1).sum() for e in layout.check_groups.values()))


def _boxplus_ext(t):
    """Extrinsic tanh products along axis 1 via prefix/suffix products."""
    d = t.shape[1]
    pre = np.cumprod(t, axis=1)
    suf = np.cumprod(t[:, ::-1], axis=1)[:, ::-1]
    ext = np.ones_like(t)
    if d > 1:
        ext[:, 1:] = pre[:, :-1]
        ext[:, :-1] = ext[:, :-1] * suf[:, 1:]
    else:
        ext[:] = 0.0
    return ext


def _minsum_ext(x):
    a = np.abs(x)
    rows = np.arange(x.shape[0])
    idx = np.argmin(a, axis=1)
    m1 = a[rows, idx]
    a2 = a.copy()
    a2[rows, idx] = np.inf
    m2 = a2.min(axis=1)
    mag = np.where(np.arange(x.shape[1])[None, :] == idx[:, None], m2[:, None], m1[:, None])
    neg = x < 0
    par = np.bitwise_xor.reduce(neg, axis=1)
    out_neg = neg ^ par[:, None]
    return np.where(out_neg, -mag, mag)


def ms_symbol_ext(s, k):
    """Min-Sum on sign-magnitude symbols, extrinsic along axis 1.

    Symbol ``t < k/2`` has magnitude ``k/2 - t`` and sign +; symbol
    ``t >= k/2`` has magnitude ``t - k/2 + 1`` and sign -.
    """
    half = k // 2
    neg = s >= half
    mag = np.where(neg, s - half + 1, half - s)
    rows = np.arange(s.shape[0])
    idx = np.argmin(mag, axis=1)
    m1 = mag[rows, idx]
    mag2 = mag.copy()
    mag2[rows, idx] = k
    m2 = mag2.min(axis=1)
    omag = np.where(np.arange(s.shape[1])[None, :] == idx[:, None], m2[:, None], m1[:, None])
    oneg = neg ^ np.bitwise_xor.reduce(neg, axis=1)[:, None]
    return np.where(oneg, half - 1 + omag, half - omag)


def _var_update(layout, ch, c2v):
    """Posterior per variable and extrinsic per edge, summed left to right."""
    total = np.empty(layout.n_vars)
    ext = np.empty_like(c2v)
    for vars_, edges in layout.var_groups.values():
        s = ch[vars_].copy()
        for k in range(edges.shape[1]):
            s += c2v[edges[:, k]]
        total[vars_] = s
        ext[edges] = s[:, None] - c2v[edges]
    return total, ext


def decode_float(layout, llr, max_iters, minsum):
    llr = np.asarray(llr, dtype=np.float64)
    v2c = llr[layout.edge_var].copy()
    c2v = np.empty_like(v2c)
    hard = np.zeros(layout.n_vars, dtype=np.uint8)
    for it in range(1, max_iters + 1):
        for edges in layout.check_groups.values():
            x = v2c[edges]
            if minsum:
                c2v[edges] = _minsum_ext(x)
            else:
                t = np.tanh(np.clip(x, -TANH_CLIP, TANH_CLIP) * 0.5)
                c2v[edges] = 2.0 * np.arctanh(_boxplus_ext(t))
        total, v2c = _var_update(layout, llr, c2v)
        hard = ((total < 0) | ((total == 0) & (llr < 0))).astype(np.uint8)
        if _syndrome_ok(layout, hard):
            return hard, it, True, 0
    return hard, max_iters, False, _unsat(layout, hard)


def _quantize(thr, x):
    return np.searchsorted(-thr, -x, side="left")


def _quantize_split(thr, x, upper):
    # Ties go to the lower index, or to the higher one where `upper` is set.
    return np.where(upper, np.searchsorted(-thr, -x, side="right"), np.searchsorted(-thr, -x, side="left"))


def decode_rcq(layout, ch_sym, ch_recon, check_tanh, check_cut, var_recon, var_thr, ms, nv_lo, nv_hi):
    n_iter = var_recon.shape[0]
    k = var_recon.shape[1]
    half = k // 2
    ch_sym = np.asarray(ch_sym, dtype=np.int64)
    ch = ch_recon[ch_sym]
    # Ties follow the channel decision, which keeps the decoder odd-symmetric.
    chneg = ch_sym >= half
    edge_neg = chneg[layout.edge_var]
    v2c = ch_sym[layout.edge_var].copy()
    c2v = np.empty_like(v2c)
    hard = np.zeros(layout.n_vars, dtype=np.uint8)
    for i in range(n_iter):
        for edges in layout.check_groups.values():
            s = v2c[edges]
            if ms:
                c2v[edges] = ms_symbol_ext(s, k)
            else:
                c2v[edges] = _quantize(check_cut[i], _boxplus_ext(check_tanh[i][s]))
        rv = var_recon[i][c2v]
        total, ext = _var_update(layout, ch, rv)
        ext = np.clip(ext, nv_lo, nv_hi)
        posterior = np.clip(total, nv_lo, nv_hi)
        hard = ((posterior < 0) | ((posterior == 0) & chneg)).astype(np.uint8)
        if _syndrome_ok(layout, hard):
            return hard, i + 1, True, 0
        v2c = _quantize_split(var_thr[i], ext, edge_neg)
    return hard, n_iter, False, _unsat(layout, hard)
