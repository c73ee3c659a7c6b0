"""numba @njit implementations of the hot kernels.

Semantics must match `_numpy_kernels` exactly (up to float summation
order). All parallel kernels write each output element from a single
thread, so results are deterministic for a fixed dtype and backend.

Flat signature layout: level k occupies entries [2^k - 1, 2^{k+1} - 1),
words over {x, y} in lexicographic order (x before y), first letter most
significant.
"""

import numpy as np
import numba
from numba import njit, prange

# the bundled TBB is too old on some hosts; omp avoids the fallback warning
if numba.config.THREADING_LAYER == "default":
    numba.config.THREADING_LAYER = "omp"


# ---------------------------------------------------------------------------
# truncated tensor-algebra kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _segment_signature_into(out, dx, dy, level):
    out[0] = 1.0
    if level >= 1:
        out[1] = dx
        out[2] = dy
    for k in range(2, level + 1):
        ok = (1 << k) - 1
        okm = (1 << (k - 1)) - 1
        inv = 1.0 / k
        for p in range(1 << (k - 1)):
            v = out[okm + p] * inv
            out[ok + 2 * p] = v * dx
            out[ok + 2 * p + 1] = v * dy


@njit(cache=True)
def segment_signature_flat(dx, dy, level):
    out = np.empty(2 ** (level + 1) - 1, dtype=np.float64)
    _segment_signature_into(out, dx, dy, level)
    return out


@njit(cache=True)
def chen_concat_flat(a, b, level):
    out = np.zeros(2 ** (level + 1) - 1, dtype=a.dtype)
    for k in range(level + 1):
        ok = (1 << k) - 1
        for i in range(k + 1):
            j = k - i
            oi = (1 << i) - 1
            oj = (1 << j) - 1
            nj = 1 << j
            for p in range(1 << i):
                av = a[oi + p]
                base = ok + p * nj
                for q in range(nj):
                    out[base + q] += av * b[oj + q]
    return out


@njit(cache=True)
def _exp_mul_inplace(sig, pw, level):
    # sig <- sig (x) pw where pw is a single-segment signature. Descending
    # levels keep the not-yet-updated lower levels available on the right.
    for k in range(level, 0, -1):
        ok = (1 << k) - 1
        for i in range(k):
            j = k - i
            oi = (1 << i) - 1
            oj = (1 << j) - 1
            nj = 1 << j
            for p in range(1 << i):
                av = sig[oi + p]
                base = ok + p * nj
                for q in range(nj):
                    sig[base + q] += av * pw[oj + q]


@njit(cache=True)
def path_signature_flat(pts, level):
    m = 2 ** (level + 1) - 1
    sig = np.zeros(m, dtype=np.float64)
    sig[0] = 1.0
    pw = np.empty(m, dtype=np.float64)
    for s in range(pts.shape[0] - 1):
        dx = pts[s + 1, 0] - pts[s, 0]
        dy = pts[s + 1, 1] - pts[s, 1]
        _segment_signature_into(pw, dx, dy, level)
        _exp_mul_inplace(sig, pw, level)
    return sig


@njit(cache=True)
def windowed_signatures_flat(pts, level, delta):
    # delta >= 1: window [i - delta, i + delta] clipped to the stroke.
    # delta < 0: growing prefix window [0, i].
    n = pts.shape[0]
    m = 2 ** (level + 1) - 1
    out = np.zeros((n, m), dtype=np.float64)
    pw = np.empty(m, dtype=np.float64)
    if delta < 0:
        sig = np.zeros(m, dtype=np.float64)
        sig[0] = 1.0
        out[0, :] = sig
        for i in range(1, n):
            dx = pts[i, 0] - pts[i - 1, 0]
            dy = pts[i, 1] - pts[i - 1, 1]
            _segment_signature_into(pw, dx, dy, level)
            _exp_mul_inplace(sig, pw, level)
            out[i, :] = sig
        return out
    for i in range(n):
        lo = i - delta
        if lo < 0:
            lo = 0
        hi = i + delta
        if hi > n - 1:
            hi = n - 1
        row = out[i]
        row[0] = 1.0
        for s in range(lo, hi):
            dx = pts[s + 1, 0] - pts[s, 0]
            dy = pts[s + 1, 1] - pts[s, 1]
            _segment_signature_into(pw, dx, dy, level)
            _exp_mul_inplace(row, pw, level)
    return out


# ---------------------------------------------------------------------------
# feature-map painting
# ---------------------------------------------------------------------------

@njit(cache=True)
def paint_maps_last(maps, px, py, vals):
    for i in range(px.shape[0]):
        x = px[i]
        y = py[i]
        for c in range(maps.shape[0]):
            maps[c, y, x] = vals[i, c]


@njit(cache=True)
def paint_maps_maxmag(maps, px, py, vals):
    for i in range(px.shape[0]):
        x = px[i]
        y = py[i]
        for c in range(maps.shape[0]):
            v = vals[i, c]
            if abs(v) > abs(maps[c, y, x]):
                maps[c, y, x] = v


# ---------------------------------------------------------------------------
# CNN kernels (valid convolution, stride 1; 2x2/2 max pooling)
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True, fastmath=True)
def conv2d_forward(x, w, b):
    bsz, cin, h, wid = x.shape
    cout = w.shape[0]
    k = w.shape[2]
    ho = h - k + 1
    wo = wid - k + 1
    out = np.empty((bsz, cout, ho, wo), dtype=x.dtype)
    for t in prange(bsz * cout):
        bi = t // cout
        oc = t % cout
        o = out[bi, oc]
        bv = b[oc]
        for oy in range(ho):
            for ox in range(wo):
                o[oy, ox] = bv
        for ic in range(cin):
            xc = x[bi, ic]
            for ky in range(k):
                for kx in range(k):
                    wv = w[oc, ic, ky, kx]
                    for oy in range(ho):
                        xrow = xc[oy + ky]
                        orow = o[oy]
                        for ox in range(wo):
                            orow[ox] += wv * xrow[ox + kx]
    return out


@njit(cache=True, parallel=True, fastmath=True)
def conv2d_input_grad(dy, w, h, wid):
    bsz, cout, ho, wo = dy.shape
    cin = w.shape[1]
    k = w.shape[2]
    dx = np.zeros((bsz, cin, h, wid), dtype=dy.dtype)
    for t in prange(bsz * cin):
        bi = t // cin
        ic = t % cin
        dxl = dx[bi, ic]
        for oc in range(cout):
            dyl = dy[bi, oc]
            for ky in range(k):
                for kx in range(k):
                    wv = w[oc, ic, ky, kx]
                    for oy in range(ho):
                        drow = dxl[oy + ky]
                        yrow = dyl[oy]
                        for ox in range(wo):
                            drow[ox + kx] += wv * yrow[ox]
    return dx


@njit(cache=True, parallel=True, fastmath=True)
def conv2d_param_grad(x, dy, k):
    bsz, cin, h, wid = x.shape
    cout = dy.shape[1]
    ho = dy.shape[2]
    wo = dy.shape[3]
    dw = np.zeros((cout, cin, k, k), dtype=x.dtype)
    db = np.zeros(cout, dtype=x.dtype)
    for oc in prange(cout):
        acc_b = db[oc]
        for bi in range(bsz):
            dyl = dy[bi, oc]
            for oy in range(ho):
                for ox in range(wo):
                    acc_b += dyl[oy, ox]
            for ic in range(cin):
                xc = x[bi, ic]
                for ky in range(k):
                    for kx in range(k):
                        acc = dw[oc, ic, ky, kx]
                        for oy in range(ho):
                            xrow = xc[oy + ky]
                            yrow = dyl[oy]
                            for ox in range(wo):
                                acc += yrow[ox] * xrow[ox + kx]
                        dw[oc, ic, ky, kx] = acc
        db[oc] = acc_b
    return dw, db


@njit(cache=True, parallel=True)
def maxpool2_forward(x):
    bsz, c, h, wid = x.shape
    ho = h // 2
    wo = wid // 2
    out = np.empty((bsz, c, ho, wo), dtype=x.dtype)
    arg = np.empty((bsz, c, ho, wo), dtype=np.uint8)
    for t in prange(bsz * c):
        bi = t // c
        ci = t % c
        xc = x[bi, ci]
        o = out[bi, ci]
        a = arg[bi, ci]
        for oy in range(ho):
            for ox in range(wo):
                iy = oy * 2
                ix = ox * 2
                best = xc[iy, ix]
                bidx = 0
                v = xc[iy, ix + 1]
                if v > best:
                    best = v
                    bidx = 1
                v = xc[iy + 1, ix]
                if v > best:
                    best = v
                    bidx = 2
                v = xc[iy + 1, ix + 1]
                if v > best:
                    best = v
                    bidx = 3
                o[oy, ox] = best
                a[oy, ox] = bidx
    return out, arg


@njit(cache=True, parallel=True)
def maxpool2_input_grad(dy, arg, h, wid):
    bsz, c, ho, wo = dy.shape
    dx = np.zeros((bsz, c, h, wid), dtype=dy.dtype)
    for t in prange(bsz * c):
        bi = t // c
        ci = t % c
        dyl = dy[bi, ci]
        al = arg[bi, ci]
        dxl = dx[bi, ci]
        for oy in range(ho):
            for ox in range(wo):
                bidx = al[oy, ox]
                dxl[oy * 2 + bidx // 2, ox * 2 + bidx % 2] = dyl[oy, ox]
    return dx
