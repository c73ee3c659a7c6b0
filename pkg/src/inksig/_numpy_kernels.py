"""Pure-numpy fallback implementations of the hot kernels.

Same contracts as `_numba_kernels`; used when numba is unavailable or
disabled via INKSIG_NUMBA=0. Vectorized where it matters (convolutions
chunk an im2col buffer through BLAS, windowed signatures fold all points
of a stroke at once) so the fallback stays usable for training, just
slower.
"""

import numpy as np

_IM2COL_CHUNK = 8


# ---------------------------------------------------------------------------
# truncated tensor-algebra kernels
# ---------------------------------------------------------------------------

def _level_powers(d, level):
    """Per-row tensor powers d^(x)j / j! for a batch of displacements.

    d: (n, 2). Returns list indexed by j of (n, 2^j) arrays.
    """
    n = d.shape[0]
    pw = [np.ones((n, 1), dtype=np.float64)]
    for j in range(1, level + 1):
        prev = pw[j - 1]
        pw.append((prev[:, :, None] * d[:, None, :] / j).reshape(n, -1))
    return pw


def segment_signature_flat(dx, dy, level):
    out = np.empty(2 ** (level + 1) - 1, dtype=np.float64)
    out[0] = 1.0
    block = np.array([1.0])
    d = np.array([dx, dy], dtype=np.float64)
    for k in range(1, level + 1):
        block = (block[:, None] * d[None, :] / k).ravel()
        out[(1 << k) - 1: (1 << (k + 1)) - 1] = block
    return out


def chen_concat_flat(a, b, level):
    out = np.zeros(2 ** (level + 1) - 1, dtype=a.dtype)
    for k in range(level + 1):
        acc = np.zeros(1 << k, dtype=a.dtype)
        for i in range(k + 1):
            j = k - i
            ai = a[(1 << i) - 1: (1 << (i + 1)) - 1]
            bj = b[(1 << j) - 1: (1 << (j + 1)) - 1]
            acc += np.multiply.outer(ai, bj).ravel()
        out[(1 << k) - 1: (1 << (k + 1)) - 1] = acc
    return out


def path_signature_flat(pts, level):
    sigs = windowed_signatures_flat(np.asarray(pts, dtype=np.float64), level, -1)
    return sigs[-1].copy()


def windowed_signatures_flat(pts, level, delta):
    n = pts.shape[0]
    m = 2 ** (level + 1) - 1
    out = np.zeros((n, m), dtype=np.float64)
    out[:, 0] = 1.0
    if n == 1 or level == 0:
        return out
    d = np.diff(pts, axis=0)

    if delta < 0:
        # Prefix mode: level-k prefix values are cumulative sums of
        # lower-level prefixes folded with per-step powers.
        blocks = [np.ones((n, 1), dtype=np.float64)]
        pw = _level_powers(d, level)
        for k in range(1, level + 1):
            inc = pw[k].copy()
            for j in range(1, k):
                left = blocks[k - j][:-1]
                inc += np.einsum("na,nb->nab", left, pw[j]).reshape(n - 1, -1)
            blk = np.zeros((n, 1 << k), dtype=np.float64)
            np.cumsum(inc, axis=0, out=blk[1:])
            blocks.append(blk)
        for k in range(1, level + 1):
            out[:, (1 << k) - 1: (1 << (k + 1)) - 1] = blocks[k]
        return out

    # Fixed-radius windows, folded simultaneously for every point. Windows
    # shorter than 2*delta steps (stroke ends) are padded with zero
    # displacements, which multiply as the identity.
    idxs = np.arange(n)
    lo = np.maximum(idxs - delta, 0)
    hi = np.minimum(idxs + delta, n - 1)
    blocks = [np.ones((n, 1), dtype=np.float64)]
    blocks += [np.zeros((n, 1 << k), dtype=np.float64) for k in range(1, level + 1)]
    for step in range(2 * delta):
        seg = lo + step
        valid = seg < hi
        dstep = np.where(valid[:, None], d[np.minimum(seg, n - 2)], 0.0)
        pw = _level_powers(dstep, level)
        for k in range(level, 0, -1):
            acc = pw[k].copy()
            for i in range(1, k):
                acc += np.einsum("na,nb->nab", blocks[i], pw[k - i]).reshape(n, -1)
            blocks[k] += acc
    for k in range(1, level + 1):
        out[:, (1 << k) - 1: (1 << (k + 1)) - 1] = blocks[k]
    return out


# ---------------------------------------------------------------------------
# feature-map painting
# ---------------------------------------------------------------------------

def paint_maps_last(maps, px, py, vals):
    if px.shape[0] == 0:
        return
    lin = py.astype(np.int64) * maps.shape[2] + px.astype(np.int64)
    rev_first = np.unique(lin[::-1], return_index=True)[1]
    sel = lin.shape[0] - 1 - rev_first
    flat = maps.reshape(maps.shape[0], -1)
    flat[:, lin[sel]] = vals[sel].T


def paint_maps_maxmag(maps, px, py, vals):
    if px.shape[0] == 0:
        return
    n = px.shape[0]
    lin = py.astype(np.int64) * maps.shape[2] + px.astype(np.int64)
    flat = maps.reshape(maps.shape[0], -1)
    for c in range(maps.shape[0]):
        v = vals[:, c]
        # per pixel keep the max-|value| point, first point on exact ties
        order = np.lexsort((-np.arange(n), np.abs(v), lin))
        pix = lin[order]
        group_last = np.nonzero(np.diff(pix, append=-1))[0]
        cand = order[group_last]
        cur = flat[c, lin[cand]]
        win = np.abs(v[cand]) > np.abs(cur)
        flat[c, lin[cand[win]]] = v[cand[win]]


# ---------------------------------------------------------------------------
# CNN kernels
# ---------------------------------------------------------------------------

def conv2d_forward(x, w, b):
    bsz, cin, h, wid = x.shape
    cout, _, k, _ = w.shape
    ho = h - k + 1
    wo = wid - k + 1
    wmat = w.reshape(cout, cin * k * k)
    out = np.empty((bsz, cout, ho, wo), dtype=x.dtype)
    win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    for s in range(0, bsz, _IM2COL_CHUNK):
        e = min(s + _IM2COL_CHUNK, bsz)
        cols = win[s:e].transpose(0, 2, 3, 1, 4, 5).reshape(e - s, ho * wo, cin * k * k)
        y = cols @ wmat.T
        out[s:e] = y.transpose(0, 2, 1).reshape(e - s, cout, ho, wo)
    out += b[None, :, None, None]
    return out


def conv2d_input_grad(dy, w, h, wid):
    k = w.shape[2]
    pad = k - 1
    dyp = np.pad(dy, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    wt = np.ascontiguousarray(w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
    zero = np.zeros(wt.shape[0], dtype=dy.dtype)
    return conv2d_forward(dyp, wt, zero)


def conv2d_param_grad(x, dy, k):
    bsz, cin, h, wid = x.shape
    cout, ho, wo = dy.shape[1], dy.shape[2], dy.shape[3]
    dw = np.empty((cout, cin, k, k), dtype=x.dtype)
    for ky in range(k):
        for kx in range(k):
            patch = x[:, :, ky:ky + ho, kx:kx + wo]
            dw[:, :, ky, kx] = np.tensordot(dy, patch, axes=[(0, 2, 3), (0, 2, 3)])
    db = dy.sum(axis=(0, 2, 3))
    return dw, db


def maxpool2_forward(x):
    bsz, c, h, wid = x.shape
    ho = h // 2
    wo = wid // 2
    win = x.reshape(bsz, c, ho, 2, wo, 2).transpose(0, 1, 2, 4, 3, 5).reshape(bsz, c, ho, wo, 4)
    arg = win.argmax(axis=4).astype(np.uint8)
    out = np.take_along_axis(win, arg[..., None].astype(np.intp), axis=4)[..., 0]
    return out, arg


def maxpool2_input_grad(dy, arg, h, wid):
    bsz, c, ho, wo = dy.shape
    dx = np.zeros((bsz, c, h, wid), dtype=dy.dtype)
    bi, ci, oy, ox = np.indices((bsz, c, ho, wo), sparse=True)
    iy = oy * 2 + (arg >> 1)
    ix = ox * 2 + (arg & 1)
    dx[np.broadcast_to(bi, dy.shape), np.broadcast_to(ci, dy.shape), iy, ix] = dy
    return dx
