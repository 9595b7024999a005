"""Pure-Python (numpy) versions of the compiled kernels.

Same signatures and results as ``_kernels.pyx``; used when the extension is
not built or ``ABBUNDLE_PURE=1`` is set.
"""
from __future__ import annotations

import numpy as np


def ray_crossings(xy, px, py):
    xy = np.asarray(xy, dtype=np.float64)
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    if len(px) == 0 or len(xy) < 2:
        return np.empty(0, dtype=np.int64)
    x0, y0 = xy[:-1, 0:1], xy[:-1, 1:2]
    x1, y1 = xy[1:, 0:1], xy[1:, 1:2]
    s0 = x0 >= px
    s1 = x1 >= px
    cross = s0 != s1
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (px - x0) / (x1 - x0)
        y = y0 + t * (y1 - y0)
    hit = cross & (y < py)
    seg, k = np.nonzero(hit)
    if len(seg) == 0:
        return np.empty(0, dtype=np.int64)
    tv = t[seg, k]
    letters = np.where(s1[seg, k], k + 1, -(k + 1)).astype(np.int64)
    order = np.lexsort((tv, seg))
    return letters[order]


_DX = np.array([1, -1, 0, 0], dtype=np.int64)
_DY = np.array([0, 0, 1, -1], dtype=np.int64)


def _positions(steps, sx, sy):
    steps = np.asarray(steps)
    W, T = steps.shape
    xs = np.empty((W, T + 1), dtype=np.int64)
    ys = np.empty((W, T + 1), dtype=np.int64)
    xs[:, 0] = sx
    ys[:, 0] = sy
    np.cumsum(_DX[steps], axis=1, out=xs[:, 1:])
    np.cumsum(_DY[steps], axis=1, out=ys[:, 1:])
    xs[:, 1:] += sx
    ys[:, 1:] += sy
    return xs, ys


def walk_ends(steps, sx, sy, px, py, excise):
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    xs, ys = _positions(steps, sx, sy)
    accepted = np.ones(xs.shape[0], dtype=np.uint8)
    if excise >= 0:
        for k in range(len(px)):
            bad = (np.abs(xs - px[k]) <= excise) & (np.abs(ys - py[k]) <= excise)
            accepted &= ~bad.any(axis=1)
    ends = np.stack([xs[:, -1], ys[:, -1]], axis=1)
    return accepted, np.ascontiguousarray(ends)


def walk_letters(steps, idx, sx, sy, px, py):
    steps = np.asarray(steps)
    idx = np.asarray(idx, dtype=np.int64)
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    m = len(idx)
    offsets = np.zeros(m + 1, dtype=np.int64)
    if m == 0:
        return np.empty(0, dtype=np.int64), offsets
    n = len(px)
    sub = steps[idx]
    xs, ys = _positions(sub, sx, sy)
    xb, xa, yb = xs[:, :-1, None], xs[:, 1:, None], ys[:, :-1, None]
    right = (sub == 0)[:, :, None]
    left = (sub == 1)[:, :, None]
    hit = (yb < py) & ((right & (xb < px) & (px < xa)) | (left & (xa < px) & (px < xb)))
    rank = np.empty(n, dtype=np.int64)
    rank[np.argsort(px, kind="stable")] = np.arange(n)
    chunks = []
    for j in range(m):
        t, k = np.nonzero(hit[j])
        if len(t):
            mv_right = sub[j, t] == 0
            key = np.where(mv_right, rank[k], n - 1 - rank[k])
            order = np.lexsort((key, t))
            t, k, mv_right = t[order], k[order], mv_right[order]
            raw = np.where(mv_right, k + 1, -(k + 1))
        else:
            raw = ()
        stack: list[int] = []
        for let in raw:
            if stack and stack[-1] == -let:
                stack.pop()
            else:
                stack.append(int(let))
        chunks.append(np.asarray(stack, dtype=np.int64))
        offsets[j + 1] = offsets[j] + len(stack)
    return np.concatenate(chunks), offsets


def tree_product(mats):
    """Ordered product over axis -3 (later factors on the left), by pairwise
    reduction.  Works on stacks: input ``(..., L, d, d)``."""
    x = np.asarray(mats, dtype=np.complex128)
    while x.shape[-3] > 1:
        if x.shape[-3] % 2:
            eye = np.broadcast_to(np.eye(x.shape[-1], dtype=x.dtype), x.shape[:-3] + (1,) + x.shape[-2:])
            x = np.concatenate([x, eye], axis=-3)
        x = x[..., 1::2, :, :] @ x[..., 0::2, :, :]
    return x[..., 0, :, :]


def chunk_products(mats, chunk):
    mats = np.asarray(mats, dtype=np.complex128)
    N, d, _ = mats.shape
    nchunks = -(-N // chunk)
    pad = nchunks * chunk - N
    if pad:
        eye = np.broadcast_to(np.eye(d, dtype=np.complex128), (pad, d, d))
        mats = np.concatenate([mats, eye], axis=0)
    return tree_product(mats.reshape(nchunks, chunk, d, d))
