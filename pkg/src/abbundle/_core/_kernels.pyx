# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Semantics must match ``_fallback.py`` exactly."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def ray_crossings(const double[:, ::1] xy, const double[::1] px, const double[::1] py):
    """Signed crossings of a polyline with the downward rays below each puncture.

    Returns signed letters (+k: left-to-right across ray k, 1-based) in path
    order, unreduced.
    """
    cdef Py_ssize_t nseg = xy.shape[0] - 1
    cdef Py_ssize_t n = px.shape[0]
    cdef Py_ssize_t i, k, a, b, cnt
    cdef double x0, y0, x1, y1, t, y
    cdef bint s0, s1
    out = []
    cdef double[::1] ts = np.empty(max(n, 1), dtype=np.float64)
    cdef long[::1] ls = np.empty(max(n, 1), dtype=np.int64)
    cdef double tt
    cdef long tl
    for i in range(nseg):
        x0 = xy[i, 0]; y0 = xy[i, 1]; x1 = xy[i + 1, 0]; y1 = xy[i + 1, 1]
        cnt = 0
        for k in range(n):
            s0 = x0 >= px[k]
            s1 = x1 >= px[k]
            if s0 == s1:
                continue
            t = (px[k] - x0) / (x1 - x0)
            y = y0 + t * (y1 - y0)
            if y < py[k]:
                ts[cnt] = t
                ls[cnt] = (k + 1) if s1 else -(k + 1)
                cnt += 1
        # insertion sort by parameter, stable
        for a in range(1, cnt):
            tt = ts[a]; tl = ls[a]
            b = a - 1
            while b >= 0 and ts[b] > tt:
                ts[b + 1] = ts[b]; ls[b + 1] = ls[b]
                b -= 1
            ts[b + 1] = tt; ls[b + 1] = tl
        for a in range(cnt):
            out.append(ls[a])
    return np.asarray(out, dtype=np.int64)


def walk_ends(const signed char[:, ::1] steps, long sx, long sy,
              const double[::1] px, const double[::1] py, double excise):
    """End sites of lattice walks and whether each avoids the excised blocks.

    Step codes: 0 +x, 1 -x, 2 +y, 3 -y.  ``excise < 0`` disables excision.
    """
    cdef Py_ssize_t W = steps.shape[0], T = steps.shape[1], n = px.shape[0]
    cdef Py_ssize_t w, t, k
    cdef long x, y
    cdef bint ok
    cdef double dx, dy
    accepted = np.ones(W, dtype=np.uint8)
    ends = np.empty((W, 2), dtype=np.int64)
    cdef unsigned char[::1] acc = accepted
    cdef long[:, ::1] e = ends
    with nogil:
        for w in range(W):
            x = sx; y = sy
            ok = True
            for t in range(T + 1):
                if t > 0:
                    if steps[w, t - 1] == 0:
                        x += 1
                    elif steps[w, t - 1] == 1:
                        x -= 1
                    elif steps[w, t - 1] == 2:
                        y += 1
                    else:
                        y -= 1
                if excise >= 0 and ok:
                    for k in range(n):
                        dx = x - px[k]
                        dy = y - py[k]
                        if dx < 0: dx = -dx
                        if dy < 0: dy = -dy
                        if dx <= excise and dy <= excise:
                            ok = False
                            break
            acc[w] = ok
            e[w, 0] = x
            e[w, 1] = y
    return accepted, ends


def walk_letters(const signed char[:, ::1] steps, const long[::1] idx, long sx, long sy,
                 const double[::1] px, const double[::1] py):
    """Freely reduced crossing letters for the selected walks.

    Returns ``(letters, offsets)``; walk ``idx[j]`` owns
    ``letters[offsets[j]:offsets[j+1]]``.
    """
    cdef Py_ssize_t m = idx.shape[0], T = steps.shape[1], n = px.shape[0]
    cdef Py_ssize_t j, t, k, kk, w
    cdef long x, y, nx, top, let
    cdef signed char s
    order = np.argsort(np.asarray(px), kind="stable").astype(np.int64)
    cdef long[::1] ordk = order
    stack_np = np.empty(T * max(n, 1) + 1, dtype=np.int64)
    cdef long[::1] stack = stack_np
    offsets = np.zeros(m + 1, dtype=np.int64)
    chunks = []
    for j in range(m):
        w = idx[j]
        x = sx; y = sy
        top = 0
        for t in range(T):
            s = steps[w, t]
            if s == 2:
                y += 1
                continue
            if s == 3:
                y -= 1
                continue
            nx = x + 1 if s == 0 else x - 1
            for kk in range(n):
                # ascending in x when moving right, descending when moving left
                k = ordk[kk] if s == 0 else ordk[n - 1 - kk]
                if y < py[k] and ((x < px[k] and px[k] < nx) or (nx < px[k] and px[k] < x)):
                    let = (k + 1) if s == 0 else -(k + 1)
                    if top > 0 and stack[top - 1] == -let:
                        top -= 1
                    else:
                        stack[top] = let
                        top += 1
            x = nx
        chunks.append(stack_np[:top].copy())
        offsets[j + 1] = offsets[j] + top
    letters = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
    return letters.astype(np.int64), offsets


def chunk_products(const double complex[:, :, ::1] mats, Py_ssize_t chunk):
    """Ordered products ``M[end-1] @ ... @ M[start]`` over consecutive chunks."""
    cdef Py_ssize_t N = mats.shape[0], d = mats.shape[1]
    cdef Py_ssize_t nchunks = (N + chunk - 1) // chunk
    cdef Py_ssize_t c, i, r, s, q, start, stop
    cdef double complex acc
    out_np = np.zeros((nchunks, d, d), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_np
    tmp_np = np.empty((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] tmp = tmp_np
    with nogil:
        for c in range(nchunks):
            start = c * chunk
            stop = start + chunk
            if stop > N:
                stop = N
            for r in range(d):
                for s in range(d):
                    out[c, r, s] = mats[start, r, s]
            for i in range(start + 1, stop):
                for r in range(d):
                    for s in range(d):
                        acc = 0
                        for q in range(d):
                            acc = acc + mats[i, r, q] * out[c, q, s]
                        tmp[r, s] = acc
                for r in range(d):
                    for s in range(d):
                        out[c, r, s] = tmp[r, s]
    return out_np
