"""Numba kernels for path enumeration, sparse composition and walk sampling.

All parallel loops run over a fixed number of contiguous source-vertex chunks.
The chunking depends only on the problem size, never on the thread count, so
per-chunk partial sums merged in chunk order give identical results for any
number of workers.
"""
import numpy as np
from numba import config, njit, prange

# the bundled TBB is too old for numba; skip straight to OpenMP
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

MAX_CHUNKS = 64


@njit(cache=True)
def _num_chunks(n):
    if n <= 0:
        return 0
    return min(n, MAX_CHUNKS)


@njit(cache=True)
def _chunk(n, nchunks, c):
    return (n * c) // nchunks, (n * (c + 1)) // nchunks


# -- symbolic sizing ---------------------------------------------------------


@njit(parallel=True, cache=True)
def endpoint_counts(indptr, dst, length):
    n = indptr.size - 1
    counts = np.zeros(n, np.int64)
    nchunks = _num_chunks(n)
    for c in prange(nchunks):
        lo, hi = _chunk(n, nchunks, c)
        mark = np.full(n, -1, np.int64)
        cur = np.empty(n, np.int64)
        nxt = np.empty(n, np.int64)
        stamp = 0
        for v in range(lo, hi):
            cur[0] = v
            ncur = 1
            for _ in range(length):
                stamp += 1
                nn = 0
                for i in range(ncur):
                    x = cur[i]
                    for e in range(indptr[x], indptr[x + 1]):
                        y = dst[e]
                        if mark[y] != stamp:
                            mark[y] = stamp
                            nxt[nn] = y
                            nn += 1
                cur, nxt = nxt, cur
                ncur = nn
            counts[v] = ncur
    return counts


@njit(parallel=True, cache=True)
def spgemm_counts(a_indptr, a_idx, b_indptr, b_idx):
    n = a_indptr.size - 1
    counts = np.zeros(n, np.int64)
    nchunks = _num_chunks(n)
    for c in prange(nchunks):
        lo, hi = _chunk(n, nchunks, c)
        mark = np.full(n, -1, np.int64)
        for a in range(lo, hi):
            cnt = 0
            for p in range(a_indptr[a], a_indptr[a + 1]):
                b = a_idx[p]
                for q in range(b_indptr[b], b_indptr[b + 1]):
                    col = b_idx[q]
                    if mark[col] != a:
                        mark[col] = a
                        cnt += 1
            counts[a] = cnt
    return counts


# -- numeric generation ------------------------------------------------------


@njit(parallel=True, cache=True)
def level_paths(indptr, dst, etype, s, length, offsets, out_indptr):
    """Level-by-level enumeration of ``length``-edge paths from every source.

    Paths reaching the same vertex at the same level are merged, so each
    distinct (source, vertex, level) is extended once. Row ``q`` of the
    returned weights scores edge ``k`` with ``s[offsets[q] + k]``.
    """
    n = indptr.size - 1
    K = offsets.size
    nnz = out_indptr[n]
    out_idx = np.empty(nnz, np.int64)
    out_w = np.empty((K, nnz))
    nchunks = _num_chunks(n)
    for c in prange(nchunks):
        lo, hi = _chunk(n, nchunks, c)
        mark = np.full(n, -1, np.int64)
        cur = np.empty(n, np.int64)
        nxt = np.empty(n, np.int64)
        vcur = np.zeros((K, n))
        vnxt = np.zeros((K, n))
        stamp = 0
        for v in range(lo, hi):
            cur[0] = v
            ncur = 1
            for q in range(K):
                vcur[q, v] = 1.0
            for k in range(length):
                stamp += 1
                nn = 0
                for i in range(ncur):
                    x = cur[i]
                    for e in range(indptr[x], indptr[x + 1]):
                        y = dst[e]
                        t = etype[e]
                        if mark[y] != stamp:
                            mark[y] = stamp
                            nxt[nn] = y
                            nn += 1
                            for q in range(K):
                                vnxt[q, y] = 0.0
                        for q in range(K):
                            vnxt[q, y] += vcur[q, x] * s[offsets[q] + k, t]
                cur, nxt = nxt, cur
                vcur, vnxt = vnxt, vcur
                ncur = nn
            row = np.sort(cur[:ncur])
            base = out_indptr[v]
            for i in range(ncur):
                y = row[i]
                out_idx[base + i] = y
                for q in range(K):
                    out_w[q, base + i] = vcur[q, y]
    return out_idx, out_w


@njit(parallel=True, cache=True)
def dfs_paths(indptr, dst, etype, s, length, offsets, out_indptr):
    """Depth-first enumeration: every individual path is walked and scored.

    Only the active path (one stack of depth ``length``) is held per worker.
    """
    n = indptr.size - 1
    K = offsets.size
    nnz = out_indptr[n]
    out_idx = np.empty(nnz, np.int64)
    out_w = np.empty((K, nnz))
    nchunks = _num_chunks(n)
    for c in prange(nchunks):
        lo, hi = _chunk(n, nchunks, c)
        mark = np.full(n, -1, np.int64)
        touched = np.empty(n, np.int64)
        acc = np.zeros((K, n))
        vert = np.empty(length + 1, np.int64)
        cursor = np.empty(length + 1, np.int64)
        pref = np.empty((K, length + 1))
        for v in range(lo, hi):
            nt = 0
            vert[0] = v
            cursor[0] = indptr[v]
            for q in range(K):
                pref[q, 0] = 1.0
            d = 0
            while d >= 0:
                x = vert[d]
                if cursor[d] < indptr[x + 1]:
                    e = cursor[d]
                    cursor[d] += 1
                    y = dst[e]
                    t = etype[e]
                    for q in range(K):
                        pref[q, d + 1] = pref[q, d] * s[offsets[q] + d, t]
                    if d + 1 == length:
                        if mark[y] != v:
                            mark[y] = v
                            touched[nt] = y
                            nt += 1
                            for q in range(K):
                                acc[q, y] = 0.0
                        for q in range(K):
                            acc[q, y] += pref[q, d + 1]
                    else:
                        d += 1
                        vert[d] = y
                        cursor[d] = indptr[y]
                else:
                    d -= 1
            row = np.sort(touched[:nt])
            base = out_indptr[v]
            for i in range(nt):
                y = row[i]
                out_idx[base + i] = y
                for q in range(K):
                    out_w[q, base + i] = acc[q, y]
    return out_idx, out_w


@njit(parallel=True, cache=True)
def spgemm(a_indptr, a_idx, a_w, b_indptr, b_idx, b_w, out_indptr):
    n = a_indptr.size - 1
    nnz = out_indptr[n]
    out_idx = np.empty(nnz, np.int64)
    out_w = np.empty(nnz)
    nchunks = _num_chunks(n)
    for c in prange(nchunks):
        lo, hi = _chunk(n, nchunks, c)
        mark = np.full(n, -1, np.int64)
        touched = np.empty(n, np.int64)
        acc = np.zeros(n)
        for a in range(lo, hi):
            nt = 0
            for p in range(a_indptr[a], a_indptr[a + 1]):
                b = a_idx[p]
                wa = a_w[p]
                for q in range(b_indptr[b], b_indptr[b + 1]):
                    col = b_idx[q]
                    if mark[col] != a:
                        mark[col] = a
                        touched[nt] = col
                        nt += 1
                        acc[col] = 0.0
                    acc[col] += wa * b_w[q]
            row = np.sort(touched[:nt])
            base = out_indptr[a]
            for i in range(nt):
                out_idx[base + i] = row[i]
                out_w[base + i] = acc[row[i]]
    return out_idx, out_w


@njit(parallel=True, cache=True)
def spgemm_grad_left(a_indptr, a_idx, b_indptr, b_idx, b_w, g_indptr, g_idx, g_w):
    """d sum(G * (A @ B)) / dA[a, b] = sum_c G[a, c] * B[b, c], on A's pattern."""
    n = a_indptr.size - 1
    ga = np.zeros(a_idx.size)
    nchunks = _num_chunks(n)
    for c in prange(nchunks):
        lo, hi = _chunk(n, nchunks, c)
        gdense = np.zeros(n)
        for a in range(lo, hi):
            if g_indptr[a] == g_indptr[a + 1]:
                continue
            for p in range(g_indptr[a], g_indptr[a + 1]):
                gdense[g_idx[p]] = g_w[p]
            for p in range(a_indptr[a], a_indptr[a + 1]):
                b = a_idx[p]
                acc = 0.0
                for q in range(b_indptr[b], b_indptr[b + 1]):
                    acc += gdense[b_idx[q]] * b_w[q]
                ga[p] = acc
            for p in range(g_indptr[a], g_indptr[a + 1]):
                gdense[g_idx[p]] = 0.0
    return ga


@njit(cache=True)
def csr_transpose(indptr, idx, w):
    """Counting-sort transpose. ``perm[k]`` is the original slot of transposed entry k."""
    n = indptr.size - 1
    nnz = idx.size
    t_indptr = np.zeros(n + 1, np.int64)
    for k in range(nnz):
        t_indptr[idx[k] + 1] += 1
    for v in range(n):
        t_indptr[v + 1] += t_indptr[v]
    fill = t_indptr[:-1].copy()
    t_idx = np.empty(nnz, np.int64)
    t_w = np.empty(nnz)
    perm = np.empty(nnz, np.int64)
    for u in range(n):
        for k in range(indptr[u], indptr[u + 1]):
            j = fill[idx[k]]
            fill[idx[k]] += 1
            t_idx[j] = u
            t_w[j] = w[k]
            perm[j] = k
    return t_indptr, t_idx, t_w, perm


# -- gradients by path regeneration -------------------------------------------


@njit(parallel=True, cache=True)
def level_backward(indptr, dst, etype, s, length, offset, g_indptr, g_idx, g_w):
    """Score-table gradient of ``sum(G * MG)`` by regenerating paths per source.

    For each source the forward prefix sums F_k and the suffix sums B_k over
    its own level sets are rebuilt; an edge (x -> y, t) at position k then
    contributes F_k(x) * B_{k+1}(y) to ``grad[offset + k, t]``.
    """
    n = indptr.size - 1
    L, T = s.shape
    nchunks = _num_chunks(n)
    part = np.zeros((nchunks, L, T))
    for c in prange(nchunks):
        lo, hi = _chunk(n, nchunks, c)
        grad = part[c]
        mark = np.full(n, -1, np.int64)
        lvl = np.empty((length + 1, n), np.int64)
        cnt = np.zeros(length + 1, np.int64)
        F = np.zeros((length + 1, n))
        B = np.zeros((length + 1, n))
        stamp = 0
        for v in range(lo, hi):
            if g_indptr[v] == g_indptr[v + 1]:
                continue
            lvl[0, 0] = v
            cnt[0] = 1
            F[0, v] = 1.0
            for k in range(length):
                stamp += 1
                nn = 0
                for i in range(cnt[k]):
                    x = lvl[k, i]
                    fx = F[k, x]
                    for e in range(indptr[x], indptr[x + 1]):
                        y = dst[e]
                        if mark[y] != stamp:
                            mark[y] = stamp
                            lvl[k + 1, nn] = y
                            nn += 1
                            F[k + 1, y] = 0.0
                        F[k + 1, y] += fx * s[offset + k, etype[e]]
                cnt[k + 1] = nn
            for i in range(cnt[length]):
                B[length, lvl[length, i]] = 0.0
            for p in range(g_indptr[v], g_indptr[v + 1]):
                B[length, g_idx[p]] = g_w[p]
            for k in range(length - 1, -1, -1):
                row = offset + k
                for i in range(cnt[k]):
                    x = lvl[k, i]
                    fx = F[k, x]
                    acc = 0.0
                    for e in range(indptr[x], indptr[x + 1]):
                        t = etype[e]
                        b = B[k + 1, dst[e]]
                        acc += s[row, t] * b
                        grad[row, t] += fx * b
                    B[k, x] = acc
    out = np.zeros((L, T))
    for c in range(nchunks):
        out += part[c]
    return out


@njit(parallel=True, cache=True)
def dfs_backward(indptr, dst, etype, s, length, offset, g_indptr, g_idx, g_w):
    n = indptr.size - 1
    L, T = s.shape
    nchunks = _num_chunks(n)
    part = np.zeros((nchunks, L, T))
    for c in prange(nchunks):
        lo, hi = _chunk(n, nchunks, c)
        grad = part[c]
        gdense = np.zeros(n)
        vert = np.empty(length + 1, np.int64)
        cursor = np.empty(length + 1, np.int64)
        types = np.empty(length, np.int64)
        pref = np.empty(length + 1)
        for v in range(lo, hi):
            if g_indptr[v] == g_indptr[v + 1]:
                continue
            for p in range(g_indptr[v], g_indptr[v + 1]):
                gdense[g_idx[p]] = g_w[p]
            vert[0] = v
            cursor[0] = indptr[v]
            pref[0] = 1.0
            d = 0
            while d >= 0:
                x = vert[d]
                if cursor[d] < indptr[x + 1]:
                    e = cursor[d]
                    cursor[d] += 1
                    y = dst[e]
                    types[d] = etype[e]
                    pref[d + 1] = pref[d] * s[offset + d, types[d]]
                    if d + 1 == length:
                        gv = gdense[y]
                        if gv != 0.0:
                            suf = gv
                            for i in range(length - 1, -1, -1):
                                grad[offset + i, types[i]] += pref[i] * suf
                                suf *= s[offset + i, types[i]]
                    else:
                        d += 1
                        vert[d] = y
                        cursor[d] = indptr[y]
                else:
                    d -= 1
            for p in range(g_indptr[v], g_indptr[v + 1]):
                gdense[g_idx[p]] = 0.0
    out = np.zeros((L, T))
    for c in range(nchunks):
        out += part[c]
    return out


# -- random walks ------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@njit(inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def counter_uniform(seed, v, w, step, attempt, lane):
    """Uniform [0, 1) double that is a pure function of its integer arguments."""
    h = _mix(np.uint64(seed) + _GOLDEN)
    h = _mix(h + np.uint64(v) + _GOLDEN)
    h = _mix(h + np.uint64(w) + _GOLDEN)
    h = _mix(h + np.uint64(step) + _GOLDEN)
    h = _mix(h + np.uint64(attempt * 4 + lane) + _GOLDEN)
    return np.float64(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(parallel=True, cache=True)
def sample_walks(indptr, dst, etype, s, smax, length, num_walks, seed, max_rejects):
    """Acceptance-rejection walks; row ``v * num_walks + w`` is walk w of vertex v.

    A step from a vertex with no out-edges stores -1 and stops the walk.
    """
    n = indptr.size - 1
    N = n * num_walks
    verts = np.empty((N, length + 1), np.int64)
    types = np.empty((N, length), np.int64)
    fallbacks = np.zeros(n, np.int64)
    nchunks = _num_chunks(n)
    for c in prange(nchunks):
        lo, hi = _chunk(n, nchunks, c)
        for v in range(lo, hi):
            for w in range(num_walks):
                r = v * num_walks + w
                x = v
                verts[r, 0] = v
                for j in range(length):
                    start = indptr[x]
                    deg = indptr[x + 1] - start
                    if deg == 0:
                        for jj in range(j, length):
                            verts[r, jj + 1] = -1
                            types[r, jj] = -1
                        break
                    chosen = -1
                    for a in range(max_rejects):
                        u1 = counter_uniform(seed, v, w, j, a, 0)
                        e = start + min(np.int64(u1 * deg), deg - 1)
                        u2 = counter_uniform(seed, v, w, j, a, 1)
                        if u2 * smax[j] < s[j, etype[e]]:
                            chosen = e
                            break
                    if chosen < 0:
                        fallbacks[v] += 1
                        total = 0.0
                        for e in range(start, start + deg):
                            total += s[j, etype[e]]
                        target = counter_uniform(seed, v, w, j, max_rejects, 2) * total
                        chosen = start + deg - 1
                        run = 0.0
                        for e in range(start, start + deg):
                            run += s[j, etype[e]]
                            if target < run:
                                chosen = e
                                break
                    x = dst[chosen]
                    verts[r, j + 1] = x
                    types[r, j] = etype[chosen]
    return verts, types, fallbacks.sum()


@njit(parallel=True, cache=True)
def walk_edges_exist(indptr, dst, etype, verts, types):
    N, l1 = verts.shape
    ok = np.ones(N, np.bool_)
    for r in prange(N):
        for j in range(l1 - 1):
            x = verts[r, j]
            y = verts[r, j + 1]
            t = types[r, j]
            found = False
            if 0 <= x < indptr.size - 1:
                for e in range(indptr[x], indptr[x + 1]):
                    if dst[e] == y and etype[e] == t:
                        found = True
                        break
            if not found:
                ok[r] = False
                break
    return ok


@njit(cache=True)
def walk_scores(s, types):
    N, length = types.shape
    out = np.empty(N)
    for r in range(N):
        score = 1.0
        for j in range(length):
            score *= s[j, types[r, j]]
        out[r] = score
    return out


@njit(parallel=True, cache=True)
def sampled_counts(n, walk_indptr, ends):
    counts = np.zeros(n, np.int64)
    nchunks = _num_chunks(n)
    for c in prange(nchunks):
        lo, hi = _chunk(n, nchunks, c)
        mark = np.full(n, -1, np.int64)
        for v in range(lo, hi):
            cnt = 0
            for r in range(walk_indptr[v], walk_indptr[v + 1]):
                y = ends[r]
                if mark[y] != v:
                    mark[y] = v
                    cnt += 1
            counts[v] = cnt
    return counts


@njit(parallel=True, cache=True)
def sampled_accumulate(n, walk_indptr, ends, scores, out_indptr):
    nnz = out_indptr[n]
    out_idx = np.empty(nnz, np.int64)
    out_w = np.empty(nnz)
    nchunks = _num_chunks(n)
    for c in prange(nchunks):
        lo, hi = _chunk(n, nchunks, c)
        mark = np.full(n, -1, np.int64)
        touched = np.empty(n, np.int64)
        acc = np.zeros(n)
        for v in range(lo, hi):
            nt = 0
            for r in range(walk_indptr[v], walk_indptr[v + 1]):
                y = ends[r]
                if mark[y] != v:
                    mark[y] = v
                    touched[nt] = y
                    nt += 1
                    acc[y] = 0.0
                acc[y] += scores[r]
            row = np.sort(touched[:nt])
            base = out_indptr[v]
            for i in range(nt):
                out_idx[base + i] = row[i]
                out_w[base + i] = acc[row[i]]
    return out_idx, out_w


@njit(parallel=True, cache=True)
def sampled_backward(s, verts, types, g_indptr, g_idx, g_w):
    N, l1 = verts.shape
    length = l1 - 1
    L, T = s.shape
    nchunks = _num_chunks(N)
    part = np.zeros((max(nchunks, 1), L, T))
    for c in prange(nchunks):
        lo, hi = _chunk(N, nchunks, c)
        grad = part[c]
        pref = np.empty(length + 1)
        for r in range(lo, hi):
            v = verts[r, 0]
            y = verts[r, length]
            a, b = g_indptr[v], g_indptr[v + 1]
            p = a + np.searchsorted(g_idx[a:b], y)
            if p >= b or g_idx[p] != y:
                continue
            gv = g_w[p]
            if gv == 0.0:
                continue
            pref[0] = 1.0
            for j in range(length):
                pref[j + 1] = pref[j] * s[j, types[r, j]]
            suf = gv
            for j in range(length - 1, -1, -1):
                t = types[r, j]
                grad[j, t] += pref[j] * suf
                suf *= s[j, t]
    out = np.zeros((L, T))
    for c in range(nchunks):
        out += part[c]
    return out


# -- GCN edge gradient -------------------------------------------------------


@njit(parallel=True, cache=True)
def edge_dots(indptr, idx, a, b):
    """out[e] = a[idx[e]] . b[u] for every stored edge e = (u, idx[e])."""
    n = indptr.size - 1
    out = np.empty(idx.size)
    h = a.shape[1]
    nchunks = _num_chunks(n)
    for c in prange(nchunks):
        lo, hi = _chunk(n, nchunks, c)
        for u in range(lo, hi):
            for e in range(indptr[u], indptr[u + 1]):
                v = idx[e]
                acc = 0.0
                for k in range(h):
                    acc += a[v, k] * b[u, k]
                out[e] = acc
    return out
