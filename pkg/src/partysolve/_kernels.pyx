# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled scoring and candidate-filter kernels.

Summation order matches ``_kernels_py`` exactly (traits inside neighbours,
neighbours in the given order) so both backends return bit-identical scores.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline double _pair(Py_ssize_t a, Py_ssize_t b,
                         const cnp.int64_t[:, ::1] codes, const double[:, ::1] nums,
                         const cnp.int64_t[::1] kinds, const double[::1] weights,
                         const double[::1] scales, const double[:, :, ::1] tables) noexcept nogil:
    cdef Py_ssize_t t
    cdef double s = 0.0, k
    for t in range(kinds.shape[0]):
        if kinds[t] == 0:
            k = tables[t, codes[a, t], codes[b, t]]
        else:
            k = 1.0 / (1.0 + fabs(nums[a, t] - nums[b, t]) / scales[t])
        s += weights[t] * k
    return s


def score_candidates(const cnp.int64_t[::1] cands, const cnp.int64_t[::1] nbrs,
                     const cnp.int64_t[:, ::1] codes, const double[:, ::1] nums,
                     const cnp.int64_t[::1] kinds, const double[::1] weights,
                     const double[::1] scales, const double[:, :, ::1] tables):
    cdef Py_ssize_t n = cands.shape[0], i, j
    cdef double total
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            total = 0.0
            for j in range(nbrs.shape[0]):
                total += _pair(cands[i], nbrs[j], codes, nums, kinds, weights, scales, tables)
            o[i] = total
    return out


def best_candidates(const cnp.int64_t[::1] cands, const cnp.int64_t[::1] nbrs,
                    const cnp.int64_t[:, ::1] codes, const double[:, ::1] nums,
                    const cnp.int64_t[::1] kinds, const double[::1] weights,
                    const double[::1] scales, const double[:, :, ::1] tables):
    """Return (candidates tied at the maximum score, that score)."""
    cdef Py_ssize_t n = cands.shape[0], i, j, nt = 0
    cdef double total, best = -1.0
    ties = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] tv = ties
    with nogil:
        for i in range(n):
            total = 0.0
            for j in range(nbrs.shape[0]):
                total += _pair(cands[i], nbrs[j], codes, nums, kinds, weights, scales, tables)
            if total > best:
                best = total
                nt = 0
            if total == best:
                tv[nt] = cands[i]
                nt += 1
    return ties[:nt], best


def pair_weights(const cnp.int64_t[::1] a, const cnp.int64_t[::1] b,
                 const cnp.int64_t[:, ::1] codes, const double[:, ::1] nums,
                 const cnp.int64_t[::1] kinds, const double[::1] weights,
                 const double[::1] scales, const double[:, :, ::1] tables):
    cdef Py_ssize_t n = a.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _pair(a[i], b[i], codes, nums, kinds, weights, scales, tables)
    return out


# requirement tags, shared with constraints.py
cdef enum:
    R_SUM = 0
    R_MINC = 1
    R_MAXC = 2
    R_DIST = 3
    R_CAP = 4


cdef Py_ssize_t _filter_pass(cnp.int64_t[::1] buf, Py_ssize_t n, Py_ssize_t K,
                             const cnp.int64_t[::1] kinds, const cnp.int64_t[::1] cols,
                             const cnp.int64_t[::1] vcode, const double[::1] bounds,
                             const cnp.int64_t[::1] nvals, const double[::1] sums,
                             const cnp.int64_t[::1] cnts, const cnp.int64_t[:, ::1] vc,
                             const cnp.int64_t[:, ::1] codes, const double[:, ::1] nums,
                             double[::1] top, cnp.int64_t[::1] scratch,
                             cnp.int64_t *checks) noexcept nogil:
    """One pass over all requirements, compacting ``buf[:n]`` in place; returns new n (0 = empty)."""
    cdef Py_ssize_t r, i, j, m, col, nv, ntop, seen
    cdef long long k, room, has_n, need, cap, nz, capacity, c
    cdef double need_f, v, s_k, s_k1
    for r in range(kinds.shape[0]):
        if n < K:
            return 0
        checks[0] += n
        col = cols[r]
        if kinds[r] == R_SUM:
            need_f = bounds[r] - sums[r]
            if need_f <= 0:
                continue
            # largest K values, kept sorted descending
            ntop = 0
            for i in range(n):
                v = nums[buf[i], col]
                if ntop < K:
                    j = ntop
                    ntop += 1
                elif v > top[K - 1]:
                    j = K - 1
                else:
                    continue
                while j > 0 and top[j - 1] < v:
                    top[j] = top[j - 1]
                    j -= 1
                top[j] = v
            s_k1 = 0.0
            for i in range(K - 1):
                s_k1 += top[i]
            s_k = s_k1 + top[K - 1]
            if s_k < need_f:
                return 0
            m = 0
            for i in range(n):
                if nums[buf[i], col] >= need_f - s_k1:
                    buf[m] = buf[i]
                    m += 1
            n = m
        elif kinds[r] == R_MINC:
            k = <long long>bounds[r] - cnts[r]
            if k <= 0:
                continue
            has_n = 0
            for i in range(n):
                if codes[buf[i], col] == vcode[r]:
                    has_n += 1
            if K < k or has_n < k:
                return 0
            if K == k:
                m = 0
                for i in range(n):
                    if codes[buf[i], col] == vcode[r]:
                        buf[m] = buf[i]
                        m += 1
                n = m
        elif kinds[r] == R_MAXC:
            room = <long long>bounds[r] - cnts[r]
            if room < 0:
                return 0
            if room == 0:
                m = 0
                for i in range(n):
                    if codes[buf[i], col] != vcode[r]:
                        buf[m] = buf[i]
                        m += 1
                n = m
            else:
                has_n = 0
                for i in range(n):
                    if codes[buf[i], col] == vcode[r]:
                        has_n += 1
                if n - has_n < K - room:
                    return 0
        elif kinds[r] == R_DIST:
            nv = nvals[r]
            nz = 0
            for j in range(nv):
                if vc[r, j] != 0:
                    nz += 1
            need = <long long>bounds[r] - nz
            if need <= 0:
                continue
            for j in range(nv):
                scratch[j] = 0
            seen = 0
            for i in range(n):
                c = codes[buf[i], col]
                if vc[r, c] == 0 and scratch[c] == 0:
                    scratch[c] = 1
                    seen += 1
            if need > K or seen < need:
                return 0
            if need == K:
                m = 0
                for i in range(n):
                    if vc[r, codes[buf[i], col]] == 0:
                        buf[m] = buf[i]
                        m += 1
                n = m
        else:
            nv = nvals[r]
            cap = <long long>bounds[r]
            for j in range(nv):
                if vc[r, j] > cap:
                    return 0
                scratch[j] = 0
            m = 0
            for i in range(n):
                c = codes[buf[i], col]
                if vc[r, c] < cap:
                    buf[m] = buf[i]
                    m += 1
                    scratch[c] += 1
            n = m
            capacity = 0
            for j in range(nv):
                c = cap - vc[r, j]
                capacity += c if c < scratch[j] else scratch[j]
            if capacity < K:
                return 0
    if n < K:
        return 0
    return n


cdef Py_ssize_t _filter_fix(cnp.int64_t[::1] buf, Py_ssize_t n, Py_ssize_t K,
                            const cnp.int64_t[::1] kinds, const cnp.int64_t[::1] cols,
                            const cnp.int64_t[::1] vcode, const double[::1] bounds,
                            const cnp.int64_t[::1] nvals, const double[::1] sums,
                            const cnp.int64_t[::1] cnts, const cnp.int64_t[:, ::1] vc,
                            const cnp.int64_t[:, ::1] codes, const double[:, ::1] nums,
                            double[::1] top, cnp.int64_t[::1] scratch,
                            cnp.int64_t *checks) noexcept nogil:
    cdef Py_ssize_t prev
    while True:
        prev = n
        n = _filter_pass(buf, n, K, kinds, cols, vcode, bounds, nvals, sums, cnts, vc,
                         codes, nums, top, scratch, checks)
        if n == prev or n == 0:
            return n


def filter_candidates(const cnp.int64_t[::1] cands, Py_ssize_t K,
                      const cnp.int64_t[::1] kinds, const cnp.int64_t[::1] cols,
                      const cnp.int64_t[::1] vcode, const double[::1] bounds,
                      const cnp.int64_t[::1] nvals, const double[::1] sums,
                      const cnp.int64_t[::1] cnts, const cnp.int64_t[:, ::1] vc,
                      const cnp.int64_t[:, ::1] codes, const double[:, ::1] nums):
    """Iterate the look-ahead rules to a fixpoint; returns (survivors, item checks)."""
    cdef Py_ssize_t n = cands.shape[0]
    cdef cnp.int64_t checks = 0
    out = np.array(cands, dtype=np.int64, copy=True)
    cdef cnp.int64_t[::1] buf = out
    top_arr = np.empty(max(K, 1), dtype=np.float64)
    scratch_arr = np.empty(max(vc.shape[1], 1), dtype=np.int64)
    cdef double[::1] top = top_arr
    cdef cnp.int64_t[::1] scratch = scratch_arr
    with nogil:
        n = _filter_fix(buf, n, K, kinds, cols, vcode, bounds, nvals, sums, cnts, vc,
                        codes, nums, top, scratch, &checks)
    return out[:n], int(checks)


def build_path(cnp.int64_t[::1] slots, const cnp.int64_t[::1] order,
               cnp.uint8_t[::1] available, const double[::1] u,
               const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
               bint guided, bint prune, double target, double closed_w,
               Py_ssize_t closed_n, Py_ssize_t n_edges,
               const cnp.int64_t[::1] kinds, const cnp.int64_t[::1] cols,
               const cnp.int64_t[::1] vcode, const double[::1] bounds,
               const cnp.int64_t[::1] nvals, double[::1] sums,
               cnp.int64_t[::1] cnts, cnp.int64_t[:, ::1] vc,
               const cnp.int64_t[:, ::1] codes, const double[:, ::1] nums,
               const cnp.int64_t[::1] kkinds, const double[::1] weights,
               const double[::1] scales, const double[:, :, ::1] tables):
    """Fill ``slots`` along ``order``; returns (status, filter checks, score checks).

    status is 1 when every node was filled, 0 when the filtered pool emptied
    and -1 when the synergy bound pruned the path.  Step ``s`` breaks ties
    (or picks uniformly) with ``u[s]``.
    """
    cdef Py_ssize_t M = available.shape[0], K = order.shape[0], step, node, i, j, n, nt, nn, pick, r
    cdef cnp.int64_t fchecks = 0, schecks = 0
    cdef double total, best
    cdef int status = 1
    buf_arr = np.empty(M, dtype=np.int64)
    nb_arr = np.empty(max(indices.shape[0], 1), dtype=np.int64)
    top_arr = np.empty(max(K, 1), dtype=np.float64)
    scratch_arr = np.empty(max(vc.shape[1], 1), dtype=np.int64)
    cdef cnp.int64_t[::1] buf = buf_arr
    cdef cnp.int64_t[::1] nb = nb_arr
    cdef double[::1] top = top_arr
    cdef cnp.int64_t[::1] scratch = scratch_arr
    with nogil:
        for step in range(K):
            node = order[step]
            n = 0
            for i in range(M):
                if available[i]:
                    buf[n] = i
                    n += 1
            n = _filter_fix(buf, n, K - step, kinds, cols, vcode, bounds, nvals, sums, cnts,
                            vc, codes, nums, top, scratch, &fchecks)
            if n == 0:
                status = 0
                break
            nn = 0
            for j in range(indptr[node], indptr[node + 1]):
                if slots[indices[j]] >= 0:
                    nb[nn] = slots[indices[j]]
                    nn += 1
            if guided and nn > 0:
                schecks += n * nn
                best = -1.0
                nt = 0
                for i in range(n):
                    total = 0.0
                    for j in range(nn):
                        total += _pair(buf[i], nb[j], codes, nums, kkinds, weights, scales, tables)
                    if total > best:
                        best = total
                        nt = 0
                    if total == best:
                        buf[nt] = buf[i]
                        nt += 1
                i = <Py_ssize_t>(u[step] * nt)
                pick = buf[i if i < nt else nt - 1]
                if prune:
                    closed_w += best
                    closed_n += nn
                    if closed_w + (n_edges - closed_n) < target:
                        status = -1
                        break
            else:
                i = <Py_ssize_t>(u[step] * n)
                pick = buf[i if i < n else n - 1]
            slots[node] = pick
            available[pick] = 0
            for r in range(kinds.shape[0]):
                if kinds[r] == R_SUM:
                    sums[r] += nums[pick, cols[r]]
                elif kinds[r] == R_MINC or kinds[r] == R_MAXC:
                    if codes[pick, cols[r]] == vcode[r]:
                        cnts[r] += 1
                else:
                    vc[r, codes[pick, cols[r]]] += 1
    return status, int(fchecks), int(schecks)
