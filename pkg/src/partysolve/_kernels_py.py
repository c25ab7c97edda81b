"""Numpy fallback for the compiled kernels in ``_kernels.pyx`` (same operation order)."""

import numpy as np


def score_candidates(cands, nbrs, codes, nums, kinds, weights, scales, tables):
    total = np.zeros(len(cands), dtype=np.float64)
    if len(nbrs) == 0:
        return total
    c_codes = codes[cands]
    c_nums = nums[cands]
    for nb in nbrs:
        s = np.zeros(len(cands), dtype=np.float64)
        for t in range(len(kinds)):
            if kinds[t] == 0:
                k = tables[t, c_codes[:, t], codes[nb, t]]
            else:
                k = 1.0 / (1.0 + np.abs(c_nums[:, t] - nums[nb, t]) / scales[t])
            s += weights[t] * k
        total += s
    return total


def best_candidates(cands, nbrs, codes, nums, kinds, weights, scales, tables):
    scores = score_candidates(cands, nbrs, codes, nums, kinds, weights, scales, tables)
    if len(scores) == 0:
        return cands[:0], -1.0
    best = scores.max()
    return cands[scores == best], float(best)


def pair_weights(a, b, codes, nums, kinds, weights, scales, tables):
    s = np.zeros(len(a), dtype=np.float64)
    for t in range(len(kinds)):
        if kinds[t] == 0:
            k = tables[t, codes[a, t], codes[b, t]]
        else:
            k = 1.0 / (1.0 + np.abs(nums[a, t] - nums[b, t]) / scales[t])
        s += weights[t] * k
    return s


R_SUM, R_MINC, R_MAXC, R_DIST, R_CAP = range(5)
_EMPTY = np.zeros(0, dtype=np.int64)


def _seq_sum(values):
    # left-to-right, matching the compiled loop
    s = 0.0
    for v in values:
        s += v
    return s


def _filter_pass(cands, K, kinds, cols, vcode, bounds, nvals, sums, cnts, vc, codes, nums):
    checks = 0
    for r in range(len(kinds)):
        n = len(cands)
        if n < K:
            return _EMPTY, checks
        checks += n
        col = cols[r]
        kind = kinds[r]
        if kind == R_SUM:
            need = bounds[r] - sums[r]
            if need <= 0:
                continue
            vals = nums[cands, col]
            top = -np.sort(-vals)[:K]
            s_k1 = _seq_sum(top[:K - 1].tolist())
            s_k = s_k1 + float(top[K - 1])
            if s_k < need:
                return _EMPTY, checks
            cands = cands[vals >= need - s_k1]
        elif kind == R_MINC:
            k = int(bounds[r]) - int(cnts[r])
            if k <= 0:
                continue
            has = codes[cands, col] == vcode[r]
            if K < k or int(np.count_nonzero(has)) < k:
                return _EMPTY, checks
            if K == k:
                cands = cands[has]
        elif kind == R_MAXC:
            room = int(bounds[r]) - int(cnts[r])
            if room < 0:
                return _EMPTY, checks
            has = codes[cands, col] == vcode[r]
            if room == 0:
                cands = cands[~has]
            elif n - int(np.count_nonzero(has)) < K - room:
                return _EMPTY, checks
        elif kind == R_DIST:
            counts = vc[r, :nvals[r]]
            need = int(bounds[r]) - int(np.count_nonzero(counts))
            if need <= 0:
                continue
            c = codes[cands, col]
            unseen = counts[c] == 0
            if need > K or int(np.count_nonzero(np.bincount(c[unseen], minlength=nvals[r]))) < need:
                return _EMPTY, checks
            if need == K:
                cands = cands[unseen]
        else:
            counts = vc[r, :nvals[r]]
            cap = int(bounds[r])
            if counts.size and int(counts.max()) > cap:
                return _EMPTY, checks
            c = codes[cands, col]
            keep = counts[c] < cap
            cands = cands[keep]
            avail = np.bincount(c[keep], minlength=nvals[r])
            if int(np.minimum(cap - counts, avail).sum()) < K:
                return _EMPTY, checks
    if len(cands) < K:
        return _EMPTY, checks
    return cands, checks


def filter_candidates(cands, K, kinds, cols, vcode, bounds, nvals, sums, cnts, vc, codes, nums):
    cands = np.array(cands, dtype=np.int64, copy=True)
    checks = 0
    while True:
        out, c = _filter_pass(cands, K, kinds, cols, vcode, bounds, nvals, sums, cnts, vc,
                              codes, nums)
        checks += c
        if len(out) == len(cands) or len(out) == 0:
            return out, checks
        cands = out


def build_path(slots, order, available, u, indptr, indices, guided, prune, target, closed_w,
               closed_n, n_edges, kinds, cols, vcode, bounds, nvals, sums, cnts, vc, codes, nums,
               kkinds, weights, scales, tables):
    fchecks = schecks = 0
    K = len(order)
    for step in range(K):
        node = order[step]
        cands, c = filter_candidates(np.flatnonzero(available), K - step, kinds, cols, vcode,
                                     bounds, nvals, sums, cnts, vc, codes, nums)
        fchecks += c
        n = len(cands)
        if n == 0:
            return 0, fchecks, schecks
        nbrs = slots[indices[indptr[node]:indptr[node + 1]]]
        nbrs = nbrs[nbrs >= 0]
        if guided and len(nbrs):
            schecks += n * len(nbrs)
            ties, best = best_candidates(cands, nbrs, codes, nums, kkinds, weights, scales,
                                         tables)
            nt = len(ties)
            pick = int(ties[min(int(u[step] * nt), nt - 1)])
            if prune:
                closed_w += best
                closed_n += len(nbrs)
                if closed_w + (n_edges - closed_n) < target:
                    return -1, fchecks, schecks
        else:
            pick = int(cands[min(int(u[step] * n), n - 1)])
        slots[node] = pick
        available[pick] = 0
        for r in range(len(kinds)):
            if kinds[r] == R_SUM:
                sums[r] += nums[pick, cols[r]]
            elif kinds[r] == R_MINC or kinds[r] == R_MAXC:
                cnts[r] += codes[pick, cols[r]] == vcode[r]
            else:
                vc[r, codes[pick, cols[r]]] += 1
    return 1, fchecks, schecks
