"""Compiled inner loops.  Inputs are always validated by the callers."""

import numpy as np
from numba import njit


@njit(cache=True)
def _count_below(xs, pivot, strict):
    # Pairs (i < j) with xs[j] - xs[i] < pivot (strict) or <= pivot.
    # The boundary index is non-decreasing in i because subtraction
    # rounding is monotone, so one forward pointer suffices.
    n = xs.shape[0]
    total = 0
    j = 0
    for i in range(n - 1):
        if j < i + 1:
            j = i + 1
        if strict:
            while j < n and xs[j] - xs[i] < pivot:
                j += 1
        else:
            while j < n and xs[j] - xs[i] <= pivot:
                j += 1
        total += j - i - 1
    return total


@njit(cache=True)
def count_pairs_le(xs, t):
    """Number of pairs i < j of the sorted array with xs[j] - xs[i] <= t."""
    return _count_below(xs, t, False)


@njit(cache=True)
def kth_pair_distance(xs, k):
    """
    k-th smallest (1-based) of xs[j] - xs[i], i < j, for sorted xs.

    Selection over the implicit matrix of row-sorted differences.  Each
    row keeps a window [left, right] of surviving candidates; the pivot
    is the weighted median of the row medians, which removes at least a
    quarter of the candidates per round.  Counting is a two-pointer sweep,
    so a round costs O(n log n) and there are O(log n) rounds.
    """
    n = xs.shape[0]
    left = np.empty(n, np.int64)
    right = np.empty(n, np.int64)
    for i in range(n):
        left[i] = i + 1
        right[i] = n - 1
    remaining = n * (n - 1) // 2
    below = 0  # candidates discarded on the low side
    med = np.empty(n, np.float64)
    wt = np.empty(n, np.int64)
    lo_idx = np.empty(n, np.int64)
    hi_idx = np.empty(n, np.int64)

    while remaining > n:
        m = 0
        for i in range(n - 1):
            if left[i] <= right[i]:
                med[m] = xs[(left[i] + right[i]) // 2] - xs[i]
                wt[m] = right[i] - left[i] + 1
                m += 1
        order = np.argsort(med[:m], kind="mergesort")
        half = remaining // 2
        acc = 0
        pivot = med[order[m - 1]]
        for r in range(m):
            acc += wt[order[r]]
            if acc > half:
                pivot = med[order[r]]
                break

        # lo_idx[i]: first j with diff >= pivot; hi_idx[i]: first j with diff > pivot
        j = 0
        for i in range(n - 1):
            if j < i + 1:
                j = i + 1
            while j < n and xs[j] - xs[i] < pivot:
                j += 1
            lo_idx[i] = j
        j = 0
        for i in range(n - 1):
            if j < i + 1:
                j = i + 1
            while j < n and xs[j] - xs[i] <= pivot:
                j += 1
            hi_idx[i] = j
        n_less = 0
        n_le = 0
        for i in range(n - 1):
            n_less += lo_idx[i] - i - 1
            n_le += hi_idx[i] - i - 1

        if k <= n_less:
            for i in range(n - 1):
                if right[i] > lo_idx[i] - 1:
                    right[i] = lo_idx[i] - 1
        elif k <= n_le:
            return pivot
        else:
            for i in range(n - 1):
                if left[i] < hi_idx[i]:
                    left[i] = hi_idx[i]

        remaining = 0
        below = 0
        for i in range(n - 1):
            below += left[i] - i - 1
            if left[i] <= right[i]:
                remaining += right[i] - left[i] + 1

    cand = np.empty(remaining, np.float64)
    c = 0
    for i in range(n - 1):
        for j in range(left[i], right[i] + 1):
            cand[c] = xs[j] - xs[i]
            c += 1
    cand.sort()
    return cand[k - below - 1]


@njit(cache=True)
def _step_eval(breaks, levels, t, left_limit):
    # F = levels[k] on [breaks[k-1], breaks[k]); levels[0] below breaks[0].
    if left_limit:
        k = np.searchsorted(breaks, t, side="left")
    else:
        k = np.searchsorted(breaks, t, side="right")
    return levels[k]


@njit(cache=True)
def _banded_sup(locs, vals, width):
    # max |vals[a] - vals[b]| over pairs with |locs[a] - locs[b]| <= width
    order = np.argsort(locs, kind="mergesort")
    r = locs.shape[0]
    best = 0.0
    for ia in range(r):
        a = order[ia]
        for ib in range(ia, r):
            b = order[ib]
            if locs[b] - locs[a] > width:
                break
            d = abs(vals[a] - vals[b])
            if d > best:
                best = d
    return best


@njit(cache=True)
def hypothesis_sup(breaks, levels, w, c1, c2, tol):
    """
    sup |F(t) - F(t') - (t - t')| over t, t' in [c1, c2] with |t - t'| <= w.

    The difference is linear on every cell cut out by the breaks and the
    band edges, so the supremum is attained (or approached) at vertices
    whose coordinates come from {c1, c2, c1 + w, c2 - w, s_k, s_k +- w};
    at breaks both the value and the left limit are examined.
    """
    m = breaks.shape[0]
    pts = np.empty(4 + 3 * m, np.float64)
    q = 0
    pts[q] = c1
    q += 1
    pts[q] = c2
    q += 1
    if c1 + w <= c2:
        pts[q] = c1 + w
        q += 1
    if c2 - w >= c1:
        pts[q] = c2 - w
        q += 1
    for k in range(m):
        for off in (0.0, w, -w):
            s = breaks[k] + off
            if s >= c1 and s <= c2:
                pts[q] = s
                q += 1
    locs = np.empty(2 * q, np.float64)
    vals = np.empty(2 * q, np.float64)
    r = 0
    for a in range(q):
        s = pts[a]
        locs[r] = s
        vals[r] = _step_eval(breaks, levels, s, False) - s
        r += 1
        if s > c1:
            locs[r] = s
            vals[r] = _step_eval(breaks, levels, s, True) - s
            r += 1
    return _banded_sup(locs[:r], vals[:r], w + tol)


@njit(cache=True)
def conclusion_sup(breaks, levels, l, lo, hi, tol):
    """
    sup |F^-1(p) - F^-1(p') - (p - p')| over |p - p'| <= l with both
    inverses in the open interval (lo, hi); -1.0 if nothing is admissible.

    F^-1(p) = breaks[k] for p in (levels[k], levels[k + 1]].  On each
    such piece the difference is linear in (p, p'), so vertices built from
    the levels and the levels shifted by +-l are sufficient.
    """
    m = breaks.shape[0]
    ps = np.empty(3 * (m + 1), np.float64)
    q = 0
    for k in range(m + 1):
        for off in (0.0, l, -l):
            ps[q] = levels[k] + off
            q += 1
    pv = np.empty(2 * q, np.float64)
    hv = np.empty(2 * q, np.float64)
    r = 0
    for a in range(q):
        p = ps[a]
        kk = np.searchsorted(levels, p, side="left") - 1
        # p may lie in the closure of two neighbouring pieces
        for cand in (kk, kk + 1):
            if cand < 0 or cand >= m:
                continue
            if levels[cand] == levels[cand + 1]:
                continue
            if p < levels[cand] or p > levels[cand + 1]:
                continue
            s = breaks[cand]
            if s > lo and s < hi:
                pv[r] = p
                hv[r] = s - p
                r += 1
    if r == 0:
        return -1.0
    return _banded_sup(pv[:r], hv[:r], l + tol)


@njit(cache=True)
def stability_fuzz_block(seed, trials, max_breaks, tol):
    """
    Randomised search for step functions that satisfy the hypothesis of
    the inverse-stability lemma but break its conclusion.

    Returns (hypothesis_satisfied, conclusion_checked, violations).
    Scales are drawn at random.  Levels follow the diagonal with an error
    sized from the realised largest gap, so the hypothesis sits near its
    boundary; the error is uniform, pushed to the extremes, or drifting.
    """
    np.random.seed(seed)
    n_sat = 0
    n_checked = 0
    n_bad = 0
    for _ in range(trials):
        c = 10.0 ** (-2.0 + 2.0 * np.random.random())
        l = c * (0.05 + 4.0 * np.random.random())
        gap = c * (0.05 + 0.85 * np.random.random())
        c1 = -1.0 + 2.0 * np.random.random()
        c2 = c1 + 2.0 * (2.0 * c + l) + c * (0.5 + 10.0 * np.random.random())
        start = c1 - (l + 2.0 * c) * np.random.random()
        m = int((c2 + l + 2.0 * c - start) / (0.6 * gap)) + 2
        if m > max_breaks:
            m = max_breaks
        breaks = np.empty(m, np.float64)
        s = start
        max_gap = 0.0
        for k in range(m):
            g = gap * (0.2 + 0.8 * np.random.random())
            if k > 0 and g > max_gap:
                max_gap = g
            s += g
            breaks[k] = s
        amp = 0.5 * (c - max_gap) * (0.5 + 0.6 * np.random.random())
        if amp < 0.0:
            amp = 0.0
        levels = np.empty(m + 1, np.float64)
        mode = np.random.randint(3)
        drift = 0.0
        levels[0] = breaks[0] - gap * np.random.random()
        for k in range(m):
            if mode == 0:
                e = 2.0 * amp * (np.random.random() - 0.5)
            elif mode == 1:
                e = amp if np.random.random() < 0.5 else -amp
            else:
                drift += 0.5 * amp * (np.random.random() - 0.5)
                if drift > amp:
                    drift = amp
                elif drift < -amp:
                    drift = -amp
                e = drift
            nxt = breaks[k + 1] if k + 1 < m else breaks[k] + gap
            v = 0.5 * (breaks[k] + nxt) + e
            if v < levels[k]:
                v = levels[k]
            levels[k + 1] = v
        if hypothesis_sup(breaks, levels, l + 2.0 * c, c1, c2, 0.0) > c:
            continue
        n_sat += 1
        s = conclusion_sup(breaks, levels, l, c1 + 2.0 * c + l, c2 - 2.0 * c - l, tol)
        if s >= 0.0:
            n_checked += 1
            if s > c + tol:
                n_bad += 1
    return n_sat, n_checked, n_bad
