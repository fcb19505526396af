"""Numba kernels for the atom + Gaussian-mixture algebra.

A distribution is passed around as five flat arrays::

    loc, aw      atom locations and absolute masses
    mean, var, gw   Gaussian component means, variances and absolute masses

Masses are absolute, i.e. ``aw.sum() + gw.sum() == 1`` for a normalized
distribution, so ``gw.sum()`` is the continuous weight.
"""

import math

import numpy as np
from numba import njit

SQRT2 = math.sqrt(2.0)
LOG_2PI = math.log(2.0 * math.pi)


@njit(cache=True)
def _lognorm(y, m, v):
    d = y - m
    return -0.5 * (LOG_2PI + math.log(v) + d * d / v)


@njit(cache=True)
def _logsumexp(a):
    if a.size == 0:
        return -np.inf
    mx = a.max()
    if mx == -np.inf:
        return -np.inf
    s = 0.0
    for i in range(a.size):
        s += math.exp(a[i] - mx)
    return mx + math.log(s)


@njit(cache=True)
def prune_atoms(loc, aw, eps_atom, eps_w, kmax):
    """Sort, merge atoms closer than eps_atom, drop light ones, cap count."""
    n = loc.size
    if n == 0:
        return loc.copy(), aw.copy(), 0.0
    order = np.argsort(loc, kind="mergesort")
    out_l = np.empty(n)
    out_w = np.empty(n)
    m = 0
    prev = 0.0
    cur_w = 0.0
    cur_wl = 0.0
    for t in range(n):
        i = order[t]
        x = loc[i]
        w = aw[i]
        if m > 0 and x - prev <= eps_atom:
            cur_w += w
            cur_wl += w * x
        else:
            if m > 0:
                out_w[m - 1] = cur_w
                out_l[m - 1] = cur_wl / cur_w if cur_w > 0 else out_l[m - 1]
            out_l[m] = x
            cur_w = w
            cur_wl = w * x
            m += 1
        prev = x
    out_w[m - 1] = cur_w
    out_l[m - 1] = cur_wl / cur_w if cur_w > 0 else out_l[m - 1]

    dropped = 0.0
    keep = np.empty(m, dtype=np.bool_)
    cnt = 0
    for i in range(m):
        keep[i] = out_w[i] >= eps_w
        if keep[i]:
            cnt += 1
        else:
            dropped += out_w[i]
    if cnt > kmax:
        idx = np.nonzero(keep)[0]
        ws = out_w[idx]
        srt = np.argsort(-ws, kind="mergesort")
        for t in range(kmax, cnt):
            j = idx[srt[t]]
            keep[j] = False
            dropped += out_w[j]
        cnt = kmax
    rl = np.empty(cnt)
    rw = np.empty(cnt)
    c = 0
    for i in range(m):
        if keep[i]:
            rl[c] = out_l[i]
            rw[c] = out_w[i]
            c += 1
    return rl, rw, dropped


@njit(cache=True)
def prune_gaussians(mean, var, gw, eps_atom, eps_w, gmax):
    """Merge coincident components, drop light ones, moment-match down to gmax.

    Returns the pruned arrays and the number of moment-matching merges.
    """
    n = mean.size
    if n == 0:
        return mean.copy(), var.copy(), gw.copy(), 0
    order = np.argsort(mean, kind="mergesort")
    m_ = np.empty(n)
    v_ = np.empty(n)
    w_ = np.empty(n)
    for t in range(n):
        i = order[t]
        m_[t] = mean[i]
        v_[t] = var[i]
        w_[t] = gw[i]
    # exact duplicates: same mean (within eps_atom) and same variance
    alive = np.ones(n, dtype=np.bool_)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and m_[stop] - m_[stop - 1] <= eps_atom:
            stop += 1
        for a in range(start, stop):
            if not alive[a]:
                continue
            for b in range(a + 1, stop):
                if alive[b] and abs(v_[b] - v_[a]) <= eps_atom * max(v_[a], 1.0):
                    tot = w_[a] + w_[b]
                    if tot > 0:
                        m_[a] = (w_[a] * m_[a] + w_[b] * m_[b]) / tot
                    w_[a] = tot
                    alive[b] = False
        start = stop

    cnt = 0
    for i in range(n):
        if alive[i] and w_[i] < eps_w:
            alive[i] = False
        if alive[i]:
            cnt += 1
    merges = 0
    if cnt > gmax:
        idx = np.nonzero(alive)[0]
        srt = np.argsort(-w_[idx], kind="mergesort")
        anchors = idx[srt[:gmax]]
        am = m_[anchors].copy()
        # accumulate weight, first and second moments about each anchor mean
        s0 = w_[anchors].copy()
        s1 = np.zeros(gmax)
        s2 = v_[anchors] * w_[anchors]
        for t in range(gmax, cnt):
            j = idx[srt[t]]
            best = 0
            bd = np.inf
            for a in range(gmax):
                d = abs(m_[j] - am[a])
                if d < bd:
                    bd = d
                    best = a
            d = m_[j] - am[best]
            s0[best] += w_[j]
            s1[best] += w_[j] * d
            s2[best] += w_[j] * (v_[j] + d * d)
            alive[j] = False
            merges += 1
        for a in range(gmax):
            j = anchors[a]
            mu = s1[a] / s0[a]
            w_[j] = s0[a]
            m_[j] = am[a] + mu
            v_[j] = s2[a] / s0[a] - mu * mu
        cnt = gmax
    rm = np.empty(cnt)
    rv = np.empty(cnt)
    rw = np.empty(cnt)
    c = 0
    for i in range(n):
        if alive[i]:
            rm[c] = m_[i]
            rv[c] = v_[i]
            rw[c] = w_[i]
            c += 1
    return rm, rv, rw, merges


@njit(cache=True)
def prune(loc, aw, mean, var, gw, eps_atom, eps_w, kmax, gmax):
    pl, pa, dropped = prune_atoms(loc, aw, eps_atom, eps_w, kmax)
    pm, pv, pg, merges = prune_gaussians(mean, var, gw, eps_atom, eps_w, gmax)
    tot = pa.sum() + pg.sum()
    if tot > 0:
        pa /= tot
        pg /= tot
    return pl, pa, pm, pv, pg, merges


@njit(cache=True)
def f_combine(l1, a1, m1, v1, g1, l2, a2, m2, v2, g2, floor):
    """Distribution of (X1 + X2)/sqrt(2); cross terms lighter than floor skipped."""
    k1, k2 = l1.size, l2.size
    n1, n2 = m1.size, m2.size
    loc = np.empty(k1 * k2)
    aw = np.empty(k1 * k2)
    c = 0
    for i in range(k1):
        for j in range(k2):
            w = a1[i] * a2[j]
            if w > 0 and w >= floor:
                loc[c] = (l1[i] + l2[j]) / SQRT2
                aw[c] = w
                c += 1
    loc = loc[:c]
    aw = aw[:c]
    ng = k1 * n2 + n1 * k2 + n1 * n2
    mean = np.empty(ng)
    var = np.empty(ng)
    gw = np.empty(ng)
    c = 0
    for i in range(k1):
        for b in range(n2):
            w = a1[i] * g2[b]
            if w > 0 and w >= floor:
                mean[c] = (l1[i] + m2[b]) / SQRT2
                var[c] = 0.5 * v2[b]
                gw[c] = w
                c += 1
    for a in range(n1):
        for j in range(k2):
            w = g1[a] * a2[j]
            if w > 0 and w >= floor:
                mean[c] = (m1[a] + l2[j]) / SQRT2
                var[c] = 0.5 * v1[a]
                gw[c] = w
                c += 1
    for a in range(n1):
        for b in range(n2):
            w = g1[a] * g2[b]
            if w > 0 and w >= floor:
                mean[c] = (m1[a] + m2[b]) / SQRT2
                var[c] = 0.5 * (v1[a] + v2[b])
                gw[c] = w
                c += 1
    return loc, aw, mean[:c], var[:c], gw[:c]


@njit(cache=True)
def sum_atom_pairs(l1, a1, l2, a2, y, eps_atom):
    """Atom pairs (i, j) of the two inputs with (x_i + y_j)/sqrt(2) within eps_atom of y.

    ``l2`` must be sorted ascending.
    """
    k1 = l1.size
    ii = np.empty(k1 * 2, dtype=np.int64)
    jj = np.empty(k1 * 2, dtype=np.int64)
    c = 0
    if l2.size == 0:
        return ii[:0], jj[:0]
    tol = eps_atom * SQRT2
    for i in range(k1):
        target = SQRT2 * y - l1[i]
        lo = np.searchsorted(l2, target - tol - 1e-300)
        j = lo
        while j < l2.size and l2[j] <= target + tol:
            if abs((l1[i] + l2[j]) / SQRT2 - y) <= eps_atom:
                if c == ii.size:
                    ii2 = np.empty(ii.size * 2, dtype=np.int64)
                    jj2 = np.empty(ii.size * 2, dtype=np.int64)
                    ii2[:c] = ii[:c]
                    jj2[:c] = jj[:c]
                    ii, jj = ii2, jj2
                ii[c] = i
                jj[c] = j
                c += 1
            j += 1
    return ii[:c], jj[:c]


@njit(cache=True)
def joint_log_terms(l1, a1, m1, v1, g1, l2, a2, m2, v2, g2, y):
    """Log-domain per-term contributions to F1, F2, F3 at y.

    Returns (lp, lq, lc, cm, cv): lp[i] is log p~_i(y) (atom of P1 with the
    continuous part of P2), lq[j] is log q~_j(y), lc[a*n2+b] the log weight of
    the Gaussian pair (a, b) and cm/cv the conditional mean/variance of the
    difference given the sum for that pair.
    """
    k1, k2 = l1.size, l2.size
    n1, n2 = m1.size, m2.size
    lp = np.full(k1, -np.inf)
    tmp = np.empty(max(n1, n2, 1))
    for i in range(k1):
        if a1[i] <= 0 or n2 == 0:
            continue
        for b in range(n2):
            if g2[b] > 0:
                tmp[b] = math.log(a1[i] * g2[b]) + _lognorm(y, (l1[i] + m2[b]) / SQRT2, 0.5 * v2[b])
            else:
                tmp[b] = -np.inf
        lp[i] = _logsumexp(tmp[:n2])
    lq = np.full(k2, -np.inf)
    for j in range(k2):
        if a2[j] <= 0 or n1 == 0:
            continue
        for a in range(n1):
            if g1[a] > 0:
                tmp[a] = math.log(g1[a] * a2[j]) + _lognorm(y, (m1[a] + l2[j]) / SQRT2, 0.5 * v1[a])
            else:
                tmp[a] = -np.inf
        lq[j] = _logsumexp(tmp[:n1])
    lc = np.full(n1 * n2, -np.inf)
    cm = np.empty(n1 * n2)
    cv = np.empty(n1 * n2)
    for a in range(n1):
        for b in range(n2):
            t = a * n2 + b
            s = v1[a] + v2[b]
            smean = (m1[a] + m2[b]) / SQRT2
            if g1[a] > 0 and g2[b] > 0:
                lc[t] = math.log(g1[a] * g2[b]) + _lognorm(y, smean, 0.5 * s)
            cm[t] = (m1[a] - m2[b]) / SQRT2 + (v1[a] - v2[b]) / s * (y - smean)
            cv[t] = 2.0 * v1[a] * v2[b] / s
    return lp, lq, lc, cm, cv


@njit(cache=True)
def g_continuous(l1, a1, m1, v1, g1, l2, a2, m2, v2, g2, y):
    """Conditional of (X1 - X2)/sqrt(2) given (X1 + X2)/sqrt(2) = y, y off the sum atoms.

    Returns (loc, aw, mean, var, gw, logF). Weights are normalized by F(y);
    logF is -inf when y lies outside the support.
    """
    lp, lq, lc, cm, cv = joint_log_terms(l1, a1, m1, v1, g1, l2, a2, m2, v2, g2, y)
    allterms = np.concatenate((lp, lq, lc))
    logf = _logsumexp(allterms)
    k1, k2 = l1.size, l2.size
    loc = np.empty(k1 + k2)
    aw = np.empty(k1 + k2)
    c = 0
    if logf == -np.inf:
        return loc[:0], aw[:0], cm[:0], cv[:0], cm[:0], logf
    for i in range(k1):
        if lp[i] > -np.inf:
            loc[c] = SQRT2 * l1[i] - y
            aw[c] = math.exp(lp[i] - logf)
            c += 1
    for j in range(k2):
        if lq[j] > -np.inf:
            loc[c] = y - SQRT2 * l2[j]
            aw[c] = math.exp(lq[j] - logf)
            c += 1
    nc = lc.size
    mean = np.empty(nc)
    var = np.empty(nc)
    gw = np.empty(nc)
    d = 0
    for t in range(nc):
        if lc[t] > -np.inf:
            mean[d] = cm[t]
            var[d] = cv[t]
            gw[d] = math.exp(lc[t] - logf)
            d += 1
    return loc[:c], aw[:c], mean[:d], var[:d], gw[:d], logf


@njit(cache=True)
def f_pruned(l1, a1, m1, v1, g1, l2, a2, m2, v2, g2, eps_atom, eps_w, kmax, gmax):
    loc, aw, mean, var, gw = f_combine(l1, a1, m1, v1, g1, l2, a2, m2, v2, g2, eps_w)
    return prune(loc, aw, mean, var, gw, eps_atom, eps_w, kmax, gmax)


@njit(cache=True)
def g_pruned(l1, a1, m1, v1, g1, l2, a2, m2, v2, g2, y, eps_atom, eps_w, kmax, gmax):
    """Full g operation followed by pruning.

    The last return value is 1 for the sum-atom branch, 0 for the continuous
    branch and -1 when y is outside the support.
    """
    ii, jj = sum_atom_pairs(l1, a1, l2, a2, y, eps_atom)
    empty = np.empty(0)
    if ii.size:
        w = np.empty(ii.size)
        loc = np.empty(ii.size)
        tot = 0.0
        for t in range(ii.size):
            w[t] = a1[ii[t]] * a2[jj[t]]
            loc[t] = (l1[ii[t]] - l2[jj[t]]) / SQRT2
            tot += w[t]
        if tot > 0:
            pl, pa, pm, pv, pg, merges = prune(loc, w / tot, empty, empty, empty,
                                               eps_atom, eps_w, kmax, gmax)
            return pl, pa, pm, pv, pg, 1
    loc, aw, mean, var, gw, logf = g_continuous(l1, a1, m1, v1, g1, l2, a2, m2, v2, g2, y)
    if logf == -np.inf:
        return empty, empty, empty, empty, empty, -1
    pl, pa, pm, pv, pg, merges = prune(loc, aw, mean, var, gw, eps_atom, eps_w, kmax, gmax)
    return pl, pa, pm, pv, pg, 0
