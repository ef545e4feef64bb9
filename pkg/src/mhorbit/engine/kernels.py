"""Hot kernels for level-by-level orbit tree expansion in log space.

A frontier level is a batch of nodes, each holding n coordinate logs, n
per-coordinate error bounds, and the letter that produced it (the one move
that is banned for its children).  ``expand_level`` produces every child in
one shot.

The numba-compiled kernel is used by default; set ORBIT_NO_NUMBA=1 to force
the pure-numpy path (``benchmarks/bench_kernels.py`` compares the two).
Both paths apply the same formulas; certified decisions are identical either
way because near-boundary cases are escalated to exact arithmetic upstream.
"""

from __future__ import annotations

import os

import numpy as np

KAPPA_EPS = 8.0 * 2.0 ** -52
_R_CLIP = 1.0 - 2.0 ** -50


def _expand_numpy(logs, errs, banned, loga):
    m, n = logs.shape
    out_logs, out_errs, out_letter, out_parent = [], [], [], []
    out_maxlog, out_maxerr, out_strict = [], [], []
    for j in range(n):
        rows = np.nonzero(banned != j)[0]
        if rows.size == 0:
            continue
        l = logs[rows]
        e = errs[rows]
        lj = l[:, j]
        ej = e[:, j]
        others = np.delete(l, j, axis=1)
        others_e = np.delete(e, j, axis=1)
        others_max = others.max(axis=1)
        s = loga + others.sum(axis=1)
        sum_e = others_e.sum(axis=1)

        # outgoing form: new = S + log1p(-x_j / prod)
        r = np.exp(np.minimum(lj - s, -1e-300))
        r = np.minimum(r, _R_CLIP)
        new_out = s + np.log1p(-r)
        e_out = (sum_e + r * ej) / (1.0 - r) + KAPPA_EPS * np.maximum(np.abs(new_out), 1.0)

        # descent form: new = logsumexp(2 l_i, i != j) - l_j
        m2 = 2.0 * others_max
        lse = m2 + np.log(np.exp(2.0 * others - m2[:, None]).sum(axis=1))
        new_desc = lse - lj
        e_desc = 2.0 * others_e.max(axis=1) + ej + KAPPA_EPS * np.maximum(np.abs(new_desc), 1.0)

        is_desc = lj >= others_max
        new = np.where(is_desc, new_desc, new_out)
        e_new = np.where(is_desc, e_desc, e_out)

        cl = l.copy()
        cl[:, j] = new
        ce = e.copy()
        ce[:, j] = e_new

        out_logs.append(cl)
        out_errs.append(ce)
        out_letter.append(np.full(rows.size, j, dtype=np.int8))
        out_parent.append(rows.astype(np.int64))
        out_maxlog.append(np.maximum(new, others_max))
        out_maxerr.append(ce.max(axis=1))
        out_strict.append(new - e_new > (others + others_e).max(axis=1))
    if not out_logs:
        z = np.zeros((0, n))
        return (z, z.copy(), np.zeros(0, np.int8), np.zeros(0, np.int64),
                np.zeros(0), np.zeros(0), np.zeros(0, bool))
    return (np.concatenate(out_logs), np.concatenate(out_errs),
            np.concatenate(out_letter), np.concatenate(out_parent),
            np.concatenate(out_maxlog), np.concatenate(out_maxerr),
            np.concatenate(out_strict))


def _expand_loops(logs, errs, banned, loga):
    m, n = logs.shape
    counts = np.empty(m, np.int64)
    for i in range(m):
        counts[i] = n - (1 if banned[i] >= 0 else 0)
    total = int(counts.sum())
    cl = np.empty((total, n))
    ce = np.empty((total, n))
    letter = np.empty(total, np.int8)
    parent = np.empty(total, np.int64)
    maxlog = np.empty(total)
    maxerr = np.empty(total)
    strict = np.empty(total, np.bool_)
    pos = 0
    for i in range(m):
        for j in range(n):
            if j == banned[i]:
                continue
            lj = logs[i, j]
            ej = errs[i, j]
            others_max = -np.inf
            others_max_pe = -np.inf
            s = loga
            sum_e = 0.0
            for k in range(n):
                if k == j:
                    continue
                s += logs[i, k]
                sum_e += errs[i, k]
                if logs[i, k] > others_max:
                    others_max = logs[i, k]
                if logs[i, k] + errs[i, k] > others_max_pe:
                    others_max_pe = logs[i, k] + errs[i, k]
            if lj >= others_max:
                m2 = 2.0 * others_max
                acc = 0.0
                e_max = 0.0
                for k in range(n):
                    if k == j:
                        continue
                    acc += np.exp(2.0 * logs[i, k] - m2)
                    if errs[i, k] > e_max:
                        e_max = errs[i, k]
                new = m2 + np.log(acc) - lj
                e_new = 2.0 * e_max + ej + KAPPA_EPS * max(abs(new), 1.0)
            else:
                d = lj - s
                if d > -1e-300:
                    d = -1e-300
                r = np.exp(d)
                if r > _R_CLIP:
                    r = _R_CLIP
                new = s + np.log1p(-r)
                e_new = (sum_e + r * ej) / (1.0 - r) + KAPPA_EPS * max(abs(new), 1.0)
            mx = new if new > others_max else others_max
            me = e_new
            for k in range(n):
                cl[pos, k] = logs[i, k]
                ce[pos, k] = errs[i, k]
                if k != j and errs[i, k] > me:
                    me = errs[i, k]
            cl[pos, j] = new
            ce[pos, j] = e_new
            letter[pos] = j
            parent[pos] = i
            maxlog[pos] = mx
            maxerr[pos] = me
            strict[pos] = new - e_new > others_max_pe
            pos += 1
    return cl, ce, letter, parent, maxlog, maxerr, strict


USE_NUMBA = os.environ.get("ORBIT_NO_NUMBA", "") not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit

        _expand_numba = njit(cache=True, nogil=True)(_expand_loops)
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if USE_NUMBA:
    expand_level = _expand_numba
else:
    expand_level = _expand_numpy


def expand_pure_numpy(logs, errs, banned, loga):
    """Fallback path, always pure numpy (for the benchmark)."""
    return _expand_numpy(logs, errs, banned, loga)


def replay_word(logs0, errs0, word, loga):
    """Recompute a node's log state by walking its word from the base.

    Runs the active kernel on one-row arrays so the float operations match
    the batch traversal bit for bit.
    """
    logs = np.asarray(logs0, dtype=np.float64).reshape(1, -1).copy()
    errs = np.asarray(errs0, dtype=np.float64).reshape(1, -1).copy()
    banned = np.full(1, -1, np.int8)
    for letter in word:
        cl, ce, letters, _, _, _, _ = expand_level(logs, errs, banned, loga)
        pick = np.nonzero(letters == letter)[0]
        logs = cl[pick[0]: pick[0] + 1].copy()
        errs = ce[pick[0]: pick[0] + 1].copy()
        banned[0] = letter
    return logs[0], errs[0]
