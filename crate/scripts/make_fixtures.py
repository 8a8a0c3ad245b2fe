#!/usr/bin/env python3
"""Generate the bundled benchmark fixtures under data/.

Writes synthetic team-orienteering instances in the Chao text layout and
synthetic quadratic-assignment instances in the QAPLIB layout, plus the
real QAPLIB instance chr12c with its published optimum. Best-known values
for the synthetic instances come from independent local-search solvers in
this script (iterated local search for TOP, robust tabu search for QAP),
not from the GA being benchmarked.

Usage: python3 scripts/make_fixtures.py [--seconds-per-instance 40]
"""

import argparse
import math
import os
import time

import numpy as np
from numba import njit

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")

# ---------------------------------------------------------------- TOP


def make_top(rng, n, h, slack):
    xy = np.round(rng.uniform(0.0, 50.0, size=(n, 2)), 1)
    scores = rng.integers(1, 21, size=n)
    scores[0] = 0
    scores[-1] = 0
    d_se = float(np.hypot(*(xy[0] - xy[-1])))
    tmax = round(d_se + slack, 1)
    return xy, scores, tmax


@njit(cache=True)
def _path_len(path, plen, dist):
    tot = 0.0
    for k in range(plen - 1):
        tot += dist[path[k], path[k + 1]]
    return tot


@njit(cache=True)
def _greedy_fill(paths, plens, lens, used, dist, scores, tmax, h):
    n = dist.shape[0]
    while True:
        best_ratio = -1.0
        bv = -1
        bp = -1
        bpos = -1
        bdelta = 0.0
        for v in range(1, n - 1):
            if used[v]:
                continue
            for p in range(h):
                for pos in range(1, plens[p]):
                    a = paths[p, pos - 1]
                    b = paths[p, pos]
                    delta = dist[a, v] + dist[v, b] - dist[a, b]
                    if lens[p] + delta <= tmax + 1e-9:
                        ratio = scores[v] / (delta + 1e-6)
                        if ratio > best_ratio:
                            best_ratio = ratio
                            bv = v
                            bp = p
                            bpos = pos
                            bdelta = delta
        if bv < 0:
            return
        for k in range(plens[bp], bpos, -1):
            paths[bp, k] = paths[bp, k - 1]
        paths[bp, bpos] = bv
        plens[bp] += 1
        lens[bp] += bdelta
        used[bv] = True


@njit(cache=True)
def _two_opt(paths, plens, lens, dist, h):
    for p in range(h):
        improved = True
        while improved:
            improved = False
            m = plens[p]
            for i in range(1, m - 2):
                for j in range(i + 1, m - 1):
                    a = paths[p, i - 1]
                    b = paths[p, i]
                    c = paths[p, j]
                    d = paths[p, j + 1]
                    delta = dist[a, c] + dist[b, d] - dist[a, b] - dist[c, d]
                    if delta < -1e-10:
                        lo = i
                        hi = j
                        while lo < hi:
                            t = paths[p, lo]
                            paths[p, lo] = paths[p, hi]
                            paths[p, hi] = t
                            lo += 1
                            hi -= 1
                        lens[p] += delta
                        improved = True
        lens[p] = _path_len(paths[p], plens[p], dist)


@njit(cache=True)
def _objective(paths, plens, scores, h):
    tot = 0
    for p in range(h):
        for k in range(1, plens[p] - 1):
            tot += scores[paths[p, k]]
    return tot


@njit(cache=True)
def top_ils(dist, scores, tmax, h, iters, seed):
    np.random.seed(seed)
    n = dist.shape[0]
    paths = np.zeros((h, n + 2), dtype=np.int64)
    plens = np.zeros(h, dtype=np.int64)
    lens = np.zeros(h)
    used = np.zeros(n, dtype=np.bool_)
    for p in range(h):
        paths[p, 0] = 0
        paths[p, 1] = n - 1
        plens[p] = 2
        lens[p] = dist[0, n - 1]
    _greedy_fill(paths, plens, lens, used, dist, scores, tmax, h)
    _two_opt(paths, plens, lens, dist, h)
    _greedy_fill(paths, plens, lens, used, dist, scores, tmax, h)
    cur = _objective(paths, plens, scores, h)
    best = cur
    best_paths = paths.copy()
    best_plens = plens.copy()
    for it in range(iters):
        cp = paths.copy()
        cl = plens.copy()
        cn = lens.copy()
        cu = used.copy()
        k = 1 + np.random.randint(6)
        for _ in range(k):
            p = np.random.randint(h)
            if cl[p] <= 2:
                continue
            pos = 1 + np.random.randint(cl[p] - 2)
            v = cp[p, pos]
            for q in range(pos, cl[p] - 1):
                cp[p, q] = cp[p, q + 1]
            cl[p] -= 1
            cu[v] = False
        for p in range(h):
            cn[p] = _path_len(cp[p], cl[p], dist)
        _two_opt(cp, cl, cn, dist, h)
        _greedy_fill(cp, cl, cn, cu, dist, scores, tmax, h)
        _two_opt(cp, cl, cn, dist, h)
        _greedy_fill(cp, cl, cn, cu, dist, scores, tmax, h)
        obj = _objective(cp, cl, scores, h)
        if obj >= cur or np.random.random() < 0.02:
            paths = cp
            plens = cl
            lens = cn
            used = cu
            cur = obj
        if cur > best:
            best = cur
            best_paths = paths.copy()
            best_plens = plens.copy()
        if it % 2000 == 1999 and cur < best:
            paths = best_paths.copy()
            plens = best_plens.copy()
            for p in range(h):
                lens[p] = _path_len(paths[p], plens[p], dist)
            used[:] = False
            for p in range(h):
                for q in range(1, plens[p] - 1):
                    used[paths[p, q]] = True
            cur = best
    return best, best_paths, best_plens


def write_top(path, xy, scores, h, tmax):
    with open(path, "w") as f:
        f.write(f"n {len(scores)}\nm {h}\ntmax {tmax}\n")
        for (x, y), s in zip(xy, scores):
            f.write(f"{x:.1f}\t{y:.1f}\t{int(s)}\n")


# ---------------------------------------------------------------- QAP


@njit(cache=True)
def qap_cost(a, b, p):
    n = a.shape[0]
    tot = 0
    for i in range(n):
        for j in range(n):
            tot += a[i, j] * b[p[i], p[j]]
    return tot


@njit(cache=True)
def _delta(a, b, p, r, s):
    n = a.shape[0]
    pr = p[r]
    ps = p[s]
    d = (a[r, r] - a[s, s]) * (b[ps, ps] - b[pr, pr]) + (a[r, s] - a[s, r]) * (
        b[ps, pr] - b[pr, ps]
    )
    for k in range(n):
        if k != r and k != s:
            pk = p[k]
            d += (a[k, r] - a[k, s]) * (b[pk, ps] - b[pk, pr]) + (a[r, k] - a[s, k]) * (
                b[ps, pk] - b[pr, pk]
            )
    return d


@njit(cache=True)
def qap_rots(a, b, iters, seed):
    np.random.seed(seed)
    n = a.shape[0]
    p = np.random.permutation(n)
    cost = qap_cost(a, b, p)
    best = cost
    best_p = p.copy()
    tabu = np.zeros((n, n), dtype=np.int64)
    last = np.zeros((n, n), dtype=np.int64)
    aspiration = 5 * n * n
    tmin = int(0.9 * n)
    tmax_ = int(1.1 * n) + 1
    for it in range(1, iters + 1):
        br = -1
        bs = -1
        bd = 1 << 62
        forced = False
        for r in range(n - 1):
            for s in range(r + 1, n):
                d = _delta(a, b, p, r, s)
                autorized = (tabu[r, p[s]] < it) or (tabu[s, p[r]] < it)
                aspired = (last[r, p[s]] < it - aspiration and last[s, p[r]] < it - aspiration) or (
                    cost + d < best
                )
                if (aspired and not forced) or (aspired and forced and d < bd):
                    br = r
                    bs = s
                    bd = d
                    if aspired and cost + d >= best:
                        forced = True
                elif (not forced) and autorized and d < bd:
                    br = r
                    bs = s
                    bd = d
        if br < 0:
            continue
        t = p[br]
        p[br] = p[bs]
        p[bs] = t
        cost += bd
        ten = tmin + np.random.randint(tmax_ - tmin)
        tabu[br, p[bs]] = it + ten
        tabu[bs, p[br]] = it + tmin + np.random.randint(tmax_ - tmin)
        last[br, p[br]] = it
        last[bs, p[bs]] = it
        if cost < best:
            best = cost
            best_p = p.copy()
    return best, best_p


def make_qap(rng, n):
    a = rng.integers(0, 100, size=(n, n))
    a = np.triu(a, 1)
    a = a + a.T
    b = rng.integers(0, 100, size=(n, n))
    b = np.triu(b, 1)
    b = b + b.T
    return a.astype(np.int64), b.astype(np.int64)


def write_qap(path, a, b):
    n = a.shape[0]
    with open(path, "w") as f:
        f.write(f"{n}\n\n")
        for row in a:
            f.write(" ".join(f"{v:3d}" for v in row) + "\n")
        f.write("\n")
        for row in b:
            f.write(" ".join(f"{v:3d}" for v in row) + "\n")


CHR12C_A = [
    [0, 90, 10, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [90, 0, 0, 23, 0, 0, 0, 0, 0, 0, 0, 0],
    [10, 0, 0, 0, 43, 0, 0, 0, 0, 0, 0, 0],
    [0, 23, 0, 0, 0, 88, 0, 0, 0, 0, 0, 0],
    [0, 0, 43, 0, 0, 0, 26, 0, 0, 0, 0, 0],
    [0, 0, 0, 88, 0, 0, 0, 16, 0, 0, 0, 0],
    [0, 0, 0, 0, 26, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 16, 0, 0, 0, 96, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 29, 0],
    [0, 0, 0, 0, 0, 0, 0, 96, 0, 0, 0, 37],
    [0, 0, 0, 0, 0, 0, 0, 0, 29, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 37, 0, 0],
]
CHR12C_B = [
    [0, 36, 54, 26, 59, 72, 9, 34, 79, 17, 46, 95],
    [36, 0, 73, 35, 90, 58, 30, 78, 35, 44, 79, 36],
    [54, 73, 0, 21, 10, 97, 58, 66, 69, 61, 54, 63],
    [26, 35, 21, 0, 93, 12, 46, 40, 37, 48, 68, 85],
    [59, 90, 10, 93, 0, 64, 5, 29, 76, 16, 5, 76],
    [72, 58, 97, 12, 64, 0, 96, 55, 38, 54, 0, 34],
    [9, 30, 58, 46, 5, 96, 0, 83, 35, 11, 56, 37],
    [34, 78, 66, 40, 29, 55, 83, 0, 44, 12, 15, 80],
    [79, 35, 69, 37, 76, 38, 35, 44, 0, 64, 39, 33],
    [17, 44, 61, 48, 16, 54, 11, 12, 64, 0, 70, 86],
    [46, 79, 54, 68, 5, 0, 56, 15, 39, 70, 0, 18],
    [95, 36, 63, 85, 76, 34, 37, 80, 33, 86, 18, 0],
]
CHR12C_OPT = 11156
CHR12C_PERM = [7, 5, 1, 3, 10, 4, 8, 6, 9, 11, 2, 12]


def timed_rounds(fn, seconds):
    """Call fn(seed) with growing budgets until `seconds` elapse; keep the best."""
    start = time.time()
    best = None
    seed = 1
    while time.time() - start < seconds:
        res = fn(seed)
        if best is None or res[0] > best[0]:
            best = res
        seed += 1
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seconds-per-instance", type=float, default=40.0)
    args = ap.parse_args()

    top_dir = os.path.join(ROOT, "top")
    qap_dir = os.path.join(ROOT, "qap")
    os.makedirs(top_dir, exist_ok=True)
    os.makedirs(qap_dir, exist_ok=True)

    rng = np.random.default_rng(20240517)
    top_bks = []
    specs = [(h, slack) for h in (2, 3, 4) for slack in (20.0, 30.0, 40.0, 55.0, 70.0)]
    for idx, (h, slack) in enumerate(specs):
        name = f"syn{idx + 1:02d}.{h}"
        xy, scores, tmax = make_top(rng, 100, h, slack)
        write_top(os.path.join(top_dir, name + ".txt"), xy, scores, h, tmax)
        dist = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
        s64 = scores.astype(np.float64)

        def run(seed, dist=dist, s64=s64, tmax=tmax, h=h):
            best, bp, bl = top_ils(dist, s64, tmax, h, 4000, seed)
            return (best, bp, bl)

        best = timed_rounds(run, args.seconds_per_instance)
        print(f"top {name}: tmax={tmax} bks={best[0]:.0f}", flush=True)
        top_bks.append((name, int(best[0])))

    qap_bks = [("chr12c", CHR12C_OPT)]
    write_qap(os.path.join(qap_dir, "chr12c.dat"), np.array(CHR12C_A), np.array(CHR12C_B))
    with open(os.path.join(qap_dir, "chr12c.sln"), "w") as f:
        f.write(f"12 {CHR12C_OPT}\n")
        f.write(" ".join(str(v) for v in CHR12C_PERM) + "\n")

    sizes = [20, 22, 24, 25, 26, 28, 30, 30, 32, 34, 35, 36, 38, 40]
    for idx, n in enumerate(sizes):
        name = f"syn{n}{chr(ord('a') + idx)}"
        a, b = make_qap(rng, n)
        write_qap(os.path.join(qap_dir, name + ".dat"), a, b)

        def run(seed, a=a, b=b):
            best, bp = qap_rots(a, b, 20000, seed)
            assert qap_cost(a, b, bp) == best
            return (-best, bp)

        best = timed_rounds(run, args.seconds_per_instance)
        print(f"qap {name}: bks={-best[0]}", flush=True)
        qap_bks.append((name, int(-best[0])))

    with open(os.path.join(top_dir, "bks.csv"), "w") as f:
        for name, v in top_bks:
            f.write(f"{name},{v}\n")
    with open(os.path.join(qap_dir, "bks.csv"), "w") as f:
        for name, v in qap_bks:
            f.write(f"{name},{v}\n")

    # Fixed split: one third characterization, two thirds comparison.
    split = np.random.default_rng(7)
    for sub, names in (("top", [n for n, _ in top_bks]), ("qap", [n for n, _ in qap_bks])):
        order = list(split.permutation(len(names)))
        k = len(names) // 3
        ext = ".txt" if sub == "top" else ".dat"
        charac = sorted(names[i] + ext for i in order[:k])
        comp = sorted(names[i] + ext for i in order[k:])
        with open(os.path.join(ROOT, sub, "characterization.manifest"), "w") as f:
            f.write("\n".join(charac) + "\n")
        with open(os.path.join(ROOT, sub, "comparison.manifest"), "w") as f:
            f.write("\n".join(comp) + "\n")


if __name__ == "__main__":
    main()
