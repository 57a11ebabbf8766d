"""Block-matching kernel, compiled with numba.

Kept separate from the public stereo API so the jitted code stays free of
Python objects. The kernel fuses cost aggregation, winner selection with a
uniqueness test, sub-pixel interpolation, and the left-right consistency
pass, so no (h, w, d) cost volume is ever materialized.
"""

import numpy as np
from numba import njit

INVALID = np.float32(np.nan)


@njit(cache=True, nogil=True)
def sad_disparity(left, right, d_max, block, uniq):
    """Dense disparity for a rectified grayscale pair.

    left, right: uint8 (h, w). Returns float32 (h, w) with NaN where no
    confident match exists. Search range is [0, d_max] pixels leftward in
    the right image; block is the odd SAD window side.
    """
    h, w = left.shape
    r = block // 2
    nd = d_max + 1
    disp = np.full((h, w), INVALID, np.float32)

    # column AD sums over the current row band, per disparity
    colad = np.zeros((nd, w), np.int32)
    cost = np.full((nd, w), -1, np.int32)  # -1 marks undefined (u, d)
    d_int = np.empty(w, np.int32)
    d_sub = np.empty(w, np.float32)
    d_right = np.empty(w, np.int32)

    big = np.int32(2 ** 30)

    for y0 in range(h - block + 1):
        yc = y0 + r
        if y0 == 0:
            for d in range(nd):
                for u in range(d, w):
                    s = np.int32(0)
                    for dy in range(block):
                        diff = np.int32(left[dy, u]) - np.int32(right[dy, u - d])
                        s += diff if diff >= 0 else -diff
                    colad[d, u] = s
        else:
            ytop = y0 - 1
            ybot = y0 + block - 1
            for d in range(nd):
                for u in range(d, w):
                    add = np.int32(left[ybot, u]) - np.int32(right[ybot, u - d])
                    sub = np.int32(left[ytop, u]) - np.int32(right[ytop, u - d])
                    colad[d, u] += (add if add >= 0 else -add) - (
                        sub if sub >= 0 else -sub
                    )

        # horizontal box sums; cost[d, u] needs columns u-r .. u+r at shift d
        for d in range(nd):
            run = np.int32(0)
            for u in range(d, min(d + block, w)):
                run += colad[d, u]
            for u in range(d + r, w - r):
                if u > d + r:
                    run += colad[d, u + r] - colad[d, u - r - 1]
                cost[d, u] = run

        # left winner per column, with uniqueness and sub-pixel refinement
        for u in range(r, w - r):
            best = big
            bestd = -1
            dmax_u = min(d_max, u - r)
            for d in range(dmax_u + 1):
                c = cost[d, u]
                if c < best:
                    best = c
                    bestd = d
            d_int[u] = -1
            if bestd < 0:
                continue
            second = big
            for d in range(dmax_u + 1):
                if d < bestd - 1 or d > bestd + 1:
                    c = cost[d, u]
                    if c < second:
                        second = c
            if second != big:
                if second == 0 or np.float32(best) / np.float32(second) > uniq:
                    continue  # ambiguous winner
            sub = np.float32(bestd)
            if 0 < bestd < dmax_u:
                c0 = cost[bestd - 1, u]
                c1 = cost[bestd, u]
                c2 = cost[bestd + 1, u]
                den = np.float32(c0 - 2 * c1 + c2)
                if den > 0:
                    delta = np.float32(0.5) * np.float32(c0 - c2) / den
                    if delta > 0.5:
                        delta = np.float32(0.5)
                    elif delta < -0.5:
                        delta = np.float32(-0.5)
                    sub = np.float32(bestd) + delta
            d_int[u] = bestd
            d_sub[u] = sub

        # right-image winner reuses the same costs: cost_R(u', d) = cost(u'+d, d)
        for u2 in range(w):
            best = big
            bestd = -1
            if u2 >= r:
                dtop = min(d_max, w - 1 - r - u2)
                for d in range(dtop + 1):
                    c = cost[d, u2 + d]
                    if 0 <= c < best:
                        best = c
                        bestd = d
            d_right[u2] = bestd

        for u in range(r, w - r):
            dl = d_int[u]
            if dl < 0:
                continue
            u2 = u - dl
            dr = d_right[u2]
            if dr < 0 or (dl - dr > 1 or dr - dl > 1):
                continue  # fails left-right consistency
            disp[yc, u] = d_sub[u]

    return disp
