"""Independent brute-force oracles used by tests only."""

from __future__ import annotations


def optimal_bins(sizes, capacity) -> int:
    """Exact minimum bin count by subset DP; exponential, keep n small."""
    n = len(sizes)
    if n == 0:
        return 0
    total = 1 << n
    sums = [0.0] * total
    for mask in range(1, total):
        low = mask & (-mask)
        sums[mask] = sums[mask ^ low] + sizes[low.bit_length() - 1]
    fits = [sums[m] <= capacity + 1e-9 for m in range(total)]
    big = 10**9
    dp = [big] * total
    dp[0] = 0
    for mask in range(1, total):
        low = mask & (-mask)
        sub = mask
        best = big
        while sub:
            if (sub & low) and fits[sub]:
                cand = dp[mask ^ sub] + 1
                if cand < best:
                    best = cand
            sub = (sub - 1) & mask
        dp[mask] = best
    return dp[total - 1]
