"""Corpus-level BLEU with clipped modified n-gram precision.

No smoothing: a zero precision at any order zeroes the score for that
order and above. The brevity penalty uses closest-length reference
matching with ties going to the shorter reference.
"""

from __future__ import annotations

import math
from collections import Counter


def ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(pairs: list[tuple[list[str], list[list[str]]]], n_max: int = 4) -> list[float]:
    """BLEU-1..n_max over (candidate tokens, reference token lists) pairs.

    Returns one score per order; BLEU-n uses the geometric mean of the
    clipped precisions p_1..p_n times the shared brevity penalty.
    """
    if not 1 <= n_max <= 4:
        raise ValueError(f"n_max must be in 1..4, got {n_max}")
    if not pairs:
        raise ValueError("empty corpus")
    for _, refs in pairs:
        if not refs:
            raise ValueError("pair without references")

    numer = [0] * n_max
    denom = [0] * n_max
    cand_len = 0
    ref_len = 0
    for cand, refs in pairs:
        cand_len += len(cand)
        # closest reference length, ties to the shorter
        ref_len += min((abs(len(r) - len(cand)), len(r)) for r in refs)[1]
        for n in range(1, n_max + 1):
            counts = ngram_counts(cand, n)
            if not counts:
                continue
            max_ref = Counter()
            for ref in refs:
                for gram, count in ngram_counts(ref, n).items():
                    if count > max_ref[gram]:
                        max_ref[gram] = count
            numer[n - 1] += sum(min(c, max_ref[g]) for g, c in counts.items())
            denom[n - 1] += sum(counts.values())

    if cand_len == 0:
        return [0.0] * n_max
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    precisions = [
        (numer[i] / denom[i]) if denom[i] > 0 else 0.0 for i in range(n_max)
    ]
    scores = []
    for n in range(1, n_max + 1):
        if any(p == 0.0 for p in precisions[:n]):
            scores.append(0.0)
            continue
        log_mean = sum(math.log(p) for p in precisions[:n]) / n
        scores.append(bp * math.exp(log_mean))
    return scores
