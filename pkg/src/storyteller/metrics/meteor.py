"""METEOR: two-stage unigram alignment with a fragmentation penalty.

Stage one matches words exactly; stage two matches the leftovers by
Porter stem. Because equal words always share a stem, the match count per
stem class is min(candidate count, reference count), and the staging only
constrains which occurrences pair up. The chunk count is then minimized
over all alignments realizing those per-class counts: exhaustively (with
branch-and-bound) for m <= 12 matches, greedily beyond.

Score = Fmean * (1 - penalty) with Fmean = 10PR / (R + 9P) and
penalty = 0.5 * (chunks / m)^3; multiple references take the max score.
"""

from __future__ import annotations

from collections import Counter, defaultdict

from .stemming import porter_stem

EXHAUSTIVE_MATCH_LIMIT = 12


def _stem_classes(tokens: list[str]) -> list[str]:
    return [porter_stem(t) for t in tokens]


def _alignment_chunks(pairs: list[tuple[int, int]]) -> int:
    """Number of maximal runs of pairs contiguous in both sentences."""
    chunks = 0
    prev = None
    for i, j in sorted(pairs):
        if prev is None or (i, j) != (prev[0] + 1, prev[1] + 1):
            chunks += 1
        prev = (i, j)
    return chunks


def _greedy_chunks(cand_cls: list[str], ref_positions: dict[str, list[int]], budget: Counter) -> int:
    budget = Counter(budget)
    used: set[int] = set()
    pairs: list[tuple[int, int]] = []
    prev_j = -2
    for i, cls in enumerate(cand_cls):
        if budget[cls] <= 0:
            continue
        options = [j for j in ref_positions.get(cls, []) if j not in used]
        if not options:
            continue
        j = prev_j + 1 if prev_j + 1 in options else options[0]
        used.add(j)
        budget[cls] -= 1
        pairs.append((i, j))
        prev_j = j
    return _alignment_chunks(pairs) if pairs else 0


def _min_chunks(cand_cls: list[str], ref_cls: list[str], budget: Counter, m: int) -> int:
    ref_positions: dict[str, list[int]] = defaultdict(list)
    for j, cls in enumerate(ref_cls):
        ref_positions[cls].append(j)

    best = _greedy_chunks(cand_cls, ref_positions, budget)
    if m > EXHAUSTIVE_MATCH_LIMIT or best <= 1:
        return best

    # occurrences of each class at or after each candidate position, for
    # deciding whether skipping an occurrence still leaves enough
    suffix_counts: list[Counter] = [Counter() for _ in range(len(cand_cls) + 1)]
    for i in range(len(cand_cls) - 1, -1, -1):
        suffix_counts[i] = Counter(suffix_counts[i + 1])
        suffix_counts[i][cand_cls[i]] += 1

    used = [False] * len(ref_cls)
    state = {"best": best}

    def dfs(i: int, remaining: Counter, matched: int, prev: tuple[int, int] | None, chunks: int):
        if chunks >= state["best"]:
            return
        if matched == m:
            state["best"] = chunks
            return
        if i == len(cand_cls):
            return
        cls = cand_cls[i]
        if remaining[cls] > 0:
            for j in ref_positions[cls]:
                if used[j]:
                    continue
                used[j] = True
                remaining[cls] -= 1
                grow = 0 if prev is not None and (i, j) == (prev[0] + 1, prev[1] + 1) else 1
                dfs(i + 1, remaining, matched + 1, (i, j), chunks + grow)
                remaining[cls] += 1
                used[j] = False
        # skip this occurrence when enough later ones remain for the class
        if suffix_counts[i + 1][cls] >= remaining[cls]:
            dfs(i + 1, remaining, matched, prev, chunks)

    dfs(0, Counter(budget), 0, None, 0)
    return state["best"]


def meteor_single(candidate: list[str], reference: list[str]) -> float:
    if not candidate or not reference:
        return 0.0
    cand_cls = _stem_classes(candidate)
    ref_cls = _stem_classes(reference)
    cand_counts = Counter(cand_cls)
    ref_counts = Counter(ref_cls)
    budget = Counter()
    for cls, count in cand_counts.items():
        matched = min(count, ref_counts.get(cls, 0))
        if matched:
            budget[cls] = matched
    m = sum(budget.values())
    if m == 0:
        return 0.0
    p = m / len(candidate)
    r = m / len(reference)
    fmean = 10 * p * r / (r + 9 * p)
    chunks = _min_chunks(cand_cls, ref_cls, budget, m)
    penalty = 0.5 * (chunks / m) ** 3
    return fmean * (1.0 - penalty)


def meteor(candidate: list[str], references: list[list[str]]) -> float:
    """Max sentence score over the references; no matches anywhere -> 0."""
    if not references:
        raise ValueError("no references")
    return max(meteor_single(candidate, ref) for ref in references)
