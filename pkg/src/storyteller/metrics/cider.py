"""CIDEr: consensus scoring via TF-IDF weighted n-gram cosine similarity.

Document frequencies come from the reference sets: df(g) is the number of
stories whose references contain g, and idf = log(N / max(df, 1)) with N
the corpus size. TF is the n-gram count normalized by the sentence's
total n-gram count of that order. The per-story score is 10 times the
mean over n = 1..4 of the candidate-reference cosine averaged over that
story's references; 0/0 cosines count as 0. A corpus of at least two
stories is required, since idf carries no information otherwise.
"""

from __future__ import annotations

import math
from collections import Counter

from .bleu import ngram_counts

N_MAX = 4


def _tf_idf_vector(tokens: list[str], n: int, idf: dict[tuple, float]) -> dict[tuple, float]:
    counts = ngram_counts(tokens, n)
    total = sum(counts.values())
    if total == 0:
        return {}
    return {g: (c / total) * idf.get(g, idf["__default__"]) for g, c in counts.items()}


def _cosine(a: dict[tuple, float], b: dict[tuple, float]) -> float:
    dot = sum(v * b[g] for g, v in a.items() if g in b)
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def _idf_tables(all_references: list[list[list[str]]]) -> list[dict[tuple, float]]:
    n_docs = len(all_references)
    tables = []
    for n in range(1, N_MAX + 1):
        df = Counter()
        for refs in all_references:
            seen = set()
            for ref in refs:
                seen.update(ngram_counts(ref, n).keys())
            for g in seen:
                df[g] += 1
        table = {g: math.log(n_docs / max(count, 1)) for g, count in df.items()}
        # n-grams never seen in any reference set
        table["__default__"] = math.log(n_docs / 1.0)
        tables.append(table)
    return tables


def cider_per_story(pairs: list[tuple[list[str], list[list[str]]]]) -> list[float]:
    """Per-story CIDEr scores in [0, 10], in input order."""
    if len(pairs) < 2:
        raise ValueError("CIDEr needs a corpus of at least 2 stories for idf")
    for _, refs in pairs:
        if not refs:
            raise ValueError("pair without references")
    idf_tables = _idf_tables([refs for _, refs in pairs])
    scores = []
    for cand, refs in pairs:
        sim_sum = 0.0
        for n in range(1, N_MAX + 1):
            idf = idf_tables[n - 1]
            cand_vec = _tf_idf_vector(cand, n, idf)
            ref_sims = [_cosine(cand_vec, _tf_idf_vector(ref, n, idf)) for ref in refs]
            sim_sum += sum(ref_sims) / len(ref_sims)
        scores.append(10.0 * sim_sum / N_MAX)
    return scores


def cider(pairs: list[tuple[list[str], list[list[str]]]]) -> float:
    """Mean per-story CIDEr over the corpus."""
    scores = cider_per_story(pairs)
    return sum(scores) / len(scores)
