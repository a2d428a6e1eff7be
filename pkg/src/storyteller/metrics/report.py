"""Corpus evaluation report with the column order BLEU-1..4, METEOR,
ROUGE, CIDEr."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..text import tokenize
from .bleu import bleu
from .cider import cider_per_story
from .meteor import meteor
from .rouge import rouge_l

COLUMNS = ["BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "METEOR", "ROUGE", "CIDEr"]


@dataclass
class EvalPair:
    """One candidate story text with its reference story texts."""

    story_id: str
    candidate: str
    references: list[str]

    def __post_init__(self):
        if not self.references:
            raise ValueError(f"story {self.story_id}: at least one reference required")
        for ref in self.references:
            if not tokenize(ref):
                raise ValueError(f"story {self.story_id}: empty reference text")


@dataclass
class MetricReport:
    """Corpus scores in [0, 1] (CIDEr in [0, 10]) plus per-story detail."""

    bleu: list[float]
    meteor: float
    rouge_l: float
    cider: float
    per_story: list[dict] = field(default_factory=list)

    def column_values(self) -> list[float]:
        return [*self.bleu, self.meteor, self.rouge_l, self.cider]

    def to_dict(self) -> dict:
        return {
            "bleu": list(self.bleu),
            "meteor": self.meteor,
            "rouge_l": self.rouge_l,
            "cider": self.cider,
            "per_story": [dict(row) for row in self.per_story],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            bleu=list(d["bleu"]),
            meteor=d["meteor"],
            rouge_l=d["rouge_l"],
            cider=d["cider"],
            per_story=[dict(row) for row in d.get("per_story", [])],
        )

    @classmethod
    def from_json(cls, raw: str) -> "MetricReport":
        return cls.from_dict(json.loads(raw))


def evaluate_corpus(pairs: list[EvalPair]) -> MetricReport:
    """Run all four metrics over the corpus.

    BLEU is corpus-level; METEOR and ROUGE-L are per-story means; CIDEr
    needs at least two stories (its error propagates).
    """
    if not pairs:
        raise ValueError("empty corpus")
    tokenized = [(tokenize(p.candidate), [tokenize(r) for r in p.references]) for p in pairs]
    bleu_scores = bleu(tokenized, 4)
    meteors = [meteor(c, refs) for c, refs in tokenized]
    rouges = [rouge_l(c, refs) for c, refs in tokenized]
    ciders = cider_per_story(tokenized)
    per_story = [
        {"story_id": p.story_id, "meteor": m, "rouge_l": r, "cider": cd}
        for p, m, r, cd in zip(pairs, meteors, rouges, ciders)
    ]
    n = len(pairs)
    return MetricReport(
        bleu=bleu_scores,
        meteor=sum(meteors) / n,
        rouge_l=sum(rouges) / n,
        cider=sum(ciders) / n,
        per_story=per_story,
    )


def render_table_row(report: MetricReport, scale: str = "percent") -> str:
    """One pipe-separated row; percent scale multiplies every column by
    100 with one decimal, fraction scale prints four decimals."""
    values = report.column_values()
    if scale == "percent":
        return " | ".join(f"{v * 100:.1f}" for v in values)
    if scale == "fraction":
        return " | ".join(f"{v:.4f}" for v in values)
    raise ValueError(f"unknown scale {scale!r}")


def render_table(report: MetricReport, scale: str = "percent") -> str:
    return " | ".join(COLUMNS) + "\n" + render_table_row(report, scale)
