"""Automatic evaluation metrics: BLEU-1..4, METEOR, ROUGE-L, CIDEr.

All four are implemented from first principles on tokenized text and are
deterministic. Scores live in [0, 1] except CIDEr, which is scaled into
[0, 10].
"""

from .bleu import bleu
from .cider import cider, cider_per_story
from .meteor import meteor
from .report import EvalPair, MetricReport, evaluate_corpus, render_table, render_table_row
from .rouge import rouge_l
from .stemming import porter_stem

__all__ = [
    "EvalPair",
    "MetricReport",
    "bleu",
    "cider",
    "cider_per_story",
    "evaluate_corpus",
    "meteor",
    "porter_stem",
    "render_table",
    "render_table_row",
    "rouge_l",
]
