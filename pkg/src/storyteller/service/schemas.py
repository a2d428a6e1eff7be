"""Wire schemas for the rating service.

TaskPayload deliberately has no source field: responses pass through this
model, so the model|human tag can never leak to a rater even if a handler
tried to include it.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict

ASPECTS: list[tuple[str, str]] = [
    ("a", "the story is focused"),
    ("b", "the story has good structure and coherence"),
    ("c", "would you share this story"),
    ("d", "do you think this story was written by a human"),
    ("e", "the story is visually grounded"),
    ("f", "the story is detailed"),
]
ASPECT_KEYS = [key for key, _ in ASPECTS]
SCORE_MIN = 1
SCORE_MAX = 5


class AspectLabel(BaseModel):
    key: str
    label: str


class TaskPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task_id: str
    story_id: str
    segments: list[str]
    aspects: list[AspectLabel] = [AspectLabel(key=k, label=t) for k, t in ASPECTS]


class ExhaustedPayload(BaseModel):
    exhausted: Literal[True] = True
    reason: str


class RatingSubmission(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task_id: str
    rater_id: str
    scores: dict[str, int]


class RatingAck(BaseModel):
    status: Literal["ok"] = "ok"
    task_id: str
    rater_id: str


class SourceAggregate(BaseModel):
    label: str
    aspect_means: dict[str, float]
    total: float
    count: int


class AggregatePayload(BaseModel):
    empty: bool
    sources: dict[str, SourceAggregate]
    rendered: str


class HealthPayload(BaseModel):
    status: Literal["ok"] = "ok"
    tasks: int
    ratings: int
