"""Task pool, rating log, and aggregation for the rating service.

Ratings are appended to a line-delimited JSON log and fsynced before the
submitter sees an ack, so every acked rating survives a crash. On
startup the log is replayed to rebuild in-memory state. Task selection
balances per-task rating counts and prefers alternating the source tag
served to each rater; the source tag itself never leaves this module un-
aggregated.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from collections import Counter
from dataclasses import dataclass, field

from ..errors import DataError
from .schemas import ASPECT_KEYS, SCORE_MAX, SCORE_MIN

SOURCE_LABELS = {"model": "Ours", "human": "Human"}


class PoolEmptyError(Exception):
    """No tasks loaded at all."""


class UnknownTaskError(Exception):
    pass


class ConflictError(Exception):
    """(task, rater) already rated with different scores."""


@dataclass
class RatingTask:
    task_id: str
    story_id: str
    source: str
    segments: list[str]


@dataclass
class Exhausted:
    reason: str


def _load_story_texts(path: str) -> list[tuple[str, list[str]]]:
    """Read story_id + texts from any line-delimited JSON story file."""
    out: list[tuple[str, list[str]]] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: bad JSON: {exc.msg}", line=line_no) from None
            if "story_id" not in obj or "texts" not in obj:
                raise DataError(f"{path}: record needs story_id and texts", line=line_no)
            sid = str(obj["story_id"])
            texts = obj["texts"]
            if not isinstance(texts, list) or len(texts) != 5:
                raise DataError(f"{path}: story {sid!r} needs exactly 5 texts", line=line_no)
            if sid in seen:
                raise DataError(f"{path}: duplicate story id {sid!r}", line=line_no)
            seen.add(sid)
            out.append((sid, [str(t) for t in texts]))
    return out


def _task_id(source: str, story_id: str) -> str:
    """Opaque, deterministic task id.

    The id appears in the rater-facing payload, so it must not encode the
    source; a digest keeps it stable across restarts without revealing it.
    """
    digest = hashlib.sha256(f"{source}:{story_id}".encode("utf-8")).hexdigest()
    return f"t{digest[:12]}"


def load_task_pool(candidates_path: str, humans_path: str) -> list[RatingTask]:
    pool = [
        RatingTask(_task_id("model", sid), sid, "model", texts)
        for sid, texts in _load_story_texts(candidates_path)
    ]
    pool.extend(
        RatingTask(_task_id("human", sid), sid, "human", texts)
        for sid, texts in _load_story_texts(humans_path)
    )
    return pool


def validate_scores(scores: dict[str, int]) -> None:
    """Exactly aspects a..f, each an integer 1..5; messages name the aspect."""
    if sorted(scores) != ASPECT_KEYS:
        raise ValueError(
            f"scores must cover aspects {', '.join(ASPECT_KEYS)} exactly, got {sorted(scores)}"
        )
    for key in ASPECT_KEYS:
        value = scores[key]
        if not isinstance(value, int) or isinstance(value, bool) or not SCORE_MIN <= value <= SCORE_MAX:
            raise ValueError(
                f"aspect {key}: score must be an integer in {SCORE_MIN}..{SCORE_MAX}, got {value!r}"
            )


@dataclass
class RatingStore:
    pool: list[RatingTask]
    log_path: str
    raters_per_story: int = 3
    tasks: dict[str, RatingTask] = field(init=False)
    ratings: dict[tuple[str, str], dict[str, int]] = field(init=False, default_factory=dict)
    counts: Counter = field(init=False, default_factory=Counter)
    last_source: dict[str, str] = field(init=False, default_factory=dict)
    _lock: threading.Lock = field(init=False, default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        self.tasks = {}
        for task in self.pool:
            if task.task_id in self.tasks:
                raise DataError(f"duplicate task id {task.task_id!r}")
            self.tasks[task.task_id] = task
        self._replay_log()

    def _replay_log(self) -> None:
        if not os.path.exists(self.log_path):
            return
        with open(self.log_path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    task_id = obj["task_id"]
                    rater_id = obj["rater_id"]
                    scores = {k: int(v) for k, v in obj["scores"].items()}
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise DataError(f"{self.log_path}: bad rating record: {exc}", line=line_no) from None
                if task_id not in self.tasks:
                    raise DataError(
                        f"{self.log_path}: rating for unknown task {task_id!r}", line=line_no
                    )
                validate_scores(scores)
                self.ratings[(task_id, rater_id)] = scores
                self.counts[task_id] += 1

    def next_task(self, rater_id: str) -> RatingTask | Exhausted:
        with self._lock:
            if not self.tasks:
                raise PoolEmptyError("no tasks loaded")
            last = self.last_source.get(rater_id)
            best = None
            best_key = None
            rated_by_rater = 0
            for index, task in enumerate(self.pool):
                if (task.task_id, rater_id) in self.ratings:
                    rated_by_rater += 1
                    continue
                if self.counts[task.task_id] >= self.raters_per_story:
                    continue
                key = (
                    self.counts[task.task_id],
                    1 if task.source == last else 0,
                    index,
                )
                if best_key is None or key < best_key:
                    best, best_key = task, key
            if best is None:
                reason = "rater_complete" if rated_by_rater == len(self.pool) else "pool_complete"
                return Exhausted(reason)
            self.last_source[rater_id] = best.source
            return best

    def submit(self, task_id: str, rater_id: str, scores: dict[str, int]) -> None:
        validate_scores(scores)
        with self._lock:
            if task_id not in self.tasks:
                raise UnknownTaskError(f"unknown task {task_id!r}")
            existing = self.ratings.get((task_id, rater_id))
            if existing is not None:
                if existing == scores:
                    return  # identical resubmission: same ack, store unchanged
                raise ConflictError(
                    f"task {task_id!r} already rated by {rater_id!r} with different scores"
                )
            record = {
                "task_id": task_id,
                "rater_id": rater_id,
                "scores": {k: scores[k] for k in ASPECT_KEYS},
                "timestamp": time.time(),
            }
            with open(self.log_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(record, sort_keys=True) + "\n")
                f.flush()
                os.fsync(f.fileno())
            self.ratings[(task_id, rater_id)] = dict(scores)
            self.counts[task_id] += 1

    def rating_count(self) -> int:
        with self._lock:
            return len(self.ratings)

    def aggregate(self) -> tuple[bool, dict[str, dict]]:
        """Per-source aspect means and totals from unrounded sums.

        Returns (empty, {source: {label, aspect_means, total, count}}).
        """
        with self._lock:
            per_source: dict[str, list[dict[str, int]]] = {}
            for (task_id, _), scores in self.ratings.items():
                source = self.tasks[task_id].source
                per_source.setdefault(source, []).append(scores)
        if not per_source:
            return True, {}
        out: dict[str, dict] = {}
        for source in ("model", "human"):
            rows = per_source.get(source)
            if not rows:
                continue
            means = {
                k: sum(r[k] for r in rows) / len(rows) for k in ASPECT_KEYS
            }
            out[source] = {
                "label": SOURCE_LABELS[source],
                "aspect_means": means,
                "total": sum(means.values()),
                "count": len(rows),
            }
        return False, out


def render_report(sources: dict[str, dict]) -> str:
    """Table layout: one column per aspect plus the total, one row per
    source, three decimal places."""
    header = "Method | " + " | ".join(f"{k})" for k in ASPECT_KEYS) + " | Total score"
    lines = [header]
    for source in ("model", "human"):
        if source not in sources:
            continue
        row = sources[source]
        cells = [f"{row['aspect_means'][k]:.3f}" for k in ASPECT_KEYS]
        lines.append(f"{row['label']} | " + " | ".join(cells) + f" | {row['total']:.3f}")
    return "\n".join(lines)
