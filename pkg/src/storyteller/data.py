"""Dataset ingestion and the synthetic desk-scale dataset generator.

Stories live in line-delimited JSON. Two record shapes are accepted:
whole stories {story_id, photos: [5 ids], texts: [5 strings], split} and
per-image annotation rows {story_id, photo_id, text, position, split}
which are grouped by story id and ordered by position 1..5. Image
embeddings use a compact binary format so round trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .ioutil import atomic_write_bytes
from .model import NUM_POSITIONS, ImageEmbedding, ImageSequence

VEMB_MAGIC = b"VEMB"
VEMB_VERSION = 1


@dataclass
class StoryRecord:
    """One story: 5 photo ids and 5 reference segments in narrative order."""

    story_id: str
    photos: list[str]
    texts: list[str]
    split: str

    def validate(self) -> None:
        if len(self.photos) != NUM_POSITIONS or len(self.texts) != NUM_POSITIONS:
            raise ValueError(
                f"story {self.story_id}: {len(self.photos)} photos / {len(self.texts)} texts, "
                f"need {NUM_POSITIONS} of each"
            )


@dataclass
class LoadResult:
    """Loaded records plus kept/dropped accounting."""

    records: list[StoryRecord]
    kept: int
    dropped: int
    warnings: list[str] = field(default_factory=list)


def _require(obj: dict, key: str, line_no: int):
    if key not in obj:
        raise DataError(f"missing field {key!r}", line=line_no)
    return obj[key]


def load_stories(path: str) -> LoadResult:
    """Parse a stories file, accepting both record shapes.

    Incomplete stories (fewer or more than 5 images) are dropped with a
    warning and counted; structural problems (bad JSON, missing fields,
    bad position, duplicate story or position) raise DataError with the
    offending line number.
    """
    whole: dict[str, StoryRecord] = {}
    grouped: dict[str, dict] = {}
    order: list[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"bad JSON: {exc.msg}", line=line_no) from None
            if not isinstance(obj, dict):
                raise DataError("record is not a JSON object", line=line_no)
            sid = str(_require(obj, "story_id", line_no))
            if "photos" in obj or "texts" in obj:
                photos = _require(obj, "photos", line_no)
                texts = _require(obj, "texts", line_no)
                split = str(_require(obj, "split", line_no))
                if not isinstance(photos, list) or not isinstance(texts, list):
                    raise DataError("photos and texts must be arrays", line=line_no)
                if sid in whole or sid in grouped:
                    raise DataError(f"duplicate story id {sid!r}", line=line_no)
                whole[sid] = StoryRecord(sid, [str(p) for p in photos], [str(t) for t in texts], split)
                order.append(sid)
            else:
                photo = str(_require(obj, "photo_id", line_no))
                text = str(_require(obj, "text", line_no))
                position = _require(obj, "position", line_no)
                split = str(_require(obj, "split", line_no))
                if not isinstance(position, int) or not 1 <= position <= NUM_POSITIONS:
                    raise DataError(
                        f"position must be an integer in 1..{NUM_POSITIONS}, got {position!r}",
                        line=line_no,
                    )
                if sid in whole:
                    raise DataError(f"duplicate story id {sid!r}", line=line_no)
                if sid not in grouped:
                    grouped[sid] = {"split": split, "slots": {}}
                    order.append(sid)
                slots = grouped[sid]["slots"]
                if position in slots:
                    raise DataError(f"duplicate position {position} for story {sid!r}", line=line_no)
                if grouped[sid]["split"] != split:
                    raise DataError(f"conflicting split for story {sid!r}", line=line_no)
                slots[position] = (photo, text)

    records: list[StoryRecord] = []
    dropped = 0
    warnings: list[str] = []
    for sid in order:
        if sid in whole:
            rec = whole[sid]
            if len(rec.photos) != NUM_POSITIONS or len(rec.texts) != NUM_POSITIONS:
                dropped += 1
                warnings.append(f"story {sid!r}: {len(rec.photos)} images, need {NUM_POSITIONS}; dropped")
                continue
            records.append(rec)
        else:
            slots = grouped[sid]["slots"]
            if len(slots) != NUM_POSITIONS:
                dropped += 1
                warnings.append(f"story {sid!r}: {len(slots)} images, need {NUM_POSITIONS}; dropped")
                continue
            photos = [slots[p][0] for p in range(1, NUM_POSITIONS + 1)]
            texts = [slots[p][1] for p in range(1, NUM_POSITIONS + 1)]
            records.append(StoryRecord(sid, photos, texts, grouped[sid]["split"]))
    return LoadResult(records, kept=len(records), dropped=dropped, warnings=warnings)


def save_stories(path: str, records: list[StoryRecord]) -> None:
    """Write whole-story records, one JSON object per line, atomically."""
    lines = []
    for rec in records:
        rec.validate()
        lines.append(
            json.dumps(
                {"story_id": rec.story_id, "photos": rec.photos, "texts": rec.texts, "split": rec.split},
                sort_keys=True,
            )
        )
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8") if lines else b"")


@dataclass
class EmbeddingStore:
    """photo id -> embedding vector map with a uniform dimension."""

    image_dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def add(self, photo_id: str, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype=np.float32)
        if vec.shape != (self.image_dim,):
            raise DataError(
                f"embedding for {photo_id!r} has dim {vec.shape}, store expects ({self.image_dim},)"
            )
        if photo_id in self.vectors:
            raise DataError(f"duplicate photo id {photo_id!r}")
        self.vectors[photo_id] = vec

    def get(self, photo_id: str) -> ImageEmbedding:
        if photo_id not in self.vectors:
            raise DataError(f"missing embedding for photo {photo_id!r}")
        return ImageEmbedding(photo_id, self.vectors[photo_id])

    def __len__(self) -> int:
        return len(self.vectors)


def save_embeddings(path: str, store: EmbeddingStore) -> None:
    parts = [VEMB_MAGIC, struct.pack("<III", VEMB_VERSION, len(store.vectors), store.image_dim)]
    for photo_id, vec in store.vectors.items():
        id_bytes = photo_id.encode("utf-8")
        parts.append(struct.pack("<I", len(id_bytes)))
        parts.append(id_bytes)
        parts.append(np.ascontiguousarray(vec, dtype="<f4").tobytes())
    atomic_write_bytes(path, b"".join(parts))


def load_embeddings(path: str) -> EmbeddingStore:
    """Read a binary embedding file; truncation, duplicates, and trailing
    bytes all fail loudly."""
    with open(path, "rb") as f:
        data = f.read()
    off = 0

    def take(n: int, what: str) -> bytes:
        nonlocal off
        if off + n > len(data):
            raise DataError(f"{path}: truncated while reading {what}")
        chunk = data[off : off + n]
        off += n
        return chunk

    if take(4, "magic") != VEMB_MAGIC:
        raise DataError(f"{path}: not an embedding file (bad magic)")
    version, count, image_dim = struct.unpack("<III", take(12, "header"))
    if version != VEMB_VERSION:
        raise DataError(f"{path}: embedding format version {version}, expected {VEMB_VERSION}")
    if image_dim == 0:
        raise DataError(f"{path}: zero image_dim")
    store = EmbeddingStore(image_dim=image_dim)
    for i in range(count):
        (id_len,) = struct.unpack("<I", take(4, f"entry {i} id length"))
        photo_id = take(id_len, f"entry {i} id").decode("utf-8")
        raw = take(4 * image_dim, f"entry {i} vector")
        store.add(photo_id, np.frombuffer(raw, dtype="<f4").copy())
    if off != len(data):
        raise DataError(f"{path}: {len(data) - off} trailing bytes after {count} entries")
    return store


def sequence_for(record: StoryRecord, store: EmbeddingStore) -> ImageSequence:
    """Join one story against the embedding store; misses fail loudly."""
    record.validate()
    return ImageSequence([store.get(p) for p in record.photos])


def check_join(records: list[StoryRecord], store: EmbeddingStore) -> None:
    """Verify every photo id resolves before any training starts."""
    missing = sorted(
        {p for rec in records for p in rec.photos if p not in store.vectors}
    )
    if missing:
        shown = ", ".join(repr(p) for p in missing[:10])
        more = f" (and {len(missing) - 10} more)" if len(missing) > 10 else ""
        raise DataError(f"missing embeddings for photos: {shown}{more}")


OPENER_MARKER = "once"
CLOSER_MARKER = "finally"


@dataclass
class SynthVocab:
    subjects: list[str] = field(
        default_factory=lambda: ["dog", "cat", "girl", "boy", "bird", "family", "team", "crowd"]
    )
    verbs: list[str] = field(
        default_factory=lambda: ["walked", "played", "smiled", "rested", "laughed", "danced", "waited", "sang"]
    )
    places: list[str] = field(
        default_factory=lambda: ["park", "beach", "house", "lake", "garden", "market", "museum", "trail"]
    )


def synth_dataset(
    seed: int,
    n_stories: int,
    vocab_spec: SynthVocab | None = None,
    image_dim: int = 16,
    split: str = "train",
    id_prefix: str = "synth",
) -> tuple[list[StoryRecord], EmbeddingStore]:
    """Deterministic toy dataset for desk-scale experiments.

    Photo embeddings are seeded unit-norm vectors. Texts follow a
    position-dependent template grammar: position 1 always opens with the
    opener marker and position 5 with the closer marker, so segment
    position is statistically identifiable from the text alone.
    """
    if n_stories < 1:
        raise ValueError("n_stories must be >= 1")
    vs = vocab_spec or SynthVocab()
    rng = np.random.default_rng(seed)
    records: list[StoryRecord] = []
    store = EmbeddingStore(image_dim=image_dim)

    def pick(pool: list[str]) -> str:
        return pool[int(rng.integers(len(pool)))]

    for i in range(n_stories):
        sid = f"{id_prefix}-{seed}-{i:04d}"
        photos = [f"{sid}-p{pos}" for pos in range(1, NUM_POSITIONS + 1)]
        for pid in photos:
            vec = rng.standard_normal(image_dim)
            store.add(pid, (vec / np.linalg.norm(vec)).astype(np.float32))
        s, v, p = pick(vs.subjects), pick(vs.verbs), pick(vs.places)
        s2, v2, p2 = pick(vs.subjects), pick(vs.verbs), pick(vs.places)
        texts = [
            f"{OPENER_MARKER} the {s} went to the {p}",
            f"then the {s} {v} by the {p2}",
            f"later the {s2} {v2} with the {s}",
            f"next the {s2} {v} at the {p}",
            f"{CLOSER_MARKER} the {s} {v2} home",
        ]
        records.append(StoryRecord(sid, photos, texts, split))
    return records, store
