"""Binary checkpoints.

Layout (all integers little-endian):

    magic  b"VSTM"
    u32    format version
    4 sections, in order: config, vocab, params, optim
      u32 name length, name bytes,
      u64 payload length, payload bytes

The config and vocab payloads are canonical JSON (sorted keys, compact
separators). The params payload is a tensor block: u32 tensor count, then
per tensor its name, dtype string, shape, and raw C-order bytes. The optim
payload is the step count followed by two tensor blocks (first and second
moments). Canonical JSON plus fixed tensor order makes save -> load ->
save byte-identical.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import CheckpointCorruptError, CheckpointTruncatedError, CheckpointVersionError
from .ioutil import atomic_write_bytes
from .model import ModelConfig, StoryModel
from .text import Vocab
from .training import OptimState

MAGIC = b"VSTM"
VERSION = 1

_DTYPES = {"<f8": np.dtype("<f8"), "<f4": np.dtype("<f4")}


def _canon_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _pack_tensor_block(tensors: dict[str, np.ndarray]) -> bytes:
    parts = [struct.pack("<I", len(tensors))]
    for name, arr in tensors.items():
        dt = "<f8" if arr.dtype == np.float64 else "<f4"
        raw = np.ascontiguousarray(arr, dtype=_DTYPES[dt]).tobytes()
        name_b = name.encode("utf-8")
        dt_b = dt.encode("ascii")
        parts.append(struct.pack("<I", len(name_b)) + name_b)
        parts.append(struct.pack("<I", len(dt_b)) + dt_b)
        parts.append(struct.pack("<I", arr.ndim))
        for dim in arr.shape:
            parts.append(struct.pack("<Q", dim))
        parts.append(struct.pack("<Q", len(raw)) + raw)
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes, path: str):
        self.data = data
        self.off = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise CheckpointTruncatedError(
                f"{self.path}: needed {n} bytes at offset {self.off}, file ends at {len(self.data)}"
            )
        out = self.data[self.off : self.off + n]
        self.off += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    @property
    def exhausted(self) -> bool:
        return self.off == len(self.data)


def _unpack_tensor_block(r: _Reader) -> dict[str, np.ndarray]:
    count = r.u32()
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        name = r.take(r.u32()).decode("utf-8")
        dt = r.take(r.u32()).decode("ascii")
        if dt not in _DTYPES:
            raise CheckpointCorruptError(f"{r.path}: unknown tensor dtype {dt!r}")
        ndim = r.u32()
        shape = tuple(r.u64() for _ in range(ndim))
        raw = r.take(r.u64())
        arr = np.frombuffer(raw, dtype=_DTYPES[dt])
        expected = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if arr.size != expected:
            raise CheckpointCorruptError(
                f"{r.path}: tensor {name!r} has {arr.size} values, shape {shape} wants {expected}"
            )
        tensors[name] = arr.reshape(shape).copy()
    return tensors


def _pack_section(name: str, payload: bytes) -> bytes:
    name_b = name.encode("ascii")
    return struct.pack("<I", len(name_b)) + name_b + struct.pack("<Q", len(payload)) + payload


def _read_section(r: _Reader, expected: str) -> bytes:
    name = r.take(r.u32()).decode("utf-8", errors="replace")
    if name != expected:
        raise CheckpointCorruptError(f"{r.path}: expected section {expected!r}, found {name!r}")
    return r.take(r.u64())


def save_checkpoint(path: str, model: StoryModel, optim: OptimState, vocab: Vocab) -> None:
    config_payload = _canon_json(
        {
            "image_dim": model.config.image_dim,
            "embed_dim": model.config.embed_dim,
            "hidden_dim": model.config.hidden_dim,
            "vocab_size": model.config.vocab_size,
            "tie_embeddings": model.config.tie_embeddings,
            "carry_cell_state": model.config.carry_cell_state,
            "freeze_embeddings": model.config.freeze_embeddings,
            "precision": model.config.precision,
        }
    )
    vocab_payload = _canon_json(
        {
            "tokens": vocab.id_to_token,
            "counts": {tok: vocab.counts.get(tok, 0) for tok in vocab.id_to_token},
        }
    )
    params_payload = _pack_tensor_block(model.parameters())
    optim_payload = (
        struct.pack("<Q", optim.step) + _pack_tensor_block(optim.m) + _pack_tensor_block(optim.v)
    )
    blob = (
        MAGIC
        + struct.pack("<I", VERSION)
        + _pack_section("config", config_payload)
        + _pack_section("vocab", vocab_payload)
        + _pack_section("params", params_payload)
        + _pack_section("optim", optim_payload)
    )
    atomic_write_bytes(path, blob)


def _json_section(raw: bytes, path: str, name: str):
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointCorruptError(f"{path}: bad {name} JSON: {exc}") from None


def load_checkpoint(path: str) -> tuple[StoryModel, OptimState, Vocab]:
    with open(path, "rb") as f:
        data = f.read()
    r = _Reader(data, path)
    if r.take(4) != MAGIC:
        raise CheckpointCorruptError(f"{path}: bad magic, not a checkpoint")
    version = r.u32()
    if version != VERSION:
        raise CheckpointVersionError(f"{path}: format version {version}, this build reads {VERSION}")

    config_raw = _read_section(r, "config")
    vocab_raw = _read_section(r, "vocab")
    params_raw = _read_section(r, "params")
    optim_raw = _read_section(r, "optim")
    if not r.exhausted:
        raise CheckpointCorruptError(f"{path}: {len(data) - r.off} trailing bytes after last section")

    config_dict = _json_section(config_raw, path, "config")
    try:
        config = ModelConfig(**config_dict)
    except TypeError as exc:
        raise CheckpointCorruptError(f"{path}: bad config fields: {exc}") from None

    vocab_dict = _json_section(vocab_raw, path, "vocab")
    try:
        tokens = list(vocab_dict["tokens"])
        counts = dict(vocab_dict["counts"])
    except (KeyError, TypeError) as exc:
        raise CheckpointCorruptError(f"{path}: bad vocab payload: {exc}") from None
    vocab = Vocab(
        token_to_id={tok: i for i, tok in enumerate(tokens)},
        id_to_token=tokens,
        counts=counts,
    )
    if len(tokens) != config.vocab_size:
        raise CheckpointCorruptError(
            f"{path}: vocab has {len(tokens)} tokens but config says {config.vocab_size}"
        )

    pr = _Reader(params_raw, path)
    params = _unpack_tensor_block(pr)
    model = _model_from_params(config, params, path)

    orr = _Reader(optim_raw, path)
    step = orr.u64()
    optim = OptimState(step=step, m=_unpack_tensor_block(orr), v=_unpack_tensor_block(orr))
    expected_names = set(model.parameters())
    for label, tensors in (("m", optim.m), ("v", optim.v)):
        if set(tensors) != expected_names:
            raise CheckpointCorruptError(f"{path}: optimizer {label} tensors do not match parameters")
    return model, optim, vocab


def _model_from_params(config: ModelConfig, params: dict[str, np.ndarray], path: str) -> StoryModel:
    from .model import NUM_POSITIONS
    from .numerics import LstmParams

    def need(name: str) -> np.ndarray:
        if name not in params:
            raise CheckpointCorruptError(f"{path}: missing tensor {name!r}")
        return params[name]

    def lstm(prefix: str) -> LstmParams:
        return LstmParams(need(f"{prefix}.w_x"), need(f"{prefix}.w_h"), need(f"{prefix}.b"))

    encoder = lstm("encoder")
    decoders = [lstm(f"decoder{k}") for k in range(NUM_POSITIONS)]
    if config.tie_embeddings:
        embeddings = [need("embedding")]
    else:
        embeddings = [need(f"embedding{k}") for k in range(NUM_POSITIONS)]
    model = StoryModel(
        config=config,
        img_proj=need("img_proj"),
        encoder=encoder,
        decoders=decoders,
        embeddings=embeddings,
        head_w=[need(f"head{k}.w") for k in range(NUM_POSITIONS)],
        head_b=[need(f"head{k}.b") for k in range(NUM_POSITIONS)],
    )
    expected = set(model.parameters())
    extra = set(params) - expected
    if extra:
        raise CheckpointCorruptError(f"{path}: unexpected tensors {sorted(extra)}")
    for name, arr in model.parameters().items():
        if name == "img_proj" and arr.shape != (config.embed_dim, config.image_dim):
            raise CheckpointCorruptError(f"{path}: img_proj shape {arr.shape} does not match config")
    try:
        encoder.validate()
        for dec in decoders:
            dec.validate()
    except ValueError as exc:
        raise CheckpointCorruptError(f"{path}: {exc}") from None
    return model
