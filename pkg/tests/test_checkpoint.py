"""Tests for the binary checkpoint format.

Round trips must be bitwise faithful (parameters, optimizer moments, vocab,
and generation behavior), a second save of a loaded checkpoint must be
byte-identical, and damaged files must fail loudly with the specific error
class for truncation, corruption, and version mismatch.
"""

import struct

import numpy as np
import pytest

from storyteller.checkpoint import (
    MAGIC,
    VERSION,
    _canon_json,
    _pack_section,
    _pack_tensor_block,
    load_checkpoint,
    save_checkpoint,
)
from storyteller.errors import (
    CheckpointCorruptError,
    CheckpointError,
    CheckpointTruncatedError,
    CheckpointVersionError,
)
from storyteller.model import (
    DecodeConfig,
    ImageEmbedding,
    ImageSequence,
    ModelConfig,
    StoryModel,
    generate_story,
)
from storyteller.text import build_vocab
from storyteller.training import OptimState, TrainConfig, adam_update


def _fixture(seed=0, **overrides):
    """Small trained-ish model: two Adam steps so moments are nonzero."""
    corpus = [["the", "dog", "ran"], ["the", "cat", "sat"]]
    vocab = build_vocab(corpus)
    cfg = ModelConfig(image_dim=3, embed_dim=4, hidden_dim=4, vocab_size=len(vocab), **overrides)
    model = StoryModel.init(cfg, seed=seed)
    optim = OptimState.for_model(model)
    rng = np.random.default_rng(seed + 1)
    for _ in range(2):
        grads = {n: rng.normal(size=p.shape) * 0.01 for n, p in model.parameters().items()}
        adam_update(model, grads, optim, TrainConfig())
    return model, optim, vocab


def _config_dict(config):
    return {
        "image_dim": config.image_dim,
        "embed_dim": config.embed_dim,
        "hidden_dim": config.hidden_dim,
        "vocab_size": config.vocab_size,
        "tie_embeddings": config.tie_embeddings,
        "carry_cell_state": config.carry_cell_state,
        "freeze_embeddings": config.freeze_embeddings,
        "precision": config.precision,
    }


def _craft(config_obj, vocab_tokens, params_payload, optim_payload):
    config_payload = _canon_json(config_obj)
    vocab_payload = _canon_json(
        {"tokens": vocab_tokens, "counts": {t: 1 for t in vocab_tokens}}
    )
    return (
        MAGIC
        + struct.pack("<I", VERSION)
        + _pack_section("config", config_payload)
        + _pack_section("vocab", vocab_payload)
        + _pack_section("params", params_payload)
        + _pack_section("optim", optim_payload)
    )


def test_round_trip_preserves_everything(tmp_path):
    model, optim, vocab = _fixture()
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, optim, vocab)
    loaded_model, loaded_optim, loaded_vocab = load_checkpoint(path)

    assert loaded_model.config == model.config
    for name, p in model.parameters().items():
        got = loaded_model.parameters()[name]
        assert got.dtype == p.dtype
        assert np.array_equal(got, p), name
    assert loaded_optim.step == optim.step
    for name in optim.m:
        assert np.array_equal(loaded_optim.m[name], optim.m[name]), name
        assert np.array_equal(loaded_optim.v[name], optim.v[name]), name
    assert loaded_vocab.id_to_token == vocab.id_to_token
    assert loaded_vocab.token_to_id == vocab.token_to_id
    assert loaded_vocab.counts == {t: vocab.counts.get(t, 0) for t in vocab.id_to_token}


def test_save_load_save_is_byte_identical(tmp_path):
    model, optim, vocab = _fixture(seed=3)
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(p1, model, optim, vocab)
    loaded = load_checkpoint(p1)
    save_checkpoint(p2, *loaded)
    assert p1.read_bytes() == p2.read_bytes()


def test_round_trip_preserves_generation(tmp_path):
    model, optim, vocab = _fixture(seed=4)
    rng = np.random.default_rng(5)
    seq = ImageSequence(
        [ImageEmbedding(f"p{k}", rng.normal(size=model.config.image_dim)) for k in range(5)]
    )
    cfg = DecodeConfig(max_len=8)
    before = generate_story(model, seq, cfg)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, optim, vocab)
    loaded_model, _, _ = load_checkpoint(path)
    after = generate_story(loaded_model, seq, cfg)
    assert after.segments == before.segments


def test_round_trip_untied_and_single_precision(tmp_path):
    model, optim, vocab = _fixture(seed=6, tie_embeddings=False, precision="single")
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, optim, vocab)
    loaded_model, _, _ = load_checkpoint(path)
    assert loaded_model.config.tie_embeddings is False
    assert len(loaded_model.embeddings) == 5
    for name, p in model.parameters().items():
        got = loaded_model.parameters()[name]
        assert got.dtype == np.float32
        assert np.array_equal(got, p), name


def test_truncated_files_raise_truncation_error(tmp_path):
    model, optim, vocab = _fixture(seed=7)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, optim, vocab)
    blob = path.read_bytes()
    for cut in (0, 3, 6, len(blob) // 3, len(blob) // 2, len(blob) - 1):
        (tmp_path / "cut.ckpt").write_bytes(blob[:cut])
        with pytest.raises(CheckpointTruncatedError):
            load_checkpoint(tmp_path / "cut.ckpt")


def test_bad_magic_raises_corrupt_error(tmp_path):
    model, optim, vocab = _fixture(seed=8)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, optim, vocab)
    blob = path.read_bytes()
    path.write_bytes(b"XXXX" + blob[4:])
    with pytest.raises(CheckpointCorruptError) as exc:
        load_checkpoint(path)
    assert "magic" in str(exc.value)


def test_future_version_raises_version_error(tmp_path):
    model, optim, vocab = _fixture(seed=9)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, optim, vocab)
    blob = path.read_bytes()
    path.write_bytes(blob[:4] + struct.pack("<I", VERSION + 1) + blob[8:])
    with pytest.raises(CheckpointVersionError):
        load_checkpoint(path)


def test_trailing_bytes_raise_corrupt_error(tmp_path):
    model, optim, vocab = _fixture(seed=10)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, optim, vocab)
    path.write_bytes(path.read_bytes() + b"junk")
    with pytest.raises(CheckpointCorruptError) as exc:
        load_checkpoint(path)
    assert "trailing" in str(exc.value)


def test_wrong_section_name_raises_corrupt_error(tmp_path):
    model, optim, vocab = _fixture(seed=11)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, optim, vocab)
    blob = path.read_bytes()
    assert blob.count(b"config") == 1
    path.write_bytes(blob.replace(b"config", b"conf1g"))
    with pytest.raises(CheckpointCorruptError) as exc:
        load_checkpoint(path)
    assert "config" in str(exc.value)


def test_tensor_size_mismatch_raises_corrupt_error(tmp_path):
    tokens = ["<pad>", "<bos>", "<eos>", "<unk>"]
    config = ModelConfig(image_dim=2, embed_dim=2, hidden_dim=2, vocab_size=4)
    name = b"img_proj"
    bad_tensor = (
        struct.pack("<I", 1)
        + struct.pack("<I", len(name))
        + name
        + struct.pack("<I", 3)
        + b"<f8"
        + struct.pack("<I", 2)
        + struct.pack("<Q", 2)
        + struct.pack("<Q", 2)
        + struct.pack("<Q", 24)
        + np.zeros(3).tobytes()  # declares 2x2 but carries 3 values
    )
    blob = _craft(_config_dict(config), tokens, bad_tensor, struct.pack("<Q", 0))
    path = tmp_path / "bad.ckpt"
    path.write_bytes(blob)
    with pytest.raises(CheckpointCorruptError) as exc:
        load_checkpoint(path)
    assert "img_proj" in str(exc.value)


def test_missing_and_extra_tensors_raise_corrupt_error(tmp_path):
    model, optim, vocab = _fixture(seed=12)
    base = _config_dict(model.config)
    tokens = vocab.id_to_token

    params = model.parameters()
    missing = {n: p for n, p in params.items() if n != "encoder.b"}
    blob = _craft(base, tokens, _pack_tensor_block(missing), struct.pack("<Q", 0))
    path = tmp_path / "missing.ckpt"
    path.write_bytes(blob)
    with pytest.raises(CheckpointCorruptError) as exc:
        load_checkpoint(path)
    assert "encoder.b" in str(exc.value)

    extra = dict(params)
    extra["bonus"] = np.zeros(2)
    blob = _craft(base, tokens, _pack_tensor_block(extra), struct.pack("<Q", 0))
    path = tmp_path / "extra.ckpt"
    path.write_bytes(blob)
    with pytest.raises(CheckpointCorruptError) as exc:
        load_checkpoint(path)
    assert "bonus" in str(exc.value)


def test_vocab_size_mismatch_raises_corrupt_error(tmp_path):
    model, optim, vocab = _fixture(seed=13)
    cfg = _config_dict(model.config)
    cfg["vocab_size"] = len(vocab) + 1
    blob = _craft(
        cfg, vocab.id_to_token, _pack_tensor_block(model.parameters()), struct.pack("<Q", 0)
    )
    path = tmp_path / "mismatch.ckpt"
    path.write_bytes(blob)
    with pytest.raises(CheckpointCorruptError) as exc:
        load_checkpoint(path)
    assert "vocab" in str(exc.value)


def test_optimizer_tensor_names_must_match(tmp_path):
    model, optim, vocab = _fixture(seed=14)
    m_missing = {n: t for n, t in optim.m.items() if n != "img_proj"}
    optim_payload = (
        struct.pack("<Q", optim.step)
        + _pack_tensor_block(m_missing)
        + _pack_tensor_block(optim.v)
    )
    blob = _craft(
        _config_dict(model.config),
        vocab.id_to_token,
        _pack_tensor_block(model.parameters()),
        optim_payload,
    )
    path = tmp_path / "optim.ckpt"
    path.write_bytes(blob)
    with pytest.raises(CheckpointCorruptError) as exc:
        load_checkpoint(path)
    assert "optimizer" in str(exc.value)


def test_bad_config_json_and_fields_raise_corrupt_error(tmp_path):
    model, optim, vocab = _fixture(seed=15)
    params_payload = _pack_tensor_block(model.parameters())

    blob = (
        MAGIC
        + struct.pack("<I", VERSION)
        + _pack_section("config", b"not json at all")
        + _pack_section("vocab", _canon_json({"tokens": [], "counts": {}}))
        + _pack_section("params", params_payload)
        + _pack_section("optim", struct.pack("<Q", 0))
    )
    path = tmp_path / "badjson.ckpt"
    path.write_bytes(blob)
    with pytest.raises(CheckpointCorruptError) as exc:
        load_checkpoint(path)
    assert "config" in str(exc.value)

    cfg = _config_dict(model.config)
    cfg["surprise"] = 1
    blob = _craft(cfg, vocab.id_to_token, params_payload, struct.pack("<Q", 0))
    path.write_bytes(blob)
    with pytest.raises(CheckpointCorruptError):
        load_checkpoint(path)


def test_error_classes_share_a_base():
    for cls in (CheckpointCorruptError, CheckpointTruncatedError, CheckpointVersionError):
        assert issubclass(cls, CheckpointError)
