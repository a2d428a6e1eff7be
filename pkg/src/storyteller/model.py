"""The storyteller architecture.

An encoder LSTM reads the 5 projected image embeddings in narrative order
and its final (h, c) state becomes the sequence's context vector. Five
position-specific decoder LSTMs each start from that context, consume their
own projected image embedding as the first input, then feed back word
embeddings of emitted (or teacher-forced) tokens. The story is the ordered
concatenation of the five decoded segments.

A single shared linear projection maps image embeddings into the word
embedding space so images act as pseudo-words at the decoder input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import text as text_mod
from .numerics import (
    LstmParams,
    LstmState,
    init_lstm_params,
    lstm_cell_backward,
    lstm_cell_forward,
    softmax_cross_entropy,
)

NUM_POSITIONS = 5


@dataclass
class ImageEmbedding:
    """Precomputed feature vector for one photo (2048-d for Inception V3)."""

    photo_id: str
    vector: np.ndarray


@dataclass
class ImageSequence:
    """Exactly 5 image embeddings in narrative order."""

    images: list[ImageEmbedding]

    def __post_init__(self):
        if len(self.images) != NUM_POSITIONS:
            raise ValueError(f"expected {NUM_POSITIONS} images, got {len(self.images)}")
        dims = {img.vector.shape for img in self.images}
        if len(dims) != 1:
            raise ValueError(f"inconsistent image dims in sequence: {sorted(dims)}")


@dataclass
class ContextVector:
    """Encoder final hidden and cell state, both (hidden_dim,)."""

    h: np.ndarray
    c: np.ndarray


@dataclass
class Story:
    """Five ordered token-id segments; generated ones end with <eos> unless
    they hit the length budget."""

    segments: list[list[int]]

    def concatenated_ids(self) -> list[int]:
        return [tok for seg in self.segments for tok in seg]

    def segment_texts(self, vocab: text_mod.Vocab) -> list[str]:
        out = []
        for seg in self.segments:
            words = [vocab.token_of(t) for t in seg if t not in (text_mod.PAD, text_mod.BOS, text_mod.EOS)]
            out.append(text_mod.detokenize(words))
        return out

    def text(self, vocab: text_mod.Vocab) -> str:
        return " ".join(t for t in self.segment_texts(vocab) if t)


@dataclass
class ModelConfig:
    image_dim: int
    embed_dim: int
    hidden_dim: int
    vocab_size: int
    tie_embeddings: bool = True
    # Copy both h and c from the encoder into each decoder's initial state.
    # False starts the cell state at zero (hidden-only ablation).
    carry_cell_state: bool = True
    freeze_embeddings: bool = False
    precision: str = "double"

    @property
    def dtype(self):
        if self.precision == "double":
            return np.float64
        if self.precision == "single":
            return np.float32
        raise ValueError(f"unknown precision {self.precision!r}")


@dataclass
class DecodeConfig:
    max_len: int = 30
    beam_width: int = 1


@dataclass
class StoryModel:
    """All trainable parameters.

    img_proj (embed_dim, image_dim) is shared by the encoder and all
    decoders; each of the 5 decoders has its own LSTM and output head.
    The word-embedding table is shared across decoders unless
    tie_embeddings is off, in which case there are five.
    """

    config: ModelConfig
    img_proj: np.ndarray
    encoder: LstmParams
    decoders: list[LstmParams]
    embeddings: list[np.ndarray]
    head_w: list[np.ndarray]
    head_b: list[np.ndarray]
    extras: dict = field(default_factory=dict)

    @classmethod
    def init(cls, config: ModelConfig, seed: int = 0, embedding_init: np.ndarray | None = None) -> "StoryModel":
        """Seeded uniform init with scale 1/sqrt(hidden_dim); forget biases 1.

        embedding_init, when given (e.g. from skip-gram), seeds the word
        table instead of random values.
        """
        rng = np.random.default_rng(seed)
        dt = config.dtype
        s = 1.0 / np.sqrt(config.hidden_dim)
        img_proj = rng.uniform(-s, s, size=(config.embed_dim, config.image_dim)).astype(dt)
        encoder = init_lstm_params(config.embed_dim, config.hidden_dim, rng, dtype=dt)
        decoders = [
            init_lstm_params(config.embed_dim, config.hidden_dim, rng, dtype=dt)
            for _ in range(NUM_POSITIONS)
        ]
        n_tables = 1 if config.tie_embeddings else NUM_POSITIONS
        if embedding_init is not None:
            if embedding_init.shape != (config.vocab_size, config.embed_dim):
                raise ValueError(
                    f"embedding_init shape {embedding_init.shape}, expected "
                    f"({config.vocab_size}, {config.embed_dim})"
                )
            embeddings = [embedding_init.astype(dt).copy() for _ in range(n_tables)]
        else:
            embeddings = [
                rng.uniform(-s, s, size=(config.vocab_size, config.embed_dim)).astype(dt)
                for _ in range(n_tables)
            ]
        head_w = [
            rng.uniform(-s, s, size=(config.vocab_size, config.hidden_dim)).astype(dt)
            for _ in range(NUM_POSITIONS)
        ]
        head_b = [np.zeros(config.vocab_size, dtype=dt) for _ in range(NUM_POSITIONS)]
        return cls(config, img_proj, encoder, decoders, embeddings, head_w, head_b)

    def embedding_for(self, position_idx: int) -> np.ndarray:
        return self.embeddings[0] if self.config.tie_embeddings else self.embeddings[position_idx]

    def parameters(self) -> dict[str, np.ndarray]:
        """Canonically ordered name -> array view of every trainable tensor."""
        params: dict[str, np.ndarray] = {"img_proj": self.img_proj}
        params["encoder.w_x"] = self.encoder.w_x
        params["encoder.w_h"] = self.encoder.w_h
        params["encoder.b"] = self.encoder.b
        for k, dec in enumerate(self.decoders):
            params[f"decoder{k}.w_x"] = dec.w_x
            params[f"decoder{k}.w_h"] = dec.w_h
            params[f"decoder{k}.b"] = dec.b
        if self.config.tie_embeddings:
            params["embedding"] = self.embeddings[0]
        else:
            for k, emb in enumerate(self.embeddings):
                params[f"embedding{k}"] = emb
        for k in range(NUM_POSITIONS):
            params[f"head{k}.w"] = self.head_w[k]
            params[f"head{k}.b"] = self.head_b[k]
        return params

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(p) for name, p in self.parameters().items()}

    def project_image(self, img: ImageEmbedding) -> np.ndarray:
        vec = np.asarray(img.vector, dtype=self.config.dtype)
        if vec.shape != (self.config.image_dim,):
            raise ValueError(f"image dim {vec.shape}, expected ({self.config.image_dim},)")
        return self.img_proj @ vec


def encode_sequence(model: StoryModel, seq: ImageSequence, *, want_caches: bool = False):
    """Run the encoder over the 5 projected images from a zero initial state.

    Returns the final-state ContextVector; with want_caches, also the
    per-step caches and projected inputs needed for backprop.
    """
    state = LstmState.zeros(model.config.hidden_dim, dtype=model.config.dtype)
    caches = []
    xs = []
    for img in seq.images:
        x = model.project_image(img)
        state, cache = lstm_cell_forward(model.encoder, x, state, want_cache=want_caches)
        caches.append(cache)
        xs.append(x)
    ctx = ContextVector(state.h.copy(), state.c.copy())
    if want_caches:
        return ctx, caches, xs
    return ctx


def _decoder_start_state(model: StoryModel, ctx: ContextVector) -> LstmState:
    c = ctx.c.copy() if model.config.carry_cell_state else np.zeros_like(ctx.c)
    return LstmState(ctx.h.copy(), c)


def _step_logits(model: StoryModel, idx: int, h: np.ndarray) -> np.ndarray:
    return model.head_w[idx] @ h + model.head_b[idx]


def _masked_log_probs(logits: np.ndarray) -> np.ndarray:
    """Log softmax with <pad> and <bos> excluded from generation."""
    shifted = logits - logits.max()
    logp = shifted - np.log(np.sum(np.exp(shifted)))
    logp[text_mod.PAD] = -np.inf
    logp[text_mod.BOS] = -np.inf
    return logp


def decode_segment(
    model: StoryModel,
    position: int,
    ctx: ContextVector,
    img: ImageEmbedding,
    cfg: DecodeConfig,
) -> list[int]:
    """Generate one segment with decoder `position` (1-based).

    The decoder starts from the context state and consumes the projected
    image as its first input. max_len bounds the number of content tokens;
    an <eos> emitted within budget terminates the segment and is included
    in it. Ties at the argmax go to the lowest token id. beam_width > 1
    switches to beam search with length-normalized log-probability scoring;
    beam width 1 reproduces greedy output token-for-token.
    """
    if not 1 <= position <= NUM_POSITIONS:
        raise ValueError(f"position {position} not in 1..{NUM_POSITIONS}")
    if cfg.max_len < 0:
        raise ValueError("max_len must be >= 0")
    if cfg.max_len == 0:
        return []
    idx = position - 1
    x0 = model.project_image(img)
    if cfg.beam_width <= 1:
        return _decode_greedy(model, idx, ctx, x0, cfg.max_len)
    return _decode_beam(model, idx, ctx, x0, cfg.max_len, cfg.beam_width)


def _decode_greedy(model: StoryModel, idx: int, ctx: ContextVector, x0: np.ndarray, max_len: int) -> list[int]:
    emb = model.embedding_for(idx)
    state = _decoder_start_state(model, ctx)
    x = x0
    content: list[int] = []
    while len(content) < max_len:
        state, _ = lstm_cell_forward(model.decoders[idx], x, state, want_cache=False)
        logp = _masked_log_probs(_step_logits(model, idx, state.h))
        tok = int(np.argmax(logp))  # first max wins: lowest id on ties
        if tok == text_mod.EOS:
            return content + [text_mod.EOS]
        content.append(tok)
        x = emb[tok]
    return content


def _decode_beam(
    model: StoryModel, idx: int, ctx: ContextVector, x0: np.ndarray, max_len: int, width: int
) -> list[int]:
    emb = model.embedding_for(idx)
    # hypothesis: (tokens, cumulative logprob, state, next input)
    live = [([], 0.0, _decoder_start_state(model, ctx), x0)]
    done: list[tuple[list[int], float]] = []
    while live:
        candidates = []
        for h_idx, (tokens, score, state, x) in enumerate(live):
            new_state, _ = lstm_cell_forward(model.decoders[idx], x, state, want_cache=False)
            logp = _masked_log_probs(_step_logits(model, idx, new_state.h))
            order = np.argsort(-logp, kind="stable")[: width + 1]
            for tok in order:
                candidates.append((score + float(logp[tok]), int(tok), h_idx, new_state))
        # best first; ties by lowest token id, then earliest parent; masked
        # tokens carry -inf scores and are never eligible
        candidates = [c for c in candidates if np.isfinite(c[0])]
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
        next_live = []
        # Every selection consumes one of the width beam slots, finished or
        # not, so width 1 follows the greedy path token for token.
        for score, tok, h_idx, state in candidates[:width]:
            tokens = live[h_idx][0]
            if tok == text_mod.EOS:
                done.append((tokens + [text_mod.EOS], score))
            else:
                new_tokens = tokens + [tok]
                if len(new_tokens) >= max_len:
                    done.append((new_tokens, score))
                else:
                    next_live.append((new_tokens, score, state, emb[tok]))
        live = next_live
    # length-normalized ranking; deterministic tie-breaking on the tokens
    best = min(done, key=lambda d: (-(d[1] / max(len(d[0]), 1)), tuple(d[0])))
    return best[0]


def generate_story(model: StoryModel, seq: ImageSequence, cfg: DecodeConfig) -> Story:
    """Encode once, then run the 5 decoders independently from the same context."""
    ctx = encode_sequence(model, seq)
    segments = [
        decode_segment(model, pos, ctx, seq.images[pos - 1], cfg)
        for pos in range(1, NUM_POSITIONS + 1)
    ]
    return Story(segments)


def _strip_reference(segment: list[int]) -> list[int]:
    """Content ids of a reference segment (drops a trailing <eos> and all pads)."""
    out = [t for t in segment if t != text_mod.PAD]
    if out and out[-1] == text_mod.EOS:
        out = out[:-1]
    return out


def forward_loss(
    model: StoryModel, seq: ImageSequence, reference: Story
) -> tuple[float, dict[str, np.ndarray]]:
    """Teacher-forced loss over all 5 decoders, with full analytic gradients.

    Decoder i consumes the projected image then the reference embeddings;
    targets are the reference tokens shifted by one with <eos> appended.
    The summed cross-entropy is normalized by the total token count across
    segments. Returns (loss, grads) with grads keyed like parameters().
    """
    if not reference.segments or len(reference.segments) != NUM_POSITIONS:
        raise ValueError("reference story must have exactly 5 segments")
    refs = [_strip_reference(seg) for seg in reference.segments]
    total_tokens = sum(len(r) + 1 for r in refs)  # +1 for each <eos> target
    vocab_size = model.config.vocab_size
    for r in refs:
        for t in r:
            if not 0 <= t < vocab_size:
                raise ValueError(f"reference token id {t} outside vocab of {vocab_size}")

    grads = model.zero_grads()
    ctx, enc_caches, enc_xs = encode_sequence(model, seq, want_caches=True)
    scale = 1.0 / total_tokens
    loss_sum = 0.0
    dctx_h = np.zeros_like(ctx.h)
    dctx_c = np.zeros_like(ctx.c)

    for k in range(NUM_POSITIONS):
        emb = model.embedding_for(k)
        emb_key = "embedding" if model.config.tie_embeddings else f"embedding{k}"
        targets = refs[k] + [text_mod.EOS]
        inputs = [model.project_image(seq.images[k])] + [emb[t] for t in refs[k]]

        # forward through the segment, caching each step
        state = _decoder_start_state(model, ctx)
        caches = []
        hs = []
        for x in inputs:
            state, cache = lstm_cell_forward(model.decoders[k], x, state, want_cache=True)
            caches.append(cache)
            hs.append(state.h)
        dlogits_steps = []
        for h, target in zip(hs, targets):
            step_loss, dlogits = softmax_cross_entropy(_step_logits(model, k, h), target)
            loss_sum += step_loss
            dlogits_steps.append(dlogits * scale)

        # backward through time
        dh = np.zeros_like(ctx.h)
        dc = np.zeros_like(ctx.c)
        for t in range(len(inputs) - 1, -1, -1):
            dlogits = dlogits_steps[t]
            grads[f"head{k}.w"] += np.outer(dlogits, hs[t])
            grads[f"head{k}.b"] += dlogits
            dh = dh + model.head_w[k].T @ dlogits
            step_grads, dx, dh, dc = lstm_cell_backward(model.decoders[k], caches[t], dh, dc)
            grads[f"decoder{k}.w_x"] += step_grads.w_x
            grads[f"decoder{k}.w_h"] += step_grads.w_h
            grads[f"decoder{k}.b"] += step_grads.b
            if t == 0:
                img_vec = np.asarray(seq.images[k].vector, dtype=model.config.dtype)
                grads["img_proj"] += np.outer(dx, img_vec)
            elif not model.config.freeze_embeddings:
                grads[emb_key][refs[k][t - 1]] += dx
        dctx_h += dh
        if model.config.carry_cell_state:
            dctx_c += dc

    # encoder backward from the accumulated context gradient
    dh, dc = dctx_h, dctx_c
    for t in range(NUM_POSITIONS - 1, -1, -1):
        step_grads, dx, dh, dc = lstm_cell_backward(model.encoder, enc_caches[t], dh, dc)
        grads["encoder.w_x"] += step_grads.w_x
        grads["encoder.w_h"] += step_grads.w_h
        grads["encoder.b"] += step_grads.b
        img_vec = np.asarray(seq.images[t].vector, dtype=model.config.dtype)
        grads["img_proj"] += np.outer(dx, img_vec)

    return loss_sum * scale, grads
