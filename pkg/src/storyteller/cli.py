"""Command-line entry point.

Subcommands: train, generate, evaluate, synth-data, serve-ratings.
Every run is deterministic given the config plus seed. Exit codes:
0 success, 1 runtime failure, 2 configuration or validation failure.
Output files are written atomically (temp file, then rename), so failures
never leave partial outputs behind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import data as data_mod
from . import text as text_mod
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_run_config, require_input_path
from .errors import ConfigError, DataError, StorytellerError
from .ioutil import atomic_write_text
from .metrics import EvalPair, evaluate_corpus, render_table
from .model import Story, StoryModel, generate_story
from .training import TrainExample, train

REPEAT_NGRAM = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storyteller",
        description="Train, run, and evaluate the five-decoder visual storyteller.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=".", help="directory for default output paths")

    p_train = sub.add_parser("train", help="train a model and write a checkpoint")
    add_common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_gen = sub.add_parser("generate", help="generate stories from a checkpoint")
    add_common(p_gen)
    p_gen.set_defaults(func=cmd_generate)

    p_eval = sub.add_parser("evaluate", help="score candidate stories against references")
    add_common(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_synth = sub.add_parser("synth-data", help="write a deterministic synthetic dataset")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--stories", type=int, default=10)
    p_synth.add_argument("--image-dim", type=int, default=16)
    p_synth.add_argument("--split", default="train")
    p_synth.add_argument("--prefix", default="synth")
    p_synth.add_argument("--out", default=".")
    p_synth.set_defaults(func=cmd_synth_data)

    p_serve = sub.add_parser("serve-ratings", help="run the human-evaluation rating service")
    add_common(p_serve)
    p_serve.set_defaults(func=cmd_serve_ratings)
    return parser


def _load_config(args) -> RunConfig:
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg = cfg.model_copy(update={"seed": args.seed})
    return cfg


def _out_path(args, configured: str | None, default_name: str) -> str:
    if configured:
        return configured
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, default_name)


def _load_train_records(cfg: RunConfig) -> tuple[list[data_mod.StoryRecord], data_mod.EmbeddingStore]:
    stories_path = require_input_path("stories", cfg.paths.stories)
    embeddings_path = require_input_path("embeddings", cfg.paths.embeddings)
    result = data_mod.load_stories(stories_path)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    records = [r for r in result.records if r.split == "train"]
    if not records:
        raise DataError(f"{stories_path}: no train-split stories")
    store = data_mod.load_embeddings(embeddings_path)
    data_mod.check_join(records, store)
    return records, store


def cmd_train(args) -> int:
    cfg = _load_config(args)
    if cfg.model is None:
        raise ConfigError("train requires a model section in the config")
    checkpoint_path = cfg.paths.checkpoint or _out_path(args, None, "model.ckpt")
    records, store = _load_train_records(cfg)

    token_lists = [text_mod.tokenize(t) for rec in records for t in rec.texts]
    vocab = text_mod.build_vocab(token_lists, min_count=cfg.model.vocab_min_count)
    model_cfg = cfg.model_config_for(len(vocab))

    embedding_init = None
    if cfg.train.skipgram_epochs > 0:
        sg_cfg = text_mod.SkipgramConfig(
            embed_dim=cfg.model.embed_dim,
            window=cfg.train.skipgram_window,
            epochs=cfg.train.skipgram_epochs,
            seed=cfg.seed,
        )
        id_corpus = [vocab.ids_of(toks) for toks in token_lists]
        table, _ = text_mod.train_skipgram(id_corpus, len(vocab), sg_cfg)
        embedding_init = table.vectors

    model = StoryModel.init(model_cfg, seed=cfg.seed, embedding_init=embedding_init)
    examples = [
        TrainExample(
            story_id=rec.story_id,
            seq=data_mod.sequence_for(rec, store),
            reference=Story([vocab.ids_of(text_mod.tokenize(t)) for t in rec.texts]),
        )
        for rec in records
    ]
    loss_rows: list[str] = []
    optim, losses = train(
        model,
        examples,
        cfg.train_config(),
        on_epoch=lambda epoch, loss: loss_rows.append(json.dumps({"epoch": epoch, "loss": loss})),
    )
    save_checkpoint(checkpoint_path, model, optim, vocab)
    loss_log_path = cfg.paths.loss_log or _out_path(args, None, "loss_log.jsonl")
    atomic_write_text(loss_log_path, "".join(row + "\n" for row in loss_rows))
    final = f"{losses[-1]:.6f}" if losses else "n/a"
    print(
        f"trained on {len(examples)} stories for {cfg.train.epochs} epochs, "
        f"final loss {final}; checkpoint {checkpoint_path}"
    )
    return 0


def has_cross_segment_repeat(segments: list[list[str]], n: int = REPEAT_NGRAM) -> bool:
    """True when some n-gram occurs in two or more distinct segments."""
    first_seen: dict[tuple, int] = {}
    for si, toks in enumerate(segments):
        for gram in {tuple(toks[i : i + n]) for i in range(len(toks) - n + 1)}:
            if gram in first_seen and first_seen[gram] != si:
                return True
            first_seen.setdefault(gram, si)
    return False


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    checkpoint_path = require_input_path("checkpoint", cfg.paths.checkpoint)
    stories_path = require_input_path("stories", cfg.paths.stories)
    embeddings_path = require_input_path("embeddings", cfg.paths.embeddings)

    model, _, vocab = load_checkpoint(checkpoint_path)
    result = data_mod.load_stories(stories_path)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if not result.records:
        raise DataError(f"{stories_path}: no stories")
    store = data_mod.load_embeddings(embeddings_path)
    data_mod.check_join(result.records, store)

    decode_cfg = cfg.decode_config()
    lines = []
    repeated = 0
    for rec in result.records:
        story = generate_story(model, data_mod.sequence_for(rec, store), decode_cfg)
        texts = story.segment_texts(vocab)
        if has_cross_segment_repeat([text_mod.tokenize(t) for t in texts]):
            repeated += 1
        lines.append(
            json.dumps(
                {"story_id": rec.story_id, "texts": texts, "concatenated": story.text(vocab)},
                sort_keys=True,
            )
        )
    candidates_path = cfg.paths.candidates or _out_path(args, None, "candidates.jsonl")
    atomic_write_text(candidates_path, "".join(line + "\n" for line in lines))
    fraction = repeated / len(result.records)
    print(f"wrote {len(lines)} candidate stories to {candidates_path}")
    print(f"repeated-4gram fraction: {fraction:.3f}")
    return 0


def _load_candidates(path: str) -> dict[str, str]:
    texts: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"bad JSON: {exc.msg}", line=line_no) from None
            if "story_id" not in obj:
                raise DataError("missing field 'story_id'", line=line_no)
            sid = str(obj["story_id"])
            if sid in texts:
                raise DataError(f"duplicate story id {sid!r}", line=line_no)
            if "concatenated" in obj:
                texts[sid] = str(obj["concatenated"])
            elif "texts" in obj:
                texts[sid] = " ".join(str(t) for t in obj["texts"] if str(t))
            else:
                raise DataError("record has neither 'concatenated' nor 'texts'", line=line_no)
    return texts


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    candidates_path = require_input_path("candidates", cfg.paths.candidates)
    references_path = require_input_path("stories", cfg.paths.stories)

    candidates = _load_candidates(candidates_path)
    result = data_mod.load_stories(references_path)
    references = {rec.story_id: " ".join(rec.texts) for rec in result.records}

    missing = sorted(set(references) - set(candidates))
    extra = sorted(set(candidates) - set(references))
    if missing or extra:
        parts = []
        if missing:
            parts.append("missing candidates for: " + ", ".join(missing))
        if extra:
            parts.append("candidates without references: " + ", ".join(extra))
        raise DataError("story id mismatch; " + "; ".join(parts))

    pairs = [
        EvalPair(rec.story_id, candidates[rec.story_id], [references[rec.story_id]])
        for rec in result.records
    ]
    report = evaluate_corpus(pairs)
    report_path = cfg.paths.report or _out_path(args, None, "report.json")
    atomic_write_text(report_path, report.to_json() + "\n")
    if cfg.metrics.scale in ("percent", "both"):
        print(render_table(report, "percent"))
    if cfg.metrics.scale in ("fraction", "both"):
        print(render_table(report, "fraction"))
    print(f"report written to {report_path}")
    return 0


def cmd_synth_data(args) -> int:
    records, store = data_mod.synth_dataset(
        seed=args.seed,
        n_stories=args.stories,
        image_dim=args.image_dim,
        split=args.split,
        id_prefix=args.prefix,
    )
    os.makedirs(args.out, exist_ok=True)
    stories_path = os.path.join(args.out, "stories.jsonl")
    embeddings_path = os.path.join(args.out, "embeddings.vemb")
    data_mod.save_stories(stories_path, records)
    data_mod.save_embeddings(embeddings_path, store)
    print(f"wrote {len(records)} stories to {stories_path}")
    print(f"wrote {len(store)} embeddings to {embeddings_path}")
    return 0


def cmd_serve_ratings(args) -> int:
    import uvicorn

    from .service.app import create_app
    from .service.store import RatingStore, load_task_pool

    cfg = _load_config(args)
    candidates_path = require_input_path("ratings.candidates", cfg.ratings.candidates)
    humans_path = require_input_path("ratings.humans", cfg.ratings.humans)
    pool = load_task_pool(candidates_path, humans_path)
    store = RatingStore(pool, cfg.ratings.log, raters_per_story=cfg.ratings.raters_per_story)
    app = create_app(store, static_dir=cfg.ratings.static_dir)
    print(f"serving {len(pool)} tasks on {cfg.ratings.host}:{cfg.ratings.port}")
    uvicorn.run(app, host=cfg.ratings.host, port=cfg.ratings.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StorytellerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
