"""Command-line interface: train, segment, evaluate, inspect-features.

Exit codes::

    0  success, requested artifact fully written
    1  input file missing or unreadable
    2  invalid arguments or configuration
    3  malformed corpus or model file
    4  unusable data (single-class training data, gold/prediction mismatch)
    5  output not writable
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import persist
from .corpus import (CorpusFormatError, balanced_sample, extract_corpus_windows, load_gold_corpus, read_plain,
                     render_pipe_marked)
from .evaluation import boundary_metrics, classification_metrics, per_document_tsv
from .features import vectorize
from .forest import ForestParams, predict_proba_many, split_counts
from .pipeline import train_model
from .segmenter import from_marked, render_pipe, render_records, segment_corpus
from .synthetic import generate_corpus

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_DATA = 4
EXIT_OUTPUT = 5

log = logging.getLogger("edurf")

TRAIN_DEFAULTS = {
    "trees": 100,
    "max_depth": 32,
    "min_leaf": 1,
    "features_per_split": None,
    "min_docs": 2,
    "max_doc_fraction": 0.5,
    "balance": False,
    "seed": 0,
    "threshold": 0.5,
}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_INPUT) from None


def _write_bytes(path: str, data: bytes) -> None:
    target = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=target.parent if str(target.parent) else ".",
                                   prefix=target.name + ".", suffix=".tmp")
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, target)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_OUTPUT) from None


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    _write_bytes(path, text.encode("utf-8"))


def _load_gold(path: str, fmt: str):
    if fmt == "edu-lines":
        if not Path(path).is_dir():
            raise CliError(f"cannot read {path}: edu-lines corpora are directories", EXIT_INPUT)
        try:
            return load_gold_corpus(path, "edu-lines")
        except CorpusFormatError as exc:
            raise CliError(str(exc), EXIT_FORMAT) from None
        except OSError as exc:
            raise CliError(f"cannot read {path}: {exc}", EXIT_INPUT) from None
    text = _read_text(path)
    try:
        return load_gold_corpus(io.StringIO(text), "pipe-marked")
    except CorpusFormatError as exc:
        raise CliError(str(exc), EXIT_FORMAT) from None


def _load_model(path: str):
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_INPUT) from None
    try:
        model = persist.loads(data)
    except persist.ModelFormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_FORMAT) from None
    if model.space is None:
        raise CliError(f"{path}: model has no feature space", EXIT_FORMAT)
    return model


def effective_train_config(args) -> dict:
    """Defaults, overridden by the config file, overridden by flags."""
    config = dict(TRAIN_DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(_read_text(args.config))
        except json.JSONDecodeError as exc:
            raise CliError(f"config {args.config}: {exc}", EXIT_USAGE) from None
        if not isinstance(loaded, dict):
            raise CliError(f"config {args.config}: expected a JSON object", EXIT_USAGE)
        unknown = set(loaded) - set(TRAIN_DEFAULTS)
        if unknown:
            raise CliError(f"config {args.config}: unknown keys {sorted(unknown)}", EXIT_USAGE)
        config.update(loaded)
    for key in TRAIN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    return config


def _params_from_config(config: dict) -> tuple[ForestParams, tuple[int, float]]:
    try:
        params = ForestParams(
            n_trees=int(config["trees"]), max_depth=int(config["max_depth"]),
            min_leaf=int(config["min_leaf"]),
            features_per_split=None if config["features_per_split"] is None else int(config["features_per_split"]),
            seed=int(config["seed"]), decision_threshold=float(config["threshold"]),
        )
        min_docs = int(config["min_docs"])
        frac = float(config["max_doc_fraction"])
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid configuration: {exc}", EXIT_USAGE) from None
    if min_docs < 1 or not 0 < frac <= 1:
        raise CliError("min_docs must be >= 1 and max_doc_fraction in (0, 1]", EXIT_USAGE)
    return params, (min_docs, frac)


def cmd_train(args) -> int:
    config = effective_train_config(args)
    params, bounds = _params_from_config(config)
    docs = _load_gold(args.corpus, args.corpus_format)
    if not docs:
        raise CliError(f"{args.corpus}: no documents", EXIT_DATA)
    try:
        model, summary = train_model(docs, params, bounds, balance=bool(config["balance"]))
    except ValueError as exc:
        raise CliError(str(exc), EXIT_DATA) from None
    _write_bytes(args.model, persist.dumps(model))
    out = sys.stdout
    out.write(f"config {json.dumps(config, sort_keys=True)}\n")
    out.write(f"documents {summary.n_docs}\n")
    out.write(f"features {summary.n_features}\n")
    out.write(f"windows positive={summary.n_positive} negative={summary.n_negative}\n")
    out.write(f"training accuracy positive={summary.accuracy_positive:.4f} "
              f"negative={summary.accuracy_negative:.4f}\n")
    out.write(f"model written to {args.model}\n")
    return EXIT_OK


def cmd_segment(args) -> int:
    model = _load_model(args.model)
    text = _read_text(args.input)
    try:
        docs = read_plain(io.StringIO(text))
    except CorpusFormatError as exc:
        raise CliError(str(exc), EXIT_FORMAT) from None
    segs = segment_corpus(docs, model)
    if args.format == "records":
        body = "".join(render_records(d, s) for d, s in zip(docs, segs))
    else:
        body = "\n".join(render_pipe(d, s) for d, s in zip(docs, segs))
    _write_text(args.output, body)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = _load_model(args.model)
    gold = _load_gold(args.gold, args.gold_format)
    if not gold:
        raise CliError(f"{args.gold}: no documents", EXIT_DATA)
    out = sys.stdout
    if args.classification_mode:
        windows = extract_corpus_windows(gold)
        try:
            windows = balanced_sample(windows, args.seed)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_DATA) from None
        probs = predict_proba_many(model, [vectorize(w, model.space) for w in windows])
        thr = model.params.decision_threshold
        report = classification_metrics((bool(p > thr), bool(w.label)) for w, p in zip(windows, probs))
        n_pos = sum(1 for w in windows if w.label)
        out.write(report.table("classification (balanced windows)"))
        out.write(f"  balanced_set={len(windows)} positive={n_pos} negative={len(windows) - n_pos}\n")
        out.write("evaluation_set=balanced\n")
    else:
        if args.predictions:
            segs = [from_marked(d) for d in _load_gold(args.predictions, "pipe-marked")]
        else:
            segs = segment_corpus(gold, model)
        try:
            report = boundary_metrics(segs, gold, args.count_sentence_initial)
            if args.per_doc:
                _write_text(args.per_doc, per_document_tsv(segs, gold, args.count_sentence_initial))
        except ValueError as exc:
            raise CliError(str(exc), EXIT_DATA) from None
        title = "boundaries" + (" (sentence-initial counted)" if args.count_sentence_initial else "")
        out.write(report.table(title))
        out.write("evaluation_set=full\n")
    out.write(report.key_values())
    return EXIT_OK


def cmd_inspect(args) -> int:
    model = _load_model(args.model)
    text = model.space.dump_tsv()
    if args.split_counts:
        counts = split_counts(model)
        lines = text.splitlines()
        lines[0] += "\tsplits"
        lines[1:] = [f"{line}\t{counts[i]}" for i, line in enumerate(lines[1:])]
        text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    return EXIT_OK


def cmd_generate(args) -> int:
    docs = generate_corpus(args.gen_synthetic, args.seed if args.seed is not None else 0)
    _write_text(args.output, render_pipe_marked(docs))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edurf", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--gen-synthetic", type=int, metavar="N",
                        help="write N synthetic gold documents (pipe-marked) and exit")
    parser.add_argument("--seed", type=int, help="seed for --gen-synthetic")
    parser.add_argument("--output", default="-", help="destination for --gen-synthetic (default stdout)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("train", help="train a model on a gold corpus")
    p.add_argument("--corpus", required=True, help="gold corpus file (pipe-marked) or directory (edu-lines)")
    p.add_argument("--corpus-format", choices=["pipe-marked", "edu-lines"], default="pipe-marked")
    p.add_argument("--model", required=True, help="model file to write")
    p.add_argument("--config", help="JSON file of training settings; flags override it")
    p.add_argument("--trees", type=int, help="number of trees (default 100)")
    p.add_argument("--max-depth", type=int, help="maximum tree depth (default 32)")
    p.add_argument("--min-leaf", type=int, help="minimum samples per leaf (default 1)")
    p.add_argument("--features-per-split", type=int, help="candidate features per node (default round(sqrt(D)))")
    p.add_argument("--min-docs", type=int, help="minimum document frequency of a kept feature (default 2)")
    p.add_argument("--max-doc-fraction", type=float,
                   help="maximum document fraction of a kept character n-gram (default 0.5)")
    p.add_argument("--balance", action="store_true", default=None,
                   help="train on a 50/50 class-balanced window sample")
    p.add_argument("--threshold", type=float, help="decision threshold on the boundary probability (default 0.5)")
    p.add_argument("--seed", type=int, help="seed for bootstrap, feature draws and balancing (default 0)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("segment", help="segment plain sentence-per-line text")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="output file, or - for stdout")
    p.add_argument("--format", choices=["pipe", "records"], default="pipe")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="score a model against a gold corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--gold-format", choices=["pipe-marked", "edu-lines"], default="pipe-marked")
    p.add_argument("--classification-mode", action="store_true",
                   help="score balanced candidate windows instead of boundaries")
    p.add_argument("--count-sentence-initial", action="store_true",
                   help="count sentence starts as correctly predicted boundaries")
    p.add_argument("--predictions", help="score this pipe-marked segmentation instead of re-segmenting the gold text")
    p.add_argument("--per-doc", help="write a tab-separated per-document breakdown here")
    p.add_argument("--seed", type=int, default=0, help="seed for balancing in --classification-mode")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("inspect-features", help="dump the model's feature space")
    p.add_argument("--model", required=True)
    p.add_argument("--split-counts", action="store_true", help="add a column counting splits per feature")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.gen_synthetic is not None:
            if args.command:
                parser.error("--gen-synthetic cannot be combined with a subcommand")
            if args.gen_synthetic < 0:
                parser.error("--gen-synthetic needs a non-negative count")
            return cmd_generate(args)
        if not args.command:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except CliError as exc:
        print(f"edurf: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
