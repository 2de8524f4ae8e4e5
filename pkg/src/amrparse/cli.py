"""Command-line entry point.

Verbs: train, parse, eval, transduce, stats.  Machine-readable results
go to standard output; progress and the resolved configuration go to
standard error as ``key=value`` lines.  Exit codes: 0 success, 1 usage
error, 2 data error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import Config, ConfigError, load_config, render_config
from .corpus import (CorpusError, CorpusRecord, format_record, format_target_block,
                     load_contextual, load_word_vectors, read_corpus, read_targets_text,
                     write_corpus)
from .graph import validate_graph
from .penman import PenmanError
from .prepost import Tables
from .smatch import corpus_smatch
from .stats import format_stats_table, node_source_stats, reference_tags
from .training import TrainingError, fit, preprocess_record
from .transduce import (TransduceError, graph_to_tree, linearize, tree_as_graph,
                        tree_from_graph_record, tree_to_graph)

DATA_ERRORS = (CorpusError, PenmanError, CheckpointError, ConfigError,
               TransduceError, TrainingError)


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _say(line: str):
    print(line, file=sys.stderr)


def _echo_args(args, skip=("func",)):
    for key in sorted(vars(args)):
        if key not in skip:
            _say(f"arg.{key}={getattr(args, key)}")


def _echo_config(cfg: Config):
    for line in render_config(cfg).splitlines():
        key, _, value = line.partition(" = ")
        _say(f"config.{key}={value}")


# --- train ----------------------------------------------------------------

def _cmd_train(args) -> int:
    cfg = load_config(args.config) if args.config else Config()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.contextual:
        cfg.use_contextual = True
    cfg.validate()
    _echo_config(cfg)

    train_records = read_corpus(args.corpus, require_graph=True)
    dev_records = read_corpus(args.dev, require_graph=True) if args.dev else train_records
    vectors = load_word_vectors(args.vectors, cfg.word_dim) if args.vectors else None
    contextual = load_contextual(args.contextual) if args.contextual else None

    result = fit(train_records, dev_records, cfg,
                 contextual_table=contextual, vectors=vectors, log=_say)
    save_checkpoint(args.out, result.model, result.tables)

    from .report import save_training_curves, write_metrics_tsv
    metrics_path = Path(str(args.out) + ".metrics.tsv")
    write_metrics_tsv(result.metrics, metrics_path)
    save_training_curves(result.metrics, Path(str(args.out) + ".curves.png"))
    _say(f"checkpoint={args.out}")
    _say(f"metrics={metrics_path}")
    print(f"best_epoch {result.best_epoch}")
    print(f"dev_f1 {result.best_f1:.4f}")
    return 0


# --- parse -----------------------------------------------------------------

def _cmd_parse(args) -> int:
    _echo_args(args)
    model, tables = load_checkpoint(args.model)
    _echo_config(model.cfg)
    records = read_corpus(args.input)
    contextual = load_contextual(args.contextual) if args.contextual else None

    from .decoding import parse_record

    def one(rec):
        return parse_record(model, tables, rec, beam=args.beam,
                            contextual_table=contextual)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            outputs = list(pool.map(one, records))
    else:
        outputs = [one(rec) for rec in records]

    out_records = []
    for rec, out in zip(records, outputs):
        out_records.append(CorpusRecord(id=rec.id, snt=rec.snt, tokens=rec.tokens,
                                        pos=rec.pos, lemmas=rec.lemmas, graph=out.graph))
    write_corpus(out_records, args.output)
    if args.tags:
        blocks = []
        for rec, out in zip(records, outputs):
            lines = [f"# ::id {rec.id}"] if rec.id else []
            lines += [f"{surface}\t{kind}" for surface, kind in out.tags]
            blocks.append("\n".join(lines) if lines else "# ::empty true")
        Path(args.tags).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")
    fallbacks = sum(1 for o in outputs if o.info.fallback)
    _say(f"parsed={len(outputs)} fallbacks={fallbacks}")
    print(f"parsed {len(outputs)}")
    return 0


# --- eval -------------------------------------------------------------------

def _cmd_eval(args) -> int:
    _echo_args(args)
    gold = read_corpus(args.gold, require_graph=True)
    pred = read_corpus(args.pred, require_graph=True)
    if len(gold) != len(pred):
        raise CorpusError(f"{len(gold)} gold records vs {len(pred)} predictions")
    pairs = [(p.graph, g.graph) for p, g in zip(pred, gold)]
    precision, recall, f1 = corpus_smatch(pairs, restarts=args.restarts, seed=args.seed or 0)
    print(f"P {precision:.4f} R {recall:.4f} F1 {f1:.4f}")
    return 0


# --- transduce ---------------------------------------------------------------

def _read_tag_file(path):
    from .corpus import _split_blocks
    blocks = []
    for _, lines in _split_blocks(Path(path).read_text(encoding="utf-8")):
        nodes = []
        for line in lines:
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise CorpusError(f"tags file: expected 2 columns, got {len(cols)}")
            nodes.append((cols[0], cols[1]))
        blocks.append(nodes)
    return blocks


def _cmd_transduce(args) -> int:
    _echo_args(args)
    if args.direction == "g2t":
        records = read_corpus(args.input, require_graph=True)
        out = []
        for rec in records:
            graph, indices = tree_as_graph(graph_to_tree(rec.graph))
            out.append(CorpusRecord(id=rec.id, snt=rec.snt, tokens=rec.tokens,
                                    pos=rec.pos, lemmas=rec.lemmas, graph=graph,
                                    meta={"indices": " ".join(map(str, indices))}))
        write_corpus(out, args.output)
    elif args.direction == "t2g":
        records = read_corpus(args.input, require_graph=True)
        out = []
        for rec in records:
            if "indices" not in rec.meta:
                raise CorpusError(f"record {rec.id!r}: missing ::indices line")
            indices = [int(x) for x in rec.meta["indices"].split()]
            tree = tree_from_graph_record(rec.graph, indices)
            out.append(CorpusRecord(id=rec.id, snt=rec.snt, tokens=rec.tokens,
                                    pos=rec.pos, lemmas=rec.lemmas,
                                    graph=tree_to_graph(tree)))
        write_corpus(out, args.output)
    else:  # linearize
        records = read_corpus(args.input, require_graph=True)
        blocks = []
        for rec in records:
            target = linearize(graph_to_tree(rec.graph), rec.tokens, rec.lemma_list()
                               if rec.tokens else None)
            blocks.append(format_target_block(target, rec.id))
        Path(args.output).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")
    _say(f"transduced={args.direction}")
    print(f"records {len(records)}")
    return 0


# --- stats --------------------------------------------------------------------

def _cmd_stats(args) -> int:
    _echo_args(args)
    gold = read_corpus(args.gold, require_graph=True)
    pred = read_corpus(args.pred, require_graph=True)
    sys_tags = _read_tag_file(args.tags)
    if not (len(gold) == len(pred) == len(sys_tags)):
        raise CorpusError(
            f"mismatched record counts: gold={len(gold)} pred={len(pred)} tags={len(sys_tags)}")
    cfg = Config()
    stats = node_source_stats(reference_tags(gold, cfg), sys_tags)
    table = format_stats_table(stats)
    print(table)
    if args.report_dir:
        from .report import save_source_stats_figure
        report_dir = Path(args.report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        (report_dir / "node_sources.tsv").write_text(table + "\n", encoding="utf-8")
        save_source_stats_figure(stats, report_dir / "node_sources.png")
        _say(f"report={report_dir}")
    return 0


# --- argument wiring --------------------------------------------------------------

def build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="amrparse",
                             description="Sentence-to-semantic-graph parser toolkit")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("train", parents=[], help="train a model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dev")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--vectors")
    p.add_argument("--contextual")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("parse", help="parse sentences with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--beam", type=int, default=None)
    p.add_argument("--tags", help="write emitted node source tags here")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--contextual")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("eval", help="Smatch of predictions against gold graphs")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("transduce", help="graph/tree/linearization conversions")
    p.add_argument("direction", choices=("g2t", "t2g", "linearize"))
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_transduce)

    p = sub.add_parser("stats", help="node-source frequency/precision/recall")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--tags", required=True)
    p.add_argument("--report-dir", dest="report_dir")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_stats)
    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except DATA_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main():
    sys.exit(run(sys.argv[1:]))
