"""Command-line entry point (``kgrec``).

Every option can also come from a flat JSON document passed with
``--config``; flags given on the command line win over file values.
Exit status: 0 on success, 1 for invalid input or configuration, 2 for
any other failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

from kgrec.errors import StageError, ValidationError
from kgrec.evaluation import (
    link_prediction_auc,
    rank_cases,
    ranking_metrics,
    read_ground_truth,
    split_edges,
)
from kgrec.graph import (
    KnowledgeGraph,
    graph_stats,
    read_triples,
    serialize_triples,
    strip_data_properties,
)
from kgrec.negatives import read_negatives, sample_negatives, write_negatives
from kgrec.pipeline import (
    CASE_TRAIN,
    CASE_WALK,
    MODELS,
    PipelineConfig,
    candidate_pool,
    case_fixture_report,
    derive_seed,
    link_prediction_objective,
    load_graph,
    run_pipeline,
    write_atomic,
)
from kgrec.recommend import format_recommendation, recommend
from kgrec.skipgram import (
    TrainConfig,
    concat_embeddings,
    format_embeddings,
    load_embeddings,
    train_skipgram,
)
from kgrec.synth import SynthSpec, generate_synthetic_kg
from kgrec.tuner import SearchSpace, random_search
from kgrec.walks import Strategy, WalkConfig, generate_walks, read_corpus, read_weights, write_corpus

log = logging.getLogger("kgrec")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
S = argparse.SUPPRESS


class _Parser(argparse.ArgumentParser):
    """Usage errors are invalid input, so they exit 1 rather than argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# -- option groups ------------------------------------------------------------


def _walk_opts(p, strategy=True):
    if strategy:
        p.add_argument("--strategy", choices=[s.value for s in Strategy], default=S)
    p.add_argument("--weights", default=S, help="relation weights file (predicate<TAB>weight)")
    p.add_argument("--walk-length", type=int, default=S)
    p.add_argument("--num-walks", type=int, default=S)
    p.add_argument("--p", type=float, default=S, help="node2vec return parameter")
    p.add_argument("--q", type=float, default=S, help="node2vec in-out parameter")
    p.add_argument("--workers", type=int, default=S)


def _train_opts(p):
    p.add_argument("--dimension", type=int, default=S)
    p.add_argument("--window", type=int, default=S)
    p.add_argument("--epochs", type=int, default=S)
    p.add_argument("--learning-rate", type=float, default=S)
    p.add_argument("--min-learning-rate", type=float, default=S)
    p.add_argument("--negatives-per-target", type=int, default=S)
    p.add_argument("--shrink-window", action="store_true", default=S)


def _split_opts(p):
    p.add_argument("--ratios", type=float, nargs=3, default=S, metavar=("TRAIN", "VAL", "TEST"))
    p.add_argument("--negative-ratio", type=float, default=S)
    p.add_argument("--type-aware", action="store_true", default=S,
                   help="draw corruptions from entities seen in the same predicate position")


def _build(cls, opts, **fixed):
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {k: v for k, v in opts.items() if k in names}
    kwargs.update(fixed)
    return cls(**kwargs)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=S, help="global random seed (default 0)")
    common.add_argument("--config", default=S, help="JSON file of option defaults")
    common.add_argument("--out", default=S, help="output directory (default .)")
    common.add_argument("--quiet", action="store_true", default=S, help="only print errors")

    parser = _Parser(prog="kgrec", parents=[common],
                     description="Knowledge-graph walk embeddings for text recommendation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    p = cmd("ingest", "turn JSON-lines text records (or a triple file) into an enriched triple file")
    p.add_argument("input")

    p = cmd("synth", "generate a synthetic graph with planted clusters")
    for f in dataclasses.fields(SynthSpec):
        if f.name == "seed":
            continue
        flag = "--" + f.name.replace("_", "-")
        if f.type in ("bool",) or isinstance(f.default, bool):
            p.add_argument(flag, action="store_true", default=S)
        elif isinstance(f.default, tuple):
            p.add_argument(flag, type=int, nargs=2, default=S, metavar=("MIN", "MAX"))
        elif isinstance(f.default, float):
            p.add_argument(flag, type=float, default=S)
        else:
            p.add_argument(flag, type=int, default=S)

    p = cmd("split", "80/10/10 edge split plus filtered negatives for validation and test")
    p.add_argument("triples")
    _split_opts(p)

    p = cmd("walk", "generate a walk corpus")
    p.add_argument("triples")
    _walk_opts(p)

    p = cmd("train", "train skip-gram embeddings on a walk corpus")
    p.add_argument("corpus")
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default=S,
                   help="strategy that produced the corpus; selects the seed stream")
    _train_opts(p)

    p = cmd("concat", "concatenate two embedding tables (hybrid)")
    p.add_argument("first")
    p.add_argument("second")

    p = cmd("eval-lp", "link-prediction AUC of positives vs negatives")
    p.add_argument("embeddings")
    p.add_argument("positives", help="triple file of held-out positives")
    p.add_argument("negatives", help="negative triple file (trailing 'neg' column)")
    p.add_argument("--method", choices=["cosine", "dot"], default=S)

    p = cmd("eval-rank", "Hits@K, MRR and nDCG@10 over ground-truth cases")
    p.add_argument("embeddings")
    p.add_argument("ground_truth")
    p.add_argument("--pool", default=S, help="candidate file, one id per line")
    p.add_argument("--triples", default=S, help="graph used to infer the candidate pool")

    p = cmd("recommend", "top-n texts for an anchor")
    p.add_argument("embeddings")
    p.add_argument("anchor")
    p.add_argument("-n", "--top-n", type=int, default=S)
    p.add_argument("--pool", default=S)
    p.add_argument("--triples", default=S)
    p.add_argument("--json", action="store_true", default=S)

    p = cmd("sweep", "seeded random search optimizing validation AUC")
    p.add_argument("triples")
    p.add_argument("--model", choices=MODELS, default=S)
    p.add_argument("--trials", type=int, default=S)
    p.add_argument("--space", default=S, help="JSON search space (default: built-in envelope)")
    _walk_opts(p, strategy=False)
    _train_opts(p)

    p = cmd("case-study", "six-configuration top-10 table for the bundled 1984 fixture")
    for flag in ("--walk-length", "--num-walks", "--dimension", "--window", "--epochs"):
        p.add_argument(flag, type=int, default=S)
    p.add_argument("-n", "--top-n", type=int, default=S)

    p = cmd("stats", "graph statistics")
    p.add_argument("triples")

    p = cmd("run", "full pipeline: strip, split, negatives, walk, train, evaluate, recommend")
    p.add_argument("triples")
    p.add_argument("--model", choices=MODELS, default=S)
    p.add_argument("--ground-truth", default=S)
    p.add_argument("--pool", default=S)
    p.add_argument("--top-n", type=int, default=S)
    p.add_argument("--method", choices=["cosine", "dot"], default=S)
    _split_opts(p)
    _walk_opts(p, strategy=False)
    _train_opts(p)
    return parser


def _options(args) -> dict:
    """File values first, then explicit flags."""
    opts = {}
    cfg = getattr(args, "config", None)
    if cfg:
        try:
            with open(cfg, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {cfg}: invalid JSON ({exc.msg})") from exc
        if not isinstance(data, dict):
            raise ValidationError(f"config {cfg}: expected a JSON object")
        opts.update({k.replace("-", "_"): v for k, v in data.items()})
    opts.update(vars(args))
    opts.setdefault("seed", 0)
    opts.setdefault("out", ".")
    return opts


def _emit(opts, text):
    if not opts.get("quiet"):
        sys.stdout.write(text)


def _out(opts, name):
    os.makedirs(opts["out"], exist_ok=True)
    return os.path.join(opts["out"], name)


def _walk_config(opts):
    # same seed stream as the walk stage of ``run``, so stages can be replayed by hand
    strategy = opts.get("strategy", "uniform")
    return _build(WalkConfig, opts, seed=derive_seed(opts["seed"], f"walk/{strategy}"))


def _train_config(opts):
    strategy = opts.get("strategy", "uniform")
    return _build(TrainConfig, opts, seed=derive_seed(opts["seed"], f"train/{strategy}"))


def _pool(opts, emb):
    if opts.get("pool"):
        return candidate_pool(KnowledgeGraph.from_triples([]), opts["pool"])
    if opts.get("triples"):
        return candidate_pool(read_triples(opts["triples"]))
    return set(emb.vocabulary.entities)


# -- commands -----------------------------------------------------------------


def cmd_ingest(opts):
    kg = load_graph(opts["input"])
    path = _out(opts, "triples.tsv")
    write_atomic(path, serialize_triples(kg.triples))
    _emit(opts, json.dumps({"triples": path, **graph_stats(kg)}, indent=2) + "\n")


def cmd_synth(opts):
    names = {f.name for f in dataclasses.fields(SynthSpec)}
    kwargs = {k: (tuple(v) if isinstance(v, list) else v) for k, v in opts.items() if k in names}
    spec = SynthSpec(**kwargs)
    paths = generate_synthetic_kg(spec, opts["out"])
    _emit(opts, json.dumps(paths, indent=2) + "\n")


def cmd_split(opts):
    kg = strip_data_properties(read_triples(opts["triples"]))
    ratios = tuple(opts.get("ratios", (0.8, 0.1, 0.1)))
    split = split_edges(kg, ratios, seed=derive_seed(opts["seed"], "split"))
    ratio = opts.get("negative_ratio", 1.0)
    if ratio <= 0:
        raise ValidationError("negative_ratio must be positive")
    out = {}
    for name, part in (("train", split.train), ("validation", split.validation), ("test", split.test)):
        out[name] = _out(opts, f"split_{name}.tsv")
        write_atomic(out[name], serialize_triples(part))
        if name != "train":
            negs = sample_negatives(kg, kg.triples, max(1, round(ratio * len(part))),
                                    seed=derive_seed(opts["seed"], f"negatives/{name}"), sources=list(part),
                                    type_aware=bool(opts.get("type_aware")))
            out[f"negatives_{name}"] = _out(opts, f"negatives_{name}.tsv")
            write_negatives(out[f"negatives_{name}"], negs)
    _emit(opts, json.dumps({"sizes": list(split.sizes), **out}, indent=2) + "\n")


def cmd_walk(opts):
    kg = strip_data_properties(read_triples(opts["triples"]))
    weights = read_weights(opts["weights"]) if opts.get("weights") else None
    corpus = generate_walks(kg, _walk_config(opts), weights)
    path = _out(opts, "corpus.txt")
    write_corpus(path + ".partial", corpus)
    os.replace(path + ".partial", path)
    _emit(opts, f"{len(corpus)} walks -> {path}\n")


def cmd_train(opts):
    emb = train_skipgram(read_corpus(opts["corpus"]), _train_config(opts))
    path = _out(opts, "embeddings.txt")
    write_atomic(path, format_embeddings(emb))
    _emit(opts, f"{len(emb.vocabulary)} x {emb.dimension} -> {path}\n")


def cmd_concat(opts):
    emb = concat_embeddings(load_embeddings(opts["first"]), load_embeddings(opts["second"]))
    path = _out(opts, "embeddings_hybrid.txt")
    write_atomic(path, format_embeddings(emb))
    _emit(opts, f"{len(emb.vocabulary)} x {emb.dimension} -> {path}\n")


def cmd_eval_lp(opts):
    emb = load_embeddings(opts["embeddings"])
    positives = [t for t in read_triples(opts["positives"]).triples if not t.is_data_property]
    value, skipped = link_prediction_auc(emb, positives, read_negatives(opts["negatives"]),
                                         opts.get("method", "cosine"))
    _emit(opts, json.dumps({"AUC": value, "skipped": skipped}, indent=2) + "\n")


def cmd_eval_rank(opts):
    emb = load_embeddings(opts["embeddings"])
    cases = read_ground_truth(opts["ground_truth"])
    rankings, skipped = rank_cases(emb, cases, _pool(opts, emb))
    _emit(opts, json.dumps({**ranking_metrics(cases, rankings), "skipped": skipped}, indent=2) + "\n")


def cmd_recommend(opts):
    emb = load_embeddings(opts["embeddings"])
    rec = recommend(emb, opts["anchor"], opts.get("top_n", 10), _pool(opts, emb))
    if opts.get("json"):
        body = {"anchor": rec.anchor, "n": rec.n, "items": [[e, s] for e, s in rec.items]}
        _emit(opts, json.dumps(body, indent=2) + "\n")
    else:
        _emit(opts, format_recommendation(rec))


def cmd_sweep(opts):
    model = opts.get("model", "uniform")
    kg = read_triples(opts["triples"])
    weights = read_weights(opts["weights"]) if opts.get("weights") else None
    space = SearchSpace.from_json(opts["space"]) if opts.get("space") else SearchSpace.default()
    space = space.for_strategy(model)
    objective = link_prediction_objective(kg, model, _walk_config(opts), _train_config(opts), weights,
                                          seed=opts["seed"])
    best, results = random_search(space, opts.get("trials", 50), objective, seed=opts["seed"],
                                  log_path=_out(opts, "trials.jsonl"))
    if best is None:
        raise RuntimeError("every trial failed; see trials.jsonl")
    best_auc = max(r.auc for r in results if r.ok)
    write_atomic(_out(opts, "best.json"), json.dumps({"params": best, "AUC": best_auc}, indent=2) + "\n")
    _emit(opts, json.dumps({"best": best, "AUC": best_auc, "trials": len(results),
                            "failed": sum(not r.ok for r in results)}, indent=2) + "\n")


def cmd_case_study(opts):
    walk = dataclasses.replace(CASE_WALK, **{k: opts[k] for k in ("walk_length", "num_walks") if k in opts})
    train = dataclasses.replace(CASE_TRAIN, **{k: opts[k] for k in ("dimension", "window", "epochs") if k in opts})
    study = case_fixture_report(seed=opts["seed"], walk=walk, train=train, top_n=opts.get("top_n", 10),
                                out_dir=opts["out"])
    _emit(opts, study.format_table())


def cmd_stats(opts):
    _emit(opts, json.dumps(graph_stats(load_graph(opts["triples"])), indent=2) + "\n")


def cmd_run(opts):
    fields = {f.name for f in dataclasses.fields(PipelineConfig)}
    kwargs = {k: v for k, v in opts.items() if k in fields and k not in ("walk", "train")}
    if "ratios" in kwargs:
        kwargs["ratios"] = tuple(kwargs["ratios"])
    if "type_aware" in opts:
        kwargs["type_aware_negatives"] = bool(opts["type_aware"])
    config = PipelineConfig(out_dir=opts["out"], walk=_walk_config(opts), train=_train_config(opts), **kwargs)
    report = run_pipeline(config)
    _emit(opts, report.to_json())


COMMANDS = {
    "ingest": cmd_ingest, "synth": cmd_synth, "split": cmd_split, "walk": cmd_walk, "train": cmd_train,
    "concat": cmd_concat, "eval-lp": cmd_eval_lp, "eval-rank": cmd_eval_rank, "recommend": cmd_recommend,
    "sweep": cmd_sweep, "case-study": cmd_case_study, "stats": cmd_stats, "run": cmd_run,
}


def _is_invalid(exc) -> bool:
    if isinstance(exc, StageError):
        exc = exc.cause
    return isinstance(exc, (ValidationError, KeyError, FileNotFoundError))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    quiet = getattr(args, "quiet", False)
    logging.basicConfig(level=logging.ERROR if quiet else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = _options(args)
        opts.pop("config", None)
        COMMANDS[opts.pop("command")](opts)
    except Exception as exc:  # noqa: BLE001 - mapped to an exit status below
        code = EXIT_INVALID if _is_invalid(exc) else EXIT_RUNTIME
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"kgrec: error: {msg}", file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
