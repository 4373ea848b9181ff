"""End-to-end orchestration: ingest, strip, split, sample negatives, walk, train, evaluate, recommend.

Every stage writes its artifacts as ``<name>.partial`` first and renames them
once the write completes, so a crashed run leaves only ``.partial`` files
behind.  Per-stage seeds are derived from the single global seed.
"""
from __future__ import annotations

import contextlib
import dataclasses
import json
import logging
import os
import zlib
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from kgrec.errors import ConfigError, StageError, ValidationError
from kgrec.evaluation import (
    EvalReport,
    case_recall,
    evaluate,
    link_prediction_auc,
    read_ground_truth,
    split_edges,
)
from kgrec.graph import (
    KnowledgeGraph,
    ingest_records,
    read_records,
    read_triples,
    serialize_triples,
    strip_data_properties,
)
from kgrec.negatives import sample_negatives, write_negatives
from kgrec.recommend import format_recommendation, read_pool, recommend, text_pool
from kgrec.skipgram import (
    EmbeddingTable,
    TrainConfig,
    concat_embeddings,
    format_embeddings,
    train_skipgram,
)
from kgrec.walks import RelationWeights, Strategy, WalkConfig, generate_walks, read_weights

log = logging.getLogger(__name__)

MODELS = ("uniform", "biased", "node2vec", "hybrid")
PARTIAL = ".partial"


def derive_seed(seed: int, stage: str) -> int:
    """Stable per-stage seed: independent streams keyed by the stage name."""
    key = zlib.crc32(stage.encode("utf-8"))
    return int(np.random.SeedSequence(seed, spawn_key=(key,)).generate_state(1, dtype=np.uint32)[0])


@contextlib.contextmanager
def stage(name: str):
    """Wrap any failure inside the block as a :class:`StageError` naming the stage."""
    log.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def write_atomic(path: str, text: str):
    """Write ``path + '.partial'`` and rename on success; a failure leaves the partial file."""
    tmp = path + PARTIAL
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


@dataclass
class PipelineConfig:
    triples: str
    out_dir: str
    model: str = "uniform"
    weights: str | None = None
    ground_truth: str | None = None
    pool: str | None = None
    walk: WalkConfig = field(default_factory=WalkConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    ratios: tuple = (0.8, 0.1, 0.1)
    negative_ratio: float = 1.0
    type_aware_negatives: bool = False
    top_n: int = 10
    method: str = "cosine"
    seed: int = 0

    def validate(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {', '.join(MODELS)}")
        if self.model in ("biased", "hybrid") and not self.weights:
            raise ConfigError(f"model {self.model!r} requires a relation weights file")
        for name in ("triples", "weights", "ground_truth", "pool"):
            path = getattr(self, name)
            if path is not None and not os.path.exists(path):
                raise ConfigError(f"{name} file not found: {path}")
        if self.negative_ratio <= 0:
            raise ConfigError("negative_ratio must be positive")
        if self.top_n < 1:
            raise ConfigError("top_n must be >= 1")
        if self.method not in ("cosine", "dot"):
            raise ConfigError(f"unknown scoring method {self.method!r}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        """Build from a flat or nested JSON-style mapping; ``walk``/``train`` are sub-objects."""
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        try:
            if isinstance(data.get("walk"), dict):
                data["walk"] = WalkConfig(**data["walk"])
            if isinstance(data.get("train"), dict):
                data["train"] = TrainConfig(**data["train"])
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        if "ratios" in data:
            data["ratios"] = tuple(data["ratios"])
        return cls(**data)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["walk"]["strategy"] = self.walk.strategy.value
        d["ratios"] = list(self.ratios)
        return d


def load_graph(path) -> KnowledgeGraph:
    """Triple TSV, or JSON-lines text records that get enriched on ingest."""
    if str(path).endswith((".jsonl", ".json")):
        return KnowledgeGraph.from_triples(ingest_records(read_records(path)))
    return read_triples(path)


def candidate_pool(kg: KnowledgeGraph, pool_path=None) -> set:
    """Explicit pool file, else typed ``Text`` entities, else every subject of an entity-valued triple."""
    if pool_path:
        return read_pool(pool_path)
    typed = text_pool(kg)
    if typed:
        return typed
    return {t.subject for t in kg.triples if not t.is_data_property}


def _walk_config(base: WalkConfig, strategy: str, seed: int) -> WalkConfig:
    return dataclasses.replace(base, strategy=Strategy(strategy), seed=seed)


def embed(train_kg: KnowledgeGraph, model: str, walk: WalkConfig, train: TrainConfig, seed: int,
          weights: RelationWeights | None = None, corpus_sink=None) -> EmbeddingTable:
    """Walk + skip-gram for one model; ``hybrid`` concatenates uniform and biased tables.

    ``corpus_sink(label, corpus)`` receives each generated corpus (for artifact writing).
    """
    components = ["uniform", "biased"] if model == "hybrid" else [model]
    tables = []
    for comp in components:
        wc = _walk_config(walk, comp, derive_seed(seed, f"walk/{comp}"))
        corpus = generate_walks(train_kg, wc, weights if comp == "biased" else None)
        if corpus_sink is not None:
            corpus_sink(comp, corpus)
        tc = dataclasses.replace(train, seed=derive_seed(seed, f"train/{comp}"))
        tables.append(train_skipgram(corpus, tc))
    return tables[0] if len(tables) == 1 else concat_embeddings(*tables)


def _negatives(kg, part, ratio, seed, type_aware):
    count = max(1, round(ratio * len(part)))
    return sample_negatives(kg, kg.triples, count, seed=seed, sources=list(part), type_aware=type_aware)


def run_pipeline(config: PipelineConfig) -> EvalReport:
    config.validate()
    out = config.out_dir
    os.makedirs(out, exist_ok=True)
    path = lambda name: os.path.join(out, name)  # noqa: E731

    with stage("ingest"):
        kg = load_graph(config.triples)
        weights = read_weights(config.weights) if config.weights else None
        cases = read_ground_truth(config.ground_truth) if config.ground_truth else []
    with stage("strip"):
        kg = strip_data_properties(kg)
        write_atomic(path("graph.tsv"), serialize_triples(kg.triples))
    with stage("split"):
        split = split_edges(kg, config.ratios, seed=derive_seed(config.seed, "split"))
        for name, part in (("train", split.train), ("validation", split.validation), ("test", split.test)):
            write_atomic(path(f"split_{name}.tsv"), serialize_triples(part))
    with stage("negatives"):
        neg_val = _negatives(kg, split.validation, config.negative_ratio,
                             derive_seed(config.seed, "negatives/validation"), config.type_aware_negatives)
        neg_test = _negatives(kg, split.test, config.negative_ratio,
                              derive_seed(config.seed, "negatives/test"), config.type_aware_negatives)
        for name, negs in (("validation", neg_val), ("test", neg_test)):
            write_negatives(path(f"negatives_{name}.tsv") + PARTIAL, negs)
            os.replace(path(f"negatives_{name}.tsv") + PARTIAL, path(f"negatives_{name}.tsv"))

    def sink(label, corpus):
        name = "corpus.txt" if config.model != "hybrid" else f"corpus_{label}.txt"
        write_atomic(path(name), "".join(" ".join(w) + "\n" for w in corpus))

    with stage("walk+train"):
        train_kg = KnowledgeGraph.from_triples(split.train)
        emb = embed(train_kg, config.model, config.walk, config.train, config.seed, weights, sink)
        write_atomic(path("embeddings.txt"), format_embeddings(emb))

    with stage("evaluate"):
        pool = candidate_pool(kg, config.pool)
        provenance = {
            "model": config.model,
            "dataset": os.path.basename(config.triples),
            "weights": os.path.basename(config.weights) if config.weights else "none",
            "seed": config.seed,
            # per-component seeds come from the global seed, so the config-level ones are dropped
            "walk": {k: v for k, v in dataclasses.asdict(config.walk).items()
                     if k not in ("workers", "seed", "strategy")},
            "train": {k: v for k, v in dataclasses.asdict(config.train).items() if k not in ("workers", "seed")},
            "split_sizes": list(split.sizes),
        }
        val_auc, _ = link_prediction_auc(emb, split.validation, [n.triple for n in neg_val], config.method)
        provenance["validation_auc"] = val_auc
        report = evaluate(emb, split, neg_test, cases, pool, provenance, config.method)
        write_atomic(path("report.json"), report.to_json())

    with stage("recommend"):
        blocks = []
        for case in cases:
            if case.anchor not in emb:
                continue
            rec = recommend(emb, case.anchor, config.top_n, pool)
            blocks.append(f"# anchor: {case.anchor}\n" + format_recommendation(rec))
        write_atomic(path("recommendations.tsv"), "".join(blocks))
    return report


# -- tuning objective ---------------------------------------------------------


def link_prediction_objective(kg: KnowledgeGraph, model: str, walk: WalkConfig, train: TrainConfig,
                              weights: RelationWeights | None = None, seed: int = 0, ratios=(0.8, 0.1, 0.1),
                              negative_ratio: float = 1.0):
    """Return ``objective(params, trial_seed) -> validation AUC`` for :func:`random_search`.

    The split and the validation negatives are fixed once per (graph, seed), so
    all trials are scored against the same pool.
    """
    if model in ("biased", "hybrid") and weights is None:
        raise ConfigError(f"model {model!r} requires relation weights")
    kg = strip_data_properties(kg)
    split = split_edges(kg, ratios, seed=derive_seed(seed, "split"))
    negs = [n.triple for n in _negatives(kg, split.validation, negative_ratio,
                                         derive_seed(seed, "negatives/validation"), False)]
    train_kg = KnowledgeGraph.from_triples(split.train)
    walk_fields = {f.name for f in dataclasses.fields(WalkConfig)}
    train_fields = {f.name for f in dataclasses.fields(TrainConfig)}

    def objective(params: dict, trial_seed: int) -> float:
        unknown = set(params) - walk_fields - train_fields
        if unknown:
            raise ConfigError(f"parameters not understood: {sorted(unknown)}")
        wc = dataclasses.replace(walk, **{k: v for k, v in params.items() if k in walk_fields})
        tc = dataclasses.replace(train, **{k: v for k, v in params.items() if k in train_fields})
        emb = embed(train_kg, model, wc, tc, trial_seed, weights)
        value, _ = link_prediction_auc(emb, split.validation, negs)
        return value

    return objective


# -- bundled 1984 case study --------------------------------------------------

CASE_CONFIGS = (
    ("DeepWalk", "uniform", None),
    ("Node2Vec", "node2vec", None),
    ("Biased RW (default)", "biased", "default"),
    ("Biased RW (genre-emp.)", "biased", "genre"),
    ("Hybrid (default)", "hybrid", "default"),
    ("Hybrid (genre-emp.)", "hybrid", "genre"),
)
CASE_ANCHOR = "1984"


def _data_path(name: str) -> str:
    return str(resources.files("kgrec") / "data" / name)


@dataclass
class CaseStudy:
    anchor: str
    ground_truth: frozenset
    columns: dict  # label -> list of (entity, score)
    recall: dict  # label -> case_recall out of |ground truth|

    def rank_of(self, label: str, entity: str):
        names = [e for e, _ in self.columns[label]]
        return names.index(entity) + 1 if entity in names else None

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor,
            "ground_truth": sorted(self.ground_truth),
            "configurations": {
                label: {"top": [[e, round(s, 6)] for e, s in items], "hits": self.recall[label]}
                for label, items in self.columns.items()
            },
        }

    def format_table(self) -> str:
        """Two three-column halves, ``*`` marking ground-truth matches, then a ``Hits / k`` row."""
        labels = list(self.columns)
        halves = [labels[:3], labels[3:]]
        k = len(self.ground_truth)
        lines = []
        for half in halves:
            if not half:
                continue
            rows = [["Rank", *half]]
            depth = max(len(self.columns[lb]) for lb in half)
            for i in range(depth):
                row = [str(i + 1)]
                for lb in half:
                    items = self.columns[lb]
                    if i < len(items):
                        e = items[i][0]
                        row.append(f"*{e}*" if e in self.ground_truth else e)
                    else:
                        row.append("")
                rows.append(row)
            rows.append([f"Hits / {k}", *(str(self.recall[lb]) for lb in half)])
            widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
            for j, r in enumerate(rows):
                lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
                if j == 0 or j == len(rows) - 2:
                    lines.append("  ".join("-" * w for w in widths))
            lines.append("")
        return "\n".join(lines)


CASE_WALK = WalkConfig(walk_length=40, num_walks=20)
CASE_TRAIN = TrainConfig(dimension=64, window=10, epochs=5)
CASE_NODE2VEC = {"p": 1.0, "q": 4.0}


def case_fixture_report(seed: int = 0, walk: WalkConfig = CASE_WALK, train: TrainConfig = CASE_TRAIN,
                        top_n: int = 10, out_dir=None) -> CaseStudy:
    """Run the six configurations on the bundled 1984 fixture (full graph, no split)."""
    kg = strip_data_properties(read_triples(_data_path("case_1984.tsv")))
    cases = [c for c in read_ground_truth(_data_path("case_1984_ground_truth.tsv")) if c.anchor == CASE_ANCHOR]
    if not cases:
        raise ValidationError("bundled ground truth lacks the 1984 anchor")
    case = cases[0]
    pool = read_pool(_data_path("case_1984_texts.txt"))
    weights = {"default": read_weights(_data_path("weights_default.tsv")),
               "genre": read_weights(_data_path("weights_genre.tsv"))}

    # uniform and biased tables are shared between the plain and hybrid columns
    cache = {}

    def table(model, wname):
        key = (model, wname)
        if key not in cache:
            if model == "hybrid":
                cache[key] = concat_embeddings(table("uniform", None), table("biased", wname))
            else:
                wc = walk if model != "node2vec" else dataclasses.replace(walk, **CASE_NODE2VEC)
                cache[key] = embed(kg, model, wc, train, seed, weights.get(wname))
        return cache[key]

    columns, recall = {}, {}
    for label, model, wname in CASE_CONFIGS:
        rec = recommend(table(model, wname), case.anchor, top_n, pool)
        columns[label] = list(rec.items)
        recall[label] = case_recall(case, rec.entities, top_n)
    study = CaseStudy(case.anchor, case.ground_truth, columns, recall)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_atomic(os.path.join(out_dir, "case_study.txt"), study.format_table())
        write_atomic(os.path.join(out_dir, "case_study.json"), json.dumps(study.to_dict(), indent=2) + "\n")
    return study


__all__ = [
    "CaseStudy",
    "PipelineConfig",
    "case_fixture_report",
    "derive_seed",
    "embed",
    "link_prediction_objective",
    "run_pipeline",
]
