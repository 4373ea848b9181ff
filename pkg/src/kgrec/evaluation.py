"""Edge splitting, triple scoring, and link-prediction / ranking metrics."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from kgrec.errors import ParseError, ValidationError
from kgrec.graph import KnowledgeGraph, Triple
from kgrec.recommend import recommend
from kgrec.skipgram import EmbeddingTable

METRIC_KEYS = ("AUC", "Hits@1", "Hits@3", "Hits@5", "Hits@10", "MRR", "nDCG@10")
RANK_KS = (1, 3, 5, 10)


@dataclass(frozen=True)
class EdgeSplit:
    train: tuple
    validation: tuple
    test: tuple

    def __post_init__(self):
        a, b, c = set(self.train), set(self.validation), set(self.test)
        if a & b or a & c or b & c:
            raise ValidationError("split parts overlap")

    @property
    def sizes(self):
        return len(self.train), len(self.validation), len(self.test)


def split_sizes(n: int, ratios=(0.8, 0.1, 0.1)) -> tuple:
    """Floor the train and validation shares; the test part takes the remainder."""
    fr = [Fraction(r).limit_denominator(10**6) for r in ratios]
    if len(fr) != 3 or sum(fr) != 1 or any(r < 0 for r in fr):
        raise ValidationError(f"ratios must be three non-negative values summing to 1, got {ratios}")
    n_train = math.floor(n * fr[0])
    n_val = math.floor(n * fr[1])
    return n_train, n_val, n - n_train - n_val


def split_edges(kg: KnowledgeGraph, ratios=(0.8, 0.1, 0.1), seed: int = 0) -> EdgeSplit:
    edges = kg.entity_triples
    if len(edges) < 3:
        raise ValidationError(f"need at least 3 entity-valued triples to split, got {len(edges)}")
    n_train, n_val, _ = split_sizes(len(edges), ratios)
    perm = np.random.default_rng(seed).permutation(len(edges))
    shuffled = [edges[i] for i in perm]
    return EdgeSplit(
        tuple(sorted(shuffled[:n_train])),
        tuple(sorted(shuffled[n_train : n_train + n_val])),
        tuple(sorted(shuffled[n_train + n_val :])),
    )


@dataclass(frozen=True)
class RankingCase:
    anchor: str
    ground_truth: frozenset

    def __post_init__(self):
        object.__setattr__(self, "ground_truth", frozenset(self.ground_truth))
        if not self.ground_truth:
            raise ValidationError(f"case {self.anchor!r} has an empty ground truth")
        if self.anchor in self.ground_truth:
            raise ValidationError(f"case {self.anchor!r} lists its anchor as ground truth")


def read_ground_truth(path) -> list:
    """Parse ``anchor<TAB>gt1,gt2,...`` lines."""
    cases = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0]:
                raise ParseError("expected 'anchor<TAB>comma-separated ids'", lineno)
            gt = [g.strip() for g in parts[1].split(",") if g.strip()]
            try:
                cases.append(RankingCase(parts[0], frozenset(gt)))
            except ValidationError as exc:
                raise ParseError(str(exc), lineno) from exc
    return cases


def write_ground_truth(path, cases):
    with open(path, "w", encoding="utf-8") as fh:
        for c in cases:
            fh.write(f"{c.anchor}\t{','.join(sorted(c.ground_truth))}\n")


# -- scoring ------------------------------------------------------------------


def score_triple(emb: EmbeddingTable, triple: Triple, method: str = "cosine") -> float:
    for ent in (triple.subject, triple.object):
        if ent not in emb:
            raise KeyError(f"unknown entity {ent!r}")
    h = emb[triple.subject].astype(np.float64)
    t = emb[triple.object].astype(np.float64)
    if method == "dot":
        return float(h @ t)
    if method != "cosine":
        raise ValidationError(f"unknown scoring method {method!r}")
    nh, nt = np.linalg.norm(h), np.linalg.norm(t)
    if nh == 0 or nt == 0:
        raise ValidationError("cosine is undefined for a zero vector")
    return float(np.clip(h @ t / (nh * nt), -1.0, 1.0))


# -- metrics ------------------------------------------------------------------


def auc(pos_scores: Sequence[float], neg_scores: Sequence[float]) -> float:
    """P(positive > negative) with ties counted as one half, via the rank-sum statistic."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValidationError("auc needs at least one positive and one negative score")
    ranks = rankdata(np.concatenate([pos, neg]))
    # average ranks are multiples of 1/2, so doubling keeps the statistic integral
    u2 = 2.0 * ranks[: pos.size].sum() - pos.size * (pos.size + 1)
    return float(u2 / (2.0 * pos.size * neg.size))


def _check(cases, rankings):
    if len(cases) != len(rankings):
        raise ValidationError(f"{len(cases)} cases but {len(rankings)} rankings")
    if not cases:
        raise ValidationError("no ranking cases")
    for case, ranking in zip(cases, rankings):
        if len(ranking) == 0:
            raise ValidationError(f"case {case.anchor!r} has an empty ranking")


def _first_hit(case, ranking):
    for i, item in enumerate(ranking, start=1):
        if item in case.ground_truth:
            return i
    return None


def hits_at_k(cases, rankings, k: int) -> float:
    """Fraction of cases with at least one ground-truth item in the top k."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    _check(cases, rankings)
    hits = sum(1 for c, r in zip(cases, rankings) if any(x in c.ground_truth for x in r[:k]))
    return hits / len(cases)


def mrr(cases, rankings) -> float:
    _check(cases, rankings)
    total = 0.0
    for c, r in zip(cases, rankings):
        rank = _first_hit(c, r)
        if rank is not None:
            total += 1.0 / rank
    return total / len(cases)


def _dcg(rels) -> float:
    return sum(rel / math.log2(i + 1) for i, rel in enumerate(rels, start=1))


def ndcg_at_k(cases, rankings, k: int) -> float:
    if k < 1:
        raise ValidationError("k must be >= 1")
    _check(cases, rankings)
    total = 0.0
    for c, r in zip(cases, rankings):
        rels = [1 if x in c.ground_truth else 0 for x in r]
        ideal = _dcg(sorted(rels, reverse=True)[:k])
        if ideal > 0:
            total += _dcg(rels[:k]) / ideal
    return total / len(cases)


def case_recall(case: RankingCase, ranking, k: int = 10) -> int:
    """Number of ground-truth items recovered in the top k (the per-anchor 'Hits / 5' display)."""
    return sum(1 for x in ranking[:k] if x in case.ground_truth)


# -- reports ------------------------------------------------------------------


@dataclass
class EvalReport:
    metrics: Mapping[str, float]
    provenance: Mapping[str, object] = field(default_factory=dict)
    skipped: int = 0

    def __post_init__(self):
        for name, value in self.metrics.items():
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"metric {name} = {value} outside [0, 1]")

    def to_dict(self) -> dict:
        body = {k: self.metrics[k] for k in METRIC_KEYS if k in self.metrics}
        body.update({k: v for k, v in self.metrics.items() if k not in body})
        return {**body, "provenance": dict(self.provenance), "skipped": self.skipped}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def csv_row(self) -> str:
        prov = [str(self.provenance.get(k, "")) for k in ("model", "dataset", "weights", "seed")]
        return ",".join(prov + [f"{self.metrics[k]:.4f}" for k in METRIC_KEYS if k in self.metrics])


def rank_cases(emb: EmbeddingTable, cases, pool):
    """Full candidate ranking per case, plus the number of unrankable cases.

    A case whose anchor is missing from the table (or whose pool is empty) gets
    a placeholder ranking that matches nothing, so it scores 0 everywhere.
    """
    rankings, skipped = [], 0
    pool = [p for p in pool if p in emb]
    for case in cases:
        ranking = []
        if case.anchor in emb:
            ranking = recommend(emb, case.anchor, max(len(pool), 1), pool).entities
        if not ranking:
            skipped += 1
            ranking = [None]
        rankings.append(ranking)
    return rankings, skipped


def link_prediction_auc(emb, positives, negatives, method="cosine"):
    """AUC of positives against negatives, skipping triples with unknown entities."""
    skipped = 0

    def scores(triples):
        nonlocal skipped
        out = []
        for t in triples:
            if t.subject in emb and t.object in emb:
                out.append(score_triple(emb, t, method))
            else:
                skipped += 1
        return out

    pos, neg = scores(positives), scores(negatives)
    return auc(pos, neg), skipped


def ranking_metrics(cases, rankings) -> dict:
    out = {}
    for k in RANK_KS:
        out[f"Hits@{k}"] = hits_at_k(cases, rankings, k) if cases else 0.0
    out["MRR"] = mrr(cases, rankings) if cases else 0.0
    out["nDCG@10"] = ndcg_at_k(cases, rankings, 10) if cases else 0.0
    return out


def evaluate(emb: EmbeddingTable, split: EdgeSplit, negatives, cases, pool, provenance=None,
             method="cosine") -> EvalReport:
    """Test-split AUC plus Hits@{1,3,5,10}, MRR and nDCG@10 over ranking cases.

    Triples or anchors missing from the table are tallied in ``skipped``;
    unrankable cases still count (as misses) in the ranking denominators.
    """
    neg_triples = [getattr(n, "triple", n) for n in negatives]
    auc_value, skipped = link_prediction_auc(emb, split.test, neg_triples, method)
    rankings, skipped_cases = rank_cases(emb, cases, pool)
    metrics = {"AUC": auc_value}
    metrics.update(ranking_metrics(list(cases), rankings))
    return EvalReport(metrics, dict(provenance or {}), skipped + skipped_cases)
