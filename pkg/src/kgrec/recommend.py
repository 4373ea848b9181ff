"""Cosine-similarity top-n recommendation over an embedding table."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from kgrec.errors import ValidationError
from kgrec.graph import KnowledgeGraph
from kgrec.skipgram import EmbeddingTable

TYPE_PREDICATES = ("isA", "type", "rdf:type")
TEXT_CLASS = "Text"


@dataclass(frozen=True)
class Recommendation:
    anchor: str
    items: tuple  # ((entity, score), ...) best first
    n: int

    @property
    def entities(self) -> list:
        return [e for e, _ in self.items]


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValidationError("cosine is undefined for a zero vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def cosine_scores(emb: EmbeddingTable, anchor: str, candidates: list) -> np.ndarray:
    if anchor not in emb:
        raise KeyError(f"anchor {anchor!r} not in vocabulary")
    vecs = emb.vectors[[emb.vocabulary.index(c) for c in candidates]].astype(np.float64)
    a = emb[anchor].astype(np.float64)
    na = np.linalg.norm(a)
    norms = np.linalg.norm(vecs, axis=1)
    if na == 0 or np.any(norms == 0):
        raise ValidationError("cosine is undefined for a zero vector")
    return np.clip(vecs @ a / (norms * na), -1.0, 1.0)


def recommend(emb: EmbeddingTable, anchor: str, n: int, pool: Iterable[str]) -> Recommendation:
    """Rank ``pool`` minus the anchor by cosine to the anchor; ties go to the smaller identifier."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    if anchor not in emb:
        raise KeyError(f"anchor {anchor!r} not in vocabulary")
    candidates = sorted(c for c in set(pool) if c != anchor and c in emb)
    if not candidates:
        return Recommendation(anchor, (), n)
    scores = cosine_scores(emb, anchor, candidates)
    # candidates are sorted by id, so a stable sort on -score breaks ties by id
    order = np.argsort(-scores, kind="stable")[:n]
    return Recommendation(anchor, tuple((candidates[i], float(scores[i])) for i in order), n)


def text_pool(kg: KnowledgeGraph, text_class: str = TEXT_CLASS) -> set:
    """Entities typed as texts via ``(e, isA|type|rdf:type, Text)`` triples."""
    return {t.subject for t in kg.triples if t.predicate in TYPE_PREDICATES and t.object == text_class}


def read_pool(path) -> set:
    with open(path, encoding="utf-8") as fh:
        return {line.strip() for line in fh if line.strip() and not line.startswith("#")}


def format_recommendation(rec: Recommendation) -> str:
    return "".join(f"{rank}\t{ent}\t{score:.6f}\n" for rank, (ent, score) in enumerate(rec.items, start=1))
