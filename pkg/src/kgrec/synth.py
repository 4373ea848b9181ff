"""Synthetic literature graphs with planted clusters of texts.

Every attribute pool (authors, genres, themes, subthemes) is cut into one
signature slice per cluster followed by a background remainder.  For each
attribute slot a text draws from its cluster's signature with probability
``sharing``, otherwise from the background (or, if there is none, from the
whole pool).  Signature sizes equal the per-text maximum, so texts of a
cluster cover most of its signature.  The default pools are large, so
off-cluster draws land on a long tail of rarely shared attributes, the way
one-off themes do in real catalogues.

With ``literals`` on, records also carry a year, a Lexile level and a
matching qualitative label, and ingestion adds the era and complexity
enrichments.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from kgrec.errors import ValidationError
from kgrec.evaluation import RankingCase, write_ground_truth
from kgrec.graph import TextRecord, ingest_records, write_triples

QUALITATIVE_LABELS = ("slightly complex", "moderately complex", "very complex")


@dataclass(frozen=True)
class SynthSpec:
    n_texts: int = 100
    n_genres: int = 48
    n_themes: int = 500
    n_subthemes: int = 500
    n_authors: int = 500
    genres_per_text: tuple = (1, 2)
    themes_per_text: tuple = (5, 6)
    subthemes_per_text: tuple = (4, 5)
    authors_per_cluster: int = 5
    n_clusters: int = 4
    sharing: float = 0.9
    n_anchors: int | None = None
    literals: bool = False
    seed: int = 0

    def __post_init__(self):
        counts = (self.n_texts, self.n_genres, self.n_themes, self.n_subthemes, self.n_authors, self.n_clusters)
        if any(c < 1 for c in counts):
            raise ValidationError("all counts must be >= 1")
        if not 0.0 <= self.sharing <= 1.0:
            raise ValidationError(f"sharing probability must be in [0, 1], got {self.sharing}")
        if self.n_clusters > self.n_texts:
            raise ValidationError(f"{self.n_clusters} clusters cannot be planted in {self.n_texts} texts")
        if self.n_texts // self.n_clusters < 2:
            raise ValidationError("every cluster needs at least two texts to define ground truth")
        for name in ("genres_per_text", "themes_per_text", "subthemes_per_text"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise ValidationError(f"{name} must be a (min, max) range, got {(lo, hi)}")
        if self.authors_per_cluster < 1:
            raise ValidationError("authors_per_cluster must be >= 1")
        if self.n_anchors is not None and not 1 <= self.n_anchors <= self.n_texts:
            raise ValidationError("n_anchors must be in [1, n_texts]")

    @property
    def mean_attributes_per_text(self) -> float:
        return 1 + sum(sum(getattr(self, n)) / 2 for n in ("genres_per_text", "themes_per_text", "subthemes_per_text"))


@dataclass
class SynthGraph:
    records: list
    triples: list
    clusters: dict  # text id -> cluster index
    cases: list
    texts: list


def _partition(names, n_clusters, size):
    """Signature slice per cluster (wrapping if the pool is short) plus the background rest."""
    size = max(size, 1)
    signatures = [[names[(c * size + i) % len(names)] for i in range(size)] for c in range(n_clusters)]
    background = names[n_clusters * size :] or names
    return signatures, background


def _draw(rng, k, own, background, sharing):
    picked = []
    attempts = 0
    while len(picked) < k and attempts < 50 * (k + 1):
        attempts += 1
        source = own if rng.random() < sharing else background
        choice = source[int(rng.integers(len(source)))]
        if choice not in picked:
            picked.append(choice)
    return picked


def generate(spec: SynthSpec) -> SynthGraph:
    rng = np.random.default_rng(spec.seed)
    pools = {
        "author": [f"Author_{i:03d}" for i in range(spec.n_authors)],
        "genre": [f"Genre_{i:02d}" for i in range(spec.n_genres)],
        "theme": [f"Theme_{i:02d}" for i in range(spec.n_themes)],
        "subtheme": [f"Subtheme_{i:02d}" for i in range(spec.n_subthemes)],
    }
    sizes = {
        "author": spec.authors_per_cluster,
        "genre": spec.genres_per_text[1],
        "theme": spec.themes_per_text[1],
        "subtheme": spec.subthemes_per_text[1],
    }
    parts = {k: _partition(v, spec.n_clusters, sizes[k]) for k, v in pools.items()}
    texts = [f"Text_{i:03d}" for i in range(spec.n_texts)]
    assignment = rng.permutation(np.arange(spec.n_texts) % spec.n_clusters)

    records = []
    clusters = {}
    for text, c in zip(texts, assignment):
        c = int(c)
        clusters[text] = c
        ranges = {"genre": spec.genres_per_text, "theme": spec.themes_per_text, "subtheme": spec.subthemes_per_text}
        drawn = {
            kind: _draw(rng, int(rng.integers(lo, hi + 1)), parts[kind][0][c], parts[kind][1], spec.sharing)
            for kind, (lo, hi) in ranges.items()
        }
        author = _draw(rng, 1, parts["author"][0][c], parts["author"][1], spec.sharing)
        year = lexile = None
        qualitative = {}
        if spec.literals:
            year = int(rng.integers(1600, 2021))
            lexile = int(rng.integers(500, 1441))
            band = 0 if lexile < 925 else 1 if lexile < 1185 else 2
            qualitative = {"levels_of_meaning": QUALITATIVE_LABELS[band]}
        records.append(TextRecord(
            title=text, author=author, year=year, genres=drawn["genre"], themes=drawn["theme"],
            subthemes=drawn["subtheme"], lexile=lexile, qualitative_measures=qualitative,
        ))

    anchors = texts
    if spec.n_anchors is not None:
        anchors = sorted(rng.choice(texts, size=spec.n_anchors, replace=False).tolist())
    cases = [
        RankingCase(a, frozenset(t for t in texts if t != a and clusters[t] == clusters[a]))
        for a in anchors
    ]
    return SynthGraph(records, ingest_records(records), clusters, cases, texts)


def generate_synthetic_kg(spec: SynthSpec, out_dir) -> dict:
    """Write ``triples.tsv``, ``ground_truth.tsv`` and ``texts.txt``; return their paths."""
    g = generate(spec)
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "triples": os.path.join(out_dir, "triples.tsv"),
        "ground_truth": os.path.join(out_dir, "ground_truth.tsv"),
        "pool": os.path.join(out_dir, "texts.txt"),
    }
    header = (
        f"synthetic graph: {spec.n_texts} texts, {spec.n_clusters} clusters, "
        f"sharing={spec.sharing}, seed={spec.seed}"
    )
    write_triples(paths["triples"], g.triples, header=header)
    write_ground_truth(paths["ground_truth"], g.cases)
    with open(paths["pool"], "w", encoding="utf-8") as fh:
        fh.writelines(t + "\n" for t in g.texts)
    return paths
