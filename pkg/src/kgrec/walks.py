"""Random-walk corpus generation: uniform, relation-weighted, and node2vec (p, q).

Every start node gets its own random stream derived from ``(seed, index)``, where
``index`` is the start node's position in sorted entity order.  Walks are
emitted start node by start node, so the corpus does not depend on the number
of workers.
"""
from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Mapping, Sequence

import numpy as np

from kgrec.errors import ConfigError, ParseError, ValidationError
from kgrec.graph import KnowledgeGraph


class Strategy(str, enum.Enum):
    UNIFORM = "uniform"
    BIASED = "biased"
    NODE2VEC = "node2vec"


@dataclass(frozen=True)
class RelationWeights:
    weights: Mapping[str, float]

    def __post_init__(self):
        if not self.weights:
            raise ConfigError("relation weights must not be empty")
        for pred, w in self.weights.items():
            if not w > 0:
                raise ConfigError(f"weight for {pred!r} must be positive, got {w}")

    @property
    def default_weight(self) -> float:
        return min(self.weights.values())

    def get(self, predicate: str) -> float:
        return self.weights.get(predicate, self.default_weight)


def read_weights(path) -> RelationWeights:
    """Read ``predicate<TAB>weight`` lines."""
    weights = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError("expected 'predicate<TAB>weight'", lineno)
            try:
                weights[parts[0]] = float(parts[1])
            except ValueError as exc:
                raise ParseError(f"bad weight {parts[1]!r}", lineno) from exc
    return RelationWeights(weights)


def write_weights(path, weights: RelationWeights):
    with open(path, "w", encoding="utf-8") as fh:
        for pred, w in sorted(weights.weights.items()):
            fh.write(f"{pred}\t{w:g}\n")


@dataclass(frozen=True)
class WalkConfig:
    strategy: Strategy = Strategy.UNIFORM
    walk_length: int = 80
    num_walks: int = 10
    p: float = 1.0
    q: float = 1.0
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.walk_length < 1 or self.num_walks < 1:
            raise ConfigError("walk_length and num_walks must be >= 1")
        if self.strategy is Strategy.NODE2VEC and not (self.p > 0 and self.q > 0):
            raise ConfigError(f"p and q must be positive, got p={self.p}, q={self.q}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


def _draw(cum: Sequence[float], u: float) -> int:
    # u in [0, 1); cum is an increasing cumulative weight list
    i = bisect.bisect_right(cum, u * cum[-1])
    return min(i, len(cum) - 1)


def weighted_choice(neighbors: Sequence[tuple], weights: RelationWeights, rng: np.random.Generator) -> str:
    """Pick a neighbor with probability proportional to its relation's weight."""
    if not neighbors:
        raise ValidationError("weighted_choice needs at least one neighbor")
    cum = list(accumulate(weights.get(pred) for pred, _ in neighbors))
    return neighbors[_draw(cum, rng.random())][1]


def node2vec_weights(prev, neighbors, p, q, kg: KnowledgeGraph) -> list:
    """Unnormalized second-order weights for stepping from ``curr`` given ``prev``."""
    prev_adjacent = {n for _, n in kg.neighbors(prev)}
    out = []
    for _, x in neighbors:
        if x == prev:
            out.append(1.0 / p)
        elif x in prev_adjacent:
            out.append(1.0)
        else:
            out.append(1.0 / q)
    return out


def node2vec_step(prev, curr, neighbors, p, q, kg, rng) -> str:
    if not (p > 0 and q > 0):
        raise ConfigError(f"p and q must be positive, got p={p}, q={q}")
    if not neighbors:
        raise ValidationError("node2vec_step needs at least one neighbor")
    if prev is None:
        return neighbors[int(rng.integers(len(neighbors)))][1]
    cum = list(accumulate(node2vec_weights(prev, neighbors, p, q, kg)))
    return neighbors[_draw(cum, rng.random())][1]


@dataclass
class _Transitions:
    """Cached cumulative transition tables for one graph and config."""

    kg: KnowledgeGraph
    config: WalkConfig
    weights: RelationWeights | None
    first: dict = field(default_factory=dict)
    second: dict = field(default_factory=dict)

    def first_order(self, node):
        table = self.first.get(node)
        if table is None:
            nbrs = self.kg.neighbors(node)
            if self.config.strategy is Strategy.BIASED:
                cum = list(accumulate(self.weights.get(pred) for pred, _ in nbrs))
            else:
                cum = list(range(1, len(nbrs) + 1))
            table = self.first[node] = ([n for _, n in nbrs], cum)
        return table

    def second_order(self, prev, node):
        key = (prev, node)
        table = self.second.get(key)
        if table is None:
            nbrs = self.kg.neighbors(node)
            cum = list(accumulate(node2vec_weights(prev, nbrs, self.config.p, self.config.q, self.kg)))
            table = self.second[key] = ([n for _, n in nbrs], cum)
        return table


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _walks_from(start, index, trans: _Transitions) -> list:
    config = trans.config
    rng = _stream(config.seed, index)
    walks = []
    node2vec = config.strategy is Strategy.NODE2VEC
    for _ in range(config.num_walks):
        us = rng.random(config.walk_length)
        walk = [start]
        prev = None
        for i in range(1, config.walk_length):
            curr = walk[-1]
            if node2vec and prev is not None:
                nodes, cum = trans.second_order(prev, curr)
            else:
                nodes, cum = trans.first_order(curr)
            if not nodes:
                break
            walk.append(nodes[_draw(cum, us[i])])
            prev = curr
        walks.append(walk)
    return walks


def _walks_chunk(args):
    kg, config, weights, chunk = args
    trans = _Transitions(kg, config, weights)
    return [_walks_from(start, idx, trans) for idx, start in chunk]


def generate_walks(kg: KnowledgeGraph, config: WalkConfig, weights: RelationWeights | None = None) -> list:
    """Return ``num_walks`` walks per entity, ordered by start node then walk index."""
    if config.strategy is Strategy.BIASED and weights is None:
        raise ConfigError("biased strategy requires relation weights")
    if any(t.is_data_property for t in kg.triples):
        raise ValidationError("strip data properties before generating walks")
    starts = list(enumerate(sorted(kg.entities)))
    if not starts:
        return []
    if config.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        chunks = [starts[i :: config.workers] for i in range(config.workers)]
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_walks_chunk, [(kg, config, weights, c) for c in chunks]))
        by_index = {}
        for chunk, res in zip(chunks, results):
            for (idx, _), walks in zip(chunk, res):
                by_index[idx] = walks
        per_start = [by_index[i] for i in range(len(starts))]
    else:
        per_start = _walks_chunk((kg, config, weights, starts))
    return [w for walks in per_start for w in walks]


def write_corpus(path, corpus):
    with open(path, "w", encoding="utf-8") as fh:
        for walk in corpus:
            if any(len(e.split()) != 1 for e in walk):
                raise ValidationError("entity identifiers in a corpus must not contain whitespace")
            fh.write(" ".join(walk))
            fh.write("\n")


def read_corpus(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [line.split() for line in fh if line.strip()]
