"""Filtered head/tail corruption of positive triples."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from kgrec.errors import ParseError, RetryExhaustedError, ValidationError
from kgrec.graph import KnowledgeGraph, Triple, iter_triples

MAX_ATTEMPTS = 1000


class Side(str, enum.Enum):
    HEAD = "head"
    TAIL = "tail"


@dataclass(frozen=True)
class CorruptedTriple:
    triple: Triple
    corrupted_side: Side
    source: Triple


def _typed_pools(positives):
    heads, tails = {}, {}
    for t in positives:
        heads.setdefault(t.predicate, set()).add(t.subject)
        tails.setdefault(t.predicate, set()).add(t.object)
    return ({k: sorted(v) for k, v in heads.items()}, {k: sorted(v) for k, v in tails.items()})


def sample_negatives(
    kg: KnowledgeGraph,
    positives: Iterable[Triple],
    count: int,
    seed: int = 0,
    sources: Sequence[Triple] | None = None,
    type_aware: bool = False,
) -> list:
    """Draw ``count`` corrupted triples absent from ``positives`` and from each other.

    Sources are visited in order (cycling) and default to the sorted entity-valued
    positives.  Replacements come uniformly from ``kg.entities``, or, with
    ``type_aware``, from entities seen in the same position of the same predicate.
    """
    if count < 0:
        raise ValidationError("count must be non-negative")
    if count == 0:
        return []
    positives = frozenset(positives)
    if sources is None:
        sources = sorted(t for t in positives if not t.is_data_property)
    if not sources:
        raise ValidationError("no source triples to corrupt")
    entities = sorted(kg.entities)
    if len(entities) < 2:
        raise ValidationError("negative sampling needs at least two entities")
    head_pool = tail_pool = None
    if type_aware:
        head_pool, tail_pool = _typed_pools(positives)

    rng = np.random.default_rng(seed)
    out = []
    seen = set()
    for i in range(count):
        src = sources[i % len(sources)]
        for _ in range(MAX_ATTEMPTS):
            side = Side.HEAD if rng.random() < 0.5 else Side.TAIL
            if type_aware:
                pool = (head_pool if side is Side.HEAD else tail_pool).get(src.predicate, entities)
            else:
                pool = entities
            repl = pool[int(rng.integers(len(pool)))]
            if side is Side.HEAD:
                cand = Triple(repl, src.predicate, src.object)
            else:
                cand = Triple(src.subject, src.predicate, repl)
            if cand in positives or cand in seen:
                continue
            seen.add(cand)
            out.append(CorruptedTriple(cand, side, src))
            break
        else:
            raise RetryExhaustedError(
                f"no novel corruption of {src} after {MAX_ATTEMPTS} attempts "
                f"({len(out)} of {count} negatives produced)",
                partial=out,
            )
    return out


def write_negatives(path, negatives):
    with open(path, "w", encoding="utf-8") as fh:
        for n in negatives:
            t = n.triple
            fh.write(f"{t.subject}\t{t.predicate}\t{t.object}\tneg\n")


def read_negatives(path) -> list:
    """Read a triple-TSV file whose rows carry a trailing ``neg`` column."""
    with open(path, encoding="utf-8") as fh:
        triples = list(iter_triples(fh, extra_column="neg"))
    if any(t.is_data_property for t in triples):
        raise ParseError("negative triples cannot be literals")
    return triples
