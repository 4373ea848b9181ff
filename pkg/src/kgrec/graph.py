"""Triple storage, record ingestion, the era/complexity axioms, and graph statistics.

The on-disk format is a tab-separated triple file::

    # comment
    1984<TAB>has_genre<TAB>Dystopian_Fiction
    1984<TAB>has_lexile<TAB>1090<TAB>literal
"""
from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from kgrec.errors import ParseError, ValidationError

log = logging.getLogger(__name__)

TRADITIONAL = "Traditional"
CONTEMPORARY = "Contemporary"
ERA_CUTOFF = 1945

SLIGHTLY = "Slightly_Complex"
MODERATELY = "Moderately_Complex"
VERY = "Very_Complex"
EXCEEDINGLY = "Exceedingly_Complex"

HAS_AUTHOR = "has_author"
HAS_GENRE = "has_genre"
HAS_THEME = "has_theme"
HAS_SUBTHEME = "has_subtheme"
HAS_ERA = "hasEra"
HAS_COMPLEXITY = "hasTextComplexity"
HAS_LEXILE = "has_lexile"
HAS_YEAR = "has_year"


@dataclass(frozen=True, order=True)
class Triple:
    subject: str
    predicate: str
    object: str
    is_data_property: bool = False

    def __post_init__(self):
        for name in ("subject", "predicate", "object"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value:
                raise ValidationError(f"triple {name} must be a non-empty string, got {value!r}")


@dataclass(frozen=True)
class KnowledgeGraph:
    """Immutable triple set with entity/predicate sets and an undirected adjacency index.

    Build with :meth:`from_triples`; the constructor expects consistent fields.
    """

    triples: frozenset
    entities: frozenset
    predicates: frozenset
    adjacency: Mapping[str, tuple] = field(repr=False)

    @classmethod
    def from_triples(cls, triples: Iterable[Triple]) -> "KnowledgeGraph":
        triples = frozenset(triples)
        entities = set()
        predicates = set()
        for t in triples:
            entities.add(t.subject)
            predicates.add(t.predicate)
            if not t.is_data_property:
                entities.add(t.object)
        adjacency = {e: [] for e in entities}
        for t in sorted(triples):
            if t.is_data_property:
                continue
            adjacency[t.subject].append((t.predicate, t.object))
            if t.object != t.subject:
                adjacency[t.object].append((t.predicate, t.subject))
        adjacency = {e: tuple(sorted(nbrs)) for e, nbrs in adjacency.items()}
        return cls(triples, frozenset(entities), frozenset(predicates), adjacency)

    def __len__(self):
        return len(self.triples)

    def neighbors(self, entity: str) -> tuple:
        return self.adjacency.get(entity, ())

    @property
    def entity_triples(self) -> list:
        """Entity-valued (object property) triples in canonical sorted order."""
        return sorted(t for t in self.triples if not t.is_data_property)


def normalize_id(name: str) -> str:
    return "_".join(str(name).strip().split(" "))


def parse_triples(source) -> KnowledgeGraph:
    """Parse triple-TSV content (bytes, str, or an open binary/text stream) into a graph."""
    if isinstance(source, (bytes, bytearray)):
        source = io.StringIO(bytes(source).decode("utf-8"))
    elif isinstance(source, str):
        source = io.StringIO(source)
    return KnowledgeGraph.from_triples(iter_triples(source))


def iter_triples(lines: Iterable, extra_column=None):
    """Yield triples from TSV lines. ``extra_column`` names an accepted 4th-field marker."""
    for lineno, raw in enumerate(lines, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (3, 4):
            raise ParseError(f"expected 3 or 4 tab-separated fields, got {len(fields)}", lineno)
        if any(not f for f in fields):
            raise ParseError("empty field", lineno)
        literal = False
        if len(fields) == 4:
            if fields[3] == "literal":
                literal = True
            elif fields[3] != extra_column:
                raise ParseError(f"unknown fourth field {fields[3]!r}", lineno)
        yield Triple(fields[0], fields[1], fields[2], literal)


def read_triples(path) -> KnowledgeGraph:
    with open(path, encoding="utf-8") as fh:
        return KnowledgeGraph.from_triples(iter_triples(fh))


def serialize_triples(triples: Iterable[Triple], header: str | None = None, marker: str | None = None) -> str:
    out = []
    if header:
        out.extend(f"# {h}" for h in header.splitlines())
    for t in sorted(triples):
        cols = [t.subject, t.predicate, t.object]
        if t.is_data_property:
            cols.append("literal")
        elif marker:
            cols.append(marker)
        out.append("\t".join(cols))
    return "\n".join(out) + ("\n" if out else "")


def write_triples(path, triples, header=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_triples(triples, header))


def apply_era_rule(year: int) -> str:
    return TRADITIONAL if year < ERA_CUTOFF else CONTEMPORARY


def apply_complexity_rule(lexile: int, qualitative: Mapping[str, str]) -> str | None:
    """Map a Lexile level plus qualitative labels to a complexity band, or None.

    The two lower bands need a matching qualitative label; the upper two are
    decided by Lexile alone.
    """
    labels = {str(v).strip().lower() for v in qualitative.values()}
    if lexile < 925:
        return SLIGHTLY if "slightly complex" in labels else None
    if lexile < 1185:
        return MODERATELY if "moderately complex" in labels else None
    if lexile < 1335:
        return VERY
    if lexile <= 1440:
        return EXCEEDINGLY
    return None


@dataclass
class TextRecord:
    title: str
    author: str | Sequence[str] = ""
    year: int | None = None
    genres: Sequence[str] = ()
    themes: Sequence[str] = ()
    subthemes: Sequence[str] = ()
    lexile: int | None = None
    qualitative_measures: Mapping[str, str] = field(default_factory=dict)
    attributes: Mapping[str, str | Sequence[str]] = field(default_factory=dict)

    def validate(self):
        if not isinstance(self.title, str) or not self.title.strip():
            raise ValidationError(f"record {self.title!r}: field 'title' must be non-empty")
        if self.year is not None and (not isinstance(self.year, int) or self.year <= 0):
            raise ValidationError(f"record {self.title!r}: field 'year' must be a positive integer")
        if self.lexile is not None and (not isinstance(self.lexile, int) or self.lexile < 0):
            raise ValidationError(f"record {self.title!r}: field 'lexile' must be a non-negative integer")

    @classmethod
    def from_dict(cls, d: Mapping) -> "TextRecord":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"record {d.get('title')!r}: unknown fields {sorted(unknown)}")
        rec = cls(**d)
        for name in ("genres", "themes", "subthemes"):
            setattr(rec, name, tuple(getattr(rec, name) or ()))
        return rec

    @property
    def authors(self) -> tuple:
        if isinstance(self.author, str):
            return (self.author,) if self.author.strip() else ()
        return tuple(self.author)


def ingest_records(records: Sequence[TextRecord]) -> list:
    """Turn text records into triples, including the era and complexity enrichments."""
    out = []
    seen = set()

    def emit(s, p, o, literal=False):
        t = Triple(s, p, o, literal)
        if t not in seen:
            seen.add(t)
            out.append(t)

    for rec in records:
        rec.validate()
        text = normalize_id(rec.title)
        for a in rec.authors:
            emit(text, HAS_AUTHOR, normalize_id(a))
        for pred, labels in ((HAS_GENRE, rec.genres), (HAS_THEME, rec.themes), (HAS_SUBTHEME, rec.subthemes)):
            for label in labels:
                emit(text, pred, normalize_id(label))
        for measure, label in rec.qualitative_measures.items():
            emit(text, f"has_{normalize_id(measure)}", normalize_id(label))
        for pred, value in rec.attributes.items():
            values = [value] if isinstance(value, str) else list(value)
            for v in values:
                emit(text, pred, normalize_id(v))
        if rec.year is not None:
            emit(text, HAS_YEAR, str(rec.year), literal=True)
            emit(text, HAS_ERA, apply_era_rule(rec.year))
        if rec.lexile is not None:
            emit(text, HAS_LEXILE, str(rec.lexile), literal=True)
            band = apply_complexity_rule(rec.lexile, rec.qualitative_measures)
            if band is None:
                log.warning("no complexity band for %r (lexile %d)", rec.title, rec.lexile)
            else:
                emit(text, HAS_COMPLEXITY, band)
    return out


def read_records(path) -> list:
    """Read one JSON object per line into TextRecords."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(TextRecord.from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
    return records


def strip_data_properties(kg: KnowledgeGraph) -> KnowledgeGraph:
    return KnowledgeGraph.from_triples(t for t in kg.triples if not t.is_data_property)


def graph_stats(kg: KnowledgeGraph) -> dict:
    n_entity_valued = sum(1 for t in kg.triples if not t.is_data_property)
    n_entities = len(kg.entities)
    avg = round(n_entity_valued / n_entities, 2) if n_entities else 0.0
    return {
        "triples_with_literals": len(kg.triples),
        "triples_without_literals": n_entity_valued,
        "unique_entities": n_entities,
        "object_properties": len({t.predicate for t in kg.triples if not t.is_data_property}),
        "data_properties": len({t.predicate for t in kg.triples if t.is_data_property}),
        "avg_relationships_per_entity": avg,
    }
