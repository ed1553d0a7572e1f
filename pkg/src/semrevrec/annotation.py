"""Review ingestion, entity annotation and the entity-occurrence index."""

from __future__ import annotations

import json
import logging
import re
import urllib.request
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol

import numpy as np

from .validation import check_iri, strip_brackets

log = logging.getLogger(__name__)

_WORD = re.compile(r"\w+")


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Review:
    review_id: str
    item: str
    text: str = ""
    entities: tuple[str, ...] | None = None

    @property
    def pre_annotated(self) -> bool:
        return self.entities is not None


@dataclass(frozen=True, order=True)
class Mention:
    entity: str
    review_id: str


def ingest_reviews(path: str | Path) -> list[Review]:
    """Read a JSON-lines review corpus.

    Each object needs ``review_id`` and ``item`` plus ``text`` and/or
    ``entities``; reviews with ``entities`` skip the annotator later on.
    """
    reviews = []
    seen = set()
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                review_id = obj["review_id"]
                item = check_iri(strip_brackets(obj["item"]))
                text = obj.get("text") or ""
                entities = obj.get("entities")
                if entities is not None:
                    entities = tuple(check_iri(strip_brackets(e)) for e in entities)
                if not isinstance(review_id, str) or not isinstance(text, str):
                    raise TypeError("review_id and text must be strings")
            except (ValueError, KeyError, TypeError, AttributeError) as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
            if review_id in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate review_id {review_id!r}")
            seen.add(review_id)
            reviews.append(Review(review_id, item, text, entities))
    return reviews


class Annotator(Protocol):
    def annotate(self, review: Review) -> list[Mention]: ...


class Gazetteer:
    """Dictionary annotator: case-insensitive, longest-match, whole words only."""

    def __init__(self, surface_forms: Mapping[str, str]):
        self._forms: dict[tuple[str, ...], str] = {}
        for surface, iri in surface_forms.items():
            key = tuple(w.casefold() for w in _WORD.findall(surface))
            if not key:
                raise ValueError(f"empty surface form: {surface!r}")
            iri = check_iri(iri)
            if self._forms.setdefault(key, iri) != iri:
                raise ValueError(f"surface form {surface!r} maps to two entities")
        self._longest = max((len(k) for k in self._forms), default=0)

    def __len__(self):
        return len(self._forms)

    @classmethod
    def from_file(cls, path: str | Path) -> "Gazetteer":
        forms = {}
        with Path(path).open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                cols = line.split("\t")
                if len(cols) != 2:
                    raise ValueError(f"{path}:{lineno}: expected surface_form<TAB>entity_iri")
                forms[cols[0]] = strip_brackets(cols[1])
        return cls(forms)

    def scan(self, text: str) -> list[tuple[int, int, str]]:
        """Return non-overlapping ``(start, end, entity)`` spans, left to right."""
        tokens = list(_WORD.finditer(text))
        words = [t.group().casefold() for t in tokens]
        spans = []
        i = 0
        while i < len(words):
            for length in range(min(self._longest, len(words) - i), 0, -1):
                iri = self._forms.get(tuple(words[i : i + length]))
                if iri is not None:
                    spans.append((tokens[i].start(), tokens[i + length - 1].end(), iri))
                    i += length
                    break
            else:
                i += 1
        return spans

    def annotate(self, review: Review) -> list[Mention]:
        return annotate_review(review, self)


def annotate_review(review: Review, gazetteer: Gazetteer) -> list[Mention]:
    seen = dict.fromkeys(iri for _, _, iri in gazetteer.scan(review.text))
    return [Mention(iri, review.review_id) for iri in seen]


class ServiceAnnotator:
    """Adapter for an external annotation service.

    The service receives ``{"text": ...}`` as JSON and must answer with a JSON
    list of entity IRIs. ``post`` can be swapped for any callable taking
    ``(url, payload_bytes)`` and returning response bytes.
    """

    def __init__(self, url: str, post: Callable[[str, bytes], bytes] | None = None, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout
        self._post = post or self._urllib_post

    def _urllib_post(self, url: str, payload: bytes) -> bytes:
        req = urllib.request.Request(url, data=payload, headers={"Content-Type": "application/json"})
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            return resp.read()

    def annotate(self, review: Review) -> list[Mention]:
        body = self._post(self.url, json.dumps({"text": review.text}).encode("utf-8"))
        entities = json.loads(body)
        seen = dict.fromkeys(check_iri(strip_brackets(e)) for e in entities)
        return [Mention(e, review.review_id) for e in seen]


def annotate_corpus(reviews: Iterable[Review], annotator: Annotator | None) -> list[Mention]:
    mentions = []
    for review in reviews:
        if review.pre_annotated:
            mentions.extend(Mention(e, review.review_id) for e in dict.fromkeys(review.entities))
        elif annotator is not None:
            mentions.extend(annotator.annotate(review))
        elif review.text:
            raise CorpusError(f"review {review.review_id!r} needs an annotator")
    return mentions


def filter_mentions_by_type(
    mentions: Iterable[Mention], types: Mapping[str, Iterable[str]], allowed_prefix: str
) -> list[Mention]:
    """Keep mentions whose entity has at least one type under ``allowed_prefix``."""
    return [m for m in mentions if any(t.startswith(allowed_prefix) for t in types.get(m.entity, ()))]


def apply_mapping(mentions: Iterable[Mention], table: Mapping[str, str]) -> list[Mention]:
    """Translate mention entities through a sameAs table; unmapped entities are dropped."""
    out = {}
    for m in mentions:
        target = table.get(m.entity)
        if target is not None:
            out[(target, m.review_id)] = None
    return [Mention(e, r) for e, r in out]


class OccurrenceIndex:
    """Review-level occurrence counts of entities per reviewed item."""

    def __init__(self, counts: Mapping[tuple[str, str], int] | None = None):
        by_item: dict[str, dict[str, int]] = defaultdict(dict)
        by_entity: dict[str, dict[str, int]] = defaultdict(dict)
        for (entity, item), n in (counts or {}).items():
            if n < 1:
                continue
            by_item[item][entity] = int(n)
            by_entity[entity][item] = int(n)
        self._by_item = dict(by_item)
        self._by_entity = dict(by_entity)
        self._max = {item: max(ents.values()) for item, ents in self._by_item.items()}

    def count(self, entity: str, item: str) -> int:
        return self._by_item.get(item, {}).get(entity, 0)

    def max_count(self, item: str) -> int:
        return self._max.get(item, 0)

    def entities_of(self, item: str) -> dict[str, int]:
        return self._by_item.get(item, {})

    def items_mentioning(self, entity: str) -> dict[str, int]:
        return self._by_entity.get(entity, {})

    @property
    def counts(self) -> dict[tuple[str, str], int]:
        return {(e, i): n for i, ents in self._by_item.items() for e, n in ents.items()}

    @property
    def items(self) -> list[str]:
        return sorted(self._by_item)

    @property
    def entities(self) -> list[str]:
        return sorted(self._by_entity)

    def __len__(self):
        return sum(len(v) for v in self._by_item.values())

    def __eq__(self, other):
        return isinstance(other, OccurrenceIndex) and self.counts == other.counts

    def __repr__(self):
        return f"OccurrenceIndex({len(self)} entries, {len(self._by_item)} items)"

    def to_tsv(self) -> str:
        rows = sorted((i, e, n) for i, ents in self._by_item.items() for e, n in ents.items())
        return "".join(f"{e}\t{i}\t{n}\n" for i, e, n in rows)

    @classmethod
    def from_tsv(cls, path: str | Path) -> "OccurrenceIndex":
        counts = {}
        with Path(path).open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                cols = line.split("\t")
                if len(cols) != 3:
                    raise ValueError(f"{path}:{lineno}: expected entity<TAB>item<TAB>count")
                counts[(cols[0], cols[1])] = int(cols[2])
        return cls(counts)


def build_index(reviews: Iterable[Review], mentions: Iterable[Mention]) -> OccurrenceIndex:
    """Count, for each (entity, item), the distinct reviews of the item mentioning the entity."""
    item_of = {r.review_id: r.item for r in reviews}
    seen: set[tuple[str, str]] = set()
    counts: dict[tuple[str, str], int] = defaultdict(int)
    for m in mentions:
        try:
            item = item_of[m.review_id]
        except KeyError:
            raise CorpusError(f"mention of {m.entity} refers to unknown review {m.review_id!r}") from None
        if (m.entity, m.review_id) in seen:
            continue
        seen.add((m.entity, m.review_id))
        counts[(m.entity, item)] += 1
    return OccurrenceIndex(counts)


@dataclass
class CorpusStats:
    reviews: int
    items: int
    distinct_entities: int
    total_entities: int
    per_item: dict[str, int] = field(default_factory=dict)
    q1: float | None = None
    median: float | None = None
    q3: float | None = None
    fence_low: float | None = None
    fence_high: float | None = None
    outliers: list[str] = field(default_factory=list)

    def summary_lines(self) -> list[str]:
        def fmt(x):
            return "NA" if x is None else f"{x:g}"

        return [
            f"reviews\t{self.reviews}",
            f"items\t{self.items}",
            f"distinct_entities\t{self.distinct_entities}",
            f"total_entities\t{self.total_entities}",
            f"entities_per_item_q1\t{fmt(self.q1)}",
            f"entities_per_item_median\t{fmt(self.median)}",
            f"entities_per_item_q3\t{fmt(self.q3)}",
            f"outlier_fence\t({fmt(self.fence_low)}; {fmt(self.fence_high)})",
            f"outlier_items\t{len(self.outliers)}",
        ]


def corpus_stats(reviews: Iterable[Review], index: OccurrenceIndex) -> CorpusStats:
    """Corpus size figures plus the distribution of distinct entities per item.

    Items whose entity count lies outside the open interval
    ``(Q1 - 1.5 IQR, Q3 + 1.5 IQR)`` are listed as outliers.
    """
    reviews = list(reviews)
    per_item = {item: len(index.entities_of(item)) for item in index.items}
    stats = CorpusStats(
        reviews=len(reviews),
        items=len({r.item for r in reviews}),
        distinct_entities=len(index.entities),
        total_entities=sum(index.counts.values()),
        per_item=per_item,
    )
    if per_item:
        values = np.array(list(per_item.values()), dtype=float)
        q1, med, q3 = (float(q) for q in np.percentile(values, [25, 50, 75]))
        iqr = q3 - q1
        stats.q1, stats.median, stats.q3 = q1, med, q3
        stats.fence_low, stats.fence_high = q1 - 1.5 * iqr, q3 + 1.5 * iqr
        stats.outliers = sorted(i for i, n in per_item.items() if not stats.fence_low < n < stats.fence_high)
    return stats
