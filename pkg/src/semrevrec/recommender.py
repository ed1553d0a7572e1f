"""Candidate generation, R1/R2/R3 ranking and per-user aggregation."""

from __future__ import annotations

import enum
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .annotation import OccurrenceIndex
from .kg import DiscoveryRecord, Graph, LdsdCache
from .validation import check_positive_int, check_ratings

log = logging.getLogger(__name__)

RANKINGS = ("R1", "R2", "R3")


class ConfigurationError(ValueError):
    pass


class Origin(enum.Enum):
    ANNOTATED = "annotated"
    DISCOVERED = "discovered"


@dataclass(frozen=True)
class RecConfig:
    """One row of the configuration grid."""

    ranking: str = "R1"
    use_discovered: bool = False
    occurrence_threshold: float = 0.05
    alpha: float = 0.5
    eta: float | None = None
    kappa: float | None = None

    def __post_init__(self):
        ranking = str(self.ranking).upper()
        object.__setattr__(self, "ranking", ranking)
        if ranking not in RANKINGS:
            raise ConfigurationError(f"ranking must be one of {RANKINGS}, got {self.ranking!r}")
        if not 0.0 <= self.occurrence_threshold <= 1.0:
            raise ConfigurationError(f"occurrence_threshold must lie in [0, 1], got {self.occurrence_threshold}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1], got {self.alpha}")
        if ranking == "R3":
            if self.eta is None or self.kappa is None:
                raise ConfigurationError("R3 needs both eta and kappa")
            if self.eta < 0 or self.kappa < 0:
                raise ConfigurationError("eta and kappa must be non-negative")
            if self.unbounded:
                log.warning("eta + kappa = %g > 1: R3 scores may exceed 1", self.eta + self.kappa)

    @property
    def unbounded(self) -> bool:
        return self.ranking == "R3" and self.eta + self.kappa > 1.0 + 1e-12


TABLE2: dict[str, RecConfig] = {
    "C1": RecConfig("R1", False, 0.05),
    "C2": RecConfig("R1", True, 0.05),
    "C3": RecConfig("R2", False, 0.05),
    "C4": RecConfig("R2", True, 0.05),
    "C5": RecConfig("R3", False, 0.05, eta=0.50, kappa=0.50),
    "C6": RecConfig("R3", True, 0.05, eta=0.50, kappa=0.50),
    "C7": RecConfig("R3", True, 0.05, eta=0.75, kappa=0.25),
    "C8": RecConfig("R3", True, 0.05, eta=0.25, kappa=0.75),
}


@dataclass(frozen=True)
class Candidate:
    entity: str
    origin: Origin
    occurrence: int
    source: str | None = None
    ldsd_to_source: float | None = None
    ldsd_to_initial: float | None = None

    def __post_init__(self):
        if self.occurrence < 1:
            raise ValueError(f"candidate {self.entity} has occurrence {self.occurrence}")
        if (self.origin is Origin.DISCOVERED) != (self.source is not None):
            raise ValueError(f"candidate {self.entity}: source must be set iff discovered")


@dataclass(frozen=True)
class ScoredList:
    """Ranked ``(entity, score)`` pairs, score descending then IRI ascending.

    For per-user lists ``initial_item`` holds the user id.
    """

    initial_item: str
    entries: tuple[tuple[str, float], ...] = ()

    @classmethod
    def from_scores(cls, initial_item: str, scores: dict[str, float]) -> "ScoredList":
        return cls(initial_item, tuple(sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))))

    def top(self, n: int) -> "ScoredList":
        return ScoredList(self.initial_item, self.entries[:n])

    @property
    def items(self) -> list[str]:
        return [e for e, _ in self.entries]

    def as_dict(self) -> dict[str, float]:
        return dict(self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[str, float]]:
        return iter(self.entries)


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    liked_items: frozenset[str]
    rated_items: frozenset[str] = field(default=frozenset())

    def __post_init__(self):
        object.__setattr__(self, "liked_items", frozenset(self.liked_items))
        object.__setattr__(self, "rated_items", frozenset(self.rated_items) | self.liked_items)


class DiscoveryStore:
    """Discovery records indexed by source and by discovered entity."""

    def __init__(self, records: Iterable[DiscoveryRecord] = ()):
        self.records = sorted(set(records))
        self._by_source: dict[str, list[DiscoveryRecord]] = defaultdict(list)
        self._by_discovered: dict[str, list[DiscoveryRecord]] = defaultdict(list)
        for r in self.records:
            self._by_source[r.source].append(r)
            self._by_discovered[r.discovered].append(r)

    @classmethod
    def coerce(cls, records) -> "DiscoveryStore":
        if isinstance(records, cls):
            return records
        return cls(records or ())

    def from_source(self, source: str) -> list[DiscoveryRecord]:
        return self._by_source.get(source, [])

    def reaching(self, discovered: str) -> list[DiscoveryRecord]:
        return self._by_discovered.get(discovered, [])

    def __len__(self):
        return len(self.records)


def occur(entity: str, initial_item: str, index: OccurrenceIndex) -> int:
    """Reviews of the initial item mentioning ``entity`` plus reviews of ``entity`` mentioning it."""
    return index.count(entity, initial_item) + index.count(initial_item, entity)


def occurrence_cutoff(threshold: float, max_occurrence: int) -> int:
    # rounding guards against products such as 0.05 * 60 landing just above an integer
    return math.ceil(round(threshold * max_occurrence, 9))


def _path_key(path: tuple[str, float | None, int]):
    source, ldsd, occurrence = path
    return (ldsd is None, ldsd if ldsd is not None else 0.0, -occurrence, source)


def generate_candidates(
    initial_item: str,
    index: OccurrenceIndex,
    discoveries: DiscoveryStore | Iterable[DiscoveryRecord] = (),
    config: RecConfig = RecConfig(),
) -> list[Candidate]:
    """Build the thresholded candidate set for ``initial_item``, sorted by entity.

    Annotated candidates are the entities mentioned in the item's reviews and
    the items whose reviews mention it. With discovery enabled, entities
    discovered through the item, entities the item was discovered through,
    and entities discovered through its annotated entities join as Discovered
    candidates. A discovered entity found along several paths keeps the one
    with the smallest LDSD to its source.
    """
    annotated: dict[str, int] = {}
    for entity in index.entities_of(initial_item):
        annotated[entity] = occur(entity, initial_item, index)
    for item in index.items_mentioning(initial_item):
        annotated[item] = occur(item, initial_item, index)
    annotated.pop(initial_item, None)

    discovered: dict[str, tuple[str, float | None, int]] = {}
    if config.use_discovered:
        store = DiscoveryStore.coerce(discoveries)
        paths: list[tuple[str, tuple[str, float | None, int]]] = []
        # a direct graph link to the seed counts as the seed's strongest evidence
        seed_occ = max(index.max_count(initial_item), 1)
        for r in store.from_source(initial_item):
            paths.append((r.discovered, (initial_item, r.ldsd, seed_occ)))
        for r in store.reaching(initial_item):
            paths.append((r.source, (initial_item, r.ldsd, seed_occ)))
        for entity in index.entities_of(initial_item):
            occ = occur(entity, initial_item, index)
            for r in store.from_source(entity):
                paths.append((r.discovered, (entity, r.ldsd, occ)))
        for entity, path in paths:
            if entity == initial_item or entity in annotated:
                continue
            best = discovered.get(entity)
            if best is None or _path_key(path) < _path_key(best):
                discovered[entity] = path

    cutoff = occurrence_cutoff(config.occurrence_threshold, index.max_count(initial_item))
    out = [Candidate(e, Origin.ANNOTATED, occ) for e, occ in annotated.items() if occ >= cutoff]
    out += [
        Candidate(e, Origin.DISCOVERED, occ, source=src, ldsd_to_source=ldsd)
        for e, (src, ldsd, occ) in discovered.items()
        if occ >= cutoff
    ]
    return sorted(out, key=lambda c: c.entity)


def _r1_scores(candidates: list[Candidate], config: RecConfig) -> dict[str, float]:
    top = max(c.occurrence for c in candidates)
    scores = {}
    for c in candidates:
        alpha = 1.0 if c.origin is Origin.ANNOTATED else config.alpha
        scores[c.entity] = alpha * c.occurrence / top
    return scores


def _r2_scores(candidates: list[Candidate], config: RecConfig) -> dict[str, float]:
    scores = _r1_scores(candidates, config)
    for c in candidates:
        if c.origin is Origin.DISCOVERED:
            if c.ldsd_to_source is None:
                raise ConfigurationError(
                    f"discovered entity {c.entity} has no precomputed LDSD to {c.source}; "
                    "rerun discovery with LDSD enabled"
                )
            scores[c.entity] = 0.5 * scores[c.entity] + 0.5 * (1.0 - c.ldsd_to_source)
    return scores


def rank_r1(candidates: Iterable[Candidate], initial_item: str, config: RecConfig) -> ScoredList:
    candidates = list(candidates)
    if not candidates:
        return ScoredList(initial_item)
    return ScoredList.from_scores(initial_item, _r1_scores(candidates, config))


def rank_r2(candidates: Iterable[Candidate], initial_item: str, config: RecConfig) -> ScoredList:
    candidates = list(candidates)
    if not candidates:
        return ScoredList(initial_item)
    return ScoredList.from_scores(initial_item, _r2_scores(candidates, config))


def rank_r3(
    candidates: Iterable[Candidate],
    initial_item: str,
    config: RecConfig,
    graph: Graph | LdsdCache | None = None,
) -> ScoredList:
    """R2 blended with graph proximity to the initial item.

    The LDSD to the initial item comes from ``candidate.ldsd_to_initial`` when
    present, otherwise it is computed from ``graph`` (a graph or a shared cache).
    """
    candidates = list(candidates)
    if not candidates:
        return ScoredList(initial_item)
    if config.eta is None or config.kappa is None:
        raise ConfigurationError("R3 needs both eta and kappa")
    cache = LdsdCache(graph) if isinstance(graph, Graph) else graph
    scores = _r2_scores(candidates, config)
    for c in candidates:
        ldsd = c.ldsd_to_initial
        if ldsd is None:
            if cache is None:
                raise ConfigurationError(f"no graph to compute LDSD between {c.entity} and {initial_item}")
            ldsd = cache.get(c.entity, initial_item)
        scores[c.entity] = config.eta * scores[c.entity] + config.kappa * (1.0 - ldsd)
    return ScoredList.from_scores(initial_item, scores)


def rank(candidates, initial_item: str, config: RecConfig, graph=None) -> ScoredList:
    if config.ranking == "R1":
        return rank_r1(candidates, initial_item, config)
    if config.ranking == "R2":
        return rank_r2(candidates, initial_item, config)
    return rank_r3(candidates, initial_item, config, graph)


def recommend(
    initial_item: str,
    n: int | None,
    config: RecConfig,
    index: OccurrenceIndex,
    discoveries=(),
    graph: Graph | LdsdCache | None = None,
) -> ScoredList:
    """Top-``n`` recommendations for one seed item (``n=None`` keeps the full list)."""
    candidates = generate_candidates(initial_item, index, discoveries, config)
    ranked = rank(candidates, initial_item, config, graph)
    return ranked if n is None else ranked.top(check_positive_int(n, "n"))


def aggregate_for_user(
    profile: UserProfile, seed_lists: dict[str, ScoredList], n: int | None, catalogue=None
) -> ScoredList:
    """Sum per-seed scores over the liked items, dropping rated and off-catalogue items."""
    totals: dict[str, float] = defaultdict(float)
    for seed in sorted(profile.liked_items):
        lst = seed_lists.get(seed)
        if lst is None:
            continue
        for entity, score in lst:
            if entity in profile.rated_items or (catalogue is not None and entity not in catalogue):
                continue
            totals[entity] += score
    ranked = ScoredList.from_scores(profile.user_id, totals)
    return ranked if n is None else ranked.top(n)


def recommend_for_user(
    profile: UserProfile,
    n: int,
    config: RecConfig,
    index: OccurrenceIndex,
    discoveries=(),
    graph: Graph | LdsdCache | None = None,
    catalogue=None,
) -> ScoredList:
    if not profile.liked_items:
        return ScoredList(profile.user_id)
    store = DiscoveryStore.coerce(discoveries)
    if isinstance(graph, Graph):
        graph = LdsdCache(graph)
    lists = {seed: recommend(seed, None, config, index, store, graph) for seed in profile.liked_items}
    return aggregate_for_user(profile, lists, check_positive_int(n, "n"), catalogue)


class SemRevRec(BaseEstimator):
    """Review-annotation recommender with optional knowledge-graph discovery.

    Parameters mirror :class:`RecConfig`; ``index``, ``discoveries`` and
    ``graph`` are the stores built offline. ``fit`` only reads user profiles
    from the training ratings (liked = positive ratings).

    Examples
    --------
    >>> model = SemRevRec(ranking="R1", index=index).fit(train)
    >>> model.recommend("u1", n=10)
    """

    def __init__(
        self,
        ranking="R1",
        use_discovered=False,
        occurrence_threshold=0.05,
        alpha=0.5,
        eta=None,
        kappa=None,
        index=None,
        discoveries=None,
        graph=None,
        restrict_to_catalogue=True,
    ):
        self.ranking = ranking
        self.use_discovered = use_discovered
        self.occurrence_threshold = occurrence_threshold
        self.alpha = alpha
        self.eta = eta
        self.kappa = kappa
        self.index = index
        self.discoveries = discoveries
        self.graph = graph
        self.restrict_to_catalogue = restrict_to_catalogue

    @classmethod
    def from_config(cls, config: RecConfig, **kwargs) -> "SemRevRec":
        return cls(
            ranking=config.ranking,
            use_discovered=config.use_discovered,
            occurrence_threshold=config.occurrence_threshold,
            alpha=config.alpha,
            eta=config.eta,
            kappa=config.kappa,
            **kwargs,
        )

    def _config(self) -> RecConfig:
        return RecConfig(
            self.ranking, bool(self.use_discovered), self.occurrence_threshold, self.alpha, self.eta, self.kappa
        )

    def fit(self, X, y=None, items=None):
        dataset = check_ratings(X)
        if self.index is None:
            raise ConfigurationError("SemRevRec needs an occurrence index")
        self.config_ = self._config()
        if self.config_.ranking == "R3" and self.graph is None:
            raise ConfigurationError("R3 needs a graph for LDSD to the initial item")
        self.store_ = DiscoveryStore.coerce(self.discoveries)
        self.ldsd_cache_ = LdsdCache(self.graph) if self.graph is not None else None
        liked, rated = dataset.user_items()
        self.profiles_ = {u: UserProfile(u, liked.get(u, frozenset()), rated[u]) for u in rated}
        self.catalogue_ = frozenset(items) if items is not None else frozenset(dataset.items)
        self._seed_lists: dict[str, ScoredList] = {}
        return self

    def recommend_item(self, item: str, n: int | None = 10) -> ScoredList:
        check_is_fitted(self, "profiles_")
        lst = self._seed_lists.get(item)
        if lst is None:
            lst = self._seed_lists[item] = recommend(
                item, None, self.config_, self.index, self.store_, self.ldsd_cache_
            )
        return lst if n is None else lst.top(n)

    def recommend(self, user: str, n: int = 10) -> ScoredList:
        check_is_fitted(self, "profiles_")
        profile = self.profiles_.get(user)
        if profile is None or not profile.liked_items:
            return ScoredList(user)
        lists = {seed: self.recommend_item(seed, None) for seed in profile.liked_items}
        catalogue = self.catalogue_ if self.restrict_to_catalogue else None
        return aggregate_for_user(profile, lists, check_positive_int(n, "n"), catalogue)

    def predict(self, X, n: int = 10) -> list[list[str]]:
        return [self.recommend(user, n).items for user in X]
