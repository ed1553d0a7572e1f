"""Rating datasets, binarization and k-fold splitting."""

from __future__ import annotations

import logging
import zlib
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .validation import strip_brackets

log = logging.getLogger(__name__)


def user_stream(seed: int, *keys) -> np.random.Generator:
    """Independent RNG stream per (seed, key...); string keys are hashed stably."""
    words = [int(seed)] + [zlib.crc32(str(k).encode("utf-8")) for k in keys]
    return np.random.default_rng(words)


@dataclass(frozen=True)
class RatingDataset:
    records: tuple[tuple[str, str, float], ...]
    max_scale: float = 5.0
    positive_threshold: float = 3.0
    min_scale: float = 0.0

    def __post_init__(self):
        records = tuple((str(u), str(i), float(r)) for u, i, r in self.records)
        object.__setattr__(self, "records", records)
        seen = set()
        for u, i, r in records:
            if (u, i) in seen:
                raise ValueError(f"duplicate rating for user {u!r} and item {i!r}")
            seen.add((u, i))
            if not self.min_scale <= r <= self.max_scale:
                raise ValueError(f"rating {r} of user {u!r} outside [{self.min_scale}, {self.max_scale}]")

    def __len__(self):
        return len(self.records)

    @property
    def users(self) -> list[str]:
        return sorted({u for u, _, _ in self.records})

    @property
    def items(self) -> list[str]:
        return sorted({i for _, i, _ in self.records})

    def with_records(self, records) -> "RatingDataset":
        return RatingDataset(tuple(records), self.max_scale, self.positive_threshold, self.min_scale)

    def user_items(self) -> tuple[dict[str, frozenset[str]], dict[str, frozenset[str]]]:
        """Return ``(liked, rated)`` item sets per user."""
        liked, rated = defaultdict(set), defaultdict(set)
        for u, i, r in self.records:
            rated[u].add(i)
            if r > self.positive_threshold:
                liked[u].add(i)
        return {u: frozenset(v) for u, v in liked.items()}, {u: frozenset(v) for u, v in rated.items()}


def load_ratings(
    path: str | Path, max_scale: float = 5.0, positive_threshold: float = 3.0, min_scale: float = 0.0
) -> RatingDataset:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ValueError(f"{path}:{lineno}: expected user<TAB>item<TAB>rating")
            try:
                rating = float(cols[2])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad rating {cols[2]!r}") from None
            records.append((cols[0], strip_brackets(cols[1]), rating))
    return RatingDataset(tuple(records), max_scale, positive_threshold, min_scale)


def binarize(dataset: RatingDataset) -> frozenset[tuple[str, str]]:
    """Pairs rated strictly above the dataset's positive threshold."""
    return frozenset((u, i) for u, i, r in dataset.records if r > dataset.positive_threshold)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: dict[tuple[str, str], int]

    def fold_of(self, user: str, item: str) -> int:
        return self.assignment[(user, item)]

    def split(self, dataset: RatingDataset, fold: int) -> tuple[RatingDataset, RatingDataset]:
        """Return ``(train, test)`` for ``fold``."""
        train = [r for r in dataset.records if self.assignment[(r[0], r[1])] != fold]
        test = [r for r in dataset.records if self.assignment[(r[0], r[1])] == fold]
        return dataset.with_records(train), dataset.with_records(test)

    def sizes(self) -> list[int]:
        counts = [0] * self.k
        for f in self.assignment.values():
            counts[f] += 1
        return counts


def split_folds(dataset: RatingDataset, k: int = 5, seed: int = 0) -> FoldPlan:
    """Per-user stratified k-fold plan.

    Each user's items are shuffled with a stream derived from ``(seed, user)``
    and dealt round-robin starting at a random fold, so fold sizes per user
    differ by at most one.
    """
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    by_user = defaultdict(list)
    for u, i, _ in dataset.records:
        by_user[u].append(i)
    assignment = {}
    short = 0
    for user in sorted(by_user):
        items = sorted(by_user[user])
        rng = user_stream(seed, "folds", user)
        rng.shuffle(items)
        offset = int(rng.integers(k))
        for j, item in enumerate(items):
            assignment[(user, item)] = (offset + j) % k
        short += len(items) < k
    if short:
        log.info("%d users have fewer than %d ratings; some of their folds are empty", short, k)
    return FoldPlan(k, assignment)
