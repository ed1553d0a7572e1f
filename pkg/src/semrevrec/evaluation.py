"""Offline top-N evaluation under the all-unrated-items protocol."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .metrics import ebn, ild_diversity, ndcg_at_n, precision_at_n, recall_at_n, welch_t_test
from .ratings import FoldPlan, RatingDataset, binarize

log = logging.getLogger(__name__)

METRICS = ("precision", "recall", "ndcg", "ebn", "diversity")


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    samples: tuple[float, ...]


@dataclass
class MetricsReport:
    """Per-metric means plus the per-user samples they were averaged from."""

    name: str
    n: int
    users: tuple[str, ...]
    metrics: dict[str, MetricSummary]
    note: str = ""

    def __getitem__(self, metric: str) -> float:
        return self.metrics[metric].mean

    def row(self) -> str:
        return "\t".join([self.name] + [f"{self.metrics[m].mean:.6f}" for m in METRICS])


def _shallow_clone(model):
    # sklearn.base.clone deep-copies non-estimator params, which would copy the stores per fold
    return type(model)(**model.get_params(deep=False))


def item_popularity(train: RatingDataset) -> dict[str, float]:
    """Fraction of training users who rated each item."""
    raters = defaultdict(set)
    for u, i, _ in train.records:
        raters[i].add(u)
    n_users = len(train.users)
    return {i: len(us) / n_users for i, us in raters.items()} if n_users else {}


def user_metrics(
    recs: list[str], relevant, n: int, popularity: Mapping[str, float], features: Mapping[str, Iterable[str]]
) -> dict[str, float]:
    recs = recs[:n]
    return {
        "precision": precision_at_n(recs, relevant, n),
        "recall": recall_at_n(recs, relevant, n),
        "ndcg": ndcg_at_n(recs, relevant, n),
        "ebn": ebn(recs, popularity),
        "diversity": ild_diversity(recs, features),
    }


def evaluate_run(
    model,
    dataset: RatingDataset,
    plan: FoldPlan,
    n: int = 10,
    features: Mapping[str, Iterable[str]] | None = None,
    name: str = "",
) -> MetricsReport:
    """Cross-validate ``model`` and collect per-user metrics at ``n``.

    For each fold the model is refit on the other folds; the held-out positive
    ratings are the relevant items and everything else counts as irrelevant.
    Users without held-out positives in a fold are skipped for that fold. A
    user's sample is the mean of their per-fold values; report means average
    those samples over users.
    """
    features = features or {}
    all_items = dataset.items
    per_user: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for fold in range(plan.k):
        train, test = plan.split(dataset, fold)
        fitted = _shallow_clone(model).fit(train, items=all_items)
        popularity = item_popularity(train)
        relevant = defaultdict(set)
        for u, i in binarize(test):
            relevant[u].add(i)
        for user in sorted(relevant):
            recs = fitted.recommend(user, n).items
            for metric, value in user_metrics(recs, relevant[user], n, popularity, features).items():
                per_user[user][metric].append(value)
    users = tuple(sorted(per_user))
    metrics = {}
    for metric in METRICS:
        samples = tuple(float(np.mean(per_user[u][metric])) for u in users)
        metrics[metric] = MetricSummary(float(np.mean(samples)) if samples else 0.0, samples)
    return MetricsReport(name, n, users, metrics)


def significance(
    reports: list[MetricsReport], metrics: Iterable[str] = METRICS
) -> list[tuple[str, str, str, float]]:
    """Welch's t-test p-values for every pair of reports (including each with itself)."""
    rows = []
    for a_pos, a in enumerate(reports):
        for b in reports[a_pos:]:
            for metric in metrics:
                sa, sb = a.metrics[metric].samples, b.metrics[metric].samples
                p = welch_t_test(sa, sb)[1] if len(sa) >= 2 and len(sb) >= 2 else math.nan
                rows.append((a.name, b.name, metric, p))
    return rows


def format_report(reports: Iterable[MetricsReport]) -> str:
    reports = list(reports)
    lines = ["config\t" + "\t".join(METRICS)]
    lines += [r.row() for r in reports]
    lines += [f"# {r.name}: {r.note}" for r in reports if r.note]
    return "\n".join(lines) + "\n"


def format_significance(rows: Iterable[tuple[str, str, str, float]]) -> str:
    out = ["config_a\tconfig_b\tmetric\tp_value"]
    for a, b, metric, p in rows:
        out.append(f"{a}\t{b}\t{metric}\t{'NA' if math.isnan(p) else f'{p:.6g}'}")
    return "\n".join(out) + "\n"
