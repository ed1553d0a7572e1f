"""Top-N accuracy, novelty and diversity metrics, and Welch's t-test."""

from __future__ import annotations

import math
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import betainc

# Floor applied to each sample variance when both samples are constant but differ in mean.
VARIANCE_FLOOR = 1e-12


def hits(recs: Sequence[str], relevant, n: int) -> int:
    return sum(1 for item in recs[:n] if item in relevant)


def precision_at_n(recs: Sequence[str], relevant, n: int) -> float:
    return hits(recs, relevant, n) / n


def recall_at_n(recs: Sequence[str], relevant, n: int) -> float:
    if not relevant:
        return 0.0
    return hits(recs, relevant, n) / len(relevant)


def ndcg_at_n(recs: Sequence[str], relevant, n: int) -> float:
    """Binary-gain nDCG with ``log2(rank + 1)`` discount."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not relevant:
        return 0.0
    dcg = sum(1.0 / math.log2(r + 2) for r, item in enumerate(recs[:n]) if item in relevant)
    idcg = sum(1.0 / math.log2(r + 2) for r in range(min(len(relevant), n)))
    return dcg / idcg


def ebn(recs: Iterable[str], popularity: Mapping[str, float]) -> float:
    """Entropy-based novelty: sum of ``-p log2 p`` over the list; lower is more novel."""
    total = 0.0
    for item in recs:
        p = popularity.get(item, 0.0)
        if 0.0 < p:
            total -= p * math.log2(p)
    return total


def _cosine(a: frozenset, b: frozenset) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / math.sqrt(len(a) * len(b))


def ild_diversity(recs: Sequence[str], features: Mapping[str, Iterable[str]]) -> float:
    """Intra-list diversity: mean pairwise ``1 - cosine`` of binary item feature vectors."""
    recs = list(recs)
    if len(recs) < 2:
        return 0.0
    vecs = [frozenset(features.get(item, ())) for item in recs]
    total = sum(1.0 - _cosine(a, b) for a, b in combinations(vecs, 2))
    return 2.0 * total / (len(recs) * (len(recs) - 1))


def _moments(sample) -> tuple[int, float, float]:
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise ValueError("each sample needs at least two observations")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    return len(x), float(x.mean()), float(x.var(ddof=1))


def _welch_parts(a, b):
    na, ma, va = _moments(a)
    nb, mb, vb = _moments(b)
    if va == 0.0 and vb == 0.0:
        if ma == mb:
            return ma - mb, 0.0, float(na + nb - 2)
        va = vb = VARIANCE_FLOOR
    sa, sb = va / na, vb / nb
    se2 = sa + sb
    df = se2**2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))
    return ma - mb, se2, df


def welch_df(a, b) -> float:
    """Welch-Satterthwaite degrees of freedom."""
    return _welch_parts(a, b)[2]


def welch_t_test(a, b) -> tuple[float, float]:
    """Unequal-variance t statistic and two-sided p-value.

    Two constant samples with equal means give ``(0.0, 1.0)``; constant
    samples with different means have their variances floored at
    ``VARIANCE_FLOOR``.
    """
    diff, se2, df = _welch_parts(a, b)
    if se2 == 0.0:
        return 0.0, 1.0
    t = diff / math.sqrt(se2)
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return t, min(p, 1.0)
