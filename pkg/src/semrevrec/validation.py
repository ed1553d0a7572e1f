"""Input validation helpers shared by the estimators and loaders."""

from __future__ import annotations

import re

_IRI = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:\S+$")


def strip_brackets(value: str) -> str:
    value = value.strip()
    if value.startswith("<") and value.endswith(">"):
        return value[1:-1]
    return value


def check_iri(value) -> str:
    """Return ``value`` if it is an absolute IRI (scheme present, no whitespace)."""
    if not isinstance(value, str) or not _IRI.match(value):
        raise ValueError(f"not an absolute IRI: {value!r}")
    return value


def is_iri(value) -> bool:
    return isinstance(value, str) and _IRI.match(value) is not None


def check_ratings(X, positive_threshold: float = 0.0):
    """Coerce ``X`` to a :class:`~semrevrec.ratings.RatingDataset`.

    Accepts a dataset (returned as is) or an iterable of ``(user, item, rating)``
    triples, in which case ``positive_threshold`` decides what counts as liked.
    """
    from .ratings import RatingDataset

    if isinstance(X, RatingDataset):
        return X
    records = [tuple(r) for r in X]
    for r in records:
        if len(r) != 3:
            raise ValueError(f"expected (user, item, rating) records, got {r!r}")
    max_scale = max((float(r[2]) for r in records), default=1.0)
    return RatingDataset(records, max_scale=max(max_scale, positive_threshold), positive_threshold=positive_threshold)


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return value
