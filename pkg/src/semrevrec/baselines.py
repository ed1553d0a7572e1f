"""Rating-based baselines: Most Popular, Random Guess and Item KNN."""

from __future__ import annotations

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .ratings import user_stream
from .recommender import ScoredList
from .validation import check_positive_int, check_ratings


class _TopNRecommender(BaseEstimator):
    def fit(self, X, y=None, items=None):
        dataset = check_ratings(X)
        self.liked_, self.rated_ = dataset.user_items()
        self.items_ = sorted(dataset.items)
        self._fit(dataset)
        return self

    def _fit(self, dataset):
        pass

    def _unrated(self, user: str) -> list[str]:
        rated = self.rated_.get(user, frozenset())
        return [i for i in self.items_ if i not in rated]

    def recommend(self, user: str, n: int = 10) -> ScoredList:
        raise NotImplementedError

    def predict(self, X, n: int = 10) -> list[list[str]]:
        return [self.recommend(user, n).items for user in X]


class MostPopular(_TopNRecommender):
    """Rank items by their number of positive training ratings."""

    def _fit(self, dataset):
        counts = dict.fromkeys(self.items_, 0)
        for items in self.liked_.values():
            for i in items:
                counts[i] += 1
        self.counts_ = counts

    def recommend(self, user: str, n: int = 10) -> ScoredList:
        check_is_fitted(self, "counts_")
        scores = {i: float(self.counts_[i]) for i in self._unrated(user)}
        return ScoredList.from_scores(user, scores).top(check_positive_int(n, "n"))


class RandomGuess(_TopNRecommender):
    """Uniformly random ordering of unrated items, fixed per (seed, user)."""

    def __init__(self, seed=0):
        self.seed = seed

    def _fit(self, dataset):
        self.fitted_ = True

    def recommend(self, user: str, n: int = 10) -> ScoredList:
        check_is_fitted(self, "fitted_")
        n = check_positive_int(n, "n")
        pool = self._unrated(user)
        order = user_stream(self.seed, "random", user).permutation(len(pool))
        entries = tuple((pool[j], 1.0 - r / len(pool)) for r, j in enumerate(order[:n]))
        return ScoredList(user, entries)


class ItemKNN(_TopNRecommender):
    """Item-item cosine neighbourhood model over the binary (positive) user-item matrix.

    The score of an unrated item is the summed similarity of its ``k`` most
    similar items among those the user liked. Items scoring 0 are left out.
    """

    def __init__(self, k=80):
        self.k = k

    def _fit(self, dataset):
        check_positive_int(self.k, "k")
        users = sorted(self.rated_)
        self.item_pos_ = {i: j for j, i in enumerate(self.items_)}
        upos = {u: j for j, u in enumerate(users)}
        rows, cols = [], []
        for u, items in self.liked_.items():
            for i in items:
                rows.append(self.item_pos_[i])
                cols.append(upos[u])
        m = sparse.csr_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(len(self.items_), len(users))
        )
        norms = np.sqrt(np.asarray(m.multiply(m).sum(axis=1)).ravel())
        inner = (m @ m.T).toarray()
        with np.errstate(divide="ignore", invalid="ignore"):
            sim = inner / np.outer(norms, norms)
        sim[~np.isfinite(sim)] = 0.0
        np.fill_diagonal(sim, 0.0)
        self.similarity_ = sim

    def similarity(self, a: str, b: str) -> float:
        check_is_fitted(self, "similarity_")
        return float(self.similarity_[self.item_pos_[a], self.item_pos_[b]])

    def recommend(self, user: str, n: int = 10) -> ScoredList:
        check_is_fitted(self, "similarity_")
        n = check_positive_int(n, "n")
        liked = sorted(self.liked_.get(user, ()))
        if not liked:
            return ScoredList(user)
        cols = np.array([self.item_pos_[i] for i in liked])
        scores = {}
        for item in self._unrated(user):
            sims = self.similarity_[self.item_pos_[item], cols]
            # stable sort on -sim keeps IRI order among equal similarities
            top = np.argsort(-sims, kind="stable")[: self.k]
            s = float(sims[top].sum())
            if s > 0.0:
                scores[item] = s
        return ScoredList.from_scores(user, scores).top(n)
