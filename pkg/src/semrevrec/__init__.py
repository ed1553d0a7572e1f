"""Content recommendation from semantically annotated reviews and Linked Data."""

from .annotation import (
    Gazetteer,
    Mention,
    OccurrenceIndex,
    Review,
    annotate_review,
    build_index,
    corpus_stats,
    ingest_reviews,
)
from .baselines import ItemKNN, MostPopular, RandomGuess
from .evaluation import MetricsReport, evaluate_run, significance
from .kg import (
    DiscoveryRecord,
    Direction,
    Graph,
    LdsdCache,
    PropertySpec,
    compute_ldsd,
    discover,
    fetch_types,
    load_graph,
    map_entities,
    neighbors,
)
from .metrics import ebn, ild_diversity, ndcg_at_n, precision_at_n, recall_at_n, welch_t_test
from .ratings import FoldPlan, RatingDataset, binarize, load_ratings, split_folds
from .recommender import (
    TABLE2,
    Candidate,
    Origin,
    RecConfig,
    ScoredList,
    SemRevRec,
    UserProfile,
    generate_candidates,
    occur,
    rank_r1,
    rank_r2,
    rank_r3,
    recommend,
    recommend_for_user,
)

__version__ = "0.1.0"
