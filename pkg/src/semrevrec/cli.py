"""Command-line entry point: ``semrevrec --config FILE <command>``.

Outputs go to the configured output directory:

    index.tsv         entity, item, review-level count
    types.tsv         entity, type
    discovered.tsv    discovered entity, source, LDSD or NA
    report.tsv        one metrics row per configuration / baseline
    significance.tsv  pairwise Welch p-values per metric
"""

from __future__ import annotations

import logging
import os
import sys
import tempfile
from pathlib import Path

import click

from .annotation import (
    Gazetteer,
    OccurrenceIndex,
    annotate_corpus,
    apply_mapping,
    build_index,
    corpus_stats,
    filter_mentions_by_type,
    ingest_reviews,
)
from .baselines import ItemKNN, MostPopular, RandomGuess
from .config import ConfigFileError, PipelineConfig, load_config
from .evaluation import evaluate_run, format_report, format_significance, significance
from .kg import (
    discover,
    fetch_types,
    format_discoveries,
    format_types,
    load_graph,
    read_discoveries,
    read_mapping,
)
from .ratings import load_ratings, split_folds
from .recommender import ConfigurationError, SemRevRec, UserProfile, recommend, recommend_for_user

log = logging.getLogger(__name__)

INDEX_FILE = "index.tsv"
TYPES_FILE = "types.tsv"
DISCOVERED_FILE = "discovered.tsv"
REPORT_FILE = "report.tsv"
SIGNIFICANCE_FILE = "significance.tsv"


class InputError(click.ClickException):
    exit_code = 2


class InternalError(click.ClickException):
    exit_code = 1


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (click.exceptions.ClickException, click.exceptions.Exit, click.exceptions.Abort):
            raise
        except (OSError, ValueError) as exc:
            raise InputError(str(exc)) from exc
        except Exception as exc:
            log.exception("internal error")
            raise InternalError(f"internal error: {exc}") from exc


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require(cfg: PipelineConfig, key: str) -> Path:
    path = cfg.path(key)
    if path is None:
        raise InputError(f"config is missing paths.{key}")
    if not path.exists():
        raise InputError(f"{key} file not found: {path}")
    return path


def _require_output(cfg: PipelineConfig, name: str, produced_by: str) -> Path:
    path = cfg.out_dir / name
    if not path.exists():
        raise InputError(f"{path} not found; run `{produced_by}` first")
    return path


def _load_stores(cfg: PipelineConfig, configs):
    index = OccurrenceIndex.from_tsv(_require_output(cfg, INDEX_FILE, "annotate"))
    discoveries = []
    if any(c.use_discovered for c in configs):
        discoveries = read_discoveries(_require_output(cfg, DISCOVERED_FILE, "discover"))
    graph = None
    if any(c.ranking == "R3" for c in configs):
        graph = load_graph(_require(cfg, "graph"))
    return index, discoveries, graph


@click.group(cls=_Group)
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False), help="Pipeline config file.")
@click.option("--seed", type=int, default=None, help="Override evaluation.seed.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Override paths.out.")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def cli(ctx, config_path, seed, out_dir, verbose):
    """Review-annotation recommender pipeline."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if not Path(config_path).is_file():
        raise InputError(f"config file not found: {config_path}")
    try:
        cfg = load_config(config_path)
    except ConfigFileError as exc:
        raise InputError(str(exc)) from exc
    if seed is not None:
        cfg.evaluation.seed = seed
    if out_dir is not None:
        cfg.paths["out"] = Path(out_dir)
    ctx.obj = cfg


@cli.command()
@click.pass_obj
def annotate(cfg: PipelineConfig):
    """Annotate reviews and write the occurrence index and entity types."""
    reviews = ingest_reviews(_require(cfg, "reviews"))
    gazetteer = None
    if any(not r.pre_annotated for r in reviews):
        gazetteer = Gazetteer.from_file(_require(cfg, "gazetteer"))
    mentions = annotate_corpus(reviews, gazetteer)
    if cfg.path("mapping") is not None:
        mentions = apply_mapping(mentions, read_mapping(_require(cfg, "mapping")))

    graph = load_graph(_require(cfg, "graph")) if cfg.path("graph") is not None else None
    types = {}
    if graph is not None:
        for entity in sorted({m.entity for m in mentions}):
            types[entity] = fetch_types(graph, entity, cfg.type_property, cfg.type_namespace)
    if cfg.mention_type_filter:
        if graph is None:
            raise InputError("domain.mention_type_filter needs paths.graph")
        mentions = filter_mentions_by_type(mentions, types, cfg.mention_type_filter)

    index = build_index(reviews, mentions)
    kept = set(index.entities)
    write_atomic(cfg.out_dir / INDEX_FILE, index.to_tsv())
    write_atomic(cfg.out_dir / TYPES_FILE, format_types({e: t for e, t in types.items() if e in kept}))
    for line in corpus_stats(reviews, index).summary_lines():
        click.echo(line)


@cli.command(name="discover")
@click.option("--with-ldsd", is_flag=True, help="Precompute LDSD between each discovered entity and its source.")
@click.pass_obj
def discover_cmd(cfg: PipelineConfig, with_ldsd):
    """Discover related resources through the configured graph properties."""
    index = OccurrenceIndex.from_tsv(_require_output(cfg, INDEX_FILE, "annotate"))
    graph = load_graph(_require(cfg, "graph"))
    if not cfg.discovery:
        raise InputError(f"no discovery properties configured for {cfg.domain}/{cfg.knowledge_base}")
    records = discover(graph, index.entities, cfg.discovery, with_ldsd=with_ldsd)
    write_atomic(cfg.out_dir / DISCOVERED_FILE, format_discoveries(records))
    click.echo(f"discovered\t{len(records)}")
    if not with_ldsd:
        needs = sorted(n for n, c in cfg.grid.items() if c.use_discovered and c.ranking in ("R2", "R3"))
        if needs:
            click.echo(f"warning: {', '.join(needs)} need LDSD values; rerun with --with-ldsd", err=True)


@cli.command(name="recommend")
@click.option("--item", default=None, help="Initial item IRI.")
@click.option("--user", default=None, help="User id from the ratings file.")
@click.option("--config-row", "row", default="C1", show_default=True)
@click.option("--top", "top", type=click.IntRange(min=1), default=10, show_default=True)
@click.pass_obj
def recommend_cmd(cfg: PipelineConfig, item, user, row, top):
    """Print a top-N list for an initial item or a user as TSV."""
    if (item is None) == (user is None):
        raise click.UsageError("give exactly one of --item or --user")
    if row not in cfg.grid:
        raise InputError(f"unknown config row {row!r}; known: {', '.join(cfg.grid)}")
    config = cfg.grid[row]
    index, discoveries, graph = _load_stores(cfg, [config])
    if item is not None:
        result = recommend(item.strip("<>"), top, config, index, discoveries, graph)
    else:
        ev = cfg.evaluation
        ratings = load_ratings(_require(cfg, "ratings"), ev.max_scale, ev.positive_threshold, ev.min_scale)
        liked, rated = ratings.user_items()
        profile = UserProfile(user, liked.get(user, frozenset()), rated.get(user, frozenset()))
        result = recommend_for_user(profile, top, config, index, discoveries, graph, catalogue=set(ratings.items))
    for rank, (entity, score) in enumerate(result, 1):
        click.echo(f"{result.initial_item}\t{rank}\t{entity}\t{score:.6f}")


@cli.command(name="evaluate")
@click.pass_obj
def evaluate_cmd(cfg: PipelineConfig):
    """Cross-validate every configuration row and baseline; write report files."""
    ev = cfg.evaluation
    ratings = load_ratings(_require(cfg, "ratings"), ev.max_scale, ev.positive_threshold, ev.min_scale)
    index, discoveries, graph = _load_stores(cfg, cfg.grid.values())
    plan = split_folds(ratings, ev.k, ev.seed)
    features = {item: set(index.entities_of(item)) for item in index.items}

    reports = []
    for name, config in cfg.grid.items():
        model = SemRevRec.from_config(config, index=index, discoveries=discoveries, graph=graph)
        try:
            report = evaluate_run(model, ratings, plan, ev.n, features, name=name)
        except ConfigurationError as exc:
            raise InputError(f"{name}: {exc}") from exc
        if config.unbounded:
            report.note = "eta + kappa > 1, scores not bounded to [0, 1]"
        reports.append(report)
    baselines = {
        "most_popular": lambda: MostPopular(),
        "random": lambda: RandomGuess(seed=ev.seed),
        "item_knn": lambda: ItemKNN(k=ev.knn_neighbors),
    }
    for name in ev.baselines:
        reports.append(evaluate_run(baselines[name](), ratings, plan, ev.n, features, name=name))

    write_atomic(cfg.out_dir / REPORT_FILE, format_report(reports))
    write_atomic(cfg.out_dir / SIGNIFICANCE_FILE, format_significance(significance(reports)))
    click.echo(format_report(reports), nl=False)


@cli.command()
@click.pass_obj
def stats(cfg: PipelineConfig):
    """Print corpus statistics for the annotated reviews."""
    reviews = ingest_reviews(_require(cfg, "reviews"))
    index = OccurrenceIndex.from_tsv(_require_output(cfg, INDEX_FILE, "annotate"))
    st = corpus_stats(reviews, index)
    for line in st.summary_lines():
        click.echo(line)
    for item in st.outliers:
        click.echo(f"outlier\t{item}\t{st.per_item[item]}")


def main(argv=None):
    return cli.main(args=argv, prog_name="semrevrec")


if __name__ == "__main__":
    sys.exit(main())
