"""Pipeline configuration file (INI format).

Sections and keys::

    [paths]            graph, reviews, gazetteer, ratings, mapping, out
                       (relative paths resolve against the config file's directory)
    [domain]           name, knowledge_base, type_property, type_namespace,
                       mention_type_filter
    [discovery]        properties: one "<property-iri> direct|inverse" per line;
                       when empty, the preset for (name, knowledge_base) is used
    [evaluation]       k, n, seed, min_scale, max_scale, positive_threshold,
                       baselines (comma list of most_popular, random, item_knn),
                       knn_neighbors
    [config NAME]      ranking, discovered, occurrence, alpha, eta, kappa
                       (no such sections: the eight C1-C8 rows are used)
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .kg import DISCOVERY_PRESETS, RDF_TYPE, PropertySpec
from .recommender import TABLE2, RecConfig

BASELINES = ("most_popular", "random", "item_knn")


class ConfigFileError(ValueError):
    pass


@dataclass
class EvaluationSettings:
    k: int = 5
    n: int = 10
    seed: int = 42
    min_scale: float = 1.0
    max_scale: float = 5.0
    positive_threshold: float = 3.0
    baselines: tuple[str, ...] = BASELINES
    knn_neighbors: int = 80


@dataclass
class PipelineConfig:
    base_dir: Path
    paths: dict[str, Path | None]
    domain: str = "movie"
    knowledge_base: str = "dbpedia"
    type_property: str = RDF_TYPE
    type_namespace: str | None = None
    mention_type_filter: str | None = None
    discovery: tuple[PropertySpec, ...] = ()
    evaluation: EvaluationSettings = field(default_factory=EvaluationSettings)
    grid: dict[str, RecConfig] = field(default_factory=lambda: dict(TABLE2))

    def path(self, key: str) -> Path | None:
        return self.paths.get(key)

    @property
    def out_dir(self) -> Path:
        return self.paths.get("out") or self.base_dir / "out"


_PATH_KEYS = ("graph", "reviews", "gazetteer", "ratings", "mapping", "out")


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ConfigFileError(f"not a boolean: {value!r}")


def _opt_float(section, key):
    raw = section.get(key, "").strip()
    if raw in ("", "-", "none", "None"):
        return None
    return float(raw)


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";",), interpolation=None)
    parser.optionxform = str
    try:
        with path.open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigFileError(f"{path}: {exc}") from None
    base = path.resolve().parent

    paths: dict[str, Path | None] = {}
    sec = parser["paths"] if parser.has_section("paths") else {}
    for key in sec:
        if key not in _PATH_KEYS:
            raise ConfigFileError(f"{path}: unknown key paths.{key}")
    for key in _PATH_KEYS:
        raw = sec.get(key, "").strip() if sec else ""
        paths[key] = (base / raw) if raw else None

    cfg = PipelineConfig(base_dir=base, paths=paths)
    if parser.has_section("domain"):
        d = parser["domain"]
        cfg.domain = d.get("name", cfg.domain).strip().lower()
        cfg.knowledge_base = d.get("knowledge_base", cfg.knowledge_base).strip().lower()
        cfg.type_property = d.get("type_property", cfg.type_property).strip()
        cfg.type_namespace = d.get("type_namespace", "").strip() or None
        cfg.mention_type_filter = d.get("mention_type_filter", "").strip() or None

    try:
        specs = []
        if parser.has_section("discovery"):
            for line in parser["discovery"].get("properties", "").splitlines():
                if line.strip():
                    parts = line.split()
                    if len(parts) != 2:
                        raise ConfigFileError(f"{path}: discovery property line {line!r}")
                    specs.append(PropertySpec(parts[0].strip("<>"), parts[1]))
        cfg.discovery = tuple(specs) or DISCOVERY_PRESETS.get((cfg.domain, cfg.knowledge_base), ())

        if parser.has_section("evaluation"):
            e = parser["evaluation"]
            ev = cfg.evaluation
            ev.k = e.getint("k", ev.k)
            ev.n = e.getint("n", ev.n)
            ev.seed = e.getint("seed", ev.seed)
            ev.min_scale = e.getfloat("min_scale", ev.min_scale)
            ev.max_scale = e.getfloat("max_scale", ev.max_scale)
            ev.positive_threshold = e.getfloat("positive_threshold", ev.positive_threshold)
            ev.knn_neighbors = e.getint("knn_neighbors", ev.knn_neighbors)
            if "baselines" in e:
                names = tuple(b.strip() for b in e["baselines"].split(",") if b.strip())
                unknown = set(names) - set(BASELINES)
                if unknown:
                    raise ConfigFileError(f"{path}: unknown baselines {sorted(unknown)}")
                ev.baselines = names

        rows = {}
        for section in parser.sections():
            if section.startswith("config "):
                name = section[len("config ") :].strip()
                s = parser[section]
                rows[name] = RecConfig(
                    ranking=s.get("ranking", "R1").strip(),
                    use_discovered=_bool(s.get("discovered", "false")),
                    occurrence_threshold=float(s.get("occurrence", "0.05")),
                    alpha=float(s.get("alpha", "0.5")),
                    eta=_opt_float(s, "eta"),
                    kappa=_opt_float(s, "kappa"),
                )
        if rows:
            cfg.grid = rows
    except ConfigFileError:
        raise
    except ValueError as exc:
        raise ConfigFileError(f"{path}: {exc}") from None
    return cfg
