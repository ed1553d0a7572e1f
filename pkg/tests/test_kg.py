import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semrevrec.kg import (
    DISCOVERY_PRESETS,
    DiscoveryRecord,
    Direction,
    Graph,
    GraphParseError,
    LdsdCache,
    PropertySpec,
    compute_ldsd,
    discover,
    fetch_types,
    format_discoveries,
    load_graph,
    map_entities,
    neighbors,
    read_discoveries,
    read_mapping,
)

from oracles import ldsd_naive

NODES = [f"ex:n{i}" for i in range(6)]
PROPS = ["ex:p", "ex:q", "ex:r"]

triple_st = st.tuples(st.sampled_from(NODES), st.sampled_from(PROPS), st.sampled_from(NODES))
graph_st = st.lists(triple_st, max_size=30)


def write(tmp_path, text, name="g.nt"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadGraph:
    def test_duplicates_collapse(self, tmp_path):
        g = load_graph(write(tmp_path, "<ex:a> <ex:p> <ex:b> .\n<ex:a> <ex:p> <ex:b> .\n"))
        assert len(g) == 1

    def test_empty_file(self, tmp_path):
        assert len(load_graph(write(tmp_path, ""))) == 0

    def test_inverse_index(self, tmp_path):
        g = load_graph(write(tmp_path, "<ex:a> <ex:p> <ex:b> .\n<ex:b> <ex:q> <ex:c> .\n"))
        assert g.subjects("ex:q", "ex:c") == {"ex:b"}
        assert g.objects("ex:a", "ex:p") == {"ex:b"}

    def test_literals_and_comments_skipped(self, tmp_path):
        text = (
            "# comment\n"
            '<ex:a> <ex:label> "A film"@en .\n'
            '<ex:a> <ex:year> "1999"^^<http://www.w3.org/2001/XMLSchema#gYear> .\n'
            "_:b1 <ex:p> <ex:a> .\n"
            "\n"
            "<ex:a> <ex:p> <ex:b> .\n"
        )
        g = load_graph(write(tmp_path, text))
        assert len(g) == 1
        assert g.skipped == 3

    @pytest.mark.parametrize(
        "line",
        ["<ex:a> <ex:p> <ex:b>", "<ex:a> <ex:p> .", "ex:a ex:p ex:b .", "<ex:a> <ex:p> <not an iri> ."],
    )
    def test_malformed_line_names_line_number(self, tmp_path, line):
        path = write(tmp_path, "<ex:a> <ex:p> <ex:b> .\n" + line + "\n")
        with pytest.raises(GraphParseError) as err:
            load_graph(path)
        assert err.value.lineno == 2
        assert ":2:" in str(err.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_graph(tmp_path / "nope.nt")

    def test_relative_iri_rejected(self):
        with pytest.raises(ValueError):
            Graph([("a", "ex:p", "ex:b")])


class TestNeighbors:
    g = Graph([("ex:a", "ex:p", "ex:b")])

    def test_direct(self):
        assert neighbors(self.g, "ex:a", "ex:p", Direction.DIRECT) == {"ex:b"}

    def test_inverse(self):
        assert neighbors(self.g, "ex:b", "ex:p", Direction.INVERSE) == {"ex:a"}

    def test_absent_node(self):
        assert neighbors(self.g, "ex:x", "ex:p", "direct") == set()

    @given(graph_st)
    def test_direct_inverse_consistent(self, triples):
        g = Graph(triples)
        for s, p, o in triples:
            assert o in neighbors(g, s, p, Direction.DIRECT)
            assert s in neighbors(g, o, p, Direction.INVERSE)
        for a in NODES:
            for p in PROPS:
                for b in neighbors(g, a, p, Direction.DIRECT):
                    assert a in neighbors(g, b, p, Direction.INVERSE)

    @given(graph_st)
    def test_indexes_agree_with_triples(self, triples):
        g = Graph(triples)
        rebuilt = {(s, p, o) for s in g.nodes for p, objs in g.outgoing(s).items() for o in objs}
        assert rebuilt == set(triples)
        rebuilt_inv = {(s, p, o) for o in g.nodes for p, subs in g.incoming(o).items() for s in subs}
        assert rebuilt_inv == set(triples)


class TestDiscover:
    starring = PropertySpec("ex:starring", Direction.INVERSE)

    def test_single_inverse_hit(self):
        g = Graph([("ex:Movie1", "ex:starring", "ex:ActorX")])
        assert discover(g, {"ex:ActorX"}, [self.starring]) == [DiscoveryRecord("ex:Movie1", "ex:ActorX")]

    def test_empty_graph(self):
        assert discover(Graph(), {"ex:ActorX"}, [self.starring]) == []

    def test_multi_hit(self):
        g = Graph([("ex:M1", "ex:director", "ex:D"), ("ex:M2", "ex:director", "ex:D")])
        recs = discover(g, {"ex:D"}, [PropertySpec("ex:director", "inverse")])
        assert [r.discovered for r in recs] == ["ex:M1", "ex:M2"]
        assert all(r.source == "ex:D" and r.ldsd is None for r in recs)

    def test_self_loop_suppressed_and_pairs_unique(self):
        g = Graph([("ex:a", "ex:p", "ex:a"), ("ex:m", "ex:p", "ex:a"), ("ex:m", "ex:q", "ex:a")])
        specs = [PropertySpec("ex:p", "inverse"), PropertySpec("ex:q", "inverse")]
        assert discover(g, {"ex:a"}, specs) == [DiscoveryRecord("ex:m", "ex:a")]

    def test_with_ldsd(self):
        g = Graph([("ex:m", "ex:starring", "ex:a")])
        (rec,) = discover(g, {"ex:a"}, [self.starring], with_ldsd=True)
        assert rec.ldsd == 0.5

    def test_needs_specs(self):
        with pytest.raises(ValueError):
            discover(Graph(), {"ex:a"}, [])

    @given(graph_st, st.sets(st.sampled_from(NODES), max_size=4), st.lists(
        st.tuples(st.sampled_from(PROPS), st.sampled_from(list(Direction))), min_size=1, max_size=3))
    def test_subset_of_naive_scan(self, triples, annotated, spec_pairs):
        specs = [PropertySpec(p, d) for p, d in spec_pairs]
        expected = set()
        for s, p, o in set(triples):
            for spec in specs:
                if spec.property != p:
                    continue
                if spec.direction is Direction.DIRECT and s in annotated and o != s:
                    expected.add((o, s))
                if spec.direction is Direction.INVERSE and o in annotated and o != s:
                    expected.add((s, o))
        got = [(r.discovered, r.source) for r in discover(Graph(triples), annotated, specs)]
        assert len(got) == len(set(got))
        assert set(got) == expected

    def test_presets_cover_table(self):
        props = {k: [s.property.rsplit("/", 1)[1] for s in v] for k, v in DISCOVERY_PRESETS.items()}
        assert props[("movie", "dbpedia")] == ["starring", "director"]
        assert props[("movie", "wikidata")] == ["P161", "P57"]
        assert props[("book", "dbpedia")] == ["author"]
        assert props[("book", "wikidata")] == ["P50"]
        assert props[("music", "dbpedia")] == ["artist", "writer"]
        assert props[("music", "wikidata")] == ["P175", "P676"]

    def test_record_invariants(self):
        with pytest.raises(ValueError):
            DiscoveryRecord("ex:a", "ex:a")
        with pytest.raises(ValueError):
            DiscoveryRecord("ex:a", "ex:b", 1.5)


class TestLdsd:
    def test_single_link(self):
        assert compute_ldsd(Graph([("ex:a", "ex:p", "ex:b")]), "ex:a", "ex:b") == 0.5

    def test_unconnected(self):
        g = Graph([("ex:a", "ex:p", "ex:c"), ("ex:b", "ex:q", "ex:c")])
        assert compute_ldsd(g, "ex:a", "ex:b") == 1.0

    def test_direct_and_indirect(self):
        g = Graph([("ex:a", "ex:p", "ex:b"), ("ex:b", "ex:q", "ex:a"), ("ex:a", "ex:r", "ex:c"), ("ex:b", "ex:r", "ex:c")])
        assert compute_ldsd(g, "ex:a", "ex:b") == 0.25

    def test_indirect_incoming(self):
        # ex:m stars both; counted once per (property, mediator)
        g = Graph([("ex:m", "ex:starring", "ex:a"), ("ex:m", "ex:starring", "ex:b"), ("ex:m", "ex:crew", "ex:a")])
        assert compute_ldsd(g, "ex:a", "ex:b") == 0.5

    def test_same_resource_is_error(self):
        with pytest.raises(ValueError):
            compute_ldsd(Graph(), "ex:a", "ex:a")

    @settings(max_examples=200)
    @given(graph_st, st.sampled_from(NODES), st.sampled_from(NODES))
    def test_matches_naive_and_symmetric(self, triples, a, b):
        if a == b:
            return
        g = Graph(triples)
        value = compute_ldsd(g, a, b)
        assert value == pytest.approx(ldsd_naive(triples, a, b), abs=1e-12)
        assert value == compute_ldsd(g, b, a)
        assert 0.0 < value <= 1.0

    @given(graph_st, st.sampled_from(NODES), st.sampled_from(NODES), st.sampled_from(PROPS))
    def test_adding_link_never_increases(self, triples, a, b, p):
        if a == b:
            return
        g = Graph(triples)
        assert compute_ldsd(g.union([(a, p, b)]), a, b) <= compute_ldsd(g, a, b)

    def test_cache_memoizes_unordered_pairs(self):
        g = Graph([("ex:a", "ex:p", "ex:b")])
        cache = LdsdCache(g)
        assert cache.get("ex:a", "ex:b") == cache.get("ex:b", "ex:a") == 0.5
        assert len(cache) == 1

    def test_cache_concurrent_reads(self):
        triples = [(f"ex:m{i}", "ex:p", f"ex:n{i % 7}") for i in range(60)]
        g = Graph(triples)
        cache = LdsdCache(g)
        nodes = sorted(g.nodes)
        results = []

        def work():
            results.append([cache.get(x, y) for x in nodes[:10] for y in nodes[10:20]])

        threads = [threading.Thread(target=work) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert all(r == results[0] for r in results)
        assert results[0] == [compute_ldsd(g, x, y) for x in nodes[:10] for y in nodes[10:20]]


class TestMapping:
    def test_singleton(self):
        assert map_entities([("ex:e1", "ex:w1")]) == {"ex:e1": "ex:w1"}

    def test_ambiguous_source_ignored(self):
        assert map_entities([("ex:e1", "ex:w1"), ("ex:e1", "ex:w2")]) == {}

    def test_duplicate_pairs_collapse(self):
        table = map_entities([("ex:e1", "ex:w1"), ("ex:e1", "ex:w1"), ("ex:e2", "ex:w3")])
        assert table == {"ex:e1": "ex:w1", "ex:e2": "ex:w3"}

    @given(st.lists(st.tuples(st.sampled_from(NODES), st.sampled_from(NODES))))
    def test_idempotent(self, raw):
        table = map_entities(raw)
        assert map_entities(table.items()) == table

    def test_read_mapping_file(self, tmp_path):
        path = write(tmp_path, "ex:a\tex:x\nex:b\tex:y\nex:b\tex:z\n", "map.tsv")
        assert read_mapping(path) == {"ex:a": "ex:x"}


class TestTypes:
    g = Graph([
        ("ex:e", "ex:type", "dbo:Film"),
        ("ex:e", "ex:type", "yago:Thing"),
    ])

    def test_prefix_filter(self):
        assert fetch_types(self.g, "ex:e", "ex:type", "dbo:") == {"dbo:Film"}

    def test_no_types(self):
        assert fetch_types(self.g, "ex:other", "ex:type") == set()

    def test_no_filter(self):
        assert fetch_types(self.g, "ex:e", "ex:type") == {"dbo:Film", "yago:Thing"}


def test_discovery_file_roundtrip(tmp_path):
    records = [DiscoveryRecord("ex:m", "ex:a", 0.25), DiscoveryRecord("ex:n", "ex:a")]
    path = write(tmp_path, format_discoveries(records), "disc.tsv")
    assert path.read_text().splitlines() == ["ex:m\tex:a\t0.25", "ex:n\tex:a\tNA"]
    assert read_discoveries(path) == records
