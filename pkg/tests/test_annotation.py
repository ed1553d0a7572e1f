import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from semrevrec.annotation import (
    CorpusError,
    Gazetteer,
    Mention,
    OccurrenceIndex,
    Review,
    ServiceAnnotator,
    annotate_corpus,
    annotate_review,
    apply_mapping,
    build_index,
    corpus_stats,
    filter_mentions_by_type,
    ingest_reviews,
)


def write_jsonl(tmp_path, rows):
    path = tmp_path / "reviews.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return path


class TestIngest:
    def test_file_order(self, tmp_path):
        path = write_jsonl(tmp_path, [
            {"review_id": "r1", "item": "ex:M", "text": "one"},
            {"review_id": "r2", "item": "<ex:N>", "text": "two"},
        ])
        reviews = ingest_reviews(path)
        assert [r.review_id for r in reviews] == ["r1", "r2"]
        assert reviews[1].item == "ex:N"

    def test_pre_annotated(self, tmp_path):
        (r,) = ingest_reviews(write_jsonl(tmp_path, [{"review_id": "r1", "item": "ex:M", "entities": ["<ex:e1>"]}]))
        assert r.text == ""
        assert r.entities == ("ex:e1",)
        assert r.pre_annotated

    def test_duplicate_id(self, tmp_path):
        path = write_jsonl(tmp_path, [{"review_id": "r1", "item": "ex:M"}, {"review_id": "r1", "item": "ex:N"}])
        with pytest.raises(CorpusError, match=":2:"):
            ingest_reviews(path)

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"review_id": "r1", "item": "ex:M"}\n{not json\n')
        with pytest.raises(CorpusError, match=":2:"):
            ingest_reviews(path)

    def test_missing_item(self, tmp_path):
        with pytest.raises(CorpusError):
            ingest_reviews(write_jsonl(tmp_path, [{"review_id": "r1", "text": "x"}]))


class TestGazetteer:
    def test_single_match(self):
        gaz = Gazetteer({"kubrick": "ex:K"})
        assert annotate_review(Review("r1", "ex:M", "Kubrick directed it"), gaz) == [Mention("ex:K", "r1")]

    def test_longest_match(self):
        gaz = Gazetteer({"the dark knight": "ex:D", "the dark knight rises": "ex:R"})
        mentions = annotate_review(Review("r1", "ex:M", "the dark knight rises"), gaz)
        assert mentions == [Mention("ex:R", "r1")]

    def test_deduplicated_per_review(self):
        gaz = Gazetteer({"kubrick": "ex:K"})
        text = "Kubrick, then more KUBRICK."
        assert annotate_review(Review("r1", "ex:M", text), gaz) == [Mention("ex:K", "r1")]

    def test_word_boundaries(self):
        gaz = Gazetteer({"nolan": "ex:N"})
        assert annotate_review(Review("r1", "ex:M", "Nolanesque, not Nolan's"), gaz) == [Mention("ex:N", "r1")]
        assert gaz.scan("Nolanesque") == []

    def test_spans_are_exact(self):
        gaz = Gazetteer({"dark knight": "ex:D"})
        text = "A Dark   Knight indeed"
        (span,) = gaz.scan(text)
        assert text[span[0]:span[1]] == "Dark   Knight"

    def test_conflicting_surface_form(self):
        with pytest.raises(ValueError):
            Gazetteer({"Nolan": "ex:N", "nolan": "ex:Other"})

    def test_from_file(self, tmp_path):
        path = tmp_path / "gaz.tsv"
        path.write_text("Stanley Kubrick\t<ex:K>\nKubrick\tex:K\n")
        gaz = Gazetteer.from_file(path)
        assert len(gaz) == 2
        assert gaz.scan("stanley kubrick")[0][2] == "ex:K"

    @given(st.lists(st.sampled_from(["a", "b", "c", "a b", "b c", "x"]), max_size=20),
           st.dictionaries(st.sampled_from(["a", "b", "a b", "b c", "a b c"]), st.sampled_from(["ex:1", "ex:2", "ex:3"])))
    def test_spans_never_overlap(self, words, forms):
        if not forms:
            return
        gaz = Gazetteer(forms)
        text = " ".join(words)
        spans = gaz.scan(text)
        assert spans == gaz.scan(text)
        for (s1, e1, _), (s2, e2, _) in zip(spans, spans[1:]):
            assert e1 <= s2


class TestAnnotateCorpus:
    def test_pre_annotated_bypasses_annotator(self):
        reviews = [Review("r1", "ex:M", "", ("ex:e1", "ex:e1")), Review("r2", "ex:M", "kubrick")]
        mentions = annotate_corpus(reviews, Gazetteer({"kubrick": "ex:K"}))
        assert mentions == [Mention("ex:e1", "r1"), Mention("ex:K", "r2")]

    def test_text_without_annotator(self):
        with pytest.raises(CorpusError):
            annotate_corpus([Review("r1", "ex:M", "text")], None)

    def test_service_adapter(self):
        calls = []

        def post(url, payload):
            calls.append((url, json.loads(payload)))
            return b'["<ex:K>", "ex:N", "ex:K"]'

        ann = ServiceAnnotator("http://annotator.local/annotate", post=post)
        mentions = ann.annotate(Review("r1", "ex:M", "some text"))
        assert mentions == [Mention("ex:K", "r1"), Mention("ex:N", "r1")]
        assert calls == [("http://annotator.local/annotate", {"text": "some text"})]

    def test_type_filter(self):
        mentions = [Mention("ex:K", "r1"), Mention("ex:F", "r1"), Mention("ex:X", "r2")]
        types = {"ex:K": {"dbo:Person"}, "ex:F": {"dbo:Film", "yago:Thing"}}
        assert filter_mentions_by_type(mentions, types, "dbo:Film") == [Mention("ex:F", "r1")]

    def test_mapping_drops_unmapped(self):
        mentions = [Mention("yago:K", "r1"), Mention("yago:Z", "r1")]
        assert apply_mapping(mentions, {"yago:K": "dbr:K"}) == [Mention("dbr:K", "r1")]


class TestIndex:
    reviews = [Review(f"r{i}", "ex:M") for i in range(4)] + [Review("r9", "ex:N")]

    def test_review_level_counts(self):
        mentions = [Mention("ex:K", "r0"), Mention("ex:K", "r1"), Mention("ex:K", "r3"), Mention("ex:K", "r3")]
        index = build_index(self.reviews, mentions)
        assert index.count("ex:K", "ex:M") == 3

    def test_same_entity_two_items(self):
        index = build_index(self.reviews, [Mention("ex:K", "r0"), Mention("ex:K", "r9")])
        assert index.count("ex:K", "ex:M") == 1
        assert index.count("ex:K", "ex:N") == 1
        assert len(index) == 2

    def test_empty(self):
        index = build_index(self.reviews, [])
        assert len(index) == 0
        assert index.max_count("ex:M") == 0

    def test_dangling_review(self):
        with pytest.raises(CorpusError):
            build_index(self.reviews, [Mention("ex:K", "missing")])

    def test_permutation_invariant_and_maxima(self):
        rng = random.Random(7)
        reviews = [Review(f"r{i}", f"ex:item{i % 5}") for i in range(40)]
        mentions = [Mention(f"ex:e{rng.randrange(8)}", f"r{rng.randrange(40)}") for _ in range(150)]
        index = build_index(reviews, mentions)
        for _ in range(5):
            rng.shuffle(reviews)
            rng.shuffle(mentions)
            assert build_index(reviews, mentions) == index
        for item in index.items:
            assert index.max_count(item) == max(n for (e, i), n in index.counts.items() if i == item)
        assert all(n >= 1 for n in index.counts.values())

    def test_tsv_roundtrip(self, tmp_path):
        index = OccurrenceIndex({("ex:b", "ex:M"): 2, ("ex:a", "ex:N"): 1, ("ex:a", "ex:M"): 1})
        text = index.to_tsv()
        assert text == "ex:a\tex:M\t1\nex:b\tex:M\t2\nex:a\tex:N\t1\n"
        path = tmp_path / "index.tsv"
        path.write_text(text)
        assert OccurrenceIndex.from_tsv(path) == index


class TestCorpusStats:
    def test_distinct_and_total(self):
        index = OccurrenceIndex({("ex:e1", "ex:M"): 2, ("ex:e2", "ex:M"): 1})
        stats = corpus_stats([Review("r1", "ex:M"), Review("r2", "ex:M")], index)
        assert (stats.reviews, stats.distinct_entities, stats.total_entities) == (2, 2, 3)

    def test_empty(self):
        stats = corpus_stats([], OccurrenceIndex())
        assert (stats.reviews, stats.distinct_entities, stats.total_entities) == (0, 0, 0)
        assert stats.q1 is None and stats.q3 is None and stats.fence_high is None

    def test_outlier_fence(self):
        counts = {}
        for item, n in zip("ABCDE", [1, 2, 3, 4, 100]):
            for e in range(n):
                counts[(f"ex:e{e}", f"ex:{item}")] = 1
        stats = corpus_stats([], OccurrenceIndex(counts))
        # Q1 = 2, Q3 = 4, IQR = 2 -> open interval (-1, 7)
        assert (stats.q1, stats.q3) == (2.0, 4.0)
        assert (stats.fence_low, stats.fence_high) == (-1.0, 7.0)
        assert stats.outliers == ["ex:E"]

    @given(st.dictionaries(st.tuples(st.sampled_from("abcd"), st.sampled_from("MNO")), st.integers(1, 5)))
    def test_total_at_least_distinct(self, raw):
        index = OccurrenceIndex({(f"ex:{e}", f"ex:{i}"): n for (e, i), n in raw.items()})
        stats = corpus_stats([], index)
        assert stats.total_entities >= stats.distinct_entities
        all_ones = all(n == 1 for n in raw.values())
        # equality needs each entity to occur under a single item with count 1
        if stats.total_entities == stats.distinct_entities:
            assert all_ones
