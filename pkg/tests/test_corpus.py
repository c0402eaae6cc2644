from collections import Counter
from datetime import date

from fieldlog.classify import detect_pest_keywords
from fieldlog.corpus import build_corpus, corpus_jsonl, install_corpus, load_bundled_corpus

TABLE_SUBJECTS = {
    "FarmProducts": 67,
    "Equipment": 60,
    "SalesMarketing": 24,
    "Environment": 8,
    "System": 23,
    "Others": 18,
}
TABLE_IMPORTANCE = {"L1": 26, "L2": 10, "L3": 89, "L4": 41, "L5": 12, "Unclassified": 24}
TABLE_TYPES = {
    "A0": 75, "A1": 5, "A2": 7, "B0": 27, "B1": 6, "B2": 7, "C1": 4, "C2": 24, "Unclassified": 50,
}


def axis_counts(messages, axis):
    counts = Counter()
    for m in messages:
        for value in {getattr(u, axis) for u in m.classification_units}:
            counts[value.value] += 1
    return dict(counts)


class TestBundledCorpus:
    def test_bundled_file_matches_generator(self):
        bundled = load_bundled_corpus()
        rebuilt = build_corpus()
        assert [m.to_dict() for m in bundled] == [m.to_dict() for m in rebuilt]

    def test_exactly_200_messages(self):
        assert len(load_bundled_corpus()) == 200

    def test_subject_distribution(self):
        assert axis_counts(load_bundled_corpus(), "subject") == TABLE_SUBJECTS

    def test_importance_distribution_202_units(self):
        counts = axis_counts(load_bundled_corpus(), "importance")
        assert counts == TABLE_IMPORTANCE
        assert sum(counts.values()) == 202

    def test_type_distribution_205_units(self):
        counts = axis_counts(load_bundled_corpus(), "type_code")
        assert counts == TABLE_TYPES
        assert sum(counts.values()) == 205

    def test_split_footnotes_modeled_as_units(self):
        messages = load_bundled_corpus()
        multi = [m for m in messages if len(m.classification_units) > 1]
        assert len(multi) == 7  # 2 importance splits + 5 type splits
        importance_splits = [
            m for m in multi if len({u.importance for u in m.classification_units}) == 2
        ]
        type_splits = [m for m in multi if len({u.type_code for u in m.classification_units}) == 2]
        assert len(importance_splits) == 2
        assert len(type_splits) == 5
        for m in multi:
            assert len({u.subject for u in m.classification_units}) == 1

    def test_exactly_18_pest_messages(self, lexicon):
        messages = load_bundled_corpus()
        pest = [m for m in messages if detect_pest_keywords(m.transcript, lexicon)]
        assert len(pest) == 18

    def test_all_inside_trial_months(self):
        months = {(m.recorded_at.year, m.recorded_at.month) for m in load_bundled_corpus()}
        assert months <= {(2017, 6), (2017, 7), (2017, 9), (2017, 10), (2017, 11)}

    def test_jsonl_is_stable(self):
        assert corpus_jsonl() == corpus_jsonl()


class TestInstall:
    def test_install_into_store(self, store):
        count = install_corpus(store)
        assert count == 200
        assert len(store.list_messages()) == 200
        assert len(store.list_zones()) == 10
        assert store.has_user("u-owner")
