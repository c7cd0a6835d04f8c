"""Head/tail classification, three-way rareness labels, benchmark build and round trip."""

from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oodbench import (
    AnswerDistribution,
    BaseDistribution,
    BinaryLabel,
    BuildConfig,
    ConfigurationError,
    DataError,
    RarenessLabel,
    SynthConfig,
    build_ood_split,
    classify_answers,
    generate_synthetic_corpus,
    load_benchmark,
    rareness_label,
    write_benchmark,
)

from conftest import corpus_from_counts


def dist(counts: dict[str, int]) -> AnswerDistribution:
    return AnswerDistribution.from_counts("g", counts)


class TestClassifyAnswers:
    def test_worked_example(self):
        # counts 10/5/3: mu = 6, cutoff at alpha 1.2 is 7.2
        labels = classify_answers(dist({"a": 10, "b": 5, "c": 3}), 1.2)
        assert labels == {"a": BinaryLabel.HEAD, "b": BinaryLabel.TAIL, "c": BinaryLabel.TAIL}

    def test_boundary_count_is_tail(self):
        # cutoff lands exactly on a count: 2 * mu = 6
        labels = classify_answers(dist({"x": 6, "y": 2, "z": 1}), 2)
        assert set(labels.values()) == {BinaryLabel.TAIL}
        # uniform at alpha 1: every count equals mu, everything tail
        labels = classify_answers(dist({"x": 4, "y": 4}), 1.0)
        assert set(labels.values()) == {BinaryLabel.TAIL}

    def test_decimal_alpha_is_read_exactly(self):
        # counts 11/9: mu = 10, cutoff 1.1 * 10 = 11 exactly. Binary float
        # 1.1 * 10 = 11.000000000000002 would call 11 HEAD; the exact
        # decimal reading must call it TAIL.
        labels = classify_answers(dist({"a": 11, "b": 9}), 1.1)
        assert labels["a"] is BinaryLabel.TAIL

    def test_alpha_extremes(self):
        d = dist({"a": 50, "b": 10})
        tiny = classify_answers(d, 0.01)
        assert set(tiny.values()) == {BinaryLabel.HEAD}
        huge = classify_answers(d, Fraction(10**6))
        assert set(huge.values()) == {BinaryLabel.TAIL}
        with pytest.raises(ConfigurationError):
            classify_answers(d, 0)

    def test_alpha_monotonicity_pointwise(self):
        d = dist({"a": 9, "b": 6, "c": 3, "e": 1})
        for a1, a2 in [(0.3, 0.9), (0.9, 1.2), (1.2, 4.0)]:
            tails1 = {k for k, v in classify_answers(d, a1).items() if v is BinaryLabel.TAIL}
            tails2 = {k for k, v in classify_answers(d, a2).items() if v is BinaryLabel.TAIL}
            assert tails1 <= tails2


class TestRarenessLabel:
    def test_three_regions_and_closed_boundaries(self):
        d = dist({f"a{i}": c for i, c in enumerate([7, 12, 6, 13, 10, 12])})
        # that histogram has mu = 10: 7 and 12 sit exactly on the bounds
        assert d.mu == 10
        assert rareness_label(d, "a0") is RarenessLabel.BORDERLINE  # 0.7 exactly
        assert rareness_label(d, "a1") is RarenessLabel.BORDERLINE  # 1.2 exactly
        assert rareness_label(d, "a2") is RarenessLabel.TAIL  # 0.6
        assert rareness_label(d, "a3") is RarenessLabel.HEAD  # 1.3
        assert rareness_label(d, "a4") is RarenessLabel.BORDERLINE  # 1.0

    def test_unseen_answer_is_tail(self):
        assert rareness_label(dist({"a": 5, "b": 5}), "never") is RarenessLabel.TAIL

    def test_threshold_validation(self):
        d = dist({"a": 5, "b": 5})
        with pytest.raises(ConfigurationError):
            rareness_label(d, "a", (1.2, 0.7))
        with pytest.raises(ConfigurationError):
            rareness_label(d, "a", (0, 1.2))


class TestBuildConfig:
    def test_defaults(self):
        config = BuildConfig()
        assert config.alpha == 1.2
        assert config.entropy_threshold == 0.9
        assert config.base_distribution is BaseDistribution.SELF_SPLIT
        assert config.rareness_thresholds == (0.7, 1.2)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(alpha=0),
            dict(alpha=-1.2),
            dict(entropy_threshold=0),
            dict(entropy_threshold=1.2),
            dict(rareness_low=0),
            dict(rareness_low=1.5, rareness_high=1.2),
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ConfigurationError):
            BuildConfig(**kwargs)


class TestBuild:
    def test_worked_example_counts(self):
        # one kept group (ebar 0.893 < 0.9) plus one uniform group that is filtered out
        corpus = corpus_from_counts(
            {"kept": {"a": 10, "b": 5, "c": 3}, "even": {"x": 4, "y": 4}}
        )
        bench = build_ood_split(corpus)
        assert set(bench.selected_groups) == {"kept"}
        assert bench.n_questions == 18
        assert len(bench.head_qids) == 10
        assert len(bench.tail_qids) == 8
        for qid, asg in bench.assignment.items():
            expected = BinaryLabel.HEAD if asg.answer == "a" else BinaryLabel.TAIL
            assert asg.label is expected
            assert asg.answer == corpus.records[qid].answer

    def test_partition_is_exact(self):
        corpus = generate_synthetic_corpus(SynthConfig(n_groups=30, seed=4, skew=0.3))
        bench = build_ood_split(corpus)
        assert bench.head_qids | bench.tail_qids == set(bench.assignment)
        assert not (bench.head_qids & bench.tail_qids)
        in_selected = {
            qid
            for key in bench.selected_groups
            for qid in corpus.group_index[key]
        }
        assert set(bench.assignment) == in_selected

    def test_tail_grows_with_alpha(self):
        corpus = generate_synthetic_corpus(SynthConfig(n_groups=20, seed=8, skew=0.4))
        alphas = [0.3, 0.7, 1.0, 1.2, 2.0, 5.0]
        tails = [
            build_ood_split(corpus, BuildConfig(alpha=a)).tail_qids for a in alphas
        ]
        for smaller, larger in zip(tails, tails[1:]):
            assert smaller <= larger

    def test_huge_alpha_swallows_everything(self):
        corpus = generate_synthetic_corpus(SynthConfig(n_groups=10, seed=2, skew=0.3))
        bench = build_ood_split(corpus, BuildConfig(alpha=10**6))
        assert bench.tail_qids == set(bench.assignment)
        assert not bench.head_qids

    def test_single_answer_groups_never_selected(self):
        corpus = corpus_from_counts({"solo": {"only": 40}, "ok": {"a": 9, "b": 1}})
        bench = build_ood_split(corpus)
        assert set(bench.selected_groups) == {"ok"}

    def test_groups_are_independent(self):
        """Adding an unrelated group must not change another group's labels."""
        small = corpus_from_counts({"g1": {"a": 10, "b": 5, "c": 3}})
        big = corpus_from_counts(
            {"g1": {"a": 10, "b": 5, "c": 3}, "g2": {"x": 400, "y": 3}}
        )
        b1 = build_ood_split(small)
        b2 = build_ood_split(big)
        for qid in b1.assignment:
            assert b1.assignment[qid] == b2.assignment[qid]


class TestBaseDistributions:
    def test_external_base_unseen_answers_are_tail(self):
        base = corpus_from_counts({"g": {"x": 7, "y": 3}}, split_name="train")
        target = corpus_from_counts({"g": {"c": 2, "d": 2, "e": 1}}, split_name="val")
        config = BuildConfig(base_distribution=BaseDistribution.EXTERNAL)
        bench = build_ood_split(target, config, base=base)
        assert bench.tail_qids == set(bench.assignment)
        assert bench.n_questions == 5
        # histograms in the artifact are the base's, not the target's
        assert dict(bench.selected_groups["g"].counts) == {"x": 7, "y": 3}

    def test_base_histograms_decide_labels(self):
        base = corpus_from_counts({"g": {"a": 10, "b": 5, "c": 3}}, split_name="train")
        target = corpus_from_counts({"g": {"a": 1, "b": 1, "c": 1}}, split_name="val")
        config = BuildConfig(base_distribution=BaseDistribution.TRAIN_SPLIT)
        bench = build_ood_split(target, config, base=base)
        by_answer = {asg.answer: asg.label for asg in bench.assignment.values()}
        assert by_answer == {
            "a": BinaryLabel.HEAD,
            "b": BinaryLabel.TAIL,
            "c": BinaryLabel.TAIL,
        }

    def test_groups_missing_from_base_are_dropped(self):
        base = corpus_from_counts({"g": {"x": 9, "y": 1}}, split_name="train")
        target = corpus_from_counts(
            {"g": {"x": 2, "y": 2}, "only-here": {"p": 6, "q": 1}}, split_name="val"
        )
        config = BuildConfig(base_distribution=BaseDistribution.EXTERNAL)
        bench = build_ood_split(target, config, base=base)
        assert set(bench.selected_groups) == {"g"}
        assert all(asg.group_key == "g" for asg in bench.assignment.values())

    def test_base_flag_consistency_is_enforced(self):
        corpus = corpus_from_counts({"g": {"a": 3, "b": 1}})
        other = corpus_from_counts({"g": {"a": 2, "b": 2}})
        with pytest.raises(ConfigurationError):
            build_ood_split(corpus, BuildConfig(), base=other)
        with pytest.raises(ConfigurationError):
            build_ood_split(
                corpus, BuildConfig(base_distribution=BaseDistribution.TRAIN_SPLIT)
            )


class TestRoundTrip:
    def test_benchmark_file_roundtrip(self, tmp_path):
        corpus = generate_synthetic_corpus(SynthConfig(n_groups=12, seed=6, skew=0.35))
        bench = build_ood_split(corpus, BuildConfig(alpha=1.5))
        path = tmp_path / "bench.json"
        write_benchmark(bench, path)
        loaded = load_benchmark(path)
        assert loaded == bench
        # re-export is byte identical (fingerprint included)
        path2 = tmp_path / "bench2.json"
        write_benchmark(loaded, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_fingerprint_tracks_content(self, tmp_path):
        corpus = corpus_from_counts({"g": {"a": 10, "b": 5, "c": 3}})
        p1, p2 = tmp_path / "b1.json", tmp_path / "b2.json"
        write_benchmark(build_ood_split(corpus, BuildConfig(alpha=1.2)), p1)
        write_benchmark(build_ood_split(corpus, BuildConfig(alpha=2.0)), p2)
        meta1 = json.loads(p1.read_text())["meta"]
        meta2 = json.loads(p2.read_text())["meta"]
        assert meta1["created"].startswith("sha256:")
        assert meta1["created"] != meta2["created"]

    def test_loader_rejects_damage(self, tmp_path):
        corpus = corpus_from_counts({"g": {"a": 9, "b": 1}})
        path = tmp_path / "bench.json"
        write_benchmark(build_ood_split(corpus), path)
        payload = json.loads(path.read_text())
        broken = tmp_path / "broken.json"

        naked = dict(payload)
        del naked["groups"]
        broken.write_text(json.dumps(naked))
        with pytest.raises(DataError, match="groups"):
            load_benchmark(broken)

        bad_label = json.loads(path.read_text())
        qid = next(iter(bad_label["questions"]))
        bad_label["questions"][qid]["label"] = "middle"
        broken.write_text(json.dumps(bad_label))
        with pytest.raises(DataError, match="bad label"):
            load_benchmark(broken)

        bad_group = json.loads(path.read_text())
        qid = next(iter(bad_group["questions"]))
        bad_group["questions"][qid]["group"] = "phantom"
        broken.write_text(json.dumps(bad_group))
        with pytest.raises(DataError, match="unknown group"):
            load_benchmark(broken)

        broken.write_text("not json at all")
        with pytest.raises(DataError, match="not valid JSON"):
            load_benchmark(broken)


@given(
    groups=st.dictionaries(
        st.sampled_from([f"g{i}" for i in range(6)]),
        st.dictionaries(
            st.sampled_from([f"ans{i}" for i in range(5)]),
            st.integers(min_value=1, max_value=40),
            min_size=1,
            max_size=5,
        ),
        min_size=1,
        max_size=6,
    ),
    alpha_pair=st.tuples(
        st.floats(min_value=0.05, max_value=6.0, allow_nan=False),
        st.floats(min_value=0.05, max_value=6.0, allow_nan=False),
    ),
)
@settings(max_examples=80, deadline=None)
def test_build_properties_hold_on_random_histograms(groups, alpha_pair):
    corpus = corpus_from_counts(groups)
    lo, hi = sorted(round(a, 3) for a in alpha_pair)
    b_lo = build_ood_split(corpus, BuildConfig(alpha=lo))
    b_hi = build_ood_split(corpus, BuildConfig(alpha=hi))
    # same selection regardless of alpha
    assert set(b_lo.selected_groups) == set(b_hi.selected_groups)
    # exact partition at both alphas
    for bench in (b_lo, b_hi):
        assert bench.head_qids | bench.tail_qids == set(bench.assignment)
        assert not (bench.head_qids & bench.tail_qids)
    # monotone tail growth
    assert b_lo.tail_qids <= b_hi.tail_qids
