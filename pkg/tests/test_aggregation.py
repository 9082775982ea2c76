import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from argquality.aggregation import (
    AggregatedScores,
    AnnotationRecord,
    AnnotatorGroup,
    BINARY,
    FIVE_POINT,
    ScoreSource,
    group_mean_scores,
    majority_scores,
    majority_vote,
    mean_rating,
    mix_score,
    mix_scores,
    parse_annotations,
    read_scores_tsv,
    scores_by_source,
    weighted_average,
    weighted_average_scores,
    write_scores_tsv,
)
from argquality.aggregation.records import AnnotationError
from argquality.corpus import ALL_DIMENSIONS, Dimension


def test_mean_rating_basic():
    assert mean_rating([3, 4, 5]) == 4.0


def test_mean_rating_skips_cannot_judge():
    assert mean_rating([3, None, 5]) == 4.0


def test_mean_rating_all_cannot_judge():
    assert mean_rating([None]) is None
    assert mean_rating([]) is None


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 5) | st.none(), min_size=1, max_size=12), st.randoms())
def test_mean_rating_permutation_invariant_and_bounded(ratings, rnd):
    shuffled = list(ratings)
    rnd.shuffle(shuffled)
    assert mean_rating(shuffled) == mean_rating(ratings)
    value = mean_rating(ratings)
    defined = [r for r in ratings if r is not None]
    if defined:
        assert min(defined) <= value <= max(defined)
    else:
        assert value is None


def test_mix_score():
    assert mix_score(4.0, 3.0) == 3.5
    assert mix_score(1.0, 5.0) == 3.0
    for x in (1.0, 2.5, 4.75):
        assert mix_score(x, x) == x


def test_mix_score_undefined_inputs():
    with pytest.raises(ValueError):
        mix_score(None, 3.0)
    with pytest.raises(ValueError):
        mix_score(3.0, None)


def test_majority_vote():
    assert majority_vote([1, 1, 0]) == 1
    assert majority_vote([0, 1]) == 0  # tie breaks toward the smaller label
    votes = [1] * 6 + [0] * 4  # 6 of 10 raters say argumentative
    assert majority_vote(votes) == 1
    with pytest.raises(ValueError):
        majority_vote([])


def test_weighted_average():
    assert weighted_average([1, 1, 0]) == pytest.approx(2 / 3)
    assert weighted_average([1, 0], [3, 1]) == 0.75
    with pytest.raises(ValueError):
        weighted_average([])
    with pytest.raises(ValueError):
        weighted_average([1, 0], [0, 0])
    with pytest.raises(ValueError):
        weighted_average([1, 0], [1])
    with pytest.raises(ValueError):
        weighted_average([1, 0], [-1, 2])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=10))
def test_weighted_average_uniform_equals_mean(bits):
    assert weighted_average(bits) == pytest.approx(mean_rating(bits))


def _record(doc, annotator, group, **scores):
    ratings = {Dimension(k): v for k, v in scores.items()}
    return AnnotationRecord(doc_id=doc, annotator_id=annotator, group=group, ratings=ratings)


def test_group_mean_scores():
    anns = [
        _record("d1", "e1", AnnotatorGroup.EXPERT, overall=4, cogency=2),
        _record("d1", "e2", AnnotatorGroup.EXPERT, overall=2, cogency=None),
        _record("d1", "c1", AnnotatorGroup.CROWD, overall=5),
    ]
    rows = group_mean_scores(anns, AnnotatorGroup.EXPERT)
    assert len(rows) == 1
    assert rows[0].source is ScoreSource.EXPERT_MEAN
    assert rows[0].scores[Dimension.OVERALL] == 3.0
    assert rows[0].scores[Dimension.COGENCY] == 2.0
    assert Dimension.EFFECTIVENESS not in rows[0].scores


def test_mix_scores_only_shared_docs():
    expert = [AggregatedScores("d1", ScoreSource.EXPERT_MEAN, {Dimension.OVERALL: 4.0})]
    crowd = [
        AggregatedScores("d1", ScoreSource.CROWD_MEAN, {Dimension.OVERALL: 3.0}),
        AggregatedScores("d2", ScoreSource.CROWD_MEAN, {Dimension.OVERALL: 1.0}),
    ]
    rows = mix_scores(expert, crowd)
    assert [r.doc_id for r in rows] == ["d1"]
    assert rows[0].scores[Dimension.OVERALL] == 3.5


def test_weighted_average_scores_broadcasts_binary():
    anns = [
        _record("d1", "a1", AnnotatorGroup.UNSPECIFIED, overall=1),
        _record("d1", "a2", AnnotatorGroup.UNSPECIFIED, overall=0),
        _record("d1", "a3", AnnotatorGroup.UNSPECIFIED, overall=1),
    ]
    rows = weighted_average_scores(anns)
    assert rows[0].scores == {dim: pytest.approx(2 / 3) for dim in ALL_DIMENSIONS}
    narrow = weighted_average_scores(anns, broadcast_single_dimension=False)
    assert set(narrow[0].scores) == {Dimension.OVERALL}


def test_weighted_average_scores_with_weights():
    anns = [
        _record("d1", "good", AnnotatorGroup.UNSPECIFIED, overall=1),
        _record("d1", "bad", AnnotatorGroup.UNSPECIFIED, overall=0),
    ]
    rows = weighted_average_scores(anns, {"good": 3.0, "bad": 1.0})
    assert rows[0].scores[Dimension.OVERALL] == 0.75


def test_majority_scores():
    anns = [
        _record("d1", "a1", AnnotatorGroup.UNSPECIFIED, overall=1, cogency=2),
        _record("d1", "a2", AnnotatorGroup.UNSPECIFIED, overall=1, cogency=3),
        _record("d1", "a3", AnnotatorGroup.UNSPECIFIED, overall=0, cogency=3),
    ]
    rows = majority_scores(anns, broadcast_single_dimension=False)
    assert rows[0].scores[Dimension.OVERALL] == 1.0
    assert rows[0].scores[Dimension.COGENCY] == 3.0


def test_parse_annotations(tmp_path):
    path = tmp_path / "ann.jsonl"
    lines = [
        {"doc_id": "d1", "annotator_id": "a1", "group": "expert",
         "scores": {"cogency": 3, "overall": null_}}
        for null_ in [None]
    ]
    path.write_text("\n".join(json.dumps(l) for l in lines) + "\n", encoding="utf-8")
    records = parse_annotations(path, FIVE_POINT)
    assert records[0].group is AnnotatorGroup.EXPERT
    assert records[0].ratings[Dimension.COGENCY] == 3
    assert records[0].ratings[Dimension.OVERALL] is None


def test_parse_annotations_off_scale(tmp_path):
    path = tmp_path / "ann.jsonl"
    path.write_text(
        json.dumps({"doc_id": "d", "annotator_id": "a", "scores": {"overall": 2}}) + "\n",
        encoding="utf-8",
    )
    with pytest.raises(AnnotationError, match="off the binary scale"):
        parse_annotations(path, BINARY)


def test_scores_tsv_round_trip(tmp_path):
    rows = [
        AggregatedScores("d1", ScoreSource.MIX, {d: 3.25 for d in ALL_DIMENSIONS}),
        AggregatedScores("d2", ScoreSource.CROWD_MEAN, {Dimension.OVERALL: 4.0}),
    ]
    path = tmp_path / "scores.tsv"
    write_scores_tsv(rows, path)
    back = read_scores_tsv(path)
    assert back == sorted(rows, key=lambda r: (r.doc_id, r.source.value))
    by_source = scores_by_source(back)
    assert by_source["mix"]["d1"][Dimension.COGENCY] == 3.25
    assert Dimension.COGENCY not in by_source["crowd_mean"]["d2"]


def test_scores_tsv_na_cells():
    buffer = io.StringIO()
    write_scores_tsv(
        [AggregatedScores("d", ScoreSource.MIX, {Dimension.OVERALL: 1.5})], buffer
    )
    lines = buffer.getvalue().splitlines()
    assert lines[1].split("\t") == ["d", "mix", "NA", "NA", "NA", "1.5"]
