from .records import (
    AggregatedScores,
    AnnotationRecord,
    AnnotatorGroup,
    BINARY,
    FIVE_POINT,
    Scale,
    ScoreSource,
    THREE_POINT,
    parse_annotations,
    read_scores_tsv,
    scores_by_source,
    write_scores_tsv,
)
from .combine import (
    group_mean_scores,
    majority_scores,
    majority_vote,
    mean_rating,
    mix_score,
    mix_scores,
    weighted_average,
    weighted_average_scores,
)
from .mace import MaceConfig, MaceError, MaceResult, mace_em, mace_p, mace_scores, most_probable_labels
from .reliability import AlphaMetric, AlphaReport, krippendorff_alpha, per_annotator_alpha

__all__ = [
    "AggregatedScores",
    "AlphaMetric",
    "AlphaReport",
    "AnnotationRecord",
    "AnnotatorGroup",
    "BINARY",
    "FIVE_POINT",
    "MaceConfig",
    "MaceError",
    "MaceResult",
    "Scale",
    "ScoreSource",
    "THREE_POINT",
    "group_mean_scores",
    "krippendorff_alpha",
    "mace_em",
    "mace_p",
    "mace_scores",
    "majority_scores",
    "majority_vote",
    "mean_rating",
    "mix_score",
    "mix_scores",
    "most_probable_labels",
    "parse_annotations",
    "per_annotator_alpha",
    "read_scores_tsv",
    "scores_by_source",
    "weighted_average",
    "weighted_average_scores",
    "write_scores_tsv",
]
