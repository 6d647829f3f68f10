"""breakwatch: detect webpage breakage caused by filter-list changes.

The pipeline compares DOM snapshots from three visits to a page (no filter
list, breaking list, fixed list), extracts the changed subtrees, classifies
each change as broken, legitimate blocking, or page dynamism, and rolls the
predictions up into a page verdict with the offending subtrees identified.
"""

from .snapshot import (
    Condition,
    DomNode,
    EnvironmentGraph,
    Snapshot,
    build_environment_graph,
    parse_snapshot,
    serialize_snapshot,
    validate_snapshot,
)
from .segmentation import BlockHierarchy, leaf_blocks, segment_page
from .saliency import (
    SALIENCY_FEATURE_NAMES,
    extract_block_features,
    plan_interactions,
    score_block,
    train_saliency_model,
)
from .treediff import DeltaKind, DiffResult, best_match, diff_trees, node_similarity
from .labeling import SubtreeLabel, TransitionKind, label_subtree, label_visit_triple
from .features import (
    FEATURE_MANIFEST,
    FEATURE_NAMES,
    assemble_row,
    extract_global_features,
    extract_subtree_features,
    tag_group,
)
from .learn import (
    Dataset,
    ModelKind,
    cross_validate,
    fit_model,
    load_model,
    loco_importance,
    preprocess,
    resample,
    roc_auc,
    save_model,
    train_ensemble,
)
from .detector import (
    PageVerdict,
    PipelineConfig,
    PipelineReport,
    baseline_count,
    baseline_ratio,
    page_verdict_k,
    page_verdict_r,
    run_pipeline,
)
from .forum import classify_filter_rule, extract_issue_url, recover_list_refs

__version__ = "0.1.0"

__all__ = [
    "Condition",
    "DomNode",
    "EnvironmentGraph",
    "Snapshot",
    "build_environment_graph",
    "parse_snapshot",
    "serialize_snapshot",
    "validate_snapshot",
    "BlockHierarchy",
    "leaf_blocks",
    "segment_page",
    "SALIENCY_FEATURE_NAMES",
    "extract_block_features",
    "plan_interactions",
    "score_block",
    "train_saliency_model",
    "DeltaKind",
    "DiffResult",
    "best_match",
    "diff_trees",
    "node_similarity",
    "SubtreeLabel",
    "TransitionKind",
    "label_subtree",
    "label_visit_triple",
    "FEATURE_MANIFEST",
    "FEATURE_NAMES",
    "assemble_row",
    "extract_global_features",
    "extract_subtree_features",
    "tag_group",
    "Dataset",
    "ModelKind",
    "cross_validate",
    "fit_model",
    "load_model",
    "loco_importance",
    "preprocess",
    "resample",
    "roc_auc",
    "save_model",
    "train_ensemble",
    "PageVerdict",
    "PipelineConfig",
    "PipelineReport",
    "baseline_count",
    "baseline_ratio",
    "page_verdict_k",
    "page_verdict_r",
    "run_pipeline",
    "classify_filter_rule",
    "extract_issue_url",
    "recover_list_refs",
]
