"""Dataset preprocessing, resampling, tree ensembles, metrics, and importance.

Everything here is deterministic for a fixed seed and runs on plain numpy
arrays. Models carry their feature-name binding and the preprocessing
statistics frozen at training time, and serialize to a versioned JSON format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from . import trees as _trees

VARIANCE_FLOOR = 1e-12

MODEL_FORMAT_VERSION = 1


class EmptyDataset(Exception):
    pass


class SingleClassError(Exception):
    pass


class TooFewMinoritySamples(Exception):
    pass


class TooFewRows(Exception):
    pass


class DegenerateHyperparams(Exception):
    pass


class FeatureMismatch(Exception):
    """Prediction input does not match the features the model was trained on."""


class ModelKind(Enum):
    RANDOM_FOREST = "random_forest"
    GRADIENT_BOOSTED = "gradient_boosted"


class ResampleStrategy(Enum):
    RANDOM_OVER = "random_over"
    RANDOM_UNDER = "random_under"
    SMOTE = "smote"


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with aligned labels and name bindings.

    `y` holds indices into `class_names`; unlabeled datasets use y=None.
    """

    X: np.ndarray
    y: np.ndarray | None
    feature_names: tuple[str, ...]
    class_names: tuple[str, ...]

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[1] != len(self.feature_names):
            raise FeatureMismatch(
                f"X has {self.X.shape} but {len(self.feature_names)} feature names"
            )

    @property
    def n_rows(self) -> int:
        return len(self.X)

    def subset(self, idx: np.ndarray) -> "Dataset":
        return replace(self, X=self.X[idx], y=None if self.y is None else self.y[idx])

    def drop_feature(self, name: str) -> "Dataset":
        keep = [i for i, n in enumerate(self.feature_names) if n != name]
        return replace(
            self,
            X=self.X[:, keep],
            feature_names=tuple(self.feature_names[i] for i in keep),
        )


@dataclass(frozen=True)
class PreprocessStats:
    """Frozen imputation/drop/scale parameters learned on a training set."""

    input_names: tuple[str, ...]
    kept_names: tuple[str, ...]
    dropped_names: tuple[str, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]

    def apply(self, X: np.ndarray, input_names: Sequence[str]) -> np.ndarray:
        if tuple(input_names) != self.input_names:
            raise FeatureMismatch("feature names differ from the preprocessing manifest")
        X = np.nan_to_num(np.asarray(X, dtype=np.float64), nan=0.0)
        keep = [self.input_names.index(n) for n in self.kept_names]
        return (X[:, keep] - np.array(self.mean)) / np.array(self.std)


def preprocess(d: Dataset) -> tuple[Dataset, PreprocessStats]:
    """Impute missing values with 0, drop (near-)constant features, and scale.

    Scaling is the standard (x - mean) / std with population statistics;
    features whose post-imputation variance is below 1e-12 are dropped.
    """
    if d.n_rows < 2:
        raise EmptyDataset(f"need at least 2 rows, got {d.n_rows}")
    X = np.nan_to_num(d.X.astype(np.float64), nan=0.0)
    var = X.var(axis=0)
    keep = np.flatnonzero(var >= VARIANCE_FLOOR)
    dropped = tuple(d.feature_names[i] for i in np.flatnonzero(var < VARIANCE_FLOOR))
    kept_names = tuple(d.feature_names[i] for i in keep)
    mean = X[:, keep].mean(axis=0)
    std = X[:, keep].std(axis=0)
    scaled = (X[:, keep] - mean) / std
    stats = PreprocessStats(
        input_names=d.feature_names,
        kept_names=kept_names,
        dropped_names=dropped,
        mean=tuple(float(v) for v in mean),
        std=tuple(float(v) for v in std),
    )
    return replace(d, X=scaled, feature_names=kept_names), stats


def _k_nearest(minority: np.ndarray, k: int) -> np.ndarray:
    """Indices of each point's k nearest same-class neighbors (excluding itself)."""
    diff = minority[:, None, :] - minority[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    return np.argsort(dist, axis=1, kind="stable")[:, :k]


def resample(
    d: Dataset,
    strategy: ResampleStrategy | str,
    k_neighbors: int = 5,
    rng_seed: int = 0,
) -> Dataset:
    """Balance class counts by resampling.

    Over-sampling and SMOTE raise every class to the majority count; under-
    sampling cuts every class to the minority count. SMOTE synthetics are
    uniform points on the segment between a class member and one of its
    k nearest neighbors within the class.
    """
    if d.y is None:
        raise EmptyDataset("resampling needs labels")
    strategy = ResampleStrategy(strategy)
    counts = np.bincount(d.y, minlength=len(d.class_names))
    present = np.flatnonzero(counts)
    if len(present) < 2:
        raise SingleClassError("resampling needs at least two classes")
    rng = np.random.default_rng(rng_seed)

    if strategy is ResampleStrategy.RANDOM_UNDER:
        target = counts[present].min()
        keep: list[np.ndarray] = []
        for c in present:
            idx = np.flatnonzero(d.y == c)
            keep.append(rng.choice(idx, size=target, replace=False) if len(idx) > target else idx)
        sel = np.sort(np.concatenate(keep))
        return d.subset(sel)

    target = counts[present].max()
    X_parts = [d.X]
    y_parts = [d.y]
    for c in present:
        idx = np.flatnonzero(d.y == c)
        deficit = target - len(idx)
        if deficit <= 0:
            continue
        if strategy is ResampleStrategy.RANDOM_OVER:
            extra = rng.choice(idx, size=deficit, replace=True)
            X_parts.append(d.X[extra])
        else:  # SMOTE
            if len(idx) <= k_neighbors:
                raise TooFewMinoritySamples(
                    f"class {d.class_names[c]} has {len(idx)} rows, "
                    f"needs more than k_neighbors={k_neighbors}"
                )
            minority = d.X[idx]
            neighbors = _k_nearest(minority, k_neighbors)
            base = rng.integers(0, len(idx), size=deficit)
            pick = rng.integers(0, k_neighbors, size=deficit)
            lam = rng.uniform(0.0, 1.0, size=deficit)
            anchor = minority[base]
            partner = minority[neighbors[base, pick]]
            X_parts.append(anchor + lam[:, None] * (partner - anchor))
        y_parts.append(np.full(deficit, c, dtype=d.y.dtype))
    return replace(d, X=np.vstack(X_parts), y=np.concatenate(y_parts))


@dataclass(frozen=True)
class Hyperparams:
    n_trees: int = 100
    max_depth: int = 12
    learning_rate: float = 0.1
    max_features: str | int | None = "sqrt"

    def resolve_max_features(self, n_features: int) -> int | None:
        if self.max_features is None:
            return None
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(n_features)))
        return int(self.max_features)


RF_DEFAULTS = Hyperparams(n_trees=100, max_depth=12, max_features="sqrt")
GBT_DEFAULTS = Hyperparams(n_trees=200, max_depth=4, learning_rate=0.1, max_features=None)


@dataclass
class TreeEnsembleModel:
    """A trained forest or boosted ensemble with its name bindings.

    For forests `trees` is a flat list; for boosted models it is one list of
    per-class trees per round. `preprocess_stats`, when present, is applied
    to raw inputs before prediction.
    """

    kind: ModelKind
    class_names: tuple[str, ...]
    feature_names: tuple[str, ...]
    hyperparams: Hyperparams
    trees: list
    seed: int
    preprocess_stats: PreprocessStats | None = None

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if self.preprocess_stats is not None:
            if X.shape[1] != len(self.preprocess_stats.input_names):
                raise FeatureMismatch(
                    f"expected {len(self.preprocess_stats.input_names)} raw features, "
                    f"got {X.shape[1]}"
                )
            X = self.preprocess_stats.apply(X, self.preprocess_stats.input_names)
        elif X.shape[1] != len(self.feature_names):
            raise FeatureMismatch(
                f"expected {len(self.feature_names)} features, got {X.shape[1]}"
            )
        if self.kind is ModelKind.RANDOM_FOREST:
            return _trees.forest_vote_proba(self.trees, X, len(self.class_names))
        return _trees.boosted_proba(
            self.trees, X, len(self.class_names), self.hyperparams.learning_rate
        )

    def predict_proba_named(self, names: Sequence[str], X: np.ndarray) -> np.ndarray:
        expected = (
            self.preprocess_stats.input_names
            if self.preprocess_stats is not None
            else self.feature_names
        )
        if tuple(names) != expected:
            raise FeatureMismatch("feature names do not match the trained model")
        return self.predict_proba(X)


def train_ensemble(
    d: Dataset,
    kind: ModelKind,
    hyperparams: Hyperparams | None = None,
    rng_seed: int = 0,
) -> TreeEnsembleModel:
    """Train a random forest or gradient-boosted ensemble.

    Forests bootstrap rows and draw feature subsets per split; boosting fits
    per-class regression trees to softmax residuals. Deterministic for a
    fixed seed.
    """
    if d.y is None or d.n_rows == 0:
        raise EmptyDataset("training needs labeled rows")
    hp = hyperparams or (RF_DEFAULTS if kind is ModelKind.RANDOM_FOREST else GBT_DEFAULTS)
    if hp.n_trees < 1 or hp.max_depth < 1:
        raise DegenerateHyperparams(f"n_trees={hp.n_trees}, max_depth={hp.max_depth}")
    if len(np.unique(d.y)) < 2:
        raise SingleClassError("training needs at least two classes")
    n_classes = len(d.class_names)
    if kind is ModelKind.RANDOM_FOREST:
        fitted = _trees.fit_forest(
            d.X,
            d.y,
            n_classes=n_classes,
            n_trees=hp.n_trees,
            max_depth=hp.max_depth,
            max_features=hp.resolve_max_features(d.X.shape[1]) or d.X.shape[1],
            seed=rng_seed,
        )
    else:
        fitted = _trees.fit_boosted(
            d.X,
            d.y,
            n_classes=n_classes,
            n_rounds=hp.n_trees,
            max_depth=hp.max_depth,
            learning_rate=hp.learning_rate,
            seed=rng_seed,
        )
    return TreeEnsembleModel(
        kind=kind,
        class_names=d.class_names,
        feature_names=d.feature_names,
        hyperparams=hp,
        trees=fitted,
        seed=rng_seed,
    )


def fit_model(
    d: Dataset,
    kind: ModelKind,
    hyperparams: Hyperparams | None = None,
    rng_seed: int = 0,
    resample_strategy: ResampleStrategy | str | None = None,
    k_neighbors: int = 5,
) -> TreeEnsembleModel:
    """Preprocess, optionally rebalance, and train; stats embed in the model."""
    prepped, stats = preprocess(d)
    if resample_strategy is not None:
        prepped = resample(prepped, resample_strategy, k_neighbors, rng_seed)
    model = train_ensemble(prepped, kind, hyperparams, rng_seed)
    model.preprocess_stats = stats
    return model


# ---------------------------------------------------------------------------
# Metrics


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Area under the ROC curve via the rank statistic; ties count one half.

    Equivalent to the probability a random positive outranks a random
    negative, which is the pairwise comparison normalized by n+ * n-.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("AUC needs both classes")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # average rank, 1-based
        i = j + 1
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def accuracy(pred: np.ndarray, truth: np.ndarray) -> float:
    return float((pred == truth).mean())


def precision_recall(pred: np.ndarray, truth: np.ndarray, cls: int) -> tuple[float, float]:
    tp = int(((pred == cls) & (truth == cls)).sum())
    fp = int(((pred == cls) & (truth != cls)).sum())
    fn = int(((pred != cls) & (truth == cls)).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall


def macro_ovr_auc(proba: np.ndarray, truth: np.ndarray, n_classes: int) -> float:
    """One-vs-rest AUC averaged over the classes present in `truth`."""
    aucs = []
    for c in range(n_classes):
        binary = (truth == c).astype(int)
        if binary.min() == binary.max():
            continue
        aucs.append(roc_auc(proba[:, c], binary))
    if not aucs:
        raise SingleClassError("no class admits a one-vs-rest AUC")
    return float(np.mean(aucs))


# ---------------------------------------------------------------------------
# Cross-validation and feature importance


@dataclass(frozen=True)
class CvReport:
    folds: int
    auc: tuple[float, ...]
    accuracy: tuple[float, ...]
    per_class_precision: dict[str, tuple[float, ...]]
    per_class_recall: dict[str, tuple[float, ...]]

    @property
    def mean_auc(self) -> float:
        return float(np.mean(self.auc))

    @property
    def std_auc(self) -> float:
        return float(np.std(self.auc))

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracy))

    def summary(self) -> str:
        lines = [
            f"auc: {self.mean_auc:.3f} +/- {self.std_auc:.3f}",
            f"accuracy: {self.mean_accuracy:.3f} +/- {float(np.std(self.accuracy)):.3f}",
        ]
        for cls in self.per_class_precision:
            p = np.mean(self.per_class_precision[cls])
            r = np.mean(self.per_class_recall[cls])
            lines.append(f"{cls}: precision {p:.3f} recall {r:.3f}")
        return "\n".join(lines)


def stratified_folds(
    y: np.ndarray, k: int, seed: int = 0
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffled per-class round-robin assignment into k folds."""
    rng = np.random.default_rng(seed)
    fold_of = np.zeros(len(y), dtype=np.int64)
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        rng.shuffle(idx)
        fold_of[idx] = np.arange(len(idx)) % k
    out = []
    for f in range(k):
        val = np.flatnonzero(fold_of == f)
        train = np.flatnonzero(fold_of != f)
        out.append((train, val))
    return out


Trainer = Callable[[Dataset], TreeEnsembleModel]


def cross_validate(
    d: Dataset, k: int, trainer: Trainer, seed: int = 0
) -> CvReport:
    """Stratified k-fold evaluation; the trainer sees only the training fold.

    Any resampling must happen inside `trainer` so validation rows are never
    synthesized from or duplicated into the training side.
    """
    if d.y is None:
        raise EmptyDataset("cross-validation needs labels")
    if k < 2:
        raise TooFewRows("k must be >= 2")
    counts = np.bincount(d.y, minlength=len(d.class_names))
    present = np.flatnonzero(counts)
    if (counts[present] < k).any():
        raise TooFewRows(f"every class needs at least {k} rows, have {counts[present]}")

    aucs, accs = [], []
    precisions: dict[str, list[float]] = {c: [] for c in d.class_names}
    recalls: dict[str, list[float]] = {c: [] for c in d.class_names}
    for train_idx, val_idx in stratified_folds(d.y, k, seed):
        model = trainer(d.subset(train_idx))
        proba = model.predict_proba(d.X[val_idx])
        pred = np.argmax(proba, axis=1)
        truth = d.y[val_idx]
        aucs.append(macro_ovr_auc(proba, truth, len(d.class_names)))
        accs.append(accuracy(pred, truth))
        for c, name in enumerate(d.class_names):
            p, r = precision_recall(pred, truth, c)
            precisions[name].append(p)
            recalls[name].append(r)
    return CvReport(
        folds=k,
        auc=tuple(aucs),
        accuracy=tuple(accs),
        per_class_precision={c: tuple(v) for c, v in precisions.items()},
        per_class_recall={c: tuple(v) for c, v in recalls.items()},
    )


def loco_importance(
    d: Dataset, trainer: Trainer, folds: int = 5, seed: int = 0
) -> list[tuple[str, float]]:
    """Leave-one-covariate-out importance: AUC lost when a feature is dropped.

    All runs share the same fold partition so each feature's loss is a paired
    comparison against the all-features baseline. Sorted by descending loss.
    """
    if len(d.feature_names) < 2:
        raise TooFewRows("importance needs at least two features")
    base = cross_validate(d, folds, trainer, seed).mean_auc
    out = []
    for name in d.feature_names:
        reduced = d.drop_feature(name)
        auc = cross_validate(reduced, folds, trainer, seed).mean_auc
        out.append((name, base - auc))
    out.sort(key=lambda t: -t[1])
    return out


# ---------------------------------------------------------------------------
# Model serialization


def model_to_dict(model: TreeEnsembleModel) -> dict:
    if model.kind is ModelKind.RANDOM_FOREST:
        trees_obj = [t.to_dict() for t in model.trees]
    else:
        trees_obj = [[t.to_dict() for t in rnd] for rnd in model.trees]
    stats = model.preprocess_stats
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind.value,
        "class_names": list(model.class_names),
        "feature_names": list(model.feature_names),
        "hyperparams": {
            "n_trees": model.hyperparams.n_trees,
            "max_depth": model.hyperparams.max_depth,
            "learning_rate": model.hyperparams.learning_rate,
            "max_features": model.hyperparams.max_features,
        },
        "seed": model.seed,
        "preprocess": None
        if stats is None
        else {
            "input_names": list(stats.input_names),
            "kept_names": list(stats.kept_names),
            "dropped_names": list(stats.dropped_names),
            "mean": list(stats.mean),
            "std": list(stats.std),
        },
        "trees": trees_obj,
    }


def model_from_dict(doc: dict) -> TreeEnsembleModel:
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format {doc.get('format_version')!r}")
    kind = ModelKind(doc["kind"])
    if kind is ModelKind.RANDOM_FOREST:
        fitted = [_trees.DecisionTree.from_dict(t) for t in doc["trees"]]
    else:
        fitted = [[_trees.DecisionTree.from_dict(t) for t in rnd] for rnd in doc["trees"]]
    hp = Hyperparams(**doc["hyperparams"])
    stats_doc = doc.get("preprocess")
    stats = None
    if stats_doc is not None:
        stats = PreprocessStats(
            input_names=tuple(stats_doc["input_names"]),
            kept_names=tuple(stats_doc["kept_names"]),
            dropped_names=tuple(stats_doc["dropped_names"]),
            mean=tuple(stats_doc["mean"]),
            std=tuple(stats_doc["std"]),
        )
    return TreeEnsembleModel(
        kind=kind,
        class_names=tuple(doc["class_names"]),
        feature_names=tuple(doc["feature_names"]),
        hyperparams=hp,
        trees=fitted,
        seed=doc["seed"],
        preprocess_stats=stats,
    )


def save_model(model: TreeEnsembleModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path: str) -> TreeEnsembleModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
