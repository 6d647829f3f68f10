"""Train the subtree classifier on synthetic visit triples and inspect it:
cross-validation metrics, then leave-one-covariate-out feature importance.

Run:  python3 demos/04_training_and_importance.py  (about a minute)
"""

import numpy as np

from breakwatch.fixtures import dataset_from_triples, training_triples
from breakwatch.learn import (
    Hyperparams,
    ModelKind,
    cross_validate,
    fit_model,
    loco_importance,
    preprocess,
    train_ensemble,
)

# --- build a labeled dataset from 60 synthetic visit triples
triples = training_triples(seed=555, count=60)
ds = dataset_from_triples(triples)
counts = {name: int((ds.y == i).sum()) for i, name in enumerate(ds.class_names)}
print(f"dataset: {ds.n_rows} subtrees x {len(ds.feature_names)} features, "
      f"class counts {counts}")

# --- preprocessing drops dead columns and standardizes the rest
prepped, stats = preprocess(ds)
print(f"preprocess: kept {len(stats.kept_names)} features, "
      f"dropped {len(stats.dropped_names)} near-constant ones")

# --- cross-validated comparison of the two ensemble kinds
hp_gbt = Hyperparams(n_trees=60, max_depth=3, learning_rate=0.2, max_features=None)
hp_rf = Hyperparams(n_trees=100, max_depth=12, max_features="sqrt")
for kind, hp in ((ModelKind.GRADIENT_BOOSTED, hp_gbt), (ModelKind.RANDOM_FOREST, hp_rf)):
    def trainer(d, kind=kind, hp=hp):
        return train_ensemble(d, kind, hp, rng_seed=1)

    report = cross_validate(prepped, 5, trainer, seed=2)
    print(f"\n{kind.value} 5-fold:")
    print("  " + report.summary().replace("\n", "\n  "))

# --- final model with resampling, then feature importance
model = fit_model(ds, ModelKind.GRADIENT_BOOSTED, hp_gbt, rng_seed=1,
                  resample_strategy="smote")
proba = model.predict_proba(ds.X)
print(f"\ntraining-set accuracy: {(np.argmax(proba, 1) == ds.y).mean():.3f}")


def quick_trainer(d):
    return train_ensemble(
        d, ModelKind.GRADIENT_BOOSTED,
        Hyperparams(n_trees=25, max_depth=3, learning_rate=0.3, max_features=None),
        rng_seed=1,
    )


ranked = loco_importance(prepped, quick_trainer, folds=5, seed=3)
print("\ntop features by AUC loss when left out:")
for name, loss in ranked[:10]:
    print(f"  {name:<32} {loss:+.4f}")
