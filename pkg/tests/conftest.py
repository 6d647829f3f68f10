"""Shared builders for snapshots and trained models."""

from __future__ import annotations

import pytest

from breakwatch.fixtures import dataset_from_triples, training_triples
from breakwatch.learn import Hyperparams, ModelKind, fit_model
from breakwatch.snapshot import (
    Condition,
    DomNode,
    NodeAttrs,
    Snapshot,
    VisualCues,
)


def make_cues(
    x=0.0,
    y=0.0,
    w=100.0,
    h=50.0,
    visible=True,
    text="",
    bg=(255, 255, 255),
    font_size=16.0,
    font_weight=400.0,
) -> VisualCues:
    return VisualCues(
        x=x,
        y=y,
        width=w,
        height=h,
        visible=visible,
        text=text,
        background_color=bg,
        font_size=font_size,
        font_weight=font_weight,
    )


def make_node(
    nid,
    tag="div",
    parent=None,
    children=(),
    html_id=None,
    classes=(),
    src=None,
    name=None,
    extra=(),
    cues=None,
    **cue_kwargs,
) -> DomNode:
    return DomNode(
        id=nid,
        tag=tag,
        parent=parent,
        children=tuple(children),
        attrs=NodeAttrs(
            html_id=html_id, class_list=tuple(classes), src=src, name=name, extra=tuple(extra)
        ),
        cues=cues or make_cues(**cue_kwargs),
    )


def build_snapshot(nodes, condition=Condition.NONE, url="https://example.test/", **kwargs):
    return Snapshot(
        page_url=url,
        condition=condition,
        captured_at="2024-05-01T00:00:00Z",
        nodes=tuple(nodes),
        **kwargs,
    )


def single_node_snapshot(**kwargs):
    return build_snapshot([make_node(0, tag="html", w=800, h=600, **kwargs)])


@pytest.fixture(scope="session")
def breakage_model():
    """Subtree classifier trained on synthetic triples; shared across tests."""
    triples = training_triples(seed=1234, count=36)
    ds = dataset_from_triples(triples)
    hp = Hyperparams(n_trees=60, max_depth=3, learning_rate=0.2, max_features=None)
    return fit_model(
        ds,
        ModelKind.GRADIENT_BOOSTED,
        hp,
        rng_seed=7,
        resample_strategy="smote",
    )
