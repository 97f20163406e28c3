"""Breadth-first tree growth.

``grow_tree`` runs the node loop over in-memory records: find the best
split, apply the stop rules, and either close the node or fan its records
out to one child per category group. ``train_tree`` is the glue from a
loaded dataset, carrying the dataset's schema echo into the model so
predictions can be made from the model file alone.
"""

from __future__ import annotations

from collections import Counter, deque
from typing import Mapping, Sequence

from .core import (
    GrowthParams,
    PredictorSpec,
    best_split,
    should_stop,
)
from .errors import ChaidError
from .ingest import Dataset
from .model import NodeSplit, Tree, TreeNode

__all__ = ["grow_tree", "train_tree"]


def grow_tree(
    records: Sequence[Mapping[str, object]],
    predictors: Sequence[PredictorSpec],
    target: str,
    params: GrowthParams = GrowthParams(),
    *,
    class_order: Sequence[str] | None = None,
    schema: dict | None = None,
) -> Tree:
    """Grow a tree over categorical records, breadth first.

    Node ids are assigned in breadth-first creation order, with children
    ordered like their category groups, so identical inputs always produce
    the identical tree. ``class_order`` fixes the emitted class order and
    defaults to the sorted observed classes.
    """
    if not records:
        raise ChaidError("empty dataset")
    if not predictors:
        raise ChaidError("no predictors declared")
    names = [spec.name for spec in predictors]
    if len(set(names)) != len(names):
        raise ChaidError("duplicate predictor name")
    if target in names:
        raise ChaidError(f"target {target!r} is also declared as a predictor")

    observed_classes: Counter[str] = Counter()
    for index, rec in enumerate(records):
        if target not in rec:
            raise ChaidError(f"record {index} is missing the target column {target!r}")
        observed_classes[str(rec[target])] += 1
    if class_order is None:
        classes = tuple(sorted(observed_classes))
    else:
        classes = tuple(str(c) for c in class_order)
        if len(set(classes)) != len(classes):
            raise ChaidError("duplicate class in class order")
        undeclared = set(observed_classes) - set(classes)
        if undeclared:
            raise ChaidError(
                f"target class {sorted(undeclared)[0]!r} not in declared class order"
            )

    nodes: list[TreeNode] = []
    next_id = 1
    queue: deque[tuple[int, int, int | None, list[int]]] = deque()
    queue.append((0, 0, None, list(range(len(records)))))
    while queue:
        node_id, depth, parent, indices = queue.popleft()
        subset = [records[i] for i in indices]
        counts = Counter(str(rec[target]) for rec in subset)
        class_counts = {cls: counts[cls] for cls in classes if counts[cls]}
        candidate = best_split(
            subset, predictors, target, params, class_order=classes
        )
        decision = should_stop(depth, len(subset), len(class_counts), candidate, params)
        if decision.stop:
            nodes.append(
                TreeNode(
                    id=node_id,
                    depth=depth,
                    parent=parent,
                    split=None,
                    children=(),
                    class_counts=class_counts,
                    stop_reason=decision.reason,
                )
            )
            continue
        assert candidate is not None
        groups = candidate.partition.groups
        member_group = {cat: gi for gi, group in enumerate(groups) for cat in group}
        child_indices: list[list[int]] = [[] for _ in groups]
        pred_name = candidate.predictor.name
        for i in indices:
            child_indices[member_group[str(records[i][pred_name])]].append(i)
        child_ids = tuple(range(next_id, next_id + len(groups)))
        next_id += len(groups)
        for child_id, child_rows in zip(child_ids, child_indices):
            queue.append((child_id, depth + 1, node_id, child_rows))
        nodes.append(
            TreeNode(
                id=node_id,
                depth=depth,
                parent=parent,
                split=NodeSplit(predictor=pred_name, partition=candidate.partition),
                children=child_ids,
                class_counts=class_counts,
                stop_reason=None,
            )
        )

    return Tree(
        target=target,
        classes=classes,
        nodes=tuple(nodes),
        growth_params=params,
        predictors=tuple(predictors),
        schema=schema,
    )


def train_tree(dataset: Dataset, params: GrowthParams = GrowthParams()) -> Tree:
    """Grow a tree from a loaded dataset, embedding its schema echo."""
    if not dataset.records:
        raise ChaidError("empty dataset")
    predictors = dataset.predictor_specs()
    if not predictors:
        raise ChaidError("schema declares no predictors")
    return grow_tree(
        records=dataset.records,
        predictors=predictors,
        target=dataset.target_name,
        params=params,
        class_order=dataset.classes,
        schema=dataset.schema_echo(),
    )
