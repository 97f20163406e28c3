"""Shared fixtures: oracles, record builders, and reference trees."""

from __future__ import annotations

import math
import random
from typing import Mapping, Sequence

from scipy.integrate import quad

from chaidkit import (
    CategoryPartition,
    GrowthParams,
    NodeSplit,
    PredictorSpec,
    Scale,
    StopReason,
    Tree,
    TreeNode,
)


def chi2_upper_tail_by_integration(statistic: float, df: int) -> float:
    """Upper-tail chi-squared probability by adaptive numerical integration.

    Deliberately shares nothing with the library's series/continued-fraction
    implementation: the density is written out from its definition and
    integrated with scipy's adaptive quadrature.
    """
    if statistic <= 0.0:
        return 1.0
    half = df / 2.0
    log_norm = half * math.log(2.0) + math.lgamma(half)

    def density(x: float) -> float:
        return math.exp((half - 1.0) * math.log(x) - x / 2.0 - log_norm)

    upper, _ = quad(density, statistic, math.inf, epsabs=1e-12, epsrel=1e-12, limit=400)
    return upper


def records_from_counts(
    counts: Mapping[tuple[str, str], int],
    predictor: str = "x",
    target: str = "y",
) -> list[dict[str, str]]:
    """Expand (category, class) -> n into that many records, in a fixed order."""
    records = []
    for (cat, cls), n in sorted(counts.items()):
        records.extend({predictor: cat, target: cls} for _ in range(n))
    return records


def multi_records_from_counts(
    counts: Mapping[tuple, int],
    predictors: Sequence[str],
    target: str = "y",
) -> list[dict[str, str]]:
    """Expand (cat_1, ..., cat_k, class) -> n into records over several predictors."""
    records = []
    for key, n in sorted(counts.items()):
        *cats, cls = key
        assert len(cats) == len(predictors)
        rec = dict(zip(predictors, cats))
        rec[target] = cls
        records.extend(dict(rec) for _ in range(n))
    return records


# ---------------------------------------------------------------------------
# Reference tree: the shoe-sales example, 11 nodes, 7 terminals, depth 3.
#
# Terminal numbering (as the sales write-up counts its terminals) maps to
# node ids like so:
TERMINAL_NODE_IDS = {1: 6, 2: 9, 3: 10, 4: 3, 5: 8, 6: 7, 7: 4}

TIPE_CATEGORIES = (
    "High Heels",
    "Other",
    "Office Footwear",
    "Sneakers",
    "Boot",
    "Sandals & Flip Flop",
    "Flat Shoes",
    "Wedges",
    "Stilettos",
    "Vintage",
    "Painted Shoes",
    "Baby Shoe",
)

# Interval boundaries for the raw columns. These are fixture data chosen to
# make the worked example land in the right intervals; nothing in the source
# material fixes them, so they are illustrative, not normative.
HARGA_BOUNDARIES = (
    75000.0, 90000.0, 105000.0, 120000.0, 135000.0, 150000.0, 175000.0,
    200000.0, 250000.0, 300000.0, 400000.0, 500000.0, 750000.0,
)
DILIHAT_BOUNDARIES = tuple(float(v) for v in range(100, 1200, 100))
TERJUAL_BOUNDARIES = (149.0, 359.0, 716.0)


def sales_fixture_schema() -> dict:
    return {
        "format": "chaidkit-schema",
        "format_version": 1,
        "delimiter": ",",
        "columns": [
            {
                "name": "harga",
                "role": "predictor",
                "kind": "numeric",
                "scale": "free",
                "binning": {
                    "strategy": "explicit_boundaries",
                    "boundaries": list(HARGA_BOUNDARIES),
                },
            },
            {
                "name": "dilihat",
                "role": "predictor",
                "kind": "numeric",
                "scale": "free",
                "binning": {
                    "strategy": "explicit_boundaries",
                    "boundaries": list(DILIHAT_BOUNDARIES),
                },
            },
            {
                "name": "tipe",
                "role": "predictor",
                "kind": "categorical",
                "scale": "free",
                "categories": list(TIPE_CATEGORIES),
            },
            {
                "name": "terjual",
                "role": "target",
                "kind": "numeric",
                "binning": {
                    "strategy": "explicit_boundaries",
                    "boundaries": list(TERJUAL_BOUNDARIES),
                },
            },
        ],
    }


def sales_fixture_tree() -> Tree:
    """Hand-built reference tree for the shoe-sales example.

    Splits on dilihat at the root, then harga, then tipe; class counts are
    constructed so the famous leaf (node 9) predicts 98.2 / 1.3 / 0.3 / 0.2
    percent. Node ids are breadth-first.
    """
    harga_all = tuple(str(i) for i in range(1, 15))
    dilihat_groups = (("1", "9", "10", "12"), ("2",), ("3",), ("4", "5", "6", "7", "8"))
    tipe_hot = ("High Heels", "Other", "Office Footwear", "Sneakers")
    tipe_rest = tuple(c for c in TIPE_CATEGORIES if c not in tipe_hot)

    def node(
        node_id: int,
        depth: int,
        parent: int | None,
        counts: dict[str, int],
        split: NodeSplit | None = None,
        children: tuple[int, ...] = (),
        reason: StopReason | None = None,
    ) -> TreeNode:
        return TreeNode(
            id=node_id,
            depth=depth,
            parent=parent,
            split=split,
            children=children,
            class_counts=counts,
            stop_reason=reason,
        )

    nsp = StopReason.NO_SIGNIFICANT_PREDICTOR
    nodes = (
        node(
            0, 0, None,
            {"1": 4012, "2": 828, "3": 334, "4": 126},
            split=NodeSplit("dilihat", CategoryPartition(dilihat_groups)),
            children=(1, 2, 3, 4),
        ),
        node(
            1, 1, 0,
            {"1": 2682, "2": 113, "3": 34, "4": 21},
            split=NodeSplit("harga", CategoryPartition((("1",), harga_all[1:]))),
            children=(5, 6),
        ),
        node(
            2, 1, 0,
            {"1": 760, "2": 175, "3": 50, "4": 15},
            split=NodeSplit("harga", CategoryPartition((("1",), harga_all[1:9]))),
            children=(7, 8),
        ),
        node(3, 1, 0, {"1": 150, "2": 230, "3": 90, "4": 30}, reason=nsp),
        node(4, 1, 0, {"1": 420, "2": 310, "3": 160, "4": 60}, reason=nsp),
        node(
            5, 2, 1,
            {"1": 1282, "2": 53, "3": 9, "4": 6},
            split=NodeSplit("tipe", CategoryPartition((tipe_hot, tipe_rest))),
            children=(9, 10),
        ),
        node(6, 2, 1, {"1": 1400, "2": 60, "3": 25, "4": 15}, reason=nsp),
        node(7, 2, 2, {"1": 240, "2": 45, "3": 10, "4": 5}, reason=nsp),
        node(8, 2, 2, {"1": 520, "2": 130, "3": 40, "4": 10}, reason=nsp),
        node(9, 3, 5, {"1": 982, "2": 13, "3": 3, "4": 2}, reason=StopReason.MAX_DEPTH),
        node(10, 3, 5, {"1": 300, "2": 40, "3": 6, "4": 4}, reason=StopReason.MAX_DEPTH),
    )
    predictors = (
        PredictorSpec("harga", Scale.FREE, harga_all),
        PredictorSpec("dilihat", Scale.FREE, tuple(str(i) for i in range(1, 13))),
        PredictorSpec("tipe", Scale.FREE, TIPE_CATEGORIES),
    )
    return Tree(
        target="terjual",
        classes=("1", "2", "3", "4"),
        nodes=nodes,
        growth_params=GrowthParams(),
        predictors=predictors,
        schema=sales_fixture_schema(),
    )


# ---------------------------------------------------------------------------
# Random valid trees, for round-trip and sanity properties.

def random_tree(rng: random.Random) -> Tree:
    """Generate a structurally valid random tree."""
    n_classes = rng.randint(2, 4)
    classes = tuple(f"c{i}" for i in range(n_classes))
    n_predictors = rng.randint(1, 3)
    predictors = []
    for p in range(n_predictors):
        n_cats = rng.randint(2, 6)
        cats = tuple(f"p{p}v{i}" for i in range(n_cats))
        scale = rng.choice([Scale.MONOTONIC, Scale.FREE, Scale.FLOAT])
        float_cat = cats[-1] if scale is Scale.FLOAT else None
        predictors.append(PredictorSpec(f"p{p}", scale, cats, float_cat))
    predictors = tuple(predictors)

    nodes: list[dict] = []

    def leaf_counts() -> dict[str, int]:
        counts = {cls: rng.randint(0, 40) for cls in classes}
        if not any(counts.values()):
            counts[rng.choice(classes)] = rng.randint(1, 40)
        return {cls: n for cls, n in counts.items() if n}

    def build(depth: int, parent: int | None) -> int:
        node_id = len(nodes)
        entry = {
            "id": node_id,
            "depth": depth,
            "parent": parent,
            "split": None,
            "children": (),
            "class_counts": {},
            "stop_reason": None,
        }
        nodes.append(entry)
        can_split = depth < 3 and rng.random() < 0.6
        if not can_split:
            entry["class_counts"] = leaf_counts()
            entry["stop_reason"] = rng.choice(list(StopReason))
            return node_id
        spec = predictors[rng.randrange(len(predictors))]
        cats = list(spec.categories)
        rng.shuffle(cats)
        n_groups = rng.randint(2, len(cats)) if len(cats) > 2 else 2
        groups: list[list[str]] = [[] for _ in range(n_groups)]
        for i, cat in enumerate(cats):
            groups[i % n_groups].append(cat)
        partition = CategoryPartition(tuple(tuple(sorted(g)) for g in groups))
        child_ids = tuple(build(depth + 1, node_id) for _ in partition.groups)
        total: dict[str, int] = {}
        for child_id in child_ids:
            for cls, count in nodes[child_id]["class_counts"].items():
                total[cls] = total.get(cls, 0) + count
        entry["split"] = NodeSplit(spec.name, partition)
        entry["children"] = child_ids
        entry["class_counts"] = total
        return node_id

    build(0, None)
    # Depth-first construction hands out ids in preorder, which satisfies the
    # dense-id requirement just as well as breadth-first numbering.
    tree_nodes = tuple(
        TreeNode(
            id=e["id"],
            depth=e["depth"],
            parent=e["parent"],
            split=e["split"],
            children=e["children"],
            class_counts=e["class_counts"],
            stop_reason=e["stop_reason"],
        )
        for e in nodes
    )
    schema = rng.choice([None, {"note": "free-form echo", "n": rng.randint(0, 9)}])
    return Tree(
        target="y",
        classes=classes,
        nodes=tree_nodes,
        growth_params=GrowthParams(
            alpha_merge=rng.choice([0.01, 0.05, 0.1]),
            alpha_split=rng.choice([0.01, 0.05, 0.1]),
            max_depth=rng.randint(3, 6),
            min_parent_size=rng.choice([10, 20]),
            min_child_size=rng.choice([1, 5]),
        ),
        predictors=predictors,
        schema=schema,
    )
