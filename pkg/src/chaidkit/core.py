"""Category merging, split selection, and stop rules.

The three-step procedure that grows each tree node: merge predictor
categories pairwise while the least-distinguishable eligible pair is not
significant, score every predictor's merged table with a chi-squared test
penalised by the matching multiple-comparison multiplier, then apply the
stop rules in a fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import ChaidError
from .stats import (
    BonferroniQuery,
    Scale,
    bonferroni_multiplier,
    build_contingency,
    chi_square_p_value,
    chi_square_test,
)

__all__ = [
    "MISSING_LABEL",
    "PredictorSpec",
    "CategoryPartition",
    "SplitCandidate",
    "GrowthParams",
    "StopReason",
    "StopDecision",
    "merge_categories",
    "evaluate_predictor",
    "best_split",
    "should_stop",
]

#: Category label that stands in for a missing value. Float-scale predictors
#: use it as their floating category by convention.
MISSING_LABEL = "<missing>"


@dataclass(frozen=True)
class PredictorSpec:
    """A predictor column: name, measurement scale, and ordered category universe.

    ``categories`` fixes the category order, which is meaningful for the
    monotonic and float scales (only order-adjacent categories may merge)
    and is also what makes every downstream computation independent of
    record order. ``float_category`` names the one floating category and is
    required exactly when ``scale`` is float; by convention it is the
    missing-value category.
    """

    name: str
    scale: Scale
    categories: tuple[str, ...]
    float_category: str | None = None

    def __post_init__(self) -> None:
        if not self.categories:
            raise ChaidError(f"predictor {self.name!r} has no categories")
        if len(set(self.categories)) != len(self.categories):
            raise ChaidError(f"predictor {self.name!r} has duplicate categories")
        if self.scale is Scale.FLOAT:
            if self.float_category is None:
                raise ChaidError(
                    f"float-scale predictor {self.name!r} must name its floating category"
                )
            if self.float_category not in self.categories:
                raise ChaidError(
                    f"floating category {self.float_category!r} is not a category of {self.name!r}"
                )
        elif self.float_category is not None:
            raise ChaidError(
                f"predictor {self.name!r} is not float-scaled but names a floating category"
            )


@dataclass(frozen=True)
class CategoryPartition:
    """Disjoint grouping of original categories into merged compound categories."""

    groups: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if not self.groups:
            raise ChaidError("partition has no groups")
        seen: set[str] = set()
        for group in self.groups:
            if not group:
                raise ChaidError("partition contains an empty group")
            for cat in group:
                if cat in seen:
                    raise ChaidError(f"category {cat!r} appears in two groups")
                seen.add(cat)

    def all_categories(self) -> frozenset[str]:
        return frozenset(c for g in self.groups for c in g)

    def __iter__(self) -> Iterator[tuple[str, ...]]:
        return iter(self.groups)

    def __len__(self) -> int:
        return len(self.groups)


@dataclass(frozen=True)
class SplitCandidate:
    """A scored way to split a node on one predictor.

    ``group_sizes`` holds the record count of each partition group in group
    order, so stop rules can check child sizes without re-counting.
    """

    predictor: PredictorSpec
    partition: CategoryPartition
    statistic: float
    df: int
    raw_p: float
    multiplier: int
    adjusted_p: float
    group_sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.partition.groups) < 2:
            raise ChaidError("split candidate must have at least two groups")
        if len(self.group_sizes) != len(self.partition.groups):
            raise ChaidError("group sizes do not match partition groups")
        if self.multiplier < 1:
            raise ChaidError("multiplier must be at least 1")
        expected = min(1.0, self.multiplier * self.raw_p)
        if abs(self.adjusted_p - expected) > 1e-12:
            raise ChaidError("adjusted p-value is not min(1, multiplier * raw_p)")


@dataclass(frozen=True)
class GrowthParams:
    """Tuning knobs for tree growth. Defaults are deliberately conservative."""

    alpha_merge: float = 0.05
    alpha_split: float = 0.05
    max_depth: int = 3
    min_parent_size: int = 10
    min_child_size: int = 5

    def __post_init__(self) -> None:
        for name in ("alpha_merge", "alpha_split"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ChaidError(f"{name} must lie strictly between 0 and 1")
        if self.max_depth < 1:
            raise ChaidError("max_depth must be at least 1")
        if self.min_child_size < 1:
            raise ChaidError("min_child_size must be at least 1")
        if self.min_parent_size < 2 * self.min_child_size:
            raise ChaidError("min_parent_size must be at least twice min_child_size")


class StopReason(str, Enum):
    """Why a node became terminal; values follow the rule precedence order."""

    NO_SIGNIFICANT_PREDICTOR = "no_significant_predictor"
    MAX_DEPTH = "max_depth"
    MIN_PARENT = "min_parent"
    WOULD_CREATE_SMALL_CHILD = "would_create_small_child"
    PURE_NODE = "pure_node"


@dataclass(frozen=True)
class StopDecision:
    stop: bool
    reason: StopReason | None = None

    def __post_init__(self) -> None:
        if self.stop and self.reason is None:
            raise ChaidError("stop decision needs a reason")
        if not self.stop and self.reason is not None:
            raise ChaidError("continue decision must not carry a reason")


class _MergeState:
    """Working state for one predictor's merge loop at one node.

    Groups are kept as index lists into the observed-category order, with a
    parallel per-group count row over the observed target classes so pair
    tests need only two list additions.
    """

    def __init__(
        self,
        observed: list[str],
        rows: list[list[int]],
        float_index: int | None,
    ) -> None:
        self.observed = observed
        # Dense order index over non-floating categories, for adjacency.
        self.ord_index: dict[int, int] = {}
        rank = 0
        for i in range(len(observed)):
            if i != float_index:
                self.ord_index[i] = rank
                rank += 1
        self.float_index = float_index
        self.groups: list[list[int]] = [[i] for i in range(len(observed))]
        self.rows: list[list[int]] = [list(r) for r in rows]

    def non_float_span(self, gi: int) -> tuple[int, int] | None:
        ranks = [self.ord_index[m] for m in self.groups[gi] if m != self.float_index]
        if not ranks:
            return None
        return min(ranks), max(ranks)

    def eligible_pairs(self, scale: Scale) -> list[tuple[int, int]]:
        n = len(self.groups)
        if scale is Scale.FREE:
            return [(i, j) for i in range(n) for j in range(i + 1, n)]
        pairs: list[tuple[int, int]] = []
        spans = [self.non_float_span(g) for g in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                a, b = spans[i], spans[j]
                if a is None or b is None:
                    # A group that is just the floating category may pair
                    # with anything.
                    pairs.append((i, j))
                elif a[1] + 1 == b[0] or b[1] + 1 == a[0]:
                    pairs.append((i, j))
        return pairs

    def merge(self, i: int, j: int) -> None:
        self.groups[i] = self.groups[i] + self.groups[j]
        self.rows[i] = [a + b for a, b in zip(self.rows[i], self.rows[j])]
        del self.groups[j]
        del self.rows[j]

    def partition(self) -> CategoryPartition:
        def sort_key(group: list[int]) -> int:
            return min(group)

        ordered = sorted(self.groups, key=sort_key)
        return CategoryPartition(
            tuple(tuple(self.observed[m] for m in sorted(g)) for g in ordered)
        )


def _pair_p_value(row_a: Sequence[int], row_b: Sequence[int]) -> float:
    """p-value of the 2 x J test between two merged-category count rows.

    Columns empty across both rows are dropped first. A sub-table with
    fewer than two populated columns carries no evidence that the rows
    differ, so it reports p = 1.0, the most mergeable value.
    """
    obs_a = []
    obs_b = []
    for a, b in zip(row_a, row_b):
        if a + b > 0:
            obs_a.append(a)
            obs_b.append(b)
    if len(obs_a) < 2:
        return 1.0
    total_a = sum(obs_a)
    total_b = sum(obs_b)
    if total_a == 0 or total_b == 0:
        return 1.0
    grand = total_a + total_b
    statistic = 0.0
    for a, b in zip(obs_a, obs_b):
        col = a + b
        ea = total_a * col / grand
        eb = total_b * col / grand
        da = a - ea
        db = b - eb
        statistic += da * da / ea + db * db / eb
    return chi_square_p_value(statistic, len(obs_a) - 1)


def _observed_counts(
    records: Iterable[Mapping[str, object]],
    predictor: PredictorSpec,
    target: str,
) -> tuple[list[str], list[list[int]], list[str]]:
    """Per-category count rows at a node, in universe category order.

    Returns (observed categories, count rows aligned to them, observed
    target classes in sorted order).
    """
    universe_rank = {c: i for i, c in enumerate(predictor.categories)}
    pair_counts: dict[tuple[str, str], int] = {}
    seen_cats: set[str] = set()
    seen_classes: set[str] = set()
    n = 0
    for rec in records:
        n += 1
        try:
            cat = str(rec[predictor.name])
            cls = str(rec[target])
        except KeyError as exc:
            raise ChaidError(f"record is missing column {exc.args[0]!r}") from exc
        if cat not in universe_rank:
            raise ChaidError(
                f"category {cat!r} is not declared for predictor {predictor.name!r}"
            )
        seen_cats.add(cat)
        seen_classes.add(cls)
        pair_counts[(cat, cls)] = pair_counts.get((cat, cls), 0) + 1
    if n == 0:
        raise ChaidError("empty node")
    observed = sorted(seen_cats, key=universe_rank.__getitem__)
    classes = sorted(seen_classes)
    rows = [
        [pair_counts.get((cat, cls), 0) for cls in classes] for cat in observed
    ]
    return observed, rows, classes


def merge_categories(
    records: Sequence[Mapping[str, object]],
    predictor: PredictorSpec,
    target: str,
    alpha_merge: float,
) -> CategoryPartition:
    """Merge a predictor's observed categories until every eligible pair differs.

    Starting from singleton groups, repeatedly test each eligible pair of
    groups on its two-row sub-table and merge the pair with the largest
    p-value while that p-value exceeds ``alpha_merge``. Merging never goes
    below two groups. Eligibility depends on the scale: adjacent groups in
    category order for monotonic, any pair for free, and for float every
    adjacent non-floating pair plus the floating category with any group.

    Adjacency is taken over the categories observed at the node, so the
    returned groups are contiguous runs of the observed order. Ties on the
    largest p-value break toward the earliest pair in group order.
    """
    observed, rows, _ = _observed_counts(records, predictor, target)
    scale = predictor.scale
    float_index: int | None = None
    if scale is Scale.FLOAT:
        if predictor.float_category in observed:
            float_index = observed.index(predictor.float_category)
        else:
            # The floating category never occurred here, so the node sees a
            # purely ordered predictor.
            scale = Scale.MONOTONIC

    state = _MergeState(observed, rows, float_index)
    while len(state.groups) > 2:
        best_pair: tuple[int, int] | None = None
        best_p = -1.0
        for i, j in state.eligible_pairs(scale):
            p = _pair_p_value(state.rows[i], state.rows[j])
            if p > best_p:
                best_p = p
                best_pair = (i, j)
        if best_pair is None or best_p <= alpha_merge:
            break
        state.merge(*best_pair)
    return state.partition()


def _effective_scale(predictor: PredictorSpec, observed: Sequence[str]) -> Scale:
    if predictor.scale is Scale.FLOAT and predictor.float_category not in observed:
        return Scale.MONOTONIC
    return predictor.scale


def evaluate_predictor(
    records: Sequence[Mapping[str, object]],
    predictor: PredictorSpec,
    target: str,
    alpha_merge: float,
    *,
    class_order: Sequence[str] | None = None,
) -> SplitCandidate | None:
    """Score one predictor at a node: merge, test, and penalise.

    Runs :func:`merge_categories`, tests the merged contingency table, and
    multiplies the raw p-value by the number of ways ``c`` observed
    categories could have been reduced to ``r`` groups (capped at 1).
    Returns ``None`` when no split is possible: a single merged group, a
    single observed category, or a single observed target class.
    """
    partition = merge_categories(records, predictor, target, alpha_merge)
    if len(partition.groups) < 2:
        return None
    table = build_contingency(
        records,
        predictor.name,
        target,
        partition.groups,
        class_order=class_order,
    )
    if table.n_rows < 2 or table.n_cols < 2:
        return None
    result = chi_square_test(table)
    observed = sorted(partition.all_categories())
    c = len(observed)
    r = len(partition.groups)
    query = BonferroniQuery(_effective_scale(predictor, observed), c, r)
    multiplier = bonferroni_multiplier(query)
    assert result.p_value is not None
    adjusted = min(1.0, multiplier * result.p_value)
    return SplitCandidate(
        predictor=predictor,
        partition=partition,
        statistic=result.statistic,
        df=result.degrees_of_freedom,
        raw_p=result.p_value,
        multiplier=multiplier,
        adjusted_p=adjusted,
        group_sizes=tuple(table.row_totals()),
    )


def best_split(
    records: Sequence[Mapping[str, object]],
    predictors: Sequence[PredictorSpec],
    target: str,
    params: GrowthParams,
    *,
    class_order: Sequence[str] | None = None,
) -> SplitCandidate | None:
    """Pick the predictor whose merged split has the smallest adjusted p-value.

    Returns ``None`` unless the winner's adjusted p-value is at most
    ``params.alpha_split``. Ties break by smaller raw p-value, then by
    predictor position in ``predictors``.
    """
    best: SplitCandidate | None = None
    best_key: tuple[float, float, int] | None = None
    for index, predictor in enumerate(predictors):
        candidate = evaluate_predictor(
            records, predictor, target, params.alpha_merge, class_order=class_order
        )
        if candidate is None:
            continue
        key = (candidate.adjusted_p, candidate.raw_p, index)
        if best_key is None or key < best_key:
            best = candidate
            best_key = key
    if best is None or best.adjusted_p > params.alpha_split:
        return None
    return best


def should_stop(
    node_depth: int,
    node_size: int,
    n_classes: int,
    candidate: SplitCandidate | None,
    params: GrowthParams,
) -> StopDecision:
    """Apply the stop rules in precedence order and report the first that fires.

    Order: no candidate; depth at the limit; node below the minimum parent
    size; a candidate child below the minimum child size; all records in
    one target class. ``n_classes`` is the number of target classes
    observed at the node, which the candidate alone cannot convey.
    """
    if candidate is None:
        return StopDecision(True, StopReason.NO_SIGNIFICANT_PREDICTOR)
    if node_depth >= params.max_depth:
        return StopDecision(True, StopReason.MAX_DEPTH)
    if node_size < params.min_parent_size:
        return StopDecision(True, StopReason.MIN_PARENT)
    if any(size < params.min_child_size for size in candidate.group_sizes):
        return StopDecision(True, StopReason.WOULD_CREATE_SMALL_CHILD)
    if n_classes <= 1:
        return StopDecision(True, StopReason.PURE_NODE)
    return StopDecision(False, None)
