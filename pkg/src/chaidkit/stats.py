"""Statistical kernels for chi-squared tree induction.

Contingency tables, the Pearson chi-squared independence statistic, the
upper-tail chi-squared probability, and the multiple-comparison multipliers
used to penalise category merging, together with a brute-force enumeration
oracle for those multipliers.

Everything here is a pure function of its inputs; concurrent callers need
no synchronisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import ChaidError

__all__ = [
    "Scale",
    "ContingencyTable",
    "ChiSquareResult",
    "BonferroniQuery",
    "build_contingency",
    "expected_counts",
    "pearson_chi_square",
    "chi_square_p_value",
    "chi_square_test",
    "bonferroni_multiplier",
    "partition_count_oracle",
    "ORACLE_MAX_CATEGORIES",
]

#: Largest original-category count the enumeration oracle will accept.
ORACLE_MAX_CATEGORIES = 10


class Scale(str, Enum):
    """Measurement scale of a predictor, controlling which categories may merge.

    monotonic
        Ordered categories; only adjacent ones may merge.
    free
        Nominal categories; any subset may merge.
    float
        Ordered categories plus one floating category (conventionally the
        missing-value category) that may join any group or stand alone.
    """

    MONOTONIC = "monotonic"
    FREE = "free"
    FLOAT = "float"


@dataclass(frozen=True)
class ContingencyTable:
    """Joint counts of predictor categories (rows) against target classes (columns).

    Row labels are tuples of the original category names making up each
    (possibly merged) row. Construction requires every row and column to
    have a positive total, so expected counts downstream are never zero;
    use :meth:`from_counts` to build a table with empty lines dropped.
    """

    row_labels: tuple[tuple[str, ...], ...]
    col_labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.counts) != len(self.row_labels):
            raise ChaidError("counts row dimension does not match row labels")
        for row in self.counts:
            if len(row) != len(self.col_labels):
                raise ChaidError("counts column dimension does not match column labels")
            if any(v < 0 for v in row):
                raise ChaidError("negative cell count")
        if not self.counts or not self.col_labels:
            raise ChaidError("empty table")
        for i, row in enumerate(self.counts):
            if sum(row) == 0:
                raise ChaidError(f"all-zero row {self.row_labels[i]}")
        for j, label in enumerate(self.col_labels):
            if sum(row[j] for row in self.counts) == 0:
                raise ChaidError(f"all-zero column {label!r}")

    @classmethod
    def from_counts(
        cls,
        row_labels: Sequence[tuple[str, ...] | str],
        col_labels: Sequence[str],
        counts: Sequence[Sequence[int]],
    ) -> "ContingencyTable":
        """Build a table, dropping rows and columns whose total is zero."""
        rows = [tuple(r) for r in counts]
        labels = [(lbl,) if isinstance(lbl, str) else tuple(lbl) for lbl in row_labels]
        if len(rows) != len(labels):
            raise ChaidError("counts row dimension does not match row labels")
        for row in rows:
            if any(v < 0 for v in row):
                raise ChaidError("negative cell count")
        keep_rows = [i for i, r in enumerate(rows) if sum(r) > 0]
        keep_cols = [j for j in range(len(col_labels)) if sum(r[j] for r in rows) > 0]
        if not keep_rows or not keep_cols:
            raise ChaidError("empty table")
        return cls(
            row_labels=tuple(labels[i] for i in keep_rows),
            col_labels=tuple(col_labels[j] for j in keep_cols),
            counts=tuple(tuple(rows[i][j] for j in keep_cols) for i in keep_rows),
        )

    @property
    def n_rows(self) -> int:
        return len(self.counts)

    @property
    def n_cols(self) -> int:
        return len(self.col_labels)

    def row_totals(self) -> list[int]:
        return [sum(row) for row in self.counts]

    def col_totals(self) -> list[int]:
        return [sum(row[j] for row in self.counts) for j in range(self.n_cols)]

    def grand_total(self) -> int:
        return sum(sum(row) for row in self.counts)


@dataclass(frozen=True)
class ChiSquareResult:
    """Outcome of a chi-squared independence test.

    ``p_value`` is ``None`` until filled in from the statistic, so the
    statistic computation stays separate from the tail-probability one.
    """

    statistic: float
    degrees_of_freedom: int
    p_value: float | None = None

    def __post_init__(self) -> None:
        if self.statistic < 0:
            raise ChaidError("negative chi-squared statistic")
        if self.degrees_of_freedom < 1:
            raise ChaidError("degrees of freedom must be positive")
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ChaidError("p-value outside [0, 1]")


@dataclass(frozen=True)
class BonferroniQuery:
    """A merge outcome to be penalised: ``c`` original categories reduced to ``r``."""

    scale: Scale
    c: int
    r: int

    def __post_init__(self) -> None:
        if self.r < 1 or self.r > self.c:
            raise ChaidError("invalid merge arity")


def build_contingency(
    records: Iterable[Mapping[str, object]],
    predictor: str,
    target: str,
    partition: Sequence[Sequence[str]] | None = None,
    *,
    class_order: Sequence[str] | None = None,
) -> ContingencyTable:
    """Count joint occurrences of a predictor's (merged) categories and target classes.

    With ``partition`` given, each row is one group of original categories and
    holds the elementwise sum of its members' counts; without it, every
    observed category is its own row. Rows follow partition order (or sorted
    category order), columns follow ``class_order`` (or sorted class order).
    Zero rows and columns are dropped.

    Raises:
        ChaidError: ``"empty node"`` for an empty record set, or
            ``"value outside partition"`` when a record's category is not
            covered by the partition.
    """
    pair_counts: dict[tuple[str, str], int] = {}
    classes: list[str] = list(class_order) if class_order is not None else []
    seen_classes = set(classes)
    seen_cats: list[str] = []
    seen_cat_set: set[str] = set()
    n = 0
    for rec in records:
        n += 1
        try:
            cat = str(rec[predictor])
            cls = str(rec[target])
        except KeyError as exc:
            raise ChaidError(f"record is missing column {exc.args[0]!r}") from exc
        if cat not in seen_cat_set:
            seen_cat_set.add(cat)
            seen_cats.append(cat)
        if cls not in seen_classes:
            if class_order is not None:
                raise ChaidError(f"target class {cls!r} not in declared class order")
            seen_classes.add(cls)
            classes.append(cls)
        pair_counts[(cat, cls)] = pair_counts.get((cat, cls), 0) + 1
    if n == 0:
        raise ChaidError("empty node")
    if class_order is None:
        classes = sorted(classes)

    if partition is None:
        groups = [(c,) for c in sorted(seen_cats)]
    else:
        groups = [tuple(g) for g in partition]
        covered = {c for g in groups for c in g}
        stray = seen_cat_set - covered
        if stray:
            raise ChaidError(f"value outside partition: {sorted(stray)[0]!r}")

    counts = [
        [sum(pair_counts.get((c, cls), 0) for c in group) for cls in classes]
        for group in groups
    ]
    return ContingencyTable.from_counts(groups, classes, counts)


def expected_counts(table: ContingencyTable) -> list[list[float]]:
    """Expected cell counts under independence: row total x column total / grand total."""
    row_tot = table.row_totals()
    col_tot = table.col_totals()
    grand = table.grand_total()
    if grand <= 0:
        raise ChaidError("empty table")
    return [[rt * ct / grand for ct in col_tot] for rt in row_tot]


def pearson_chi_square(table: ContingencyTable) -> ChiSquareResult:
    """Pearson chi-squared statistic and degrees of freedom for an independence test.

    The p-value is left unset; pair with :func:`chi_square_p_value` or use
    :func:`chi_square_test`.

    Raises:
        ChaidError: ``"degenerate table"`` if the table has fewer than two
            rows or columns.
    """
    if table.n_rows < 2 or table.n_cols < 2:
        raise ChaidError("degenerate table")
    expected = expected_counts(table)
    statistic = 0.0
    for i, row in enumerate(table.counts):
        for j, observed in enumerate(row):
            diff = observed - expected[i][j]
            statistic += diff * diff / expected[i][j]
    df = (table.n_rows - 1) * (table.n_cols - 1)
    return ChiSquareResult(statistic=statistic, degrees_of_freedom=df)


def chi_square_p_value(statistic: float, df: int) -> float:
    """Upper-tail probability of the chi-squared distribution.

    Computed as the upper regularised incomplete gamma function
    Q(df/2, statistic/2), by power series for small statistics and by
    continued fraction otherwise.

    Raises:
        ChaidError: ``"invalid test input"`` for a negative statistic or
            non-positive degrees of freedom.
    """
    if statistic < 0 or df < 1 or math.isnan(statistic):
        raise ChaidError("invalid test input")
    q = _upper_regularized_gamma(df / 2.0, statistic / 2.0)
    return min(1.0, max(0.0, q))


def chi_square_test(table: ContingencyTable) -> ChiSquareResult:
    """Full independence test: statistic, degrees of freedom, and p-value."""
    partial = pearson_chi_square(table)
    p = chi_square_p_value(partial.statistic, partial.degrees_of_freedom)
    return ChiSquareResult(partial.statistic, partial.degrees_of_freedom, p)


def _upper_regularized_gamma(a: float, x: float) -> float:
    # Q(a, x); series for x < a+1, Lentz continued fraction otherwise.
    if x <= 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _lower_gamma_series(a, x)
    return _upper_gamma_continued_fraction(a, x)


def _log_prefix(a: float, x: float) -> float:
    return a * math.log(x) - x - math.lgamma(a)


def _lower_gamma_series(a: float, x: float) -> float:
    # P(a, x) = x^a e^-x / Gamma(a) * sum_n x^n / (a+1)...(a+n)
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(1000):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(_log_prefix(a, x))


def _upper_gamma_continued_fraction(a: float, x: float) -> float:
    # Modified Lentz evaluation of the standard continued fraction for Q(a, x).
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(_log_prefix(a, x)) * h


def bonferroni_multiplier(query: BonferroniQuery) -> int:
    """Number of distinct ways ``c`` categories can reduce to ``r`` groups.

    This is the multiple-comparison penalty applied to a merged split's raw
    p-value. All arithmetic is exact integer arithmetic:

    * monotonic: binomial(c-1, r-1), the contiguous cuts of an ordered row;
    * free: the Stirling number of the second kind S(c, r), evaluated as
      sum_i (-1)^i binomial(r, i) (r-i)^c / r!;
    * float: binomial(c-2, r-2) + r * binomial(c-2, r-1), the float category
      standing alone or joining one of r groups of the remaining order.

    Raises:
        ChaidError: ``"invalid merge arity"`` when r > c or r < 1, and
            ``"float scale underdetermined"`` for float with c < 2 or r < 2.
    """
    c, r = query.c, query.r
    if query.scale is Scale.MONOTONIC:
        return math.comb(c - 1, r - 1)
    if query.scale is Scale.FREE:
        total = sum((-1) ** i * math.comb(r, i) * (r - i) ** c for i in range(r))
        quotient, remainder = divmod(total, math.factorial(r))
        if remainder:
            raise ChaidError("free-scale multiplier is not an integer")
        return quotient
    if c < 2 or r < 2:
        raise ChaidError("float scale underdetermined")
    return math.comb(c - 2, r - 2) + r * math.comb(c - 2, r - 1)


def partition_count_oracle(scale: Scale, c: int, r: int) -> int:
    """Count the same partitions as :func:`bonferroni_multiplier` by explicit enumeration.

    Every counted structure is actually generated, so this is a slow,
    independent cross-check usable up to ``c = ORACLE_MAX_CATEGORIES``.

    Raises:
        ChaidError: ``"oracle bound exceeded"`` above the enumeration bound;
            argument errors mirror :func:`bonferroni_multiplier`.
    """
    if r < 1 or r > c:
        raise ChaidError("invalid merge arity")
    if c > ORACLE_MAX_CATEGORIES:
        raise ChaidError("oracle bound exceeded")
    if scale is Scale.MONOTONIC:
        return sum(1 for _ in _compositions(c, r))
    if scale is Scale.FREE:
        return sum(1 for _ in _set_partitions(c, r))
    if c < 2 or r < 2:
        raise ChaidError("float scale underdetermined")
    return sum(1 for _ in _float_partitions(c, r))


def _compositions(total: int, parts: int):
    """Yield run lengths cutting an ordered row of ``total`` items into ``parts`` runs."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for head in range(1, total - parts + 2):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def _set_partitions(n: int, blocks: int):
    """Yield partitions of items 0..n-1 into exactly ``blocks`` non-empty blocks."""

    def extend(item: int, partial: list[list[int]]):
        if item == n:
            if len(partial) == blocks:
                yield [tuple(b) for b in partial]
            return
        still_needed = blocks - len(partial)
        for block in partial:
            if n - item - 1 >= still_needed:
                block.append(item)
                yield from extend(item + 1, partial)
                block.pop()
        if len(partial) < blocks:
            partial.append([item])
            yield from extend(item + 1, partial)
            partial.pop()

    yield from extend(0, [])


def _float_partitions(c: int, r: int):
    """Yield float-scale partitions: c-1 ordered items in runs, one floating item.

    The floating item either stands alone beside r-1 runs or is attached to
    one of r runs.
    """
    for runs in _compositions(c - 1, r - 1):
        yield (runs, None)
    for runs in _compositions(c - 1, r):
        for attach_to in range(r):
            yield (runs, attach_to)
