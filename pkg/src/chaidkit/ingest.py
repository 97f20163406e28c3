"""Dataset loading, schema validation, and numeric discretization.

A schema declares each column's role (target, predictor, ignored), kind
(categorical or numeric), scale, and, for numeric columns, a binning rule.
Loading turns every parsed column into category labels: numeric values are
binned into interval labels "1".."k", missing cells become the shared
missing label when the column's scale allows it, and the realized bin
boundaries are kept so the exact same labeling can be replayed at
prediction time from the model document alone.

Row numbers in error messages count data rows from 1; the header row is
not counted.
"""

from __future__ import annotations

import csv
import io
import json
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .core import MISSING_LABEL, PredictorSpec
from .errors import DataError
from .stats import Scale

__all__ = [
    "MISSING_LABEL",
    "BinningSpec",
    "ColumnSpec",
    "DatasetSchema",
    "Dataset",
    "bin_numeric",
    "assign_bin",
    "load_schema",
    "load_dataset",
]

SCHEMA_FORMAT = "chaidkit-schema"
SCHEMA_FORMAT_VERSION = 1

_ROLES = ("target", "predictor", "ignored")
_KINDS = ("categorical", "numeric")
_STRATEGIES = ("equal_frequency", "equal_width", "explicit_boundaries")

#: Default bin counts injected when a numeric column declares no binning.
DEFAULT_PREDICTOR_BINS = 12
DEFAULT_TARGET_BINS = 7

_MAX_REPORTED_ROWS = 5


@dataclass(frozen=True)
class BinningSpec:
    """How to discretize a numeric column.

    ``equal_frequency`` and ``equal_width`` need ``bin_count`` and compute
    boundaries from the training values; ``explicit_boundaries`` takes the
    cut points as given. Intervals are right-closed: value v gets label i+1
    where i counts the boundaries strictly below v, so a value equal to a
    boundary falls in the lower bin and the outer intervals are unbounded.
    An empty explicit boundary list means a single all-covering interval.
    """

    strategy: str
    bin_count: int | None = None
    boundaries: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.strategy not in _STRATEGIES:
            raise DataError(f"unknown binning strategy {self.strategy!r}")
        if self.strategy == "explicit_boundaries":
            if self.bin_count is not None:
                raise DataError("explicit boundaries take no bin count")
            if self.boundaries is None:
                raise DataError("explicit binning needs its boundaries")
            for a, b in zip(self.boundaries, self.boundaries[1:]):
                if not a < b:
                    raise DataError("binning boundaries must be strictly increasing")
        else:
            if self.boundaries is not None:
                raise DataError(f"{self.strategy} computes its own boundaries")
            if self.bin_count is None or self.bin_count < 2:
                raise DataError("bin count must be at least 2")

    def to_doc(self) -> dict:
        doc: dict = {"strategy": self.strategy}
        if self.bin_count is not None:
            doc["bin_count"] = self.bin_count
        if self.boundaries is not None:
            doc["boundaries"] = list(self.boundaries)
        return doc

    @classmethod
    def from_doc(cls, doc: object) -> "BinningSpec":
        if not isinstance(doc, dict) or "strategy" not in doc:
            raise DataError("binning entry must be a mapping with a strategy")
        strategy = doc["strategy"]
        bin_count = doc.get("bin_count")
        boundaries = doc.get("boundaries")
        return cls(
            strategy=str(strategy),
            bin_count=None if bin_count is None else int(bin_count),
            boundaries=None
            if boundaries is None
            else tuple(float(b) for b in boundaries),
        )


def _compute_boundaries(values: Sequence[float], spec: BinningSpec) -> tuple[float, ...]:
    if spec.strategy == "explicit_boundaries":
        assert spec.boundaries is not None
        return spec.boundaries
    if not values:
        return ()
    ordered = sorted(values)
    n = len(ordered)
    k = spec.bin_count
    assert k is not None
    top = ordered[-1]
    bounds: list[float] = []
    if spec.strategy == "equal_frequency":
        for j in range(1, k):
            cut = ordered[-(-j * n // k) - 1]
            if cut >= top:
                break
            if not bounds or cut > bounds[-1]:
                bounds.append(cut)
    else:
        lo = ordered[0]
        if top > lo:
            for i in range(1, k):
                bounds.append(lo + (top - lo) * i / k)
    return tuple(bounds)


def assign_bin(value: float, boundaries: Sequence[float]) -> str:
    """Interval label for a value: 1 + the number of boundaries strictly below it."""
    return str(bisect_left(boundaries, value) + 1)


def bin_numeric(
    values: Sequence[float], spec: BinningSpec
) -> tuple[list[str], tuple[float, ...]]:
    """Discretize a numeric column into interval labels.

    Returns the label for every value plus the realized boundaries, which
    reproduce the identical labels when fed back through
    :func:`assign_bin`. Equal-frequency boundaries sit on observed values
    (ties go to the lower bin, so tied boundary values never straddle two
    bins); duplicate or top-end cuts collapse, which is how a constant
    column degenerates to a single label. Equal-width keeps its grid even
    when some interior bins end up empty, so labels can be sparse.
    """
    if not values:
        raise DataError("cannot bin an empty column")
    boundaries = _compute_boundaries(values, spec)
    return [assign_bin(v, boundaries) for v in values], boundaries


@dataclass(frozen=True)
class ColumnSpec:
    """One column's declaration: role, kind, scale, and binning/category data."""

    name: str
    role: str
    kind: str
    scale: Scale | None = None
    binning: BinningSpec | None = None
    categories: tuple[str, ...] | None = None
    float_category: str | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise DataError("column name must be non-empty")
        if self.role not in _ROLES:
            raise DataError(f"column {self.name!r}: unknown role {self.role!r}")
        if self.kind not in _KINDS:
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role == "ignored":
            return
        if self.kind == "numeric":
            if self.binning is None:
                raise DataError(f"numeric column {self.name!r} needs a binning rule")
            if self.categories is not None:
                raise DataError(
                    f"column {self.name!r}: declared categories are only for categorical columns"
                )
        elif self.binning is not None:
            raise DataError(f"column {self.name!r}: binning is only for numeric columns")
        if self.categories is not None:
            if not self.categories:
                raise DataError(f"column {self.name!r}: declared category list is empty")
            if len(set(self.categories)) != len(self.categories):
                raise DataError(f"column {self.name!r}: duplicate declared category")
        if self.role == "target":
            if self.scale is not None:
                raise DataError("scale applies only to predictor columns")
            if self.float_category is not None:
                raise DataError("a floating category applies only to predictor columns")
        elif self.float_category is not None and self.effective_scale is not Scale.FLOAT:
            raise DataError(
                f"column {self.name!r}: a floating category requires the float scale"
            )

    @property
    def effective_scale(self) -> Scale:
        """Predictor scale with the default applied: unspecified means free."""
        return self.scale if self.scale is not None else Scale.FREE

    @property
    def effective_float_category(self) -> str | None:
        if self.role == "predictor" and self.effective_scale is Scale.FLOAT:
            return self.float_category or MISSING_LABEL
        return None

    def to_doc(self) -> dict:
        doc: dict = {"name": self.name, "role": self.role, "kind": self.kind}
        if self.scale is not None:
            doc["scale"] = self.scale.value
        if self.binning is not None:
            doc["binning"] = self.binning.to_doc()
        if self.categories is not None:
            doc["categories"] = list(self.categories)
        if self.float_category is not None:
            doc["float_category"] = self.float_category
        return doc

    @classmethod
    def from_doc(cls, doc: object) -> "ColumnSpec":
        if not isinstance(doc, dict):
            raise DataError("column entry must be a mapping")
        for key in ("name", "role", "kind"):
            if key not in doc:
                raise DataError(f"column entry is missing {key!r}")
        name = str(doc["name"])
        role = str(doc["role"])
        kind = str(doc["kind"])
        scale_doc = doc.get("scale")
        if scale_doc is None:
            scale = None
        else:
            try:
                scale = Scale(scale_doc)
            except ValueError:
                raise DataError(f"column {name!r}: unknown scale {scale_doc!r}") from None
        binning_doc = doc.get("binning")
        if binning_doc is None and kind == "numeric" and role in ("target", "predictor"):
            bins = DEFAULT_TARGET_BINS if role == "target" else DEFAULT_PREDICTOR_BINS
            binning = BinningSpec(strategy="equal_frequency", bin_count=bins)
        elif binning_doc is None:
            binning = None
        else:
            binning = BinningSpec.from_doc(binning_doc)
        categories_doc = doc.get("categories")
        return cls(
            name=name,
            role=role,
            kind=kind,
            scale=scale,
            binning=binning,
            categories=None
            if categories_doc is None
            else tuple(str(c) for c in categories_doc),
            float_category=None
            if doc.get("float_category") is None
            else str(doc["float_category"]),
        )


@dataclass(frozen=True)
class DatasetSchema:
    """All column declarations plus the file delimiter."""

    columns: tuple[ColumnSpec, ...]
    delimiter: str = ","

    def __post_init__(self) -> None:
        if not self.columns:
            raise DataError("schema declares no columns")
        names = [col.name for col in self.columns]
        if len(set(names)) != len(names):
            raise DataError("duplicate column name in schema")
        targets = [col for col in self.columns if col.role == "target"]
        if len(targets) != 1:
            raise DataError("schema must declare exactly one target column")
        if len(self.delimiter) != 1:
            raise DataError("delimiter must be a single character")

    @property
    def target(self) -> ColumnSpec:
        return next(col for col in self.columns if col.role == "target")

    @property
    def predictors(self) -> tuple[ColumnSpec, ...]:
        return tuple(col for col in self.columns if col.role == "predictor")

    def to_doc(self) -> dict:
        return {
            "format": SCHEMA_FORMAT,
            "format_version": SCHEMA_FORMAT_VERSION,
            "delimiter": self.delimiter,
            "columns": [col.to_doc() for col in self.columns],
        }

    @classmethod
    def from_doc(cls, doc: object) -> "DatasetSchema":
        if not isinstance(doc, dict):
            raise DataError("schema document must be a mapping")
        if doc.get("format") != SCHEMA_FORMAT:
            raise DataError("not a schema document (unrecognized format tag)")
        if doc.get("format_version") != SCHEMA_FORMAT_VERSION:
            raise DataError(
                f"unsupported schema format version: {doc.get('format_version')!r}"
            )
        columns_doc = doc.get("columns")
        if not isinstance(columns_doc, list) or not columns_doc:
            raise DataError("schema document declares no columns")
        return cls(
            columns=tuple(ColumnSpec.from_doc(c) for c in columns_doc),
            delimiter=str(doc.get("delimiter", ",")),
        )


def load_schema(path: str | Path) -> DatasetSchema:
    """Read and validate a schema document from a JSON file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read schema file: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"schema file is not valid JSON: {exc}") from exc
    return DatasetSchema.from_doc(doc)


@dataclass(frozen=True)
class Dataset:
    """Loaded, fully categorical records plus everything needed to rebuild them.

    ``boundaries`` maps each parsed numeric column to its realized bin
    boundaries; ``missing_counts`` reports per-column missing cells (for a
    float-scale column these became the missing label). ``header`` and
    ``raw_rows`` are kept only when loading asked for them, so prediction
    output can echo the input verbatim.
    """

    schema: DatasetSchema
    records: tuple[dict[str, str], ...]
    boundaries: dict[str, tuple[float, ...]]
    missing_counts: dict[str, int]
    header: tuple[str, ...] | None = None
    raw_rows: tuple[tuple[str, ...], ...] | None = None

    @property
    def target_name(self) -> str:
        return self.schema.target.name

    @property
    def classes(self) -> tuple[str, ...]:
        """Target class universe, in declared (or boundary) order."""
        target = self.schema.target
        if target.kind == "numeric":
            bounds = self.boundaries.get(target.name, ())
            return tuple(str(i) for i in range(1, len(bounds) + 2))
        if target.categories is not None:
            return target.categories
        observed = {rec[target.name] for rec in self.records if target.name in rec}
        return tuple(sorted(observed))

    def predictor_specs(self) -> tuple[PredictorSpec, ...]:
        """One PredictorSpec per predictor column, in schema order."""
        specs = []
        for col in self.schema.predictors:
            specs.append(
                PredictorSpec(
                    name=col.name,
                    scale=col.effective_scale,
                    categories=self._universe(col),
                    float_category=col.effective_float_category,
                )
            )
        return tuple(specs)

    def _universe(self, col: ColumnSpec) -> tuple[str, ...]:
        float_cat = col.effective_float_category
        if col.kind == "numeric":
            bounds = self.boundaries.get(col.name, ())
            universe = [str(i) for i in range(1, len(bounds) + 2)]
        elif col.categories is not None:
            universe = [c for c in col.categories if c != float_cat]
        else:
            observed = {rec[col.name] for rec in self.records if col.name in rec}
            observed.discard(MISSING_LABEL)
            universe = sorted(observed)
        if float_cat is not None:
            universe.append(float_cat)
        if not universe:
            universe = [MISSING_LABEL]
        return tuple(universe)

    def schema_echo(self) -> dict:
        """Schema document with realized boundaries and category universes baked in.

        Loading prediction input against this echo reproduces the training
        labeling exactly: numeric columns carry their realized boundaries
        as explicit cut points, categorical columns their full category
        order.
        """
        columns = []
        for col in self.schema.columns:
            if col.role == "ignored":
                continue
            entry: dict = {"name": col.name, "role": col.role, "kind": col.kind}
            if col.role == "predictor":
                entry["scale"] = col.effective_scale.value
                if col.effective_float_category is not None:
                    entry["float_category"] = col.effective_float_category
            if col.kind == "numeric":
                entry["binning"] = {
                    "strategy": "explicit_boundaries",
                    "boundaries": list(self.boundaries.get(col.name, ())),
                }
            elif col.role == "target":
                entry["categories"] = list(self.classes)
            else:
                spec_cats = self._universe(col)
                entry["categories"] = list(spec_cats)
            columns.append(entry)
        return {
            "format": SCHEMA_FORMAT,
            "format_version": SCHEMA_FORMAT_VERSION,
            "delimiter": self.schema.delimiter,
            "columns": columns,
        }


def _read_rows(
    source: str | Path | io.TextIOBase, delimiter: str
) -> tuple[list[str], list[list[str]]]:
    if hasattr(source, "read"):
        return _read_from(source, delimiter)  # type: ignore[arg-type]
    try:
        with open(source, newline="", encoding="utf-8-sig") as handle:
            return _read_from(handle, delimiter)
    except OSError as exc:
        raise DataError(f"cannot read data file: {exc}") from exc


def _read_from(handle: Iterable[str], delimiter: str) -> tuple[list[str], list[list[str]]]:
    reader = csv.reader(handle, delimiter=delimiter)
    try:
        header = [cell.strip() for cell in next(reader)]
    except StopIteration:
        raise DataError("empty file") from None
    if not any(header):
        raise DataError("empty file")
    rows: list[list[str]] = []
    for number, row in enumerate(reader, start=1):
        if len(row) != len(header):
            raise DataError(
                f"row {number}: expected {len(header)} fields, found {len(row)}"
            )
        rows.append(row)
    return header, rows


def load_dataset(
    source: str | Path | io.TextIOBase,
    schema: DatasetSchema,
    *,
    require_target: bool = True,
    keep_raw: bool = False,
) -> Dataset:
    """Load delimited text into categorical records under a schema.

    With ``require_target`` (training), the target column must be present,
    missing values are only tolerated in float-scale predictors, and
    declared category lists are enforced. Without it (prediction), the
    target is not parsed and any missing predictor cell becomes the
    missing label for routing to deal with. Numeric cells that fail to
    parse are always an error citing the data row and column.
    """
    header, rows = _read_rows(source, schema.delimiter)
    index: dict[str, int] = {}
    for position, name in enumerate(header):
        if name in index:
            raise DataError(f"duplicate column {name!r} in header")
        index[name] = position

    parsed = [
        col
        for col in schema.columns
        if col.role == "predictor" or (col.role == "target" and require_target)
    ]
    for col in parsed:
        if col.name not in index:
            raise DataError(f"missing required column {col.name!r}")

    n = len(rows)
    columns: dict[str, list[str]] = {}
    boundaries: dict[str, tuple[float, ...]] = {}
    missing_counts: dict[str, int] = {}
    problems: list[str] = []

    for col in parsed:
        at = index[col.name]
        cells = [rows[r][at].strip() for r in range(n)]
        missing = [r for r, cell in enumerate(cells) if cell == ""]
        missing_counts[col.name] = len(missing)
        missing_ok = (
            col.role == "predictor"
            and (not require_target or col.effective_scale is Scale.FLOAT)
        )
        if missing and not missing_ok:
            problems.append(_missing_report(col.name, missing))
            continue

        if col.kind == "numeric":
            values: list[float] = []
            value_rows: list[int] = []
            for r, cell in enumerate(cells):
                if cell == "":
                    continue
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"row {r + 1}: column {col.name!r}: cannot parse {cell!r} as a number"
                    ) from None
                value_rows.append(r)
            assert col.binning is not None
            bounds = _compute_boundaries(values, col.binning)
            boundaries[col.name] = bounds
            labels = [MISSING_LABEL] * n
            for r, value in zip(value_rows, values):
                labels[r] = assign_bin(value, bounds)
            columns[col.name] = labels
        else:
            declared = set(col.categories) if col.categories is not None else None
            if declared is not None and require_target:
                bad = [
                    (r, cell)
                    for r, cell in enumerate(cells)
                    if cell != "" and cell not in declared
                ]
                if bad:
                    shown = ", ".join(
                        f"{cell!r} at row {r + 1}" for r, cell in bad[:_MAX_REPORTED_ROWS]
                    )
                    extra = len(bad) - min(len(bad), _MAX_REPORTED_ROWS)
                    tail = f" (+{extra} more)" if extra else ""
                    problems.append(
                        f"column {col.name!r}: undeclared category {shown}{tail}"
                    )
                    continue
            columns[col.name] = [
                MISSING_LABEL if cell == "" else cell for cell in cells
            ]

    if problems:
        raise DataError("; ".join(problems))

    records = tuple(
        {name: columns[name][r] for name in columns} for r in range(n)
    )
    return Dataset(
        schema=schema,
        records=records,
        boundaries=boundaries,
        missing_counts=missing_counts,
        header=tuple(header) if keep_raw else None,
        raw_rows=tuple(tuple(row) for row in rows) if keep_raw else None,
    )


def _missing_report(name: str, rows: Sequence[int]) -> str:
    shown = ", ".join(str(r + 1) for r in rows[:_MAX_REPORTED_ROWS])
    extra = len(rows) - min(len(rows), _MAX_REPORTED_ROWS)
    tail = f" (+{extra} more)" if extra else ""
    return f"column {name!r}: missing value at row(s) {shown}{tail}"
