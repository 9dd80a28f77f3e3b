"""Tabular flow-record data model, CSV I/O, synthetic replica generation and splitting.

A :class:`Dataset` is stored column-wise. Numeric columns are ``float64`` arrays
with ``NaN`` marking a missing cell; categorical and label columns are object
arrays of ``str`` with ``None`` marking a missing cell. All arrays are made
read-only on construction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DataError, SchemaMismatch

NUMERIC = "numeric"
CATEGORICAL = "categorical"
LABEL = "label"
KINDS = (NUMERIC, CATEGORICAL, LABEL)

MISSING_TOKENS = frozenset({"", "NaN", "nan", "NAN", "NA", "null", "NULL", "None"})

# Record counts per traffic type in the 5G-NIDD release.
NIDD_CLASS_COUNTS = {
    "Benign": 477737,
    "UDPFlood": 457340,
    "HTTPFlood": 140812,
    "SlowrateDos": 73124,
    "TCPConnectScan": 20052,
    "SYNScan": 20043,
    "UDPScan": 15906,
    "SYNFlood": 9721,
    "ICMPFlood": 1155,
}


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str
    nullable: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")


def validate_schema(schema: Sequence[ColumnSchema]) -> tuple[ColumnSchema, ...]:
    schema = tuple(schema)
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise DataError(f"duplicate column names in schema: {dupes}")
    n_label = sum(c.kind == LABEL for c in schema)
    if n_label != 1:
        raise DataError(f"schema must contain exactly one label column, found {n_label}")
    return schema


class Dataset:
    """Immutable column-oriented table of flow records."""

    def __init__(self, schema: Sequence[ColumnSchema], columns: Mapping[str, Sequence]):
        self.schema = validate_schema(schema)
        names = [c.name for c in self.schema]
        if set(columns) != set(names):
            raise SchemaMismatch(
                f"columns {sorted(set(columns) ^ set(names))} disagree with schema"
            )
        cols = {}
        n_rows = None
        for col in self.schema:
            arr = _coerce_column(columns[col.name], col)
            if n_rows is None:
                n_rows = len(arr)
            elif len(arr) != n_rows:
                raise DataError(f"column {col.name!r} has {len(arr)} rows, expected {n_rows}")
            arr.setflags(write=False)
            cols[col.name] = arr
        self._columns = MappingProxyType(cols)
        self.n_rows = n_rows or 0

    def __len__(self):
        return self.n_rows

    def __repr__(self):
        return f"Dataset(n_rows={self.n_rows}, columns={len(self.schema)})"

    @property
    def columns(self) -> Mapping[str, np.ndarray]:
        return self._columns

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.schema]

    @property
    def label_column(self) -> str:
        return next(c.name for c in self.schema if c.kind == LABEL)

    @property
    def labels(self) -> np.ndarray:
        return self._columns[self.label_column]

    @property
    def feature_schema(self) -> list[ColumnSchema]:
        return [c for c in self.schema if c.kind != LABEL]

    def column(self, name: str) -> np.ndarray:
        try:
            return self._columns[name]
        except KeyError:
            raise SchemaMismatch(f"no column named {name!r}") from None

    def kind(self, name: str) -> str:
        for c in self.schema:
            if c.name == name:
                return c.kind
        raise SchemaMismatch(f"no column named {name!r}")

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.schema, {k: v[idx] for k, v in self._columns.items()})

    def drop_columns(self, names: Iterable[str]) -> "Dataset":
        names = set(names)
        if self.label_column in names:
            raise DataError("the label column cannot be dropped")
        schema = [c for c in self.schema if c.name not in names]
        return Dataset(schema, {c.name: self._columns[c.name] for c in schema})

    def equals(self, other: "Dataset") -> bool:
        if self.schema != other.schema or self.n_rows != other.n_rows:
            return False
        for c in self.schema:
            a, b = self._columns[c.name], other._columns[c.name]
            if c.kind == NUMERIC:
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            elif list(a) != list(b):
                return False
        return True

    def missing_count(self) -> int:
        total = 0
        for c in self.schema:
            arr = self._columns[c.name]
            if c.kind == NUMERIC:
                total += int(np.isnan(arr).sum())
            else:
                total += sum(v is None for v in arr)
        return total


def _coerce_column(values, col: ColumnSchema) -> np.ndarray:
    if col.kind == NUMERIC:
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise DataError(f"column {col.name!r} is not one-dimensional")
        arr[~np.isfinite(arr)] = np.nan
        return arr
    arr = np.empty(len(values), dtype=object)
    for i, v in enumerate(values):
        if v is None or (isinstance(v, float) and math.isnan(v)):
            arr[i] = None
        else:
            arr[i] = str(v)
    if col.kind == LABEL and any(v is None for v in arr):
        raise DataError(f"label column {col.name!r} has missing values")
    return arr


def _parse_float(text: str) -> float:
    if text.strip() in MISSING_TOKENS:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        return math.nan
    return value if math.isfinite(value) else math.nan


def _read_raw(path) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    return pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False,
                       encoding="utf-8")


def load_csv(path, schema: Sequence[ColumnSchema]) -> Dataset:
    """Parse a header-first CSV file against ``schema``.

    Header order does not need to match the schema. Numeric cells that fail to
    parse, are non-finite, or hold a missing token become missing.
    """
    schema = validate_schema(schema)
    raw = _read_raw(path)
    header = list(raw.columns)
    expected = {c.name for c in schema}
    if set(header) != expected or len(header) != len(expected):
        extra = sorted(set(header) - expected)
        absent = sorted(expected - set(header))
        raise SchemaMismatch(f"header mismatch: unexpected {extra}, missing {absent}")
    if len(raw) == 0:
        raise DataError(f"{path}: no data rows")
    columns = {}
    for col in schema:
        cells = raw[col.name].tolist()
        if col.kind == NUMERIC:
            columns[col.name] = [_parse_float(t) for t in cells]
        else:
            columns[col.name] = [None if t.strip() in MISSING_TOKENS else t for t in cells]
    return Dataset(schema, columns)


def infer_schema(path, label_column: str = "Label") -> list[ColumnSchema]:
    """Read a CSV header and classify each column as numeric or categorical.

    A column is numeric when every non-missing cell parses as a float.
    """
    raw = _read_raw(path)
    if label_column not in raw.columns:
        raise SchemaMismatch(f"label column {label_column!r} not in header")
    schema = []
    for name in raw.columns:
        if name == label_column:
            schema.append(ColumnSchema(name, LABEL, nullable=False))
            continue
        numeric = True
        for t in raw[name]:
            if t.strip() in MISSING_TOKENS:
                continue
            try:
                float(t)
            except ValueError:
                numeric = False
                break
        schema.append(ColumnSchema(name, NUMERIC if numeric else CATEGORICAL))
    return schema


def _format_cell(value, kind: str) -> str:
    if kind == NUMERIC:
        return "" if math.isnan(value) else repr(float(value))
    return "" if value is None else value


def write_csv(ds: Dataset, path) -> None:
    """Write ``ds`` as RFC 4180 CSV; floats use shortest round-trip repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    kinds = [c.kind for c in ds.schema]
    cols = [ds.columns[c.name] for c in ds.schema]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ds.column_names)
        for i in range(ds.n_rows):
            writer.writerow([_format_cell(col[i], k) for col, k in zip(cols, kinds)])


# ---------------------------------------------------------------------------
# Label taxonomy


@dataclass(frozen=True)
class LabelTaxonomy:
    classes: tuple[str, ...] = tuple(NIDD_CLASS_COUNTS)
    benign: str = "Benign"

    def __post_init__(self):
        folded = [c.casefold() for c in self.classes]
        if len(set(folded)) != len(folded):
            raise DataError("taxonomy class names must be unique (case-insensitive)")
        if self.benign.casefold() not in folded:
            raise DataError(f"benign class {self.benign!r} not among taxonomy classes")

    @property
    def binary_map(self) -> dict[str, str]:
        b = self.benign.casefold()
        return {c: ("benign" if c.casefold() == b else "malicious") for c in self.classes}

    def index(self, name: str) -> int:
        """Position of ``name`` in the taxonomy; matching ignores case."""
        key = name.casefold()
        for i, c in enumerate(self.classes):
            if c.casefold() == key:
                return i
        raise DataError(f"unknown label {name!r}")


def encode_labels(labels: Sequence[str], taxonomy: LabelTaxonomy) -> np.ndarray:
    """Map class names to their integer position in ``taxonomy``."""
    lookup = {c.casefold(): i for i, c in enumerate(taxonomy.classes)}
    out = np.empty(len(labels), dtype=np.int64)
    for i, name in enumerate(labels):
        try:
            out[i] = lookup[str(name).casefold()]
        except KeyError:
            raise DataError(f"unknown label {name!r}") from None
    return out


def binarize_labels(labels: Sequence[str], taxonomy: LabelTaxonomy) -> np.ndarray:
    """Benign -> 0 (negative), every attack class -> 1 (positive)."""
    codes = encode_labels(labels, taxonomy)
    return (codes != taxonomy.index(taxonomy.benign)).astype(np.int64)


# ---------------------------------------------------------------------------
# Synthetic replica


@dataclass(frozen=True)
class ClassComponent:
    name: str
    count: int
    means: tuple[float, ...]
    stds: tuple[float, ...]
    categorical: Mapping[str, Mapping[str, float]] = field(default_factory=dict)


@dataclass(frozen=True)
class ClassMixtureSpec:
    """Per-class diagonal Gaussian mixture plus categorical value distributions."""

    numeric_features: tuple[str, ...]
    classes: tuple[ClassComponent, ...]
    seed: int
    categorical_features: tuple[str, ...] = ()
    label_column: str = "Label"
    missing_fraction: float = 0.0
    add_row_id: bool = False
    add_constant_column: bool = False
    add_duplicate_column: bool = False

    @property
    def n_features(self) -> int:
        return len(self.numeric_features)

    @property
    def total(self) -> int:
        return sum(c.count for c in self.classes)

    def validate(self) -> None:
        d = self.n_features
        if d == 0 and not self.categorical_features:
            raise DataError("spec.numeric_features: at least one feature required")
        if not self.classes:
            raise DataError("spec.classes: at least one class required")
        if not (0 <= int(self.seed) < 2**64):
            raise DataError("spec.seed: must be an unsigned 64-bit integer")
        if not (0.0 <= self.missing_fraction < 1.0):
            raise DataError("spec.missing_fraction: must lie in [0, 1)")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise DataError("spec.classes: duplicate class names")
        for c in self.classes:
            where = f"spec.classes[{c.name}]"
            if not isinstance(c.count, (int, np.integer)) or c.count < 0:
                raise DataError(f"{where}.count: must be a non-negative integer")
            if len(c.means) != d:
                raise DataError(f"{where}.means: expected {d} values, got {len(c.means)}")
            if len(c.stds) != d:
                raise DataError(f"{where}.stds: expected {d} values, got {len(c.stds)}")
            if not all(math.isfinite(m) for m in c.means):
                raise DataError(f"{where}.means: values must be finite")
            if not all(math.isfinite(s) and s > 0 for s in c.stds):
                raise DataError(f"{where}.stds: values must be finite and > 0")
            if set(c.categorical) != set(self.categorical_features):
                raise DataError(f"{where}.categorical: must cover {list(self.categorical_features)}")
            for col, dist in c.categorical.items():
                if not dist or any(p < 0 for p in dist.values()):
                    raise DataError(f"{where}.categorical[{col}]: invalid probabilities")
                if abs(sum(dist.values()) - 1.0) > 1e-9:
                    raise DataError(f"{where}.categorical[{col}]: probabilities must sum to 1")
        if self.total == 0:
            raise DataError("spec.classes: counts sum to zero")

    def to_dict(self) -> dict:
        return {
            "numeric_features": list(self.numeric_features),
            "categorical_features": list(self.categorical_features),
            "label_column": self.label_column,
            "seed": int(self.seed),
            "missing_fraction": self.missing_fraction,
            "add_row_id": self.add_row_id,
            "add_constant_column": self.add_constant_column,
            "add_duplicate_column": self.add_duplicate_column,
            "classes": [
                {
                    "name": c.name,
                    "count": int(c.count),
                    "means": [float(m) for m in c.means],
                    "stds": [float(s) for s in c.stds],
                    "categorical": {k: dict(v) for k, v in c.categorical.items()},
                }
                for c in self.classes
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ClassMixtureSpec":
        try:
            classes = tuple(
                ClassComponent(
                    name=str(c["name"]),
                    count=int(c["count"]),
                    means=tuple(float(m) for m in c["means"]),
                    stds=tuple(float(s) for s in c["stds"]),
                    categorical={k: {str(v): float(p) for v, p in dist.items()}
                                 for k, dist in (c.get("categorical") or {}).items()},
                )
                for c in d["classes"]
            )
            spec = cls(
                numeric_features=tuple(d["numeric_features"]),
                categorical_features=tuple(d.get("categorical_features", ())),
                classes=classes,
                seed=int(d["seed"]),
                label_column=d.get("label_column", "Label"),
                missing_fraction=float(d.get("missing_fraction", 0.0)),
                add_row_id=bool(d.get("add_row_id", False)),
                add_constant_column=bool(d.get("add_constant_column", False)),
                add_duplicate_column=bool(d.get("add_duplicate_column", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed mixture spec: {exc}") from exc
        spec.validate()
        return spec


def largest_remainder(weights: Sequence[float], total: int) -> list[int]:
    """Integer apportionment of ``total`` proportional to ``weights``."""
    w = np.asarray(weights, dtype=np.float64)
    if total == 0 or w.sum() == 0:
        return [0] * len(w)
    quotas = w / w.sum() * total
    base = np.floor(quotas).astype(np.int64)
    short = total - int(base.sum())
    # Stable ordering: larger remainder first, then lower index.
    order = sorted(range(len(w)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return [int(b) for b in base]


def replica_spec(total: int = 20000, n_numeric: int = 24, separation: float = 4.0,
                 seed: int = 0, class_counts: Mapping[str, int] | None = None,
                 missing_fraction: float = 0.005) -> ClassMixtureSpec:
    """Build a mixture whose class shares follow the 5G-NIDD traffic-type counts.

    Class means differ from each other by at least ``separation`` per-feature
    standard deviations along some axis: each class gets a distinct binary code
    and its mean is ``offset + separation * std * code``.
    """
    counts_src = dict(class_counts or NIDD_CLASS_COUNTS)
    names = list(counts_src)
    counts = largest_remainder(list(counts_src.values()), total)
    rng = np.random.default_rng([seed, 7919])
    offsets = rng.uniform(0.0, 100.0, n_numeric)
    scales = 10.0 ** rng.uniform(-1.0, 2.0, n_numeric)
    codes: list[tuple[int, ...]] = []
    while len(codes) < len(names):
        code = tuple(int(b) for b in rng.integers(0, 2, n_numeric))
        if code not in codes:
            codes.append(code)
    cat_values = {"Proto": ["icmp", "tcp", "udp"], "State": ["CON", "FIN", "INT", "REQ", "RST"]}
    classes = []
    for name, count, code in zip(names, counts, codes):
        std_mult = rng.uniform(0.8, 1.25, n_numeric)
        stds = scales * std_mult
        means = offsets + separation * scales * 1.25 * np.asarray(code)
        categorical = {}
        for col, values in cat_values.items():
            p = rng.dirichlet(np.ones(len(values)))
            p = p / p.sum()
            categorical[col] = dict(zip(values, (float(x) for x in p)))
        classes.append(ClassComponent(name, count, tuple(means.tolist()),
                                      tuple(stds.tolist()), categorical))
    return ClassMixtureSpec(
        numeric_features=tuple(f"f{j:02d}" for j in range(n_numeric)),
        categorical_features=tuple(cat_values),
        classes=tuple(classes),
        seed=seed,
        missing_fraction=missing_fraction,
        add_row_id=True,
        add_constant_column=True,
        add_duplicate_column=n_numeric > 0,
    )


def synth_generate(spec: ClassMixtureSpec) -> Dataset:
    """Draw a dataset from ``spec``; a pure function of the spec and its seed.

    RNG order: per class (spec order) numeric block, then each categorical
    column; then the row permutation; then the missing-cell mask.
    """
    spec.validate()
    rng = np.random.default_rng(int(spec.seed))
    d = spec.n_features
    blocks, cats, labels = [], {c: [] for c in spec.categorical_features}, []
    for comp in spec.classes:
        z = rng.standard_normal((comp.count, d))
        blocks.append(np.asarray(comp.means) + np.asarray(comp.stds) * z)
        for col in spec.categorical_features:
            dist = comp.categorical[col]
            values = list(dist)
            p = np.asarray([dist[v] for v in values], dtype=np.float64)
            drawn = rng.choice(len(values), size=comp.count, p=p / p.sum())
            cats[col].extend(values[k] for k in drawn)
        labels.extend([comp.name] * comp.count)
    X = np.vstack(blocks) if blocks else np.empty((0, d))
    perm = rng.permutation(spec.total)
    X = X[perm]
    labels = [labels[i] for i in perm]
    cats = {col: [vals[i] for i in perm] for col, vals in cats.items()}
    if spec.missing_fraction > 0 and d:
        X[rng.random(X.shape) < spec.missing_fraction] = np.nan

    schema: list[ColumnSchema] = []
    columns: dict[str, object] = {}
    if spec.add_row_id:
        schema.append(ColumnSchema("flow_id", CATEGORICAL, nullable=False))
        columns["flow_id"] = [f"flow-{i:08d}" for i in range(spec.total)]
    for j, name in enumerate(spec.numeric_features):
        schema.append(ColumnSchema(name, NUMERIC))
        columns[name] = X[:, j]
    if spec.add_duplicate_column and d:
        dup = f"{spec.numeric_features[0]}_copy"
        schema.append(ColumnSchema(dup, NUMERIC))
        columns[dup] = X[:, 0].copy()
    if spec.add_constant_column:
        schema.append(ColumnSchema("const_flag", NUMERIC))
        columns["const_flag"] = np.ones(spec.total)
    for col in spec.categorical_features:
        schema.append(ColumnSchema(col, CATEGORICAL))
        columns[col] = cats[col]
    schema.append(ColumnSchema(spec.label_column, LABEL, nullable=False))
    columns[spec.label_column] = labels
    return Dataset(schema, columns)


# ---------------------------------------------------------------------------
# Splitting and sampling


def _class_indices(labels: np.ndarray) -> dict[str, np.ndarray]:
    classes = sorted(set(labels.tolist()))
    return {c: np.flatnonzero(labels == c) for c in classes}


def stratified_split(ds: Dataset, test_fraction: float = 0.2, seed: int = 0
                     ) -> tuple[Dataset, Dataset]:
    """Partition rows so each class contributes round(count * test_fraction) test rows.

    The test share of a class is capped at ``count - 1`` so every class keeps a
    training row. Both partitions preserve the original row order.
    """
    if not (0.0 < test_fraction < 1.0):
        raise DataError("test_fraction must lie in (0, 1)")
    groups = _class_indices(ds.labels)
    small = [c for c, idx in groups.items() if len(idx) < 2]
    if small:
        raise DataError(f"classes with fewer than 2 rows cannot be split: {small}")
    rng = np.random.default_rng(int(seed))
    test_parts = []
    for idx in groups.values():
        n_test = min(int(math.floor(len(idx) * test_fraction + 0.5)), len(idx) - 1)
        test_parts.append(rng.permutation(idx)[:n_test])
    test_idx = np.sort(np.concatenate(test_parts)) if test_parts else np.empty(0, np.int64)
    mask = np.zeros(ds.n_rows, dtype=bool)
    mask[test_idx] = True
    return ds.take(np.flatnonzero(~mask)), ds.take(test_idx)


def stratified_sample_indices(labels: Sequence, n: int, seed: int = 0) -> np.ndarray:
    """Indices of exactly ``min(n, len(labels))`` rows with class shares preserved."""
    labels = np.asarray(labels, dtype=object)
    if n >= len(labels):
        return np.arange(len(labels))
    groups = _class_indices(labels)
    quotas = largest_remainder([len(v) for v in groups.values()], n)
    rng = np.random.default_rng(int(seed))
    picked = [rng.permutation(idx)[:q] for idx, q in zip(groups.values(), quotas)]
    return np.sort(np.concatenate(picked))


def stratified_sample(ds: Dataset, n: int, seed: int = 0) -> Dataset:
    return ds.take(stratified_sample_indices(ds.labels, n, seed))
