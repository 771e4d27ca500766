"""Datasets, model specifications and design matrices; CSV readers/writers.

Two CSV layouts are supported:

* individual records: header row, one observed unit per row, an integer
  count column (``>= 1``) and any number of covariate columns;
* frequency tables: header exactly ``count,freq``.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .counts import FrequencyTable, table_from_counts
from .exceptions import DataValidationError, SchemaError, UsageError

__all__ = [
    "Covariate",
    "ObservedUnit",
    "Dataset",
    "ModelSpec",
    "DesignMatrix",
    "read_individual_csv",
    "write_individual_csv",
    "read_frequency_csv",
    "write_frequency_csv",
    "build_design",
    "load_schema",
    "dump_schema",
    "load_bangkok_frequencies",
    "load_heroin",
    "load_methamphetamine",
    "immigrant_schema",
]

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Covariate:
    """Declared covariate: a name and its kind.

    For categorical covariates ``levels`` fixes the dummy column order and
    ``reference`` the omitted level (default: the last level). ``levels=None``
    defers the level set to the data; the reader fills it with the sorted
    distinct values.
    """

    name: str
    kind: str = CONTINUOUS
    levels: Optional[tuple] = None
    reference: Optional[str] = None

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise UsageError(f"unknown covariate kind {self.kind!r}", reason="bad-kind")
        if self.kind == CONTINUOUS:
            if self.levels is not None or self.reference is not None:
                raise UsageError(
                    f"continuous covariate {self.name!r} cannot have levels",
                    reason="bad-kind",
                )
            return
        if self.levels is None:
            return
        levels = tuple(str(v) for v in self.levels)
        if not levels:
            raise UsageError(f"categorical {self.name!r} has no levels", reason="no-levels")
        if len(set(levels)) != len(levels):
            raise UsageError(f"duplicate levels for {self.name!r}", reason="dup-levels")
        ref = levels[-1] if self.reference is None else str(self.reference)
        if ref not in levels:
            raise UsageError(
                f"reference level {ref!r} is not a level of {self.name!r}",
                reason="bad-reference",
            )
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "reference", ref)

    @classmethod
    def continuous(cls, name):
        return cls(name)

    @classmethod
    def categorical(cls, name, levels=None, reference=None):
        return cls(name, CATEGORICAL, None if levels is None else tuple(levels), reference)

    @property
    def is_categorical(self):
        return self.kind == CATEGORICAL

    @property
    def dummy_levels(self):
        """Levels that get an indicator column (all but the reference)."""
        return tuple(v for v in self.levels if v != self.reference)

    def with_levels(self, levels):
        return Covariate.categorical(self.name, levels, self.reference)


@dataclass(frozen=True)
class ObservedUnit:
    count: int
    covariates: Mapping[str, Union[float, str]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "covariates", MappingProxyType(dict(self.covariates)))


@dataclass(frozen=True)
class Dataset:
    """Observed units with a declared covariate schema."""

    units: tuple
    schema: tuple = ()

    def __post_init__(self):
        units = tuple(
            u if isinstance(u, ObservedUnit) else ObservedUnit(*u) for u in self.units
        )
        schema = tuple(self.schema)
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "schema", schema)
        names = [c.name for c in schema]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate covariate names in schema", reason="dup-column")
        for i, u in enumerate(units):
            if int(u.count) != u.count or u.count < 1:
                raise DataValidationError(
                    f"unit {i}: count {u.count!r} must be an integer >= 1",
                    reason="count<1",
                )
            for c in schema:
                if c.name not in u.covariates:
                    raise DataValidationError(
                        f"unit {i}: missing value for covariate {c.name!r}",
                        reason="missing-value",
                    )
                v = u.covariates[c.name]
                if c.is_categorical:
                    if c.levels is None:
                        raise SchemaError(
                            f"categorical {c.name!r} has undeclared levels",
                            reason="no-levels",
                        )
                    if v not in c.levels:
                        raise DataValidationError(
                            f"unit {i}: unknown level {v!r} for {c.name!r}",
                            reason="unknown-level",
                        )
                elif not isinstance(v, (int, float)) or not math.isfinite(v):
                    raise DataValidationError(
                        f"unit {i}: covariate {c.name!r} must be a finite number",
                        reason="non-numeric",
                    )

    def __len__(self):
        return len(self.units)

    @property
    def counts(self):
        return np.fromiter((u.count for u in self.units), dtype=np.int64, count=len(self.units))

    @property
    def names(self):
        return tuple(c.name for c in self.schema)

    def covariate(self, name):
        for c in self.schema:
            if c.name == name:
                return c
        raise UsageError(f"unknown covariate {name!r}", reason="unknown-covariate")

    def column(self, name):
        c = self.covariate(name)
        vals = [u.covariates[name] for u in self.units]
        return np.asarray(vals, dtype=object if c.is_categorical else float)

    def frequency_table(self) -> FrequencyTable:
        return table_from_counts(self.counts)

    def subset(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return Dataset(tuple(u for u, keep in zip(self.units, mask) if keep), self.schema)

    @classmethod
    def from_arrays(cls, counts, covariates=None, schema=None):
        """Build from a count vector and a mapping of covariate name to values."""
        covariates = covariates or {}
        if schema is None:
            schema = tuple(Covariate.continuous(k) for k in covariates)
        n = len(counts)
        units = tuple(
            ObservedUnit(
                int(counts[i]),
                {
                    k: (str(v[i]) if _is_categorical_in(schema, k) else float(v[i]))
                    for k, v in covariates.items()
                },
            )
            for i in range(n)
        )
        return cls(units, tuple(schema))


def _is_categorical_in(schema, name):
    for c in schema:
        if c.name == name:
            return c.is_categorical
    return False


@dataclass(frozen=True)
class ModelSpec:
    """Which covariates enter the linear predictor.

    ``ModelSpec.parse("gender,age")`` mirrors labels such as ``G + A``.
    """

    terms: tuple = ()
    intercept: bool = True

    def __post_init__(self):
        terms = tuple(self.terms)
        if len(set(terms)) != len(terms):
            raise UsageError(f"duplicate terms in model {terms}", reason="dup-terms")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def parse(cls, text, intercept=True):
        terms = tuple(t.strip() for t in text.split(",") if t.strip())
        return cls(terms, intercept)

    def validate(self, schema):
        names = {c.name for c in schema}
        unknown = [t for t in self.terms if t not in names]
        if unknown:
            raise UsageError(
                f"model terms not in data schema: {', '.join(unknown)}",
                reason="unknown-covariate",
            )
        if not self.terms and not self.intercept:
            raise UsageError("model has no columns", reason="empty-model")

    @property
    def label(self):
        return " + ".join(self.terms) if self.terms else "Null"


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray
    columns: tuple

    @property
    def shape(self):
        return self.values.shape

    def take(self, rows):
        return DesignMatrix(self.values[rows], self.columns)


def build_design(dataset: Dataset, spec: ModelSpec) -> DesignMatrix:
    """Numeric design matrix for ``spec`` with treatment (dummy) coding.

    Columns: ``intercept`` first when enabled, then each included covariate
    in schema order; continuous values pass through unscaled, a categorical
    covariate contributes one ``name=level`` indicator per non-reference
    level. Rank is not checked here.
    """
    spec.validate(dataset.schema)
    n = len(dataset)
    cols, names = [], []
    if spec.intercept:
        cols.append(np.ones(n))
        names.append("intercept")
    for c in dataset.schema:
        if c.name not in spec.terms:
            continue
        if c.is_categorical:
            vals = dataset.column(c.name)
            for level in c.dummy_levels:
                cols.append((vals == level).astype(float))
                names.append(f"{c.name}={level}")
        else:
            cols.append(dataset.column(c.name))
            names.append(c.name)
    values = np.column_stack(cols) if cols else np.empty((n, 0))
    return DesignMatrix(values, tuple(names))


# --- CSV ---------------------------------------------------------------------

def _format_number(v):
    if isinstance(v, str):
        return v
    if float(v).is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(float(v))


def _parse_float(text, name, line):
    s = text.strip()
    try:
        if "_" in s:
            raise ValueError
        v = float(s)
    except ValueError:
        raise DataValidationError(
            f"line {line}: column {name!r} value {text!r} is not a number",
            reason="non-numeric",
            line=line,
        ) from None
    if not math.isfinite(v):
        raise DataValidationError(
            f"line {line}: column {name!r} value {text!r} is not finite",
            reason="non-numeric",
            line=line,
        )
    return v


def _parse_count(text, name, line):
    s = text.strip()
    try:
        v = int(s)
    except ValueError:
        raise DataValidationError(
            f"line {line}: count {text!r} in column {name!r} is not an integer",
            reason="count-non-integer",
            line=line,
        ) from None
    if v < 1:
        raise DataValidationError(
            f"line {line}: count {v} < 1 (zero counts cannot be observed)",
            reason="count<1",
            line=line,
        )
    return v


def _normalise_schema(schema, header, count_column):
    if schema is None:
        return [Covariate.continuous(h) for h in header if h != count_column]
    out = []
    for c in schema:
        out.append(Covariate.continuous(c) if isinstance(c, str) else c)
    return out


def read_individual_csv(path, count_column="count", schema: Optional[Sequence] = None) -> Dataset:
    """Read one observed unit per row.

    Parameters
    ----------
    path : path-like
    count_column : str
        Name of the integer count column.
    schema : sequence of Covariate or str, optional
        Covariates to load. Plain names are continuous. ``None`` loads every
        other column as continuous. Categorical covariates declared without
        levels get the sorted distinct values found in the file.

    Raises
    ------
    SchemaError
        A required column is missing from the header.
    DataValidationError
        A row has a bad count, a blank or non-numeric cell, or an undeclared
        category level. The message carries the file line number.
    """
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file", reason="empty-file") from None
        schema = _normalise_schema(schema, header, count_column)
        for name in [count_column] + [c.name for c in schema]:
            if name not in header:
                raise SchemaError(f"{path}: missing column {name!r}", reason=f"missing-column:{name}")
        idx = {h: k for k, h in enumerate(header)}
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataValidationError(
                    f"line {lineno}: expected {len(header)} fields, got {len(row)}",
                    reason="field-count",
                    line=lineno,
                )
            count = _parse_count(row[idx[count_column]], count_column, lineno)
            values = {}
            for c in schema:
                cell = row[idx[c.name]]
                if not cell.strip():
                    raise DataValidationError(
                        f"line {lineno}: blank value in column {c.name!r}",
                        reason="missing-value",
                        line=lineno,
                    )
                if c.is_categorical:
                    level = cell.strip()
                    if c.levels is not None and level not in c.levels:
                        raise DataValidationError(
                            f"line {lineno}: unknown level {level!r} for {c.name!r}",
                            reason="unknown-level",
                            line=lineno,
                        )
                    values[c.name] = level
                else:
                    values[c.name] = _parse_float(cell, c.name, lineno)
            rows.append(ObservedUnit(count, values))
    resolved = []
    for c in schema:
        if c.is_categorical and c.levels is None:
            seen = sorted({u.covariates[c.name] for u in rows})
            if not seen:
                raise SchemaError(f"no values for categorical {c.name!r}", reason="no-levels")
            if c.reference is not None and c.reference not in seen:
                seen.append(c.reference)
            c = c.with_levels(seen)
        resolved.append(c)
    return Dataset(tuple(rows), tuple(resolved))


def write_individual_csv(dataset: Dataset, path, count_column="count"):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([count_column, *dataset.names])
        for u in dataset.units:
            writer.writerow(
                [u.count, *(_format_number(u.covariates[n]) for n in dataset.names)]
            )


def read_frequency_csv(path) -> FrequencyTable:
    """Read a ``count,freq`` file into a :class:`FrequencyTable`."""
    freq = {}
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file", reason="empty-file") from None
        if header != ["count", "freq"]:
            raise SchemaError(
                f"{path}: header must be exactly 'count,freq', got {','.join(header)!r}",
                reason="bad-header",
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise DataValidationError(
                    f"line {lineno}: expected 2 fields, got {len(row)}",
                    reason="field-count",
                    line=lineno,
                )
            j = _parse_count(row[0], "count", lineno)
            try:
                f = int(row[1].strip())
            except ValueError:
                raise DataValidationError(
                    f"line {lineno}: frequency {row[1]!r} is not an integer",
                    reason="freq-non-integer",
                    line=lineno,
                ) from None
            if f < 0:
                raise DataValidationError(
                    f"line {lineno}: negative frequency {f}", reason="freq<0", line=lineno
                )
            if j in freq:
                raise DataValidationError(
                    f"line {lineno}: duplicate count value {j}",
                    reason="duplicate-count",
                    line=lineno,
                )
            freq[j] = f
    return FrequencyTable(freq)


def write_frequency_csv(table: FrequencyTable, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["count", "freq"])
        for j, f in table.freq.items():
            writer.writerow([j, _format_number(f)])


# --- schema files and shipped fixtures ----------------------------------------

def load_schema(path):
    """Read a JSON schema file.

    Returns
    -------
    count_column : str
    covariates : list of Covariate
    """
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return _schema_from_doc(doc)


def _schema_from_doc(doc):
    covs = []
    for item in doc["covariates"]:
        if item.get("kind", CONTINUOUS) == CATEGORICAL:
            covs.append(
                Covariate.categorical(item["name"], item.get("levels"), item.get("reference"))
            )
        else:
            covs.append(Covariate.continuous(item["name"]))
    return doc.get("count_column", "count"), covs


def dump_schema(count_column, covariates, path):
    doc = {"count_column": count_column, "covariates": []}
    for c in covariates:
        item = {"name": c.name, "kind": c.kind}
        if c.is_categorical:
            item["levels"] = list(c.levels) if c.levels is not None else None
            item["reference"] = c.reference
        doc["covariates"].append(item)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _fixture(name):
    return resources.files("popsize").joinpath("data").joinpath(name)


def fixture_path(name):
    """Filesystem path of a shipped fixture file (e.g. ``"bangkok_frequencies.csv"``)."""
    with resources.as_file(_fixture(name)) as p:
        return Path(p)


def load_bangkok_frequencies() -> FrequencyTable:
    """Methamphetamine users in Bangkok 2001, all ages (3346 users)."""
    return read_frequency_csv(fixture_path("bangkok_frequencies.csv"))


def load_heroin() -> Dataset:
    """Female heroin users by age, one row per user (268 users)."""
    return read_individual_csv(fixture_path("heroin_age.csv"), "contacts", ["age"])


def load_methamphetamine() -> Dataset:
    """Female methamphetamine users by age, one row per user (274 users)."""
    return read_individual_csv(fixture_path("methamphetamine_age.csv"), "contacts", ["age"])


def immigrant_schema():
    """Covariate schema of the illegal immigrant police records.

    Returns ``(count_column, covariates)``; the data file itself is not
    shipped.
    """
    return load_schema(fixture_path("immigrant_schema.json"))
