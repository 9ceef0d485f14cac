"""Records, datasets, query configuration, and oracle-call accounting.

A dataset is stored column-wise: one float vector for the aggregated
statistic, one boolean vector per named oracle predicate (the ground truth
used to simulate expensive oracle calls), and one float vector per named
proxy. Oracle labels are only ever revealed through an
:class:`OracleLedger`, which charges each ``(record, predicate)`` pair at
most once against the query budget.
"""

import csv
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from .predicates import PredicateExpr, base_names, eval_oracle_expr, parse_predicate

__all__ = [
    "Record",
    "Dataset",
    "ColumnSchema",
    "QueryConfig",
    "OracleLedger",
    "SchemaError",
    "ValidationError",
    "ConfigError",
    "BudgetExceededError",
    "load_dataset",
    "write_dataset",
    "oracle_eval",
]


class SchemaError(ValueError):
    """A declared column is missing from the file header."""


class ValidationError(ValueError):
    """A cell violates a record invariant; names the offending row."""


class ConfigError(ValueError):
    """Query configuration violates its invariants."""


class BudgetExceededError(RuntimeError):
    """An oracle call was requested past the allowed budget."""

    def __init__(self, ledger: "OracleLedger", requested: int):
        super().__init__(
            f"oracle budget exhausted: {ledger.calls_made} calls made, "
            f"{requested} more requested, {ledger.calls_allowed} allowed"
        )
        self.ledger = ledger


@dataclass(frozen=True)
class Record:
    """One row: id, aggregated statistic, ground-truth labels, proxy scores."""

    id: int
    statistic: float
    oracle_labels: Mapping[str, bool]
    proxy_scores: Mapping[str, float]


class Dataset:
    """Immutable columnar table of records.

    Ids are dense ``0..n-1`` in row order. All records share the same label
    and proxy key sets by construction.
    """

    def __init__(
        self,
        statistics,
        oracle_labels: Mapping[str, object],
        proxy_scores: Mapping[str, object],
        name: str = "",
    ):
        self.statistics = np.ascontiguousarray(statistics, dtype=np.float64)
        if self.statistics.ndim != 1:
            raise ValidationError("statistics must be a 1-D vector")
        n = len(self.statistics)
        bad = np.flatnonzero(~np.isfinite(self.statistics))
        if bad.size:
            raise ValidationError(f"non-finite statistic at row {bad[0]}")
        self.oracle_labels = {}
        for key, col in oracle_labels.items():
            arr = np.asarray(col)
            if arr.shape != (n,):
                raise ValidationError(f"label column {key!r} has wrong length")
            if arr.dtype != bool:
                vals = arr.astype(np.float64)
                if not np.isin(vals, (0.0, 1.0)).all():
                    bad = np.flatnonzero(~np.isin(vals, (0.0, 1.0)))
                    raise ValidationError(
                        f"label {key!r} not in {{0,1}} at row {bad[0]}"
                    )
                arr = vals.astype(bool)
            self.oracle_labels[key] = arr
        self.proxy_scores = {}
        for key, col in proxy_scores.items():
            arr = np.ascontiguousarray(col, dtype=np.float64)
            if arr.shape != (n,):
                raise ValidationError(f"proxy column {key!r} has wrong length")
            bad = np.flatnonzero(~((arr >= 0.0) & (arr <= 1.0)))
            if bad.size:
                raise ValidationError(
                    f"proxy {key!r} outside [0, 1] at row {bad[0]}: {arr[bad[0]]!r}"
                )
            self.proxy_scores[key] = arr
        self.name = name

    def __len__(self) -> int:
        return len(self.statistics)

    @property
    def n(self) -> int:
        return len(self.statistics)

    def record(self, i: int) -> Record:
        if not 0 <= i < self.n:
            raise IndexError(f"record id {i} out of range")
        return Record(
            id=i,
            statistic=float(self.statistics[i]),
            oracle_labels={k: bool(v[i]) for k, v in self.oracle_labels.items()},
            proxy_scores={k: float(v[i]) for k, v in self.proxy_scores.items()},
        )

    def __iter__(self):
        return (self.record(i) for i in range(self.n))

    def proxy(self, name: str) -> np.ndarray:
        try:
            return self.proxy_scores[name]
        except KeyError:
            raise KeyError(f"dataset has no proxy named {name!r}") from None


@dataclass(frozen=True)
class ColumnSchema:
    """Maps file columns to record roles."""

    statistic: str
    labels: Mapping[str, str]   # predicate name -> column name
    proxies: Mapping[str, str]  # proxy name -> column name
    delimiter: str = ","


def load_dataset(path, schema: ColumnSchema, name: str = "") -> Dataset:
    """Read a delimited file with a header row into a Dataset.

    Every row becomes exactly one record (ids in row order) or the whole
    load fails with an error naming the offending row.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        col_index = {col: i for i, col in enumerate(header)}
        wanted = [schema.statistic, *schema.labels.values(), *schema.proxies.values()]
        missing = [c for c in wanted if c not in col_index]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing} (header: {header})")
        columns: dict[str, list[float]] = {c: [] for c in wanted}
        for row_idx, row in enumerate(reader):
            for col in wanted:
                cell = row[col_index[col]]
                try:
                    columns[col].append(float(cell))
                except ValueError:
                    raise ValidationError(
                        f"{path}: row {row_idx}, column {col!r}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
    stats = np.asarray(columns[schema.statistic], dtype=np.float64)
    labels = {key: np.asarray(columns[col]) for key, col in schema.labels.items()}
    proxies = {key: np.asarray(columns[col]) for key, col in schema.proxies.items()}
    return Dataset(stats, labels, proxies, name=name or str(path))


def write_dataset(dataset: Dataset, path, schema: ColumnSchema) -> None:
    """Write a Dataset back to a delimited file (inverse of load_dataset)."""
    header = [schema.statistic, *schema.labels.values(), *schema.proxies.values()]
    label_cols = [dataset.oracle_labels[k] for k in schema.labels]
    proxy_cols = [dataset.proxy_scores[k] for k in schema.proxies]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=schema.delimiter)
        writer.writerow(header)
        for i in range(dataset.n):
            row = [repr(float(dataset.statistics[i]))]
            row += [str(int(col[i])) for col in label_cols]
            row += [repr(float(col[i])) for col in proxy_cols]
            writer.writerow(row)


@dataclass(frozen=True)
class QueryConfig:
    """Everything a single aggregation query needs besides the dataset."""

    aggregate: str = "AVG"
    predicate: Union[PredicateExpr, str] = "pred"
    proxy: Union[str, PredicateExpr, None] = None
    budget_total: int = 10_000
    stage1_fraction: float = 0.5
    num_strata: int = 5
    alpha: float = 0.05
    bootstrap_trials: int = 1_000
    seed: int = 0

    def __post_init__(self):
        if self.aggregate not in ("AVG", "SUM", "COUNT"):
            raise ConfigError(f"unsupported aggregate {self.aggregate!r}")
        if self.budget_total < 1:
            raise ConfigError("budget_total must be positive")
        if not 0.0 < self.stage1_fraction < 1.0:
            raise ConfigError("stage1_fraction must lie in (0, 1)")
        if self.num_strata < 1:
            raise ConfigError("num_strata must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.bootstrap_trials < 1:
            raise ConfigError("bootstrap_trials must be at least 1")

    def predicate_expr(self) -> PredicateExpr:
        expr = self.predicate
        return parse_predicate(expr) if isinstance(expr, str) else expr


class OracleLedger:
    """Charges simulated oracle calls against a fixed budget.

    One unit of budget is one ``(record, base predicate)`` evaluation. Each
    pair is charged at most once; re-evaluating a drawn record is free, so
    pilot-stage records can be reused without spending budget twice.
    """

    def __init__(self, calls_allowed: int, predicate_names: Iterable[str], n_records: int):
        if calls_allowed < 1:
            raise ConfigError("calls_allowed must be positive")
        self.calls_allowed = int(calls_allowed)
        self.calls_made = 0
        self.per_predicate_calls = {name: 0 for name in predicate_names}
        self._charged = {name: np.zeros(n_records, dtype=bool) for name in self.per_predicate_calls}

    def charge(self, predicate: str, ids) -> None:
        """Charge all not-yet-charged ids under one base predicate."""
        charged = self._charged[predicate]
        ids = np.atleast_1d(np.asarray(ids, dtype=np.int64))
        fresh = int(np.count_nonzero(~charged[ids]))
        if self.calls_made + fresh > self.calls_allowed:
            raise BudgetExceededError(self, fresh)
        charged[ids] = True
        self.calls_made += fresh
        self.per_predicate_calls[predicate] += fresh

    @property
    def remaining(self) -> int:
        return self.calls_allowed - self.calls_made


def oracle_eval(ledger: OracleLedger, record: Record, predicate: Union[PredicateExpr, str]) -> bool:
    """Evaluate an oracle predicate on one record, charging the ledger.

    Each base predicate touched by the expression is charged once for this
    record; repeat evaluations hit the memoized charge and are free.
    """
    expr = parse_predicate(predicate) if isinstance(predicate, str) else predicate
    for name in base_names(expr):
        if name not in record.oracle_labels:
            raise ValidationError(f"record {record.id} has no oracle label {name!r}")
        ledger.charge(name, record.id)
    return bool(eval_oracle_expr(expr, record.oracle_labels))
