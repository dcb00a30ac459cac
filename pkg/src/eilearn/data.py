"""Tabular datasets and the phase split hierarchy.

A dataset ``D`` is split into a train/test pool ``T`` and a validation set
``V``; ``T`` is cut into ``k`` contiguous phase parts and each part is split
into a training block ``P_i`` and a test block ``Q_i``.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np


class DataError(ValueError):
    """Raised for malformed input files and impossible split plans."""


@dataclass(frozen=True)
class Attribute:
    name: str
    categories: tuple[str, ...] | None = None  # None means numeric

    @property
    def is_numeric(self) -> bool:
        return self.categories is None

    def __post_init__(self):
        if self.categories is not None and len(self.categories) == 0:
            raise DataError(f"categorical attribute {self.name!r} has no categories")


@dataclass(frozen=True)
class Schema:
    attributes: tuple[Attribute, ...]
    label: str
    classes: tuple[str, ...]

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if not names:
            raise DataError("schema needs at least one attribute")
        if len(set(names)) != len(names):
            raise DataError("attribute names must be unique")
        if len(self.classes) < 2:
            raise DataError("schema needs at least two label classes")

    def index_of(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise KeyError(name)


Value = Union[float, str]


@dataclass(frozen=True)
class Instance:
    values: tuple[Value, ...]
    label: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered, immutable collection of instances sharing a schema."""

    schema: Schema
    instances: tuple[Instance, ...]
    _codes: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Dataset(self.schema, self.instances[i])
        return self.instances[i]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.schema == other.schema and self.instances == other.instances

    __hash__ = None

    def take(self, indices: Sequence[int]) -> Dataset:
        return Dataset(self.schema, tuple(self.instances[i] for i in indices))

    def concat(self, other: Dataset) -> Dataset:
        if other.schema != self.schema:
            raise DataError("cannot concatenate datasets with different schemas")
        return Dataset(self.schema, self.instances + other.instances)

    @property
    def labels(self) -> np.ndarray:
        return np.fromiter((x.label for x in self.instances), dtype=np.int64, count=len(self))

    def codes(self) -> np.ndarray:
        """Float matrix view: numeric values as-is, categories as their index."""
        if self._codes is None:
            object.__setattr__(self, "_codes", encode_values(self.schema, self.instances))
        return self._codes


def encode_values(schema: Schema, instances: Sequence[Instance]) -> np.ndarray:
    out = np.empty((len(instances), len(schema.attributes)), dtype=float)
    lookups = [
        None if a.is_numeric else {c: j for j, c in enumerate(a.categories)}
        for a in schema.attributes
    ]
    for r, inst in enumerate(instances):
        for c, v in enumerate(inst.values):
            lut = lookups[c]
            # unknown categories become -1 so they route to the fallback branch
            out[r, c] = v if lut is None else lut.get(v, -1)
    return out


def check_instance(schema: Schema, inst: Instance) -> None:
    if len(inst.values) != len(schema.attributes):
        raise DataError(
            f"instance has {len(inst.values)} values, schema has {len(schema.attributes)}"
        )
    for a, v in zip(schema.attributes, inst.values):
        if a.is_numeric:
            if isinstance(v, str) or not math.isfinite(v):
                raise DataError(f"attribute {a.name!r} expects a finite number, got {v!r}")
        elif not isinstance(v, str):
            raise DataError(f"attribute {a.name!r} expects a category, got {v!r}")
    if not 0 <= inst.label < len(schema.classes):
        raise DataError(f"label index {inst.label} out of range")


def _parses(cell: str) -> bool:
    try:
        return math.isfinite(float(cell))
    except ValueError:
        return False


def load_csv(
    path: str | os.PathLike,
    label_column: str,
    kind_overrides: Mapping[str, str] | None = None,
) -> Dataset:
    """Read a header-first CSV file into a :class:`Dataset`.

    A column is numeric when every cell parses as a finite decimal number,
    otherwise categorical with categories in first-seen order.
    ``kind_overrides`` maps a column name to ``"numeric"`` or ``"categorical"``.
    Empty cells are rejected.
    """
    kind_overrides = dict(kind_overrides or {})
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError("empty file")
    header = [h.strip() for h in rows[0]]
    body = [[c.strip() for c in r] for r in rows[1:]]
    if label_column not in header:
        raise DataError(f"label column {label_column!r} not in header {header}")
    unknown = set(kind_overrides) - set(header)
    if unknown:
        raise DataError(f"kind_overrides name unknown columns: {sorted(unknown)}")
    if not body:
        raise DataError("empty dataset")
    for lineno, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} cells, got {len(r)}")
        for name, cell in zip(header, r):
            if cell == "":
                raise DataError(f"line {lineno}: missing value in column {name!r}")

    label_idx = header.index(label_column)
    attributes = []
    columns = []
    for c, name in enumerate(header):
        if c == label_idx:
            continue
        cells = [r[c] for r in body]
        kind = kind_overrides.get(name)
        if kind is None:
            kind = "numeric" if all(_parses(x) for x in cells) else "categorical"
        if kind == "numeric":
            vals = []
            for lineno, x in enumerate(cells, start=2):
                if not _parses(x):
                    raise DataError(f"line {lineno}: {x!r} in numeric column {name!r}")
                vals.append(float(x))
            attributes.append(Attribute(name))
        elif kind == "categorical":
            vals = cells
            attributes.append(Attribute(name, tuple(dict.fromkeys(cells))))
        else:
            raise DataError(f"unknown kind {kind!r} for column {name!r}")
        columns.append(vals)

    label_cells = [r[label_idx] for r in body]
    classes = tuple(dict.fromkeys(label_cells))
    if len(classes) < 2:
        raise DataError(f"label column {label_column!r} has fewer than two classes")
    class_index = {c: i for i, c in enumerate(classes)}
    schema = Schema(tuple(attributes), label_column, classes)
    instances = tuple(
        Instance(tuple(col[r] for col in columns), class_index[label_cells[r]])
        for r in range(len(body))
    )
    return Dataset(schema, instances)


@dataclass(frozen=True)
class SplitPlan:
    holdout_size: int
    phases: int
    train_fraction: float
    shuffle_seed: int | None = None

    def __post_init__(self):
        if self.holdout_size < 1:
            raise DataError("holdout_size must be >= 1")
        if self.phases < 1:
            raise DataError("phases must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise DataError("train_fraction must lie strictly between 0 and 1")

    def check(self, n: int) -> None:
        """Raise unless the plan can be applied to ``n`` instances."""
        if self.holdout_size >= n:
            raise DataError(
                f"empty validation set: holdout_size {self.holdout_size} >= {n} instances"
            )
        for size in phase_sizes(self.holdout_size, self.phases):
            train_size(size, self.train_fraction)

    def sizes(self, n: int) -> dict:
        """Planned split sizes without touching any data."""
        self.check(n)
        parts = phase_sizes(self.holdout_size, self.phases)
        return {
            "T": self.holdout_size,
            "V": n - self.holdout_size,
            "phases": [
                {"T_i": s, "P_i": train_size(s, self.train_fraction),
                 "Q_i": s - train_size(s, self.train_fraction)}
                for s in parts
            ],
        }


def phase_sizes(total: int, k: int) -> list[int]:
    if k < 1:
        raise DataError("k must be >= 1")
    if k > total:
        raise DataError(f"cannot cut {total} instances into {k} phases")
    base, extra = divmod(total, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def train_size(n: int, train_fraction: float) -> int:
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must lie strictly between 0 and 1")
    # the epsilon absorbs binary representation error, e.g. 0.29 * 100
    p = math.floor(train_fraction * n + 1e-9)
    if p < 1 or p >= n:
        raise DataError(
            f"train_fraction {train_fraction} on {n} instances leaves an empty train or test set"
        )
    return p


def split_holdout(d: Dataset, plan: SplitPlan) -> tuple[Dataset, Dataset]:
    if plan.holdout_size >= len(d):
        raise DataError(
            f"empty validation set: holdout_size {plan.holdout_size} >= {len(d)} instances"
        )
    if plan.shuffle_seed is not None:
        order = np.random.default_rng(plan.shuffle_seed).permutation(len(d))
        d = d.take(order.tolist())
    return d[: plan.holdout_size], d[plan.holdout_size :]


def partition_phases(T: Dataset, k: int) -> list[Dataset]:
    parts = []
    start = 0
    for size in phase_sizes(len(T), k):
        parts.append(T[start : start + size])
        start += size
    return parts


def split_train_test(T_i: Dataset, train_fraction: float) -> tuple[Dataset, Dataset]:
    p = train_size(len(T_i), train_fraction)
    return T_i[:p], T_i[p:]
