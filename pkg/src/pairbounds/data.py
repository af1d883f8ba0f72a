"""Household records and the empirical cell distribution.

Cells are indexed ``16 * block + 8y + 4y' + 2d + d'`` with
``block = 2 * z + z'``; unprimed values belong to member 1.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

COLUMNS = ("y1", "d1", "z1", "y2", "d2", "z2")
WIDE_HEADER = ("household_id",) + COLUMNS
LONG_HEADER = ("household_id", "role", "y", "d", "z")


class ParseError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class DuplicateHousehold(ParseError):
    pass


class AllBlocksEmpty(ValueError):
    pass


@dataclass(frozen=True)
class HouseholdRecord:
    household_id: str
    y1: int
    d1: int
    z1: int
    y2: int
    d2: int
    z2: int

    def __post_init__(self):
        for name in COLUMNS:
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1, got {getattr(self, name)!r}")

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(getattr(self, c) for c in COLUMNS)


@dataclass(frozen=True)
class ObservedDistribution:
    """Conditional cell frequencies given each offer block.

    Attributes
    ----------
    cells : (64,) float array; each active block sums to one, inactive blocks are zero
    n_z : (4,) int array of household counts per offer block
    counts : (64,) int array of raw cell counts
    """

    cells: np.ndarray
    n_z: np.ndarray
    counts: np.ndarray

    @property
    def active_blocks(self) -> tuple[int, ...]:
        return tuple(int(k) for k in np.flatnonzero(self.n_z > 0))

    @property
    def n(self) -> int:
        return int(self.n_z.sum())

    def block(self, k: int) -> np.ndarray:
        return self.cells[16 * k: 16 * k + 16]

    @classmethod
    def from_cells(cls, cells, n_z=None) -> "ObservedDistribution":
        """Wrap population cells; ``n_z`` defaults to 1 for every nonzero block."""
        cells = np.asarray(cells, dtype=float).ravel()
        if cells.size != 64:
            raise ValueError("cells must have 64 entries")
        if n_z is None:
            n_z = np.array([1 if cells[16 * k: 16 * k + 16].sum() > 0 else 0 for k in range(4)])
        return cls(cells, np.asarray(n_z, dtype=np.int64), np.zeros(64, dtype=np.int64))


def _binary(value: str, row: int, name: str) -> int:
    v = value.strip() if value is not None else ""
    if v not in ("0", "1"):
        raise ParseError(f"column {name} must be 0 or 1, got {value!r}", row)
    return int(v)


def ingest(path, schema: str = "wide", role_map: Mapping[str, int] | None = None) -> list[HouseholdRecord]:
    """Read household records from a UTF-8 CSV file with a header row.

    Parameters
    ----------
    path : path-like
    schema : {"wide", "long"}
        Wide files have one row per household with columns
        ``household_id,y1,d1,z1,y2,d2,z2``. Long files have one row per person
        with ``household_id,role,y,d,z``.
    role_map : mapping, optional
        Long format only: maps role labels to member 1 or 2, e.g.
        ``{"man": 1, "woman": 2}``. Defaults to ``{"1": 1, "2": 2}``.

    Raises
    ------
    ParseError
        Malformed header, non-binary values or incomplete households. Row
        numbers count the header as row 1.
    DuplicateHousehold
        A household id appears twice (wide) or a role repeats (long).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = tuple(h.strip() for h in (reader.fieldnames or ()))
        if schema == "wide":
            return _ingest_wide(reader, header)
        if schema == "long":
            return _ingest_long(reader, header, role_map)
    raise ValueError(f"unknown schema {schema!r}")


def _ingest_wide(reader, header):
    missing = [c for c in WIDE_HEADER if c not in header]
    if missing:
        raise ParseError(f"missing columns {missing}", 1)
    seen = set()
    out = []
    for i, row in enumerate(reader, start=2):
        row = {k.strip(): v for k, v in row.items() if k is not None}
        hid = (row.get("household_id") or "").strip()
        if not hid:
            raise ParseError("empty household_id", i)
        if hid in seen:
            raise DuplicateHousehold(f"household {hid!r} repeated", i)
        seen.add(hid)
        vals = [_binary(row.get(c), i, c) for c in COLUMNS]
        out.append(HouseholdRecord(hid, *vals))
    return out


def _ingest_long(reader, header, role_map):
    missing = [c for c in LONG_HEADER if c not in header]
    if missing:
        raise ParseError(f"missing columns {missing}", 1)
    role_map = {str(k): int(v) for k, v in (role_map or {"1": 1, "2": 2}).items()}
    people: dict[str, dict[int, tuple]] = {}
    first_row: dict[str, int] = {}
    for i, row in enumerate(reader, start=2):
        row = {k.strip(): v for k, v in row.items() if k is not None}
        hid = (row.get("household_id") or "").strip()
        if not hid:
            raise ParseError("empty household_id", i)
        role = (row.get("role") or "").strip()
        if role not in role_map:
            raise ParseError(f"unknown role {role!r}", i)
        member = role_map[role]
        vals = tuple(_binary(row.get(c), i, c) for c in ("y", "d", "z"))
        slot = people.setdefault(hid, {})
        first_row.setdefault(hid, i)
        if member in slot:
            raise DuplicateHousehold(f"household {hid!r} has two rows for member {member}", i)
        slot[member] = vals
    out = []
    for hid, slot in people.items():
        if set(slot) != {1, 2}:
            raise ParseError(f"household {hid!r} lacks a member", first_row[hid])
        out.append(HouseholdRecord(hid, *slot[1], *slot[2]))
    return out


def write_wide(records: Sequence[HouseholdRecord], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(WIDE_HEADER)
        for r in records:
            w.writerow((r.household_id,) + r.as_tuple())


def write_long(records: Sequence[HouseholdRecord], path, role_labels=("1", "2")) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(LONG_HEADER)
        for r in records:
            w.writerow((r.household_id, role_labels[0], r.y1, r.d1, r.z1))
            w.writerow((r.household_id, role_labels[1], r.y2, r.d2, r.z2))


def records_to_array(records) -> np.ndarray:
    """``(n, 6)`` int array with columns ``y1, d1, z1, y2, d2, z2``."""
    if isinstance(records, np.ndarray):
        arr = np.asarray(records, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 6:
            raise ValueError("record array must have shape (n, 6)")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("record array must be binary")
        return arr
    return np.array([r.as_tuple() for r in records], dtype=np.int64).reshape(-1, 6)


def cell_index(arr: np.ndarray) -> np.ndarray:
    y1, d1, z1, y2, d2, z2 = arr.T
    return 16 * (2 * z1 + z2) + 8 * y1 + 4 * y2 + 2 * d1 + d2


def empirical_cells(records: Iterable[HouseholdRecord] | np.ndarray) -> ObservedDistribution:
    """Conditional frequencies of ``(y, y', d, d')`` within each offer block.

    Counting is in integers, so each active block sums to one up to a single
    float division.

    Raises
    ------
    AllBlocksEmpty
        If there are no records.
    """
    arr = records_to_array(records if isinstance(records, np.ndarray) else list(records))
    if arr.shape[0] == 0:
        raise AllBlocksEmpty("no household records")
    counts = np.bincount(cell_index(arr), minlength=64).astype(np.int64)
    n_z = counts.reshape(4, 16).sum(axis=1)
    cells = np.zeros(64)
    for k in range(4):
        if n_z[k]:
            cells[16 * k: 16 * k + 16] = counts[16 * k: 16 * k + 16] / n_z[k]
    return ObservedDistribution(cells, n_z, counts)


def exact_cells(records) -> list[Fraction]:
    """Rational cell frequencies, for checking normalisation exactly."""
    obs = empirical_cells(records)
    out = []
    for k in range(4):
        for j in range(16):
            c = int(obs.counts[16 * k + j])
            out.append(Fraction(c, int(obs.n_z[k])) if obs.n_z[k] else Fraction(0))
    return out


def array_to_records(arr: np.ndarray, prefix: str = "h") -> list[HouseholdRecord]:
    width = len(str(max(1, arr.shape[0] - 1)))
    return [HouseholdRecord(f"{prefix}{i:0{width}d}", *map(int, row)) for i, row in enumerate(arr)]
