"""Streaming, model-independent access to a file-backed relational source.

A source dataset is a directory holding ``schema.sql`` plus one
``<table>.csv`` per table (UTF-8, header row naming the columns in table
order, empty field = NULL; fields must not contain line breaks). Cursors
expose pivot-model features — attributes, keys, references, aggregates —
and resolve them against concrete tables and foreign keys through the
trace recorded by the forward transformation, so callers never mention
tables or joins.

Iteration idiom::

    cursor = read_entity_all(session, entity)
    while cursor.has_data():
        ... cursor_value(cursor, attr) ...
        cursor_advance(cursor)

Full-table cursors stream straight off the file. Related lookups go through
lazily built per-table hash indexes that map join-key values to row byte
offsets, so only one parent record and one child batch are materialized at
a time; the session counts live records (``peak_live_records``) to make
that property testable.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Callable, Iterable

from unimig.errors import SourceError
from unimig.relational.model import FKey, RelationalSchema, Table
from unimig.trace import (
    AGGREGATE_CHILD,
    REF_FORWARD,
    REF_REVERSE,
    REL_TYPE_SIDE,
    TraceStore,
    id_segments,
)
from unimig.transforms.typemap import rel_to_us_type
from unimig.uschema.model import Aggregate, Attribute, Key, Reference, SchemaType

_TRUE = {"true", "t", "1", "yes"}
_FALSE = {"false", "f", "0", "no"}


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise SourceError(f"cannot read boolean value {text!r}")


def _converter(kind: str) -> Callable[[str], object]:
    if kind == "Integer":
        return int
    if kind in ("Double", "Decimal"):
        return float
    if kind == "Boolean":
        return _bool
    return str  # String, Date


class _TableFile:
    """One CSV file: schema-aware parsing, row counting, offset and hash
    indexes built on demand."""

    def __init__(self, session: "SourceSession", table: Table, path: Path):
        self.session = session
        self.table = table
        self.path = path
        self.columns = [c.name for c in table.columns]
        self.converters = [_converter(rel_to_us_type(c.datatype).kind)
                           for c in table.columns]
        self.row_count = self._validate_and_count()
        self._offsets: list[int] | None = None
        self._indexes: dict[tuple[str, ...], dict[tuple, list[int]]] = {}

    def _validate_and_count(self) -> int:
        with open(self.path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise SourceError(f"{self.path.name}: missing header row") from None
            if header != self.columns:
                raise SourceError(
                    f"{self.path.name}: header {header} does not match columns "
                    f"{self.columns} of table {self.table.name!r}")
            return sum(1 for _ in reader)

    def parse(self, row: list[str], where: str) -> dict[str, object]:
        if len(row) != len(self.columns):
            raise SourceError(
                f"{self.path.name} ({where}): expected {len(self.columns)} "
                f"fields, found {len(row)}")
        record: dict[str, object] = {}
        for name, convert, cell in zip(self.columns, self.converters, row):
            record[name] = None if cell == "" else convert(cell)
        self.session._record_born()
        return record

    def stream(self) -> Iterable[dict[str, object]]:
        with open(self.path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            next(reader)
            for i, row in enumerate(reader):
                yield self.parse(row, f"row {i + 1}")

    def offsets(self) -> list[int]:
        if self._offsets is None:
            out: list[int] = []
            with open(self.path, "rb") as handle:
                pos = len(handle.readline())
                for line in handle:
                    out.append(pos)
                    pos += len(line)
            self._offsets = out
        return self._offsets

    def index_on(self, columns: tuple[str, ...]) -> dict[tuple, list[int]]:
        """Hash index: typed values of ``columns`` -> row numbers."""
        if columns not in self._indexes:
            positions = [self.columns.index(c) for c in columns]
            converts = [self.converters[p] for p in positions]
            index: dict[tuple, list[int]] = {}
            with open(self.path, newline="", encoding="utf-8") as handle:
                reader = csv.reader(handle)
                next(reader)
                for i, row in enumerate(reader):
                    key = tuple(
                        None if row[p] == "" else convert(row[p])
                        for p, convert in zip(positions, converts))
                    index.setdefault(key, []).append(i)
            self._indexes[columns] = index
        return self._indexes[columns]

    def fetch(self, row_numbers: list[int]) -> list[dict[str, object]]:
        offsets = self.offsets()
        records = []
        with open(self.path, "rb") as handle:
            for n in row_numbers:
                handle.seek(offsets[n])
                line = handle.readline().decode("utf-8")
                row = next(csv.reader(io.StringIO(line)))
                records.append(self.parse(row, f"row {n + 1}"))
        return records


class SourceSession:
    """Open dataset directory; resolves pivot features to tables through the
    forward trace."""

    def __init__(self, root: Path, schema: RelationalSchema, t1: TraceStore):
        self.root = Path(root)
        self.schema = schema
        self.t1 = t1
        self.open = True
        self.live_records = 0
        self.peak_live_records = 0
        self.records_read = 0
        self._files: dict[str, _TableFile] = {}
        self._type_to_table: dict[str, str] = {}
        self._table_to_type: dict[str, str] = {}
        self._attr_to_column: dict[tuple[str, str], tuple[str, str]] = {}
        self._key_to_rkey: dict[tuple[str, str], tuple[str, str]] = {}
        self._feature_links: dict[tuple[str, str], tuple[str, str | None, str]] = {}
        self._scan_trace()

    # -- bookkeeping ---------------------------------------------------------

    def _record_born(self) -> None:
        self.live_records += 1
        self.records_read += 1
        if self.live_records > self.peak_live_records:
            self.peak_live_records = self.live_records

    def _records_released(self, n: int) -> None:
        self.live_records = max(0, self.live_records - n)

    def _check_open(self) -> None:
        if not self.open:
            raise SourceError("source session is closed")

    # -- trace resolution ------------------------------------------------------

    def _scan_trace(self) -> None:
        for link in self.t1.links:
            src = id_segments(link.sources[0])
            tgt = id_segments(link.targets[0])
            if link.rule == "R2":
                self._type_to_table[tgt[0]] = src[0]
                self._table_to_type[src[0]] = tgt[0]
            elif link.rule == "R3":
                self._attr_to_column[(tgt[0], tgt[1])] = (src[0], src[1])
            elif link.rule == "R4":
                self._key_to_rkey[(tgt[0], tgt[1])] = (src[0], src[1])
            elif link.rule in ("R5", "R6") and link.role in (
                    AGGREGATE_CHILD, REL_TYPE_SIDE):
                table, fk = id_segments(link.sources[0])[0], None
                if len(link.sources) > 1:
                    fk = id_segments(link.sources[1])[1]
                self._feature_links[(tgt[0], tgt[1])] = (table, fk, link.role)
            elif link.rule in ("R7.1", "R7.2") and link.role in (
                    REF_FORWARD, REF_REVERSE):
                table, fk = src[0], src[1]
                self._feature_links[(tgt[0], tgt[1])] = (table, fk, link.role)

    def table_for(self, type_name: str) -> Table:
        table_name = self._type_to_table.get(type_name)
        if table_name is None:
            raise SourceError(f"no table traces to schema type {type_name!r}")
        return self.schema.table(table_name)

    def side_columns(self, owner_type: str, ref_name: str) -> list[str]:
        """Columns of the foreign key behind one side of a relationship type,
        i.e. where an associative row stores that side's identifier."""
        hit = self._feature_links.get((owner_type, ref_name))
        if hit is None or hit[2] != REL_TYPE_SIDE:
            raise SourceError(
                f"{owner_type}.{ref_name} is not a relationship side")
        table_name, fk_name, _ = hit
        table = self.schema.table(table_name)
        for fk in table.fkeys:
            if fk.constraint_name == fk_name:
                return list(fk.columns)
        raise SourceError(f"table {table_name!r} has no foreign key {fk_name!r}")

    def file_for(self, table_name: str) -> _TableFile:
        return self._files[table_name]

    def close(self) -> None:
        self.open = False
        self.live_records = 0


def open_source(root: Path | str, schema: RelationalSchema,
                t1: TraceStore) -> SourceSession:
    """Validate the dataset directory against ``schema`` and open a session."""
    root = Path(root)
    ddl_path = root / "schema.sql"
    if not ddl_path.exists():
        raise SourceError(f"missing {ddl_path}")
    from unimig.relational.ddl import parse_ddl

    on_disk = parse_ddl(ddl_path.read_text(encoding="utf-8"), name=schema.name)
    disk_shape = {t.name: [c.name for c in t.columns] for t in on_disk.tables}
    want_shape = {t.name: [c.name for c in t.columns] for t in schema.tables}
    if disk_shape != want_shape:
        raise SourceError(
            f"{ddl_path} disagrees with the expected schema "
            f"(tables {sorted(disk_shape)} vs {sorted(want_shape)})")

    session = SourceSession(root, schema, t1)
    for table in schema.tables:
        path = root / f"{table.name}.csv"
        if not path.exists():
            session.close()
            raise SourceError(f"missing data file for table {table.name!r}: {path}")
        session._files[table.name] = _TableFile(session, table, path)
    return session


class SourceCursor:
    """Streaming view over the instances of one schema type.

    ``preloaded`` is the number of already-parsed records handed in by a
    related lookup (current one included); streaming cursors parse on
    demand instead. Either way the session's live-record count drops as the
    cursor moves past records or closes.
    """

    def __init__(self, session: SourceSession, type_name: str, table: Table,
                 records: Iterable[dict[str, object]],
                 preloaded: int | None = None):
        self.session = session
        self.type_name = type_name
        self.table = table
        self.position = -1
        self._iter = iter(records)
        self._current: dict[str, object] | None = None
        self._preloaded = preloaded
        self.advance()

    # -- iteration -------------------------------------------------------------

    def has_data(self) -> bool:
        return self._current is not None

    def advance(self) -> bool:
        self.session._check_open()
        if self._current is not None:
            self.session._records_released(1)
            if self._preloaded is not None:
                self._preloaded -= 1
        try:
            self._current = next(self._iter)
            self.position += 1
        except StopIteration:
            self._current = None
        return self._current is not None

    def close(self) -> None:
        if self._preloaded is not None:
            self.session._records_released(self._preloaded)
            self._preloaded = 0
        elif self._current is not None:
            self.session._records_released(1)
        self._current = None
        self._iter = iter(())

    def record(self) -> dict[str, object]:
        if self._current is None:
            raise SourceError(f"cursor over {self.type_name!r} is exhausted")
        return self._current

    def raw_value(self, column: str) -> object:
        record = self.record()
        if column not in record:
            raise SourceError(
                f"table {self.table.name!r} has no column {column!r}")
        return record[column]

    # -- feature access ----------------------------------------------------------

    def value(self, feature: Attribute | Key) -> object:
        if isinstance(feature, Attribute):
            return self.attr_value(feature.name)
        if isinstance(feature, Key):
            return self.key_value(feature.name)
        raise SourceError(f"cursor values exist for attributes and keys, "
                          f"not {type(feature).__name__}")

    def attr_value(self, name: str) -> object:
        self.session._check_open()
        record = self.record()
        hit = self.session._attr_to_column.get((self.type_name, name))
        if hit is None or hit[0] != self.table.name:
            raise SourceError(
                f"attribute {name!r} does not belong to {self.type_name!r} "
                "(or is reference-owned)")
        return record[hit[1]]

    def key_value(self, name: str) -> object:
        self.session._check_open()
        record = self.record()
        hit = self.session._key_to_rkey.get((self.type_name, name))
        if hit is None or hit[0] != self.table.name:
            raise SourceError(
                f"key {name!r} does not belong to {self.type_name!r}")
        rkey = self.table.key(hit[1])
        values = tuple(record[c] for c in rkey.columns)
        return values[0] if len(values) == 1 else values

    def id_values(self) -> tuple:
        """Primary key values of the current record, in key column order."""
        record = self.record()
        pk = self.table.primary_key()
        if pk is None:
            raise SourceError(f"table {self.table.name!r} has no primary key")
        return tuple(record[c] for c in pk.columns)

    def related(self, feature: Reference | Aggregate) -> "SourceCursor":
        return self.related_by_name(feature.name)

    def related_by_name(self, feature_name: str) -> "SourceCursor":
        self.session._check_open()
        record = self.record()
        hit = self.session._feature_links.get((self.type_name, feature_name))
        if hit is None:
            raise SourceError(
                f"feature {self.type_name}.{feature_name} carries no data-access "
                "role in the trace")
        table_name, fk_name, role = hit
        if role == AGGREGATE_CHILD:
            return self._aggregate_children(table_name, fk_name, record)
        if role == REF_FORWARD:
            return self._forward(table_name, fk_name, record)
        if role == REF_REVERSE:
            return self._reverse(table_name, fk_name, record)
        if role == REL_TYPE_SIDE:
            return self._relationship_side(feature_name, table_name, fk_name, record)
        raise SourceError(f"unsupported trace role {role!r}")

    # -- the four related shapes -------------------------------------------------

    def _fk(self, table: Table, fk_name: str | None) -> FKey:
        for fk in table.fkeys:
            if fk.constraint_name == fk_name:
                return fk
        raise SourceError(f"table {table.name!r} has no foreign key {fk_name!r}")

    def _batch(self, type_name: str, table: Table, file: _TableFile,
               rows: list[int], order_columns: list[str]) -> "SourceCursor":
        records = file.fetch(rows)
        if order_columns:
            records.sort(key=lambda r: tuple(r[c] for c in order_columns))
        return SourceCursor(self.session, type_name, table, records,
                            preloaded=len(records))

    def _type_of(self, table_name: str) -> str:
        return self.session._table_to_type.get(table_name, table_name)

    def _aggregate_children(self, table_name: str, fk_name: str | None,
                            record: dict[str, object]) -> "SourceCursor":
        child_table = self.session.schema.table(table_name)
        child_file = self.session.file_for(table_name)
        fk = self._fk(child_table, fk_name)
        probe = tuple(record[c] for c in fk.ref_columns)
        rows = child_file.index_on(tuple(fk.columns)).get(probe, [])
        pk = child_table.primary_key()
        remainder = [c for c in (pk.columns if pk else []) if c not in fk.columns]
        return self._batch(self._type_of(table_name), child_table, child_file,
                           rows, remainder)

    def _forward(self, table_name: str, fk_name: str | None,
                 record: dict[str, object]) -> "SourceCursor":
        owner_table = self.session.schema.table(table_name)
        fk = self._fk(owner_table, fk_name)
        target_table = self.session.schema.table(fk.ref_table)
        target_file = self.session.file_for(fk.ref_table)
        probe = tuple(record[c] for c in fk.columns)
        if any(v is None for v in probe):
            rows: list[int] = []
        else:
            rows = target_file.index_on(tuple(fk.ref_columns)).get(probe, [])
        return self._batch(self._type_of(fk.ref_table), target_table,
                           target_file, rows, [])

    def _reverse(self, table_name: str, fk_name: str | None,
                 record: dict[str, object]) -> "SourceCursor":
        owner_table = self.session.schema.table(table_name)
        owner_file = self.session.file_for(table_name)
        fk = self._fk(owner_table, fk_name)
        probe = tuple(record[c] for c in fk.ref_columns)
        rows = owner_file.index_on(tuple(fk.columns)).get(probe, [])
        pk = owner_table.primary_key()
        return self._batch(self._type_of(table_name), owner_table, owner_file,
                           rows, list(pk.columns) if pk else [])

    def _relationship_side(self, feature_name: str, table_name: str,
                           fk_name: str | None,
                           record: dict[str, object]) -> "SourceCursor":
        assoc_table = self.session.schema.table(table_name)
        assoc_file = self.session.file_for(table_name)
        from unimig.relational.model import fk_in_pk

        identifying = [fk for fk in assoc_table.fkeys if fk_in_pk(assoc_table, fk)]
        others = [fk for fk in identifying if fk.constraint_name != fk_name]
        if len(others) == 1:
            filter_fk = others[0]
        else:
            mine = [fk for fk in others if fk.ref_table == self.table.name]
            if len(mine) != 1:
                raise SourceError(
                    f"cannot pick the filtering side of {table_name!r} for "
                    f"{self.type_name}.{feature_name}")
            filter_fk = mine[0]
        probe = tuple(record[c] for c in filter_fk.ref_columns)
        rows = assoc_file.index_on(tuple(filter_fk.columns)).get(probe, [])
        pk = assoc_table.primary_key()
        remainder = [c for c in (pk.columns if pk else [])
                     if c not in filter_fk.columns]
        return self._batch(self._type_of(table_name), assoc_table, assoc_file,
                           rows, remainder)


def read_entity_all(session: SourceSession, schema_type: SchemaType | str) -> SourceCursor:
    """Cursor over every stored instance of an entity or relationship type,
    in file order."""
    session._check_open()
    name = schema_type if isinstance(schema_type, str) else schema_type.name
    table = session.table_for(name)
    return SourceCursor(session, name, table, session.file_for(table.name).stream())


def cursor_value(cursor: SourceCursor, feature: Attribute | Key) -> object:
    return cursor.value(feature)


def cursor_related(cursor: SourceCursor, feature: Reference | Aggregate) -> SourceCursor:
    return cursor.related(feature)


def cursor_advance(cursor: SourceCursor) -> bool:
    return cursor.advance()


def close(target: SourceSession | SourceCursor) -> None:
    """Idempotent close for sessions and cursors."""
    target.close()
