"""SQL DDL subset: CREATE TABLE statements into relational models and back.

Supported per statement: column definitions with ``NOT NULL``, ``DEFAULT
<expr>`` (kept as opaque text) and inline ``PRIMARY KEY``; table-level
``PRIMARY KEY (...)``, ``UNIQUE (...)`` and ``FOREIGN KEY (...) REFERENCES
t (...)`` with optional ``ON DELETE`` / ``ON UPDATE`` actions, each
optionally prefixed by ``CONSTRAINT <name>``. ``--`` starts a comment,
statements end with ``;``. Keywords are case-insensitive and identifiers are
stored lowercase. Unnamed constraints get synthesized names
(``<table>_pk``, ``<table>_fk<i>``, ``<table>_uk<i>``) so that they can be
addressed stably from trace links.

A leading ``-- schema: <name>`` comment names the schema; ``print_ddl``
always emits one, which makes parse/print a exact round trip.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from unimig.errors import ModelError, TextParseError
from unimig.relational.model import (
    Column,
    FKey,
    ReferentialAction,
    RelationalSchema,
    RKey,
    SqlType,
    Table,
)

_TYPE_ALIASES = {"INTEGER": "INT", "BOOL": "BOOLEAN"}
_SCHEMA_COMMENT = re.compile(r"^\s*--\s*schema:\s*([A-Za-z_][A-Za-z0-9_]*)\s*$")


@dataclass
class _Tok:
    kind: str  # word | int | string | symbol | eof
    text: str
    line: int
    column: int

    def is_word(self, *words: str) -> bool:
        return self.kind == "word" and self.text.upper() in words


def _tokenize(text: str) -> list[_Tok]:
    tokens: list[_Tok] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start = col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Tok("word", text[i:j], line, start))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            tokens.append(_Tok("int", text[i:j], line, start))
            col += j - i
            i = j
            continue
        if ch == "'":
            j = i + 1
            while j < n:
                if text[j] == "'" and not text.startswith("''", j):
                    break
                j += 2 if text.startswith("''", j) else 1
            if j >= n:
                raise TextParseError("unterminated string literal", line, start)
            tokens.append(_Tok("string", text[i:j + 1], line, start))
            col += j + 1 - i
            i = j + 1
            continue
        if ch in "(),;":
            tokens.append(_Tok("symbol", ch, line, start))
            i += 1
            col += 1
            continue
        raise TextParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Tok("eof", "", line, col))
    return tokens


class _Cursor:
    def __init__(self, tokens: list[_Tok]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> _Tok:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> _Tok:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str) -> TextParseError:
        tok = self.peek()
        return TextParseError(message, tok.line, tok.column)

    def expect_symbol(self, sym: str) -> None:
        tok = self.peek()
        if tok.kind != "symbol" or tok.text != sym:
            raise self.fail(f"expected {sym!r}, found {tok.text or 'end of input'!r}")
        self.next()

    def expect_word(self, *words: str) -> str:
        tok = self.peek()
        if not tok.is_word(*words):
            raise self.fail(f"expected {'/'.join(words)}, found {tok.text or 'end of input'!r}")
        return self.next().text.upper()

    def expect_ident(self, what: str = "identifier") -> str:
        tok = self.peek()
        if tok.kind != "word":
            raise self.fail(f"expected {what}, found {tok.text or 'end of input'!r}")
        return self.next().text.lower()

    def take_symbol(self, sym: str) -> bool:
        tok = self.peek()
        if tok.kind == "symbol" and tok.text == sym:
            self.next()
            return True
        return False

    def take_word(self, *words: str) -> bool:
        if self.peek().is_word(*words):
            self.next()
            return True
        return False


def parse_ddl(text: str, name: str = "schema") -> RelationalSchema:
    """Parse DDL text into a resolved, validated relational schema."""
    for raw_line in text.splitlines():
        m = _SCHEMA_COMMENT.match(raw_line)
        if m:
            name = m.group(1).lower()
            break

    cur = _Cursor(_tokenize(text))
    schema = RelationalSchema(name.lower())
    pending_fks: list[tuple[Table, FKey, _Tok, bool]] = []
    while cur.peek().kind != "eof":
        token_at_start = cur.peek()
        cur.expect_word("CREATE")
        cur.expect_word("TABLE")
        table_name = cur.expect_ident("table name")
        if schema.has_table(table_name):
            raise TextParseError(f"duplicate table {table_name!r}",
                                 token_at_start.line, token_at_start.column)
        table = Table(table_name)
        cur.expect_symbol("(")
        while True:
            _parse_table_item(cur, table, pending_fks)
            if cur.take_symbol(","):
                continue
            break
        cur.expect_symbol(")")
        cur.expect_symbol(";")
        schema.tables.append(table)

    _resolve_fkeys(schema, pending_fks)
    _check(schema, cur)
    return schema


def _parse_table_item(cur: _Cursor, table: Table,
                      pending: list[tuple[Table, FKey, _Tok, bool]]) -> None:
    tok = cur.peek()
    constraint_name: str | None = None
    if tok.is_word("CONSTRAINT"):
        cur.next()
        constraint_name = cur.expect_ident("constraint name")
        tok = cur.peek()

    if tok.is_word("PRIMARY"):
        cur.next()
        cur.expect_word("KEY")
        columns = _parse_column_list(cur)
        _add_pk(cur, table, constraint_name, columns)
        return
    if tok.is_word("UNIQUE"):
        cur.next()
        columns = _parse_column_list(cur)
        nth = sum(1 for k in table.keys if not k.is_pk) + 1
        table.keys.append(RKey(constraint_name or f"{table.name}_uk{nth}",
                               is_pk=False, columns=columns))
        return
    if tok.is_word("FOREIGN"):
        at = cur.peek()
        cur.next()
        cur.expect_word("KEY")
        columns = _parse_column_list(cur)
        cur.expect_word("REFERENCES")
        ref_table = cur.expect_ident("table name")
        explicit = cur.peek().text == "("
        ref_columns = _parse_column_list(cur) if explicit else list(columns)
        on_delete, on_update = _parse_actions(cur)
        nth = len(table.fkeys) + 1
        fk = FKey(constraint_name or f"{table.name}_fk{nth}", columns,
                  ref_table, ref_columns,
                  on_delete=on_delete, on_update=on_update)
        pending.append((table, fk, at, explicit))
        table.fkeys.append(fk)
        return
    if constraint_name is not None:
        raise cur.fail("CONSTRAINT must introduce PRIMARY KEY, UNIQUE or FOREIGN KEY")

    _parse_column_def(cur, table)


def _parse_column_def(cur: _Cursor, table: Table) -> None:
    col_name = cur.expect_ident("column name")
    if table.has_column(col_name):
        raise cur.fail(f"duplicate column {col_name!r} in table {table.name!r}")
    datatype = _parse_type(cur)
    column = Column(col_name, datatype)
    while True:
        tok = cur.peek()
        if tok.is_word("NOT"):
            cur.next()
            cur.expect_word("NULL")
            column.nullable = False
        elif tok.is_word("DEFAULT"):
            cur.next()
            column.default = _parse_default(cur)
        elif tok.is_word("PRIMARY"):
            cur.next()
            cur.expect_word("KEY")
            column.nullable = False
            _add_pk(cur, table, None, [col_name])
        else:
            break
    table.columns.append(column)


def _parse_type(cur: _Cursor) -> SqlType:
    tok = cur.peek()
    word = cur.expect_ident("type name").upper()
    word = _TYPE_ALIASES.get(word, word)
    if word == "DOUBLE":
        cur.take_word("PRECISION")
    if word in ("CHAR", "VARCHAR"):
        cur.expect_symbol("(")
        length = _expect_number(cur)
        cur.expect_symbol(")")
        return SqlType(word, length=length)
    if word in ("DECIMAL", "NUMERIC"):
        precision, scale = None, 0
        if cur.take_symbol("("):
            precision = _expect_number(cur)
            if cur.take_symbol(","):
                scale = _expect_number(cur)
            cur.expect_symbol(")")
        else:
            precision = 38
        return SqlType(word, precision=precision, scale=scale)
    try:
        return SqlType(word)
    except ModelError as exc:
        raise TextParseError(str(exc), tok.line, tok.column) from exc


def _expect_number(cur: _Cursor) -> int:
    tok = cur.peek()
    if tok.kind != "int":
        raise cur.fail(f"expected number, found {tok.text!r}")
    cur.next()
    return int(float(tok.text))


def _parse_default(cur: _Cursor) -> str:
    # Opaque: grab tokens until the column definition continues or ends.
    parts: list[str] = []
    depth = 0
    while True:
        tok = cur.peek()
        if tok.kind == "eof":
            raise cur.fail("unterminated DEFAULT expression")
        if tok.kind == "symbol" and tok.text in (",", ")") and depth == 0:
            break
        if tok.is_word("NOT", "PRIMARY", "CONSTRAINT", "UNIQUE") and depth == 0:
            break
        if tok.kind == "symbol" and tok.text == "(":
            depth += 1
        elif tok.kind == "symbol" and tok.text == ")":
            depth -= 1
        parts.append(cur.next().text)
    if not parts:
        raise cur.fail("DEFAULT requires an expression")
    return " ".join(parts)


def _parse_column_list(cur: _Cursor) -> list[str]:
    cur.expect_symbol("(")
    cols = [cur.expect_ident("column name")]
    while cur.take_symbol(","):
        cols.append(cur.expect_ident("column name"))
    cur.expect_symbol(")")
    return cols


_ACTIONS = {
    ("CASCADE",): ReferentialAction.CASCADE,
    ("SET", "NULL"): ReferentialAction.SET_NULL,
    ("SET", "DEFAULT"): ReferentialAction.SET_DEFAULT,
    ("NO", "ACTION"): ReferentialAction.NO_ACTION,
    ("RESTRICT",): ReferentialAction.RESTRICT,
}


def _parse_actions(cur: _Cursor) -> tuple[ReferentialAction, ReferentialAction]:
    on_delete = on_update = ReferentialAction.NO_ACTION
    while cur.peek().is_word("ON"):
        cur.next()
        event = cur.expect_word("DELETE", "UPDATE")
        action = _parse_one_action(cur)
        if event == "DELETE":
            on_delete = action
        else:
            on_update = action
    return on_delete, on_update


def _parse_one_action(cur: _Cursor) -> ReferentialAction:
    first = cur.expect_word("CASCADE", "SET", "NO", "RESTRICT")
    if first in ("CASCADE", "RESTRICT"):
        return _ACTIONS[(first,)]
    second = cur.expect_word("NULL", "DEFAULT", "ACTION")
    return _ACTIONS[(first, second)]


def _add_pk(cur: _Cursor, table: Table, constraint_name: str | None,
            columns: list[str]) -> None:
    if table.primary_key() is not None:
        raise cur.fail(f"table {table.name!r} already has a primary key")
    table.keys.insert(0, RKey(constraint_name or f"{table.name}_pk",
                              is_pk=True, columns=columns))


def _resolve_fkeys(schema: RelationalSchema,
                   pending: list[tuple[Table, FKey, _Tok, bool]]) -> None:
    for table, fk, at, explicit in pending:
        if not schema.has_table(fk.ref_table):
            raise TextParseError(
                f"foreign key {fk.constraint_name!r} references unknown table "
                f"{fk.ref_table!r}", at.line, at.column)
        target = schema.table(fk.ref_table)
        if not explicit:
            pk = target.primary_key()
            if pk is None:
                raise TextParseError(
                    f"foreign key {fk.constraint_name!r} references {fk.ref_table!r} "
                    "which has no primary key", at.line, at.column)
            fk.ref_columns = list(pk.columns)
        else:
            match = next((k for k in target.keys if k.columns == fk.ref_columns), None)
            if match is None:
                raise TextParseError(
                    f"foreign key {fk.constraint_name!r} references no key of "
                    f"{fk.ref_table!r} over columns {fk.ref_columns}", at.line, at.column)
        if len(fk.columns) != len(fk.ref_columns):
            raise TextParseError(
                f"foreign key {fk.constraint_name!r} maps {len(fk.columns)} column(s) "
                f"onto {len(fk.ref_columns)}", at.line, at.column)


def _check(schema: RelationalSchema, cur: _Cursor) -> None:
    from unimig.relational.model import validate_relational

    problems = validate_relational(schema)
    if problems:
        raise TextParseError("; ".join(problems))


def print_ddl(schema: RelationalSchema) -> str:
    """Deterministic DDL text for a schema; output re-parses to an equal model."""
    lines = [f"-- schema: {schema.name}"]
    for table in schema.tables:
        lines.append("")
        lines.append(f"CREATE TABLE {table.name} (")
        items: list[str] = []
        for col in table.columns:
            parts = [f"  {col.name} {col.datatype}"]
            if not col.nullable:
                parts.append("NOT NULL")
            if col.default is not None:
                parts.append(f"DEFAULT {col.default}")
            items.append(" ".join(parts))
        for key in table.keys:
            kind = "PRIMARY KEY" if key.is_pk else "UNIQUE"
            items.append(f"  CONSTRAINT {key.constraint_name} {kind} "
                         f"({', '.join(key.columns)})")
        for fk in table.fkeys:
            clause = (f"  CONSTRAINT {fk.constraint_name} FOREIGN KEY "
                      f"({', '.join(fk.columns)}) REFERENCES {fk.ref_table} "
                      f"({', '.join(fk.ref_columns)})")
            if fk.on_delete is not ReferentialAction.NO_ACTION:
                clause += f" ON DELETE {fk.on_delete.value.replace('_', ' ')}"
            if fk.on_update is not ReferentialAction.NO_ACTION:
                clause += f" ON UPDATE {fk.on_update.value.replace('_', ' ')}"
            items.append(clause)
        lines.append(",\n".join(items))
        lines.append(");")
    return "\n".join(lines) + "\n"
