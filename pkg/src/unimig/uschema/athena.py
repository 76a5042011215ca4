"""Textual notation for pivot models.

Supported subset::

    schema  := "Schema" IDENT ":" INT entity*
    entity  := ("Root")? ("entity" | "Entity") IDENT "{" feature ("," feature)* "}"
    feature := ("+")? IDENT ":" ftype ("*")?
    ftype   := "String" | "Integer" | "Boolean" | "Double" | "Date"
             | "Decimal" "(" INT "," INT ")"
             | "Aggr" "<" IDENT ">" | "Ref" "<" IDENT ">"

``//`` starts a line comment. A ``+`` prefix declares the feature as the
identifier: the parser builds the attribute plus a Key over it named
``<attr>_key``. A ``*`` suffix makes the upper bound unbounded.

The notation cannot express relationship types, multi-attribute keys,
reference-carried attributes, optionality, or lower bounds other than the
defaults, so printing is total but lossy outside that subset: relationship
types are emitted as comment blocks and inexpressible key/attribute details
are dropped. ``parse_athena(print_athena(m)) == m`` holds for every model
the parser itself can produce.
"""

from __future__ import annotations

from dataclasses import dataclass

from unimig.errors import TextParseError
from unimig.uschema.model import (
    Aggregate,
    Attribute,
    EntityType,
    Key,
    Reference,
    UNBOUNDED,
    USDataType,
    USchemaModel,
)
from unimig.uschema.validate import assert_valid

_SYMBOLS = "{}:,+*<>()"


@dataclass
class _Token:
    kind: str  # ident | int | symbol | eof
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "/" and text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("ident", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(_Token("int", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch in _SYMBOLS:
            tokens.append(_Token("symbol", ch, line, start_col))
            i += 1
            col += 1
            continue
        raise TextParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str) -> TextParseError:
        tok = self.peek()
        return TextParseError(message, tok.line, tok.column)

    def expect_symbol(self, sym: str) -> _Token:
        tok = self.peek()
        if tok.kind != "symbol" or tok.text != sym:
            raise self.fail(f"expected {sym!r}, found {tok.text or 'end of input'!r}")
        return self.next()

    def expect_ident(self, what: str = "identifier") -> _Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.fail(f"expected {what}, found {tok.text or 'end of input'!r}")
        return self.next()

    def expect_int(self) -> int:
        tok = self.peek()
        if tok.kind != "int":
            raise self.fail(f"expected integer, found {tok.text or 'end of input'!r}")
        return int(self.next().text)

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.text.lower() in words


def parse_athena(text: str) -> USchemaModel:
    """Parse the textual notation into a validated pivot model."""
    p = _Parser(text)
    if not p.at_keyword("schema"):
        raise p.fail("expected 'Schema'")
    p.next()
    name = p.expect_ident("schema name").text
    p.expect_symbol(":")
    p.expect_int()  # declared version, not kept on the model

    model = USchemaModel(name)
    while p.peek().kind != "eof":
        model.entities.append(_parse_entity(p))

    declared = {e.name for e in model.entities}
    for e in model.entities:
        for f in e.features:
            if isinstance(f, Reference) and f.refs_to not in declared:
                raise TextParseError(
                    f"reference {e.name}.{f.name} names undeclared type {f.refs_to!r}")
            if isinstance(f, Aggregate) and f.specified_by not in declared:
                raise TextParseError(
                    f"aggregate {e.name}.{f.name} names undeclared type {f.specified_by!r}")
    assert_valid(model)
    return model


def _parse_entity(p: _Parser) -> EntityType:
    root = False
    if p.at_keyword("root"):
        p.next()
        root = True
    if not p.at_keyword("entity"):
        raise p.fail("expected 'entity'")
    p.next()
    name = p.expect_ident("entity name").text
    entity = EntityType(name, root=root)
    p.expect_symbol("{")
    while True:
        _parse_feature(p, entity)
        tok = p.peek()
        if tok.kind == "symbol" and tok.text == ",":
            p.next()
            continue
        break
    p.expect_symbol("}")
    return entity


def _parse_feature(p: _Parser, entity: EntityType) -> None:
    is_key = False
    tok = p.peek()
    if tok.kind == "symbol" and tok.text == "+":
        p.next()
        is_key = True
    name = p.expect_ident("feature name").text
    p.expect_symbol(":")
    feature = _parse_ftype(p, name)
    tok = p.peek()
    if tok.kind == "symbol" and tok.text == "*":
        p.next()
        if isinstance(feature, Attribute):
            raise p.fail("'*' is not applicable to scalar features")
        feature.upper_bound = UNBOUNDED
    entity.features.append(feature)
    if is_key:
        if not isinstance(feature, Attribute):
            raise p.fail("'+' is only applicable to scalar features")
        entity.features.append(Key(f"{name}_key", is_id=True, attributes=[name]))


def _parse_ftype(p: _Parser, feature_name: str):
    tok = p.expect_ident("type name")
    word = tok.text
    if word in ("String", "Integer", "Boolean", "Double", "Date"):
        return Attribute(feature_name, USDataType(word))
    if word == "Decimal":
        p.expect_symbol("(")
        precision = p.expect_int()
        p.expect_symbol(",")
        scale = p.expect_int()
        p.expect_symbol(")")
        return Attribute(feature_name, USDataType("Decimal", precision, scale))
    if word == "Aggr":
        p.expect_symbol("<")
        target = p.expect_ident("entity name").text
        p.expect_symbol(">")
        return Aggregate(feature_name, target, lower_bound=1, upper_bound=1)
    if word == "Ref":
        p.expect_symbol("<")
        target = p.expect_ident("entity name").text
        p.expect_symbol(">")
        return Reference(feature_name, target, lower_bound=1, upper_bound=1)
    raise TextParseError(f"unknown type name {word!r}", tok.line, tok.column)


def print_athena(model: USchemaModel) -> str:
    """Render a pivot model in the textual notation (see module docstring
    for what is expressible)."""
    lines = [f"Schema {model.name}:1", ""]
    for entity in model.entities:
        head = "Root entity" if entity.root else "Entity"
        lines.append(f"{head} {entity.name} {{")
        body: list[str] = []
        id_attrs = _single_id_attrs(entity)
        for f in entity.features:
            if isinstance(f, Attribute):
                prefix = "+" if f.name in id_attrs else ""
                body.append(f"  {prefix}{f.name}: {f.type}")
            elif isinstance(f, Reference):
                star = "*" if f.upper_bound == UNBOUNDED else ""
                body.append(f"  {f.name}: Ref<{f.refs_to}>{star}")
            elif isinstance(f, Aggregate):
                star = "*" if f.upper_bound == UNBOUNDED else ""
                body.append(f"  {f.name}: Aggr<{f.specified_by}>{star}")
            # Keys are rendered through the '+' prefix of their attribute.
        lines.extend(line + "," for line in body[:-1])
        if body:
            lines.append(body[-1])
        lines.append("}")
    for rel in model.relationships:
        lines.append(f"// relationship {rel.name}: "
                     + ", ".join(f.name for f in rel.features)
                     + (" | sides: " + ", ".join(rel.references)))
    return "\n".join(lines) + "\n"


def _single_id_attrs(entity: EntityType) -> set[str]:
    key = entity.id_key()
    if key is not None and len(key.attributes) == 1:
        return {key.attributes[0]}
    return set()
