from __future__ import annotations

import pytest

from util import FIXTURES

from unimig.document.model import (
    DocReference,
    DocType,
    DocumentSchema,
    DocumentType,
    Embedded,
    Field,
    validate_docschema,
)
from unimig.document.schema_json import parse_docschema, print_docschema
from unimig.errors import TextParseError

EXPECTED = (FIXTURES / "music_streaming" / "expected.docschema.json").read_text()


def test_parse_music_document_schema():
    schema = parse_docschema(EXPECTED)
    assert schema.name == "music_streaming"
    assert [d.name for d in schema.documents] == [
        "app_user", "song", "album", "musical_style", "listening", "song_style"]


def test_nested_embedded_preserved():
    schema = parse_docschema(EXPECTED)
    playlists = schema.document("app_user").property("playlists")
    assert isinstance(playlists, Embedded) and playlists.is_many
    inner = next(p for p in playlists.aggregates if p.name == "playlist_songs")
    assert isinstance(inner, Embedded)
    assert {p.name for p in inner.aggregates} == {"position_idx", "song_id"}


def test_empty_schema():
    schema = parse_docschema('{"name":"X","documents":[]}')
    assert schema.name == "X" and schema.documents == []


def test_parse_print_identity():
    schema = parse_docschema(EXPECTED)
    assert parse_docschema(print_docschema(schema)) == schema


def test_array_reference_cardinality_emitted():
    schema = DocumentSchema("s", documents=[
        DocumentType("a", properties=[
            Field("a_id", DocType("STRING"), is_key=True),
            DocReference("bs", "b", DocType("STRING", array=True))]),
        DocumentType("b", properties=[Field("b_id", DocType("STRING"),
                                            is_key=True)]),
    ])
    assert '"cardinality": "many"' in print_docschema(schema)


def test_malformed_json_rejected():
    with pytest.raises(TextParseError, match="malformed"):
        parse_docschema("{not json")


def test_dangling_reference_rejected():
    text = ('{"name":"s","documents":[{"name":"a","properties":'
            '[{"kind":"reference","name":"r","target":"ghost","type":"STRING",'
            '"cardinality":"one"}]}]}')
    with pytest.raises(Exception, match="unknown document type"):
        parse_docschema(text)


def test_duplicate_names_rejected():
    text = ('{"name":"s","documents":[{"name":"a","properties":[]},'
            '{"name":"a","properties":[]}]}')
    with pytest.raises(Exception, match="duplicate"):
        parse_docschema(text)


def test_key_type_mismatch_is_warning_only():
    schema = DocumentSchema("s", documents=[
        DocumentType("a", properties=[
            Field("a_id", DocType("INTEGER"), is_key=True)]),
        DocumentType("b", properties=[
            Field("b_id", DocType("STRING"), is_key=True),
            DocReference("a_ref", "a", DocType("STRING"))]),
    ])
    problems = validate_docschema(schema)
    assert problems and all(p.startswith("warning:") for p in problems)
    # round-trips regardless
    assert parse_docschema(print_docschema(schema)) == schema


def test_aliased_embedding_cycle_detected():
    loop = Embedded("x", is_many=True)
    loop.aggregates.append(loop)
    schema = DocumentSchema("s", documents=[DocumentType("a", properties=[loop])])
    assert any("cyclic" in p for p in validate_docschema(schema))
