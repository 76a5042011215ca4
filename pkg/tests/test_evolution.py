from __future__ import annotations

import copy

import pytest

from util import FIXTURES, us_universe

from unimig.errors import EvolutionError, TextParseError
from unimig.evolution import (
    CastAttr,
    DeleteFeature,
    MorphRef,
    RenameEntity,
    RenameFeature,
    apply_changes,
    parse_orion,
)
from unimig.trace import AGGREGATE_CHILD, TraceStore, attach
from unimig.uschema.athena import parse_athena
from unimig.uschema.model import Aggregate, USDataType

SCRIPT = (FIXTURES / "music_streaming" / "evolve.orion").read_text()
ATHENA = (FIXTURES / "music_streaming" / "model.athena").read_text()


@pytest.fixture()
def model():
    return parse_athena(ATHENA)


def identity_trace(model) -> TraceStore:
    """One synthetic link per element, as a stand-in for a forward trace."""
    store = TraceStore()
    for element_id in sorted(us_universe(model)):
        store.add("rel:legacy_source", element_id, "R0")
    return store


def test_parse_orion_script():
    ops = parse_orion(SCRIPT)
    assert ops == [
        RenameEntity("User", "AppUser"),
        RenameFeature("Song", "duration", "length"),
        CastAttr("Song", "length", USDataType("Integer")),
        MorphRef("Song", "styles", "styles"),
        DeleteFeature("Listening", "status"),
    ]


def test_parse_empty_script():
    assert parse_orion("") == []
    assert parse_orion("// only comments\n\n") == []


def test_parse_cast_decimal():
    ops = parse_orion("CAST ATTR Song::length TO Decimal(6,2)")
    assert ops == [CastAttr("Song", "length", USDataType("Decimal", 6, 2))]


def test_unknown_statement_rejected():
    with pytest.raises(TextParseError, match="unknown statement"):
        parse_orion("EXPLODE Song")


def test_apply_script_to_music_model(model):
    trace = identity_trace(model)
    evolved, rewritten = apply_changes(model, parse_orion(SCRIPT), trace)
    assert evolved.has_type("AppUser") and not evolved.has_type("User")
    song = evolved.entity("Song")
    assert song.feature("length").type == USDataType("Integer")
    styles = song.feature("styles")
    assert isinstance(styles, Aggregate)
    assert styles.specified_by == "MusicalStyle"
    assert evolved.entity("MusicalStyle").root is False
    listening = evolved.entity("Listening")
    with pytest.raises(Exception):
        listening.feature("status")


def test_trace_ids_reattach_after_evolution(model):
    trace = identity_trace(model)
    evolved, rewritten = apply_changes(model, parse_orion(SCRIPT), trace)
    attach(rewritten, us=evolved)  # raises if any id dangles


def test_rename_rewrites_prefixed_ids(model):
    trace = identity_trace(model)
    evolved, rewritten = apply_changes(
        model, [RenameEntity("User", "AppUser")], trace)
    targets = {t for l in rewritten.links for t in l.targets}
    assert "us:AppUser.playLists" in targets
    assert not any(t.startswith("us:User") for t in targets
                   if not t.startswith("us:AppUser"))
    audits = [l for l in rewritten.links if l.rule == "EVOLVE-RENAME"]
    assert audits and audits[-1].sources == ["us:User"]


def test_identity_rename_only_adds_audit_link(model):
    trace = identity_trace(model)
    evolved, rewritten = apply_changes(model, [RenameEntity("User", "User")], trace)
    assert evolved == model
    assert len(rewritten.links) == len(trace.links) + 1
    assert rewritten.links[-1].rule == "EVOLVE-RENAME"


def test_rename_is_invertible(model):
    trace = identity_trace(model)
    there, trace2 = apply_changes(model, [RenameEntity("User", "Usr")], trace)
    back, _ = apply_changes(there, [RenameEntity("Usr", "User")], trace2)
    assert back == model


def test_error_leaves_inputs_untouched(model):
    trace = identity_trace(model)
    before_model = copy.deepcopy(model)
    before_links = len(trace.links)
    ops = [RenameEntity("User", "AppUser"), DeleteFeature("Song", "nope")]
    with pytest.raises(EvolutionError, match="unknown feature"):
        apply_changes(model, ops, trace)
    assert model == before_model
    assert len(trace.links) == before_links


def test_morph_bound_preservation(model):
    # 1:N reference becomes a 0..N aggregate
    evolved, _ = apply_changes(model, [MorphRef("Song", "styles", "styleAgg")],
                               identity_trace(model))
    styles = evolved.entity("Song").feature("styleAgg")
    assert (styles.lower_bound, styles.upper_bound) == (0, -1)
    # 1:1 reference becomes a 0..1 aggregate; Song stays root because the
    # playlist reference still targets it
    evolved2, _ = apply_changes(model, [MorphRef("Listening", "song", "songAgg")],
                                identity_trace(model))
    agg = evolved2.entity("Listening").feature("songAgg")
    assert (agg.lower_bound, agg.upper_bound) == (0, 1)
    assert evolved2.entity("Song").root is True


def test_morph_retags_trace_roles(model):
    trace = identity_trace(model)
    from unimig.trace import REF_REVERSE

    trace.add("rel:legacy_ref", "us:Song.styles", "R7.2", REF_REVERSE)
    evolved, rewritten = apply_changes(
        model, [MorphRef("Song", "styles", "styles")], trace)
    retagged = [l for l in rewritten.links if "us:Song.styles" in l.targets
                and l.role is not None]
    assert retagged and all(l.role == AGGREGATE_CHILD for l in retagged)


def test_morph_relationship_side_rejected(music_step1):
    model = music_step1.target
    with pytest.raises(EvolutionError, match="relationship"):
        apply_changes(model, [MorphRef("song", "listening_user", "x")],
                      TraceStore())


def test_rename_collision_rejected(model):
    with pytest.raises(EvolutionError, match="already exists"):
        apply_changes(model, [RenameEntity("User", "Song")], identity_trace(model))
    with pytest.raises(EvolutionError, match="already exists"):
        apply_changes(model, [RenameFeature("User", "name", "id")],
                      identity_trace(model))


def test_delete_drops_only_fully_dead_links(model):
    trace = identity_trace(model)
    trace.add("rel:legacy_source",
              ["us:Listening.status", "us:Listening.playsCount"], "R3")
    evolved, rewritten = apply_changes(
        model, [DeleteFeature("Listening", "status")], trace)
    assert not any("us:Listening.status" in l.targets for l in rewritten.links)
    shared = [l for l in rewritten.links
              if "us:Listening.playsCount" in l.targets and l.rule == "R3"]
    assert shared  # the mixed link survives with the live target only


def test_later_ops_see_earlier_renames(model):
    ops = parse_orion("RENAME Song::duration TO length\n"
                      "CAST ATTR Song::length TO Integer\n")
    evolved, _ = apply_changes(model, ops, identity_trace(model))
    assert evolved.entity("Song").feature("length").type == USDataType("Integer")
