"""Pivot model to relational schema.

Root entity types become tables. A non-root entity type reached through an
aggregate becomes a weak table: its primary key prepends the owner's primary
key columns, wired back through an in-key foreign key. Attributes become
columns (reference-owned ones are skipped; the reference itself materializes
the foreign key). Single-valued references put foreign key columns in the
owner's table; multi-valued references put them in the referenced table,
pointing back. Relationship types become associative tables whose primary
key is the union of their side columns. An entity type without an
identifier key gets a synthesized ``<name>_id VARCHAR(255)`` surrogate
primary key (tagged ``SYNTH-SURROGATE`` in the trace).
"""

from __future__ import annotations

import logging

from unimig.errors import TransformError
from unimig.relational.model import (
    Column,
    FKey,
    RelationalSchema,
    RKey,
    SqlType,
    Table,
)
from unimig.trace import (
    AGGREGATE_CHILD,
    ATTRIBUTE,
    KEY_COMPONENT,
    REF_FORWARD,
    REF_REVERSE,
    REL_TYPE_SIDE,
    TraceStore,
)
from unimig.transforms.naming import unique_name
from unimig.transforms.result import TransformResult
from unimig.transforms.typemap import us_to_rel_type
from unimig.uschema.model import (
    Aggregate,
    Attribute,
    EntityType,
    Key,
    Reference,
    RelationshipType,
    USchemaModel,
)
from unimig.uschema.validate import validate_uschema

log = logging.getLogger(__name__)


def uschema_to_relational(model: USchemaModel) -> TransformResult:
    problems = [d for d in validate_uschema(model) if d.severity == "error"]
    if problems:
        raise TransformError(
            "invalid pivot model: " + "; ".join(str(d) for d in problems))

    trace = TraceStore()
    schema = RelationalSchema(model.name.lower())
    trace.add(f"us:{model.name}", f"rel:{schema.name}", "R1")

    owners = _aggregation_owners(model)
    tables: dict[str, Table] = {}

    # A table can be built once the tables it inherits key columns from
    # exist: the aggregation owner for weak tables, every side target for
    # associative tables. Iterate to a fixpoint; leftovers mean a cycle.
    pending: list = list(model.entities) + list(model.relationships)
    while pending:
        progressed = False
        still: list = []
        for schema_type in pending:
            if isinstance(schema_type, EntityType):
                owner = owners.get(schema_type.name)
                ready = (owner is None or schema_type.root
                         or owner[0] in tables or owner[0] == schema_type.name)
                if ready:
                    _build_entity_table(model, schema, trace, tables, owners,
                                        schema_type)
                    progressed = True
                else:
                    still.append(schema_type)
            else:
                side_targets = [
                    _side_reference(model, schema_type.name, r).refs_to
                    for r in schema_type.references
                ]
                if all(t in tables for t in side_targets):
                    _build_relationship_table(model, schema, trace, tables,
                                              schema_type)
                    progressed = True
                else:
                    still.append(schema_type)
        if not progressed:
            names = ", ".join(t.name for t in still)
            raise TransformError(f"cyclic aggregation involving: {names}")
        pending = still

    # References wire foreign keys once every table and primary key exists.
    for entity in model.entities:
        for ref in entity.references():
            if ref.is_featured_by is None:
                _wire_reference(model, schema, trace, tables, entity, ref)

    return TransformResult(schema, trace.seal())


def _side_reference(model: USchemaModel, rel_name: str, ref_name: str) -> Reference:
    owner = model.relationship_side_owner(rel_name, ref_name)
    ref = owner.feature(ref_name)
    assert isinstance(ref, Reference)
    return ref


def _aggregation_owners(model: USchemaModel) -> dict[str, tuple[str, Aggregate]]:
    owners: dict[str, tuple[str, Aggregate]] = {}
    for t in model.types():
        for f in t.features:
            if isinstance(f, Aggregate):
                if f.specified_by in owners:
                    raise TransformError(
                        f"entity type {f.specified_by!r} is aggregated more than once")
                owners[f.specified_by] = (t.name, f)
    return owners


def _id_columns(table: Table) -> list[str]:
    pk = table.primary_key()
    return list(pk.columns) if pk else []


def _build_entity_table(model: USchemaModel, schema: RelationalSchema,
                        trace: TraceStore, tables: dict[str, Table],
                        owners: dict[str, tuple[str, Aggregate]],
                        entity: EntityType) -> None:
    table = Table(entity.name.lower())
    tables[entity.name] = table
    schema.tables.append(table)
    trace.add(f"us:{entity.name}", f"rel:{table.name}", "R2")

    inherited: list[str] = []
    owner = owners.get(entity.name)
    if owner is not None and not entity.root:
        owner_table = tables[owner[0]]
        aggregate = owner[1]
        for col_name in _id_columns(owner_table):
            src = owner_table.column(col_name)
            name = col_name
            if any(c.name == name for c in table.columns):
                name = f"{owner_table.name}_{col_name}"
            table.columns.append(Column(name, SqlType(
                src.datatype.base, src.datatype.length,
                src.datatype.precision, src.datatype.scale), nullable=False))
            inherited.append(name)
            trace.add(f"us:{owner[0]}.{aggregate.name}", f"rel:{table.name}.{name}",
                      "R5", AGGREGATE_CHILD)

    for feature in entity.features:
        if isinstance(feature, Attribute) and feature.owned_by_reference is None:
            name = unique_name(feature.name, {c.name for c in table.columns})
            table.columns.append(Column(name, us_to_rel_type(feature.type),
                                        nullable=feature.optional))
            trace.add(f"us:{entity.name}.{feature.name}",
                      f"rel:{table.name}.{name}", "R3", ATTRIBUTE)

    id_key = entity.id_key()
    local_pk: list[str] = []
    if id_key is not None and id_key.attributes:
        local_pk = [a for a in id_key.attributes if table.has_column(a)]
    if not local_pk:
        surrogate = unique_name(f"{table.name}_id", {c.name for c in table.columns})
        table.columns.append(Column(surrogate, SqlType("VARCHAR", length=255),
                                    nullable=False))
        local_pk = [surrogate]
        log.warning("entity type %r has no identifier key; synthesized surrogate %r",
                    entity.name, surrogate)
        trace.add(f"us:{entity.name}", f"rel:{table.name}.{surrogate}",
                  "SYNTH-SURROGATE")

    pk = RKey(f"{table.name}_pk", is_pk=True, columns=inherited + local_pk)
    table.keys.insert(0, pk)
    for col in local_pk:
        table.column(col).nullable = False
    trace.add(f"us:{entity.name}.{id_key.name}" if id_key is not None
              else f"us:{entity.name}",
              f"rel:{table.name}.{pk.constraint_name}", "R4", KEY_COMPONENT)

    if inherited:
        owner_table = tables[owners[entity.name][0]]
        fk = FKey(f"{table.name}_fk{len(table.fkeys) + 1}", inherited,
                  owner_table.name, _id_columns(owner_table))
        table.fkeys.append(fk)
        trace.add(f"us:{owners[entity.name][0]}.{owners[entity.name][1].name}",
                  f"rel:{table.name}.{fk.constraint_name}", "R5", AGGREGATE_CHILD)

    for feature in entity.features:
        if isinstance(feature, Key) and not feature.is_id:
            cols = _unique_key_columns(entity, table, feature)
            if cols is None:
                log.warning("dropping key %s.%s: its attributes have no columns",
                            entity.name, feature.name)
                continue
            rkey = RKey(unique_name(feature.name,
                                    {k.constraint_name for k in table.keys}),
                        is_pk=False, columns=cols)
            table.keys.append(rkey)
            trace.add(f"us:{entity.name}.{feature.name}",
                      f"rel:{table.name}.{rkey.constraint_name}",
                      "R4", KEY_COMPONENT)


def _unique_key_columns(entity: EntityType, table: Table,
                        key: Key) -> list[str] | None:
    cols: list[str] = []
    for attr_name in key.attributes:
        if table.has_column(attr_name):
            cols.append(attr_name)
    return cols or None


def _build_relationship_table(model: USchemaModel, schema: RelationalSchema,
                              trace: TraceStore, tables: dict[str, Table],
                              rel: RelationshipType) -> None:
    table = Table(rel.name.lower())
    tables[rel.name] = table
    schema.tables.append(table)
    trace.add(f"us:{rel.name}", f"rel:{table.name}", "R6")

    pk_cols: list[str] = []
    for ref_name in rel.references:
        owner = model.relationship_side_owner(rel.name, ref_name)
        ref = owner.feature(ref_name)
        assert isinstance(ref, Reference)
        target_table = tables[ref.refs_to]
        side_cols: list[str] = []
        for col_name in _id_columns(target_table):
            name = col_name
            if table.has_column(name):
                name = f"{ref.name}_{col_name}"
            name = unique_name(name, {c.name for c in table.columns})
            src = target_table.column(col_name)
            table.columns.append(Column(name, SqlType(
                src.datatype.base, src.datatype.length,
                src.datatype.precision, src.datatype.scale), nullable=False))
            side_cols.append(name)
            trace.add(f"us:{owner.name}.{ref_name}", f"rel:{table.name}.{name}",
                      "R6", REL_TYPE_SIDE)
        fk = FKey(f"{table.name}_fk{len(table.fkeys) + 1}", side_cols,
                  target_table.name, _id_columns(target_table))
        table.fkeys.append(fk)
        pk_cols.extend(side_cols)
        trace.add(f"us:{owner.name}.{ref_name}",
                  f"rel:{table.name}.{fk.constraint_name}", "R6", REL_TYPE_SIDE)

    for feature in rel.features:
        if isinstance(feature, Attribute) and feature.owned_by_reference is None:
            name = unique_name(feature.name, {c.name for c in table.columns})
            table.columns.append(Column(name, us_to_rel_type(feature.type),
                                        nullable=feature.optional))
            trace.add(f"us:{rel.name}.{feature.name}",
                      f"rel:{table.name}.{name}", "R3", ATTRIBUTE)

    if pk_cols:
        pk = RKey(f"{table.name}_pk", is_pk=True, columns=pk_cols)
        table.keys.insert(0, pk)
        trace.add(f"us:{rel.name}", f"rel:{table.name}.{pk.constraint_name}",
                  "R6", KEY_COMPONENT)


def _wire_reference(model: USchemaModel, schema: RelationalSchema,
                    trace: TraceStore, tables: dict[str, Table],
                    entity: EntityType, ref: Reference) -> None:
    target_table = tables[ref.refs_to]
    owner_table = tables[entity.name]
    if ref.upper_bound == 1:
        # Forward: foreign key columns live in the owner's table.
        holder, pointee, role = owner_table, target_table, REF_FORWARD
        col_names = _forward_column_names(entity, ref, pointee)
        nullable = ref.lower_bound == 0
    else:
        # Reverse: the referenced table points back at the owner.
        holder, pointee, role = target_table, owner_table, REF_REVERSE
        col_names = [c for c in _id_columns(owner_table)]
        nullable = True

    pointee_pk = _id_columns(pointee)
    if len(col_names) != len(pointee_pk):
        raise TransformError(
            f"reference {entity.name}.{ref.name}: cannot derive "
            f"{len(pointee_pk)} foreign key column(s) from {col_names}")
    actual: list[str] = []
    for name, pointee_col in zip(col_names, pointee_pk):
        if holder.has_column(name):
            name = unique_name(f"{pointee.name}_{pointee_col}",
                               {c.name for c in holder.columns})
        src = pointee.column(pointee_col)
        holder.columns.append(Column(name, SqlType(
            src.datatype.base, src.datatype.length,
            src.datatype.precision, src.datatype.scale), nullable=nullable))
        actual.append(name)
        trace.add(f"us:{entity.name}.{ref.name}",
                  f"rel:{holder.name}.{name}", "R7", role)
    fk = FKey(f"{holder.name}_fk{len(holder.fkeys) + 1}", actual,
              pointee.name, pointee_pk)
    holder.fkeys.append(fk)
    trace.add(f"us:{entity.name}.{ref.name}",
              f"rel:{holder.name}.{fk.constraint_name}", "R7", role)


def _forward_column_names(entity: EntityType, ref: Reference,
                          target_table: Table) -> list[str]:
    target_pk = _id_columns(target_table)
    if ref.attributes and len(ref.attributes) == len(target_pk):
        return list(ref.attributes)
    if len(target_pk) == 1:
        return [ref.name]
    return [f"{ref.name}_{c}" for c in target_pk]
