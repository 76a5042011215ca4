"""Pivot model to document schema.

* R1  schema name carries over.
* R2  root entity types become document types (collections).
* R3  attributes not owned by a reference become fields.
* R4  the identifier key marks its field when it has a single attribute;
      otherwise a derived ``_id`` STRING key field is added and the
      components stay regular fields. Non-identifier keys are dropped.
* R5  references outside relationship types become document references,
      single-valued or arrays by upper bound; their carried attributes are
      dropped. Single-valued references are named after the identifier they
      store (the carried attribute, else the target's id attribute).
* R6  aggregate plus non-root entity type pairs become embedded objects,
      recursively.
* R7  relationship types become collections with a ``<name>_id`` key field,
      one reference per side, and their own attributes.
"""

from __future__ import annotations

from unimig.document.model import (
    DocReference,
    DocType,
    DocumentSchema,
    DocumentType,
    Embedded,
    Field,
    Property,
)
from unimig.errors import TransformError
from unimig.trace import (
    AGGREGATE_CHILD,
    ATTRIBUTE,
    KEY_COMPONENT,
    REF_FORWARD,
    REF_REVERSE,
    REL_TYPE_SIDE,
    TraceStore,
    doc_path,
)
from unimig.transforms.naming import unique_name
from unimig.transforms.result import TransformResult
from unimig.transforms.typemap import us_to_doc_type
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


def uschema_to_document(model: USchemaModel) -> TransformResult:
    problems = [d for d in validate_uschema(model) if d.severity == "error"]
    if problems:
        raise TransformError(
            "invalid pivot model: " + "; ".join(str(d) for d in problems))

    trace = TraceStore()
    schema = DocumentSchema(model.name)
    trace.add(f"us:{model.name}", f"doc:{schema.name}", "R1")

    for entity in model.entities:
        if not entity.root:
            continue
        document = DocumentType(entity.name)
        schema.documents.append(document)
        trace.add(f"us:{entity.name}", f"doc:{document.name}", "R2")
        _map_features(model, trace, entity,
                      [(document.name, False)], document.properties, visiting=())

    for entity in model.entities:
        if not entity.root and not _is_aggregated(model, entity.name):
            trace.add(f"us:{entity.name}", f"doc:{schema.name}", "SKIP-UNREACHED")

    for rel in model.relationships:
        _map_relationship(model, trace, schema, rel)

    return TransformResult(schema, trace.seal())


def _is_aggregated(model: USchemaModel, entity_name: str) -> bool:
    return any(isinstance(f, Aggregate) and f.specified_by == entity_name
               for t in model.types() for f in t.features)


def _map_features(model: USchemaModel, trace: TraceStore, schema_type,
                  path: list[tuple[str, bool]], out: list[Property],
                  visiting: tuple[str, ...]) -> None:
    """Apply R3..R6 to the features of an entity type, appending properties
    to ``out`` (the body of a collection or embedded object)."""
    owned_attrs: list[Attribute] = []
    ref_paths: dict[str, str] = {}
    container = doc_path(path)

    for feature in schema_type.features:
        us_id = f"us:{schema_type.name}.{feature.name}"
        if isinstance(feature, Attribute):
            if feature.owned_by_reference is not None:
                owned_attrs.append(feature)
                continue
            f = Field(unique_name(feature.name, _names(out)),
                      us_to_doc_type(feature.type))
            out.append(f)
            trace.add(us_id, doc_path(path + [(f.name, False)]), "R3", ATTRIBUTE)
        elif isinstance(feature, Key):
            if not feature.is_id:
                trace.add(us_id, container, "SKIP-NONID-KEY")
                continue
            if len(feature.attributes) == 1:
                f = next((p for p in out
                          if isinstance(p, Field) and p.name == feature.attributes[0]),
                         None)
                if f is None:
                    raise TransformError(
                        f"identifier key {schema_type.name}.{feature.name} has no "
                        "mapped attribute field")
                f.is_key = True
                trace.add(us_id, doc_path(path + [(f.name, False)]),
                          "R4", KEY_COMPONENT)
            else:
                f = Field(unique_name("_id", _names(out)), DocType("STRING"),
                          is_key=True)
                out.append(f)
                trace.add(us_id, doc_path(path + [(f.name, False)]),
                          "R4", KEY_COMPONENT)
        elif isinstance(feature, Reference):
            if feature.is_featured_by is not None:
                continue  # surfaces in the relationship's collection (R7)
            multi = feature.upper_bound != 1
            target = model.entity(feature.refs_to)
            if not target.root:
                raise TransformError(
                    f"reference {schema_type.name}.{feature.name} targets the "
                    f"non-root entity type {target.name!r}, which has no collection")
            name = unique_name(_ref_property_name(model, feature, multi), _names(out))
            ref = DocReference(name, target.name,
                               DocType(_id_primitive(model, target), array=multi))
            out.append(ref)
            ref_path = doc_path(path + [(name, False)])
            ref_paths[feature.name] = ref_path
            trace.add(us_id, ref_path, "R5", REF_REVERSE if multi else REF_FORWARD)
        elif isinstance(feature, Aggregate):
            if feature.specified_by in visiting or feature.specified_by == schema_type.name:
                raise TransformError(
                    f"cyclic aggregation through {feature.specified_by!r}")
            child = model.entity(feature.specified_by)
            if child.root:
                raise TransformError(
                    f"aggregate {schema_type.name}.{feature.name} embeds the root "
                    f"entity type {child.name!r}")
            embedded = Embedded(unique_name(feature.name, _names(out)),
                                is_many=feature.upper_bound != 1)
            out.append(embedded)
            emb_path = path + [(embedded.name, True)]
            trace.add([us_id, f"us:{child.name}"], doc_path(emb_path),
                      "R6", AGGREGATE_CHILD)
            _map_features(model, trace, child, emb_path, embedded.aggregates,
                          visiting + (schema_type.name,))

    for attr in owned_attrs:
        target = ref_paths.get(attr.owned_by_reference or "", container)
        trace.add(f"us:{schema_type.name}.{attr.name}", target, "SKIP-REF-ATTR")


def _map_relationship(model: USchemaModel, trace: TraceStore,
                      schema: DocumentSchema, rel: RelationshipType) -> None:
    document = DocumentType(rel.name)
    schema.documents.append(document)
    path = [(document.name, False)]
    trace.add(f"us:{rel.name}", f"doc:{document.name}", "R7", REL_TYPE_SIDE)

    key = Field(f"{rel.name}_id", DocType("STRING"), is_key=True)
    document.properties.append(key)
    trace.add(f"us:{rel.name}", doc_path(path + [(key.name, False)]),
              "R7", KEY_COMPONENT)

    for ref_name in rel.references:
        owner = model.relationship_side_owner(rel.name, ref_name)
        ref = owner.feature(ref_name)
        assert isinstance(ref, Reference)
        target = model.entity(ref.refs_to)
        name = unique_name(_ref_property_name(model, ref, multi=False),
                           _names(document.properties))
        doc_ref = DocReference(name, target.name,
                               DocType(_id_primitive(model, target)))
        document.properties.append(doc_ref)
        trace.add(f"us:{owner.name}.{ref_name}",
                  doc_path(path + [(name, False)]), "R7", REL_TYPE_SIDE)

    _map_features(model, trace, rel, path, document.properties, visiting=())


def _names(properties: list[Property]) -> set[str]:
    return {p.name for p in properties}


def _ref_property_name(model: USchemaModel, ref: Reference, multi: bool) -> str:
    """Single-valued references take the name of the identifier they store;
    multi-valued ones keep the reference name."""
    if multi:
        return ref.name
    if len(ref.attributes) == 1:
        return ref.attributes[0]
    target = model.entity(ref.refs_to)
    id_key = target.id_key()
    if id_key is not None and len(id_key.attributes) == 1:
        return id_key.attributes[0]
    return ref.name


def _id_primitive(model: USchemaModel, target: EntityType) -> str:
    """Primitive kind of the identifier a reference to ``target`` stores;
    derived composite identifiers are strings."""
    id_key = target.id_key()
    if id_key is not None and len(id_key.attributes) == 1:
        attr = target.feature(id_key.attributes[0])
        if isinstance(attr, Attribute):
            return us_to_doc_type(attr.type).primitive
    return "STRING"
