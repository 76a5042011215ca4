"""Document schema back to the pivot model.

Inverse of the forward document mapping on its image: collections become
root entity types, fields become attributes (a key field also yields the
identifier key), embedded objects become non-root entity types plus an
aggregate in the owner, and document references become references with
bounds taken from the property's cardinality. The document model cannot
say which collections materialize attributed associations, so nothing is
reclassified as a relationship type, and nullability is gone: non-key
attributes come back optional.
"""

from __future__ import annotations

from unimig.document.model import (
    DocReference,
    DocumentSchema,
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
    TraceStore,
    doc_path,
)
from unimig.transforms.naming import unique_name
from unimig.transforms.result import TransformResult
from unimig.transforms.typemap import doc_to_us_type
from unimig.uschema.model import (
    Aggregate,
    Attribute,
    EntityType,
    Key,
    Reference,
    UNBOUNDED,
    USchemaModel,
)
from unimig.document.model import validate_docschema


def document_to_uschema(schema: DocumentSchema) -> TransformResult:
    problems = [p for p in validate_docschema(schema) if not p.startswith("warning:")]
    if problems:
        raise TransformError("invalid document schema: " + "; ".join(problems))

    trace = TraceStore()
    model = USchemaModel(schema.name)
    trace.add(f"doc:{schema.name}", f"us:{model.name}", "R1")

    type_names = {d.name for d in schema.documents}
    for document in schema.documents:
        entity = EntityType(document.name, root=True)
        model.entities.append(entity)
        trace.add(f"doc:{document.name}", f"us:{entity.name}", "R2")
        _map_properties(model, trace, document.properties,
                        [(document.name, False)], entity, type_names)
    return TransformResult(model, trace.seal())


def _map_properties(model: USchemaModel, trace: TraceStore,
                    properties: list[Property], path: list[tuple[str, bool]],
                    entity: EntityType, type_names: set[str]) -> None:
    key_attr: str | None = None
    key_path: str | None = None
    for prop in properties:
        taken = {f.name for f in entity.features}
        if isinstance(prop, Field):
            attr = Attribute(unique_name(prop.name, taken),
                             doc_to_us_type(prop.type), optional=not prop.is_key)
            entity.features.append(attr)
            prop_path = doc_path(path + [(prop.name, False)])
            trace.add(prop_path,
                      [f"us:{entity.name}.{attr.name}",
                       f"us:{entity.name}.{attr.name}.type"],
                      "R3", ATTRIBUTE)
            if prop.is_key:
                key_attr, key_path = attr.name, prop_path
        elif isinstance(prop, DocReference):
            multi = prop.type.array
            ref = Reference(unique_name(prop.name, taken), refs_to=prop.target,
                            lower_bound=0,
                            upper_bound=UNBOUNDED if multi else 1)
            entity.features.append(ref)
            trace.add(doc_path(path + [(prop.name, False)]),
                      f"us:{entity.name}.{ref.name}",
                      "R5", REF_REVERSE if multi else REF_FORWARD)
        elif isinstance(prop, Embedded):
            child = EntityType(unique_name(prop.name, type_names), root=False)
            type_names.add(child.name)
            model.entities.append(child)
            ag = Aggregate(unique_name(prop.name, taken), specified_by=child.name,
                           lower_bound=0,
                           upper_bound=UNBOUNDED if prop.is_many else 1)
            entity.features.append(ag)
            emb_path = path + [(prop.name, True)]
            trace.add(doc_path(emb_path),
                      [f"us:{entity.name}.{ag.name}", f"us:{child.name}"],
                      "R6", AGGREGATE_CHILD)
            _map_properties(model, trace, prop.aggregates, emb_path, child, type_names)
    if key_attr is not None:
        key = Key(unique_name(f"{entity.name}_pk",
                              {f.name for f in entity.features}),
                  is_id=True, attributes=[key_attr])
        entity.features.append(key)
        assert key_path is not None
        trace.add(key_path, f"us:{entity.name}.{key.name}", "R4", KEY_COMPONENT)
