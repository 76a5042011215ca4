from unimig.uschema.athena import parse_athena, print_athena
from unimig.uschema.model import (
    Aggregate,
    Attribute,
    EntityType,
    Feature,
    Key,
    Reference,
    RelationshipType,
    SchemaType,
    UNBOUNDED,
    USDataType,
    USchemaModel,
    model_from_dict,
    model_to_dict,
)
from unimig.uschema.validate import Diagnostic, assert_valid, validate_uschema

__all__ = [
    "Aggregate",
    "Attribute",
    "Diagnostic",
    "EntityType",
    "Feature",
    "Key",
    "Reference",
    "RelationshipType",
    "SchemaType",
    "UNBOUNDED",
    "USDataType",
    "USchemaModel",
    "assert_valid",
    "model_from_dict",
    "model_to_dict",
    "parse_athena",
    "print_athena",
    "validate_uschema",
]
