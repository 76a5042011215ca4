from unimig.document.model import (
    DocReference,
    DocType,
    DocumentSchema,
    DocumentType,
    Embedded,
    Field,
    Property,
    assert_valid_docschema,
    validate_docschema,
)
from unimig.document.schema_json import (
    docschema_from_dict,
    docschema_to_dict,
    parse_docschema,
    print_docschema,
)

__all__ = [
    "DocReference",
    "DocType",
    "DocumentSchema",
    "DocumentType",
    "Embedded",
    "Field",
    "Property",
    "assert_valid_docschema",
    "docschema_from_dict",
    "docschema_to_dict",
    "parse_docschema",
    "print_docschema",
    "validate_docschema",
]
