from unimig.relational.ddl import parse_ddl, print_ddl
from unimig.relational.model import (
    Column,
    FKey,
    ReferentialAction,
    RelationalSchema,
    RKey,
    SqlType,
    Table,
    TYPE_CLASSES,
    fk_in_pk,
    identifying_fk,
    is_mn,
    is_weak,
    validate_relational,
)

__all__ = [
    "Column",
    "FKey",
    "ReferentialAction",
    "RelationalSchema",
    "RKey",
    "SqlType",
    "TYPE_CLASSES",
    "Table",
    "fk_in_pk",
    "identifying_fk",
    "is_mn",
    "is_weak",
    "parse_ddl",
    "print_ddl",
    "validate_relational",
]
