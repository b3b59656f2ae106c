"""Code-based single-server computational PIR."""
from .field import base_field, ext_field_build
from .scheme import (
    TABLE_PRESETS,
    TOY,
    Database,
    Params,
    Query,
    Variant,
    answer,
    build_query,
    recover,
)

__version__ = "0.1.0"

__all__ = [
    "base_field",
    "ext_field_build",
    "TABLE_PRESETS",
    "TOY",
    "Database",
    "Params",
    "Query",
    "Variant",
    "answer",
    "build_query",
    "recover",
]
