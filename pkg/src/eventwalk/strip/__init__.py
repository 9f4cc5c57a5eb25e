from .structure import (
    DuplicateValues,
    StripQuery,
    StripStructure,
    build,
    oracle_all,
    oracle_query,
)

__all__ = ["DuplicateValues", "StripQuery", "StripStructure", "build", "oracle_all", "oracle_query"]
