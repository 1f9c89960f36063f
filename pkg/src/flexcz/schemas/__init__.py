"""JSON Schema documents for every file format the package reads or writes."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from ..errors import SchemaError

KINDS = ("case", "poly", "cz", "for", "slice", "bench")


@lru_cache(maxsize=None)
def schema_for(kind: str) -> dict:
    if kind not in KINDS:
        raise ValueError(f"unknown document kind {kind!r}")
    text = resources.files(__package__).joinpath(f"{kind}.schema.json").read_text()
    return json.loads(text)


@lru_cache(maxsize=None)
def _validator(kind: str) -> jsonschema.Validator:
    schema = schema_for(kind)
    cls = jsonschema.validators.validator_for(schema)
    cls.check_schema(schema)
    return cls(schema)


def validate_document(doc, kind: str) -> None:
    """Check a parsed document against the schema; raise SchemaError if bad."""
    errors = sorted(_validator(kind).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "(root)"
        raise SchemaError(f"{kind} document invalid at {where}: {err.message}")
