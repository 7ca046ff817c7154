"""JSON file formats for instances, solutions, partitions and metrics.

Instance document::

    {"n": 4, "linear": true,
     "nodes": [10, 11, 12, 13],            # optional, defaults to 0..n-1
     "edges": [{"members": [10, 11], "threshold": 1}, ...]}

Loaders are strict: unknown fields are rejected. Arbitrary node ids are
remapped to the dense range 0..n-1 in ascending id order.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import jsonschema

from .hypergraph import Hypergraph

INSTANCE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n", "linear", "edges"],
    "properties": {
        "n": {"type": "integer", "minimum": 0},
        "linear": {"type": "boolean"},
        "nodes": {"type": "array", "items": {"type": "integer"}, "uniqueItems": True},
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["members", "threshold"],
                "properties": {
                    "members": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                    "threshold": {"type": "integer"},
                },
            },
        },
    },
}

SOLUTION_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n", "included", "excluded"],
    "properties": {
        "n": {"type": "integer", "minimum": 0},
        "included": {"type": "array", "items": {"type": "integer"}},
        "excluded": {"type": "array", "items": {"type": "integer"}},
        "witness": {"type": "object", "additionalProperties": {"type": "integer"}},
        "algorithm": {"type": "string"},
        "seed": {"type": "integer"},
        "valid": {"type": "boolean"},
        "maximal": {"type": "boolean"},
        "config": {"type": "object"},
    },
}


class FormatError(ValueError):
    pass


def _validate(doc: Any, schema: dict) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise FormatError(exc.message) from None


def hypergraph_to_dict(h: Hypergraph) -> dict:
    dense = h.node_ids == tuple(range(h.n))
    doc: dict[str, Any] = {"n": h.n, "linear": h.linear}
    if not dense:
        doc["nodes"] = list(h.node_ids)
    doc["edges"] = [{"members": sorted(e.members), "threshold": e.threshold} for e in h.edges]
    return doc


def hypergraph_from_dict(doc: Any) -> Hypergraph:
    _validate(doc, INSTANCE_SCHEMA)
    n = doc["n"]
    nodes = doc.get("nodes", list(range(n)))
    if len(nodes) != n:
        raise FormatError(f"'nodes' lists {len(nodes)} ids but n = {n}")
    remap = {v: k for k, v in enumerate(sorted(nodes))}
    edges = []
    for k, e in enumerate(doc["edges"]):
        try:
            members = [remap[v] for v in e["members"]]
        except KeyError as exc:
            raise FormatError(f"edge {k} references unknown node {exc.args[0]}") from None
        if len(set(members)) != len(members):
            raise FormatError(f"edge {k} repeats a member")
        edges.append((members, e["threshold"]))
    return Hypergraph.from_edges(range(n), edges, linear=doc["linear"])


def dumps_hypergraph(h: Hypergraph) -> str:
    return json.dumps(hypergraph_to_dict(h), sort_keys=True) + "\n"


def save_hypergraph(h: Hypergraph, path: str | Path) -> None:
    Path(path).write_text(dumps_hypergraph(h))


def load_hypergraph(path: str | Path) -> Hypergraph:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return hypergraph_from_dict(doc)


def load_solution(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    _validate(doc, SOLUTION_SCHEMA)
    return doc


def save_json(doc: Any, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def append_record(record: dict, path: str | Path) -> None:
    with open(path, "a") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")
