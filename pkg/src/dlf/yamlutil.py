"""Strict YAML helpers operating on composed nodes.

Working at node level keeps line/column information for every rejection and
lets us fail on duplicate keys, which plain safe_load silently swallows.
Scalar values are returned as their raw text, matching the manifest contract
that per-type fields are flat string entries.
"""
from __future__ import annotations

import yaml
from yaml.nodes import MappingNode, Node, ScalarNode, SequenceNode


class ManifestError(ValueError):
    """A manifest was rejected; the message carries path and position."""

    def __init__(self, message: str, node: Node | None = None):
        if node is not None and node.start_mark is not None:
            mark = node.start_mark
            message = f"{message} (line {mark.line + 1}, column {mark.column + 1})"
        super().__init__(message)


def _at(path: str) -> str:
    return path if path else "document root"


def compose_document(text: str) -> Node:
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ManifestError(f"invalid YAML: {exc}") from exc
    if node is None:
        raise ManifestError("empty document")
    return node


def compose_documents(text: str) -> list[Node]:
    try:
        return [n for n in yaml.compose_all(text) if n is not None]
    except yaml.YAMLError as exc:
        raise ManifestError(f"invalid YAML: {exc}") from exc


def mapping_items(node: Node, path: str = "") -> list[tuple[str, Node, Node]]:
    """Return (key, key_node, value_node) triples, rejecting duplicates."""
    if not isinstance(node, MappingNode):
        raise ManifestError(f"{_at(path)}: expected a mapping", node)
    items: list[tuple[str, Node, Node]] = []
    seen: set[str] = set()
    for key_node, value_node in node.value:
        if not isinstance(key_node, ScalarNode):
            raise ManifestError(f"{_at(path)}: mapping keys must be strings", key_node)
        key = key_node.value
        if key in seen:
            raise ManifestError(f"{_at(path)}: duplicate key {key!r}", key_node)
        seen.add(key)
        items.append((key, key_node, value_node))
    return items


def as_mapping(node: Node, path: str = "") -> dict[str, Node]:
    return {key: value for key, _, value in mapping_items(node, path)}


def scalar_value(node: Node, path: str) -> str:
    if not isinstance(node, ScalarNode):
        raise ManifestError(f"{path}: expected a scalar value", node)
    if node.tag == "tag:yaml.org,2002:null":
        raise ManifestError(f"{path}: value must not be null", node)
    return node.value


def int_value(node: Node, path: str) -> int:
    raw = scalar_value(node, path)
    try:
        return int(raw)
    except ValueError:
        raise ManifestError(f"{path}: expected an integer, got {raw!r}", node) from None


def bool_value(node: Node, path: str) -> bool:
    raw = scalar_value(node, path).lower()
    if raw in ("true", "yes"):
        return True
    if raw in ("false", "no"):
        return False
    raise ManifestError(f"{path}: expected a boolean, got {raw!r}", node)


def string_mapping(node: Node, path: str) -> dict[str, str]:
    return {
        key: scalar_value(value, f"{path}.{key}")
        for key, _, value in mapping_items(node, path)
    }


def sequence_items(node: Node, path: str) -> list[Node]:
    if not isinstance(node, SequenceNode):
        raise ManifestError(f"{path}: expected a sequence", node)
    return list(node.value)


def require_keys(
    items: dict[str, Node],
    required: tuple[str, ...],
    allowed: tuple[str, ...],
    path: str,
    node: Node | None = None,
) -> None:
    for key in required:
        if key not in items:
            raise ManifestError(f"{_at(path)}: missing required key {key!r}", node)
    prefix = f"{path}." if path else ""
    for key in items:
        if key not in allowed:
            raise ManifestError(f"unknown field {prefix}{key}", items[key])
