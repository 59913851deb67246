"""In-memory semantic network validated against an ontology.

Nodes are typed and carry attribute maps, edges are typed and directed.
Every mutation is validated against the ontology at call time, so the
graph can never hold a node or edge the schema does not allow, and edges
never dangle.  Queries return nodes in a deterministic order (sorted by
id).

The graph is an in-process structure.  Snapshots use JSON Lines: one
record per node, then one per edge, each list sorted, so identical
graphs serialize to identical bytes.

Concurrency contract: one writer at a time; readers see whatever state
the graph has when their call starts.  Episodes each own their graph,
so nothing here locks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable

from .ontology import Ontology
from .values import MISSING, compare_values, matches_kind

Value = Any  # scalar or homogeneous list, see kbrl.values


class SchemaViolation(Exception):
    """A node or edge does not validate against the ontology."""


@dataclass
class SemanticNode:
    id: str
    entity_type: str
    attributes: dict[str, Value] = field(default_factory=dict)


@dataclass(frozen=True)
class SemanticEdge:
    verb: str
    from_id: str
    to_id: str


Predicate = tuple[str, str, Value]  # (attribute, operator, value)


class SemanticGraph:
    def __init__(self, ontology: Ontology):
        self.ontology = ontology
        self._nodes: dict[str, SemanticNode] = {}
        self._by_type: dict[str, dict[str, SemanticNode]] = {}
        self._sorted: dict[str, list[SemanticNode]] = {}  # per-type cache
        self._edges: set[SemanticEdge] = set()
        self._out: dict[str, set[SemanticEdge]] = {}
        self._in: dict[str, set[SemanticEdge]] = {}
        self.version = 0

    # --- validation --------------------------------------------------------

    def _validate_node(self, node: SemanticNode) -> None:
        if node.entity_type not in self.ontology.entities:
            raise SchemaViolation(f"unknown entity type {node.entity_type!r}")
        for name, value in node.attributes.items():
            kind = self.ontology.attr_kind(node.entity_type, name)
            if kind is None:
                raise SchemaViolation(
                    f"attribute {name!r} not declared for {node.entity_type}"
                )
            if not matches_kind(value, kind):
                raise SchemaViolation(
                    f"attribute {name!r} of {node.entity_type} expects {kind}, "
                    f"got {value!r}"
                )

    def validate_full(self) -> None:
        """Re-validate every node and edge; raises on the first violation."""
        for node in self._nodes.values():
            self._validate_node(node)
        for edge in self._edges:
            self._validate_edge(edge.verb, edge.from_id, edge.to_id)

    def _validate_edge(self, verb: str, from_id: str, to_id: str) -> None:
        sig = self.ontology.verbs.get(verb)
        if sig is None:
            raise SchemaViolation(f"unknown verb {verb!r}")
        frm = self._nodes.get(from_id)
        to = self._nodes.get(to_id)
        if frm is None or to is None:
            raise SchemaViolation(f"edge {verb} references a missing node")
        if frm.entity_type != sig[0] or to.entity_type != sig[1]:
            raise SchemaViolation(
                f"verb {verb} connects {sig[0]} to {sig[1]}, got "
                f"{frm.entity_type} to {to.entity_type}"
            )

    # --- mutations -----------------------------------------------------------

    def upsert_node(self, node: SemanticNode) -> str:
        """Insert the node or replace an existing node's attributes."""
        self._validate_node(node)
        existing = self._nodes.get(node.id)
        if existing is not None and existing.entity_type != node.entity_type:
            raise SchemaViolation(
                f"node {node.id!r} already exists with type {existing.entity_type}"
            )
        if existing is not None:
            existing.attributes = dict(node.attributes)  # keep object identity
        else:
            stored = SemanticNode(node.id, node.entity_type, dict(node.attributes))
            self._sorted.pop(node.entity_type, None)
            self._nodes[node.id] = stored
            self._by_type.setdefault(node.entity_type, {})[node.id] = stored
        self.version += 1
        return node.id

    def set_attr(self, node_id: str, attr: str, value: Value) -> None:
        node = self._nodes.get(node_id)
        if node is None:
            raise SchemaViolation(f"no node {node_id!r}")
        kind = self.ontology.attr_kind(node.entity_type, attr)
        if kind is None:
            raise SchemaViolation(
                f"attribute {attr!r} not declared for {node.entity_type}"
            )
        if not matches_kind(value, kind):
            raise SchemaViolation(
                f"attribute {attr!r} of {node.entity_type} expects {kind}, got {value!r}"
            )
        node.attributes[attr] = value
        self.version += 1

    def remove_node(self, node_id: str) -> bool:
        """Remove a node and all incident edges; False if it never existed."""
        node = self._nodes.pop(node_id, None)
        if node is None:
            return False
        self._by_type[node.entity_type].pop(node_id, None)
        self._sorted.pop(node.entity_type, None)
        for edge in self._out.pop(node_id, set()) | self._in.pop(node_id, set()):
            self._edges.discard(edge)
            self._out.get(edge.from_id, set()).discard(edge)
            self._in.get(edge.to_id, set()).discard(edge)
        self.version += 1
        return True

    def add_edge(self, verb: str, from_id: str, to_id: str) -> SemanticEdge:
        self._validate_edge(verb, from_id, to_id)
        edge = SemanticEdge(verb, from_id, to_id)
        if edge not in self._edges:
            self._edges.add(edge)
            self._out.setdefault(from_id, set()).add(edge)
            self._in.setdefault(to_id, set()).add(edge)
            self.version += 1
        return edge

    def remove_edge(self, verb: str, from_id: str, to_id: str) -> bool:
        edge = SemanticEdge(verb, from_id, to_id)
        if edge not in self._edges:
            return False
        self._edges.discard(edge)
        self._out.get(from_id, set()).discard(edge)
        self._in.get(to_id, set()).discard(edge)
        self.version += 1
        return True

    # --- reads ---------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def get_node(self, node_id: str) -> SemanticNode | None:
        return self._nodes.get(node_id)

    def nodes_of_type(self, entity_type: str) -> list[SemanticNode]:
        cached = self._sorted.get(entity_type)
        if cached is None:
            bucket = self._by_type.get(entity_type, {})
            cached = [bucket[k] for k in sorted(bucket)]
            self._sorted[entity_type] = cached
        return cached

    def all_nodes(self) -> list[SemanticNode]:
        return [self._nodes[k] for k in sorted(self._nodes)]

    def edges(self) -> list[SemanticEdge]:
        return sorted(self._edges, key=lambda e: (e.verb, e.from_id, e.to_id))

    def edges_from(self, node_id: str, verb: str | None = None) -> list[SemanticEdge]:
        out = self._out.get(node_id, set())
        found = [e for e in out if verb is None or e.verb == verb]
        return sorted(found, key=lambda e: (e.verb, e.to_id))

    def edges_to(self, node_id: str, verb: str | None = None) -> list[SemanticEdge]:
        inc = self._in.get(node_id, set())
        found = [e for e in inc if verb is None or e.verb == verb]
        return sorted(found, key=lambda e: (e.verb, e.from_id))

    def query_nodes(
        self, entity_type: str, predicates: Iterable[Predicate] = ()
    ) -> list[SemanticNode]:
        """All nodes of a type satisfying every (attr, op, value) predicate.

        Results are sorted by id.  Nodes lacking a predicate's attribute
        do not match.
        """
        if entity_type not in self.ontology.entities:
            raise SchemaViolation(f"unknown entity type {entity_type!r}")
        preds = list(predicates)
        out = []
        for node in self.nodes_of_type(entity_type):
            ok = True
            for attr, op, value in preds:
                got = node.attributes.get(attr, MISSING)
                if not compare_values(op, got, value):
                    ok = False
                    break
            if ok:
                out.append(node)
        return out

    # --- snapshots -------------------------------------------------------------

    def to_jsonl(self) -> str:
        lines = []
        for node in self.all_nodes():
            lines.append(
                json.dumps(
                    {
                        "kind": "node",
                        "id": node.id,
                        "type": node.entity_type,
                        "attributes": node.attributes,
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                )
            )
        for edge in self.edges():
            lines.append(
                json.dumps(
                    {
                        "kind": "edge",
                        "verb": edge.verb,
                        "from": edge.from_id,
                        "to": edge.to_id,
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str, ontology: Ontology) -> "SemanticGraph":
        graph = cls(ontology)
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("kind") == "node":
                graph.upsert_node(
                    SemanticNode(rec["id"], rec["type"], rec.get("attributes", {}))
                )
            elif rec.get("kind") == "edge":
                graph.add_edge(rec["verb"], rec["from"], rec["to"])
            else:
                raise ValueError(f"line {lineno}: unknown record kind {rec.get('kind')!r}")
        return graph
