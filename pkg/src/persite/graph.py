"""Labeled site-graph model: ingestion from crawl dumps and validation.

The crawl dump is UTF-8 JSON-lines, one object per page:

    {"id": str, "url": str, "root": bool?, "kind": "exclusive"|"inclusive",
     "annotations": {str: str}?, "leaf_bindings": {str: str}?,
     "out": [{"label": str, "target": str}]}

Exactly one record carries "root": true. Edge labels are normalized at
ingest; the graph is immutable afterward and safe to share across readers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .labels import (
    CONTINUATION_MARKER,
    NormalizationConfig,
    normalize_label,
    resolve_continuation,
)

EXCLUSIVE = "exclusive"
INCLUSIVE = "inclusive"
BRANCH_KINDS = (EXCLUSIVE, INCLUSIVE)


class IngestError(ValueError):
    """Crawl dump rejected; message names the offending record."""


@dataclass(frozen=True)
class GraphNode:
    id: str
    url: str
    branch_kind: str = EXCLUSIVE
    annotations: Mapping[str, str] = field(default_factory=dict)
    leaf_bindings: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class LabeledEdge:
    source: str
    target: str
    raw_label: str
    label: str

    def sort_key(self) -> tuple[str, str, str]:
        return (self.source, self.label, self.target)


@dataclass(frozen=True)
class SiteGraph:
    root: str
    nodes: Mapping[str, GraphNode]
    edges: frozenset[LabeledEdge]

    def node(self, node_id: str) -> GraphNode:
        return self.nodes[node_id]

    def sorted_edges(self) -> list[LabeledEdge]:
        return sorted(self.edges, key=LabeledEdge.sort_key)

    def out_index(self) -> dict[str, list[LabeledEdge]]:
        index: dict[str, list[LabeledEdge]] = {nid: [] for nid in self.nodes}
        for edge in self.sorted_edges():
            index[edge.source].append(edge)
        return index

    def in_index(self) -> dict[str, list[LabeledEdge]]:
        index: dict[str, list[LabeledEdge]] = {nid: [] for nid in self.nodes}
        for edge in self.sorted_edges():
            index[edge.target].append(edge)
        return index


@dataclass
class ValidationReport:
    """Report-only findings; the graph itself is never modified."""

    dangling_edges: list[LabeledEdge] = field(default_factory=list)
    duplicate_exclusive: list[tuple[str, str]] = field(default_factory=list)
    empty_labels: list[LabeledEdge] = field(default_factory=list)
    missing_root: bool = False
    leaf_with_edges: list[str] = field(default_factory=list)
    unreachable: list[str] = field(default_factory=list)
    unresolved_continuations: list[LabeledEdge] = field(default_factory=list)

    @property
    def errors(self) -> list[str]:
        out = []
        if self.missing_root:
            out.append("root node missing from graph")
        for edge in self.dangling_edges:
            out.append(f"dangling edge {edge.source} -[{edge.label}]-> {edge.target}")
        for node_id, label in self.duplicate_exclusive:
            out.append(f"duplicate label {label!r} under exclusive node {node_id}")
        for edge in self.empty_labels:
            out.append(f"edge {edge.source} -> {edge.target} normalizes to an empty label")
        for node_id in self.leaf_with_edges:
            out.append(f"node {node_id} has leaf bindings and outgoing edges")
        return out

    @property
    def warnings(self) -> list[str]:
        out = [f"node {node_id} unreachable from root" for node_id in self.unreachable]
        for edge in self.unresolved_continuations:
            out.append(
                f"edge {edge.source} -> {edge.target} label {edge.raw_label!r} "
                "is an unresolved continuation"
            )
        return out

    @property
    def is_empty(self) -> bool:
        return not self.errors and not self.warnings

    def to_json(self) -> dict:
        return {"errors": self.errors, "warnings": self.warnings}


def _parse_record(obj: Mapping, line_no: int) -> Mapping:
    if not isinstance(obj, Mapping):
        raise IngestError(f"record {line_no}: expected an object")
    node_id = obj.get("id")
    url = obj.get("url")
    if not isinstance(node_id, str) or not node_id:
        raise IngestError(f"record {line_no}: missing or empty 'id'")
    if not isinstance(url, str) or not url.strip():
        raise IngestError(f"record {line_no} ({node_id}): missing or empty 'url'")
    kind = obj.get("kind", EXCLUSIVE)
    if kind not in BRANCH_KINDS:
        raise IngestError(f"record {line_no} ({node_id}): unknown kind {kind!r}")
    return obj


def ingest_crawl(
    records: Iterable[Mapping],
    config: NormalizationConfig = NormalizationConfig(),
) -> SiteGraph:
    """Build a SiteGraph from crawl-dump records.

    Record order is irrelevant: permuting the stream yields the same graph.
    Rejects duplicate node ids, edges to unknown ids, and anything other
    than exactly one root.
    """
    nodes: dict[str, GraphNode] = {}
    raw_out: dict[str, list[tuple[str, str]]] = {}
    roots: list[str] = []

    for line_no, obj in enumerate(records, start=1):
        obj = _parse_record(obj, line_no)
        node_id = obj["id"]
        if node_id in nodes:
            raise IngestError(f"duplicate node id {node_id!r}")
        out = obj.get("out", [])
        bindings = dict(obj.get("leaf_bindings", {}))
        if bindings and out:
            raise IngestError(
                f"node {node_id!r} has leaf_bindings but also outgoing edges"
            )
        nodes[node_id] = GraphNode(
            id=node_id,
            url=obj["url"].strip(),
            branch_kind=obj.get("kind", EXCLUSIVE),
            annotations=dict(obj.get("annotations", {})),
            leaf_bindings=bindings,
        )
        raw_out[node_id] = [(e["label"], e["target"]) for e in out]
        if obj.get("root"):
            roots.append(node_id)

    if not roots:
        raise IngestError("no root record in crawl dump")
    if len(roots) > 1:
        raise IngestError(f"multiple root records: {', '.join(sorted(roots))}")

    edges = set()
    for source, out in raw_out.items():
        for raw_label, target in out:
            if target not in nodes:
                raise IngestError(
                    f"edge from {source!r} points to unknown id {target!r}"
                )
            resolved, _ok = resolve_continuation(raw_label, config)
            edges.add(
                LabeledEdge(
                    source=source,
                    target=target,
                    raw_label=resolved,
                    label=normalize_label(resolved, config),
                )
            )

    return SiteGraph(root=roots[0], nodes=nodes, edges=frozenset(edges))


def read_crawl_file(path) -> Iterator[dict]:
    """Yield parsed records from a JSON-lines crawl dump."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"line {line_no}: invalid JSON ({exc})") from exc


def validate(graph: SiteGraph) -> ValidationReport:
    """Check SiteGraph invariants; returns findings without modifying the graph."""
    report = ValidationReport()
    if graph.root not in graph.nodes:
        report.missing_root = True

    seen_exclusive: dict[tuple[str, str], set[str]] = {}
    for edge in graph.sorted_edges():
        if edge.source not in graph.nodes or edge.target not in graph.nodes:
            report.dangling_edges.append(edge)
            continue
        if not edge.label:
            report.empty_labels.append(edge)
        if edge.raw_label.rstrip().endswith(CONTINUATION_MARKER):
            report.unresolved_continuations.append(edge)
        if graph.nodes[edge.source].branch_kind == EXCLUSIVE:
            targets = seen_exclusive.setdefault((edge.source, edge.label), set())
            targets.add(edge.target)
    for (node_id, label), targets in sorted(seen_exclusive.items()):
        if len(targets) > 1:
            report.duplicate_exclusive.append((node_id, label))

    out_index = graph.out_index()
    for node_id in sorted(graph.nodes):
        node = graph.nodes[node_id]
        if node.leaf_bindings and out_index[node_id]:
            report.leaf_with_edges.append(node_id)

    if graph.root in graph.nodes:
        seen = {graph.root}
        frontier = [graph.root]
        while frontier:
            current = frontier.pop()
            for edge in out_index.get(current, ()):
                if edge.target in graph.nodes and edge.target not in seen:
                    seen.add(edge.target)
                    frontier.append(edge.target)
        report.unreachable = sorted(set(graph.nodes) - seen)

    return report


def graph_to_json(graph: SiteGraph) -> dict:
    return {
        "root": graph.root,
        "nodes": [
            {
                "id": node.id,
                "url": node.url,
                "kind": node.branch_kind,
                "annotations": dict(node.annotations),
                "leaf_bindings": dict(node.leaf_bindings),
            }
            for node_id, node in sorted(graph.nodes.items())
        ],
        "edges": [
            {
                "source": e.source,
                "target": e.target,
                "raw_label": e.raw_label,
                "label": e.label,
            }
            for e in graph.sorted_edges()
        ],
    }


def graph_from_json(obj: Mapping) -> SiteGraph:
    nodes = {
        n["id"]: GraphNode(
            id=n["id"],
            url=n["url"],
            branch_kind=n.get("kind", EXCLUSIVE),
            annotations=dict(n.get("annotations", {})),
            leaf_bindings=dict(n.get("leaf_bindings", {})),
        )
        for n in obj["nodes"]
    }
    edges = frozenset(
        LabeledEdge(
            source=e["source"],
            target=e["target"],
            raw_label=e.get("raw_label", e["label"]),
            label=e["label"],
        )
        for e in obj["edges"]
    )
    return SiteGraph(root=obj["root"], nodes=nodes, edges=edges)


def load_graph(path) -> SiteGraph:
    with open(path, encoding="utf-8") as fh:
        return graph_from_json(json.load(fh))


def save_graph(graph: SiteGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_json(graph), fh, indent=2, sort_keys=True)
        fh.write("\n")
