"""Schema compression: duplicate-page factoring, type minimization, subsumption.

Three stages, each path-preserving:

1. dedup_by_url    — merge nodes that are the same physical page.
2. minimize_types  — coarsest partition with identical labeled in/out
                     connectivity (iterative refinement to fixpoint), then
                     collapse each class to one node.
3. subsume_composites — drop a node whose labeled out-edges are exactly the
                     union of a few sibling types', rewiring its in-edges.

The exact (path-preserving) variant is always applied; the lossy analysis
only reports near-merges, it never applies them.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Mapping

from .graph import INCLUSIVE, GraphNode, LabeledEdge, SiteGraph, validate

log = logging.getLogger(__name__)


class MergeError(ValueError):
    """Nodes that must merge cannot (conflicting structure); names the url."""


class MiningError(ValueError):
    """Input graph failed validation before mining."""


@dataclass
class MiningReport:
    nodes_raw: int
    nodes_after_dedup: int
    nodes_after_typing: int
    nodes_after_subsumption: int
    merged_groups: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    subsumed: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    near_merges: list[tuple[str, str]] = field(default_factory=list)
    elapsed_seconds: float = 0.0

    @property
    def compression_ratio(self) -> float:
        if self.nodes_raw == 0:
            return 0.0
        return (self.nodes_raw - self.nodes_after_subsumption) / self.nodes_raw

    @property
    def compression_percent(self) -> str:
        return f"{round(self.compression_ratio * 100)}%"

    def to_json(self) -> dict:
        return {
            "nodes_raw": self.nodes_raw,
            "nodes_after_dedup": self.nodes_after_dedup,
            "nodes_after_typing": self.nodes_after_typing,
            "nodes_after_subsumption": self.nodes_after_subsumption,
            "compression_ratio": self.compression_ratio,
            "compression_percent": self.compression_percent,
            "merged_groups": [
                {"representative": rep, "members": list(members)}
                for rep, members in self.merged_groups
            ],
            "subsumed": [
                {"node": node, "cover": list(cover)} for node, cover in self.subsumed
            ],
            "near_merges": [list(pair) for pair in self.near_merges],
            "elapsed_seconds": self.elapsed_seconds,
        }


def _rebuild(
    graph: SiteGraph,
    representative: Mapping[str, str],
    new_nodes: Mapping[str, GraphNode],
) -> SiteGraph:
    """Re-target every edge through the representative map and drop duplicates."""
    edges = frozenset(
        LabeledEdge(
            source=representative[e.source],
            target=representative[e.target],
            raw_label=e.raw_label,
            label=e.label,
        )
        for e in graph.edges
        if e.source in representative and e.target in representative
    )
    return SiteGraph(root=representative[graph.root], nodes=dict(new_nodes), edges=edges)


def dedup_by_url(graph: SiteGraph) -> tuple[SiteGraph, list[tuple[str, tuple[str, ...]]]]:
    """Merge all nodes sharing a url into one node.

    Later members (by node id) win per annotation/binding key; collisions are
    logged. Conflicting branch kinds, or a leaf-bound member merged with an
    out-edged one, abort with MergeError naming the url.
    """
    by_url: dict[str, list[str]] = {}
    for node_id in sorted(graph.nodes):
        by_url.setdefault(graph.nodes[node_id].url.strip(), []).append(node_id)

    out_index = graph.out_index()
    representative: dict[str, str] = {}
    new_nodes: dict[str, GraphNode] = {}
    groups: list[tuple[str, tuple[str, ...]]] = []

    for url in sorted(by_url):
        members = by_url[url]
        rep_id = members[0]
        kinds = {graph.nodes[m].branch_kind for m in members}
        if len(kinds) > 1:
            raise MergeError(f"nodes sharing url {url!r} disagree on branch kind")
        has_bindings = any(graph.nodes[m].leaf_bindings for m in members)
        has_edges = any(out_index[m] for m in members)
        if has_bindings and has_edges and len(members) > 1:
            raise MergeError(
                f"nodes sharing url {url!r} mix leaf bindings with outgoing edges"
            )
        annotations: dict[str, str] = {}
        bindings: dict[str, str] = {}
        for member in members:
            node = graph.nodes[member]
            for key, value in node.annotations.items():
                if key in annotations and annotations[key] != value:
                    log.warning(
                        "url %s: annotation %r collision, keeping later value", url, key
                    )
                annotations[key] = value
            for key, value in node.leaf_bindings.items():
                if key in bindings and bindings[key] != value:
                    log.warning(
                        "url %s: binding %r collision, keeping later value", url, key
                    )
                bindings[key] = value
            representative[member] = rep_id
        new_nodes[rep_id] = GraphNode(
            id=rep_id,
            url=url,
            branch_kind=graph.nodes[rep_id].branch_kind,
            annotations=annotations,
            leaf_bindings=bindings,
        )
        if len(members) > 1:
            groups.append((rep_id, tuple(members)))

    return _rebuild(graph, representative, new_nodes), groups


def _initial_partition_key(node: GraphNode, is_leaf: bool):
    if is_leaf:
        return (
            "leaf",
            frozenset(node.leaf_bindings.items()),
            frozenset(node.annotations.keys()),
        )
    return ("internal", node.branch_kind)


def _refine_partition(graph: SiteGraph) -> dict[str, str]:
    """Iterate signature splitting to the coarsest stable partition.

    Class ids are the lexicographically smallest member id, so the result is
    deterministic. Nodes in one class share the exact set of
    (label, target-class) out-pairs and (label, source-class) in-pairs.
    """
    out_index = graph.out_index()
    in_index = graph.in_index()

    blocks: dict[object, list[str]] = {}
    for node_id in sorted(graph.nodes):
        node = graph.nodes[node_id]
        key = _initial_partition_key(node, is_leaf=not out_index[node_id])
        blocks.setdefault(key, []).append(node_id)

    class_of = {}
    for members in blocks.values():
        rep = min(members)
        for member in members:
            class_of[member] = rep

    while True:
        new_blocks: dict[object, list[str]] = {}
        for node_id in sorted(graph.nodes):
            signature = (
                class_of[node_id],
                frozenset((e.label, class_of[e.target]) for e in out_index[node_id]),
                frozenset((e.label, class_of[e.source]) for e in in_index[node_id]),
            )
            new_blocks.setdefault(signature, []).append(node_id)
        new_class_of = {}
        for members in new_blocks.values():
            rep = min(members)
            for member in members:
                new_class_of[member] = rep
        if new_class_of == class_of:
            return class_of
        class_of = new_class_of


def minimize_types(
    graph: SiteGraph,
) -> tuple[SiteGraph, list[tuple[str, tuple[str, ...]]]]:
    """Collapse each equivalence class of the coarsest stable partition.

    Leaves start in a common block only when their bindings maps are equal
    and their annotation key sets agree; internal nodes only when branch
    kinds agree. The class containing the root keeps the root's id. Merged
    members' annotations survive under key@member_id.
    """
    class_of = _refine_partition(graph)

    members_of: dict[str, list[str]] = {}
    for node_id in sorted(graph.nodes):
        members_of.setdefault(class_of[node_id], []).append(node_id)

    representative: dict[str, str] = {}
    new_nodes: dict[str, GraphNode] = {}
    groups: list[tuple[str, tuple[str, ...]]] = []
    for class_rep in sorted(members_of):
        members = members_of[class_rep]
        rep_id = graph.root if graph.root in members else members[0]
        rep_node = graph.nodes[rep_id]
        annotations = dict(rep_node.annotations)
        for member in members:
            if member == rep_id:
                continue
            for key, value in graph.nodes[member].annotations.items():
                annotations[f"{key}@{member}"] = value
        for member in members:
            representative[member] = rep_id
        new_nodes[rep_id] = GraphNode(
            id=rep_id,
            url=rep_node.url,
            branch_kind=rep_node.branch_kind,
            annotations=annotations,
            leaf_bindings=dict(rep_node.leaf_bindings),
        )
        if len(members) > 1:
            groups.append((rep_id, tuple(members)))

    return _rebuild(graph, representative, new_nodes), groups


def _min_depths(graph: SiteGraph) -> dict[str, int]:
    out_index = graph.out_index()
    depths = {graph.root: 0}
    frontier = [graph.root]
    while frontier:
        next_frontier = []
        for node_id in frontier:
            for edge in out_index[node_id]:
                if edge.target not in depths:
                    depths[edge.target] = depths[node_id] + 1
                    next_frontier.append(edge.target)
        frontier = next_frontier
    return depths


def subsume_composites(
    graph: SiteGraph, max_cover: int = 2
) -> tuple[SiteGraph, list[tuple[str, tuple[str, ...]]]]:
    """Remove nodes expressible as the exact union of other types.

    A candidate's labeled (label, target) out-pairs must equal the union of
    at most max_cover other nodes' at the same depth with the same branch
    kind; its in-edges are re-attributed to the cover. Multi-node covers are
    only legal in fully inclusive surroundings (an exclusive parent cannot
    grow duplicate labels), which is exactly the condition under which the
    root-to-leaf label path set is preserved.
    """
    nodes = dict(graph.nodes)
    edges = set(graph.edges)
    removed: list[tuple[str, tuple[str, ...]]] = []

    changed = True
    while changed:
        changed = False
        depths = _min_depths(SiteGraph(root=graph.root, nodes=nodes, edges=frozenset(edges)))
        in_edges: dict[str, list[LabeledEdge]] = {nid: [] for nid in nodes}
        out_sets: dict[str, set] = {nid: set() for nid in nodes}
        for edge in edges:
            out_sets[edge.source].add((edge.label, edge.target))
            in_edges[edge.target].append(edge)
        out_pairs = {nid: frozenset(pairs) for nid, pairs in out_sets.items()}

        for candidate in sorted(nodes):
            if candidate == graph.root or not out_pairs[candidate]:
                continue
            if candidate not in depths:
                continue
            if any(target == candidate for _label, target in out_pairs[candidate]):
                continue
            kind = nodes[candidate].branch_kind
            pool = [
                other
                for other in sorted(nodes)
                if other != candidate
                and other != graph.root
                and out_pairs[other]
                and depths.get(other) == depths[candidate]
                and nodes[other].branch_kind == kind
                and out_pairs[other] <= out_pairs[candidate]
            ]
            cover = None
            for size in range(1, max_cover + 1):
                for combo in itertools.combinations(pool, size):
                    union = frozenset().union(*(out_pairs[c] for c in combo))
                    if union == out_pairs[candidate]:
                        cover = combo
                        break
                if cover:
                    break
            if not cover:
                continue
            if len(cover) > 1:
                parents = {e.source for e in in_edges[candidate]}
                if kind != INCLUSIVE or any(
                    nodes[p].branch_kind != INCLUSIVE for p in parents
                ):
                    continue

            for edge in in_edges[candidate]:
                edges.discard(edge)
                for target in cover:
                    edges.add(
                        LabeledEdge(
                            source=edge.source,
                            target=target,
                            raw_label=edge.raw_label,
                            label=edge.label,
                        )
                    )
            edges = {e for e in edges if e.source != candidate}
            del nodes[candidate]
            removed.append((candidate, tuple(cover)))
            changed = True
            break

    return SiteGraph(root=graph.root, nodes=nodes, edges=frozenset(edges)), removed


def _near_merges(graph: SiteGraph) -> list[tuple[str, str]]:
    """Pairs that would merge under out-only agreement but not under in+out."""
    class_of = _refine_partition(graph)
    out_index = graph.out_index()
    by_out: dict[tuple, list[str]] = {}
    for node_id in sorted(graph.nodes):
        if not out_index[node_id]:
            continue
        key = (
            graph.nodes[node_id].branch_kind,
            frozenset((e.label, class_of[e.target]) for e in out_index[node_id]),
        )
        by_out.setdefault(key, []).append(node_id)
    pairs = []
    for members in by_out.values():
        for a, b in itertools.combinations(members, 2):
            if class_of[a] != class_of[b]:
                pairs.append((a, b))
    return pairs


def mine(
    graph: SiteGraph, max_cover: int = 2, lossy_report: bool = False
) -> tuple[SiteGraph, MiningReport]:
    """Run all three stages in order and report per-stage node counts."""
    report = validate(graph)
    if report.errors:
        raise MiningError("graph failed validation: " + "; ".join(report.errors))

    started = time.perf_counter()
    nodes_raw = len(graph.nodes)

    deduped, dedup_groups = dedup_by_url(graph)
    typed, type_groups = minimize_types(deduped)
    final, subsumed = subsume_composites(typed, max_cover=max_cover)

    mining_report = MiningReport(
        nodes_raw=nodes_raw,
        nodes_after_dedup=len(deduped.nodes),
        nodes_after_typing=len(typed.nodes),
        nodes_after_subsumption=len(final.nodes),
        merged_groups=dedup_groups + type_groups,
        subsumed=subsumed,
        near_merges=_near_merges(typed) if lossy_report else [],
        elapsed_seconds=time.perf_counter() - started,
    )
    return final, mining_report
