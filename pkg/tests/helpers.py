"""Shared fixture loaders, random generators, and independent oracles.

The oracles here deliberately re-derive results by a different route than
the library (one-split-at-a-time partition refinement, explicit path
walks) so the main implementations are checked against something that does
not share their code.
"""

from __future__ import annotations

import json
import os
import random

from persite import (
    Arm,
    Assignment,
    GraphNode,
    LabeledEdge,
    Leaf,
    NormalizationConfig,
    Selector,
    SiteGraph,
    Truth,
    build_program,
    guard_variables,
    ingest_crawl,
    read_crawl_file,
)

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


def fixture_path(*parts: str) -> str:
    return os.path.join(FIXTURES, *parts)


def load_fixture_graph(records_name: str, config_name: str) -> SiteGraph:
    config = NormalizationConfig.load(fixture_path(config_name))
    return ingest_crawl(read_crawl_file(fixture_path(records_name)), config)


def senator_graph() -> SiteGraph:
    return load_fixture_graph("senators.jsonl", "senators_norm.json")


def senator_program():
    program, _refs = build_program(senator_graph())
    return program


def bev_graph() -> SiteGraph:
    return load_fixture_graph("bev.jsonl", "bev_norm.json")


def catalog_graph() -> SiteGraph:
    return load_fixture_graph("catalog.jsonl", "catalog_norm.json")


def cascade_graph(stage: str) -> SiteGraph:
    config = NormalizationConfig.load(fixture_path("cascade", "norm.json"))
    return ingest_crawl(
        read_crawl_file(fixture_path("cascade", f"{stage}.jsonl")), config
    )


# ---------------------------------------------------------------------------
# graph-level path oracles


def graph_label_paths(graph: SiteGraph) -> list[tuple[str, ...]]:
    """Multiset (sorted list) of acyclic root-to-leaf label sequences."""
    out_index = graph.out_index()
    acc: list[tuple[str, ...]] = []

    def walk(node_id: str, prefix: tuple[str, ...], on_path: frozenset) -> None:
        edges = [e for e in out_index[node_id] if e.target not in on_path]
        if not out_index[node_id]:
            acc.append(prefix)
            return
        if not edges:
            acc.append(prefix)
            return
        for edge in edges:
            walk(edge.target, prefix + (edge.label,), on_path | {edge.target})

    walk(graph.root, (), frozenset({graph.root}))
    return sorted(acc)


def graph_label_path_set(graph: SiteGraph) -> set[tuple[str, ...]]:
    return set(graph_label_paths(graph))


# ---------------------------------------------------------------------------
# independent partition-refinement oracle (one split at a time)


def naive_partition_oracle(graph: SiteGraph) -> set[frozenset]:
    out_index = graph.out_index()
    in_index = graph.in_index()

    def initial_key(node_id: str):
        node = graph.nodes[node_id]
        if not out_index[node_id]:
            return (
                "leaf",
                tuple(sorted(node.leaf_bindings.items())),
                tuple(sorted(node.annotations.keys())),
            )
        return ("internal", node.branch_kind)

    by_key: dict = {}
    for node_id in sorted(graph.nodes):
        by_key.setdefault(initial_key(node_id), []).append(node_id)
    blocks: list[list[str]] = [sorted(members) for members in by_key.values()]

    while True:
        class_of = {}
        for index, block in enumerate(blocks):
            for member in block:
                class_of[member] = index
        split_happened = False
        for index, block in enumerate(blocks):
            groups: dict = {}
            for member in block:
                signature = (
                    frozenset(
                        (e.label, class_of[e.target]) for e in out_index[member]
                    ),
                    frozenset(
                        (e.label, class_of[e.source]) for e in in_index[member]
                    ),
                )
                groups.setdefault(signature, []).append(member)
            if len(groups) > 1:
                blocks.pop(index)
                blocks.extend(sorted(g) for g in groups.values())
                split_happened = True
                break
        if not split_happened:
            return {frozenset(block) for block in blocks}


def partition_from_groups(graph: SiteGraph, groups) -> set[frozenset]:
    """Rebuild the full partition implied by mining's merged_groups."""
    grouped = set()
    parts = set()
    for _rep, members in groups:
        parts.add(frozenset(members))
        grouped.update(members)
    for node_id in graph.nodes:
        if node_id not in grouped:
            parts.add(frozenset({node_id}))
    return parts


# ---------------------------------------------------------------------------
# random instances


LABEL_POOL = [f"l{i}" for i in range(12)]


def random_site_graph(
    rng: random.Random,
    n_nodes: int = 30,
    inclusive_prob: float = 0.5,
    extra_edge_prob: float = 0.15,
) -> SiteGraph:
    """Random DAG site graph: tree skeleton plus forward cross-edges."""
    ids = [f"n{i:03d}" for i in range(n_nodes)]
    # pool must outgrow the largest possible fan-out
    pool = LABEL_POOL if n_nodes <= len(LABEL_POOL) else [f"l{i}" for i in range(n_nodes)]
    nodes = {}
    edges = set()
    children: dict[str, set[str]] = {nid: set() for nid in ids}

    def fresh_label(parent: str) -> str:
        used = children[parent]
        while True:
            label = pool[rng.randrange(len(pool))]
            if label not in used:
                return label

    for index, node_id in enumerate(ids):
        kind = "inclusive" if rng.random() < inclusive_prob else "exclusive"
        nodes[node_id] = GraphNode(
            id=node_id, url=f"https://rand.example/{node_id}", branch_kind=kind
        )
        if index > 0:
            parent = ids[rng.randrange(index)]
            label = fresh_label(parent)
            children[parent].add(label)
            edges.add(
                LabeledEdge(source=parent, target=node_id, raw_label=label, label=label)
            )

    for index, node_id in enumerate(ids):
        if index == 0 or rng.random() >= extra_edge_prob:
            continue
        source = ids[rng.randrange(index)]
        if len(children[source]) >= len(pool):
            continue
        label = fresh_label(source)
        children[source].add(label)
        edges.add(
            LabeledEdge(source=source, target=node_id, raw_label=label, label=label)
        )

    # leaves sometimes carry bindings
    out_sources = {e.source for e in edges}
    final_nodes = {}
    for node_id, node in nodes.items():
        if node_id not in out_sources and rng.random() < 0.5:
            final_nodes[node_id] = GraphNode(
                id=node_id,
                url=node.url,
                branch_kind=node.branch_kind,
                leaf_bindings={"URL": node.url},
            )
        else:
            final_nodes[node_id] = node
    return SiteGraph(root=ids[0], nodes=final_nodes, edges=frozenset(edges))


def plant_duplicate_leaves(
    rng: random.Random, graph: SiteGraph, count: int
) -> SiteGraph:
    """Add `count` new nodes that duplicate existing leaf urls."""
    out_index = graph.out_index()
    leaves = [nid for nid in sorted(graph.nodes) if not out_index[nid]]
    internals = [nid for nid in sorted(graph.nodes) if out_index[nid]]
    nodes = dict(graph.nodes)
    edges = set(graph.edges)
    used: dict[str, set[str]] = {}
    for edge in edges:
        used.setdefault(edge.source, set()).add(edge.label)

    for i in range(count):
        original = graph.nodes[rng.choice(leaves)]
        dup_id = f"dup{i:03d}"
        nodes[dup_id] = GraphNode(
            id=dup_id,
            url=original.url,
            branch_kind=original.branch_kind,
            annotations=dict(original.annotations),
            leaf_bindings=dict(original.leaf_bindings),
        )
        parent = rng.choice(internals)
        free = [l for l in LABEL_POOL if l not in used.setdefault(parent, set())]
        if not free:
            continue
        label = rng.choice(free)
        used[parent].add(label)
        edges.add(LabeledEdge(source=parent, target=dup_id, raw_label=label, label=label))
    return SiteGraph(root=graph.root, nodes=nodes, edges=frozenset(edges))


VAR_POOL = [f"v{i}" for i in range(10)]


def random_program(
    rng: random.Random,
    max_depth: int = 5,
    max_width: int = 3,
    share_prob: float = 0.15,
    max_nodes: int = 200,
):
    counter = [0]
    built_by_depth: dict[int, list] = {}

    def leaf():
        counter[0] += 1
        n = counter[0]
        bindings = {"id": str(n)} if rng.random() < 0.5 else {}
        return Leaf(url=f"https://rand.example/page/{n}", bindings=bindings)

    def gen(depth: int):
        if depth == 0 or rng.random() < 0.25:
            return leaf()
        shallow = [p for d, pool in built_by_depth.items() if d <= depth for p in pool]
        if shallow and rng.random() < share_prob:
            return rng.choice(shallow)
        width = rng.randint(2, max_width)
        kind = "exclusive" if rng.random() < 0.5 else "inclusive"
        guards = rng.sample(VAR_POOL, width)
        node = Selector(
            kind=kind,
            arms=tuple(Arm(guard=g, body=gen(depth - 1)) for g in sorted(guards)),
        )
        built_by_depth.setdefault(depth - 1, []).append(node)
        return node

    from persite import count_nodes

    for _attempt in range(50):
        counter[0] = 0
        built_by_depth.clear()
        program = gen(max_depth)
        if isinstance(program, Selector) and count_nodes(program) <= max_nodes:
            return program
    return program  # pragma: no cover - generator parameters keep this unreachable


def random_assignment(
    rng: random.Random, variables, p_true: float = 0.3, p_false: float = 0.3
) -> Assignment:
    values = {}
    for var in sorted(variables):
        roll = rng.random()
        if roll < p_true:
            values[var] = Truth.TRUE
        elif roll < p_true + p_false:
            values[var] = Truth.FALSE
    return Assignment(values)


def random_program_assignment(rng: random.Random, program) -> Assignment:
    return random_assignment(rng, guard_variables(program))


def unfolded_count(program) -> int:
    """Tree-node count (shared nodes counted once per occurrence)."""
    if program is None:
        return 0
    if isinstance(program, Leaf):
        return 1
    return 1 + sum(unfolded_count(arm.body) for arm in program.arms)


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")
