import json
import random

import pytest

from persite import (
    Arm,
    GraphNode,
    LabeledEdge,
    Leaf,
    ProgramFormatError,
    Selector,
    SiteGraph,
    build_program,
    count_nodes,
    deserialize,
    enumerate_paths,
    guard_variables,
    render_pseudo,
    serialize,
    structurally_equal,
)

import helpers


def test_senator_program_shape(senator_program):
    assert isinstance(senator_program, Selector)
    assert senator_program.kind == "exclusive"
    assert [arm.guard for arm in senator_program.arms] == ["representatives", "senators"]
    senators = senator_program.arms[1].body
    assert [arm.guard for arm in senators.arms] == ["dem", "ind", "rep"]
    dem = senators.arms[0].body
    assert [arm.guard for arm in dem.arms] == ["ca", "ny"]
    ca_leaf = dem.arms[0].body
    assert isinstance(ca_leaf, Leaf)
    assert ca_leaf.url.endswith("/senators/dem/ca")


def test_single_node_graph_builds_leaf():
    graph = SiteGraph(
        root="only",
        nodes={"only": GraphNode(id="only", url="https://x/", leaf_bindings={"URL": "https://x/"})},
        edges=frozenset(),
    )
    program, refs = build_program(graph)
    assert isinstance(program, Leaf)
    assert refs == []


def test_back_edge_becomes_cross_reference():
    rng = random.Random(3)
    base = helpers.random_site_graph(rng, n_nodes=20, extra_edge_prob=0.0)
    # add an edge from some deep node back to the root
    deep = sorted(set(base.nodes) - {base.root})[-1]
    back = LabeledEdge(source=deep, target=base.root, raw_label="back", label="back")
    cyclic = SiteGraph(root=base.root, nodes=base.nodes, edges=base.edges | {back})
    program, refs = build_program(cyclic)
    assert refs == [type(refs[0])(source=deep, target=base.root, label="back")]
    got = {guards for guards, _leaf in enumerate_paths(program)}
    assert got == helpers.graph_label_path_set(cyclic)


def test_node_with_only_back_edges_degrades_to_leaf():
    nodes = {
        "r": GraphNode(id="r", url="u:r", branch_kind="exclusive"),
        "mid": GraphNode(id="mid", url="u:mid", branch_kind="exclusive"),
    }
    edges = frozenset(
        {
            LabeledEdge("r", "mid", "down", "down"),
            LabeledEdge("mid", "r", "up", "up"),
        }
    )
    program, refs = build_program(SiteGraph(root="r", nodes=nodes, edges=edges))
    assert len(refs) == 1
    leaf = program.arms[0].body
    assert isinstance(leaf, Leaf) and leaf.url == "u:mid"


def test_shared_node_becomes_shared_reference():
    nodes = {
        "r": GraphNode(id="r", url="u:r", branch_kind="inclusive"),
        "a": GraphNode(id="a", url="u:a", branch_kind="inclusive"),
        "b": GraphNode(id="b", url="u:b", branch_kind="inclusive"),
        "shared": GraphNode(id="shared", url="u:shared"),
    }
    edges = frozenset(
        {
            LabeledEdge("r", "a", "x", "x"),
            LabeledEdge("r", "b", "y", "y"),
            LabeledEdge("a", "shared", "z", "z"),
            LabeledEdge("b", "shared", "z", "z"),
        }
    )
    program, _refs = build_program(SiteGraph(root="r", nodes=nodes, edges=edges))
    body_a = program.arms[0].body.arms[0].body
    body_b = program.arms[1].body.arms[0].body
    assert body_a is body_b
    # both paths enumerate distinctly
    assert [g for g, _ in enumerate_paths(program)] == [("x", "z"), ("y", "z")]


def test_duplicate_inclusive_labels_merge_into_one_arm():
    nodes = {
        "r": GraphNode(id="r", url="u:r", branch_kind="inclusive"),
        "a": GraphNode(id="a", url="u:a"),
        "b": GraphNode(id="b", url="u:b"),
    }
    edges = frozenset(
        {
            LabeledEdge("r", "a", "x", "x"),
            LabeledEdge("r", "b", "x", "x"),
        }
    )
    program, _refs = build_program(SiteGraph(root="r", nodes=nodes, edges=edges))
    assert len(program.arms) == 1
    inner = program.arms[0].body
    assert isinstance(inner, Selector) and inner.kind == "inclusive"
    assert [arm.guard for arm in inner.arms] == [None, None]
    assert {g for g, _ in enumerate_paths(program)} == {("x",)}


def test_enumerate_leaf_alone():
    leaf = Leaf(url="u:x")
    assert enumerate_paths(leaf) == [((), leaf)]
    assert enumerate_paths(None) == []


def test_enumerate_senator_paths(senator_program):
    paths = enumerate_paths(senator_program)
    assert len(paths) == 8
    sequences = {guards for guards, _leaf in paths}
    assert ("senators", "dem", "ca") in sequences
    assert ("representatives", "dem", "ny") in sequences


def test_build_deterministic(senator_graph):
    first, _ = build_program(senator_graph)
    second, _ = build_program(senator_graph)
    assert first is not second
    assert first == second
    assert structurally_equal(first, second)


def test_exclusive_guards_distinct_on_all_builds():
    rng = random.Random(13)
    for _ in range(25):
        graph = helpers.random_site_graph(rng, n_nodes=30)
        program, _refs = build_program(graph)

        def check(node, seen):
            if id(node) in seen or isinstance(node, Leaf):
                return
            seen.add(id(node))
            if node.kind == "exclusive":
                guards = [a.guard for a in node.arms]
                assert len(guards) == len(set(guards))
            for arm in node.arms:
                check(arm.body, seen)

        check(program, set())


def test_round_trip_identity(senator_program):
    data = serialize(senator_program)
    again = deserialize(data)
    assert again == senator_program
    assert serialize(again) == data


def test_corrupt_bytes_rejected():
    with pytest.raises(ProgramFormatError, match="not a serialized program"):
        deserialize(b"{not json")
    with pytest.raises(ProgramFormatError, match="root"):
        deserialize(b"{}")


def test_unknown_kind_rejected():
    obj = {"root": "n0", "nodes": {"n0": {"type": "selector", "kind": "mystery", "arms": []}}}
    with pytest.raises(ProgramFormatError, match="unknown kind"):
        deserialize(json.dumps(obj).encode())


def test_cyclic_reference_rejected():
    obj = {
        "root": "n0",
        "nodes": {
            "n0": {
                "type": "selector",
                "kind": "exclusive",
                "arms": [{"guard": "x", "body": "n0"}],
            }
        },
    }
    with pytest.raises(ProgramFormatError, match="cyclic"):
        deserialize(json.dumps(obj).encode())


def test_shared_node_serialized_once():
    shared = Leaf(url="u:shared")
    program = Selector(
        kind="inclusive",
        arms=(Arm(guard="x", body=shared), Arm(guard="y", body=shared)),
    )
    obj = json.loads(serialize(program))
    leaf_entries = [n for n in obj["nodes"].values() if n["type"] == "leaf"]
    assert len(leaf_entries) == 1
    again = deserialize(serialize(program))
    assert again.arms[0].body is again.arms[1].body


def test_guard_variables(senator_program):
    assert guard_variables(senator_program) == {
        "senators",
        "representatives",
        "dem",
        "rep",
        "ind",
        "ca",
        "ny",
    }


def test_count_nodes(senator_program):
    # 5 selectors + 8 leaves
    assert count_nodes(senator_program) == 13


def test_render_pseudo_golden(senator_program):
    expected = """\
if (representatives)
    if (dem)
        if (ca)
            URL = "https://congress.example/representatives/dem/ca"
        else if (ny)
            URL = "https://congress.example/representatives/dem/ny"
    else if (ind)
        URL = "https://congress.example/representatives/ind"
    else if (rep)
        URL = "https://congress.example/representatives/rep"
else if (senators)
    if (dem)
        if (ca)
            URL = "https://congress.example/senators/dem/ca"
        else if (ny)
            URL = "https://congress.example/senators/dem/ny"
    else if (ind)
        URL = "https://congress.example/senators/ind"
    else if (rep)
        URL = "https://congress.example/senators/rep"
"""
    assert render_pseudo(senator_program) == expected


def test_random_round_trips():
    rng = random.Random(29)
    for _ in range(25):
        program = helpers.random_program(rng)
        again = deserialize(serialize(program))
        assert again == program
        assert count_nodes(again) == count_nodes(program)


def test_compiled_paths_match_graph_paths_randomized():
    rng = random.Random(37)
    for _ in range(40):
        graph = helpers.random_site_graph(rng, n_nodes=40, extra_edge_prob=0.2)
        program, _refs = build_program(graph)
        got = {guards for guards, _leaf in enumerate_paths(program)}
        assert got == helpers.graph_label_path_set(graph)


def test_build_after_mining_merges_duplicate_labels(catalog_graph):
    from persite import mine

    mined, _report = mine(catalog_graph)
    program, refs = build_program(mined)
    assert refs == []
    got = {guards for guards, _leaf in enumerate_paths(program)}
    assert got == helpers.graph_label_path_set(mined)
    # the rewired section keeps one arm per label, fanning out underneath
    b_arm = next(arm for arm in program.arms if arm.guard == "b")
    (k_arm,) = b_arm.body.arms
    assert k_arm.guard == "k"
    assert [a.guard for a in k_arm.body.arms] == [None, None]
