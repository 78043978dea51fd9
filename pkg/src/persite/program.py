"""Branching-program IR compiled from a mined site graph.

A Program is a rooted DAG of Selectors (guarded arms, exclusive else-if
chains or inclusive parallel ifs) and Leaves (url + variable bindings).
Cycles never enter the IR: edges that would close one are dropped during
compilation and reported as CrossReferences. Arms carry guard=None only in
residuals, marking branches an evaluation has already committed to.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from .graph import EXCLUSIVE, INCLUSIVE, SiteGraph


class ProgramFormatError(ValueError):
    """Serialized program rejected (bad JSON, unknown kind, cyclic refs)."""


@dataclass(frozen=True, eq=False)
class Leaf:
    url: str
    bindings: Mapping[str, str] = field(default_factory=dict)
    annotations: Mapping[str, str] = field(default_factory=dict)

    __hash__ = object.__hash__

    def __eq__(self, other):
        return structurally_equal(self, other)


@dataclass(frozen=True, eq=False)
class Arm:
    guard: Optional[str]
    body: "Program"

    __hash__ = object.__hash__

    def __eq__(self, other):
        return structurally_equal(self, other)


@dataclass(frozen=True, eq=False)
class Selector:
    kind: str
    arms: tuple[Arm, ...]
    annotations: Mapping[str, str] = field(default_factory=dict)

    __hash__ = object.__hash__

    def __eq__(self, other):
        return structurally_equal(self, other)


Program = Union[Selector, Leaf]


@dataclass(frozen=True)
class CrossReference:
    """A graph edge omitted from the DAG because it would close a cycle."""

    source: str
    target: str
    label: str


def structurally_equal(a, b) -> bool:
    """Tree equality over possibly-shared programs, linear via result memo."""
    memo: dict[tuple[int, int], bool] = {}

    def eq(x, y) -> bool:
        if x is y:
            return True
        if type(x) is not type(y):
            return False
        key = (id(x), id(y))
        cached = memo.get(key)
        if cached is not None:
            return cached
        # assume equal while in progress; sound on DAGs and terminates cycles
        memo[key] = True
        if isinstance(x, Leaf):
            result = (
                x.url == y.url
                and dict(x.bindings) == dict(y.bindings)
                and dict(x.annotations) == dict(y.annotations)
            )
        elif isinstance(x, Arm):
            result = x.guard == y.guard and eq(x.body, y.body)
        elif isinstance(x, Selector):
            result = (
                x.kind == y.kind
                and dict(x.annotations) == dict(y.annotations)
                and len(x.arms) == len(y.arms)
                and all(eq(p, q) for p, q in zip(x.arms, y.arms))
            )
        else:
            result = x == y
        memo[key] = result
        return result

    return eq(a, b)


def build_program(graph: SiteGraph) -> tuple[Program, list[CrossReference]]:
    """Compile a graph into a Program by depth-first construction from root.

    Arms are ordered label-lexicographically for reproducible builds. Shared
    graph nodes become shared Program references. Several same-labeled edges
    from one (inclusive) node join under a single arm whose body is an
    inclusive selector of unconditional sub-arms. A node left with no usable
    out-edges (all were back-edges) degrades to a Leaf.
    """
    out_index = graph.out_index()
    done: dict[str, Program] = {}
    in_progress: set[str] = set()
    cross_refs: list[CrossReference] = []

    def visit(node_id: str) -> Program:
        if node_id in done:
            return done[node_id]
        node = graph.nodes[node_id]
        in_progress.add(node_id)

        by_label: dict[str, list] = {}
        for edge in out_index[node_id]:
            by_label.setdefault(edge.label, []).append(edge)

        arms = []
        for label in sorted(by_label):
            bodies = []
            for edge in by_label[label]:
                if edge.target in in_progress:
                    cross_refs.append(
                        CrossReference(source=node_id, target=edge.target, label=label)
                    )
                    continue
                bodies.append(visit(edge.target))
            if not bodies:
                continue
            if len(bodies) == 1:
                arms.append(Arm(guard=label, body=bodies[0]))
            else:
                inner = Selector(
                    kind=INCLUSIVE,
                    arms=tuple(Arm(guard=None, body=b) for b in bodies),
                )
                arms.append(Arm(guard=label, body=inner))

        in_progress.discard(node_id)
        if arms:
            program: Program = Selector(
                kind=node.branch_kind,
                arms=tuple(arms),
                annotations=dict(node.annotations),
            )
        else:
            program = Leaf(
                url=node.url,
                bindings=dict(node.leaf_bindings),
                annotations=dict(node.annotations),
            )
        done[node_id] = program
        return program

    return visit(graph.root), cross_refs


def enumerate_paths(program: Optional[Program]) -> list[tuple[tuple[str, ...], Leaf]]:
    """Every root-to-leaf guard sequence with its Leaf, in stored arm order.

    Unconditional arms (guard None) contribute nothing to the sequence.
    Shared sub-programs are enumerated once per path through them. None
    (an empty residual) enumerates to no paths.
    """
    if program is None:
        return []
    paths: list[tuple[tuple[str, ...], Leaf]] = []

    def walk(node: Program, prefix: tuple[str, ...]) -> None:
        if isinstance(node, Leaf):
            paths.append((prefix, node))
            return
        for arm in node.arms:
            extended = prefix if arm.guard is None else prefix + (arm.guard,)
            walk(arm.body, extended)

    walk(program, ())
    return paths


def count_nodes(program: Optional[Program]) -> int:
    """Unique Selector/Leaf count (shared nodes counted once)."""
    if program is None:
        return 0
    seen: set[int] = set()

    def walk(node: Program) -> None:
        if id(node) in seen:
            return
        seen.add(id(node))
        if isinstance(node, Selector):
            for arm in node.arms:
                walk(arm.body)

    walk(program)
    return len(seen)


def guard_variables(program: Optional[Program]) -> set[str]:
    """All guard variables occurring in the program."""
    if program is None:
        return set()
    seen: set[int] = set()
    guards: set[str] = set()

    def walk(node: Program) -> None:
        if id(node) in seen or isinstance(node, Leaf):
            return
        seen.add(id(node))
        for arm in node.arms:
            if arm.guard is not None:
                guards.add(arm.guard)
            walk(arm.body)

    walk(program)
    return guards


def program_to_json(program: Program) -> dict:
    """Node-table encoding; shared nodes appear exactly once."""
    ids: dict[int, str] = {}
    table: dict[str, dict] = {}
    counter = 0

    def assign(node: Program) -> str:
        nonlocal counter
        if id(node) in ids:
            return ids[id(node)]
        node_id = f"n{counter}"
        counter += 1
        ids[id(node)] = node_id
        if isinstance(node, Leaf):
            table[node_id] = {
                "type": "leaf",
                "url": node.url,
                "bindings": dict(node.bindings),
                "annotations": dict(node.annotations),
            }
        else:
            table[node_id] = {
                "type": "selector",
                "kind": node.kind,
                "annotations": dict(node.annotations),
                "arms": [
                    {"guard": arm.guard, "body": assign(arm.body)}
                    for arm in node.arms
                ],
            }
        return node_id

    root_id = assign(program)
    return {"root": root_id, "nodes": table}


def program_from_json(obj) -> Program:
    if not isinstance(obj, Mapping) or "root" not in obj or "nodes" not in obj:
        raise ProgramFormatError("program JSON must carry 'root' and 'nodes'")
    table = obj["nodes"]
    built: dict[str, Program] = {}
    in_progress: set[str] = set()

    def resolve(node_id: str) -> Program:
        if node_id in built:
            return built[node_id]
        if node_id in in_progress:
            raise ProgramFormatError(f"cyclic reference through node {node_id!r}")
        if node_id not in table:
            raise ProgramFormatError(f"missing node {node_id!r}")
        entry = table[node_id]
        in_progress.add(node_id)
        node_type = entry.get("type")
        if node_type == "leaf":
            node: Program = Leaf(
                url=entry.get("url", ""),
                bindings=dict(entry.get("bindings", {})),
                annotations=dict(entry.get("annotations", {})),
            )
        elif node_type == "selector":
            kind = entry.get("kind")
            if kind not in (EXCLUSIVE, INCLUSIVE):
                raise ProgramFormatError(f"node {node_id!r}: unknown kind {kind!r}")
            arms = []
            guards_seen = set()
            for arm in entry.get("arms", []):
                guard = arm.get("guard")
                if guard is not None and not isinstance(guard, str):
                    raise ProgramFormatError(f"node {node_id!r}: bad guard {guard!r}")
                if kind == EXCLUSIVE:
                    if guard is None:
                        raise ProgramFormatError(
                            f"node {node_id!r}: exclusive arm without guard"
                        )
                    if guard in guards_seen:
                        raise ProgramFormatError(
                            f"node {node_id!r}: duplicate guard {guard!r}"
                        )
                    guards_seen.add(guard)
                arms.append(Arm(guard=guard, body=resolve(arm["body"])))
            if not arms:
                raise ProgramFormatError(f"node {node_id!r}: selector with no arms")
            node = Selector(
                kind=kind,
                arms=tuple(arms),
                annotations=dict(entry.get("annotations", {})),
            )
        else:
            raise ProgramFormatError(f"node {node_id!r}: unknown type {node_type!r}")
        in_progress.discard(node_id)
        built[node_id] = node
        return node

    return resolve(obj["root"])


def serialize(program: Program) -> bytes:
    return json.dumps(program_to_json(program), sort_keys=True, indent=1).encode("utf-8")


def deserialize(data: bytes) -> Program:
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProgramFormatError(f"not a serialized program: {exc}") from exc
    return program_from_json(obj)


def load_program(path) -> Program:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def save_program(program: Program, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(program))
        fh.write(b"\n")


def render_pseudo(program: Optional[Program]) -> str:
    """Debug listing in if / else-if form, mirroring selector kinds."""
    if program is None:
        return "(empty)\n"
    lines: list[str] = []

    def emit_leaf(leaf: Leaf, depth: int) -> None:
        pad = "    " * depth
        if leaf.bindings:
            for key in sorted(leaf.bindings):
                lines.append(f'{pad}{key} = "{leaf.bindings[key]}"')
        else:
            lines.append(f'{pad}page "{leaf.url}"')

    def walk(node: Program, depth: int) -> None:
        if isinstance(node, Leaf):
            emit_leaf(node, depth)
            return
        pad = "    " * depth
        for position, arm in enumerate(node.arms):
            guard = "*" if arm.guard is None else arm.guard
            keyword = (
                "else if"
                if node.kind == EXCLUSIVE and position > 0
                else "if"
            )
            lines.append(f"{pad}{keyword} ({guard})")
            walk(arm.body, depth + 1)

    walk(program, 0)
    return "\n".join(lines) + "\n"
