"""Three-valued partial evaluation of branching programs.

Guards are True, False, or Unknown (absent). False kills an arm, True
commits to it (eliminating the guard), Unknown keeps the guarded arm in the
residual. A True arm in an exclusive selector drives every sibling guard
variable to False program-wide when exclusive_implication is on, which is
what lets a single "NY" choice prune "CA" everywhere without the user
zeroing it by hand.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .graph import EXCLUSIVE
from .program import Arm, Leaf, Program, Selector, enumerate_paths


class Truth(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    @classmethod
    def of(cls, value: bool) -> "Truth":
        return cls.TRUE if value else cls.FALSE


class EvaluationError(Exception):
    """Base for evaluation failures; carries the variable being disputed."""

    def __init__(self, message: str, variable: str = "", stage: Optional[str] = None):
        super().__init__(message)
        self.variable = variable
        self.stage = stage

    def with_stage(self, stage: str) -> "EvaluationError":
        if self.stage is None:
            exc = type(self)(f"stage {stage!r}: {self}", variable=self.variable)
            exc.stage = stage
            return exc
        return self


class AssignmentConflict(EvaluationError):
    """A variable was driven to both True and False."""


class SelectorConflict(EvaluationError):
    """Two guards of one exclusive selector are simultaneously True."""


@dataclass(frozen=True)
class Assignment:
    """Tri-valued variable map; variables not present are Unknown."""

    values: Mapping[str, Truth] = field(default_factory=dict)

    def get(self, var: str) -> Truth:
        return self.values.get(var, Truth.UNKNOWN)

    def defined(self) -> dict[str, bool]:
        return {
            var: truth is Truth.TRUE
            for var, truth in sorted(self.values.items())
            if truth is not Truth.UNKNOWN
        }

    def merged(self, other: "Assignment") -> "Assignment":
        values = dict(self.values)
        for var, truth in other.values.items():
            if truth is Truth.UNKNOWN:
                continue
            if values.get(var, Truth.UNKNOWN) not in (Truth.UNKNOWN, truth):
                raise AssignmentConflict(
                    f"variable {var!r} is both true and false", variable=var
                )
            values[var] = truth
        return Assignment(values)

    @classmethod
    def from_bools(cls, bools: Mapping[str, bool]) -> "Assignment":
        return cls({var: Truth.of(val) for var, val in bools.items()})


EMPTY_ASSIGNMENT = Assignment()


@dataclass(frozen=True)
class Implication:
    """Ground rule: when if_var holds if_value, then_var must hold then_value."""

    if_var: str
    if_value: bool
    then_var: str
    then_value: bool

    def describe(self) -> str:
        return (
            f"{self.if_var}={str(self.if_value).lower()} => "
            f"{self.then_var}={str(self.then_value).lower()}"
        )


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Implication, ...] = ()

    def variables(self) -> set[str]:
        out = set()
        for rule in self.rules:
            out.add(rule.if_var)
            out.add(rule.then_var)
        return out

    @classmethod
    def from_json(cls, entries: Iterable[Mapping]) -> "RuleSet":
        rules = []
        for entry in entries:
            condition = entry["if"]
            if isinstance(condition, str):
                conditions = [(condition, True)]
            else:
                conditions = [(var, bool(val)) for var, val in condition.items()]
            for if_var, if_value in conditions:
                for then_var, then_value in entry["then"].items():
                    rules.append(
                        Implication(if_var, if_value, then_var, bool(then_value))
                    )
        return cls(tuple(rules))

    @classmethod
    def load(cls, path) -> "RuleSet":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> list[dict]:
        return [
            {"if": {r.if_var: r.if_value}, "then": {r.then_var: r.then_value}}
            for r in self.rules
        ]


EMPTY_RULES = RuleSet()


@dataclass(frozen=True)
class EvalOptions:
    exclusive_implication: bool = True
    keep_empty_selectors: bool = False


DEFAULT_OPTIONS = EvalOptions()


@dataclass(frozen=True)
class Residual:
    """Outcome of one partial evaluation.

    program   — simplified program, or None when every path died.
    inferred  — the inputs plus every truth value inferred on the way.
    bindings  — text bindings of leaves that are reached unconditionally.
    complete  — no guarded arms remain (single leaf, empty, or all-selected).
    """

    program: Optional[Program]
    inferred: Assignment
    bindings: Mapping[str, str]
    complete: bool


def close_assignment(
    assignment: Assignment,
    rules: RuleSet,
    max_firings: Optional[int] = None,
) -> Assignment:
    """Forward-chain implications to the least fixpoint extension.

    Monotone: never retracts a value. A rule chain that drives a variable to
    both True and False raises AssignmentConflict naming the variable and the
    chain. Productive firings are bounded by |rules| * |variables| (enforced).
    """
    if max_firings is None:
        variables = set(assignment.values) | rules.variables()
        max_firings = max(1, len(rules.rules)) * max(1, len(variables))

    by_condition: dict[tuple[str, bool], list[Implication]] = {}
    for rule in rules.rules:
        by_condition.setdefault((rule.if_var, rule.if_value), []).append(rule)

    values: dict[str, Truth] = {
        var: truth
        for var, truth in assignment.values.items()
        if truth is not Truth.UNKNOWN
    }
    provenance: dict[str, Optional[Implication]] = {var: None for var in values}

    def chain_for(rule: Implication) -> list[str]:
        steps = [f"rule {rule.describe()}"]
        var = rule.if_var
        while True:
            origin = provenance.get(var)
            if origin is None:
                steps.append(f"input {var}")
                break
            steps.append(f"rule {origin.describe()}")
            var = origin.if_var
        return steps

    firings = 0
    worklist = sorted(values)
    while worklist:
        var = worklist.pop()
        truth = values[var]
        for rule in by_condition.get((var, truth is Truth.TRUE), ()):
            wanted = Truth.of(rule.then_value)
            current = values.get(rule.then_var, Truth.UNKNOWN)
            if current is wanted:
                continue
            if current is not Truth.UNKNOWN:
                raise AssignmentConflict(
                    f"variable {rule.then_var!r} driven to both true and false "
                    f"(chain: {' <- '.join(chain_for(rule))})",
                    variable=rule.then_var,
                )
            firings += 1
            if firings > max_firings:
                raise EvaluationError(
                    f"closure exceeded {max_firings} firings", variable=rule.then_var
                )
            values[rule.then_var] = wanted
            provenance[rule.then_var] = rule
            worklist.append(rule.then_var)

    return Assignment(values)


def _iter_selectors(program: Program) -> list[Selector]:
    seen: set[int] = set()
    out: list[Selector] = []

    def walk(node: Program) -> None:
        if id(node) in seen or isinstance(node, Leaf):
            return
        seen.add(id(node))
        out.append(node)
        for arm in node.arms:
            walk(arm.body)

    walk(program)
    return out


def _infer_exclusions(
    program: Program, assignment: Assignment, opts: EvalOptions
) -> dict[str, Truth]:
    """Fixpoint of sibling falsification over every exclusive selector.

    Scans occurrences regardless of reachability: exclusivity is a fact
    about the variables, and restricting it to live branches would make
    staged evaluation disagree with one-shot evaluation.
    """
    values = {
        var: truth
        for var, truth in assignment.values.items()
        if truth is not Truth.UNKNOWN
    }
    selectors = [s for s in _iter_selectors(program) if s.kind == EXCLUSIVE]

    changed = True
    while changed:
        changed = False
        for selector in selectors:
            guards = [arm.guard for arm in selector.arms if arm.guard is not None]
            true_guards = [g for g in guards if values.get(g) is Truth.TRUE]
            if len(true_guards) > 1:
                raise SelectorConflict(
                    f"guards {true_guards[0]!r} and {true_guards[1]!r} are both "
                    f"true in one exclusive selector (arms: {', '.join(guards)})",
                    variable=true_guards[1],
                )
            if len(true_guards) == 1 and opts.exclusive_implication:
                for guard in guards:
                    if guard != true_guards[0] and guard not in values:
                        values[guard] = Truth.FALSE
                        changed = True
    return values


def partially_evaluate(
    program: Program,
    assignment: Assignment,
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> Residual:
    """Specialize a program against a (rule-closed) assignment.

    The caller is responsible for closing the assignment under its RuleSet
    first; this function only adds exclusive-sibling falsifications.
    """
    values = _infer_exclusions(program, assignment, opts)

    def truth(guard: str) -> Truth:
        return values.get(guard, Truth.UNKNOWN)

    memo: dict[int, Optional[Program]] = {}

    def simplify(node: Program) -> Optional[Program]:
        if id(node) in memo:
            return memo[id(node)]
        result = _simplify(node)
        memo[id(node)] = result
        return result

    def _simplify(node: Program) -> Optional[Program]:
        if isinstance(node, Leaf):
            return node

        if node.kind == EXCLUSIVE:
            for arm in node.arms:
                if arm.guard is not None and truth(arm.guard) is Truth.TRUE:
                    # commit: siblings fall away, the guard disappears
                    return simplify(arm.body)
            survivors = []
            unchanged = True
            for arm in node.arms:
                if arm.guard is not None and truth(arm.guard) is Truth.FALSE:
                    unchanged = False
                    continue
                body = simplify(arm.body)
                if body is None:
                    unchanged = False
                    continue
                if body is arm.body:
                    survivors.append(arm)
                else:
                    survivors.append(Arm(guard=arm.guard, body=body))
                    unchanged = False
        else:
            survivors = []
            unchanged = True
            for arm in node.arms:
                if arm.guard is not None and truth(arm.guard) is Truth.FALSE:
                    unchanged = False
                    continue
                body = simplify(arm.body)
                if body is None:
                    unchanged = False
                    continue
                if arm.guard is not None and truth(arm.guard) is Truth.TRUE:
                    survivors.append(Arm(guard=None, body=body))
                    unchanged = False
                elif body is arm.body:
                    survivors.append(arm)
                else:
                    survivors.append(Arm(guard=arm.guard, body=body))
                    unchanged = False

        if not survivors:
            if opts.keep_empty_selectors:
                return Selector(kind=node.kind, arms=(), annotations=dict(node.annotations))
            return None
        if (
            node.kind != EXCLUSIVE
            and len(survivors) == 1
            and survivors[0].guard is None
        ):
            return survivors[0].body
        if unchanged and len(survivors) == len(node.arms):
            return node
        return Selector(
            kind=node.kind, arms=tuple(survivors), annotations=dict(node.annotations)
        )

    residual = simplify(program)

    complete = all(
        arm.guard is None
        for selector in ([] if residual is None else _iter_selectors(residual))
        for arm in selector.arms
    )

    bindings: dict[str, str] = {}
    visited: set[int] = set()

    def collect_unconditional(node: Program) -> None:
        if id(node) in visited:
            return
        visited.add(id(node))
        if isinstance(node, Leaf):
            bindings.update(node.bindings)
            return
        for arm in node.arms:
            if arm.guard is None:
                collect_unconditional(arm.body)

    if residual is not None:
        collect_unconditional(residual)

    return Residual(
        program=residual,
        inferred=Assignment(values),
        bindings=bindings,
        complete=complete,
    )


def residual_paths_oracle(
    program: Program,
    assignment: Assignment,
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> set[tuple[tuple[str, ...], str, tuple[tuple[str, str], ...]]]:
    """Brute-force expected residual paths, independently of partially_evaluate.

    Enumerates every root-to-leaf walk with full sibling context, applies
    sibling falsification over the collected exclusive guard groups, then
    filters and strips: a walk survives iff no guard on it is False and no
    exclusive step on it is overridden by a True sibling; True guards vanish
    from the kept sequence. Returns (kept-guards, leaf url, leaf bindings).
    """
    walks: list[list[tuple[str, Optional[str], tuple[str, ...]]]] = []
    guard_groups: list[tuple[str, ...]] = []
    seen_groups: set[int] = set()

    def collect(node: Program, steps: list) -> None:
        if isinstance(node, Leaf):
            walks.append(steps + [("leaf", node, ())])
            return
        if node.kind == EXCLUSIVE and id(node) not in seen_groups:
            seen_groups.add(id(node))
            guard_groups.append(
                tuple(arm.guard for arm in node.arms if arm.guard is not None)
            )
        for arm in node.arms:
            siblings = tuple(
                other.guard
                for other in node.arms
                if other is not arm and other.guard is not None
            )
            collect(arm.body, steps + [(node.kind, arm.guard, siblings)])

    collect(program, [])

    values = {
        var: truth
        for var, truth in assignment.values.items()
        if truth is not Truth.UNKNOWN
    }
    changed = True
    while changed:
        changed = False
        for group in guard_groups:
            true_guards = [g for g in group if values.get(g) is Truth.TRUE]
            if len(true_guards) > 1:
                raise SelectorConflict(
                    f"guards {true_guards[0]!r} and {true_guards[1]!r} are both "
                    "true in one exclusive selector",
                    variable=true_guards[1],
                )
            if len(true_guards) == 1 and opts.exclusive_implication:
                for guard in group:
                    if guard not in values and guard != true_guards[0]:
                        values[guard] = Truth.FALSE
                        changed = True

    kept: set[tuple[tuple[str, ...], str, tuple[tuple[str, str], ...]]] = set()
    for walk in walks:
        sequence: list[str] = []
        alive = True
        leaf: Optional[Leaf] = None
        for kind, guard, siblings in walk:
            if kind == "leaf":
                leaf = guard  # second slot carries the Leaf on the final step
                break
            if guard is None:
                continue
            value = values.get(guard, Truth.UNKNOWN)
            if value is Truth.FALSE:
                alive = False
                break
            if kind == EXCLUSIVE and any(
                values.get(s) is Truth.TRUE for s in siblings
            ):
                alive = False
                break
            if value is not Truth.TRUE:
                sequence.append(guard)
        if alive and leaf is not None:
            kept.add(
                (
                    tuple(sequence),
                    leaf.url,
                    tuple(sorted(leaf.bindings.items())),
                )
            )
    return kept


def path_set(program: Optional[Program]) -> set[tuple[tuple[str, ...], str, tuple[tuple[str, str], ...]]]:
    """Canonical comparable form of enumerate_paths output."""
    return {
        (guards, leaf.url, tuple(sorted(leaf.bindings.items())))
        for guards, leaf in enumerate_paths(program)
    }


def parse_assignment_pairs(pairs: Iterable[str]) -> Assignment:
    """Parse CLI-style var=true/false pairs; duplicate contradictions raise."""
    values: dict[str, Truth] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"expected var=true|false, got {pair!r}")
        var, _, raw = pair.partition("=")
        var = var.strip()
        raw = raw.strip().lower()
        if raw in ("true", "1", "yes"):
            truth = Truth.TRUE
        elif raw in ("false", "0", "no"):
            truth = Truth.FALSE
        else:
            raise ValueError(f"expected true/false for {var!r}, got {raw!r}")
        if values.get(var, truth) is not truth:
            raise AssignmentConflict(
                f"variable {var!r} set to both true and false", variable=var
            )
        values[var] = truth
    return Assignment(values)
