"""Composite programs: staged site/recommender programs glued by alias rules.

A composite holds an ordered list of (name, program) stages, a synonymy
RuleSet bridging vocabularies, and binding aliases that turn a text binding
produced by one stage (algorithm = "...") into guard truths for later
stages. Evaluation cascades: each stage's inferred truths and bindings feed
the next, and whole passes repeat until nothing grows.

Manifest (JSON):

    {"stages": [{"name": str, "program": path}],
     "aliases": path?,
     "binding_aliases": [{"var": str, "value": str, "then": {str: bool}}],
     "report": [{"field": str, "from": "binding"|"annotation", "key": str}]}

Paths resolve relative to the manifest file. A merged composite can also be
saved as a single self-contained bundle with programs embedded.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .evaluate import (
    Assignment,
    AssignmentConflict,
    DEFAULT_OPTIONS,
    EvalOptions,
    EvaluationError,
    Residual,
    RuleSet,
    Truth,
    close_assignment,
    partially_evaluate,
)
from .program import (
    Leaf,
    Program,
    Selector,
    guard_variables,
    program_from_json,
    program_to_json,
)


class CompositionError(ValueError):
    """Static composite check failed (duplicate stage, unresolvable alias)."""


@dataclass(frozen=True)
class BindingAlias:
    """When `var` was bound to exactly `value`, assert the `then` truths."""

    var: str
    value: str
    then: Mapping[str, bool]


@dataclass(frozen=True)
class ReportField:
    field: str
    source: str  # "binding" | "annotation"
    key: str


@dataclass(frozen=True)
class CompositeProgram:
    stages: tuple[tuple[str, Program], ...]
    aliases: RuleSet = RuleSet()
    binding_aliases: tuple[BindingAlias, ...] = ()
    report_spec: tuple[ReportField, ...] = ()

    def stage_names(self) -> list[str]:
        return [name for name, _program in self.stages]

    def variables(self) -> dict[str, list[str]]:
        """Guard variable -> names of the stages it occurs in."""
        out: dict[str, list[str]] = {}
        for name, program in self.stages:
            for var in sorted(guard_variables(program)):
                out.setdefault(var, [])
                if name not in out[var]:
                    out[var].append(name)
        return dict(sorted(out.items()))


@dataclass(frozen=True)
class CascadeResult:
    stage_names: tuple[str, ...]
    per_stage: tuple[Residual, ...]
    final_bindings: Mapping[str, str]
    report_fields: Mapping[str, Optional[str]]
    assignment: Assignment

    @property
    def complete(self) -> bool:
        return all(residual.complete for residual in self.per_stage)


def _binding_keys(program: Program) -> set[str]:
    seen: set[int] = set()
    keys: set[str] = set()

    def walk(node: Program) -> None:
        if id(node) in seen:
            return
        seen.add(id(node))
        if isinstance(node, Leaf):
            keys.update(node.bindings)
            return
        for arm in node.arms:
            walk(arm.body)

    walk(program)
    return keys


def merge(
    stages: Iterable[tuple[str, Program]],
    aliases: RuleSet = RuleSet(),
    binding_aliases: Iterable[BindingAlias] = (),
    report_spec: Iterable[ReportField] = (),
) -> CompositeProgram:
    """Statically check and assemble a composite.

    Every alias target must be a guard somewhere; every binding-alias source
    variable must be emitted by some stage's leaf bindings.
    """
    stages = tuple(stages)
    binding_aliases = tuple(binding_aliases)
    report_spec = tuple(report_spec)

    names = [name for name, _program in stages]
    dupes = {name for name in names if names.count(name) > 1}
    if dupes:
        raise CompositionError(f"duplicate stage name(s): {', '.join(sorted(dupes))}")

    all_guards: set[str] = set()
    all_binding_keys: set[str] = set()
    for _name, program in stages:
        all_guards |= guard_variables(program)
        all_binding_keys |= _binding_keys(program)

    for rule in aliases.rules:
        if rule.then_var not in all_guards:
            raise CompositionError(
                f"alias target {rule.then_var!r} is not a guard in any stage"
            )
    for alias in binding_aliases:
        if alias.var not in all_binding_keys:
            raise CompositionError(
                f"binding alias source {alias.var!r} is not emitted by any stage"
            )
        for then_var in alias.then:
            if then_var not in all_guards:
                raise CompositionError(
                    f"binding alias target {then_var!r} is not a guard in any stage"
                )
    for rf in report_spec:
        if rf.source not in ("binding", "annotation"):
            raise CompositionError(
                f"report field {rf.field!r}: unknown source {rf.source!r}"
            )

    return CompositeProgram(
        stages=stages,
        aliases=aliases,
        binding_aliases=binding_aliases,
        report_spec=report_spec,
    )


def _unconditional_annotations(residual: Residual) -> dict[str, str]:
    """Annotations of nodes reached without any remaining guard."""
    out: dict[str, str] = {}
    if residual.program is None:
        return out
    seen: set[int] = set()

    def walk(node: Program) -> None:
        if id(node) in seen:
            return
        seen.add(id(node))
        out.update(node.annotations)
        if isinstance(node, Selector):
            for arm in node.arms:
                if arm.guard is None:
                    walk(arm.body)

    walk(residual.program)
    return out


def evaluate_composite(
    composite: CompositeProgram,
    assignment: Assignment,
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> CascadeResult:
    """Cascading specialization of every stage to a global fixpoint.

    Each pass evaluates the stages in order, merging inferred truths,
    collecting leaf bindings, and firing binding aliases (re-closing under
    the synonymy rules after each step). Passes repeat until the assignment
    and bindings stop growing; the loop exit guarantees the reported
    residuals were all computed under the final assignment.
    """
    sigma = close_assignment(assignment, composite.aliases)
    bindings: dict[str, str] = {}
    per_stage: tuple[Residual, ...] = ()

    while True:
        start_values = dict(sigma.values)
        start_bindings = dict(bindings)
        residuals = []
        for name, program in composite.stages:
            try:
                residual = partially_evaluate(program, sigma, opts)
                sigma = sigma.merged(residual.inferred)
                for key, value in residual.bindings.items():
                    if key in bindings and bindings[key] != value:
                        raise AssignmentConflict(
                            f"binding {key!r} takes conflicting values "
                            f"{bindings[key]!r} and {value!r}",
                            variable=key,
                        )
                    bindings[key] = value
                fired: dict[str, Truth] = {}
                for alias in composite.binding_aliases:
                    if bindings.get(alias.var) == alias.value:
                        for then_var, then_value in alias.then.items():
                            fired[then_var] = Truth.of(then_value)
                sigma = sigma.merged(Assignment(fired))
                sigma = close_assignment(sigma, composite.aliases)
            except EvaluationError as exc:
                raise exc.with_stage(name) from exc
            residuals.append(residual)
        per_stage = tuple(residuals)
        if dict(sigma.values) == start_values and bindings == start_bindings:
            break

    report_fields: dict[str, Optional[str]] = {}
    annotation_pool: dict[str, str] = {}
    for residual in per_stage:
        for key, value in _unconditional_annotations(residual).items():
            annotation_pool.setdefault(key, value)
    for rf in composite.report_spec:
        if rf.source == "binding":
            report_fields[rf.field] = bindings.get(rf.key)
        else:
            report_fields[rf.field] = annotation_pool.get(rf.key)

    return CascadeResult(
        stage_names=tuple(composite.stage_names()),
        per_stage=per_stage,
        final_bindings=dict(bindings),
        report_fields=report_fields,
        assignment=sigma,
    )


def composite_to_json(composite: CompositeProgram) -> dict:
    return {
        "stages": [
            {"name": name, "program": program_to_json(program)}
            for name, program in composite.stages
        ],
        "aliases": composite.aliases.to_json(),
        "binding_aliases": [
            {"var": a.var, "value": a.value, "then": dict(a.then)}
            for a in composite.binding_aliases
        ],
        "report": [
            {"field": rf.field, "from": rf.source, "key": rf.key}
            for rf in composite.report_spec
        ],
    }


def _parse_report_spec(entries: Iterable[Mapping]) -> tuple[ReportField, ...]:
    return tuple(
        ReportField(field=e["field"], source=e.get("from", "binding"), key=e["key"])
        for e in entries
    )


def _parse_binding_aliases(entries: Iterable[Mapping]) -> tuple[BindingAlias, ...]:
    return tuple(
        BindingAlias(var=e["var"], value=e["value"], then=dict(e["then"]))
        for e in entries
    )


def load_composite(path) -> CompositeProgram:
    """Load a manifest (program paths) or a self-contained bundle."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))

    stages = []
    for entry in obj.get("stages", []):
        program_spec = entry["program"]
        if isinstance(program_spec, str):
            program_path = os.path.join(base, program_spec)
            with open(program_path, encoding="utf-8") as pf:
                program = program_from_json(json.load(pf))
        else:
            program = program_from_json(program_spec)
        stages.append((entry["name"], program))

    aliases_spec = obj.get("aliases")
    if isinstance(aliases_spec, str):
        aliases = RuleSet.load(os.path.join(base, aliases_spec))
    elif aliases_spec:
        aliases = RuleSet.from_json(aliases_spec)
    else:
        aliases = RuleSet()

    return merge(
        stages,
        aliases=aliases,
        binding_aliases=_parse_binding_aliases(obj.get("binding_aliases", [])),
        report_spec=_parse_report_spec(obj.get("report", [])),
    )


def save_composite(composite: CompositeProgram, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(composite_to_json(composite), fh, indent=1, sort_keys=True)
        fh.write("\n")
