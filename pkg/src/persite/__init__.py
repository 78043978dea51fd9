"""persite: mine site schemas, compile them, specialize them per user.

Pipeline: ingest a labeled crawl dump into a SiteGraph, compress it
(dedup / type minimization / subsumption), compile to a branching Program,
optionally merge several programs into a CompositeProgram, then partially
evaluate against a tri-valued preference Assignment and reconstruct trees,
reports, or static pages from the residual.
"""

from .labels import (
    NormalizationConfig,
    NormalizationConfigError,
    normalize_label,
    tokenize_query,
)
from .graph import (
    EXCLUSIVE,
    INCLUSIVE,
    GraphNode,
    IngestError,
    LabeledEdge,
    SiteGraph,
    ValidationReport,
    ingest_crawl,
    load_graph,
    read_crawl_file,
    save_graph,
    validate,
)
from .mining import (
    MergeError,
    MiningError,
    MiningReport,
    dedup_by_url,
    mine,
    minimize_types,
    subsume_composites,
)
from .program import (
    Arm,
    CrossReference,
    Leaf,
    Program,
    ProgramFormatError,
    Selector,
    build_program,
    count_nodes,
    deserialize,
    enumerate_paths,
    guard_variables,
    load_program,
    render_pseudo,
    save_program,
    serialize,
    structurally_equal,
)
from .evaluate import (
    Assignment,
    AssignmentConflict,
    EvalOptions,
    EvaluationError,
    Implication,
    Residual,
    RuleSet,
    SelectorConflict,
    Truth,
    close_assignment,
    partially_evaluate,
    path_set,
    residual_paths_oracle,
)
from .compose import (
    BindingAlias,
    CascadeResult,
    CompositeProgram,
    CompositionError,
    ReportField,
    evaluate_composite,
    load_composite,
    merge,
    save_composite,
)
from .render import emit_pages, render_report, render_tree

__version__ = "0.1.0"

__all__ = [
    "Arm",
    "Assignment",
    "AssignmentConflict",
    "BindingAlias",
    "CascadeResult",
    "CompositeProgram",
    "CompositionError",
    "CrossReference",
    "EXCLUSIVE",
    "EvalOptions",
    "EvaluationError",
    "GraphNode",
    "INCLUSIVE",
    "Implication",
    "IngestError",
    "LabeledEdge",
    "Leaf",
    "MergeError",
    "MiningError",
    "MiningReport",
    "NormalizationConfig",
    "NormalizationConfigError",
    "Program",
    "ProgramFormatError",
    "ReportField",
    "Residual",
    "RuleSet",
    "Selector",
    "SelectorConflict",
    "SiteGraph",
    "Truth",
    "ValidationReport",
    "build_program",
    "close_assignment",
    "count_nodes",
    "dedup_by_url",
    "deserialize",
    "emit_pages",
    "enumerate_paths",
    "evaluate_composite",
    "guard_variables",
    "ingest_crawl",
    "load_composite",
    "load_graph",
    "load_program",
    "merge",
    "mine",
    "minimize_types",
    "normalize_label",
    "partially_evaluate",
    "path_set",
    "read_crawl_file",
    "render_pseudo",
    "render_report",
    "render_tree",
    "residual_paths_oracle",
    "save_composite",
    "save_graph",
    "save_program",
    "serialize",
    "structurally_equal",
    "subsume_composites",
    "tokenize_query",
    "validate",
]
