"""Turn residuals and cascade results into user-facing artifacts.

render_tree gives a plain-dict tree mirroring the residual one-to-one
(labels are the guard, "selected" for committed branches, "root" at the
top). render_report fills the composite's report template. emit_pages
writes a byte-deterministic set of minimal static HTML pages.
"""

from __future__ import annotations

import html
import os
import re

from .compose import CascadeResult
from .evaluate import Residual
from .program import Leaf, Program

UNDETERMINED = "undetermined"


class RenderError(RuntimeError):
    """Page emission failed; message carries the path."""


def _tree_node(node: Program, label: str) -> dict:
    if isinstance(node, Leaf):
        return {
            "label": label,
            "url": node.url,
            "bindings": dict(node.bindings),
            "annotations": dict(node.annotations),
            "children": [],
        }
    return {
        "label": label,
        "kind": node.kind,
        "annotations": dict(node.annotations),
        "children": [
            _tree_node(arm.body, arm.guard if arm.guard is not None else "selected")
            for arm in node.arms
        ],
    }


def render_tree(residual: Residual) -> dict:
    """Personalized tree for a residual; shared nodes unfold into the tree."""
    if residual.program is None:
        return {"label": "root", "empty": True, "annotations": {}, "children": []}
    return _tree_node(residual.program, "root")


def render_report(result: CascadeResult) -> str:
    """One line per manifest report field; missing fields read 'undetermined'."""
    lines = []
    for field, value in result.report_fields.items():
        lines.append(f"{field}: {value if value is not None else UNDETERMINED}")
    if not lines:
        lines.append(f"(no report fields configured; complete={str(result.complete).lower()})")
    return "\n".join(lines) + "\n"


_SLUG_RE = re.compile(r"[^a-z0-9]+")


def _slug(label: str) -> str:
    slug = _SLUG_RE.sub("-", label.lower()).strip("-")
    return slug or "node"


def _page(title: str, body_lines: list[str]) -> bytes:
    head = [
        "<!doctype html>",
        '<meta charset="utf-8">',
        f"<title>{html.escape(title)}</title>",
        f"<h1>{html.escape(title)}</h1>",
    ]
    return ("\n".join(head + body_lines) + "\n").encode("utf-8")


def emit_pages(tree: dict, out_dir) -> list[str]:
    """Write one page per tree node; returns the relative file names.

    The root is index.html; links mirror the tree. Output bytes depend only
    on the tree, never on time or environment.
    """
    os.makedirs(out_dir, exist_ok=True)

    names: dict[int, str] = {}
    order: list[dict] = []
    counter = 0

    def assign(node: dict) -> None:
        nonlocal counter
        if counter == 0:
            names[id(node)] = "index.html"
        else:
            names[id(node)] = f"{counter:03d}-{_slug(node['label'])}.html"
        counter += 1
        order.append(node)
        for child in node.get("children", []):
            assign(child)

    assign(tree)

    written = []
    for node in order:
        body: list[str] = []
        if node.get("empty"):
            body.append("<p>no results</p>")
        if node.get("url"):
            url = html.escape(node["url"])
            body.append(f'<p>page: <a href="{url}">{url}</a></p>')
        bindings = node.get("bindings", {})
        annotations = node.get("annotations", {})
        if bindings:
            body.append("<ul>")
            for key in sorted(bindings):
                body.append(
                    f"<li>{html.escape(key)} = {html.escape(bindings[key])}</li>"
                )
            body.append("</ul>")
        if annotations:
            body.append("<ul>")
            for key in sorted(annotations):
                body.append(
                    f"<li>{html.escape(key)}: {html.escape(annotations[key])}</li>"
                )
            body.append("</ul>")
        children = node.get("children", [])
        if children:
            body.append("<ul>")
            for child in children:
                href = names[id(child)]
                body.append(
                    f'<li><a href="{href}">{html.escape(child["label"])}</a></li>'
                )
            body.append("</ul>")
        name = names[id(node)]
        path = os.path.join(out_dir, name)
        try:
            with open(path, "wb") as fh:
                fh.write(_page(node["label"], body))
        except OSError as exc:
            raise RenderError(f"cannot write {path}: {exc}") from exc
        written.append(name)
    return written
