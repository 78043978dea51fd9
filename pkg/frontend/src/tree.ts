import type { TreeNode } from './types.js';

/**
 * Render the server's residual tree into nested <details> elements.
 * "selected" children (guards the evaluation committed to) get a badge;
 * leaves show their page link, bindings, and annotations (addresses etc.).
 * The tree is whatever the server returned, nothing more: this module never
 * evaluates anything client-side.
 */
export function renderTree(doc: Document, node: TreeNode): HTMLElement {
  if (node.empty) {
    const empty = doc.createElement('p');
    empty.className = 'no-matches';
    empty.textContent = 'no matches';
    return empty;
  }
  return renderNode(doc, node, true);
}

function renderNode(doc: Document, node: TreeNode, open: boolean): HTMLElement {
  if (node.children.length === 0) {
    return renderLeaf(doc, node);
  }
  const details = doc.createElement('details');
  details.className = 'tree-node';
  if (open || node.label === 'selected') details.open = true;
  const summary = doc.createElement('summary');
  appendLabel(doc, summary, node);
  details.appendChild(summary);
  const list = doc.createElement('ul');
  for (const child of node.children) {
    const item = doc.createElement('li');
    item.appendChild(renderNode(doc, child, child.label === 'selected'));
    list.appendChild(item);
  }
  details.appendChild(list);
  return details;
}

function renderLeaf(doc: Document, node: TreeNode): HTMLElement {
  const leaf = doc.createElement('div');
  leaf.className = 'tree-leaf';
  appendLabel(doc, leaf, node);
  if (node.url) {
    const link = doc.createElement('a');
    link.href = node.url;
    link.textContent = node.url;
    link.className = 'leaf-url';
    leaf.appendChild(link);
  }
  const facts = doc.createElement('ul');
  facts.className = 'leaf-facts';
  for (const [key, value] of Object.entries(node.bindings ?? {})) {
    const item = doc.createElement('li');
    item.textContent = `${key} = ${value}`;
    facts.appendChild(item);
  }
  for (const [key, value] of Object.entries(node.annotations ?? {})) {
    const item = doc.createElement('li');
    item.textContent = `${key}: ${value}`;
    facts.appendChild(item);
  }
  if (facts.childElementCount > 0) leaf.appendChild(facts);
  return leaf;
}

function appendLabel(doc: Document, parent: HTMLElement, node: TreeNode): void {
  const label = doc.createElement('span');
  if (node.label === 'selected') {
    label.className = 'badge-selected';
    label.textContent = 'selected';
  } else {
    label.className = node.children.length > 0 ? 'guard-label' : 'leaf-label';
    label.textContent = node.label;
  }
  parent.appendChild(label);
  if (node.kind) {
    const kind = doc.createElement('span');
    kind.className = 'kind-tag';
    kind.textContent = node.kind === 'exclusive' ? 'choose one' : 'any';
    parent.appendChild(kind);
  }
}
