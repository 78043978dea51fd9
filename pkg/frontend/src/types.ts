// Wire types for the evaluation service (GET /vars, POST /evaluate,
// GET /program/meta). These mirror the server JSON exactly.

export type TriState = 'true' | 'false' | 'unknown';

export interface VarInfo {
  name: string;
  stages: string[];
}

export interface VarsResponse {
  vars: VarInfo[];
}

export interface TreeNode {
  label: string;
  kind?: string;
  url?: string;
  empty?: boolean;
  bindings?: Record<string, string>;
  annotations: Record<string, string>;
  children: TreeNode[];
}

export interface EvaluateRequest {
  assignments: Record<string, boolean>;
  query?: string;
}

export interface EvaluateResponse {
  tree: TreeNode;
  inferred: Record<string, boolean>;
  complete: boolean;
  report_fields: Record<string, string | null>;
  bindings: Record<string, string>;
}

export interface StageMeta {
  name: string;
  nodes: number;
}

export interface MetaResponse {
  stages: StageMeta[];
  mining_report: Record<string, unknown> | null;
}
