import type { EvaluateRequest, TriState } from './types.js';

const CYCLE: Record<TriState, TriState> = {
  unknown: 'true',
  true: 'false',
  false: 'unknown',
};

/**
 * Per-session assignment state: one tri-state per variable plus free query
 * text. Unknown is deliberately distinct from false (an unknown guard keeps
 * its branch, a false one kills it), hence three states, not a checkbox.
 * Always round-trips to a valid /evaluate body.
 */
export class SessionAssignment {
  private states = new Map<string, TriState>();
  private queryText = '';

  get(name: string): TriState {
    return this.states.get(name) ?? 'unknown';
  }

  set(name: string, state: TriState): void {
    if (state === 'unknown') {
      this.states.delete(name);
    } else {
      this.states.set(name, state);
    }
  }

  cycle(name: string): TriState {
    const next = CYCLE[this.get(name)];
    this.set(name, next);
    return next;
  }

  get query(): string {
    return this.queryText;
  }

  setQuery(text: string): void {
    this.queryText = text;
  }

  reset(): void {
    this.states.clear();
    this.queryText = '';
  }

  /** Variables the user has pinned to true or false. */
  defined(): Record<string, boolean> {
    const out: Record<string, boolean> = {};
    for (const [name, state] of [...this.states.entries()].sort()) {
      if (state !== 'unknown') out[name] = state === 'true';
    }
    return out;
  }

  toRequestBody(): EvaluateRequest {
    const body: EvaluateRequest = { assignments: this.defined() };
    if (this.queryText.trim() !== '') {
      body.query = this.queryText;
    }
    return body;
  }

  snapshot(): { states: Map<string, TriState>; query: string } {
    return { states: new Map(this.states), query: this.queryText };
  }

  restore(snapshot: { states: Map<string, TriState>; query: string }): void {
    this.states = new Map(snapshot.states);
    this.queryText = snapshot.query;
  }
}
