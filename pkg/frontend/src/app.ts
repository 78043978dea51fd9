import { ConflictError, EvaluationClient, SupersededError } from './api.js';
import { SessionAssignment } from './state.js';
import { renderTree } from './tree.js';
import type { EvaluateResponse, TriState, VarInfo } from './types.js';

const STATE_SYMBOL: Record<TriState, string> = {
  unknown: '?',
  true: '+',
  false: '-',
};

/**
 * The explorer: the user flips tri-state guard toggles or types a query,
 * every change round-trips through POST /evaluate, and the residual tree,
 * inferred panel, completeness badge, and report fields re-render from the
 * response. The server is the only evaluator; on conflict (409) the
 * offending toggle is reverted and the variable called out inline.
 */
export class ExplorerApp {
  readonly session = new SessionAssignment();
  private variables: VarInfo[] = [];
  private lastResponse: EvaluateResponse | null = null;

  constructor(
    private readonly client: EvaluationClient,
    private readonly root: HTMLElement,
    private readonly doc: Document,
  ) {}

  async start(): Promise<void> {
    this.variables = (await this.client.vars()).vars;
    this.buildSkeleton();
    await this.refresh();
  }

  private buildSkeleton(): void {
    this.root.innerHTML = `
      <div class="explorer">
        <aside class="controls">
          <form class="query-form">
            <input type="text" class="query-input" placeholder="free-text query" />
            <button type="submit">search</button>
          </form>
          <button type="button" class="reset-button">reset all</button>
          <p class="conflict-note" hidden></p>
          <ul class="variable-list"></ul>
          <section class="inferred-panel">
            <h2>inferred</h2>
            <ul class="inferred-list"></ul>
          </section>
        </aside>
        <main class="results">
          <p class="status-line">
            <span class="complete-badge" hidden>complete</span>
            <span class="partial-badge" hidden>partial</span>
          </p>
          <section class="report-panel" hidden>
            <h2>report</h2>
            <ul class="report-list"></ul>
          </section>
          <section class="tree-panel"></section>
        </main>
      </div>`;

    const list = this.query<HTMLUListElement>('.variable-list');
    for (const variable of this.variables) {
      const item = this.doc.createElement('li');
      const button = this.doc.createElement('button');
      button.type = 'button';
      button.className = 'tri-toggle';
      button.dataset.variable = variable.name;
      button.addEventListener('click', () => void this.toggle(variable.name));
      item.appendChild(button);
      const label = this.doc.createElement('span');
      label.className = 'variable-name';
      label.textContent = variable.name;
      label.title = `stages: ${variable.stages.join(', ')}`;
      item.appendChild(label);
      list.appendChild(item);
    }
    this.paintToggles();

    this.query<HTMLFormElement>('.query-form').addEventListener('submit', (event) => {
      event.preventDefault();
      void this.submitQuery(this.query<HTMLInputElement>('.query-input').value);
    });
    this.query<HTMLButtonElement>('.reset-button').addEventListener('click', () => {
      void this.resetAll();
    });
  }

  async toggle(name: string): Promise<void> {
    const before = this.session.snapshot();
    this.session.cycle(name);
    this.paintToggles();
    await this.refresh(before);
  }

  async setVariable(name: string, state: TriState): Promise<void> {
    const before = this.session.snapshot();
    this.session.set(name, state);
    this.paintToggles();
    await this.refresh(before);
  }

  async submitQuery(text: string): Promise<void> {
    const before = this.session.snapshot();
    this.session.setQuery(text);
    await this.refresh(before);
  }

  async resetAll(): Promise<void> {
    this.session.reset();
    this.query<HTMLInputElement>('.query-input').value = '';
    this.paintToggles();
    await this.refresh();
  }

  get latest(): EvaluateResponse | null {
    return this.lastResponse;
  }

  private async refresh(revertTo?: {
    states: Map<string, TriState>;
    query: string;
  }): Promise<void> {
    this.clearConflict();
    let response: EvaluateResponse;
    try {
      response = await this.client.evaluate(this.session.toRequestBody());
    } catch (error) {
      if (error instanceof SupersededError) return;
      if (error instanceof ConflictError) {
        if (revertTo) {
          this.session.restore(revertTo);
          this.paintToggles();
        }
        this.showConflict(error);
        return;
      }
      this.showConflict(new ConflictError(String(error), '', null));
      return;
    }
    this.lastResponse = response;
    this.render(response);
  }

  private render(response: EvaluateResponse): void {
    const pane = this.query<HTMLElement>('.tree-panel');
    pane.innerHTML = '';
    pane.appendChild(renderTree(this.doc, response.tree));

    this.query<HTMLElement>('.complete-badge').hidden = !response.complete;
    this.query<HTMLElement>('.partial-badge').hidden = response.complete;

    const inferredList = this.query<HTMLUListElement>('.inferred-list');
    inferredList.innerHTML = '';
    const pinned = this.session.defined();
    for (const [name, value] of Object.entries(response.inferred).sort()) {
      const item = this.doc.createElement('li');
      const origin = name in pinned ? 'set' : 'inferred';
      item.className = `inferred-${origin}`;
      item.textContent = `${name} = ${value} (${origin})`;
      inferredList.appendChild(item);
    }

    const reportPanel = this.query<HTMLElement>('.report-panel');
    const reportList = this.query<HTMLUListElement>('.report-list');
    reportList.innerHTML = '';
    const fields = Object.entries(response.report_fields);
    reportPanel.hidden = !response.complete || fields.length === 0;
    for (const [field, value] of fields) {
      const item = this.doc.createElement('li');
      item.textContent = `${field}: ${value ?? 'undetermined'}`;
      reportList.appendChild(item);
    }
  }

  private paintToggles(): void {
    for (const button of Array.from(
      this.root.querySelectorAll<HTMLButtonElement>('.tri-toggle'),
    )) {
      const name = button.dataset.variable ?? '';
      const state = this.session.get(name);
      button.dataset.state = state;
      button.textContent = STATE_SYMBOL[state];
      button.title = `${name}: ${state}`;
    }
  }

  private showConflict(error: ConflictError): void {
    const note = this.query<HTMLElement>('.conflict-note');
    note.hidden = false;
    note.textContent = error.variable
      ? `conflict on "${error.variable}"${error.stage ? ` (stage ${error.stage})` : ''}`
      : `request failed: ${error.message}`;
    for (const button of Array.from(
      this.root.querySelectorAll<HTMLButtonElement>('.tri-toggle'),
    )) {
      button.classList.toggle(
        'conflicted',
        button.dataset.variable === error.variable,
      );
    }
  }

  private clearConflict(): void {
    const note = this.query<HTMLElement>('.conflict-note');
    note.hidden = true;
    note.textContent = '';
    for (const button of Array.from(
      this.root.querySelectorAll<HTMLButtonElement>('.conflicted'),
    )) {
      button.classList.remove('conflicted');
    }
  }

  private query<T extends Element>(selector: string): T {
    const element = this.root.querySelector<T>(selector);
    if (!element) throw new Error(`missing element ${selector}`);
    return element;
  }
}
