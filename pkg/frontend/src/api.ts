import type {
  EvaluateRequest,
  EvaluateResponse,
  MetaResponse,
  VarsResponse,
} from './types.js';

/** 409 from the server: the assignment contradicts itself or the rules. */
export class ConflictError extends Error {
  readonly variable: string;
  readonly stage: string | null;

  constructor(message: string, variable: string, stage: string | null) {
    super(message);
    this.name = 'ConflictError';
    this.variable = variable;
    this.stage = stage;
  }
}

/** Thrown to the caller whose request was superseded by newer input. */
export class SupersededError extends Error {
  constructor() {
    super('superseded by a newer request');
    this.name = 'SupersededError';
  }
}

type FetchLike = typeof fetch;

/**
 * Client for the evaluation service. At most one evaluate request is in
 * flight: newer input aborts the old request, and a late response from an
 * aborted request can never be delivered (sequence check).
 */
export class EvaluationClient {
  private seq = 0;
  private controller: AbortController | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  async vars(): Promise<VarsResponse> {
    const response = await this.fetchFn(`${this.baseUrl}/vars`);
    if (!response.ok) throw new Error(`GET /vars failed: ${response.status}`);
    return (await response.json()) as VarsResponse;
  }

  async meta(): Promise<MetaResponse> {
    const response = await this.fetchFn(`${this.baseUrl}/program/meta`);
    if (!response.ok) throw new Error(`GET /program/meta failed: ${response.status}`);
    return (await response.json()) as MetaResponse;
  }

  async evaluate(body: EvaluateRequest): Promise<EvaluateResponse> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const ticket = ++this.seq;

    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}/evaluate`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(body),
        signal: controller.signal,
      });
    } catch (error) {
      if (ticket !== this.seq) throw new SupersededError();
      throw error;
    }
    if (ticket !== this.seq) throw new SupersededError();

    if (response.status === 409) {
      const payload = (await response.json()) as {
        error: string;
        variable: string;
        stage?: string | null;
      };
      throw new ConflictError(payload.error, payload.variable, payload.stage ?? null);
    }
    if (!response.ok) {
      throw new Error(`POST /evaluate failed: ${response.status}`);
    }
    return (await response.json()) as EvaluateResponse;
  }
}
