import type {
  ClassifyResponse,
  CreateSessionRequest,
  KeywordEditRequest,
  SeedGroupJson,
  SessionState,
  TopicsResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin typed client for the workbench HTTP API. All numbers pass through
 * verbatim; nothing is rounded or renormalized on this side.
 */
export class WorkbenchClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...a) => fetch(...a),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await resp.json();
    if (!resp.ok) {
      const detail = typeof payload?.detail === 'string' ? payload.detail : JSON.stringify(payload);
      throw new ApiError(resp.status, detail);
    }
    return payload as T;
  }

  createSession(req: CreateSessionRequest): Promise<{ session_id: string }> {
    return this.request('POST', '/sessions', req);
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request('GET', `/sessions/${sessionId}`);
  }

  getTopics(sessionId: string, top = 10): Promise<TopicsResponse> {
    return this.request('GET', `/sessions/${sessionId}/topics?top=${top}`);
  }

  editKeywords(
    sessionId: string,
    req: KeywordEditRequest,
  ): Promise<{ seeds: SeedGroupJson[]; events: number }> {
    return this.request('POST', `/sessions/${sessionId}/keywords`, req);
  }

  finetune(sessionId: string): Promise<{ status: string }> {
    return this.request('POST', `/sessions/${sessionId}/finetune`, {});
  }

  classify(sessionId: string, texts: string[]): Promise<ClassifyResponse> {
    return this.request('POST', `/sessions/${sessionId}/classify`, { texts });
  }
}
