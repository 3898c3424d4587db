/**
 * Typed client for the deliberation platform HTTP API. All view data in
 * the UI derives from these GET calls; every mutation waits for the
 * server ack (no optimistic updates), so the conflict protocol stays
 * visible to the caller.
 */

export type RevisionKind = "agent_misrepresented" | "view_changed";

export interface StatementView {
  id: string;
  title: string;
  body: string;
  author: string;
}

export interface ConsensusView {
  winner: string | null;
  statement: StatementView | null;
  event_seq: number;
}

export interface DomainEventView {
  seq: number;
  kind: string;
  actor: string;
  timestamp: string;
  payload: Record<string, unknown>;
}

export interface EventsPage {
  events: DomainEventView[];
  event_seq: number;
}

export interface RankingDistribution {
  participants_with_ranking: number;
  pool_size: number;
  /** statement id -> { rank (1-based, as string) -> count } */
  distribution: Record<string, Record<string, number>>;
}

export interface ReviewableActionView {
  id: string;
  agent: string;
  deliberation: string;
  kind: string;
  content: string;
  risk: number | null;
  reviewed: boolean;
}

export interface DigestView {
  user: string;
  period: { start: number; end: number };
  headline: {
    action_id: string;
    kind: string;
    deliberation: string;
    excerpt: string;
    risk: number | null;
  };
  deep_link: string;
}

export interface AgentView {
  agent_id: string;
  owner: string;
  hosting: string;
  memory: string;
  heartbeat_interval: number;
  last_heartbeat: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

/** Placeholder id for a statement proposed in the same request. */
export const NEW_STATEMENT = "@new";

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private token: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  setToken(token: string): void {
    this.token = token;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: {
        authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { "content-type": "application/json" } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const text = await resp.text();
    let parsed: unknown = null;
    try {
      parsed = text ? JSON.parse(text) : null;
    } catch {
      parsed = { detail: text };
    }
    if (!resp.ok) {
      const detail =
        parsed && typeof parsed === "object" && "detail" in parsed
          ? String((parsed as { detail: unknown }).detail)
          : text;
      throw new ApiError(resp.status, detail);
    }
    return parsed as T;
  }

  // -- agent ----------------------------------------------------------

  registerAgent(owner: string, memory = "", hosting = "hosted") {
    return this.request<{
      agent_id: string;
      agent_token: string;
      user_token: string;
    }>("POST", "/agents", { owner, memory, hosting });
  }

  getAgent(agentId: string) {
    return this.request<AgentView>("GET", `/agents/${agentId}`);
  }

  putMemory(agentId: string, memory: string) {
    return this.request<{ agent_id: string; memory: string }>(
      "PUT",
      `/agents/${agentId}/memory`,
      { memory },
    );
  }

  chat(agentId: string, message: string) {
    return this.request<{ reply: string; memory_delta: string }>(
      "POST",
      `/agents/${agentId}/chat`,
      { message },
    );
  }

  // -- deliberation ---------------------------------------------------

  createDeliberation(question: string, aggregator = "schulze") {
    return this.request<{ id: string; question: string }>(
      "POST",
      "/deliberations",
      { question, aggregator },
    );
  }

  getConsensus(deliberationId: string) {
    return this.request<ConsensusView>(
      "GET",
      `/deliberations/${deliberationId}/consensus`,
    );
  }

  getEvents(deliberationId: string, since: number) {
    return this.request<EventsPage>(
      "GET",
      `/deliberations/${deliberationId}/events?since=${since}`,
    );
  }

  getRankingDistribution(deliberationId: string) {
    return this.request<RankingDistribution>(
      "GET",
      `/deliberations/${deliberationId}/ranking-distribution`,
    );
  }

  getDeliberation(deliberationId: string) {
    return this.request<Record<string, unknown>>(
      "GET",
      `/deliberations/${deliberationId}`,
    );
  }

  join(
    deliberationId: string,
    body: {
      agent: string;
      opinion: string;
      produced_via?: string;
      ranking?: string[];
      statement?: { title: string; body: string };
    },
  ) {
    return this.request<{ winner: string | null; event_seq: number }>(
      "POST",
      `/deliberations/${deliberationId}/join`,
      body,
    );
  }

  proposeStatement(
    deliberationId: string,
    body: {
      author: string;
      statement: { title: string; body: string };
      author_ranking: string[];
    },
  ) {
    return this.request<{
      statement_id: string;
      winner: string | null;
      event_seq: number;
    }>("POST", `/deliberations/${deliberationId}/statements`, body);
  }

  putOpinion(
    deliberationId: string,
    agentId: string,
    text: string,
    revisionKind: RevisionKind,
  ) {
    return this.request<{ winner: string | null; event_seq: number }>(
      "PUT",
      `/deliberations/${deliberationId}/opinions/${agentId}`,
      { text, revision_kind: revisionKind },
    );
  }

  withdrawOpinion(deliberationId: string, agentId: string) {
    return this.request<{ winner: string | null; event_seq: number }>(
      "DELETE",
      `/deliberations/${deliberationId}/opinions/${agentId}`,
    );
  }

  putRanking(deliberationId: string, agentId: string, ranking: string[]) {
    return this.request<{ winner: string | null; event_seq: number }>(
      "PUT",
      `/deliberations/${deliberationId}/rankings/${agentId}`,
      { ranking },
    );
  }

  tick() {
    return this.request<{ reports: unknown[] }>(
      "POST",
      "/heartbeats/tick?force=true",
    );
  }

  // -- oversight ------------------------------------------------------

  getDigest(userId: string) {
    return this.request<{ digest: DigestView | null }>(
      "GET",
      `/users/${userId}/digest`,
    );
  }

  getUserActions(userId: string) {
    return this.request<{ actions: ReviewableActionView[] }>(
      "GET",
      `/users/${userId}/actions`,
    );
  }

  getAction(actionId: string) {
    return this.request<ReviewableActionView>("GET", `/actions/${actionId}`);
  }

  markReviewed(actionId: string) {
    return this.request<{ id: string; reviewed: boolean }>(
      "POST",
      `/actions/${actionId}/reviewed`,
    );
  }
}

/**
 * Resolve a digest deep link (e.g. "/review/actions/<id>") to the
 * action it references. The link contract is that the final path
 * segment is the action id.
 */
export function actionIdFromDeepLink(deepLink: string): string {
  const segments = deepLink.split("/").filter((s) => s.length > 0);
  const last = segments[segments.length - 1];
  if (!last) {
    throw new Error(`malformed deep link: ${deepLink}`);
  }
  return last;
}
