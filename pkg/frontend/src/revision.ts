/**
 * The revision flow: edit, rewrite-with-agent-help, or withdraw an
 * opinion, or reorder a ranking. Every mutation requires an explicit
 * user action, waits for the server ack, and re-reads consensus so the
 * displayed winner is never stale. A 409 conflict reloads the pool and
 * re-presents the form instead of failing.
 */
import type { ApiClient, ConsensusView, RevisionKind } from "./api.js";
import { ApiError } from "./api.js";

export interface RevisionOutcome {
  eventSeq: number;
  consensus: ConsensusView;
}

export class RevisionFlow {
  constructor(
    private readonly api: ApiClient,
    private readonly deliberationId: string,
    private readonly agentId: string,
  ) {}

  private async refreshConsensus(eventSeq: number): Promise<RevisionOutcome> {
    const consensus = await this.api.getConsensus(this.deliberationId);
    return { eventSeq, consensus };
  }

  /**
   * Save an edited opinion. The revision kind is a required control on
   * the form: the caller must say whether the agent misrepresented them
   * or they changed their mind.
   */
  async saveOpinion(
    text: string,
    kind: RevisionKind | null,
  ): Promise<RevisionOutcome> {
    if (kind === null) {
      throw new Error("revision kind is required: select one before saving");
    }
    if (text.trim().length === 0) {
      throw new Error("opinion text must not be empty");
    }
    const resp = await this.api.putOpinion(
      this.deliberationId,
      this.agentId,
      text,
      kind,
    );
    return this.refreshConsensus(resp.event_seq);
  }

  /**
   * Ask the agent for a redraft from the user's critique and return the
   * draft for manual editing — nothing is saved until the user submits
   * the (possibly edited) draft through saveOpinion.
   */
  async requestRewrite(critique: string): Promise<string> {
    const resp = await this.api.chat(this.agentId, critique);
    return resp.reply;
  }

  async withdrawOpinion(): Promise<RevisionOutcome> {
    const resp = await this.api.withdrawOpinion(
      this.deliberationId,
      this.agentId,
    );
    return this.refreshConsensus(resp.event_seq);
  }

  /**
   * Save a drag-reordered ranking. On a stale-pool conflict the fresh
   * pool is fetched and handed to `onConflict`, which maps the user's
   * intended order onto it (or returns null to abort); the retry then
   * goes out against the fresh pool.
   */
  async saveRanking(
    ranking: string[],
    onConflict: (freshPool: string[]) => string[] | null,
  ): Promise<RevisionOutcome | null> {
    try {
      const resp = await this.api.putRanking(
        this.deliberationId,
        this.agentId,
        ranking,
      );
      return this.refreshConsensus(resp.event_seq);
    } catch (err) {
      if (!(err instanceof ApiError) || !err.isConflict) {
        throw err;
      }
      const state = await this.api.getDeliberation(this.deliberationId);
      const freshPool = (state.active_pool ?? []) as string[];
      const retry = onConflict([...freshPool]);
      if (retry === null) {
        return null;
      }
      const resp = await this.api.putRanking(
        this.deliberationId,
        this.agentId,
        retry,
      );
      return this.refreshConsensus(resp.event_seq);
    }
  }
}

/**
 * Map a stale intended order onto a fresh pool: keep the user's
 * relative order for statements that still exist, then append pool
 * newcomers at the median position rule's expense — here simply at the
 * end, leaving the final placement to the user before saving.
 */
export function reconcileOrder(
  intended: string[],
  freshPool: string[],
): string[] {
  const fresh = new Set(freshPool);
  const kept = intended.filter((id) => fresh.has(id));
  const keptSet = new Set(kept);
  const added = freshPool.filter((id) => !keptSet.has(id));
  return [...kept, ...added];
}
