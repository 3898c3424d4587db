/**
 * Per-screen view models. All view data derives solely from GET
 * endpoints; the client holds no authoritative state.
 */
import type {
  ApiClient,
  ConsensusView,
  DigestView,
  ReviewableActionView,
} from "./api.js";
import { isEmpty, toRidgeline, type RidgelineData } from "./ridgeline.js";

export interface DeliberationViewModel {
  question: string;
  consensus: ConsensusView;
  ridgeline: RidgelineData | null; // null → empty-state message
  ownOpinion: string | null;
  ownRanking: string[] | null;
}

export async function loadDeliberationView(
  api: ApiClient,
  deliberationId: string,
  agentId: string,
): Promise<DeliberationViewModel> {
  const state = await api.getDeliberation(deliberationId);
  const consensus = await api.getConsensus(deliberationId);
  const distribution = await api.getRankingDistribution(deliberationId);
  const opinions = state.opinions as Record<string, { text: string }>;
  const rankings = state.rankings as Record<string, string[]>;
  return {
    question: String(state.question),
    consensus,
    ridgeline: isEmpty(distribution) ? null : toRidgeline(distribution),
    ownOpinion: opinions[agentId]?.text ?? null,
    ownRanking: rankings[agentId] ?? null,
  };
}

export interface AgentViewModel {
  memory: string;
  heartbeatInterval: number;
  lastHeartbeat: number;
}

export async function loadAgentView(
  api: ApiClient,
  agentId: string,
): Promise<AgentViewModel> {
  const agent = await api.getAgent(agentId);
  return {
    memory: agent.memory,
    heartbeatInterval: agent.heartbeat_interval,
    lastHeartbeat: agent.last_heartbeat,
  };
}

/**
 * Diff preview for a memory edit: memory edits act globally on the
 * agent, so the UI shows removed/added lines before saving.
 */
export function memoryDiff(
  before: string,
  after: string,
): { removed: string[]; added: string[] } {
  const beforeLines = before.length > 0 ? before.split("\n") : [];
  const afterLines = after.length > 0 ? after.split("\n") : [];
  const beforeSet = new Set(beforeLines);
  const afterSet = new Set(afterLines);
  return {
    removed: beforeLines.filter((line) => !afterSet.has(line)),
    added: afterLines.filter((line) => !beforeSet.has(line)),
  };
}

export interface ReviewViewModel {
  digest: DigestView | null;
  /** unreviewed actions, highest risk first (server-sorted) */
  actions: ReviewableActionView[];
}

export async function loadReviewView(
  api: ApiClient,
  userId: string,
): Promise<ReviewViewModel> {
  const [digestResp, actionsResp] = await Promise.all([
    api.getDigest(userId),
    api.getUserActions(userId),
  ]);
  return { digest: digestResp.digest, actions: actionsResp.actions };
}
