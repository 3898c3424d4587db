/**
 * Transform the ranking-distribution payload into ridgeline chart data:
 * one ridge per active statement, ranks 1..pool_size on a shared axis.
 */
import type { RankingDistribution } from "./api.js";

export interface Ridge {
  statementId: string;
  /** counts[r - 1] = number of participants ranking the statement at r */
  counts: number[];
}

export interface RidgelineData {
  ranks: number[]; // shared axis, 1..poolSize
  ridges: Ridge[]; // one per statement, sorted by statement id
  participants: number;
}

/**
 * Build ridgeline data, checking the payload's conservation property:
 * for every rank position, the counts across statements sum to the
 * number of participants with a ranking.
 */
export function toRidgeline(payload: RankingDistribution): RidgelineData {
  const poolSize = payload.pool_size;
  const participants = payload.participants_with_ranking;
  const statementIds = Object.keys(payload.distribution).sort();
  if (statementIds.length !== poolSize) {
    throw new Error(
      `distribution covers ${statementIds.length} statements, pool has ${poolSize}`,
    );
  }
  const ridges: Ridge[] = statementIds.map((statementId) => {
    const hist = payload.distribution[statementId]!;
    const counts = Array.from({ length: poolSize }, (_, i) => {
      const count = hist[String(i + 1)] ?? 0;
      if (count < 0 || !Number.isInteger(count)) {
        throw new Error(`bad count ${count} for ${statementId} rank ${i + 1}`);
      }
      return count;
    });
    const extras = Object.keys(hist).filter(
      (rank) => Number(rank) < 1 || Number(rank) > poolSize,
    );
    if (extras.length > 0) {
      throw new Error(`ranks out of range for ${statementId}: ${extras}`);
    }
    return { statementId, counts };
  });

  for (let r = 0; r < poolSize; r++) {
    const total = ridges.reduce((acc, ridge) => acc + ridge.counts[r]!, 0);
    if (total !== participants) {
      throw new Error(
        `rank ${r + 1} counts sum to ${total}, expected ${participants}`,
      );
    }
  }

  return {
    ranks: Array.from({ length: poolSize }, (_, i) => i + 1),
    ridges,
    participants,
  };
}

/** True when there is nothing to draw (empty pool → empty-state view). */
export function isEmpty(payload: RankingDistribution): boolean {
  return payload.pool_size === 0;
}
