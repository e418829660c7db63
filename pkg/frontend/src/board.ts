import type { TopicWord, TopicsResponse } from './types.js';

export interface TopicCard {
  topic: number;
  /** Seed group labels matched to this topic; several labels mean merged groups. */
  groupLabels: string[];
  /** True when no seed group matched: a discovery candidate. */
  unseeded: boolean;
  /** True while a fine-tune is running and the card shows pre-job state. */
  stale: boolean;
  words: TopicWord[];
}

/**
 * View models for the topic board, one card per topic. Word probabilities
 * are carried through exactly as received; merged groups share a card via
 * the joint label list.
 */
export function buildTopicCards(resp: TopicsResponse, stale = false): TopicCard[] {
  return resp.topics.map((t) => ({
    topic: t.topic,
    groupLabels: [...t.matched_groups],
    unseeded: t.matched_groups.length === 0,
    stale,
    words: t.words,
  }));
}

export function cardTitle(card: TopicCard): string {
  if (card.unseeded) return `topic ${card.topic} (unseeded)`;
  return `topic ${card.topic} [${card.groupLabels.join(' + ')}]`;
}
