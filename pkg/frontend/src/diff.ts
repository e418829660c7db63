import type { TopicWord, TopicsResponse } from './types.js';

export interface DiffRow {
  rank: number;
  before: TopicWord | null;
  after: TopicWord | null;
  changed: boolean;
}

export interface TopicDiff {
  topic: number;
  rows: DiffRow[];
}

/**
 * Rank-aligned before/after comparison of each topic's top words, for the
 * side-by-side view after a fine-tune. A row is flagged changed when the
 * term at that rank differs; probability drift on an unchanged term is
 * shown but not highlighted.
 */
export function diffTopics(before: TopicsResponse, after: TopicsResponse): TopicDiff[] {
  return after.topics.map((post) => {
    const pre = before.topics.find((t) => t.topic === post.topic);
    const n = Math.max(pre?.words.length ?? 0, post.words.length);
    const rows: DiffRow[] = [];
    for (let r = 0; r < n; r++) {
      const b = pre?.words[r] ?? null;
      const a = post.words[r] ?? null;
      rows.push({ rank: r, before: b, after: a, changed: b?.term !== a?.term });
    }
    return { topic: post.topic, rows };
  });
}

export function changedRowCount(diffs: TopicDiff[]): number {
  return diffs.reduce((n, d) => n + d.rows.filter((r) => r.changed).length, 0);
}
