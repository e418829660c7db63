import type { WorkbenchClient } from './api.js';
import type { ClassifyResult } from './types.js';

/** One pasted line per document; blank lines are not documents. */
export function parseTexts(input: string): string[] {
  return input
    .split('\n')
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
}

export function canSubmit(input: string): boolean {
  return parseTexts(input).length > 0;
}

export async function classifyInput(
  client: WorkbenchClient,
  sessionId: string,
  input: string,
): Promise<ClassifyResult[]> {
  const texts = parseTexts(input);
  if (texts.length === 0) return [];
  const resp = await client.classify(sessionId, texts);
  return resp.results;
}

/** The score bars render API values as-is; this only orders them. */
export function sortedScores(result: ClassifyResult): Array<[string, number]> {
  return Object.entries(result.scores).sort((a, b) => b[1] - a[1]);
}
