import { ApiError, WorkbenchClient } from './api.js';
import type { StagedEdits } from './staging.js';
import { pollUntilReady } from './poll.js';
import type { PollOptions } from './poll.js';
import type { TopicsResponse } from './types.js';

export type RefineOutcome =
  | { kind: 'ok'; topics: TopicsResponse }
  | { kind: 'invalid-term'; term: string | null; message: string }
  | { kind: 'rejected'; message: string };

const TERM_RE = /'([^']*)'/;

/**
 * One refinement round: submit the staged edit batch, then trigger a
 * warm-start fine-tune and poll it to completion. A 422 from the keyword
 * endpoint means an out-of-vocabulary term; it is surfaced for inline
 * display and no fine-tune request is made. Staged edits are discarded
 * only after the batch is accepted.
 */
export async function runRefinementRound(
  client: WorkbenchClient,
  sessionId: string,
  staged: StagedEdits,
  poll: PollOptions = {},
): Promise<RefineOutcome> {
  if (!staged.hasEdits()) {
    return { kind: 'rejected', message: 'no staged edits' };
  }
  try {
    await client.editKeywords(sessionId, staged.toRequest());
  } catch (err) {
    if (err instanceof ApiError && err.status === 422) {
      return {
        kind: 'invalid-term',
        term: TERM_RE.exec(err.detail)?.[1] ?? null,
        message: err.detail,
      };
    }
    if (err instanceof ApiError) {
      return { kind: 'rejected', message: err.detail };
    }
    throw err;
  }
  staged.discard();
  await client.finetune(sessionId);
  await pollUntilReady(client, sessionId, poll);
  const topics = await client.getTopics(sessionId, 5);
  return { kind: 'ok', topics };
}
