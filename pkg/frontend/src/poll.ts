import type { WorkbenchClient } from './api.js';
import type { SessionState } from './types.js';

const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  /** Skip requests while true (hidden tab); polling resumes when it clears. */
  isHidden?: () => boolean;
  onTick?: (state: SessionState) => void;
}

/**
 * Poll a session until it leaves its job state. Resolves with the ready
 * state, rejects when the job fails or the timeout elapses.
 */
export async function pollUntilReady(
  client: WorkbenchClient,
  sessionId: string,
  opts: PollOptions = {},
): Promise<SessionState> {
  const interval = opts.intervalMs ?? 1000;
  const deadline = Date.now() + (opts.timeoutMs ?? 10 * 60 * 1000);
  while (Date.now() < deadline) {
    if (!(opts.isHidden?.() ?? false)) {
      const state = await client.getSession(sessionId);
      opts.onTick?.(state);
      if (state.status === 'ready') return state;
      if (state.status === 'failed') {
        throw new Error(state.error ?? 'job failed');
      }
    }
    await sleep(interval);
  }
  throw new Error(`session ${sessionId} still busy after timeout`);
}
