import { describe, expect, it } from 'vitest';

import { WorkbenchClient } from '../src/api';
import { canSubmit, classifyInput, parseTexts, sortedScores } from '../src/playground';

describe('parseTexts', () => {
  it('one document per nonempty line', () => {
    expect(parseTexts('alpha\n\n  beta gamma  \n')).toEqual(['alpha', 'beta gamma']);
  });

  it('empty input disables submission', () => {
    expect(canSubmit('')).toBe(false);
    expect(canSubmit('  \n \n')).toBe(false);
    expect(canSubmit('word')).toBe(true);
  });
});

describe('classifyInput', () => {
  it('sends parsed lines and returns one row per text', async () => {
    let sent: unknown = null;
    const client = new WorkbenchClient('http://test', async (_url, init) => {
      sent = JSON.parse(String(init?.body));
      return new Response(
        JSON.stringify({
          results: [
            { text: 'a', label: 'g0', scores: { g0: 0.9, g1: 0.1 } },
            { text: 'b', label: 'g1', scores: { g0: 0.2, g1: 0.8 } },
            { text: 'c', label: 'g0', scores: { g0: 0.6, g1: 0.4 } },
          ],
        }),
        { status: 200 },
      );
    });
    const results = await classifyInput(client, 's1', 'a\nb\nc');
    expect(sent).toEqual({ texts: ['a', 'b', 'c'] });
    expect(results).toHaveLength(3);
  });

  it('issues no request for empty input', async () => {
    const client = new WorkbenchClient('http://test', async () => {
      throw new Error('should not be called');
    });
    expect(await classifyInput(client, 's1', ' \n ')).toEqual([]);
  });
});

describe('sortedScores', () => {
  it('orders bars by score, values untouched', () => {
    const rows = sortedScores({
      text: 't',
      label: 'g1',
      scores: { g0: 0.25, g1: 0.5, g2: 0.25 },
    });
    expect(rows[0]).toEqual(['g1', 0.5]);
    expect(rows.map(([g]) => g)).toHaveLength(3);
  });
});
