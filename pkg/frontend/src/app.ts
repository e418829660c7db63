import { WorkbenchClient } from './api.js';
import { buildTopicCards, cardTitle, TopicCard } from './board.js';
import { changedRowCount, diffTopics } from './diff.js';
import { canSubmit, classifyInput, sortedScores } from './playground.js';
import { runRefinementRound } from './refine.js';
import { StagedEdits } from './staging.js';
import type { SessionState, TopicsResponse } from './types.js';

const $ = (id: string) => document.getElementById(id)!;

const params = new URLSearchParams(location.search);
const client = new WorkbenchClient(params.get('api') ?? 'http://127.0.0.1:8000');
const sessionId = params.get('session') ?? '';

const staged = new StagedEdits();
let lastTopics: TopicsResponse | null = null;
let busy = false;

function setBanner(text: string, kind: 'info' | 'error' = 'info'): void {
  const el = $('banner');
  el.textContent = text;
  el.className = text ? `banner ${kind}` : 'banner';
}

function bar(p: number): string {
  // width only; the displayed number is the API value verbatim
  return `<span class="bar" style="width:${Math.min(100, p * 100)}%"></span>`;
}

function renderCard(card: TopicCard): string {
  const rows = card.words
    .map((w) => `<li>${bar(w.probability)}<code>${w.term}</code> ${w.probability}</li>`)
    .join('');
  const cls = ['card', card.unseeded ? 'unseeded' : '', card.stale ? 'stale' : '']
    .filter(Boolean)
    .join(' ');
  const badge = card.stale ? '<em class="badge">stale</em>' : '';
  return `<section class="${cls}"><h3>${cardTitle(card)} ${badge}</h3><ol>${rows}</ol></section>`;
}

function renderBoard(resp: TopicsResponse, stale = false): void {
  lastTopics = stale ? lastTopics : resp;
  $('board').innerHTML = buildTopicCards(resp, stale).map(renderCard).join('');
}

function renderSeeds(state: SessionState): void {
  $('seeds').innerHTML = state.seeds
    .map((g) => {
      const removals = staged.pendingRemovals(g.label);
      const kws = g.keywords
        .map((k) => {
          const cls = removals.includes(k) ? 'kw staged-remove' : 'kw';
          return `<button class="${cls}" data-group="${g.label}" data-term="${k}">${k}</button>`;
        })
        .join(' ');
      const added = staged
        .pendingAdds(g.label)
        .map((k) => `<span class="kw staged-add">${k}</span>`)
        .join(' ');
      return `<div class="group"><strong>${g.label}</strong> ${kws} ${added}
        <input class="add-input" data-group="${g.label}" placeholder="add keyword"/></div>`;
    })
    .join('');
  for (const btn of document.querySelectorAll<HTMLButtonElement>('#seeds .kw[data-term]')) {
    btn.onclick = () => {
      staged.stageRemove(btn.dataset.group!, btn.dataset.term!);
      syncControls();
      void refreshState();
    };
  }
  for (const input of document.querySelectorAll<HTMLInputElement>('#seeds .add-input')) {
    input.onchange = () => {
      const term = input.value.trim();
      if (term) staged.stageAdd(input.dataset.group!, term);
      input.value = '';
      syncControls();
      void refreshState();
    };
  }
}

function syncControls(): void {
  ($('finetune') as HTMLButtonElement).disabled = busy || !staged.hasEdits();
  ($('classify') as HTMLButtonElement).disabled =
    busy || !canSubmit(($('playground-input') as HTMLTextAreaElement).value);
}

async function refreshState(): Promise<void> {
  const state = await client.getSession(sessionId);
  renderSeeds(state);
  $('status').textContent = `${state.status}${state.error ? ` — ${state.error}` : ''}`;
  if (state.status === 'ready') {
    renderBoard(await client.getTopics(sessionId, 5));
  } else if (lastTopics) {
    renderBoard(lastTopics, true);
  }
}

async function onFinetune(): Promise<void> {
  busy = true;
  syncControls();
  setBanner('fine-tuning…');
  const before = lastTopics;
  try {
    const outcome = await runRefinementRound(client, sessionId, staged, {
      intervalMs: 1000,
      isHidden: () => document.hidden,
      onTick: (s) => ($('status').textContent = s.status),
    });
    if (outcome.kind === 'invalid-term') {
      setBanner(outcome.message, 'error');
      for (const el of document.querySelectorAll('#seeds .staged-add')) {
        if (el.textContent === outcome.term) el.classList.add('invalid');
      }
      return;
    }
    if (outcome.kind === 'rejected') {
      setBanner(outcome.message, 'error');
      return;
    }
    setBanner('');
    renderBoard(outcome.topics);
    if (before) {
      const diffs = diffTopics(before, outcome.topics);
      $('diff').textContent = JSON.stringify(diffs, null, 2);
      $('diff-summary').textContent = `${changedRowCount(diffs)} changed rows`;
    }
    await refreshState();
  } catch (err) {
    setBanner(String(err), 'error');
  } finally {
    busy = false;
    syncControls();
  }
}

async function onClassify(): Promise<void> {
  const input = ($('playground-input') as HTMLTextAreaElement).value;
  const results = await classifyInput(client, sessionId, input);
  $('playground-out').innerHTML = results
    .map((r) => {
      const bars = sortedScores(r)
        .map(([g, s]) => `<li>${bar(s)}${g} ${s}</li>`)
        .join('');
      return `<div class="result"><strong>${r.label}</strong> — ${r.text}<ul>${bars}</ul></div>`;
    })
    .join('');
}

export function main(): void {
  if (!sessionId) {
    setBanner('missing ?session= query parameter', 'error');
    return;
  }
  $('finetune').onclick = () => void onFinetune();
  $('classify').onclick = () => void onClassify();
  ($('playground-input') as HTMLTextAreaElement).oninput = syncControls;
  syncControls();
  void refreshState();
}

main();
