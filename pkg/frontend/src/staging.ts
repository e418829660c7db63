import type { KeywordEdit, KeywordEditRequest, SeedGroupJson } from './types.js';

/**
 * Client-side staging area for one round of keyword edits. Edits accumulate
 * locally and go to the server as a single batch, so one fine-tune
 * corresponds to one human decision round. The server remains the source of
 * truth: staged state is discarded on submit or session reload, never
 * merged into local copies of the seed sets.
 */
export class StagedEdits {
  private adds: KeywordEdit[] = [];
  private removes: KeywordEdit[] = [];
  private confirms: KeywordEdit[] = [];
  private newGroups: SeedGroupJson[] = [];

  stageAdd(group: string, term: string): void {
    this.pushUnique(this.adds, { group, term });
  }

  stageRemove(group: string, term: string): void {
    this.pushUnique(this.removes, { group, term });
  }

  stageConfirm(group: string, term: string): void {
    this.pushUnique(this.confirms, { group, term });
  }

  stageNewGroup(label: string, keywords: string[]): void {
    if (!this.newGroups.some((g) => g.label === label)) {
      this.newGroups.push({ label, keywords: [...keywords] });
    }
  }

  unstage(kind: 'add' | 'remove' | 'confirm', group: string, term: string): void {
    const list = kind === 'add' ? this.adds : kind === 'remove' ? this.removes : this.confirms;
    const i = list.findIndex((e) => e.group === group && e.term === term);
    if (i >= 0) list.splice(i, 1);
  }

  hasEdits(): boolean {
    return (
      this.adds.length + this.removes.length + this.confirms.length + this.newGroups.length > 0
    );
  }

  /** Terms staged for removal in a group, for rendering strike-through rows. */
  pendingRemovals(group: string): string[] {
    return this.removes.filter((e) => e.group === group).map((e) => e.term);
  }

  pendingAdds(group: string): string[] {
    return this.adds.filter((e) => e.group === group).map((e) => e.term);
  }

  toRequest(): KeywordEditRequest {
    return {
      add: [...this.adds],
      remove: [...this.removes],
      confirm: [...this.confirms],
      new_groups: this.newGroups.map((g) => ({ label: g.label, keywords: [...g.keywords] })),
    };
  }

  discard(): void {
    this.adds = [];
    this.removes = [];
    this.confirms = [];
    this.newGroups = [];
  }

  private pushUnique(list: KeywordEdit[], edit: KeywordEdit): void {
    if (!list.some((e) => e.group === edit.group && e.term === edit.term)) {
      list.push(edit);
    }
  }
}
