/** JSON payload shapes of the workbench service, mirrored field-for-field. */

export interface SeedGroupJson {
  label: string;
  keywords: string[];
}

export interface TopicWord {
  term: string;
  probability: number;
}

export interface TopicJson {
  topic: number;
  matched_groups: string[];
  words: TopicWord[];
}

export interface TopicsResponse {
  topics: TopicJson[];
  assignments: Record<string, number>;
}

export type SessionStatus = 'created' | 'training' | 'finetuning' | 'ready' | 'failed';

export interface TelemetryEntry {
  epoch: number;
  [key: string]: number | Record<string, number>;
}

export interface SessionState {
  id: string;
  corpus_id: string;
  status: SessionStatus;
  error: string | null;
  seeds: SeedGroupJson[];
  metrics: Record<string, unknown> | null;
  telemetry: TelemetryEntry[];
  events: number;
}

export interface KeywordEdit {
  group: string;
  term: string;
}

export interface KeywordEditRequest {
  add: KeywordEdit[];
  remove: KeywordEdit[];
  confirm: KeywordEdit[];
  new_groups: SeedGroupJson[];
}

export interface ClassifyResult {
  text: string;
  label: string;
  scores: Record<string, number>;
}

export interface ClassifyResponse {
  results: ClassifyResult[];
}

export interface CreateSessionRequest {
  corpus_id: string;
  config?: Record<string, unknown>;
  train_config?: Record<string, unknown>;
  seeds: SeedGroupJson[];
}
