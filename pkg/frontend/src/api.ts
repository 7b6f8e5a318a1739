// Typed client for the bedtwin gateway HTTP API.

export const FEATURE_NAMES = [
  'day_discharges',
  'eve_discharges',
  'night_discharges',
  'day_ua',
  'eve_ua',
  'night_ua',
  'day_evs',
  'eve_evs',
  'night_evs',
  'avg_dirty_wait',
  'avg_assigned_wait',
  'avg_clean_wait',
  'avg_in_progress_wait',
] as const;

export type FeatureName = (typeof FEATURE_NAMES)[number];
export type Features = Record<FeatureName, number>;

/** Scenario request as the gateway accepts it; omitted fields use server defaults. */
export interface ScenarioRequest {
  features: Features;
  replications: number;
  seed: number;
}

export interface ReplicationSummary {
  rep_seed: number;
  overall_mean_btt: number | null;
  daily_mean_btt: (number | null)[];
  completed_count: number;
  uncompleted_count: number;
  generated_count: number;
  warnings: string[];
}

export interface ScenarioResult {
  mean_btt: number | null;
  sd_btt: number | null;
  replications: number;
  per_replication: ReplicationSummary[];
  warnings: string[];
}

export type JobStatus = 'queued' | 'running' | 'done' | 'failed';

export interface JobView {
  job_id: string;
  kind: string;
  status: JobStatus;
  submitted_at: number;
  finished_at: number | null;
  result: unknown;
  error_message: string | null;
}

export interface PredictResponse {
  prediction: number;
  model_id: string;
}

export interface ImportanceView {
  mean_abs_phi: Record<string, number>;
  ranking: string[];
}

export interface SensitivityResult {
  model_id: string;
  mode: string;
  n_rows: number;
  n_permutations: number | null;
  importance: ImportanceView;
}

export interface TrainRequest {
  source?: 'synthetic' | 'ingested';
  n_scenarios?: number;
  seed?: number;
}

export interface SensitivityRequest {
  rows: Features[];
  model_id?: string;
  mode?: 'exact' | 'sampled';
  n_permutations?: number;
  seed?: number;
}

/** Error body the gateway returns for every non-2xx response. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export class GatewayClient {
  constructor(private readonly base: string = '') {}

  /** The feature vector goes at the body root, keyed by feature name. */
  predict(features: Features): Promise<PredictResponse> {
    return this.request('POST', '/api/surrogate/predict', features);
  }

  runScenario(scenario: ScenarioRequest): Promise<JobView> {
    return this.request('POST', '/api/scenarios/run', scenario);
  }

  getJob(jobId: string): Promise<JobView> {
    return this.request('GET', `/api/jobs/${jobId}`);
  }

  train(body: TrainRequest = {}): Promise<JobView> {
    return this.request('POST', '/api/surrogate/train', body);
  }

  globalSensitivity(body: SensitivityRequest): Promise<JobView> {
    return this.request('POST', '/api/sensitivity/global', body);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.base + path, {
        method,
        headers: body === undefined ? undefined : { 'Content-Type': 'application/json' },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, 'unreachable', `gateway unreachable: ${String(err)}`);
    }
    const text = await resp.text();
    let payload: unknown = null;
    if (text !== '') {
      try {
        payload = JSON.parse(text);
      } catch {
        payload = null;
      }
    }
    if (!resp.ok) {
      const err = payload as { code?: string; message?: string } | null;
      throw new ApiError(resp.status, err?.code ?? 'http_error', err?.message ?? `HTTP ${resp.status}`);
    }
    return payload as T;
  }
}
