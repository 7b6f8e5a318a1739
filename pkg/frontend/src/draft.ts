// Scenario draft: the editable lever state behind the form controls.

import { FEATURE_NAMES, type FeatureName, type Features, type ScenarioRequest } from './api.js';

export interface LeverRange {
  min: number;
  max: number;
  step: number;
  label: string;
  unit: string;
}

// The gateway accepts any finite value >= 0; the maxima here are the
// ranges the controls offer, so every draft stays servable.
export const LEVER_RANGES: Record<FeatureName, LeverRange> = {
  day_discharges: { min: 0, max: 40, step: 0.5, label: 'Day discharges', unit: 'beds/shift' },
  eve_discharges: { min: 0, max: 40, step: 0.5, label: 'Evening discharges', unit: 'beds/shift' },
  night_discharges: { min: 0, max: 40, step: 0.5, label: 'Night discharges', unit: 'beds/shift' },
  day_ua: { min: 0, max: 12, step: 1, label: 'Day unit assistants', unit: 'staff' },
  eve_ua: { min: 0, max: 12, step: 1, label: 'Evening unit assistants', unit: 'staff' },
  night_ua: { min: 0, max: 12, step: 1, label: 'Night unit assistants', unit: 'staff' },
  day_evs: { min: 0, max: 12, step: 1, label: 'Day EVS cleaners', unit: 'staff' },
  eve_evs: { min: 0, max: 12, step: 1, label: 'Evening EVS cleaners', unit: 'staff' },
  night_evs: { min: 0, max: 12, step: 1, label: 'Night EVS cleaners', unit: 'staff' },
  avg_dirty_wait: { min: 0, max: 240, step: 1, label: 'Mean dirty wait', unit: 'min' },
  avg_assigned_wait: { min: 0, max: 240, step: 1, label: 'Mean dispatch lag', unit: 'min' },
  avg_clean_wait: { min: 0, max: 240, step: 1, label: 'Mean cleaning time', unit: 'min' },
  avg_in_progress_wait: { min: 0, max: 240, step: 1, label: 'Mean final prep', unit: 'min' },
};

export const REPLICATION_RANGE = { min: 1, max: 200 };
export const SEED_MAX = 2 ** 32 - 1;

export interface ScenarioDraft {
  features: Features;
  replications: number;
  fixedSeed: boolean;
  seed: number;
}

export function defaultDraft(): ScenarioDraft {
  return {
    features: {
      day_discharges: 8,
      eve_discharges: 5,
      night_discharges: 2,
      day_ua: 3,
      eve_ua: 2,
      night_ua: 1,
      day_evs: 3,
      eve_evs: 2,
      night_evs: 1,
      avg_dirty_wait: 15,
      avg_assigned_wait: 8,
      avg_clean_wait: 35,
      avg_in_progress_wait: 15,
    },
    replications: 10,
    fixedSeed: true,
    seed: 42,
  };
}

/** Clamp a raw control value into the lever's range; junk falls to the minimum. */
export function clampFeature(name: FeatureName, raw: number): number {
  const range = LEVER_RANGES[name];
  if (!Number.isFinite(raw)) return range.min;
  return Math.min(range.max, Math.max(range.min, raw));
}

export function clampReplications(raw: number): number {
  if (!Number.isFinite(raw)) return REPLICATION_RANGE.min;
  const n = Math.round(raw);
  return Math.min(REPLICATION_RANGE.max, Math.max(REPLICATION_RANGE.min, n));
}

export function clampSeed(raw: number): number {
  if (!Number.isFinite(raw)) return 0;
  const n = Math.floor(raw);
  return Math.min(SEED_MAX, Math.max(0, n));
}

/** Return a copy of the draft with every field forced into range. */
export function clampDraft(draft: ScenarioDraft): ScenarioDraft {
  const features = {} as Features;
  for (const name of FEATURE_NAMES) {
    features[name] = clampFeature(name, draft.features[name]);
  }
  return {
    features,
    replications: clampReplications(draft.replications),
    fixedSeed: draft.fixedSeed,
    seed: clampSeed(draft.seed),
  };
}

/**
 * Apply a raw control edit to the draft. The draft and control always
 * take the clamped value, but an out-of-range or junk edit is not
 * accepted: the caller must not fire a prediction request for it.
 */
export function applyLeverEdit(
  draft: ScenarioDraft,
  name: FeatureName,
  raw: number,
): { accepted: boolean; value: number } {
  const value = clampFeature(name, raw);
  draft.features[name] = value;
  return { accepted: value === raw, value };
}

export function randomSeed(): number {
  return Math.floor(Math.random() * (SEED_MAX + 1));
}

/** Serialize a draft to the scenario body the gateway accepts, losslessly. */
export function serializeScenario(draft: ScenarioDraft): ScenarioRequest {
  const features = {} as Features;
  for (const name of FEATURE_NAMES) {
    features[name] = draft.features[name];
  }
  return {
    features,
    replications: draft.replications,
    seed: draft.seed,
  };
}

/** Mirror of the gateway's scenario validation; [] means servable. */
export function scenarioProblems(request: ScenarioRequest): string[] {
  const problems: string[] = [];
  for (const name of FEATURE_NAMES) {
    const value = request.features[name];
    if (typeof value !== 'number' || !Number.isFinite(value) || value < 0) {
      problems.push(`${name} must be a finite number >= 0`);
    }
  }
  const extra = Object.keys(request.features).filter(
    (key) => !(FEATURE_NAMES as readonly string[]).includes(key),
  );
  for (const key of extra) {
    problems.push(`unknown feature ${key}`);
  }
  if (!Number.isInteger(request.replications) || request.replications < 1) {
    problems.push('replications must be an integer >= 1');
  }
  if (!Number.isInteger(request.seed) || request.seed < 0 || request.seed >= 2 ** 64) {
    problems.push('seed must be an unsigned 64-bit integer');
  }
  return problems;
}
