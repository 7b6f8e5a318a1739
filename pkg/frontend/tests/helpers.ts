// Shared test helpers: recorded gateway payloads and fetch stubs.

import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import { vi } from 'vitest';
import type { Features } from '../src/api.js';

/** Parse a response body recorded from a live gateway. */
export function recorded<T>(name: string): T {
  const path = join(process.cwd(), 'tests', 'recorded', name);
  return JSON.parse(readFileSync(path, 'utf8')) as T;
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

/** Install a fetch mock for the test and return it. */
export function stubFetch(): ReturnType<typeof vi.fn> {
  const mock = vi.fn();
  vi.stubGlobal('fetch', mock);
  return mock;
}

export const SAMPLE_FEATURES: Features = {
  day_discharges: 6,
  eve_discharges: 4,
  night_discharges: 2,
  day_ua: 2,
  eve_ua: 2,
  night_ua: 1,
  day_evs: 2,
  eve_evs: 2,
  night_evs: 1,
  avg_dirty_wait: 20,
  avg_assigned_wait: 8,
  avg_clean_wait: 40,
  avg_in_progress_wait: 12,
};
