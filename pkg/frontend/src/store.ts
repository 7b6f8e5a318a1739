// Pinned scenario comparisons: immutable snapshots plus sim outcome state.

import type { ScenarioRequest, ScenarioResult } from './api.js';

export type SimOutcome =
  | { state: 'pending' }
  | { state: 'done'; mean: number | null; sd: number | null; warnings: string[] }
  | { state: 'failed'; message: string };

export interface ComparisonEntry {
  readonly id: number;
  readonly label: string;
  readonly scenario: ScenarioRequest;
  readonly surrogate: number | null;
  readonly sim: SimOutcome;
}

function freezeScenario(scenario: ScenarioRequest): ScenarioRequest {
  const copy: ScenarioRequest = {
    features: Object.freeze({ ...scenario.features }),
    replications: scenario.replications,
    seed: scenario.seed,
  };
  return Object.freeze(copy);
}

export class ComparisonStore {
  private items: ComparisonEntry[] = [];
  private nextId = 1;
  private listeners: (() => void)[] = [];

  entries(): readonly ComparisonEntry[] {
    return this.items;
  }

  get(id: number): ComparisonEntry | undefined {
    return this.items.find((entry) => entry.id === id);
  }

  /** Snapshot the scenario and surrogate estimate; the entry never mutates. */
  pin(label: string, scenario: ScenarioRequest, surrogate: number | null): ComparisonEntry {
    const entry: ComparisonEntry = Object.freeze({
      id: this.nextId++,
      label,
      scenario: freezeScenario(scenario),
      surrogate,
      sim: Object.freeze({ state: 'pending' as const }),
    });
    this.items = [...this.items, entry];
    this.emit();
    return entry;
  }

  resolve(id: number, result: ScenarioResult): void {
    this.transition(id, {
      state: 'done',
      mean: result.mean_btt,
      sd: result.sd_btt,
      warnings: result.warnings,
    });
  }

  fail(id: number, message: string): void {
    this.transition(id, { state: 'failed', message });
  }

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((fn) => fn !== listener);
    };
  }

  private transition(id: number, sim: SimOutcome): void {
    this.items = this.items.map((entry) =>
      entry.id === id ? Object.freeze({ ...entry, sim: Object.freeze(sim) }) : entry,
    );
    this.emit();
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }
}
