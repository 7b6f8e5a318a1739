// Live prediction state machine and panel renderers.

import { ApiError, type Features, type GatewayClient } from './api.js';
import { renderBand } from './charts.js';
import type { ComparisonEntry } from './store.js';

export type PredictState =
  | { kind: 'idle' }
  | { kind: 'no_model' }
  | { kind: 'value'; prediction: number; modelId: string }
  | { kind: 'invalid'; message: string }
  | { kind: 'stale'; prediction: number | null; message: string };

export interface LivePredictor {
  update(features: Features): void;
  flush(): Promise<void>;
}

/**
 * Debounce feature edits into predict calls, keeping only the newest
 * in-flight response. A rejected request flags the last shown value as
 * stale instead of blanking the panel; a 400 surfaces the server's
 * message as a validation badge.
 */
export function createLivePredictor(
  client: GatewayClient,
  onState: (state: PredictState) => void,
  debounceMs = 250,
): LivePredictor {
  let timer: ReturnType<typeof setTimeout> | null = null;
  let requestSeq = 0;
  let lastShown: number | null = null;
  let inFlight: Promise<void> = Promise.resolve();

  async function send(features: Features): Promise<void> {
    const seq = ++requestSeq;
    try {
      const resp = await client.predict(features);
      if (seq !== requestSeq) return;
      lastShown = resp.prediction;
      onState({ kind: 'value', prediction: resp.prediction, modelId: resp.model_id });
    } catch (err) {
      if (seq !== requestSeq) return;
      if (err instanceof ApiError && err.status === 400) {
        onState({ kind: 'invalid', message: err.message });
      } else if (err instanceof ApiError && err.code === 'no_model') {
        onState({ kind: 'no_model' });
      } else {
        const message = err instanceof Error ? err.message : String(err);
        onState({ kind: 'stale', prediction: lastShown, message });
      }
    }
  }

  return {
    update(features: Features): void {
      if (timer !== null) clearTimeout(timer);
      timer = setTimeout(() => {
        timer = null;
        inFlight = send(features);
      }, debounceMs);
    },
    flush(): Promise<void> {
      return inFlight;
    },
  };
}

function badge(className: string, text: string): HTMLSpanElement {
  const span = document.createElement('span');
  span.className = `badge ${className}`;
  span.textContent = text;
  return span;
}

/** Render the live surrogate estimate card for the current draft. */
export function renderPredictPanel(el: HTMLElement, state: PredictState): void {
  el.textContent = '';
  const value = document.createElement('div');
  value.className = 'predict-value';
  const note = document.createElement('div');
  note.className = 'predict-note';
  switch (state.kind) {
    case 'idle':
      value.textContent = '—';
      note.textContent = 'Adjust a lever to get an estimate.';
      break;
    case 'no_model':
      value.textContent = '—';
      note.appendChild(badge('badge-warn', 'no model'));
      note.append(' Train a surrogate to enable live estimates.');
      break;
    case 'value':
      value.textContent = `${state.prediction.toFixed(1)} min`;
      note.textContent = `model ${state.modelId.slice(0, 8)}`;
      break;
    case 'invalid':
      value.textContent = '—';
      note.appendChild(badge('badge-error', 'rejected'));
      note.append(` ${state.message}`);
      break;
    case 'stale':
      value.textContent = state.prediction === null ? '—' : `${state.prediction.toFixed(1)} min`;
      note.appendChild(badge('badge-stale', 'stale'));
      note.append(` ${state.message}`);
      break;
  }
  el.append(value, note);
}

function numberCell(text: string): HTMLTableCellElement {
  const td = document.createElement('td');
  td.className = 'num';
  td.textContent = text;
  return td;
}

/** Render one comparison row; pending and failed runs are marked as such. */
function renderEntryRow(entry: ComparisonEntry): HTMLTableRowElement {
  const tr = document.createElement('tr');
  tr.dataset.entryId = String(entry.id);
  tr.dataset.simState = entry.sim.state;
  const label = document.createElement('td');
  label.textContent = entry.label;
  tr.appendChild(label);
  tr.appendChild(numberCell(String(entry.scenario.replications)));
  tr.appendChild(numberCell(String(entry.scenario.seed)));
  tr.appendChild(numberCell(entry.surrogate === null ? '—' : entry.surrogate.toFixed(1)));
  const simCell = document.createElement('td');
  simCell.className = 'num sim-cell';
  const bandCell = document.createElement('td');
  bandCell.className = 'band-cell';
  if (entry.sim.state === 'pending') {
    const spinner = badge('badge-pending', 'running…');
    simCell.appendChild(spinner);
  } else if (entry.sim.state === 'failed') {
    simCell.appendChild(badge('badge-error', 'failed'));
    simCell.append(` ${entry.sim.message}`);
  } else if (entry.sim.mean === null) {
    simCell.textContent = 'no completions';
  } else {
    const sd = entry.sim.sd;
    simCell.textContent = sd === null ? entry.sim.mean.toFixed(1) : `${entry.sim.mean.toFixed(1)} ± ${sd.toFixed(1)}`;
    renderBand(bandCell, entry.surrogate, entry.sim.mean, sd);
  }
  tr.append(simCell, bandCell);
  return tr;
}

/** Re-render the comparison table body from the current entries. */
export function renderComparison(tbody: HTMLElement, entries: readonly ComparisonEntry[]): void {
  tbody.textContent = '';
  for (const entry of entries) {
    tbody.appendChild(renderEntryRow(entry));
  }
}
