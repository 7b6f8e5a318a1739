// Application entry point: wires the draft form, live prediction,
// comparison table, and sensitivity panel to the gateway.

import {
  ApiError,
  FEATURE_NAMES,
  GatewayClient,
  type FeatureName,
  type ScenarioResult,
  type SensitivityResult,
} from './api.js';
import { renderImportance } from './charts.js';
import {
  applyLeverEdit,
  clampReplications,
  clampSeed,
  defaultDraft,
  LEVER_RANGES,
  randomSeed,
  REPLICATION_RANGE,
  SEED_MAX,
  serializeScenario,
  type ScenarioDraft,
} from './draft.js';
import { JobFailed, pollJob } from './jobs.js';
import { ComparisonStore } from './store.js';
import { createLivePredictor, renderComparison, renderPredictPanel } from './views.js';

interface AppState {
  draft: ScenarioDraft;
  lastPrediction: number | null;
  sensitivity: SensitivityResult | null;
  sensitivityBusy: boolean;
}

const state: AppState = {
  draft: defaultDraft(),
  lastPrediction: null,
  sensitivity: null,
  sensitivityBusy: false,
};

const client = new GatewayClient('');
const store = new ComparisonStore();

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const GROUPS: { title: string; names: FeatureName[] }[] = [
  { title: 'Discharges per shift', names: ['day_discharges', 'eve_discharges', 'night_discharges'] },
  { title: 'Unit assistants on shift', names: ['day_ua', 'eve_ua', 'night_ua'] },
  { title: 'EVS cleaners on shift', names: ['day_evs', 'eve_evs', 'night_evs'] },
  {
    title: 'Stage means (minutes)',
    names: ['avg_dirty_wait', 'avg_assigned_wait', 'avg_clean_wait', 'avg_in_progress_wait'],
  },
];

const predictor = createLivePredictor(client, (predictState) => {
  if (predictState.kind === 'value') state.lastPrediction = predictState.prediction;
  renderPredictPanel(byId('predict-card'), predictState);
});

function requestPrediction(): void {
  predictor.update({ ...state.draft.features });
}

function buildLeverControls(): void {
  const host = byId('lever-groups');
  for (const group of GROUPS) {
    const fieldset = document.createElement('fieldset');
    const legend = document.createElement('legend');
    legend.textContent = group.title;
    fieldset.appendChild(legend);
    for (const name of group.names) {
      const range = LEVER_RANGES[name];
      const row = document.createElement('label');
      row.className = 'lever';
      const caption = document.createElement('span');
      caption.textContent = range.label;
      const input = document.createElement('input');
      input.type = 'number';
      input.id = `lever-${name}`;
      input.min = String(range.min);
      input.max = String(range.max);
      input.step = String(range.step);
      input.value = String(state.draft.features[name]);
      input.addEventListener('change', () => {
        const edit = applyLeverEdit(state.draft, name, Number(input.value));
        input.value = String(edit.value);
        if (edit.accepted) requestPrediction();
      });
      const unit = document.createElement('span');
      unit.className = 'unit';
      unit.textContent = range.unit;
      row.append(caption, input, unit);
      fieldset.appendChild(row);
    }
    host.appendChild(fieldset);
  }
}

function setupRunControls(): void {
  const reps = byId<HTMLInputElement>('replications');
  reps.min = String(REPLICATION_RANGE.min);
  reps.max = String(REPLICATION_RANGE.max);
  reps.value = String(state.draft.replications);
  reps.addEventListener('change', () => {
    state.draft.replications = clampReplications(Number(reps.value));
    reps.value = String(state.draft.replications);
  });

  const seedMode = byId<HTMLSelectElement>('seed-mode');
  const seed = byId<HTMLInputElement>('seed');
  seed.min = '0';
  seed.max = String(SEED_MAX);
  seed.value = String(state.draft.seed);
  seedMode.addEventListener('change', () => {
    state.draft.fixedSeed = seedMode.value === 'fixed';
    seed.disabled = !state.draft.fixedSeed;
  });
  seed.addEventListener('change', () => {
    state.draft.seed = clampSeed(Number(seed.value));
    seed.value = String(state.draft.seed);
  });

  byId<HTMLButtonElement>('pin-run').addEventListener('click', () => {
    void pinAndRun(seed);
  });
}

async function pinAndRun(seedInput: HTMLInputElement): Promise<void> {
  if (!state.draft.fixedSeed) {
    state.draft.seed = randomSeed();
    seedInput.value = String(state.draft.seed);
  }
  const labelInput = byId<HTMLInputElement>('pin-label');
  const label = labelInput.value.trim() || `scenario ${store.entries().length + 1}`;
  labelInput.value = '';
  const scenario = serializeScenario(state.draft);
  const entry = store.pin(label, scenario, state.lastPrediction);
  try {
    const job = await client.runScenario(scenario);
    const finished = await pollJob(client, job.job_id);
    store.resolve(entry.id, finished.result as ScenarioResult);
  } catch (err) {
    if (err instanceof JobFailed) store.fail(entry.id, err.message);
    else if (err instanceof ApiError) store.fail(entry.id, `${err.code}: ${err.message}`);
    else store.fail(entry.id, err instanceof Error ? err.message : String(err));
  }
}

function sensitivityRows(): Record<FeatureName, number>[] {
  const rows = store.entries().map((entry) => ({ ...entry.scenario.features }));
  rows.push({ ...state.draft.features });
  return rows;
}

async function refreshSensitivity(): Promise<void> {
  if (state.sensitivityBusy) return;
  state.sensitivityBusy = true;
  const status = byId('sensitivity-status');
  status.textContent = 'computing attributions…';
  try {
    const job = await client.globalSensitivity({
      rows: sensitivityRows(),
      mode: 'sampled',
      n_permutations: 500,
    });
    const finished = await pollJob(client, job.job_id);
    state.sensitivity = finished.result as SensitivityResult;
    renderImportance(byId('importance-chart'), state.sensitivity);
    status.textContent = '';
  } catch (err) {
    if (err instanceof ApiError && err.code === 'no_model') {
      renderImportance(byId('importance-chart'), null);
      status.textContent = '';
    } else {
      status.textContent = err instanceof Error ? err.message : String(err);
    }
  } finally {
    state.sensitivityBusy = false;
  }
}

async function trainSurrogate(): Promise<void> {
  const status = byId('sensitivity-status');
  status.textContent = 'training surrogate…';
  try {
    const job = await client.train({ source: 'synthetic' });
    await pollJob(client, job.job_id);
    status.textContent = 'surrogate trained';
    requestPrediction();
    await refreshSensitivity();
  } catch (err) {
    status.textContent = err instanceof Error ? err.message : String(err);
  }
}

function init(): void {
  buildLeverControls();
  setupRunControls();
  store.subscribe(() => {
    renderComparison(byId('comparison-body'), store.entries());
  });
  byId<HTMLButtonElement>('refresh-sensitivity').addEventListener('click', () => {
    void refreshSensitivity();
  });
  byId<HTMLButtonElement>('train-surrogate').addEventListener('click', () => {
    void trainSurrogate();
  });
  renderPredictPanel(byId('predict-card'), { kind: 'idle' });
  renderImportance(byId('importance-chart'), null);
  requestPrediction();
}

document.addEventListener('DOMContentLoaded', init);
