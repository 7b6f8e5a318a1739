// Chart rendering: importance bars and mean/SD band cells. Plain DOM, no libraries.

import { FEATURE_NAMES, type SensitivityResult } from './api.js';

function clearElement(el: HTMLElement): void {
  while (el.firstChild) el.removeChild(el.firstChild);
}

function message(el: HTMLElement, className: string, text: string): void {
  clearElement(el);
  const box = document.createElement('p');
  box.className = className;
  box.textContent = text;
  el.appendChild(box);
}

/**
 * Render mean |phi| per feature as horizontal bars, widest first.
 *
 * null result: call-to-action to train a model first. Wrong feature
 * count: schema error. All-zero importances: an explicit empty message
 * instead of thirteen invisible bars.
 */
export function renderImportance(el: HTMLElement, result: SensitivityResult | null): void {
  if (result === null) {
    message(el, 'chart-cta', 'No trained surrogate yet. Train one to see which levers drive bed turnaround.');
    return;
  }
  const importance = result.importance;
  const names = Object.keys(importance.mean_abs_phi);
  if (names.length !== FEATURE_NAMES.length || importance.ranking.length !== FEATURE_NAMES.length) {
    message(
      el,
      'chart-error',
      `Attribution schema mismatch: expected ${FEATURE_NAMES.length} features, ` +
        `got ${names.length} importances and ${importance.ranking.length} ranked names.`,
    );
    return;
  }
  const values = names.map((name) => importance.mean_abs_phi[name]);
  const top = Math.max(...values);
  if (top <= 0) {
    message(el, 'chart-empty', 'All attributions are zero: the model output does not vary across these rows.');
    return;
  }
  const rankIndex = new Map(importance.ranking.map((name, i) => [name, i]));
  const ordered = [...names].sort((a, b) => {
    const diff = importance.mean_abs_phi[b] - importance.mean_abs_phi[a];
    if (diff !== 0) return diff;
    return (rankIndex.get(a) ?? 0) - (rankIndex.get(b) ?? 0);
  });
  clearElement(el);
  const list = document.createElement('div');
  list.className = 'importance-bars';
  for (const name of ordered) {
    const value = importance.mean_abs_phi[name];
    const row = document.createElement('div');
    row.className = 'importance-row';
    row.dataset.feature = name;
    const label = document.createElement('span');
    label.className = 'importance-label';
    label.textContent = name;
    const track = document.createElement('div');
    track.className = 'importance-track';
    const bar = document.createElement('div');
    bar.className = 'importance-bar';
    bar.style.width = `${((100 * value) / top).toFixed(2)}%`;
    track.appendChild(bar);
    const amount = document.createElement('span');
    amount.className = 'importance-value';
    amount.textContent = value.toFixed(2);
    row.append(label, track, amount);
    list.appendChild(row);
  }
  const caption = document.createElement('p');
  caption.className = 'chart-caption';
  caption.textContent = `Mean |attribution| in minutes, model ${result.model_id.slice(0, 8)}, ${result.mode} mode over ${result.n_rows} row(s).`;
  el.append(list, caption);
}

const SVG_NS = 'http://www.w3.org/2000/svg';
const BAND_WIDTH = 160;
const BAND_HEIGHT = 22;

function bandRect(x0: number, x1: number, className: string): SVGRectElement {
  const rect = document.createElementNS(SVG_NS, 'rect');
  rect.setAttribute('x', x0.toFixed(1));
  rect.setAttribute('y', '4');
  rect.setAttribute('width', Math.max(1, x1 - x0).toFixed(1));
  rect.setAttribute('height', String(BAND_HEIGHT - 8));
  rect.setAttribute('class', className);
  return rect;
}

/**
 * Draw the simulated mean with its 1-SD and 2-SD bands and a marker for
 * the surrogate estimate, all on a shared horizontal scale.
 */
export function renderBand(
  el: HTMLElement,
  surrogate: number | null,
  mean: number,
  sd: number | null,
): void {
  clearElement(el);
  const spread = sd === null || sd <= 0 ? Math.max(1, Math.abs(mean) * 0.05) : sd;
  const lo = Math.min(mean - 2.4 * spread, surrogate ?? Infinity);
  const hi = Math.max(mean + 2.4 * spread, surrogate ?? -Infinity);
  const scale = (value: number) => ((value - lo) / (hi - lo)) * (BAND_WIDTH - 8) + 4;
  const svg = document.createElementNS(SVG_NS, 'svg');
  svg.setAttribute('viewBox', `0 0 ${BAND_WIDTH} ${BAND_HEIGHT}`);
  svg.setAttribute('class', 'band');
  svg.setAttribute('role', 'img');
  if (sd !== null && sd > 0) {
    svg.appendChild(bandRect(scale(mean - 2 * sd), scale(mean + 2 * sd), 'band-2sd'));
    svg.appendChild(bandRect(scale(mean - sd), scale(mean + sd), 'band-1sd'));
  }
  const meanLine = document.createElementNS(SVG_NS, 'line');
  meanLine.setAttribute('x1', scale(mean).toFixed(1));
  meanLine.setAttribute('x2', scale(mean).toFixed(1));
  meanLine.setAttribute('y1', '2');
  meanLine.setAttribute('y2', String(BAND_HEIGHT - 2));
  meanLine.setAttribute('class', 'band-mean');
  svg.appendChild(meanLine);
  if (surrogate !== null) {
    const marker = document.createElementNS(SVG_NS, 'circle');
    marker.setAttribute('cx', scale(surrogate).toFixed(1));
    marker.setAttribute('cy', String(BAND_HEIGHT / 2));
    marker.setAttribute('r', '3.5');
    marker.setAttribute('class', 'band-surrogate');
    svg.appendChild(marker);
  }
  el.appendChild(svg);
}
