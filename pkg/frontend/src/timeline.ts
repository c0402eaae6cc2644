// Combined sensor-chart / message timeline. Charts and markers share one
// time axis; clicking a marker selects the message and an overlay highlights
// the sensor window around it.
//
// Thin-client rule: every server-data number rendered here goes through
// metric(), which tags the element with data-value; axis labels derived from
// the user's view range are tagged data-from="viewstate" instead.

import type { Message, Reading, Stream, Zone } from "./api.js";

export interface WindowOverlay {
  center: string;
  halfWidthS: number;
  readings: Record<string, Reading[]>;
}

export interface TimelineData {
  zone: Zone | null;
  streams: Stream[];
  readingsByStream: Record<string, Reading[]>;
  messages: Message[];
  from: string;
  to: string;
  selected: string;
  window: WindowOverlay | null;
}

export interface TimelineHandlers {
  onMarkerClick(messageId: string): void;
}

const WIDTH = 960;
const CHART_HEIGHT = 120;
const PAD_LEFT = 64;
const PAD_RIGHT = 12;

export function metric(value: number | string): string {
  return `<span class="metric" data-value="${String(value)}">${String(value)}</span>`;
}

function ts(value: string): number {
  return Date.parse(value);
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function timeRange(data: TimelineData): [number, number] | null {
  if (data.from && data.to) return [ts(data.from), ts(data.to)];
  let lo = Infinity;
  let hi = -Infinity;
  for (const readings of Object.values(data.readingsByStream)) {
    for (const r of readings) {
      const t = ts(r.at);
      lo = Math.min(lo, t);
      hi = Math.max(hi, t);
    }
  }
  for (const m of data.messages) {
    const t = ts(m.recorded_at);
    lo = Math.min(lo, t);
    hi = Math.max(hi, t);
  }
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) return null;
  if (lo === hi) hi = lo + 1;
  return [lo, hi];
}

function chartSvg(
  stream: Stream,
  readings: Reading[],
  range: [number, number],
  overlay: WindowOverlay | null,
): string {
  const [lo, hi] = range;
  const x = (t: number) => PAD_LEFT + ((t - lo) / (hi - lo)) * (WIDTH - PAD_LEFT - PAD_RIGHT);
  const inRange = readings.filter((r) => ts(r.at) >= lo && ts(r.at) <= hi);
  const values = inRange.map((r) => r.value);
  const vMin = values.length ? Math.min(...values) : 0;
  const vMax = values.length ? Math.max(...values) : 1;
  const spread = vMax - vMin || 1;
  const y = (v: number) => CHART_HEIGHT - 16 - ((v - vMin) / spread) * (CHART_HEIGHT - 32);

  let overlayRect = "";
  if (overlay) {
    const c = ts(overlay.center);
    const left = Math.max(lo, c - overlay.halfWidthS * 1000);
    const right = Math.min(hi, c + overlay.halfWidthS * 1000);
    if (right > left) {
      overlayRect =
        `<rect class="window-overlay" x="${x(left).toFixed(1)}" y="0" ` +
        `width="${(x(right) - x(left)).toFixed(1)}" height="${CHART_HEIGHT}"></rect>`;
    }
  }

  const points = inRange
    .map((r) => `${x(ts(r.at)).toFixed(1)},${y(r.value).toFixed(1)}`)
    .join(" ");
  const line = points ? `<polyline class="series" points="${points}"></polyline>` : "";

  // y-axis labels are actual reading values from the response (min and max)
  const labels = values.length
    ? `<text class="y-label" x="4" y="14"><tspan class="metric" data-value="${vMax}">${vMax}</tspan></text>` +
      `<text class="y-label" x="4" y="${CHART_HEIGHT - 4}"><tspan class="metric" data-value="${vMin}">${vMin}</tspan></text>`
    : "";

  return (
    `<figure class="chart" data-stream-id="${escapeHtml(stream.id)}">` +
    `<figcaption>${escapeHtml(stream.id)} (${escapeHtml(stream.kind)})</figcaption>` +
    `<svg viewBox="0 0 ${WIDTH} ${CHART_HEIGHT}" preserveAspectRatio="none">` +
    overlayRect +
    line +
    labels +
    `</svg></figure>`
  );
}

export function renderTimeline(root: HTMLElement, data: TimelineData, handlers: TimelineHandlers): void {
  const range = timeRange(data);
  const active = data.streams;
  if (!data.zone || (active.length === 0 && data.messages.length === 0)) {
    root.innerHTML = `<div class="empty-state">No zone selected or nothing recorded here yet.</div>`;
    return;
  }
  if (range === null && data.messages.length === 0) {
    root.innerHTML = `<div class="empty-state">Nothing recorded in this range.</div>`;
    return;
  }

  const parts: string[] = [];
  if (range) {
    const axis =
      `<div class="time-axis">` +
      `<span data-from="viewstate">${new Date(range[0]).toISOString().slice(0, 16)}Z</span>` +
      `<span data-from="viewstate">${new Date(range[1]).toISOString().slice(0, 16)}Z</span>` +
      `</div>`;
    parts.push(axis);

    const markers = data.messages
      .filter((m) => ts(m.recorded_at) >= range[0] && ts(m.recorded_at) <= range[1])
      .map((m) => {
        const xPos = PAD_LEFT + ((ts(m.recorded_at) - range[0]) / (range[1] - range[0])) * (WIDTH - PAD_LEFT - PAD_RIGHT);
        const selected = m.id === data.selected ? " selected" : "";
        return (
          `<button class="marker${selected}" data-message-id="${escapeHtml(m.id)}" ` +
          `style="left:${((xPos / WIDTH) * 100).toFixed(2)}%" ` +
          `title="${escapeHtml(m.transcript)}">▼</button>`
        );
      })
      .join("");
    parts.push(`<div class="marker-lane">${markers}</div>`);

    for (const stream of active) {
      parts.push(chartSvg(stream, data.readingsByStream[stream.id] ?? [], range, data.window));
    }
  }
  root.innerHTML = parts.join("");
  root.querySelectorAll<HTMLButtonElement>(".marker").forEach((button) => {
    button.addEventListener("click", () => handlers.onMarkerClick(button.dataset.messageId ?? ""));
  });
}

export function renderMessageDetail(root: HTMLElement, message: Message | null, window: WindowOverlay | null): void {
  if (!message) {
    root.innerHTML = `<div class="empty-state">Click a marker to inspect a message.</div>`;
    return;
  }
  const units = message.classification_units
    .map(
      (u, i) =>
        `<li data-unit-index="${i}">` +
        `<span class="badge subject">${escapeHtml(u.subject)}</span>` +
        `<span class="badge importance">${escapeHtml(u.importance)}</span>` +
        `<span class="badge type">${escapeHtml(u.type_code)}</span>` +
        `<span class="badge source">${escapeHtml(u.source)}</span></li>`,
    )
    .join("");
  const windowNote = window
    ? `<p class="window-note">Sensor window <span data-from="viewstate">±${window.halfWidthS}s</span> around ` +
      `<span data-from="viewstate">${escapeHtml(window.center)}</span></p>`
    : "";
  const confidence =
    message.transcription_confidence !== null
      ? `<p>Transcription confidence: ${metric(message.transcription_confidence)}</p>`
      : "";
  root.innerHTML =
    `<article class="message-detail" data-message-id="${escapeHtml(message.id)}">` +
    `<header><strong>${escapeHtml(message.id)}</strong> by ${escapeHtml(message.author_id)} ` +
    `at <span data-from="viewstate">${escapeHtml(message.recorded_at)}</span> ` +
    `in ${escapeHtml(message.zone_id ?? "(unzoned)")}</header>` +
    `<blockquote>${escapeHtml(message.transcript)}</blockquote>` +
    confidence +
    `<ul class="units">${units}</ul>` +
    windowNote +
    `</article>`;
}
