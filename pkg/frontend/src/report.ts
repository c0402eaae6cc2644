// Summary report view: three count tables, sensor stats, keywords.
// Every figure is rendered with metric() so it stays traceable to the
// report response field it came from.

import type { Report } from "./api.js";
import { metric } from "./timeline.js";

function countTable(title: string, counts: Record<string, number>): string {
  const rows = Object.entries(counts)
    .map(([label, count]) => `<tr><td>${label}</td><td>${metric(count)}</td></tr>`)
    .join("");
  return `<table class="counts"><caption>${title}</caption>${rows}</table>`;
}

export function renderReport(root: HTMLElement, report: Report | null): void {
  if (!report) {
    root.innerHTML = `<div class="empty-state">Pick a period to load a report.</div>`;
    return;
  }
  const stats = Object.entries(report.sensor_stats)
    .map(([streamId, s]) => {
      const cells = [s.min, s.max, s.mean, s.count]
        .map((v) => `<td>${v === null ? "–" : metric(v)}</td>`)
        .join("");
      return `<tr><td>${streamId}</td>${cells}</tr>`;
    })
    .join("");
  const keywords = report.top_keywords
    .map(([token, count]) => `<li>${token} ${metric(count)}</li>`)
    .join("");
  root.innerHTML =
    `<div class="report" data-period="${report.period}" data-period-start="${report.period_start}">` +
    countTable("By subject", report.message_counts.by_subject) +
    countTable("By importance", report.message_counts.by_importance) +
    countTable("By type", report.message_counts.by_type_code) +
    `<table class="sensor-stats"><caption>Sensor stats</caption>` +
    `<tr><th>stream</th><th>min</th><th>max</th><th>mean</th><th>count</th></tr>${stats}</table>` +
    `<p>Pest mentions: ${metric(report.pest_mention_count)}</p>` +
    `<ul class="keywords">${keywords}</ul>` +
    `</div>`;
}
