// Thin-client acceptance: with request interception, every number rendered
// on the timeline and report views must match a captured API response field.

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { createApp } from "../src/main.js";
import {
  FIXTURE_MESSAGES,
  FIXTURE_READINGS,
  FIXTURE_REPORT,
  FIXTURE_STREAMS,
  FIXTURE_USERS,
  FIXTURE_ZONE,
  capturedPrimitives,
  intercept,
  type Interceptor,
} from "./helpers.js";

let root: HTMLElement;
let interceptor: Interceptor;
let app: ReturnType<typeof createApp>;

beforeEach(() => {
  root = document.createElement("div");
  root.id = "test-root";
  document.body.appendChild(root);
});

afterEach(() => {
  app?.dispose();
  interceptor.restore();
  root.remove();
  history.replaceState(null, "", "/");
});

function digitTokens(text: string): string[] {
  return text
    .split(/[\s(),:±]+/)
    .map((t) => t.trim())
    .filter((t) => /\d/.test(t));
}

function sweepContainer(container: HTMLElement, primitives: Set<string>): void {
  const walker = document.createTreeWalker(container, NodeFilter.SHOW_TEXT);
  let node: Node | null;
  while ((node = walker.nextNode())) {
    const text = node.textContent ?? "";
    if (!/\d/.test(text)) continue;
    const element = node.parentElement!;
    if (element.closest('[data-from="viewstate"]')) continue;
    const metricHost = element.closest(".metric");
    if (metricHost) {
      const value = metricHost.getAttribute("data-value")!;
      expect(primitives.has(value), `metric value ${value} not found in any API response`).toBe(true);
      continue;
    }
    for (const token of digitTokens(text)) {
      const traceable = [...primitives].some((p) => p.includes(token));
      expect(traceable, `rendered token ${token!} is not traceable to an API response`).toBe(true);
    }
  }
}

describe("thin-client rule", () => {
  it("every rendered number on timeline and report views comes from a captured response", async () => {
    interceptor = intercept({
      "/zones": [FIXTURE_ZONE],
      "/users": FIXTURE_USERS,
      "/streams": (url: URL) =>
        url.pathname.endsWith("/readings") ? FIXTURE_READINGS : FIXTURE_STREAMS,
      "/messages": (url: URL) =>
        url.pathname.endsWith("/window") ? { "house1-co2": FIXTURE_READINGS } : FIXTURE_MESSAGES,
      "/reports": FIXTURE_REPORT,
      "/inbox": [],
      "/events": { type: "ping" },
    });
    interceptor.install();

    history.replaceState(
      null,
      "",
      "?zone=house1&user=u-owner&from=2017-10-02T08:00:00Z&to=2017-10-02T10:00:00Z",
    );
    app = createApp(root, new Api("http://stub"));
    await app.bootstrap();

    (root.querySelector("#report-start") as HTMLInputElement).value = "2017-10-02";
    await app.loadReport();
    await app.selectMessage("vm-001");

    const timeline = root.querySelector("#timeline") as HTMLElement;
    const report = root.querySelector("#report") as HTMLElement;
    expect(timeline.querySelectorAll(".chart").length).toBe(1);
    expect(report.querySelectorAll("table.counts").length).toBe(3);

    const primitives = capturedPrimitives(interceptor.captured);
    sweepContainer(timeline, primitives);
    sweepContainer(report, primitives);
    sweepContainer(root.querySelector("#detail") as HTMLElement, primitives);

    // the sweep has teeth: metric spans exist in both views
    expect(timeline.querySelectorAll(".metric").length).toBeGreaterThan(0);
    expect(report.querySelectorAll(".metric").length).toBeGreaterThan(10);
  });

  it("fails on a fabricated number (sweep self-test)", () => {
    const primitives = new Set(["612.5", "house1-co2"]);
    const div = document.createElement("div");
    div.innerHTML = `<span class="metric" data-value="42.77">42.77</span>`;
    document.body.appendChild(div);
    expect(() => sweepContainer(div, primitives)).toThrow();
    div.remove();
  });
});
