import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { renderTimeline } from "../src/timeline.js";
import {
  FIXTURE_MESSAGES,
  FIXTURE_READINGS,
  FIXTURE_STREAMS,
  FIXTURE_ZONE,
  intercept,
  type Interceptor,
} from "./helpers.js";

let root: HTMLElement;

beforeEach(() => {
  root = document.createElement("div");
  document.body.appendChild(root);
});

afterEach(() => {
  root.remove();
});

describe("timeline rendering", () => {
  it("renders one chart and one marker for one stream and one message", () => {
    renderTimeline(
      root,
      {
        zone: FIXTURE_ZONE,
        streams: FIXTURE_STREAMS,
        readingsByStream: { "house1-co2": FIXTURE_READINGS },
        messages: [FIXTURE_MESSAGES[0]!],
        from: "2017-10-02T08:00:00Z",
        to: "2017-10-02T10:00:00Z",
        selected: "",
        window: null,
      },
      { onMarkerClick: () => {} },
    );
    expect(root.querySelectorAll(".chart").length).toBe(1);
    expect(root.querySelectorAll(".marker").length).toBe(1);
    expect(root.querySelector(".marker")!.getAttribute("data-message-id")).toBe("vm-001");
  });

  it("shows the empty-state panel and no chart for an empty zone", () => {
    renderTimeline(
      root,
      {
        zone: FIXTURE_ZONE,
        streams: [],
        readingsByStream: {},
        messages: [],
        from: "",
        to: "",
        selected: "",
        window: null,
      },
      { onMarkerClick: () => {} },
    );
    expect(root.querySelector(".empty-state")).not.toBeNull();
    expect(root.querySelectorAll(".chart").length).toBe(0);
  });

  it("clicking a marker reports the message id", () => {
    let clicked = "";
    renderTimeline(
      root,
      {
        zone: FIXTURE_ZONE,
        streams: FIXTURE_STREAMS,
        readingsByStream: { "house1-co2": FIXTURE_READINGS },
        messages: FIXTURE_MESSAGES,
        from: "2017-10-02T08:00:00Z",
        to: "2017-10-02T10:00:00Z",
        selected: "",
        window: null,
      },
      { onMarkerClick: (id) => (clicked = id) },
    );
    (root.querySelector('[data-message-id="vm-002"]') as HTMLButtonElement).click();
    expect(clicked).toBe("vm-002");
  });

  it("draws the sensor-window overlay spanning [T-w, T+w]", () => {
    renderTimeline(
      root,
      {
        zone: FIXTURE_ZONE,
        streams: FIXTURE_STREAMS,
        readingsByStream: { "house1-co2": FIXTURE_READINGS },
        messages: FIXTURE_MESSAGES,
        from: "2017-10-02T08:00:00Z",
        to: "2017-10-02T10:00:00Z",
        selected: "vm-001",
        window: { center: "2017-10-02T09:07:00Z", halfWidthS: 600, readings: {} },
      },
      { onMarkerClick: () => {} },
    );
    const overlay = root.querySelector(".window-overlay");
    expect(overlay).not.toBeNull();
    const x = Number(overlay!.getAttribute("x"));
    const width = Number(overlay!.getAttribute("width"));
    expect(x).toBeGreaterThan(0);
    expect(width).toBeGreaterThan(0);
    // the marker for the selected message sits inside the overlay span
    const marker = root.querySelector('.marker[data-message-id="vm-001"]') as HTMLElement;
    const markerPct = parseFloat(marker.style.left);
    const overlayStartPct = (x / 960) * 100;
    const overlayEndPct = ((x + width) / 960) * 100;
    expect(markerPct).toBeGreaterThan(overlayStartPct);
    expect(markerPct).toBeLessThan(overlayEndPct);
  });
});

describe("markers equal the filtered API response", () => {
  let interceptor: Interceptor;

  afterEach(() => interceptor.restore());

  it("keyword filter reduces markers to exactly the API's set", async () => {
    interceptor = intercept({
      "/messages": (url: URL) => {
        const keyword = url.searchParams.get("keyword");
        return keyword
          ? FIXTURE_MESSAGES.filter((m) => m.transcript.includes(keyword))
          : FIXTURE_MESSAGES;
      },
    });
    interceptor.install();
    const api = new Api("http://stub");
    const filtered = await api.queryMessages({ keyword: "mildew", zone: "house1" });
    renderTimeline(
      root,
      {
        zone: FIXTURE_ZONE,
        streams: FIXTURE_STREAMS,
        readingsByStream: { "house1-co2": FIXTURE_READINGS },
        messages: filtered,
        from: "2017-10-02T08:00:00Z",
        to: "2017-10-02T10:00:00Z",
        selected: "",
        window: null,
      },
      { onMarkerClick: () => {} },
    );
    const markerIds = Array.from(root.querySelectorAll(".marker")).map((m) =>
      m.getAttribute("data-message-id"),
    );
    expect(markerIds).toEqual(filtered.map((m) => m.id));
    expect(markerIds).toEqual(["vm-002"]);
  });
});
