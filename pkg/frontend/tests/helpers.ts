// Fetch interception: serves canned responses and records every body that
// went over the wire so tests can prove rendered numbers came from the API.

import type { Message, Reading, Report, Stream, User, Zone } from "../src/api.js";

export interface Interceptor {
  captured: unknown[];
  requests: string[];
  install(): void;
  restore(): void;
}

export function intercept(routes: Record<string, unknown | ((url: URL) => unknown)>): Interceptor {
  const captured: unknown[] = [];
  const requests: string[] = [];
  const original = globalThis.fetch;

  const fake = async (input: RequestInfo | URL, _init?: RequestInit): Promise<Response> => {
    const url = new URL(String(input), "http://stub");
    requests.push(url.pathname + url.search);
    for (const [prefix, handler] of Object.entries(routes)) {
      if (url.pathname === prefix || url.pathname.startsWith(prefix + "/")) {
        const body = typeof handler === "function" ? (handler as (u: URL) => unknown)(url) : handler;
        captured.push(body);
        return new Response(JSON.stringify(body), {
          status: 200,
          headers: { "Content-Type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ code: "NotFound", message: `no stub for ${url.pathname}` }), {
      status: 404,
      headers: { "Content-Type": "application/json" },
    });
  };

  return {
    captured,
    requests,
    install: () => {
      globalThis.fetch = fake as typeof fetch;
    },
    restore: () => {
      globalThis.fetch = original;
    },
  };
}

/** Every primitive leaf value (and object key) in the captured responses. */
export function capturedPrimitives(captured: unknown[]): Set<string> {
  const out = new Set<string>();
  const walk = (value: unknown): void => {
    if (value === null || value === undefined) return;
    if (typeof value === "object") {
      for (const [key, child] of Object.entries(value as Record<string, unknown>)) {
        if (!Array.isArray(value)) out.add(key);
        walk(child);
      }
    } else {
      out.add(String(value));
    }
  };
  for (const body of captured) walk(body);
  return out;
}

export const FIXTURE_ZONE: Zone = { id: "house1", name: "House #1", geofence: null, beacon_ids: ["bcn-house1"] };

export const FIXTURE_STREAMS: Stream[] = [
  { id: "house1-co2", kind: "CO2", zone_id: "house1", description: "" },
];

export const FIXTURE_READINGS: Reading[] = [
  { stream_id: "house1-co2", at: "2017-10-02T09:00:00Z", value: 612.5 },
  { stream_id: "house1-co2", at: "2017-10-02T09:05:00Z", value: 540.25 },
  { stream_id: "house1-co2", at: "2017-10-02T09:10:00Z", value: 498.0 },
];

export const FIXTURE_MESSAGES: Message[] = [
  {
    id: "vm-001",
    author_id: "u-owner",
    recorded_at: "2017-10-02T09:07:00Z",
    zone_id: "house1",
    transcript: "co2 falls sharply after sunrise",
    transcription_confidence: 0.93,
    classification_units: [
      { subject: "Environment", importance: "L4", type_code: "A2", source: "Manual" },
    ],
    created_at: "2017-10-02T09:07:00Z",
  },
  {
    id: "vm-002",
    author_id: "u-owner",
    recorded_at: "2017-10-02T09:09:00Z",
    zone_id: "house1",
    transcript: "mildew on the young leaves",
    transcription_confidence: null,
    classification_units: [
      { subject: "FarmProducts", importance: "L5", type_code: "A2", source: "Manual" },
    ],
    created_at: "2017-10-02T09:09:00Z",
  },
];

export const FIXTURE_USERS: User[] = [
  { id: "u-owner", display_name: "Owner", role: "Owner" },
  { id: "u-staff", display_name: "Staff", role: "Worker" },
];

export const FIXTURE_REPORT: Report = {
  period: "daily",
  period_start: "2017-10-02",
  message_counts: {
    by_subject: { FarmProducts: 1, Equipment: 0, SalesMarketing: 0, Environment: 1, System: 0, Others: 0 },
    by_importance: { L1: 0, L2: 0, L3: 0, L4: 1, L5: 1, Unclassified: 0 },
    by_type_code: { A0: 0, A1: 0, A2: 2, B0: 0, B1: 0, B2: 0, C1: 0, C2: 0, Unclassified: 0 },
  },
  sensor_stats: { "house1-co2": { min: 498.0, max: 612.5, mean: 550.25, count: 3 } },
  top_keywords: [["mildew", 1], ["co2", 1]],
  pest_mention_count: 1,
};
