// Typed client for the fieldlog HTTP API. The dashboard renders server data
// verbatim; every number shown in the UI comes from one of these responses.

export interface ApiErrorBody {
  code: string;
  message: string;
  field_path?: string;
}

export class ApiRequestError extends Error {
  constructor(readonly status: number, readonly body: ApiErrorBody) {
    super(`${body.code}: ${body.message}`);
  }
}

export interface ClassificationUnit {
  subject: string;
  importance: string;
  type_code: string;
  source: string;
}

export interface Message {
  id: string;
  author_id: string;
  recorded_at: string;
  zone_id: string | null;
  transcript: string;
  transcription_confidence: number | null;
  classification_units: ClassificationUnit[];
  created_at: string;
}

export interface Zone {
  id: string;
  name: string;
  geofence: [number, number][] | null;
  beacon_ids: string[];
}

export interface Stream {
  id: string;
  kind: string;
  zone_id: string;
  description: string;
}

export interface Reading {
  stream_id: string;
  at: string;
  value: number;
}

export interface DeliveryRecord {
  message_id: string;
  user_id: string;
  state: "Pending" | "Delivered" | "Acknowledged";
  attempts: number;
  last_attempt_at: string | null;
}

export interface InboxItem {
  message: Message;
  delivery: DeliveryRecord;
}

export interface User {
  id: string;
  display_name: string;
  role: string;
}

export interface Report {
  period: string;
  period_start: string;
  message_counts: {
    by_subject: Record<string, number>;
    by_importance: Record<string, number>;
    by_type_code: Record<string, number>;
  };
  sensor_stats: Record<string, { min: number | null; max: number | null; mean: number | null; count: number }>;
  top_keywords: [string, number][];
  pest_mention_count: number;
}

export interface MessageQuery {
  user?: string;
  from?: string;
  to?: string;
  zone?: string;
  keyword?: string;
  subject?: string;
  min_importance?: string;
}

export interface Submission {
  author_id: string;
  recorded_at: string;
  transcript?: string;
  audio_ref?: string;
  gps?: [number, number];
  beacon_id?: string;
}

export interface InboxEvent {
  type: "hello" | "ping" | "inbox_item";
  user_id?: string;
  message?: Message;
  delivery?: DeliveryRecord;
}

function queryString(params: Record<string, string | number | undefined>): string {
  const search = new URLSearchParams();
  for (const [key, value] of Object.entries(params)) {
    if (value !== undefined && value !== "") search.set(key, String(value));
  }
  const qs = search.toString();
  return qs ? `?${qs}` : "";
}

export class Api {
  constructor(readonly base: string = "") {}

  private async req<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.base + path, init);
    if (!resp.ok) {
      let body: ApiErrorBody;
      try {
        body = (await resp.json()) as ApiErrorBody;
      } catch {
        body = { code: "Internal", message: resp.statusText };
      }
      throw new ApiRequestError(resp.status, body);
    }
    return (await resp.json()) as T;
  }

  listZones(): Promise<Zone[]> {
    return this.req("/zones");
  }

  listStreams(zone?: string): Promise<Stream[]> {
    return this.req(`/streams${queryString({ zone })}`);
  }

  listUsers(): Promise<User[]> {
    return this.req("/users");
  }

  queryMessages(query: MessageQuery): Promise<Message[]> {
    return this.req(`/messages${queryString({ ...query })}`);
  }

  submitMessage(submission: Submission): Promise<Message> {
    return this.req("/messages", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(submission),
    });
  }

  annotate(messageId: string, unitIndex: number, labels: Partial<ClassificationUnit>): Promise<Message> {
    return this.req(`/messages/${encodeURIComponent(messageId)}/annotate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ unit_index: unitIndex, labels }),
    });
  }

  splitUnit(messageId: string, unitIndex: number, parts: Partial<ClassificationUnit>[]): Promise<Message> {
    return this.req(`/messages/${encodeURIComponent(messageId)}/annotate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ unit_index: unitIndex, split: parts }),
    });
  }

  sensorWindow(messageId: string, halfWidthS: number): Promise<Record<string, Reading[]>> {
    return this.req(`/messages/${encodeURIComponent(messageId)}/window?half_width=${halfWidthS}`);
  }

  readings(streamId: string, from?: string, to?: string): Promise<Reading[]> {
    return this.req(`/streams/${encodeURIComponent(streamId)}/readings${queryString({ from, to })}`);
  }

  inbox(user: string, since?: string): Promise<InboxItem[]> {
    return this.req(`/inbox${queryString({ user, since })}`);
  }

  acknowledge(userId: string, messageId: string): Promise<DeliveryRecord> {
    return this.req("/inbox/ack", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ user_id: userId, message_id: messageId }),
    });
  }

  report(period: "daily" | "weekly" | "monthly", start: string): Promise<Report> {
    return this.req(`/reports/${period}?start=${start}`);
  }

  /** Consume the NDJSON push channel until the signal aborts. Reconnects
   * with resume-from-last-seen (the newest recorded_at observed). */
  async events(
    user: string,
    onEvent: (event: InboxEvent) => void,
    signal: AbortSignal,
    backoffMs = 1000,
  ): Promise<void> {
    let since: string | undefined;
    while (!signal.aborted) {
      try {
        const resp = await fetch(`${this.base}/events${queryString({ user, since })}`, { signal });
        if (!resp.ok || !resp.body) throw new Error(`events: HTTP ${resp.status}`);
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          let nl;
          while ((nl = buffer.indexOf("\n")) >= 0) {
            const line = buffer.slice(0, nl).trim();
            buffer = buffer.slice(nl + 1);
            if (!line) continue;
            const event = JSON.parse(line) as InboxEvent;
            if (event.type === "inbox_item" && event.message) {
              if (since === undefined || event.message.recorded_at > since) {
                since = event.message.recorded_at;
              }
            }
            onEvent(event);
          }
        }
      } catch (err) {
        if (signal.aborted) return;
      }
      await new Promise((resolve) => setTimeout(resolve, backoffMs));
    }
  }
}
