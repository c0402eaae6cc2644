// App wiring: one-page layout with the combined timeline as the home view,
// a capture form, the live inbox, an annotation panel and the report view.
// The API origin defaults to same-origin and can be overridden with ?api=.

import { Api, ApiRequestError, type InboxItem, type Message, type Report } from "./api.js";
import { renderAnnotationPanel, renderCaptureForm, renderInbox } from "./capture.js";
import { renderReport } from "./report.js";
import { renderMessageDetail, renderTimeline, type WindowOverlay } from "./timeline.js";
import { pushStateToUrl, stateFromUrl, type TimelineViewState } from "./state.js";

const WINDOW_HALF_WIDTH_S = 2 * 3600;

export function createApp(root: HTMLElement, api: Api) {
  const state: TimelineViewState = stateFromUrl();
  let inboxUnread: InboxItem[] = [];
  let inboxHistory: Message[] = [];
  let selectedMessage: Message | null = null;
  let windowOverlay: WindowOverlay | null = null;
  let report: Report | null = null;
  const abort = new AbortController();

  root.innerHTML = `
    <header class="topbar">
      <h1>fieldlog</h1>
      <label>User <select id="user-select"></select></label>
      <label>Zone <select id="zone-select"></select></label>
      <label>From <input id="from-input" placeholder="2017-10-01T00:00:00Z"></label>
      <label>To <input id="to-input" placeholder="2017-10-31T00:00:00Z"></label>
      <label>Keyword <input id="keyword-input"></label>
      <button id="apply-filters">Apply</button>
      <span id="banner" class="banner" hidden></span>
    </header>
    <main class="layout">
      <section id="timeline" class="timeline"></section>
      <aside class="side">
        <section id="capture"></section>
        <section id="inbox"></section>
        <section id="detail"></section>
        <section id="annotate"></section>
      </aside>
    </main>
    <section class="report-bar">
      <label>Report <select id="report-period">
        <option value="daily">daily</option>
        <option value="weekly">weekly</option>
        <option value="monthly">monthly</option>
      </select></label>
      <input id="report-start" placeholder="YYYY-MM-DD">
      <button id="load-report">Load</button>
      <div id="report"></div>
    </section>
  `;

  const el = <T extends HTMLElement>(id: string) => root.querySelector<T>(`#${id}`)!;
  const banner = el<HTMLSpanElement>("banner");

  function showError(err: unknown): void {
    const text =
      err instanceof ApiRequestError ? `${err.body.code}: ${err.body.message}` : String(err);
    banner.textContent = text;
    banner.hidden = false;
    setTimeout(() => (banner.hidden = true), 6000);
  }

  async function refreshTimeline(): Promise<void> {
    const zones = await api.listZones();
    const zone = zones.find((z) => z.id === state.zone) ?? null;
    const streams = zone ? await api.listStreams(zone.id) : [];
    const active = state.streams.length ? streams.filter((s) => state.streams.includes(s.id)) : streams;
    const readingsByStream: Record<string, import("./api.js").Reading[]> = {};
    for (const stream of active) {
      readingsByStream[stream.id] = await api.readings(stream.id, state.from || undefined, state.to || undefined);
    }
    const messages = await api.queryMessages({
      zone: state.zone || undefined,
      from: state.from || undefined,
      to: state.to || undefined,
      keyword: state.keyword || undefined,
      subject: state.subject || undefined,
      min_importance: state.minImportance || undefined,
    });
    renderTimeline(
      el("timeline"),
      {
        zone,
        streams: active,
        readingsByStream,
        messages,
        from: state.from,
        to: state.to,
        selected: state.selected,
        window: windowOverlay,
      },
      { onMarkerClick: (id) => void selectMessage(id) },
    );
  }

  async function selectMessage(messageId: string): Promise<void> {
    try {
      state.selected = messageId;
      pushStateToUrl(state);
      const messages = await api.queryMessages({});
      selectedMessage = messages.find((m) => m.id === messageId) ?? null;
      windowOverlay = null;
      if (selectedMessage) {
        try {
          const readings = await api.sensorWindow(messageId, WINDOW_HALF_WIDTH_S);
          windowOverlay = {
            center: selectedMessage.recorded_at,
            halfWidthS: WINDOW_HALF_WIDTH_S,
            readings,
          };
        } catch (err) {
          if (!(err instanceof ApiRequestError && err.body.code === "NoZone")) throw err;
        }
      }
      renderMessageDetail(el("detail"), selectedMessage, windowOverlay);
      renderAnnotationPanel(el("annotate"), selectedMessage, {
        onAnnotate: (unitIndex, labels) =>
          void api
            .annotate(messageId, unitIndex, labels)
            .then(async (updated) => {
              selectedMessage = updated;
              renderMessageDetail(el("detail"), updated, windowOverlay);
              renderAnnotationPanel(el("annotate"), updated, annotateHandlersFor(messageId));
              await refreshTimeline();
            })
            .catch(showError),
        onSplit: (unitIndex, parts) =>
          void api
            .splitUnit(messageId, unitIndex, parts)
            .then((updated) => {
              selectedMessage = updated;
              renderAnnotationPanel(el("annotate"), updated, annotateHandlersFor(messageId));
            })
            .catch(showError),
      });
      await refreshTimeline();
    } catch (err) {
      showError(err);
    }
  }

  function annotateHandlersFor(messageId: string) {
    return {
      onAnnotate: (unitIndex: number, labels: Record<string, string>) =>
        void api.annotate(messageId, unitIndex, labels).catch(showError),
      onSplit: (unitIndex: number, parts: Record<string, string>[]) =>
        void api.splitUnit(messageId, unitIndex, parts).catch(showError),
    };
  }

  function refreshInbox(): void {
    renderInbox(el("inbox"), inboxUnread, inboxHistory, {
      onAcknowledge: (messageId) =>
        void api
          .acknowledge(state.user, messageId)
          .then(() => {
            const item = inboxUnread.find((i) => i.message.id === messageId);
            inboxUnread = inboxUnread.filter((i) => i.message.id !== messageId);
            if (item) inboxHistory = [item.message, ...inboxHistory];
            refreshInbox();
          })
          .catch(showError),
      onOpen: (messageId) => void selectMessage(messageId),
    });
  }

  async function loadInbox(): Promise<void> {
    if (!state.user) return;
    inboxUnread = await api.inbox(state.user);
    refreshInbox();
  }

  async function loadReport(): Promise<void> {
    const period = el<HTMLSelectElement>("report-period").value as "daily" | "weekly" | "monthly";
    const start = el<HTMLInputElement>("report-start").value;
    if (!start) return;
    report = await api.report(period, start);
    renderReport(el("report"), report);
  }

  async function bootstrap(): Promise<void> {
    const [zones, users] = await Promise.all([api.listZones(), api.listUsers()]);
    el<HTMLSelectElement>("zone-select").innerHTML =
      `<option value="">(all zones)</option>` +
      zones.map((z) => `<option value="${z.id}"${z.id === state.zone ? " selected" : ""}>${z.name || z.id}</option>`).join("");
    el<HTMLSelectElement>("user-select").innerHTML = users
      .map((u) => `<option value="${u.id}"${u.id === state.user ? " selected" : ""}>${u.display_name || u.id}</option>`)
      .join("");
    if (!state.user && users.length) state.user = users[0]!.id;
    el<HTMLInputElement>("from-input").value = state.from;
    el<HTMLInputElement>("to-input").value = state.to;
    el<HTMLInputElement>("keyword-input").value = state.keyword;

    renderCaptureForm(el("capture"), zones, {
      onSubmit: async ({ zone, transcript }) => {
        const zoneObj = zones.find((z) => z.id === zone);
        await api.submitMessage({
          author_id: state.user,
          recorded_at: new Date().toISOString().replace(/\.\d{3}Z$/, "Z"),
          transcript,
          beacon_id: zoneObj?.beacon_ids[0],
        });
        await refreshTimeline(); // new message appears without manual refresh
      },
    });

    renderMessageDetail(el("detail"), null, null);
    refreshInbox();
    await refreshTimeline();
    await loadInbox();

    void api.events(
      state.user,
      (event) => {
        if (event.type !== "inbox_item" || !event.message || !event.delivery) return;
        if (event.delivery.state === "Acknowledged") return;
        if (!inboxUnread.some((i) => i.message.id === event.message!.id)) {
          inboxUnread = [...inboxUnread, { message: event.message, delivery: event.delivery }];
          refreshInbox();
        }
      },
      abort.signal,
    );
  }

  el<HTMLButtonElement>("apply-filters").addEventListener("click", () => {
    state.zone = el<HTMLSelectElement>("zone-select").value;
    state.user = el<HTMLSelectElement>("user-select").value;
    state.from = el<HTMLInputElement>("from-input").value.trim();
    state.to = el<HTMLInputElement>("to-input").value.trim();
    state.keyword = el<HTMLInputElement>("keyword-input").value.trim();
    pushStateToUrl(state);
    refreshTimeline().catch(showError);
    loadInbox().catch(showError);
  });
  el<HTMLButtonElement>("load-report").addEventListener("click", () => void loadReport().catch(showError));

  return {
    state,
    bootstrap,
    refreshTimeline,
    loadInbox,
    loadReport,
    selectMessage,
    dispose: () => abort.abort(),
  };
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const apiBase = new URLSearchParams(location.search).get("api") ?? "";
  const app = createApp(document.getElementById("app")!, new Api(apiBase));
  app.bootstrap().catch((err) => console.error("bootstrap failed", err));
}
