// Capture form, inbox panel and annotation panel. Text-first capture: the
// form posts a transcript with the selected zone's beacon; validation errors
// from the server render inline next to the offending field.

import type { Api, ApiRequestError, InboxItem, Message, Zone } from "./api.js";

export const SUBJECTS = ["FarmProducts", "Equipment", "SalesMarketing", "Environment", "System", "Others"];
export const IMPORTANCE = ["L1", "L2", "L3", "L4", "L5", "Unclassified"];
export const TYPE_CODES = ["A0", "A1", "A2", "B0", "B1", "B2", "C1", "C2", "Unclassified"];

function escapeHtml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function options(values: string[], selected = ""): string {
  return values
    .map((v) => `<option value="${v}"${v === selected ? " selected" : ""}>${v}</option>`)
    .join("");
}

export interface CaptureHandlers {
  onSubmit(fields: { zone: string; transcript: string }): Promise<void>;
}

export function renderCaptureForm(root: HTMLElement, zones: Zone[], handlers: CaptureHandlers): void {
  root.innerHTML =
    `<form class="capture">` +
    `<label>Zone <select name="zone">` +
    `<option value="">(no location)</option>` +
    zones.map((z) => `<option value="${escapeHtml(z.id)}">${escapeHtml(z.name || z.id)}</option>`).join("") +
    `</select></label>` +
    `<label>Observation <textarea name="transcript" rows="3" placeholder="What do you see, hear, smell?"></textarea></label>` +
    `<div class="field-error" data-field="transcript"></div>` +
    `<button type="submit">Record</button>` +
    `<div class="form-error"></div>` +
    `</form>`;
  const form = root.querySelector("form")!;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const zone = (form.elements.namedItem("zone") as HTMLSelectElement).value;
    const transcriptEl = form.elements.namedItem("transcript") as HTMLTextAreaElement;
    form.querySelectorAll(".field-error, .form-error").forEach((el) => (el.textContent = ""));
    handlers
      .onSubmit({ zone, transcript: transcriptEl.value })
      .then(() => {
        transcriptEl.value = "";
      })
      .catch((err: ApiRequestError | Error) => {
        const body = (err as ApiRequestError).body;
        if (body?.field_path) {
          const slot = form.querySelector(`.field-error[data-field="${body.field_path}"]`);
          if (slot) {
            slot.textContent = body.message;
            return;
          }
        }
        form.querySelector(".form-error")!.textContent = err.message;
      });
  });
}

export interface InboxHandlers {
  onAcknowledge(messageId: string): void;
  onOpen(messageId: string): void;
}

export function renderInbox(root: HTMLElement, unread: InboxItem[], history: Message[], handlers: InboxHandlers): void {
  const unreadHtml = unread.length
    ? unread
        .map(
          (item) =>
            `<li class="inbox-item" data-message-id="${escapeHtml(item.message.id)}" data-state="${item.delivery.state}">` +
            `<button class="open">${escapeHtml(item.message.transcript.slice(0, 80))}</button>` +
            `<button class="ack" title="Acknowledge">✓</button></li>`,
        )
        .join("")
    : `<li class="empty-state">Inbox empty.</li>`;
  const historyHtml = history
    .map(
      (m) =>
        `<li class="history-item" data-message-id="${escapeHtml(m.id)}">` +
        `<button class="open">${escapeHtml(m.transcript.slice(0, 80))}</button></li>`,
    )
    .join("");
  root.innerHTML =
    `<h3>Unread</h3><ul class="inbox-unread">${unreadHtml}</ul>` +
    `<h3>History</h3><ul class="inbox-history">${historyHtml}</ul>`;
  root.querySelectorAll<HTMLLIElement>(".inbox-item").forEach((item) => {
    const id = item.dataset.messageId ?? "";
    item.querySelector(".ack")!.addEventListener("click", () => handlers.onAcknowledge(id));
    item.querySelector(".open")!.addEventListener("click", () => handlers.onOpen(id));
  });
  root.querySelectorAll<HTMLLIElement>(".history-item").forEach((item) => {
    item.querySelector(".open")!.addEventListener("click", () => handlers.onOpen(item.dataset.messageId ?? ""));
  });
}

export interface AnnotateHandlers {
  onAnnotate(unitIndex: number, labels: Record<string, string>): void;
  onSplit(unitIndex: number, parts: Record<string, string>[]): void;
}

export function renderAnnotationPanel(root: HTMLElement, message: Message | null, handlers: AnnotateHandlers): void {
  if (!message) {
    root.innerHTML = "";
    return;
  }
  const unitForms = message.classification_units
    .map(
      (u, i) =>
        `<fieldset data-unit-index="${i}"><legend>Unit ${i}</legend>` +
        `<select name="subject">${options(SUBJECTS, u.subject)}</select>` +
        `<select name="importance">${options(IMPORTANCE, u.importance)}</select>` +
        `<select name="type_code">${options(TYPE_CODES, u.type_code)}</select>` +
        `<button type="button" class="apply">Apply</button>` +
        `<button type="button" class="split">Split in two</button>` +
        `</fieldset>`,
    )
    .join("");
  root.innerHTML = `<form class="annotate">${unitForms}</form>`;
  root.querySelectorAll<HTMLFieldSetElement>("fieldset").forEach((fs) => {
    const index = Number(fs.dataset.unitIndex);
    const labels = () => ({
      subject: (fs.querySelector('[name="subject"]') as HTMLSelectElement).value,
      importance: (fs.querySelector('[name="importance"]') as HTMLSelectElement).value,
      type_code: (fs.querySelector('[name="type_code"]') as HTMLSelectElement).value,
    });
    fs.querySelector(".apply")!.addEventListener("click", () => handlers.onAnnotate(index, labels()));
    fs.querySelector(".split")!.addEventListener("click", () => handlers.onSplit(index, [labels(), labels()]));
  });
}
