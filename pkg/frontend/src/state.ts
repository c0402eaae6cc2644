// Timeline view state <-> URL query string, so any view is shareable.

export interface TimelineViewState {
  zone: string;
  from: string; // YYYY-MM-DDTHH:MM:SSZ
  to: string;
  streams: string[]; // active stream ids; empty = all in zone
  keyword: string;
  subject: string;
  minImportance: string;
  user: string; // acting user (inbox + capture author)
  selected: string; // selected message id
}

export const DEFAULT_STATE: TimelineViewState = {
  zone: "",
  from: "",
  to: "",
  streams: [],
  keyword: "",
  subject: "",
  minImportance: "",
  user: "",
  selected: "",
};

const KEYS: [keyof TimelineViewState, string][] = [
  ["zone", "zone"],
  ["from", "from"],
  ["to", "to"],
  ["keyword", "keyword"],
  ["subject", "subject"],
  ["minImportance", "min_importance"],
  ["user", "user"],
  ["selected", "selected"],
];

export function serializeState(state: TimelineViewState): string {
  const params = new URLSearchParams();
  for (const [field, param] of KEYS) {
    const value = state[field] as string;
    if (value) params.set(param, value);
  }
  if (state.streams.length) params.set("streams", state.streams.join(","));
  return params.toString();
}

export function deserializeState(query: string): TimelineViewState {
  const params = new URLSearchParams(query);
  const state: TimelineViewState = { ...DEFAULT_STATE, streams: [] };
  for (const [field, param] of KEYS) {
    const value = params.get(param);
    if (value) (state[field] as string) = value;
  }
  const streams = params.get("streams");
  if (streams) state.streams = streams.split(",").filter((s) => s.length > 0);
  return state;
}

export function pushStateToUrl(state: TimelineViewState): void {
  const qs = serializeState(state);
  history.replaceState(null, "", qs ? `?${qs}` : location.pathname);
}

export function stateFromUrl(): TimelineViewState {
  return deserializeState(location.search.replace(/^\?/, ""));
}
