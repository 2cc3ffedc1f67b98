/**
 * View state <-> URL query string.
 *
 * The URL is the single source of truth: every reachable view is a deep
 * link, and serialize(deserialize(url)) === url for all URLs this module
 * produces. Parameters appear in a fixed order with defaults omitted and
 * multi-valued facets sorted, so a given state has exactly one URL.
 */

export const FACET_DIMENSIONS = ["os", "lang", "iface", "tech"] as const;
export type FacetDimension = (typeof FACET_DIMENSIONS)[number];

/** URL facet params -> API facet dimension names (as used in response facets). */
export const DIMENSION_NAMES: Record<FacetDimension, string> = {
  os: "operating_system",
  lang: "programming_language",
  iface: "interface",
  tech: "technology",
};

export interface UiQueryState {
  q: string;
  cat: string | null;
  os: string[];
  lang: string[];
  iface: string[];
  tech: string[];
  page: number;
  perPage: number;
  includeObsolete: boolean;
}

export const DEFAULT_PER_PAGE = 20;

export function emptyState(): UiQueryState {
  return {
    q: "",
    cat: null,
    os: [],
    lang: [],
    iface: [],
    tech: [],
    page: 1,
    perPage: DEFAULT_PER_PAGE,
    includeObsolete: false,
  };
}

export function serializeState(state: UiQueryState): string {
  const params = new URLSearchParams();
  if (state.q) params.set("q", state.q);
  if (state.cat) params.set("cat", state.cat);
  for (const dimension of FACET_DIMENSIONS) {
    for (const value of [...state[dimension]].sort()) {
      params.append(dimension, value);
    }
  }
  if (state.page !== 1) params.set("page", String(state.page));
  if (state.perPage !== DEFAULT_PER_PAGE) params.set("per_page", String(state.perPage));
  if (state.includeObsolete) params.set("include_obsolete", "true");
  const query = params.toString();
  return query ? `?${query}` : "";
}

export function deserializeState(search: string): UiQueryState {
  const params = new URLSearchParams(search);
  const state = emptyState();
  state.q = params.get("q") ?? "";
  state.cat = params.get("cat");
  for (const dimension of FACET_DIMENSIONS) {
    state[dimension] = [...new Set(params.getAll(dimension))].sort();
  }
  const page = parseInt(params.get("page") ?? "1", 10);
  state.page = Number.isFinite(page) && page >= 1 ? page : 1;
  const perPage = parseInt(params.get("per_page") ?? String(DEFAULT_PER_PAGE), 10);
  state.perPage =
    Number.isFinite(perPage) && perPage >= 1 && perPage <= 100
      ? perPage
      : DEFAULT_PER_PAGE;
  state.includeObsolete = params.get("include_obsolete") === "true";
  return state;
}

/** Toggle one facet value; any facet change resets pagination. */
export function toggleFacet(
  state: UiQueryState,
  dimension: FacetDimension,
  value: string,
): UiQueryState {
  const current = state[dimension];
  const values = current.includes(value)
    ? current.filter((v) => v !== value)
    : [...current, value].sort();
  return { ...state, [dimension]: values, page: 1 };
}

export function withQuery(state: UiQueryState, q: string): UiQueryState {
  return { ...state, q, page: 1 };
}

export function withPage(state: UiQueryState, page: number): UiQueryState {
  return { ...state, page: Math.max(1, page) };
}

/** Query-string parameters for GET /api/v1/search. */
export function toApiParams(state: UiQueryState): URLSearchParams {
  const params = new URLSearchParams();
  if (state.q) params.set("q", state.q);
  if (state.cat) params.set("cat", state.cat);
  for (const dimension of FACET_DIMENSIONS) {
    for (const value of state[dimension]) params.append(dimension, value);
  }
  params.set("page", String(state.page));
  params.set("per_page", String(state.perPage));
  if (state.includeObsolete) params.set("include_obsolete", "true");
  return params;
}

export type Route =
  | { kind: "search"; state: UiQueryState }
  | { kind: "tool"; accession: string };

/** The `tool` parameter switches to the card page; everything else is search. */
export function parseRoute(search: string): Route {
  const params = new URLSearchParams(search);
  const accession = params.get("tool");
  if (accession) return { kind: "tool", accession };
  return { kind: "search", state: deserializeState(search) };
}

export function toolUrl(accession: string): string {
  const params = new URLSearchParams();
  params.set("tool", accession);
  return `?${params.toString()}`;
}
