/**
 * Application wiring. The URL query string is the single source of truth:
 * every interaction serializes the next state into the URL (pushState) and
 * then renders from it, so back/forward and pasted deep links reproduce the
 * exact same view.
 */

import { ApiClient, ApiError, Superseded } from "./api.js";
import {
  renderFacets,
  renderInlineError,
  renderNotFound,
  renderPagination,
  renderResults,
  renderRetryBanner,
  renderToolPage,
} from "./render.js";
import {
  emptyState,
  parseRoute,
  serializeState,
  toggleFacet,
  toolUrl,
  withPage,
  withQuery,
  type FacetDimension,
  type UiQueryState,
} from "./state.js";

export interface AppElements {
  form: HTMLFormElement;
  queryInput: HTMLInputElement;
  results: HTMLElement;
  facets: HTMLElement;
  pagination: HTMLElement;
  notice: HTMLElement;
}

export class App {
  private readonly document: Document;
  // `api` is deployment plumbing, not view state; it is carried along on
  // every navigation so copied deep links keep pointing at the same backend
  private readonly apiParam: string | null;

  constructor(
    private readonly win: Window,
    private readonly api: ApiClient,
    private readonly el: AppElements,
  ) {
    this.document = win.document;
    this.apiParam = new URLSearchParams(win.location.search).get("api");
  }

  start(): void {
    this.el.form.addEventListener("submit", (event) => {
      event.preventDefault();
      const route = parseRoute(this.win.location.search);
      const base = route.kind === "search" ? route.state : emptyState();
      this.gotoSearch(withQuery(base, this.el.queryInput.value));
    });
    this.win.addEventListener("popstate", () => {
      void this.renderFromUrl();
    });
    void this.renderFromUrl();
  }

  /** Re-render whatever the current URL says; the one entry point for views. */
  async renderFromUrl(): Promise<void> {
    const route = parseRoute(this.win.location.search);
    if (route.kind === "tool") {
      await this.renderTool(route.accession);
      return;
    }
    this.el.queryInput.value = route.state.q;
    await this.renderSearch(route.state);
  }

  private push(search: string): void {
    let target = search;
    if (this.apiParam) {
      const params = new URLSearchParams(search);
      params.set("api", this.apiParam);
      target = `?${params.toString()}`;
    }
    this.win.history.pushState(null, "", target || this.win.location.pathname || "?");
    void this.renderFromUrl();
  }

  gotoSearch(state: UiQueryState): void {
    this.push(serializeState(state));
  }

  gotoTool(accession: string): void {
    this.push(toolUrl(accession));
  }

  private async renderSearch(state: UiQueryState): Promise<void> {
    this.el.notice.textContent = "";
    let response;
    try {
      response = await this.api.search(state);
    } catch (error) {
      if (error instanceof Superseded) return; // a newer search is rendering
      if (error instanceof ApiError && error.status < 500) {
        renderInlineError(this.document, this.el.notice, error.message);
        return;
      }
      renderRetryBanner(this.document, this.el.notice, () => {
        void this.renderSearch(state);
      });
      return;
    }
    renderResults(this.document, this.el.results, response,
                  (accession) => this.gotoTool(accession));
    renderFacets(this.document, this.el.facets, response, state,
                 (dimension: FacetDimension, value: string) =>
                   this.gotoSearch(toggleFacet(state, dimension, value)));
    renderPagination(this.document, this.el.pagination, response, state,
                     (page) => this.gotoSearch(withPage(state, page)));
  }

  private async renderTool(accession: string): Promise<void> {
    this.el.notice.textContent = "";
    this.el.facets.textContent = "";
    this.el.pagination.textContent = "";
    try {
      const [card, related] = await Promise.all([
        this.api.tool(accession),
        this.api.related(accession),
      ]);
      renderToolPage(this.document, this.el.results, card, related,
                     (other) => this.gotoTool(other));
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        renderNotFound(this.document, this.el.results, accession);
        return;
      }
      renderRetryBanner(this.document, this.el.notice, () => {
        void this.renderTool(accession);
      });
    }
  }
}

export function bootstrap(win: Window, apiBase?: string): App {
  const doc = win.document;
  const params = new URLSearchParams(win.location.search);
  const base = apiBase ?? params.get("api") ?? "";
  const el: AppElements = {
    form: doc.querySelector("#search-form") as HTMLFormElement,
    queryInput: doc.querySelector("#query") as HTMLInputElement,
    results: doc.querySelector("#results") as HTMLElement,
    facets: doc.querySelector("#facets") as HTMLElement,
    pagination: doc.querySelector("#pagination") as HTMLElement,
    notice: doc.querySelector("#notice") as HTMLElement,
  };
  const app = new App(win, new ApiClient(base), el);
  app.start();
  return app;
}
