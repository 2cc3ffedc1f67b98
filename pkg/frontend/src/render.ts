/**
 * DOM rendering. Pure functions of (document, data): the result list is
 * rendered strictly in API order - the client never re-sorts anything.
 */

import type {
  RelatedTool,
  SearchResponse,
  SearchResult,
  ToolCard,
} from "./types.js";
import {
  DIMENSION_NAMES,
  FACET_DIMENSIONS,
  toolUrl,
  type FacetDimension,
  type UiQueryState,
} from "./state.js";

const SIGNAL_LABELS: [keyof SearchResult["signals"], string][] = [
  ["text_relevance", "text"],
  ["category_match", "category"],
  ["quality", "quality"],
  ["community", "community"],
];

export function starRating(document: Document, value: number, outOf = 5): HTMLElement {
  const span = document.createElement("span");
  span.className = "stars";
  const filled = Math.round(Math.min(Math.max(value, 0), outOf));
  span.textContent = "★".repeat(filled) + "☆".repeat(outOf - filled);
  span.setAttribute("aria-label", `${value.toFixed(1)} of ${outOf}`);
  return span;
}

function signalBars(document: Document, result: SearchResult): HTMLElement {
  const bars = document.createElement("div");
  bars.className = "signal-bars";
  for (const [key, label] of SIGNAL_LABELS) {
    const row = document.createElement("div");
    row.className = "signal";
    const name = document.createElement("span");
    name.className = "signal-name";
    name.textContent = label;
    const track = document.createElement("span");
    track.className = "signal-track";
    const fill = document.createElement("span");
    fill.className = "signal-fill";
    fill.style.width = `${Math.round(result.signals[key] * 100)}%`;
    track.appendChild(fill);
    row.append(name, track);
    bars.appendChild(row);
  }
  return bars;
}

function breadcrumbs(document: Document, categories: string[]): HTMLElement {
  const nav = document.createElement("div");
  nav.className = "breadcrumbs";
  for (const categoryId of categories) {
    const crumb = document.createElement("span");
    crumb.className = "crumb";
    crumb.textContent = categoryId.split(".").join(" › ");
    nav.appendChild(crumb);
  }
  return nav;
}

export function renderResults(
  document: Document,
  container: HTMLElement,
  response: SearchResponse,
  onOpenTool: (accession: string) => void,
): void {
  container.textContent = "";
  const meta = document.createElement("p");
  meta.className = "result-meta";
  meta.textContent = `${response.total} tools (index generation ${response.generation})`;
  container.appendChild(meta);

  const list = document.createElement("ol");
  list.className = "results";
  for (const result of response.results) {
    const item = document.createElement("li");
    item.className = "result";
    item.dataset.accession = result.accession;

    const heading = document.createElement("h3");
    const link = document.createElement("a");
    link.href = toolUrl(result.accession);
    link.textContent = result.name;
    link.addEventListener("click", (event) => {
      event.preventDefault();
      onOpenTool(result.accession);
    });
    heading.appendChild(link);

    const score = document.createElement("span");
    score.className = "score";
    score.textContent = result.score.toFixed(3);
    heading.appendChild(score);
    heading.appendChild(starRating(document, result.signals.community * 5));

    const summary = document.createElement("p");
    summary.className = "summary";
    summary.textContent = result.summary;

    item.append(heading, breadcrumbs(document, result.categories), summary,
                signalBars(document, result));
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function renderFacets(
  document: Document,
  container: HTMLElement,
  response: SearchResponse,
  state: UiQueryState,
  onToggle: (dimension: FacetDimension, value: string) => void,
): void {
  container.textContent = "";
  for (const dimension of FACET_DIMENSIONS) {
    const apiName = DIMENSION_NAMES[dimension];
    const counts = response.facets[apiName] ?? {};
    const values = Object.keys(counts).sort();
    if (!values.length) continue;
    const group = document.createElement("fieldset");
    group.className = "facet-group";
    group.dataset.dimension = dimension;
    const legend = document.createElement("legend");
    legend.textContent = apiName.split("_").join(" ");
    group.appendChild(legend);
    for (const value of values) {
      const label = document.createElement("label");
      label.className = "facet";
      const checkbox = document.createElement("input");
      checkbox.type = "checkbox";
      checkbox.value = value;
      checkbox.checked = state[dimension].includes(value);
      checkbox.addEventListener("change", () => onToggle(dimension, value));
      const text = document.createElement("span");
      text.textContent = `${value} (${counts[value]})`;
      label.append(checkbox, text);
      group.appendChild(label);
    }
    container.appendChild(group);
  }
}

export function renderPagination(
  document: Document,
  container: HTMLElement,
  response: SearchResponse,
  state: UiQueryState,
  onPage: (page: number) => void,
): void {
  container.textContent = "";
  const lastPage = Math.max(1, Math.ceil(response.total / state.perPage));
  if (lastPage <= 1) return;
  const previous = document.createElement("button");
  previous.textContent = "‹ previous";
  previous.disabled = state.page <= 1;
  previous.addEventListener("click", () => onPage(state.page - 1));
  const where = document.createElement("span");
  where.textContent = ` page ${state.page} of ${lastPage} `;
  const next = document.createElement("button");
  next.textContent = "next ›";
  next.disabled = state.page >= lastPage;
  next.addEventListener("click", () => onPage(state.page + 1));
  container.append(previous, where, next);
}

export function renderInlineError(
  document: Document,
  container: HTMLElement,
  message: string,
): void {
  container.textContent = "";
  const box = document.createElement("p");
  box.className = "error-inline";
  box.textContent = message;
  container.appendChild(box);
}

export function renderRetryBanner(
  document: Document,
  container: HTMLElement,
  onRetry: () => void,
): void {
  container.textContent = "";
  const banner = document.createElement("div");
  banner.className = "error-banner";
  const text = document.createElement("span");
  text.textContent = "The service is unavailable right now.";
  const retry = document.createElement("button");
  retry.textContent = "Retry";
  retry.addEventListener("click", onRetry);
  banner.append(text, retry);
  container.appendChild(banner);
}

function specRow(document: Document, label: string, value: string): HTMLElement {
  const row = document.createElement("tr");
  const head = document.createElement("th");
  head.textContent = label;
  const cell = document.createElement("td");
  cell.textContent = value || "—";
  row.append(head, cell);
  return row;
}

export function renderToolPage(
  document: Document,
  container: HTMLElement,
  card: ToolCard,
  related: RelatedTool[],
  onOpenTool: (accession: string) => void,
): void {
  container.textContent = "";
  const page = document.createElement("article");
  page.className = "tool-page";
  page.dataset.accession = card.accession;

  if (card.status === "obsolete") {
    const banner = document.createElement("div");
    banner.className = "obsolete-banner";
    banner.textContent =
      "This tool's homepage has been unreachable for a while; the record is kept for reference.";
    page.appendChild(banner);
  }

  const heading = document.createElement("h2");
  heading.textContent = card.name;
  const health = document.createElement("span");
  const lastProbe = card.link_history[card.link_history.length - 1];
  health.className = `link-health ${lastProbe ? lastProbe.outcome : "unknown"}`;
  health.title = lastProbe
    ? `homepage ${lastProbe.outcome} (checked ${lastProbe.at})`
    : "homepage not checked yet";
  health.textContent = "●";
  heading.appendChild(health);
  page.appendChild(heading);

  if (card.rating.count > 0 && card.rating.mean !== null) {
    const rating = document.createElement("p");
    rating.className = "rating";
    rating.appendChild(starRating(document, card.rating.mean));
    const count = document.createElement("span");
    count.textContent = ` ${card.rating.mean.toFixed(1)} from ${card.rating.count} review${card.rating.count === 1 ? "" : "s"}`;
    rating.appendChild(count);
    page.appendChild(rating);
  }

  const description = document.createElement("p");
  description.className = "description";
  description.textContent = card.description;
  page.appendChild(description);

  const homepage = document.createElement("p");
  const homepageLink = document.createElement("a");
  homepageLink.href = card.homepage_url;
  homepageLink.textContent = card.homepage_url;
  homepageLink.rel = "noopener";
  homepage.append("Homepage: ", homepageLink);
  page.appendChild(homepage);

  page.appendChild(breadcrumbs(document, card.category_ids));

  const specTitle = document.createElement("h3");
  specTitle.textContent = "Specifications";
  const table = document.createElement("table");
  table.className = "spec-table";
  table.append(
    specRow(document, "Software type", card.spec.software_type),
    specRow(document, "Interface", card.spec.interfaces.join(", ")),
    specRow(document, "Operating systems", card.spec.operating_systems.join(", ")),
    specRow(document, "Programming languages", card.spec.programming_languages.join(", ")),
    specRow(document, "License", card.spec.license),
    specRow(document, "Computer skills", card.spec.computer_skills ?? ""),
    specRow(document, "Stability", card.spec.stability),
    specRow(document, "Maintained", card.spec.maintained),
  );
  for (const [label, url] of Object.entries(card.spec.external_links)) {
    const row = document.createElement("tr");
    const head = document.createElement("th");
    head.textContent = label;
    const cell = document.createElement("td");
    const link = document.createElement("a");
    link.href = url;
    link.textContent = url;
    link.rel = "noopener";
    cell.appendChild(link);
    row.append(head, cell);
    table.appendChild(row);
  }
  page.append(specTitle, table);

  if (card.publications.length) {
    const pubTitle = document.createElement("h3");
    pubTitle.textContent = "Publications";
    const pubList = document.createElement("ul");
    pubList.className = "publications";
    for (const publication of card.publications) {
      const item = document.createElement("li");
      const title = document.createElement("span");
      title.textContent = publication.title +
        (publication.year ? ` (${publication.year})` : "");
      item.appendChild(title);
      if (publication.doi) {
        const doi = document.createElement("code");
        doi.textContent = ` doi:${publication.doi}`;
        item.appendChild(doi);
      }
      const badges = document.createElement("span");
      badges.className = "badges";
      for (const [user, roles] of Object.entries(publication.credit_badges)) {
        for (const role of roles) {
          const badge = document.createElement("span");
          badge.className = "badge";
          badge.textContent = role;
          badge.title = `${role} — ${user}`;
          badges.appendChild(badge);
        }
      }
      item.appendChild(badges);
      pubList.appendChild(item);
    }
    page.append(pubTitle, pubList);
  }

  if (card.versions.length) {
    const versionTitle = document.createElement("h3");
    versionTitle.textContent = "Versions";
    const versionList = document.createElement("ul");
    versionList.className = "versions";
    for (const version of card.versions) {
      const item = document.createElement("li");
      const doi = document.createElement("code");
      doi.textContent = version.doi;
      item.append(`${version.version_label} (${version.operating_system} ${version.architecture}) — `, doi);
      versionList.appendChild(item);
    }
    page.append(versionTitle, versionList);
  }

  if (card.reviews.length) {
    const reviewTitle = document.createElement("h3");
    reviewTitle.textContent = "User reviews";
    const reviewList = document.createElement("ul");
    reviewList.className = "reviews";
    for (const review of card.reviews) {
      const item = document.createElement("li");
      item.appendChild(starRating(document, review.rating));
      const by = document.createElement("span");
      by.textContent = ` ${review.user_id}${review.text ? ": " : ""}`;
      item.appendChild(by);
      if (review.text) {
        const text = document.createElement("q");
        text.textContent = review.text;
        item.appendChild(text);
      }
      reviewList.appendChild(item);
    }
    page.append(reviewTitle, reviewList);
  }

  const relatedTitle = document.createElement("h3");
  relatedTitle.textContent = "Related tools";
  const strip = document.createElement("div");
  strip.className = "related-strip";
  if (!related.length) {
    const none = document.createElement("span");
    none.className = "related-empty";
    none.textContent = "No other tools share a category yet.";
    strip.appendChild(none);
  }
  for (const tool of related) {
    const cardLink = document.createElement("a");
    cardLink.className = "related-card";
    cardLink.href = toolUrl(tool.accession);
    cardLink.dataset.accession = tool.accession;
    cardLink.addEventListener("click", (event) => {
      event.preventDefault();
      onOpenTool(tool.accession);
    });
    const name = document.createElement("strong");
    name.textContent = tool.name;
    const summary = document.createElement("span");
    summary.textContent = tool.summary;
    cardLink.append(name, summary);
    strip.appendChild(cardLink);
  }
  page.append(relatedTitle, strip);

  container.appendChild(page);
}

export function renderNotFound(document: Document, container: HTMLElement,
                               accession: string): void {
  container.textContent = "";
  const box = document.createElement("div");
  box.className = "not-found";
  const heading = document.createElement("h2");
  heading.textContent = "Tool not found";
  const text = document.createElement("p");
  text.textContent = `No tool with accession ${accession} exists in this registry.`;
  box.append(heading, text);
  container.appendChild(box);
}
