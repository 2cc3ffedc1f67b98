import assert from "node:assert/strict";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { test } from "node:test";
import { fileURLToPath } from "node:url";

import { Window } from "happy-dom";

import { ApiClient } from "../src/api.js";
import { App, type AppElements } from "../src/app.js";
import { serializeState, toApiParams, toolUrl } from "../src/state.js";
import { makeMockFetch, mockSearch, type MockFetchOptions } from "./mockapi.js";
import { SCRIPTED_STATES } from "./state.test.js";

const SHELL = `
  <form id="search-form"><input id="query"><button type="submit">go</button></form>
  <div id="notice"></div>
  <aside id="facets"></aside>
  <div id="results"></div>
  <nav id="pagination"></nav>
`;

function boot(url: string, options: MockFetchOptions = {}) {
  const win = new Window({ url: `http://ui.test/${url}` });
  const document = win.document;
  document.body.innerHTML = SHELL;
  const { fetcher, calls } = makeMockFetch(options);
  const api = new ApiClient("http://api.test",
                            fetcher as ConstructorParameters<typeof ApiClient>[1]);
  const el = {
    form: document.querySelector("#search-form"),
    queryInput: document.querySelector("#query"),
    results: document.querySelector("#results"),
    facets: document.querySelector("#facets"),
    pagination: document.querySelector("#pagination"),
    notice: document.querySelector("#notice"),
  } as unknown as AppElements;
  const app = new App(win as unknown as globalThis.Window & typeof globalThis,
                      api, el);
  app.start();
  return { win, document, app, calls };
}

async function settle(rounds = 4) {
  for (let i = 0; i < rounds; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

function domAccessions(document: { querySelectorAll(q: string): unknown }): string[] {
  const items = document.querySelectorAll("li.result") as unknown as {
    getAttribute(name: string): string | null;
  }[];
  return [...items].map((li) => li.getAttribute("data-accession") ?? "");
}

function submitQuery(win: InstanceType<typeof Window>, q: string) {
  const input = win.document.querySelector("#query") as unknown as { value: string };
  input.value = q;
  const form = win.document.querySelector("#search-form")!;
  form.dispatchEvent(new win.Event("submit", { bubbles: true, cancelable: true }));
}

// -- the static shell and the test shell must agree ---------------------------

test("index.html carries every element the app binds to", () => {
  const here = dirname(fileURLToPath(import.meta.url));
  const html = readFileSync(join(here, "..", "..", "index.html"), "utf-8");
  for (const id of ["search-form", "query", "notice", "facets", "results",
                    "pagination"]) {
    assert.ok(html.includes(`id="${id}"`), `index.html is missing #${id}`);
  }
});

// -- deep links -----------------------------------------------------------------

test("pasting a generated URL reproduces the API-defined result list (20 states)", async () => {
  for (const state of SCRIPTED_STATES) {
    const url = serializeState(state);
    const { document } = boot(url);
    await settle();
    const expected = mockSearch(toApiParams(state)).results.map((r) => r.accession);
    assert.deepEqual(domAccessions(document), expected, url);
  }
});

test("interactive navigation and a pasted deep link render identical lists", async () => {
  const first = boot("");
  await settle();
  submitQuery(first.win, "quality");
  await settle();

  // narrow by an operating-system facet
  const facet = first.document.querySelector(
    'fieldset[data-dimension="os"] input[value="Linux"]',
  ) as unknown as { checked: boolean; dispatchEvent(e: unknown): void };
  assert.ok(facet, "expected a Linux facet checkbox");
  facet.checked = true;
  facet.dispatchEvent(new first.win.Event("change"));
  await settle();

  const generatedUrl = first.win.location.search;
  assert.equal(generatedUrl, "?q=quality&os=Linux");
  const interactive = domAccessions(first.document);
  assert.ok(interactive.length > 0);

  const second = boot(generatedUrl);
  await settle();
  assert.deepEqual(domAccessions(second.document), interactive);
});

test("pagination is part of the deep link", async () => {
  const url = serializeState({ ...SCRIPTED_STATES[19]!, q: "quality", perPage: 1, page: 2 });
  const { document } = boot(url);
  await settle();
  const expected = mockSearch(new URLSearchParams(
    "q=quality&page=2&per_page=1")).results.map((r) => r.accession);
  assert.equal(expected.length, 1);
  assert.deepEqual(domAccessions(document), expected);
});

// -- facet narrowing --------------------------------------------------------------

test("clicking a facet narrows results to exactly the API-filtered set", async () => {
  const { win, document } = boot("?q=quality");
  await settle();
  const before = domAccessions(document);
  assert.ok(before.length >= 2);

  const checkbox = document.querySelector(
    'fieldset[data-dimension="os"] input[value="Windows"]',
  ) as unknown as { checked: boolean; dispatchEvent(e: unknown): void };
  assert.ok(checkbox, "expected a Windows facet checkbox");
  checkbox.checked = true;
  checkbox.dispatchEvent(new win.Event("change"));
  await settle();

  const expected = mockSearch(new URLSearchParams("q=quality&os=Windows"))
    .results.map((r) => r.accession);
  assert.deepEqual(domAccessions(document), expected);
  assert.equal(win.location.search, "?q=quality&os=Windows");

  // un-ticking restores the wider set
  const again = document.querySelector(
    'fieldset[data-dimension="os"] input[value="Windows"]',
  ) as unknown as { checked: boolean; dispatchEvent(e: unknown): void };
  again.checked = false;
  again.dispatchEvent(new win.Event("change"));
  await settle();
  assert.deepEqual(domAccessions(document), before);
});

// -- ordering ------------------------------------------------------------------------

test("DOM order equals API order", async () => {
  const { document } = boot("?q=mass");
  await settle();
  const expected = mockSearch(new URLSearchParams("q=mass"))
    .results.map((r) => r.accession);
  // the fixture makes this order differ from accession order
  assert.deepEqual(expected,
                   [...expected].sort((a, b) => b.localeCompare(a)));
  assert.deepEqual(domAccessions(document), expected);
});

test("the client never re-sorts, even when the server order looks arbitrary", async () => {
  const { document } = boot("?q=quality", {
    scramble: (body) => ({ ...body, results: [...body.results].reverse() }),
  });
  await settle();
  const serverOrder = mockSearch(new URLSearchParams("q=quality"))
    .results.map((r) => r.accession).reverse();
  assert.ok(serverOrder.length >= 2);
  assert.deepEqual(domAccessions(document), serverOrder);
});

// -- latest wins --------------------------------------------------------------------

test("in-flight searches are superseded: the newest query wins", async () => {
  const gates = new Map<string, () => void>();
  const { win, document, calls } = boot("", {
    gate: (_index, url) => {
      if (!url.includes("q=")) return Promise.resolve();
      return new Promise((resolve) => {
        gates.set(url, () => resolve());
      });
    },
  });
  await settle();

  submitQuery(win, "mass");
  await settle(1);
  submitQuery(win, "quality");
  await settle(1);

  // release the requests out of order: newest first, stale one afterwards
  for (const [url, release] of [...gates.entries()].reverse()) {
    release();
    await settle();
    void url;
  }
  await settle();

  const expected = mockSearch(new URLSearchParams("q=quality"))
    .results.map((r) => r.accession);
  assert.deepEqual(domAccessions(document), expected);
  assert.equal(win.location.search, "?q=quality");
  assert.ok(calls.filter((u) => u.includes("search")).length >= 2);
});

// -- errors ------------------------------------------------------------------------

test("4xx renders the error message inline", async () => {
  const { document } = boot("?q=broken", {
    failWith400: (url) => url.includes("q=broken"),
  });
  await settle();
  const inline = document.querySelector(".error-inline");
  assert.ok(inline);
  assert.match(inline!.textContent ?? "", /position 13/);
});

test("5xx renders a retry banner and retry re-issues the search", async () => {
  let failing = true;
  const { document } = boot("?q=quality", {
    failWith500: () => failing,
  });
  await settle();
  const banner = document.querySelector(".error-banner");
  assert.ok(banner, "expected a retry banner");
  assert.deepEqual(domAccessions(document), []);

  failing = false;
  (banner!.querySelector("button") as unknown as { click(): void }).click();
  await settle();
  const expected = mockSearch(new URLSearchParams("q=quality"))
    .results.map((r) => r.accession);
  assert.deepEqual(domAccessions(document), expected);
});

// -- tool page -----------------------------------------------------------------------

test("tool page shows the card, reviews, versions and related strip", async () => {
  const { document } = boot(toolUrl("TOOL_000002"));
  await settle();
  const page = document.querySelector(".tool-page");
  assert.ok(page);
  assert.equal(page!.getAttribute("data-accession"), "TOOL_000002");
  assert.match(document.querySelector(".spec-table")!.textContent ?? "", /Java/);
  assert.equal(document.querySelectorAll(".reviews li").length, 2);
  assert.match(document.querySelector(".versions")!.textContent ?? "",
               /10\.5072\/toolseek\.TOOL_000002\.1\.0/);
  // readtrim shares HTS.WGS.QC with qcheck and is not obsolete
  const related = document.querySelectorAll(".related-card");
  assert.equal(related.length, 1);
  assert.equal(related[0]!.getAttribute("data-accession"), "TOOL_000007");
});

test("a tool with only an obsolete category peer shows an empty related strip", async () => {
  const { document } = boot(toolUrl("TOOL_000001"));
  await settle();
  assert.ok(document.querySelector(".related-empty"));
  assert.equal(document.querySelectorAll(".related-card").length, 0);
});

test("obsolete tools render with a banner, never a 404", async () => {
  const { document } = boot(toolUrl("TOOL_000004"));
  await settle();
  assert.ok(document.querySelector(".obsolete-banner"));
  assert.ok(document.querySelector(".tool-page"));
  assert.equal(document.querySelector(".not-found"), null);
});

test("unknown accession renders the not-found page", async () => {
  const { document } = boot(toolUrl("TOOL_424242"));
  await settle();
  assert.ok(document.querySelector(".not-found"));
});

test("clicking a result opens the tool page and updates the URL", async () => {
  const { win, document } = boot("?q=mass");
  await settle();
  const link = document.querySelector("li.result h3 a") as unknown as {
    dispatchEvent(e: unknown): boolean;
  };
  link.dispatchEvent(new win.Event("click", { bubbles: true, cancelable: true }));
  await settle();
  assert.ok(document.querySelector(".tool-page"));
  assert.match(win.location.search, /tool=TOOL_/);
});
