/**
 * Pure HTML renderers for the session view.
 *
 * Everything returns strings so rendering is snapshot-testable without a
 * browser; main.ts only assigns innerHTML and wires events.
 */

import type { FrameBeliefs } from "./protocol.js";
import type { UiSessionView } from "./state.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function pct(x: number): string {
  return `${(x * 100).toFixed(1)}%`;
}

function fixed(x: number): string {
  return x.toFixed(3);
}

/**
 * One stacked bar per frame: singleton segments, composite-subset bands,
 * and an explicit ignorance segment, in server order. Widths are the raw
 * masses, so the bar always fills to 1.
 */
export function renderFrameBar(attribute: string, frame: FrameBeliefs): string {
  const segments = frame.masses
    .map((row) => {
      const composite = row.subset.length > 1;
      const isIgnorance =
        frame.ignorance > 0 &&
        row.mass === frame.ignorance &&
        row.subset.length === frame.singletons.length;
      const cls = isIgnorance
        ? "seg ignorance"
        : composite
          ? "seg composite"
          : "seg singleton";
      const label = `{${row.subset.join(", ")}}`;
      return (
        `<div class="${cls}" style="width:${pct(row.mass)}" ` +
        `title="m${esc(label)} = ${fixed(row.mass)}" ` +
        `data-subset="${esc(row.subset.join("+"))}" ` +
        `data-mass="${fixed(row.mass)}"></div>`
      );
    })
    .join("");
  const rows = frame.singletons
    .map(
      (s) =>
        `<tr><td>${esc(s.value)}</td>` +
        `<td class="num" data-bel="${esc(s.value)}">${fixed(s.bel)}</td>` +
        `<td class="num" data-pl="${esc(s.value)}">${fixed(s.pl)}</td></tr>`,
    )
    .join("");
  return (
    `<section class="frame" data-frame="${esc(attribute)}">` +
    `<h3>${esc(attribute)}</h3>` +
    `<div class="massbar">${segments}</div>` +
    `<div class="ignorance-note">ignorance m(&Theta;) = ` +
    `<span data-ignorance="${esc(attribute)}">${fixed(frame.ignorance)}</span></div>` +
    `<table class="beliefs"><thead><tr><th>value</th><th>Bel</th><th>Pl</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `</section>`
  );
}

export function renderBeliefs(view: UiSessionView): string {
  const frames = Object.entries(view.frames)
    .map(([attribute, frame]) => renderFrameBar(attribute, frame))
    .join("");
  return frames || '<p class="placeholder">no beliefs yet</p>';
}

export function renderBreadcrumb(view: UiSessionView): string {
  const parts: string[] = [];
  if (view.partition) {
    parts.push(`<span class="crumb partition">${esc(view.partition)}</span>`);
  }
  for (const attr of view.focus) {
    parts.push(`<span class="crumb">${esc(attr)}</span>`);
  }
  if (parts.length === 0) {
    return '<nav class="breadcrumb"></nav>';
  }
  return `<nav class="breadcrumb">${parts.join('<span class="sep">&rsaquo;</span>')}</nav>`;
}

export function renderQuestion(view: UiSessionView): string {
  if (view.status && view.status !== "awaiting-input") {
    const lines = view.conclusions
      .map(
        (c) =>
          `<li>${esc(c.attribute)} = <strong>${esc(c.value)}</strong> ` +
          `at belief ${fixed(c.belief)}` +
          (c.met_threshold ? "" : " (below threshold)") +
          `</li>`,
      )
      .join("");
    return (
      `<div class="done"><h2>consultation ${esc(view.status)}</h2>` +
      (lines ? `<ul>${lines}</ul>` : "<p>no conclusions reached</p>") +
      `</div>`
    );
  }
  const q = view.question;
  if (!q) {
    return '<p class="placeholder">waiting for the engine&hellip;</p>';
  }
  if (q.kind === "volunteer") {
    return (
      `<div class="question volunteer-mode">` +
      `<h2>${esc(q.text)}</h2>` +
      `<div id="volunteer-form">` +
      `<input id="vol-attribute" placeholder="attribute">` +
      `<input id="vol-value" placeholder="value">` +
      `<label>confidence <input id="vol-confidence" type="range" min="0" max="1" step="0.05" value="1"></label>` +
      `<button id="vol-submit">volunteer</button>` +
      `<button id="vol-skip">nothing to add</button>` +
      `</div></div>`
    );
  }
  const options = q.values
    .map(
      (v) =>
        `<button class="answer" data-value="${esc(v)}">${esc(v)}</button>`,
    )
    .join("");
  const slider = q.acceptsConfidence
    ? `<label>confidence <input id="confidence" type="range" min="0" max="1" step="0.05" value="1"></label>`
    : "";
  return (
    `<div class="question" data-attribute="${esc(q.attribute ?? "")}">` +
    `<h2>${esc(q.text)}</h2>` +
    `<div class="options">${options}</div>` +
    slider +
    `<div class="alt">` +
    `<button id="answer-unknown">don't know</button>` +
    `<button id="answer-irrelevant">this question is irrelevant</button>` +
    `</div></div>`
  );
}

export function renderTrace(view: UiSessionView): string {
  if (view.trace.length === 0) {
    return '<ol class="trace"></ol>';
  }
  const rows = view.trace
    .map((row) => `<li class="${row.kind}">${esc(row.text)}</li>`)
    .join("");
  return `<ol class="trace">${rows}</ol>`;
}

export function renderError(view: UiSessionView): string {
  return view.error
    ? `<div class="banner error">${esc(view.error)}</div>`
    : "";
}

export function renderApp(view: UiSessionView): string {
  return (
    renderError(view) +
    renderBreadcrumb(view) +
    `<div class="columns">` +
    `<div id="question-panel">${renderQuestion(view)}</div>` +
    `<div id="beliefs-panel">${renderBeliefs(view)}</div>` +
    `<div id="trace-panel"><h3>trace</h3>${renderTrace(view)}</div>` +
    `</div>`
  );
}
