import type { ViewState } from "./state.js";
import { enterableFindings } from "./state.js";
import type { DifferentialEntry } from "./types.js";

// Renderers are pure string functions so the whole view is testable without a
// browser. Every displayed number is carried verbatim in a data-* attribute;
// the inner text is only a human-readable formatting of the same API field.

export function escapeHtml(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

function pct(p: number): string {
  return `${Math.max(0, Math.min(100, p * 100)).toFixed(1)}%`;
}

function diffRow(entry: DifferentialEntry, goalId: string | null, vetoed: boolean): string {
  const badge = vetoed ? "vetoed" : entry.status;
  const goalMark = goalId === entry.node_id ? `<span class="goal-mark">goal</span>` : "";
  return `
    <div class="diff-row${goalId === entry.node_id ? " is-goal" : ""}" data-node-id="${escapeHtml(entry.node_id)}"
         data-posterior="${escapeHtml(entry.posterior)}" data-status="${escapeHtml(badge)}">
      <button class="node-label" data-action="explain" data-node-id="${escapeHtml(entry.node_id)}">
        ${escapeHtml(entry.name)}
      </button>
      <div class="bar-track">
        <div class="bar ${escapeHtml(badge)}" style="width: ${pct(entry.posterior)}"></div>
      </div>
      <span class="posterior" title="${escapeHtml(entry.posterior)}">${entry.posterior.toFixed(4)}</span>
      <span class="badge ${escapeHtml(badge)}">${escapeHtml(badge)}</span>
      ${goalMark}
    </div>`;
}

export function renderDifferential(state: ViewState): string {
  const diff = state.differential;
  if (!diff) return `<p class="placeholder">No differential yet.</p>`;
  const goalId = diff.goal?.node_id ?? null;
  const rows = diff.differential.map((e) => diffRow(e, goalId, false)).join("");
  const vetoedRows = diff.vetoed.map((e) => diffRow(e, null, true)).join("");
  const vetoedBlock = diff.vetoed.length
    ? `<h3>Guard-vetoed</h3><div class="vetoed-strip">${vetoedRows}</div>`
    : "";
  return `${rows}${vetoedBlock}`;
}

export function renderGuardBanner(state: ViewState): string {
  const verdicts = state.differential?.verdicts ?? [];
  if (!verdicts.length) return "";
  const items = verdicts
    .map(
      (v) => `
      <li class="verdict ${escapeHtml(v.outcome)}" data-constraint-id="${escapeHtml(v.constraint_id)}"
          data-node-id="${escapeHtml(v.node_id)}" data-outcome="${escapeHtml(v.outcome)}">
        <strong>${escapeHtml(v.outcome)}</strong> ${escapeHtml(v.node_id)}: ${escapeHtml(v.message)}
      </li>`,
    )
    .join("");
  return `<ul class="guard-banner">${items}</ul>`;
}

export function renderRecommendations(state: ViewState): string {
  const recs = state.recommendations;
  if (!recs) return `<p class="placeholder">No recommendations requested.</p>`;
  if (!recs.recommendations.length) {
    return `<p class="placeholder">Nothing informative left to ask.</p>`;
  }
  const goalLine = recs.goal
    ? `<p class="goal-line" data-goal-node="${escapeHtml(recs.goal.node_id)}" data-goal-mode="${escapeHtml(recs.goal.mode)}">
         Current goal: <strong>${escapeHtml(recs.goal.node_id)}</strong> (${escapeHtml(recs.goal.mode)})</p>`
    : "";
  const rows = recs.recommendations
    .map(
      (r) => `
      <div class="rec-row" data-finding-id="${escapeHtml(r.finding_id)}"
           data-gain="${escapeHtml(r.gain)}" data-cost="${escapeHtml(r.cost)}" data-score="${escapeHtml(r.score)}">
        <span class="rec-name">${escapeHtml(r.name)}</span>
        <span class="rec-metric" title="${escapeHtml(r.gain)}">gain ${r.gain.toFixed(5)}</span>
        <span class="rec-metric" title="${escapeHtml(r.cost)}">cost ${r.cost}</span>
        <span class="rec-metric" title="${escapeHtml(r.score)}">score ${r.score.toFixed(5)}</span>
        <button data-action="enter-finding" data-finding-id="${escapeHtml(r.finding_id)}" data-state="present">present</button>
        <button data-action="enter-finding" data-finding-id="${escapeHtml(r.finding_id)}" data-state="absent">absent</button>
      </div>`,
    )
    .join("");
  return `${goalLine}${rows}`;
}

export function renderFindingEntry(state: ViewState): string {
  if (!state.moduleDoc) return "";
  const options = enterableFindings(state)
    .map(
      (f) => `
      <div class="finding-option" data-finding-id="${escapeHtml(f.id)}">
        <span>${escapeHtml(f.name)}</span>
        <button data-action="enter-finding" data-finding-id="${escapeHtml(f.id)}" data-state="present">present</button>
        <button data-action="enter-finding" data-finding-id="${escapeHtml(f.id)}" data-state="absent">absent</button>
      </div>`,
    )
    .join("");
  return `
    <input id="finding-search" type="search" placeholder="search findings"
           value="${escapeHtml(state.findingSearch)}" />
    <div class="finding-options">${options}</div>`;
}

export function renderExplanation(state: ViewState): string {
  const ex = state.explanation;
  if (!ex) return "";
  const rows = ex.entries
    .map((e) => {
      const width = Math.min(100, Math.abs(e.log_lr) * 25);
      const direction = e.log_lr >= 0 ? "supports" : "opposes";
      return `
      <div class="explain-row" data-finding-id="${escapeHtml(e.finding_id)}" data-state="${escapeHtml(e.state)}"
           data-lr="${escapeHtml(e.likelihood_ratio)}" data-log-lr="${escapeHtml(e.log_lr)}">
        <span class="explain-name">${escapeHtml(e.finding_id)} (${escapeHtml(e.state)})</span>
        <div class="loglr-track">
          <div class="loglr-bar ${direction}" style="width: ${width.toFixed(1)}%"></div>
        </div>
        <span title="${escapeHtml(e.log_lr)}">LR ${e.likelihood_ratio.toFixed(4)}, log ${e.log_lr.toFixed(4)}</span>
      </div>`;
    })
    .join("");
  return `
    <div class="explain-drawer" data-node-id="${escapeHtml(ex.node_id)}"
         data-prior="${escapeHtml(ex.prior)}" data-posterior="${escapeHtml(ex.posterior)}">
      <h3>Why ${escapeHtml(ex.name)}</h3>
      <p>prior <span title="${escapeHtml(ex.prior)}">${ex.prior.toFixed(4)}</span>
         &rarr; posterior <span title="${escapeHtml(ex.posterior)}">${ex.posterior.toFixed(4)}</span></p>
      ${rows}
      <button data-action="close-explanation">close</button>
    </div>`;
}

export function renderTerminationBanner(state: ViewState): string {
  const status = state.differential?.status;
  if (!status || status.state !== "done") return "";
  return `<div class="termination-banner" data-reason="${escapeHtml(status.reason)}">
    Session finished: ${escapeHtml(status.reason)}</div>`;
}

export function renderErrorBanner(state: ViewState): string {
  if (!state.error) return "";
  return `<div class="error-banner">${escapeHtml(state.error)}</div>`;
}

export function renderTranscript(state: ViewState): string {
  if (!state.transcriptRaw) return `<p class="placeholder">No transcript loaded.</p>`;
  return `<pre class="transcript" data-bytes="${escapeHtml(state.transcriptRaw.length)}">${escapeHtml(state.transcriptRaw)}</pre>`;
}

export function renderModulePicker(state: ViewState): string {
  const options = state.modules
    .map(
      (m) => `<option value="${escapeHtml(m.id)}"${m.id === state.selectedModule ? " selected" : ""}>
        ${escapeHtml(m.name)} [${escapeHtml(m.domain)}]</option>`,
    )
    .join("");
  return `
    <select id="module-select">
      <option value="">pick a module…</option>${options}
    </select>
    <textarea id="context-input" rows="2" placeholder='context JSON, e.g. {"sex": "female", "age": 34}'>${escapeHtml(state.contextDraft)}</textarea>
    <button id="start-session" ${state.selectedModule ? "" : "disabled"}>start session</button>
    ${state.sessionId ? `<span class="session-id">session ${escapeHtml(state.sessionId)}</span>` : ""}`;
}

export function renderApp(state: ViewState): string {
  return `
    ${renderErrorBanner(state)}
    <section class="panel" id="panel-module">${renderModulePicker(state)}</section>
    ${renderTerminationBanner(state)}
    ${renderGuardBanner(state)}
    <div class="columns">
      <section class="panel" id="panel-differential">
        <h2>Differential</h2>${renderDifferential(state)}
      </section>
      <section class="panel" id="panel-recommendations">
        <h2>Next findings</h2>${renderRecommendations(state)}
      </section>
      <section class="panel" id="panel-entry">
        <h2>Enter finding</h2>${renderFindingEntry(state)}
      </section>
    </div>
    ${renderExplanation(state)}
    <section class="panel" id="panel-transcript">
      <h2>Transcript</h2>
      <button id="load-transcript" ${state.sessionId ? "" : "disabled"}>refresh</button>
      <button id="export-transcript" ${state.transcriptRaw ? "" : "disabled"}>export</button>
      ${renderTranscript(state)}
    </section>`;
}
