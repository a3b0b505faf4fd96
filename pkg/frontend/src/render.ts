/**
 * Pure HTML-string renderers over the session state. No DOM access here:
 * the mock-API tests assert on these strings directly, and app.ts only
 * assigns them to innerHTML.
 */

import { RecommendationView, StepResult } from "./api.js";
import { UiSessionState } from "./state.js";

export function escapeHtml(value: unknown): string {
  return String(value ?? "")
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export function renderErrorBanner(state: UiSessionState): string {
  if (!state.errorBanner) {
    return "";
  }
  return `<div class="error-banner" role="alert">${escapeHtml(state.errorBanner)}</div>`;
}

export function renderInterpretations(state: UiSessionState): string {
  if (state.interpretations.length === 0) {
    if (state.errorBanner && state.errorBanner.startsWith("NoInterpretation")) {
      return `<p class="empty-hint">No interpretation found. Try table or column names from the dataset.</p>`;
    }
    return "";
  }
  const cards = state.interpretations
    .map((interpretation, index) => {
      const unmatched =
        interpretation.unmatched.length > 0
          ? `<p class="unmatched">unmatched: ${escapeHtml(interpretation.unmatched.join(", "))}</p>`
          : "";
      return `
<article class="interpretation-card" data-index="${index}">
  <p class="explanation">${escapeHtml(interpretation.nl_explanation)}</p>
  <details><summary>SQL</summary><code>${escapeHtml(interpretation.sql)}</code></details>
  <p class="score">score ${interpretation.score.toFixed(3)}</p>
  ${unmatched}
  <button class="choose" data-index="${index}">Run this interpretation</button>
</article>`;
    })
    .join("\n");
  return `<div class="interpretation-list">${cards}</div>`;
}

export function renderResult(result: StepResult | null): string {
  if (result === null) {
    return `<p class="empty-hint">No result yet. Ask a question to get started.</p>`;
  }
  if (result.kind === "set" || result.kind === "table") {
    const headers = result.headers.map((h) => `<th>${escapeHtml(h)}</th>`).join("");
    const rows = result.rows
      .map(
        (row) =>
          `<tr>${row.map((cell) => `<td>${escapeHtml(cell ?? "∅")}</td>`).join("")}</tr>`,
      )
      .join("\n");
    const caption =
      result.kind === "set"
        ? `<caption>${result.size} rows from ${escapeHtml(result.base_table)}</caption>`
        : "";
    return `<table class="result-grid">${caption}<thead><tr>${headers}</tr></thead><tbody>${rows}</tbody></table>`;
  }
  if (result.kind === "facet") {
    const maxCount = Math.max(...result.buckets.map((b) => b.count), 1);
    const bars = result.buckets
      .map(
        (bucket) => `
<li class="facet-bar" data-value="${escapeHtml(bucket.value)}">
  <span class="facet-label">${escapeHtml(bucket.value)}</span>
  <span class="bar" style="width:${Math.round((bucket.count / maxCount) * 100)}%"></span>
  <span class="facet-count">${bucket.count}</span>
</li>`,
      )
      .join("\n");
    return `<ul class="facet-bars" data-attribute="${escapeHtml(result.attribute)}">${bars}</ul>`;
  }
  if (result.kind === "ranking") {
    const rows = result.entries
      .map((entry) => {
        if (entry.id !== undefined) {
          return `<li>${escapeHtml(entry.id)} <span class="distance">${entry.distance}</span></li>`;
        }
        if (entry.set !== undefined) {
          return `<li>${escapeHtml(entry.set.label ?? entry.set.ids.join(", "))} <span class="distance">overlap ${entry.overlap}</span></li>`;
        }
        return `<li>candidate ${entry.candidate_index} <span class="distance">divergence ${entry.divergence}</span></li>`;
      })
      .join("\n");
    return `<ol class="ranking">${rows}</ol>`;
  }
  const uncovered = result.uncovered.ids.length
    ? `uncovered: ${escapeHtml(result.uncovered.ids.join(", "))}`
    : "target fully covered";
  return `<p class="cover">picked candidates ${result.cover.join(", ")} — ${uncovered}</p>`;
}

export function renderExplanationBanner(state: UiSessionState): string {
  if (!state.explanationBanner) {
    return "";
  }
  return `<div class="explanation-banner">${escapeHtml(state.explanationBanner)}</div>`;
}

export function renderRecommendations(state: UiSessionState): string {
  if (state.recommendations.length === 0) {
    return `<p class="empty-hint">No recommendations right now.</p>`;
  }
  const title = state.recommendationMode === "cold_start" ? "Starter queries" : "Possible next steps";
  const cards = state.recommendations
    .map((recommendation: RecommendationView, index: number) => {
      const detail = recommendation.nl_explanation
        ? `<p class="explanation">${escapeHtml(recommendation.nl_explanation)}</p>`
        : `<p class="explanation">${escapeHtml(describeOperatorPayload(recommendation))}</p>`;
      return `
<article class="recommendation-card" data-index="${index}">
  ${detail}
  <p class="rationale">${escapeHtml(recommendation.rationale)}</p>
  <button class="accept" data-index="${index}">Accept</button>
  <button class="reject" data-index="${index}">Reject</button>
</article>`;
    })
    .join("\n");
  return `<h3>${title}</h3><div class="recommendation-list">${cards}</div>`;
}

function describeOperatorPayload(recommendation: RecommendationView): string {
  const payload = recommendation.payload as { op?: string; params?: Record<string, unknown> };
  if (!payload.op) {
    return "starter query";
  }
  const params = payload.params ?? {};
  const rendered = Object.entries(params)
    .map(([key, value]) => `${key}=${JSON.stringify(value)}`)
    .join(", ");
  return rendered ? `${payload.op}(${rendered})` : payload.op;
}

export function renderBreadcrumb(state: UiSessionState): string {
  if (state.breadcrumb.length === 0) {
    return "";
  }
  const crumbs = state.breadcrumb
    .map((step) => {
      const active = step.id === state.activeStep ? " active" : "";
      return `<li class="crumb${active}" data-step="${escapeHtml(step.id)}"><button class="backtrack" data-step="${escapeHtml(step.id)}">${escapeHtml(step.id)}: ${escapeHtml(step.op)}</button></li>`;
    })
    .join("");
  return `<ol class="breadcrumb">${crumbs}</ol>`;
}

export function renderMetricsFooter(state: UiSessionState): string {
  if (state.interactionCount === null) {
    return "";
  }
  const noun = state.interactionCount === 1 ? "interaction" : "interactions";
  return `<footer class="metrics-footer">${state.interactionCount} ${noun}</footer>`;
}
