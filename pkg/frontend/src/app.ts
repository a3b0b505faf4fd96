/**
 * DOM wiring. Renders the pure HTML fragments into fixed mount points
 * and translates UI events into controller calls. Attribute dropdowns
 * are sourced from the current result's headers, so only columns the
 * server reported are selectable.
 */

import { SetResult } from "./api.js";
import {
  renderBreadcrumb,
  renderErrorBanner,
  renderExplanationBanner,
  renderInterpretations,
  renderMetricsFooter,
  renderRecommendations,
  renderResult,
} from "./render.js";
import { SessionController, UiSessionState } from "./state.js";

const OPERATOR_FORMS: Record<string, string[]> = {
  by_filter: ["attribute", "op", "value"],
  by_facet: ["attribute"],
  by_example: ["features", "metric", "k"],
  by_overlap: ["min_overlap"],
  by_join: ["path"],
  by_superset: ["candidates"],
  by_analytics: ["attribute", "mode", "candidates"],
};

function currentAttributes(state: UiSessionState): string[] {
  const result = state.resultView;
  if (result && result.kind === "set") {
    return (result as SetResult).headers;
  }
  return [];
}

function mount(root: Document, id: string): HTMLElement {
  const element = root.getElementById(id);
  if (!element) {
    throw new Error(`missing mount point #${id}`);
  }
  return element;
}

export function buildStepParams(
  op: string,
  fields: Record<string, string>,
): Record<string, unknown> {
  const params: Record<string, unknown> = {};
  switch (op) {
    case "by_filter": {
      params.attribute = fields.attribute;
      params.op = fields.op;
      const raw = fields.value ?? "";
      const numeric = Number(raw);
      params.value = raw !== "" && !Number.isNaN(numeric) && fields.numericAttribute === "true"
        ? numeric
        : raw;
      break;
    }
    case "by_facet":
      params.attribute = fields.attribute;
      break;
    case "by_example":
      params.features = (fields.features ?? "").split(",").map((f) => f.trim()).filter(Boolean);
      params.metric = fields.metric || "euclidean";
      params.k = Number(fields.k || "5");
      break;
    case "by_overlap":
      params.min_overlap = Number(fields.min_overlap || "1");
      break;
    case "by_join":
      params.path = (fields.path ?? "").split(",").map((t) => t.trim()).filter(Boolean);
      break;
    case "by_superset":
      params.candidates = (fields.candidates ?? "").split(",").map((s) => s.trim()).filter(Boolean);
      break;
    case "by_analytics":
      params.attribute = fields.attribute;
      params.mode = fields.mode || "similar";
      params.candidates = (fields.candidates ?? "")
        .split(",")
        .map((s) => s.trim())
        .filter(Boolean);
      break;
  }
  return params;
}

export function wireApp(root: Document, controller: SessionController): void {
  const errorMount = mount(root, "error");
  const interpretationsMount = mount(root, "interpretations");
  const resultMount = mount(root, "result");
  const explanationMount = mount(root, "explanation");
  const recommendationsMount = mount(root, "recommendations");
  const breadcrumbMount = mount(root, "breadcrumb");
  const footerMount = mount(root, "footer");
  const attributeSelect = mount(root, "op-attribute") as HTMLSelectElement;

  controller.subscribe((state) => {
    errorMount.innerHTML = renderErrorBanner(state);
    interpretationsMount.innerHTML = renderInterpretations(state);
    resultMount.innerHTML = renderResult(state.resultView);
    explanationMount.innerHTML = renderExplanationBanner(state);
    recommendationsMount.innerHTML = renderRecommendations(state);
    breadcrumbMount.innerHTML = renderBreadcrumb(state);
    footerMount.innerHTML = renderMetricsFooter(state);

    const attributes = currentAttributes(state);
    attributeSelect.innerHTML = attributes
      .map((name) => `<option value="${name}">${name}</option>`)
      .join("");
  });

  const questionForm = mount(root, "question-form") as HTMLFormElement;
  const questionInput = mount(root, "question") as HTMLInputElement;
  questionForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void controller.submitQuestion(questionInput.value);
  });

  interpretationsMount.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("choose")) {
      void controller.chooseInterpretation(Number(target.dataset.index));
    }
  });

  const opSelect = mount(root, "op-select") as HTMLSelectElement;
  const opForm = mount(root, "op-form") as HTMLFormElement;
  opSelect.addEventListener("change", () => {
    const visible = OPERATOR_FORMS[opSelect.value] ?? [];
    opForm.querySelectorAll<HTMLElement>("[data-field]").forEach((element) => {
      element.style.display = visible.includes(element.dataset.field ?? "") ? "" : "none";
    });
  });
  opForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const fields: Record<string, string> = {};
    opForm.querySelectorAll<HTMLInputElement | HTMLSelectElement>("[name]").forEach((input) => {
      fields[input.name] = input.value;
    });
    // numeric columns need numeric literals; sniff the kind from the
    // current result's cells (server data, not local computation)
    const result = controller.state.resultView;
    if (result && result.kind === "set" && fields.attribute) {
      const column = result.headers.indexOf(fields.attribute);
      const sample = result.rows.map((row) => row[column]).find((cell) => cell !== null);
      fields.numericAttribute = typeof sample === "number" ? "true" : "false";
    }
    void controller.applyOperator(opSelect.value, buildStepParams(opSelect.value, fields));
  });

  const noveltySlider = mount(root, "novelty") as HTMLInputElement;
  noveltySlider.addEventListener("change", () => {
    void controller.setNovelty(Number(noveltySlider.value));
  });
  mount(root, "refresh-recommendations").addEventListener("click", () => {
    void controller.loadRecommendations();
  });
  recommendationsMount.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("accept")) {
      void controller.acceptRecommendation(Number(target.dataset.index));
    } else if (target.classList.contains("reject")) {
      void controller.rejectRecommendation(Number(target.dataset.index));
    }
  });

  breadcrumbMount.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("backtrack")) {
      void controller.backtrack(target.dataset.step ?? "");
    }
  });
}
