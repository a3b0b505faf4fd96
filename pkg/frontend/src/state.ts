/**
 * Session state and the controller that drives it. The controller is
 * framework-free: every mutation calls the gateway, waits for the
 * response (no optimistic updates, so concurrent-writer 409s surface),
 * stores exactly what the server said, and notifies subscribers.
 *
 * Invariant: the breadcrumb always mirrors GET /pipeline — after every
 * mutating call the controller re-fetches the pipeline and the metrics
 * rather than patching local copies.
 */

import {
  ApiError,
  GatewayClient,
  InterpretationView,
  PipelineStepView,
  RecommendationView,
  StepResult,
} from "./api.js";

export interface UiSessionState {
  sessionId: string | null;
  questionDraft: string;
  interpretations: InterpretationView[];
  explanationBanner: string | null;
  resultView: StepResult | null;
  recommendations: RecommendationView[];
  recommendationMode: "cold_start" | "warm_start" | null;
  novelty: number;
  k: number;
  breadcrumb: PipelineStepView[];
  activeStep: string | null;
  interactionCount: number | null;
  errorBanner: string | null;
  busy: boolean;
}

export function initialState(): UiSessionState {
  return {
    sessionId: null,
    questionDraft: "",
    interpretations: [],
    explanationBanner: null,
    resultView: null,
    recommendations: [],
    recommendationMode: null,
    novelty: 0.2,
    k: 5,
    breadcrumb: [],
    activeStep: null,
    interactionCount: null,
    errorBanner: null,
    busy: false,
  };
}

type Listener = (state: UiSessionState) => void;

export class SessionController {
  readonly state: UiSessionState = initialState();
  private listeners: Listener[] = [];

  constructor(private readonly api: GatewayClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  private fail(error: unknown): void {
    if (error instanceof ApiError) {
      this.state.errorBanner = `${error.code}: ${error.message}`;
    } else {
      this.state.errorBanner = String(error);
    }
  }

  private requireSession(): string {
    if (this.state.sessionId === null) {
      throw new ApiError("NoSession", "start a session first", 0);
    }
    return this.state.sessionId;
  }

  /** Pull breadcrumb and interaction count from the server after a mutation. */
  private async refreshDerived(): Promise<void> {
    const sessionId = this.requireSession();
    const pipeline = await this.api.pipeline(sessionId);
    this.state.breadcrumb = pipeline.steps;
    this.state.activeStep = pipeline.current_step;
    const metrics = await this.api.metrics(sessionId);
    this.state.interactionCount =
      metrics.controllability === null ? 0 : Math.round(1 / metrics.controllability);
  }

  private async mutate(action: () => Promise<void>): Promise<void> {
    this.state.busy = true;
    this.notify();
    try {
      await action();
      this.state.errorBanner = null;
    } catch (error) {
      this.fail(error);
    } finally {
      this.state.busy = false;
      this.notify();
    }
  }

  async start(dataset = "fixture"): Promise<void> {
    await this.mutate(async () => {
      const created = await this.api.createSession(dataset);
      this.state.sessionId = created.session_id;
    });
  }

  /** Submit the question draft; a re-submission replaces the card list. */
  async submitQuestion(question: string): Promise<void> {
    this.state.questionDraft = question;
    await this.mutate(async () => {
      const response = await this.api.query(this.requireSession(), question);
      this.state.interpretations = response.interpretations;
    });
  }

  async chooseInterpretation(index: number): Promise<void> {
    await this.mutate(async () => {
      const chosen = this.state.interpretations[index];
      const response = await this.api.choose(this.requireSession(), index);
      this.state.resultView = response.result;
      this.state.explanationBanner = chosen ? chosen.nl_explanation : null;
      await this.refreshDerived();
    });
  }

  async applyOperator(op: string, params: Record<string, unknown>): Promise<void> {
    await this.mutate(async () => {
      const response = await this.api.applyStep(this.requireSession(), op, params);
      this.state.resultView = response.result;
      await this.refreshDerived();
    });
  }

  async loadRecommendations(): Promise<void> {
    await this.mutate(async () => {
      const response = await this.api.recommendations(
        this.requireSession(),
        this.state.k,
        this.state.novelty,
      );
      this.state.recommendations = response.recommendations;
      this.state.recommendationMode = response.mode;
    });
  }

  /** The novelty slider re-queries the recommendation panel. */
  async setNovelty(novelty: number): Promise<void> {
    this.state.novelty = novelty;
    await this.loadRecommendations();
  }

  async acceptRecommendation(index: number): Promise<void> {
    await this.mutate(async () => {
      const response = await this.api.acceptRecommendation(this.requireSession(), index);
      this.state.resultView = response.result;
      await this.refreshDerived();
    });
  }

  async rejectRecommendation(index: number): Promise<void> {
    await this.mutate(async () => {
      await this.api.rejectRecommendation(this.requireSession(), index);
    });
  }

  async backtrack(stepId: string): Promise<void> {
    await this.mutate(async () => {
      const response = await this.api.backtrack(this.requireSession(), stepId);
      this.state.resultView = response.result;
      await this.refreshDerived();
    });
  }
}
