/**
 * Interaction controller: owns the drill-down state and talks to the API.
 *
 * The server session is the authoritative state; this controller only
 * mirrors it, so replaying a session id after a reload reproduces the view.
 * Stale async responses are discarded via a sequence number, and at most
 * one mutation request is in flight at any time.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  AggMethod,
  AggregatedCam,
  AnnotationStatus,
  ClassInfo,
  FilterStep,
  HistogramView,
  VarMethod,
} from "./types.js";

export interface ViewDelegate {
  renderClasses(classes: ClassInfo[], selected: number | null): void;
  renderGrid(cam: AggregatedCam, annotations: Record<number, AnnotationStatus>): void;
  renderHistogram(view: HistogramView | null, featureIndex: number | null): void;
  renderBreadcrumbs(filters: FilterStep[]): void;
  showError(message: string, retryable: boolean): void;
  clearError(): void;
}

export class ExplorerController {
  aggMethod: AggMethod = "mean";
  varMethod: VarMethod = "entropy";
  classes: ClassInfo[] = [];
  classIndex: number | null = null;
  sessionId: string | null = null;
  cam: AggregatedCam | null = null;
  filters: FilterStep[] = [];
  annotations: Record<number, AnnotationStatus> = {};
  openFeature: number | null = null;
  histogramBins = 32;

  private seq = 0;
  private mutationInFlight = false;

  constructor(
    private readonly api: ApiClient,
    private readonly view: ViewDelegate,
  ) {}

  /** Load the class list and open the first class. */
  async start(): Promise<void> {
    const token = ++this.seq;
    try {
      const classes = await this.api.classes();
      if (token !== this.seq) return;
      this.classes = classes;
      this.view.renderClasses(classes, null);
      if (classes.length > 0) await this.selectClass(classes[0].class_index);
    } catch (err) {
      this.fail(err, true);
    }
  }

  /** Open a class: fresh session, global map, empty breadcrumb trail. */
  async selectClass(classIndex: number): Promise<void> {
    if (this.mutationInFlight) return;
    this.mutationInFlight = true;
    const token = ++this.seq;
    try {
      const session = await this.api.createSession(classIndex);
      const cam = await this.api.sessionCam(session.session_id, this.aggMethod, this.varMethod);
      if (token !== this.seq) return;
      this.classIndex = classIndex;
      this.sessionId = session.session_id;
      this.filters = session.filters;
      this.annotations = decodeAnnotations(session.annotations);
      this.cam = cam;
      this.openFeature = null;
      this.view.clearError();
      this.view.renderClasses(this.classes, classIndex);
      this.view.renderGrid(cam, this.annotations);
      this.view.renderBreadcrumbs(this.filters);
      this.view.renderHistogram(null, null);
    } catch (err) {
      this.fail(err, true);
    } finally {
      this.mutationInFlight = false;
    }
  }

  /** Re-attach to an existing server session (page reload with ?session=). */
  async resumeSession(sessionId: string): Promise<void> {
    const token = ++this.seq;
    try {
      const session = await this.api.session(sessionId);
      const cam = await this.api.sessionCam(sessionId, this.aggMethod, this.varMethod);
      if (token !== this.seq) return;
      this.classIndex = session.class_index;
      this.sessionId = sessionId;
      this.filters = session.filters;
      this.annotations = decodeAnnotations(session.annotations);
      this.cam = cam;
      this.view.renderClasses(this.classes, session.class_index);
      this.view.renderGrid(cam, this.annotations);
      this.view.renderBreadcrumbs(this.filters);
    } catch (err) {
      this.fail(err, true);
    }
  }

  /** Cell click: fetch that feature's impact histogram over the active subset. */
  async clickCell(featureIndex: number): Promise<void> {
    if (this.classIndex === null || this.sessionId === null) return;
    const token = ++this.seq;
    try {
      const histogram = await this.api.histogram(this.classIndex, featureIndex, {
        sessionId: this.sessionId,
        bins: this.histogramBins,
      });
      if (token !== this.seq) return;
      this.openFeature = featureIndex;
      this.view.renderHistogram(histogram, featureIndex);
    } catch (err) {
      this.fail(err, true);
    }
  }

  /**
   * Confirmed brush range: one filter POST, then re-render from the returned
   * sub-global map. An empty selection is rejected server-side; the prior
   * view is kept and the rejection is surfaced as a retryable notice.
   */
  async applyBrush(lo: number, hi: number): Promise<void> {
    if (this.sessionId === null || this.openFeature === null || this.mutationInFlight) return;
    this.mutationInFlight = true;
    const token = ++this.seq;
    const feature = this.openFeature;
    try {
      const session = await this.api.pushFilter(
        this.sessionId,
        feature,
        Math.max(-1, Math.min(lo, hi)),
        Math.min(1, Math.max(lo, hi)),
      );
      const cam = await this.api.sessionCam(this.sessionId, this.aggMethod, this.varMethod);
      // the iterative loop re-histograms the now-filtered subset
      const histogram = await this.api.histogram(this.classIndex!, feature, {
        sessionId: this.sessionId,
        bins: this.histogramBins,
      });
      if (token !== this.seq) return;
      this.filters = session.filters;
      this.cam = cam;
      this.view.clearError();
      this.view.renderGrid(cam, this.annotations);
      this.view.renderBreadcrumbs(this.filters);
      this.view.renderHistogram(histogram, feature);
    } catch (err) {
      if (err instanceof ApiError && err.code === "empty-selection") {
        this.view.showError("That range selects no samples; the filter was not applied.", true);
      } else {
        this.fail(err, true);
      }
    } finally {
      this.mutationInFlight = false;
    }
  }

  /** Breadcrumb removal: pops the most recent filter (stack semantics). */
  async removeLastBreadcrumb(): Promise<void> {
    if (this.sessionId === null || this.mutationInFlight) return;
    this.mutationInFlight = true;
    const token = ++this.seq;
    try {
      const session = await this.api.popFilter(this.sessionId);
      const cam = await this.api.sessionCam(this.sessionId, this.aggMethod, this.varMethod);
      if (token !== this.seq) return;
      this.filters = session.filters;
      this.cam = cam;
      this.view.renderGrid(cam, this.annotations);
      this.view.renderBreadcrumbs(this.filters);
      if (this.openFeature !== null) await this.clickCell(this.openFeature);
    } catch (err) {
      this.fail(err, true);
    } finally {
      this.mutationInFlight = false;
    }
  }

  /** Method switch: re-fetch with the new query params and re-render. */
  async selectMethods(agg: AggMethod, varMethod: VarMethod): Promise<void> {
    if (this.sessionId === null) return;
    const token = ++this.seq;
    this.aggMethod = agg;
    this.varMethod = varMethod;
    try {
      const cam = await this.api.sessionCam(this.sessionId, agg, varMethod);
      if (token !== this.seq) return;
      this.cam = cam;
      this.view.renderGrid(cam, this.annotations);
    } catch (err) {
      this.fail(err, true);
    }
  }

  /** Toggle an annotation: same status twice clears the marker. */
  async annotateCell(featureIndex: number, status: AnnotationStatus): Promise<void> {
    if (this.sessionId === null || this.mutationInFlight) return;
    this.mutationInFlight = true;
    const next = this.annotations[featureIndex] === status ? null : status;
    try {
      const session = await this.api.annotate(this.sessionId, featureIndex, next);
      this.annotations = decodeAnnotations(session.annotations);
      if (this.cam) this.view.renderGrid(this.cam, this.annotations);
    } catch (err) {
      this.fail(err, true);
    } finally {
      this.mutationInFlight = false;
    }
  }

  private fail(err: unknown, retryable: boolean): void {
    const message = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    this.view.showError(message, retryable);
  }
}

function decodeAnnotations(
  wire: Record<string, AnnotationStatus>,
): Record<number, AnnotationStatus> {
  const out: Record<number, AnnotationStatus> = {};
  for (const [key, status] of Object.entries(wire)) out[Number(key)] = status;
  return out;
}
