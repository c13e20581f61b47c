/**
 * DOM layer: mounts the glyph grid, tooltip, histogram panel with a range
 * brush, breadcrumb trail, and method selectors, forwarding every user
 * action to the controller. Holds no authoritative state of its own.
 */

import { DEFAULT_GRID, GridSpec, pixelToValue, renderGridSvg, renderHistogramSvg } from "./glyph.js";
import type { ExplorerController } from "./state.js";
import type {
  AggMethod,
  AggregatedCam,
  AnnotationStatus,
  ClassInfo,
  FilterStep,
  HistogramView,
  VarMethod,
} from "./types.js";

const AGG_METHODS: AggMethod[] = ["mean", "median", "kde_mode"];
const VAR_METHODS: VarMethod[] = ["variance", "stddev", "entropy", "gini"];

export class DomView {
  private controller: ExplorerController | null = null;
  private readonly classBar: HTMLElement;
  private readonly methodBar: HTMLElement;
  private readonly errorBanner: HTMLElement;
  private readonly gridHost: HTMLElement;
  private readonly tooltip: HTMLElement;
  private readonly breadcrumbBar: HTMLElement;
  private readonly histogramPanel: HTMLElement;

  private cam: AggregatedCam | null = null;
  private brush: { startPx: number; endPx: number } | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly grid: GridSpec = DEFAULT_GRID,
  ) {
    root.innerHTML = `
      <header>
        <h1>camscope</h1>
        <nav class="classes"></nav>
        <div class="methods"></div>
      </header>
      <div class="error-banner hidden"></div>
      <nav class="breadcrumbs"></nav>
      <main>
        <div class="grid-host"></div>
        <aside class="histogram-panel hidden"></aside>
      </main>
      <div class="tooltip hidden"></div>`;
    this.classBar = this.query(".classes");
    this.methodBar = this.query(".methods");
    this.errorBanner = this.query(".error-banner");
    this.gridHost = this.query(".grid-host");
    this.tooltip = this.query(".tooltip");
    this.breadcrumbBar = this.query(".breadcrumbs");
    this.histogramPanel = this.query(".histogram-panel");
    this.buildMethodSelectors();
    this.wireGridEvents();
  }

  bind(controller: ExplorerController): void {
    this.controller = controller;
  }

  private query(selector: string): HTMLElement {
    return this.root.querySelector(selector) as HTMLElement;
  }

  // -- ViewDelegate -------------------------------------------------------

  renderClasses(classes: ClassInfo[], selected: number | null): void {
    this.classBar.innerHTML = "";
    for (const info of classes) {
      const button = document.createElement("button");
      button.className = "class-tab" + (info.class_index === selected ? " active" : "");
      button.dataset.classIndex = String(info.class_index);
      button.textContent = `${info.name} (${info.n_samples})`;
      button.addEventListener("click", () => this.controller?.selectClass(info.class_index));
      this.classBar.appendChild(button);
    }
  }

  renderGrid(cam: AggregatedCam, annotations: Record<number, AnnotationStatus>): void {
    this.cam = cam;
    this.gridHost.innerHTML = renderGridSvg(cam.impact, cam.variability, this.grid);
    const svg = this.gridHost.querySelector("svg")!;
    for (const [feature, status] of Object.entries(annotations)) {
      const rect = svg.querySelector(`rect[data-feature="${feature}"]`);
      if (rect) rect.classList.add(status === "irrelevant" ? "dimmed" : "marked");
    }
  }

  renderHistogram(view: HistogramView | null, featureIndex: number | null): void {
    this.brush = null;
    if (view === null || featureIndex === null) {
      this.histogramPanel.classList.add("hidden");
      this.histogramPanel.innerHTML = "";
      return;
    }
    const layout = renderHistogramSvg(view.bin_edges, view.counts);
    this.histogramPanel.classList.remove("hidden");
    this.histogramPanel.innerHTML = `
      <h2>feature ${featureIndex}</h2>
      <p class="hist-meta">${view.counts.reduce((a, b) => a + b, 0)} samples —
        drag to select a range</p>
      <div class="hist-plot">${layout.svg}<div class="brush-overlay"></div></div>
      <div class="hist-actions">
        <button class="confirm-brush" disabled>filter to selection</button>
        <button class="annotate-interesting">mark interesting</button>
        <button class="annotate-irrelevant">mark irrelevant</button>
        <button class="close-histogram">close</button>
      </div>`;
    this.wireHistogramEvents(layout, featureIndex);
  }

  renderBreadcrumbs(filters: FilterStep[]): void {
    this.breadcrumbBar.innerHTML = "";
    filters.forEach((step, i) => {
      const chip = document.createElement("span");
      chip.className = "crumb";
      chip.textContent = `f${step.feature_index} ∈ [${step.lo.toFixed(3)}, ${step.hi.toFixed(3)}]`;
      if (i === filters.length - 1) {
        const remove = document.createElement("button");
        remove.className = "remove-crumb";
        remove.textContent = "×";
        remove.title = "remove this filter";
        remove.addEventListener("click", () => this.controller?.removeLastBreadcrumb());
        chip.appendChild(remove);
      }
      this.breadcrumbBar.appendChild(chip);
    });
  }

  showError(message: string, retryable: boolean): void {
    this.errorBanner.textContent = retryable ? `${message} (retry the action)` : message;
    this.errorBanner.classList.remove("hidden");
  }

  clearError(): void {
    this.errorBanner.classList.add("hidden");
    this.errorBanner.textContent = "";
  }

  // -- wiring -------------------------------------------------------------

  private buildMethodSelectors(): void {
    const makeSelect = (name: string, options: string[]) => {
      const select = document.createElement("select");
      select.className = `select-${name}`;
      for (const option of options) {
        const el = document.createElement("option");
        el.value = option;
        el.textContent = `${name}: ${option}`;
        select.appendChild(el);
      }
      return select;
    };
    const agg = makeSelect("agg", AGG_METHODS);
    const varSelect = makeSelect("var", VAR_METHODS);
    varSelect.value = "entropy";
    const onChange = () =>
      this.controller?.selectMethods(
        agg.value as AggMethod,
        varSelect.value as VarMethod,
      );
    agg.addEventListener("change", onChange);
    varSelect.addEventListener("change", onChange);
    this.methodBar.append(agg, varSelect);
  }

  private featureFromEvent(event: Event): number | null {
    const target = event.target as Element | null;
    const value = target?.getAttribute?.("data-feature");
    return value === null || value === undefined ? null : Number(value);
  }

  private wireGridEvents(): void {
    this.gridHost.addEventListener("click", (event) => {
      const feature = this.featureFromEvent(event);
      if (feature !== null) this.controller?.clickCell(feature);
    });
    this.gridHost.addEventListener("mousemove", (event) => {
      const feature = this.featureFromEvent(event);
      if (feature === null || this.cam === null) {
        this.tooltip.classList.add("hidden");
        return;
      }
      this.tooltip.textContent =
        `feature ${feature} · impact ${this.cam.impact[feature].toFixed(4)}` +
        ` · variability ${this.cam.variability[feature].toFixed(4)}`;
      this.tooltip.style.left = `${(event as MouseEvent).pageX + 12}px`;
      this.tooltip.style.top = `${(event as MouseEvent).pageY + 12}px`;
      this.tooltip.classList.remove("hidden");
    });
    this.gridHost.addEventListener("mouseleave", () => this.tooltip.classList.add("hidden"));
  }

  private wireHistogramEvents(layout: ReturnType<typeof renderHistogramSvg>, feature: number): void {
    const plot = this.histogramPanel.querySelector(".hist-plot") as HTMLElement;
    const overlay = this.histogramPanel.querySelector(".brush-overlay") as HTMLElement;
    const confirm = this.histogramPanel.querySelector(".confirm-brush") as HTMLButtonElement;

    const localX = (event: PointerEvent) =>
      event.clientX - plot.getBoundingClientRect().left;
    let dragging = false;
    plot.addEventListener("pointerdown", (event) => {
      dragging = true;
      this.brush = { startPx: localX(event), endPx: localX(event) };
      plot.setPointerCapture?.(event.pointerId);
    });
    plot.addEventListener("pointermove", (event) => {
      if (!dragging || !this.brush) return;
      this.brush.endPx = localX(event);
      const left = Math.min(this.brush.startPx, this.brush.endPx);
      const width = Math.abs(this.brush.endPx - this.brush.startPx);
      overlay.style.left = `${left}px`;
      overlay.style.width = `${width}px`;
      overlay.classList.add("visible");
      confirm.disabled = width < 2;
    });
    plot.addEventListener("pointerup", () => {
      dragging = false;
    });
    confirm.addEventListener("click", () => {
      if (!this.brush) return;
      const lo = pixelToValue(Math.min(this.brush.startPx, this.brush.endPx), layout);
      const hi = pixelToValue(Math.max(this.brush.startPx, this.brush.endPx), layout);
      this.controller?.applyBrush(lo, hi);
    });
    (this.histogramPanel.querySelector(".close-histogram") as HTMLElement).addEventListener(
      "click",
      () => this.renderHistogram(null, null),
    );
    (this.histogramPanel.querySelector(".annotate-interesting") as HTMLElement).addEventListener(
      "click",
      () => this.controller?.annotateCell(feature, "interesting"),
    );
    (this.histogramPanel.querySelector(".annotate-irrelevant") as HTMLElement).addEventListener(
      "click",
      () => this.controller?.annotateCell(feature, "irrelevant"),
    );
  }
}
