/** Payload shapes of the camscope HTTP API (see docs/api.md in the repo). */

export type AggMethod = "mean" | "median" | "kde_mode";
export type VarMethod = "variance" | "stddev" | "entropy" | "gini";
export type AnnotationStatus = "interesting" | "irrelevant";

export interface ClassInfo {
  class_index: number;
  name: string;
  n_samples: number;
}

export interface AggregatedCam {
  class_index: number;
  n_samples: number;
  agg_method: AggMethod;
  var_method: VarMethod;
  impact: number[];
  variability: number[];
}

export interface HistogramView {
  feature_index: number;
  bin_edges: number[];
  counts: number[];
}

export interface FilterStep {
  feature_index: number;
  lo: number;
  hi: number;
}

export interface SessionState {
  session_id: string;
  class_index: number;
  filters: FilterStep[];
  active_ids: string[];
  annotations: Record<string, AnnotationStatus>;
}

export interface LocalCam {
  sample_id: string;
  class_index: number;
  raw: number[];
  normalized: number[];
  zero: boolean;
}
