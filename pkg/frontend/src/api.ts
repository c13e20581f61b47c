/** Thin typed client over the camscope HTTP API. */

import type {
  AggMethod,
  AggregatedCam,
  AnnotationStatus,
  ClassInfo,
  HistogramView,
  LocalCam,
  SessionState,
  VarMethod,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, "network", String(err));
    }
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(
        response.status,
        typeof body.code === "string" ? body.code : "unknown",
        typeof body.message === "string" ? body.message : response.statusText,
      );
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown, method = "POST"): Promise<T> {
    return this.request<T>(path, {
      method,
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  classes(): Promise<ClassInfo[]> {
    return this.request("/api/classes");
  }

  classCam(classIndex: number, agg: AggMethod, varMethod: VarMethod): Promise<AggregatedCam> {
    return this.request(`/api/classes/${classIndex}/cam?agg=${agg}&var=${varMethod}`);
  }

  histogram(
    classIndex: number,
    featureIndex: number,
    options: { sessionId?: string; bins?: number } = {},
  ): Promise<HistogramView> {
    const params = new URLSearchParams();
    if (options.sessionId !== undefined) params.set("session", options.sessionId);
    if (options.bins !== undefined) params.set("bins", String(options.bins));
    const query = params.toString();
    return this.request(
      `/api/classes/${classIndex}/features/${featureIndex}/histogram${query ? "?" + query : ""}`,
    );
  }

  createSession(classIndex: number): Promise<SessionState> {
    return this.post("/api/sessions", { class_index: classIndex });
  }

  session(sessionId: string): Promise<SessionState> {
    return this.request(`/api/sessions/${sessionId}`);
  }

  pushFilter(
    sessionId: string,
    featureIndex: number,
    lo: number,
    hi: number,
  ): Promise<SessionState> {
    return this.post(`/api/sessions/${sessionId}/filters`, {
      feature_index: featureIndex,
      lo,
      hi,
    });
  }

  popFilter(sessionId: string): Promise<SessionState> {
    return this.request(`/api/sessions/${sessionId}/filters/last`, { method: "DELETE" });
  }

  sessionCam(sessionId: string, agg: AggMethod, varMethod: VarMethod): Promise<AggregatedCam> {
    return this.request(`/api/sessions/${sessionId}/cam?agg=${agg}&var=${varMethod}`);
  }

  annotate(
    sessionId: string,
    featureIndex: number,
    status: AnnotationStatus | null,
  ): Promise<SessionState> {
    return this.post(`/api/sessions/${sessionId}/annotations/${featureIndex}`, { status }, "PUT");
  }

  sampleCam(sampleId: string): Promise<LocalCam> {
    return this.request(`/api/samples/${encodeURIComponent(sampleId)}/cam`);
  }
}
