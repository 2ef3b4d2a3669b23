import type {
  CurationResponse,
  DesignDetail,
  DesignPage,
  Explanation,
  RecommendationList,
  SearchResponse,
  Vocabulary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export class ServiceUnreachableError extends Error {
  constructor(cause: unknown) {
    super("tag service unreachable");
    this.name = "ServiceUnreachableError";
    this.cause = cause;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  url(path: string): string {
    return this.baseUrl + path;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.url(path), init);
    } catch (cause) {
      throw new ServiceUnreachableError(cause);
    }
    if (!response.ok) {
      let detail = `request failed with status ${response.status}`;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the generic status message
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  listDesigns(page = 1, tag?: string): Promise<DesignPage> {
    const params = new URLSearchParams({ page: String(page) });
    if (tag) params.set("tag", tag);
    return this.request(`/designs?${params.toString()}`);
  }

  getDesign(id: string): Promise<DesignDetail> {
    return this.request(`/designs/${encodeURIComponent(id)}`);
  }

  recommendationsFor(id: string): Promise<RecommendationList> {
    return this.request(`/designs/${encodeURIComponent(id)}/recommendations`);
  }

  explanationFor(id: string, tag: string): Promise<Explanation> {
    return this.request(
      `/designs/${encodeURIComponent(id)}/explanations/${encodeURIComponent(tag)}`,
    );
  }

  accept(id: string, tag: string): Promise<CurationResponse> {
    return this.curate(id, tag, "accept");
  }

  reject(id: string, tag: string): Promise<CurationResponse> {
    return this.curate(id, tag, "reject");
  }

  search(tags: string[]): Promise<SearchResponse> {
    // The service splits q on a literal "+", so the joiner must survive URL decoding.
    return this.request(`/search?q=${encodeURIComponent(tags.join("+"))}`);
  }

  vocabulary(): Promise<Vocabulary> {
    return this.request("/vocabulary");
  }

  private curate(id: string, tag: string, action: "accept" | "reject"): Promise<CurationResponse> {
    return this.request(
      `/designs/${encodeURIComponent(id)}/tags/${encodeURIComponent(tag)}/${action}`,
      { method: "POST" },
    );
  }
}
