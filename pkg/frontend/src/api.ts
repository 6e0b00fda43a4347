import type { CorrectionOutcome, ItemPage, Metrics, Prediction, SessionInfo } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export type ItemFilter = "all" | "misclassified";

/**
 * Thin typed client over the correction service. Every displayed number in
 * the UI originates from one of these calls; with `log` enabled each request
 * is written to the console so a session can be replayed verbatim.
 */
export class ApiClient {
  constructor(private base: string = "", public log: boolean = false) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    if (this.log) {
      console.log(`[api] ${method} ${path}${body ? " " + JSON.stringify(body) : ""}`);
    }
    const res = await fetch(this.base + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await res.text();
    let parsed: unknown = null;
    try {
      parsed = text ? JSON.parse(text) : null;
    } catch {
      parsed = text;
    }
    if (!res.ok) {
      const detail =
        parsed && typeof parsed === "object" && "detail" in (parsed as Record<string, unknown>)
          ? String((parsed as Record<string, unknown>).detail)
          : String(parsed);
      throw new ApiError(res.status, detail);
    }
    return parsed as T;
  }

  session(): Promise<SessionInfo> {
    return this.request<SessionInfo>("GET", "/session");
  }

  createSession(trainPath: string, testPath: string, k = 3): Promise<SessionInfo> {
    return this.request<SessionInfo>("POST", "/session", {
      train_path: trainPath,
      test_path: testPath,
      k,
    });
  }

  items(page: number, pageSize: number, only: ItemFilter = "all"): Promise<ItemPage> {
    const params = new URLSearchParams({
      page: String(page),
      page_size: String(pageSize),
      only,
    });
    return this.request<ItemPage>("GET", `/items?${params}`);
  }

  predictItem(itemId: string, k = 5): Promise<Prediction> {
    return this.request<Prediction>("POST", "/predict", { item_id: itemId, k });
  }

  correct(itemId: string, label: string): Promise<CorrectionOutcome> {
    return this.request<CorrectionOutcome>("POST", "/corrections", {
      item_id: itemId,
      label,
    });
  }

  metrics(): Promise<Metrics> {
    return this.request<Metrics>("GET", "/metrics");
  }

  reset(): Promise<{ status: string; store_size: number }> {
    return this.request("POST", "/store/reset");
  }

  exportStore(): Promise<Record<string, unknown>> {
    return this.request("GET", "/store/export");
  }

  importStore(doc: Record<string, unknown>): Promise<{ status: string; store_size: number }> {
    return this.request("POST", "/store/import", doc);
  }
}
