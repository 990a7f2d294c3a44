// Thin client over the documented endpoints; every mutation goes through here.

import type {
  Alarm, FaultRequest, HistoryBucket, Meta, Reading, Threshold,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public reason: string) {
    super(`${status}: ${reason}`);
  }
}

async function request<T>(
  base: string, method: string, path: string, body?: unknown,
): Promise<T> {
  const init: RequestInit = { method };
  if (body !== undefined) {
    init.headers = { "content-type": "application/json" };
    init.body = JSON.stringify(body);
  }
  let resp: Response;
  try {
    resp = await fetch(base + path, init);
  } catch {
    throw new ApiError(0, "api unreachable");
  }
  const text = await resp.text();
  let parsed: unknown = null;
  try {
    parsed = text ? JSON.parse(text) : null;
  } catch {
    throw new ApiError(resp.status, "malformed response body");
  }
  if (!resp.ok) {
    const reason =
      parsed && typeof parsed === "object" && "error" in parsed
        ? String((parsed as { error: unknown }).error)
        : resp.statusText;
    throw new ApiError(resp.status, reason);
  }
  return parsed as T;
}

export class ApiClient {
  constructor(private base = "") {}

  getCurrent() {
    return request<{ now: number; readings: Reading[] }>(this.base, "GET", "/api/v1/current");
  }

  getHistory(node: number, channel: number, from: number, to: number, bucket?: number) {
    let q = `node=${node}&channel=${channel}&from=${from}&to=${to}`;
    if (bucket !== undefined) q += `&bucket=${bucket}`;
    return request<{ node: number; channel: number; buckets?: HistoryBucket[]; readings?: Reading[] }>(
      this.base, "GET", `/api/v1/history?${q}`,
    );
  }

  getAlarms(all = false) {
    const q = all ? "?state=all" : "";
    return request<{ alarms: Alarm[] }>(this.base, "GET", `/api/v1/alarms${q}`);
  }

  postAck(alarmId: string, who: string) {
    return request<{ alarm: Alarm }>(
      this.base, "POST", `/api/v1/alarms/${alarmId}/ack`, { who },
    );
  }

  getThresholds() {
    return request<{ thresholds: Threshold[] }>(this.base, "GET", "/api/v1/thresholds");
  }

  putThreshold(channel: number | string, fields: Partial<Threshold>) {
    return request<{ threshold: Threshold }>(
      this.base, "PUT", `/api/v1/thresholds/${channel}`, fields,
    );
  }

  postFault(fault: FaultRequest) {
    return request<{ fault: Record<string, unknown> }>(
      this.base, "POST", "/api/v1/sim/fault", fault,
    );
  }

  getMeta() {
    return request<Meta>(this.base, "GET", "/api/v1/meta");
  }

  getReport() {
    return request<{ report: Record<string, unknown> }>(this.base, "GET", "/api/v1/report");
  }

  streamUrl() {
    return `${this.base}/api/v1/stream`;
  }
}
