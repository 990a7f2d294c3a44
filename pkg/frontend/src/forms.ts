// Client-side form validation mirroring the server's config invariants.
// A failed validation never reaches the network.

import type { FaultRequest } from "./types.js";

export type FormResult<T> = { ok: true; value: T } | { ok: false; error: string };

export interface ThresholdFields {
  min_ok: number;
  max_ok: number;
  rate_limit: number;
  hysteresis?: number;
  clear_count?: number;
}

function num(raw: string, name: string): number {
  const v = Number(raw);
  if (raw.trim() === "" || !Number.isFinite(v)) {
    throw new Error(`${name} must be a number`);
  }
  return v;
}

export function validateThresholdForm(raw: {
  min_ok: string;
  max_ok: string;
  rate_limit: string;
  hysteresis?: string;
  clear_count?: string;
}): FormResult<ThresholdFields> {
  try {
    const min_ok = num(raw.min_ok, "min");
    const max_ok = num(raw.max_ok, "max");
    const rate_limit = num(raw.rate_limit, "rate limit");
    if (min_ok >= max_ok) return { ok: false, error: "min must be below max" };
    if (rate_limit <= 0) return { ok: false, error: "rate limit must be > 0" };
    const value: ThresholdFields = { min_ok, max_ok, rate_limit };
    if (raw.hysteresis !== undefined && raw.hysteresis.trim() !== "") {
      const h = num(raw.hysteresis, "hysteresis");
      if (h < 0) return { ok: false, error: "hysteresis must be >= 0" };
      if (2 * h >= max_ok - min_ok) {
        return { ok: false, error: "hysteresis too wide for the band" };
      }
      value.hysteresis = h;
    }
    if (raw.clear_count !== undefined && raw.clear_count.trim() !== "") {
      const c = num(raw.clear_count, "clear count");
      if (!Number.isInteger(c) || c < 1) {
        return { ok: false, error: "clear count must be a whole number >= 1" };
      }
      value.clear_count = c;
    }
    return { ok: true, value };
  } catch (e) {
    return { ok: false, error: (e as Error).message };
  }
}

export function validateFaultForm(raw: {
  channel: string;
  kind: string;
  start_t: string;
  duration_s: string;
  magnitude: string;
}): FormResult<FaultRequest> {
  try {
    if (raw.kind !== "step" && raw.kind !== "ramp" && raw.kind !== "spike") {
      return { ok: false, error: "kind must be step, ramp or spike" };
    }
    const duration_s = num(raw.duration_s, "duration");
    if (duration_s <= 0) return { ok: false, error: "duration must be > 0" };
    const magnitude = num(raw.magnitude, "magnitude");
    const value: FaultRequest = {
      channel: raw.channel,
      kind: raw.kind,
      duration_s,
      magnitude,
    };
    if (raw.start_t.trim() !== "") {
      const s = num(raw.start_t, "start");
      if (s < 0) return { ok: false, error: "start must be >= 0" };
      value.start_t = s;
    }
    return { ok: true, value };
  } catch (e) {
    return { ok: false, error: (e as Error).message };
  }
}
