// Wire shapes, field-for-field as the API returns them.

export interface Reading {
  node_id: number;
  channel: number;
  value: number;
  sample_t: number;
  arrival_t: number;
  seq: number;
  battery_pct: number;
  unit?: string;
}

export interface Alarm {
  alarm_id: string;
  kind: "low" | "high" | "rapid_change" | "node_silent";
  node_id: number;
  channel: number | null;
  raised_t: number;
  state: "active" | "acknowledged" | "cleared";
  peak_value: number | null;
  ack_by: string | null;
  ack_t: number | null;
  cleared_t: number | null;
}

export interface Threshold {
  channel: number;
  min_ok: number;
  max_ok: number;
  rate_limit: number;
  hysteresis: number;
  clear_count: number;
}

export interface ChannelInfo {
  code: number;
  name: string;
  unit: string;
  lo: number;
  hi: number;
}

export interface NodeInfo {
  id: number;
  location: string;
  interval_s: number;
  battery_pct: number;
  last_heard: number;
}

export interface Meta {
  now: number;
  seed: number;
  duration_s: number;
  speedup: number;
  nodes: NodeInfo[];
  channels: ChannelInfo[];
}

export interface HistoryBucket {
  start_t: number;
  end_t: number;
  count: number;
  min: number | null;
  max: number | null;
  avg: number | null;
}

export interface FaultRequest {
  channel: number | string;
  kind: "step" | "ramp" | "spike";
  start_t?: number;
  duration_s: number;
  magnitude: number;
}

export interface StreamEnvelope {
  event_type: "reading" | "alarm_raised" | "alarm_acked" | "alarm_cleared";
  event_seq: number;
  payload: Reading | Alarm;
}
