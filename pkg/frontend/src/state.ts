// Client-side view state. Values are kept exactly as the server sent them;
// the only derived quantity is freshness.

import type { Alarm, Meta, Reading, StreamEnvelope, Threshold } from "./types.js";

export type ConnState = "connecting" | "live" | "reconnecting";

export const STALE_INTERVALS = 3;

export function seriesKey(nodeId: number, channel: number): string {
  return `${nodeId}:${channel}`;
}

export class DashboardState {
  meta: Meta | null = null;
  conn: ConnState = "connecting";
  series = new Map<string, Reading>();
  alarms = new Map<string, Alarm>();
  thresholds = new Map<number, Threshold>();
  serverNow = 0; // latest virtual timestamp seen from any source

  private listeners: Array<() => void> = [];

  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  setConn(conn: ConnState): void {
    if (this.conn === conn) return;
    this.conn = conn;
    this.emit();
  }

  applyMeta(meta: Meta): void {
    this.meta = meta;
    this.bumpNow(meta.now);
    this.emit();
  }

  // wholesale replacement: used at boot and after every reconnect, so the
  // view matches a fresh get_current exactly
  reconcile(now: number, readings: Reading[], alarms: Alarm[]): void {
    this.series.clear();
    for (const r of readings) this.series.set(seriesKey(r.node_id, r.channel), r);
    this.alarms.clear();
    for (const a of alarms) this.alarms.set(a.alarm_id, a);
    this.bumpNow(now);
    this.emit();
  }

  applyThresholds(list: Threshold[]): void {
    this.thresholds.clear();
    for (const t of list) this.thresholds.set(t.channel, t);
    this.emit();
  }

  applyEvent(env: StreamEnvelope): void {
    if (env.event_type === "reading") {
      const r = env.payload as Reading;
      this.series.set(seriesKey(r.node_id, r.channel), r);
      this.bumpNow(r.arrival_t);
    } else {
      const a = env.payload as Alarm;
      this.alarms.set(a.alarm_id, a);
      const t = a.cleared_t ?? a.ack_t ?? a.raised_t;
      this.bumpNow(t);
    }
    this.emit();
  }

  applyAlarm(a: Alarm): void {
    this.alarms.set(a.alarm_id, a);
    this.emit();
  }

  private bumpNow(t: number | null): void {
    if (t !== null && t > this.serverNow) this.serverNow = t;
  }

  intervalOf(nodeId: number): number {
    const node = this.meta?.nodes.find((n) => n.id === nodeId);
    return node ? node.interval_s : 30;
  }

  ageOf(r: Reading): number {
    return Math.max(0, this.serverNow - r.arrival_t);
  }

  isStale(r: Reading): boolean {
    return this.ageOf(r) > STALE_INTERVALS * this.intervalOf(r.node_id);
  }

  unitOf(channel: number): string {
    const ch = this.meta?.channels.find((c) => c.code === channel);
    return ch ? ch.unit : "";
  }

  channelName(channel: number | null): string {
    if (channel === null) return "";
    const ch = this.meta?.channels.find((c) => c.code === channel);
    return ch ? ch.name : `ch${channel}`;
  }

  sortedSeries(): Reading[] {
    return [...this.series.values()].sort(
      (a, b) => a.node_id - b.node_id || a.channel - b.channel,
    );
  }

  activeAlarms(): Alarm[] {
    return [...this.alarms.values()]
      .filter((a) => a.state === "active")
      .sort((a, b) => b.raised_t - a.raised_t);
  }

  openAlarms(): Alarm[] {
    return [...this.alarms.values()]
      .filter((a) => a.state !== "cleared")
      .sort((a, b) => b.raised_t - a.raised_t);
  }

  recentAlarms(limit = 20): Alarm[] {
    return [...this.alarms.values()]
      .sort((a, b) => b.raised_t - a.raised_t)
      .slice(0, limit);
  }
}
