// DOM construction and state -> DOM updates. No state lives in the DOM
// except transient form input; values render exactly as the server sent them.

import type { DashboardState } from "./state.js";
import type { Alarm, Reading } from "./types.js";

export interface Handlers {
  onAck: (alarmId: string) => void;
  onSaveThreshold: (channel: number, row: HTMLElement) => void;
  onInjectFault: (form: HTMLElement) => void;
  onSelectSeries: (nodeId: number, channel: number) => void;
}

export function renderShell(root: HTMLElement): void {
  root.innerHTML = `
    <header class="topbar">
      <h1>hothouse console</h1>
      <span id="conn" class="conn" data-state="connecting">connecting</span>
      <span class="spacer"></span>
      <label class="who-label">operator
        <input id="who" type="text" value="operator" size="10">
      </label>
    </header>
    <div id="offline" class="offline hidden">api unreachable, retrying</div>
    <div id="banner" class="banner hidden" role="alert"></div>
    <main>
      <section id="tiles" class="tiles"></section>
      <section class="panel">
        <h2>alarms</h2>
        <ul id="alarm-list" class="alarm-list"></ul>
      </section>
      <section class="panel">
        <h2>history <span id="chart-title" class="dim"></span></h2>
        <canvas id="chart" width="640" height="180"></canvas>
      </section>
      <section class="panel">
        <h2>thresholds</h2>
        <div id="threshold-rows"></div>
      </section>
      <section class="panel">
        <h2>inject fault</h2>
        <form id="fault-form">
          <select name="channel" id="fault-channel"></select>
          <select name="kind">
            <option>step</option><option>ramp</option><option>spike</option>
          </select>
          <input name="start_t" placeholder="start (blank = now)" size="14">
          <input name="duration_s" placeholder="duration s" size="9" value="60">
          <input name="magnitude" placeholder="magnitude" size="9">
          <button type="submit">inject</button>
          <span class="form-error" data-error></span>
        </form>
      </section>
    </main>`;
}

export function wireHandlers(root: HTMLElement, handlers: Handlers): void {
  const alarmList = root.querySelector("#alarm-list") as HTMLElement;
  alarmList.addEventListener("click", (ev) => {
    const btn = (ev.target as HTMLElement).closest("button[data-ack]");
    if (btn) handlers.onAck(btn.getAttribute("data-ack") as string);
  });

  const tiles = root.querySelector("#tiles") as HTMLElement;
  tiles.addEventListener("click", (ev) => {
    const tile = (ev.target as HTMLElement).closest(".tile");
    if (!tile) return;
    handlers.onSelectSeries(
      Number(tile.getAttribute("data-node")),
      Number(tile.getAttribute("data-channel")),
    );
  });

  const thresholds = root.querySelector("#threshold-rows") as HTMLElement;
  thresholds.addEventListener("click", (ev) => {
    const btn = (ev.target as HTMLElement).closest("button[data-save]");
    if (!btn) return;
    const row = btn.closest(".threshold-row") as HTMLElement;
    handlers.onSaveThreshold(Number(btn.getAttribute("data-save")), row);
  });

  const faultForm = root.querySelector("#fault-form") as HTMLElement;
  faultForm.addEventListener("submit", (ev) => {
    ev.preventDefault();
    handlers.onInjectFault(faultForm);
  });
}

function fmtValue(v: number): string {
  const s = String(v);
  return s.length > 8 ? v.toFixed(3) : s;
}

function fmtAge(age: number): string {
  if (age < 120) return `${Math.round(age)}s ago`;
  return `${Math.round(age / 60)}m ago`;
}

function tileHtml(state: DashboardState, r: Reading): string {
  const stale = state.isStale(r);
  const node = state.meta?.nodes.find((n) => n.id === r.node_id);
  return `<div class="tile${stale ? " stale" : ""}" data-node="${r.node_id}" data-channel="${r.channel}" data-value="${String(r.value)}">
    <div class="tile-head">node ${r.node_id}${node && node.location ? " · " + node.location : ""}</div>
    <div class="tile-name">${state.channelName(r.channel)}</div>
    <div class="tile-value" title="${String(r.value)}">${fmtValue(r.value)}<span class="unit">${state.unitOf(r.channel)}</span></div>
    <div class="tile-age">${fmtAge(state.ageOf(r))}${stale ? " · STALE" : ""} · batt ${r.battery_pct}%</div>
  </div>`;
}

function alarmLabel(state: DashboardState, a: Alarm): string {
  const ch = a.channel === null ? "" : ` ${state.channelName(a.channel)}`;
  return `${a.kind} node ${a.node_id}${ch}`;
}

function alarmHtml(state: DashboardState, a: Alarm): string {
  const ack =
    a.state === "active"
      ? `<button data-ack="${a.alarm_id}">ack</button>`
      : "";
  const who = a.ack_by ? ` by ${escapeHtml(a.ack_by)}` : "";
  return `<li class="alarm chip-${a.state}" data-alarm="${a.alarm_id}" data-state="${a.state}">
    <span class="chip">${a.state}${who}</span>
    <span class="alarm-label">${alarmLabel(state, a)}</span>
    <span class="dim">raised t=${a.raised_t}${a.peak_value !== null ? ", peak " + fmtValue(a.peak_value) : ""}</span>
    ${ack}
  </li>`;
}

function escapeHtml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function render(root: HTMLElement, state: DashboardState): void {
  const conn = root.querySelector("#conn") as HTMLElement;
  conn.dataset.state = state.conn;
  conn.textContent = state.conn;

  const offline = root.querySelector("#offline") as HTMLElement;
  offline.classList.toggle("hidden", state.conn !== "reconnecting");

  const banner = root.querySelector("#banner") as HTMLElement;
  const active = state.activeAlarms();
  if (active.length === 0) {
    banner.classList.add("hidden");
    banner.textContent = "";
  } else {
    banner.classList.remove("hidden");
    const newest = active[0] as Alarm;
    banner.textContent =
      active.length === 1
        ? `ALARM: ${alarmLabel(state, newest)}`
        : `${active.length} ACTIVE ALARMS, newest: ${alarmLabel(state, newest)}`;
  }

  const tiles = root.querySelector("#tiles") as HTMLElement;
  tiles.innerHTML = state.sortedSeries().map((r) => tileHtml(state, r)).join("");

  const list = root.querySelector("#alarm-list") as HTMLElement;
  const shown = state.recentAlarms();
  list.innerHTML = shown.length
    ? shown.map((a) => alarmHtml(state, a)).join("")
    : `<li class="dim">no alarms</li>`;

  renderThresholdRows(root, state);
  renderFaultChannels(root, state);
}

// threshold inputs hold operator edits, so rows are created once per channel
// and only the echoed server values refresh their placeholders
function renderThresholdRows(root: HTMLElement, state: DashboardState): void {
  const box = root.querySelector("#threshold-rows") as HTMLElement;
  for (const [channel, t] of state.thresholds) {
    let row = box.querySelector(`[data-threshold-row="${channel}"]`) as HTMLElement | null;
    if (!row) {
      row = document.createElement("div");
      row.className = "threshold-row";
      row.setAttribute("data-threshold-row", String(channel));
      row.innerHTML = `
        <span class="threshold-name"></span>
        <input name="min_ok" size="6"> .. <input name="max_ok" size="6">
        rate <input name="rate_limit" size="5">
        hyst <input name="hysteresis" size="4">
        clears <input name="clear_count" size="3">
        <button data-save="${channel}">save</button>
        <span class="form-error" data-error></span>`;
      box.appendChild(row);
      for (const field of ["min_ok", "max_ok", "rate_limit", "hysteresis", "clear_count"] as const) {
        const input = row.querySelector(`input[name="${field}"]`) as HTMLInputElement;
        input.value = String(t[field]);
      }
    }
    (row.querySelector(".threshold-name") as HTMLElement).textContent =
      state.channelName(channel);
    row.setAttribute("data-current", JSON.stringify(t));
  }
}

function renderFaultChannels(root: HTMLElement, state: DashboardState): void {
  const select = root.querySelector("#fault-channel") as HTMLSelectElement;
  const channels = state.meta?.channels ?? [];
  if (select.options.length === channels.length) return;
  select.innerHTML = channels
    .map((c) => `<option value="${c.name}">${c.name}</option>`)
    .join("");
}

export function showFormError(scope: HTMLElement, message: string): void {
  const slot = scope.querySelector("[data-error]") as HTMLElement | null;
  if (slot) slot.textContent = message;
}

export function clearFormError(scope: HTMLElement): void {
  showFormError(scope, "");
}

export function readInputs(scope: HTMLElement): Record<string, string> {
  const out: Record<string, string> = {};
  scope.querySelectorAll("input[name], select[name]").forEach((el) => {
    out[(el as HTMLInputElement).name] = (el as HTMLInputElement).value;
  });
  return out;
}

export function operatorName(root: HTMLElement): string {
  const input = root.querySelector("#who") as HTMLInputElement | null;
  const name = input?.value.trim();
  return name || "operator";
}
