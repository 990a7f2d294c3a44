// Boot: shell, initial fetches, stream subscription, form wiring.

import { ApiClient, ApiError } from "./api.js";
import { drawBuckets } from "./chart.js";
import { validateFaultForm, validateThresholdForm } from "./forms.js";
import {
  clearFormError, operatorName, readInputs, render, renderShell,
  showFormError, wireHandlers,
} from "./render.js";
import { DashboardState } from "./state.js";
import { LiveStream } from "./stream.js";
import type { EventSourceFactory } from "./stream.js";

export interface App {
  state: DashboardState;
  api: ApiClient;
  stream: LiveStream;
  stop: () => void;
}

export async function startApp(
  root: HTMLElement,
  base = "",
  esFactory?: EventSourceFactory,
): Promise<App> {
  const api = new ApiClient(base);
  const state = new DashboardState();
  let selected: { nodeId: number; channel: number } | null = null;

  renderShell(root);
  state.onChange(() => render(root, state));

  async function reconcile(): Promise<void> {
    const [current, alarms] = await Promise.all([api.getCurrent(), api.getAlarms(true)]);
    state.reconcile(current.now, current.readings, alarms.alarms);
  }

  async function refreshChart(): Promise<void> {
    if (!selected) return;
    const canvas = root.querySelector("#chart") as HTMLCanvasElement;
    const title = root.querySelector("#chart-title") as HTMLElement;
    const to = state.serverNow + 1;
    const from = Math.max(0, to - 3600);
    const bucket = Math.max(60, 2 * state.intervalOf(selected.nodeId));
    try {
      const res = await api.getHistory(selected.nodeId, selected.channel, from, to, bucket);
      title.textContent = `node ${selected.nodeId} ${state.channelName(selected.channel)}`;
      drawBuckets(canvas, res.buckets ?? []);
    } catch {
      // chart is best-effort; the next refresh retries
    }
  }

  wireHandlers(root, {
    onAck: (alarmId) => {
      void api
        .postAck(alarmId, operatorName(root))
        .then((res) => state.applyAlarm(res.alarm))
        .catch(async (err) => {
          const banner = root.querySelector("#banner") as HTMLElement;
          banner.classList.remove("hidden");
          banner.textContent = err instanceof ApiError ? err.reason : String(err);
          // a 409 means the list is out of date; refetch the truth
          const alarms = await api.getAlarms(true);
          for (const a of alarms.alarms) state.applyAlarm(a);
        });
    },
    onSaveThreshold: (channel, row) => {
      clearFormError(row);
      const checked = validateThresholdForm(readInputs(row) as never);
      if (!checked.ok) {
        showFormError(row, checked.error);
        return;
      }
      void api
        .putThreshold(channel, checked.value)
        .then((res) => state.applyThresholds([
          ...[...state.thresholds.values()].filter((t) => t.channel !== channel),
          res.threshold,
        ]))
        .catch((err) => {
          showFormError(row, err instanceof ApiError ? err.reason : String(err));
        });
    },
    onInjectFault: (form) => {
      clearFormError(form);
      const checked = validateFaultForm(readInputs(form) as never);
      if (!checked.ok) {
        showFormError(form, checked.error);
        return;
      }
      void api.postFault(checked.value).catch((err) => {
        showFormError(form, err instanceof ApiError ? err.reason : String(err));
      });
    },
    onSelectSeries: (nodeId, channel) => {
      selected = { nodeId, channel };
      void refreshChart();
    },
  });

  // boot fetches; an unreachable api leaves the offline banner up and retries
  let booted = false;
  async function boot(): Promise<void> {
    const meta = await api.getMeta();
    const thresholds = await api.getThresholds();
    state.applyMeta(meta);
    state.applyThresholds(thresholds.thresholds);
    await reconcile();
    booted = true;
  }
  let bootDelay = 1000;
  while (!booted) {
    try {
      await boot();
    } catch {
      state.setConn("reconnecting");
      render(root, state);
      await new Promise((r) => setTimeout(r, bootDelay));
      bootDelay = Math.min(bootDelay * 2, 15000);
    }
  }

  const stream = new LiveStream(
    api.streamUrl(),
    {
      onEvent: (env) => state.applyEvent(env),
      onState: (s) => {
        state.setConn(s);
        if (s === "live") {
          // reconciliation rule: after every (re)connect the view must match
          // a fresh snapshot exactly
          void reconcile().catch(() => state.setConn("reconnecting"));
        }
      },
    },
    esFactory,
  );
  stream.connect();

  const ticker = setInterval(() => {
    render(root, state); // freshness ages move even when no events arrive
    void refreshChart();
  }, 1000);

  return {
    state,
    api,
    stream,
    stop: () => {
      clearInterval(ticker);
      stream.close();
    },
  };
}
