import type { ApiClient } from "./api.js";
import { MetricsHistory } from "./state.js";
import type { Metrics } from "./types.js";

/**
 * Live metrics readout plus a small canvas chart of Acc_E and forgetting over
 * the correction count. Polled once at startup and after every mutation.
 */
export class MetricsPanel {
  readonly history = new MetricsHistory();

  constructor(
    private api: ApiClient,
    private readout: HTMLElement,
    private canvas: HTMLCanvasElement,
    private stale: HTMLElement,
  ) {}

  async refresh(): Promise<Metrics | null> {
    try {
      const m = await this.api.metrics();
      this.history.append({
        corrections: m.corrections,
        accE: m.acc_e_live,
        forgetting: m.forgetting_live,
      });
      this.render(m);
      this.stale.textContent = "";
      return m;
    } catch (err) {
      this.stale.textContent = `metrics unavailable: ${err}`;
      return null;
    }
  }

  async reset(): Promise<void> {
    await this.api.reset();
    this.history.reset();
    const m = await this.api.metrics();
    this.render(m);
  }

  private fmt(v: number | null): string {
    return v === null ? "n/a" : `${v.toFixed(2)}%`;
  }

  private render(m: Metrics): void {
    this.readout.replaceChildren();
    const rows: [string, string][] = [
      ["base accuracy", this.fmt(m.acc_base)],
      ["Acc_E (live)", this.fmt(m.acc_e_live)],
      ["Acc_C (live)", this.fmt(m.acc_c_live)],
      ["forgetting", this.fmt(m.forgetting_live)],
      ["prototypes", String(m.store_stats.total)],
      ["corrections", String(m.corrections)],
    ];
    for (const [k, v] of rows) {
      const div = document.createElement("div");
      div.className = "metric";
      div.innerHTML = `<span>${k}</span><strong>${v}</strong>`;
      this.readout.appendChild(div);
    }
    this.drawChart();
  }

  private drawChart(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    const points = this.history.all();
    if (points.length === 0) return;

    const pad = 22;
    const x = (i: number) =>
      points.length === 1 ? pad : pad + (i / (points.length - 1)) * (width - 2 * pad);
    const y = (v: number) => height - pad - (v / 100) * (height - 2 * pad);

    ctx.strokeStyle = "#ccc";
    ctx.strokeRect(pad, pad, width - 2 * pad, height - 2 * pad);

    const series: [string, (p: { accE: number | null; forgetting: number }) => number | null][] = [
      ["#2b6cb0", (p) => p.accE],
      ["#c53030", (p) => p.forgetting],
    ];
    for (const [color, pick] of series) {
      ctx.strokeStyle = color;
      ctx.lineWidth = 2;
      ctx.beginPath();
      let started = false;
      points.forEach((p, i) => {
        const v = pick(p);
        if (v === null) return;
        if (!started) {
          ctx.moveTo(x(i), y(v));
          started = true;
        } else {
          ctx.lineTo(x(i), y(v));
        }
      });
      ctx.stroke();
    }
    ctx.fillStyle = "#2b6cb0";
    ctx.fillText("Acc_E", pad + 4, pad + 12);
    ctx.fillStyle = "#c53030";
    ctx.fillText("forgetting", pad + 48, pad + 12);
  }
}
