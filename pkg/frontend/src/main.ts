import { ApiClient, ApiError } from "./api.js";
import { CorrectionDialog } from "./dialog.js";
import { Gallery } from "./gallery.js";
import { MetricsPanel } from "./metrics-panel.js";
import { cardTransition, type CardState } from "./state.js";
import type { Item, SessionInfo } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

async function boot(): Promise<void> {
  const demo = new URLSearchParams(location.search).has("demo");
  const api = new ApiClient("", demo);
  const status = el<HTMLElement>("status");

  let session: SessionInfo;
  try {
    session = await api.session();
  } catch (err) {
    status.textContent =
      err instanceof ApiError && err.status === 404
        ? "No active session. Start the server with --train <dataset> or POST /session."
        : String(err);
    return;
  }

  el<HTMLElement>("session-line").textContent =
    `session ${session.session_id} - ${session.class_list.length} classes - ` +
    `base accuracy ${session.acc_base.toFixed(2)}% - ` +
    `${session.misclassified_size} of ${session.test_size} test items misclassified`;

  const gallery = new Gallery(api, el("grid"), el("page-label"), status);
  const dialog = new CorrectionDialog(el("overlay"));
  const metrics = new MetricsPanel(
    api, el("readout"), el<HTMLCanvasElement>("chart"), el("stale"));

  const classNames = () => session.class_list.map((c) => c.name);
  let inFlight: CardState = "none";

  gallery.onSelect = async (item: Item) => {
    if (inFlight === "submitted") return; // one mutation at a time
    const label = await dialog.open(item, classNames(), session.open_class);
    if (label === null) return;
    inFlight = cardTransition(inFlight, "submit");
    try {
      const outcome = await api.correct(item.id, label);
      inFlight = cardTransition(inFlight, "success");
      status.textContent =
        `corrected ${item.id}: ${outcome.prediction_before.class_name} -> ` +
        `${outcome.prediction_after.class_name}`;
      session = await api.session(); // class list may grow in open-class mode
      await gallery.load();
      await metrics.refresh();
    } catch (err) {
      inFlight = cardTransition(inFlight, "failure");
      status.textContent = String(err);
    } finally {
      inFlight = "none";
    }
  };

  el("filter-all").addEventListener("click", () => gallery.setFilter("all"));
  el("filter-wrong").addEventListener("click", () => gallery.setFilter("misclassified"));
  el("prev").addEventListener("click", () => gallery.move(-1));
  el("next").addEventListener("click", () => gallery.move(1));
  el("reset").addEventListener("click", async () => {
    await metrics.reset();
    await gallery.load();
    status.textContent = "store reset to the initial prototypes";
  });

  await gallery.load();
  await metrics.refresh();
}

boot().catch((err) => {
  const status = document.getElementById("status");
  if (status) status.textContent = String(err);
});
