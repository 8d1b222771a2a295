/** Browser bootstrap: wires the store, views, and atlas into the page. */

import { ApiClient, ServiceUnavailableError } from "./api.js";
import { panViewBox, renderAtlas, viewBoxAttr, zoomViewBox } from "./atlas.js";
import { CurationStore, localMergeValidation, QueueFilter } from "./state.js";
import {
  answerItem,
  nextUnanswered,
  parseValidationCsv,
  serializeValidationCsv,
  ValidationItem,
} from "./validation.js";
import {
  renderConflictBanner,
  renderHistory,
  renderOfflineBanner,
  renderReviewQueue,
  renderThemes,
} from "./views.js";

const api = new ApiClient("");
const store = new CurationStore(api, "curation-ui");

let filter: QueueFilter = "Largest";
let offline = false;
let validationItems: ValidationItem[] = [];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function selectedClusterIds(): number[] {
  return [...document.querySelectorAll<HTMLInputElement>(".select-cluster:checked")].map(
    (box) => Number(box.value),
  );
}

function renderAll(): void {
  el("banner").innerHTML = offline
    ? renderOfflineBanner()
    : renderConflictBanner(store.conflictMessage);
  el("queue").innerHTML = renderReviewQueue(store.reviewQueue(filter), filter);
  el("themes").innerHTML = renderThemes(store.themesView(), store.version);
  el("version").textContent = `merge map v${store.version}`;
}

async function refresh(): Promise<void> {
  try {
    await store.refresh();
    offline = false;
  } catch (err) {
    if (err instanceof ServiceUnavailableError) {
      offline = true;
    } else {
      throw err;
    }
  }
  renderAll();
  void renderHistoryPanel();
}

async function renderHistoryPanel(): Promise<void> {
  try {
    el("history").innerHTML = renderHistory(await api.getHistory());
  } catch {
    // history panel is non-critical; the banner already shows offline state
  }
}

async function submitMerge(): Promise<void> {
  const ids = selectedClusterIds();
  const name = el<HTMLInputElement>("merge-name").value;
  const problem = localMergeValidation(ids, name);
  const status = el("merge-status");
  if (problem) {
    status.textContent = problem;
    return;
  }
  renderAll(); // optimistic preview is visible while the POST is in flight
  const outcome = await store.mergeClusters(ids, name);
  status.textContent =
    outcome.status === "applied"
      ? `merged into "${name}" (v${outcome.version})`
      : outcome.status === "conflict"
        ? "conflict — refreshed, please retry"
        : outcome.message;
  renderAll();
  void renderHistoryPanel();
}

async function loadAtlas(): Promise<void> {
  const points = await api.getLayout();
  el("atlas").innerHTML = renderAtlas(points ?? []);
  wireAtlasNavigation();
}

function wireAtlasNavigation(): void {
  const svg = el("atlas").querySelector<SVGSVGElement>("svg.atlas");
  if (!svg) return;
  let vb = { x: 0, y: 0, w: svg.viewBox.baseVal.width, h: svg.viewBox.baseVal.height };
  const apply = () => svg.setAttribute("viewBox", viewBoxAttr(vb));

  svg.addEventListener("wheel", (event) => {
    event.preventDefault();
    const rect = svg.getBoundingClientRect();
    const ax = vb.x + ((event.clientX - rect.left) / rect.width) * vb.w;
    const ay = vb.y + ((event.clientY - rect.top) / rect.height) * vb.h;
    vb = zoomViewBox(vb, event.deltaY < 0 ? 1.2 : 1 / 1.2, ax, ay);
    apply();
  });

  let dragging: { px: number; py: number } | null = null;
  svg.addEventListener("pointerdown", (event) => {
    dragging = { px: event.clientX, py: event.clientY };
    svg.setPointerCapture(event.pointerId);
  });
  svg.addEventListener("pointermove", (event) => {
    if (!dragging) return;
    const rect = svg.getBoundingClientRect();
    const dx = ((event.clientX - dragging.px) / rect.width) * vb.w;
    const dy = ((event.clientY - dragging.py) / rect.height) * vb.h;
    dragging = { px: event.clientX, py: event.clientY };
    vb = panViewBox(vb, dx, dy);
    apply();
  });
  svg.addEventListener("pointerup", () => {
    dragging = null;
  });
}

function wireValidation(): void {
  el<HTMLInputElement>("validation-file").addEventListener("change", async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    validationItems = parseValidationCsv(await file.text());
    renderValidationCard();
  });
  el("validation-submit").addEventListener("click", () => {
    const current = nextUnanswered(validationItems);
    if (!current) return;
    validationItems = answerItem(
      validationItems,
      current.doc_id,
      el<HTMLInputElement>("q1-yes").checked,
      el<HTMLInputElement>("q2-yes").checked,
      el<HTMLInputElement>("annotator").value || "anonymous",
    );
    renderValidationCard();
  });
  el("validation-download").addEventListener("click", () => {
    const blob = new Blob([serializeValidationCsv(validationItems)], {
      type: "text/csv",
    });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "validation_answers.csv";
    link.click();
    URL.revokeObjectURL(link.href);
  });
}

function renderValidationCard(): void {
  const current = nextUnanswered(validationItems);
  const remaining = validationItems.filter((i) => i.q1 === null || i.q2 === null).length;
  el("validation-doc").textContent = current
    ? `${current.doc_id} — themes: ${current.themes.join(", ")} (${remaining} left)`
    : validationItems.length
      ? "all items answered — download the CSV"
      : "load a validation export to begin";
}

export async function start(): Promise<void> {
  document.querySelectorAll<HTMLButtonElement>("[data-filter]").forEach((button) => {
    button.addEventListener("click", () => {
      filter = button.dataset.filter as QueueFilter;
      renderAll();
    });
  });
  el("merge-submit").addEventListener("click", () => void submitMerge());
  el("refresh").addEventListener("click", () => void refresh());
  wireValidation();
  await refresh();
  await loadAtlas();
}

if (typeof document !== "undefined" && document.getElementById("queue")) {
  void start();
}
