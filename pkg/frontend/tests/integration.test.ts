/** Round-trips against the real service over HTTP.
 *
 * A pipeline store is built by scripts/make_fixture_store.py, the service is
 * spawned as a child process, and the assertions follow the acceptance
 * criteria: one history entry per merge, read-your-writes on the themes
 * endpoint, conflict-means-unchanged, a post-merge `tables` run using the
 * merged theme, and strict equality between rendered numbers and the CSV
 * export.
 */

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { readFileSync } from "node:fs";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { renderAtlas } from "../src/atlas.js";
import { CurationStore } from "../src/state.js";
import { renderClusterCard } from "../src/views.js";
import type { ClusterCard, LayoutPoint } from "../src/types.js";

const FIXTURE = join(__dirname, "..", ".fixture");
const STORE = join(FIXTURE, "store");
const BUNDLE = join(FIXTURE, "bundle");
const PORT = 21000 + (process.pid % 2000);
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;

function forge(...args: string[]): string {
  return execFileSync("python3", ["-m", "themeforge.service.cli", ...args], {
    encoding: "utf-8",
  });
}

async function waitReady(): Promise<void> {
  const deadline = Date.now() + 60_000;
  for (;;) {
    try {
      const response = await fetch(`${BASE}/api/themes`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
}

function parseCsv(path: string): Record<string, string>[] {
  const [header, ...lines] = readFileSync(path, "utf-8").trim().split("\n");
  const columns = header.split(",");
  return lines.map((line) => {
    const cells = line.split(",");
    return Object.fromEntries(columns.map((c, i) => [c, cells[i]]));
  });
}

beforeAll(async () => {
  execFileSync("python3", [join(__dirname, "..", "scripts", "make_fixture_store.py"), FIXTURE], {
    stdio: "inherit",
  });
  service = spawn(
    "python3",
    ["-m", "themeforge.service.cli", "serve", "--store", STORE, "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await waitReady();
});

afterAll(() => {
  service?.kill();
});

describe("UI/export consistency", () => {
  it("cluster cards render exactly the exported summary numbers", async () => {
    const api = new ApiClient(BASE);
    const payload = await api.getClusters();
    const exported = parseCsv(join(BUNDLE, "tables", "clusters_summary.csv"));
    expect(payload.clusters.length).toBe(exported.length);

    const byId = new Map(exported.map((row) => [Number(row.cluster_id), row]));
    for (const card of payload.clusters) {
      const row = byId.get(card.cluster_id)!;
      expect(row).toBeDefined();
      const html = renderClusterCard(card as ClusterCard);
      // rendered size and coherence must equal the CSV values exactly
      expect(html).toContain(`<dd class="size">${Number(row.size)}</dd>`);
      const renderedCoherence = html.match(/data-coherence="([^"]+)"/)![1];
      expect(Number(renderedCoherence)).toBe(Number(row.coherence));
      expect(card.name).toBe(row.name);
      expect(card.theme_id).toBe(row.theme_id);
    }
  });

  it("the atlas renders exactly the exported layout and top themes", async () => {
    const api = new ApiClient(BASE);
    const points = (await api.getLayout())!;
    const layout = parseCsv(join(BUNDLE, "viz", "layout.csv"));
    expect(points.length).toBe(layout.length);

    const svg = renderAtlas(points as LayoutPoint[]);
    const byChannel = new Map(layout.map((row) => [row.channel_id, row]));
    for (const point of points) {
      const row = byChannel.get(point.channel_id)!;
      expect(row).toBeDefined();
      const circle = svg.match(
        new RegExp(`<circle[^>]*data-channel-id="${point.channel_id}"[^>]*>`),
      )![0];
      const dataX = circle.match(/data-x="([^"]+)"/)![1];
      const dataY = circle.match(/data-y="([^"]+)"/)![1];
      expect(Number(dataX)).toBe(Number(row.x));
      expect(Number(dataY)).toBe(Number(row.y));
      expect(circle).toContain(`data-orientation="${row.orientation}"`);
    }

    // hover top-5 themes match the exported channel vectors
    const vectors = parseCsv(join(BUNDLE, "viz", "channel_vectors.csv"));
    for (const point of points) {
      const rows = vectors
        .filter((r) => r.channel_id === point.channel_id)
        .map((r) => ({ theme: r.theme, probability: Number(r.probability) }))
        .sort((a, b) => b.probability - a.probability || a.theme.localeCompare(b.theme))
        .slice(0, 5);
      expect(point.top_themes.map((t) => [t.theme, t.probability])).toEqual(
        rows.map((r) => [r.theme, r.probability]),
      );
    }
  });
});

describe("curation round-trip", () => {
  it("merge: one history entry, visible themes, stale conflict unchanged, tables rerun", async () => {
    const api = new ApiClient(BASE);
    const store = new CurationStore(api, "integration");
    await store.refresh();

    const historyBefore = await api.getHistory();
    const themesBefore = await api.getThemes();
    const targets = [0, 1];

    const outcome = await store.mergeClusters(targets, "Fusion Intégration");
    expect(outcome.status).toBe("applied");

    // exactly one new history entry
    const historyAfter = await api.getHistory();
    expect(historyAfter.length).toBe(historyBefore.length + 1);
    const entry = historyAfter[historyAfter.length - 1];
    expect(entry.kind).toBe("merge");
    expect(entry.actor).toBe("integration");

    // themes endpoint reflects the merge
    const themes = await api.getThemes();
    expect(themes.version).toBe(themesBefore.version + 1);
    const merged = themes.themes.filter((t) => t.name === "Fusion Intégration");
    expect(merged).toHaveLength(1);
    expect(merged[0].clusters).toEqual(expect.arrayContaining(targets));
    expect(themes.themes.filter((t) => t.theme_id === "t1")).toHaveLength(0);

    // a stale merge conflicts and leaves server state unchanged
    const stale = await api.postCuration({
      kind: "merge",
      payload: { cluster_ids: [2, 3], theme_name: "Trop Tard" },
      base_version: themesBefore.version,
    });
    expect(stale.status).toBe("conflict");
    const themesAfterConflict = await api.getThemes();
    expect(themesAfterConflict).toEqual(themes);
    expect((await api.getHistory()).length).toBe(historyAfter.length);

    // a subsequent tables run uses the merged theme
    forge("tables", "--store", STORE);
    forge("export", "--store", STORE, "--out", join(FIXTURE, "bundle2"));
    const frequency = parseCsv(join(FIXTURE, "bundle2", "tables", "frequency.csv"));
    const themeIds = new Set(frequency.map((row) => row.theme));
    expect(themeIds.has("t0")).toBe(true); // merge target
    expect(themeIds.has("t1")).toBe(false); // absorbed cluster's old theme
    const names = new Set(
      frequency.filter((r) => r.theme === "t0").map((r) => r.theme_name),
    );
    expect(names).toEqual(new Set(["Fusion Intégration"]));
  });
});
