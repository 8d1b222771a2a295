/** Client-side curation state: server-authoritative with optimistic previews.
 *
 * The store never computes analytics; it only mirrors fetched payloads. A
 * pending action renders an optimistic preview that is discarded the moment
 * the server answers (whether with success or a conflict).
 */

import { ApiClient } from "./api.js";
import type { ClusterCard, CurationOutcome, ThemeView } from "./types.js";

export interface PendingAction {
  description: string;
  previewThemes: ThemeView[];
}

export type QueueFilter = "Largest" | "Smallest" | "All";

export function localMergeValidation(
  clusterIds: number[],
  themeName: string,
): string | null {
  if (clusterIds.length < 2) {
    return "select at least two clusters to merge";
  }
  if (new Set(clusterIds).size !== clusterIds.length) {
    return "duplicate cluster selection";
  }
  if (!themeName.trim()) {
    return "theme name must not be empty";
  }
  return null;
}

/** Preview of a merge: collapse the themes owning the clusters into one. */
export function previewMerge(
  themes: ThemeView[],
  clusterIds: number[],
  themeName: string,
): ThemeView[] {
  const affected = themes.filter((t) => t.clusters.some((c) => clusterIds.includes(c)));
  if (affected.length === 0) {
    return themes;
  }
  const target = affected.reduce((a, b) =>
    Math.min(...a.clusters) <= Math.min(...b.clusters) ? a : b,
  );
  const mergedClusters = new Set<number>(target.clusters);
  let mergedSize = target.size;
  for (const theme of affected) {
    if (theme.theme_id === target.theme_id) continue;
    for (const c of theme.clusters) mergedClusters.add(c);
    mergedSize += theme.size;
  }
  const merged: ThemeView = {
    theme_id: target.theme_id,
    name: themeName,
    clusters: [...mergedClusters].sort((a, b) => a - b),
    size: mergedSize,
  };
  const rest = themes.filter((t) => !affected.includes(t));
  return [...rest, merged].sort((a, b) => a.theme_id.localeCompare(b.theme_id));
}

export class CurationStore {
  version = -1;
  clusters: ClusterCard[] = [];
  themes: ThemeView[] = [];
  pending: PendingAction | null = null;
  conflictMessage: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly actor: string = "ui",
  ) {}

  async refresh(): Promise<void> {
    const clusters = await this.api.getClusters();
    const themes = await this.api.getThemes();
    this.clusters = clusters.clusters;
    this.themes = themes.themes;
    this.version = themes.version;
    this.pending = null;
  }

  /** Themes as the UI should show them right now (preview included). */
  themesView(): ThemeView[] {
    return this.pending ? this.pending.previewThemes : this.themes;
  }

  reviewQueue(filter: QueueFilter): ClusterCard[] {
    let cards = this.clusters;
    if (filter === "Largest") {
      cards = cards.filter((c) => c.review_largest);
      return [...cards].sort((a, b) => b.size - a.size || a.cluster_id - b.cluster_id);
    }
    if (filter === "Smallest") {
      cards = cards.filter((c) => c.review_smallest);
      return [...cards].sort((a, b) => a.size - b.size || a.cluster_id - b.cluster_id);
    }
    return [...cards].sort((a, b) => a.cluster_id - b.cluster_id);
  }

  async mergeClusters(clusterIds: number[], themeName: string): Promise<CurationOutcome> {
    const invalid = localMergeValidation(clusterIds, themeName);
    if (invalid) {
      return { status: "invalid", message: invalid };
    }
    this.conflictMessage = null;
    this.pending = {
      description: `merge ${clusterIds.join(",")} -> ${themeName}`,
      previewThemes: previewMerge(this.themes, clusterIds, themeName),
    };
    const outcome = await this.api.postCuration({
      kind: "merge",
      payload: { cluster_ids: clusterIds, theme_name: themeName },
      base_version: this.version,
      actor: this.actor,
    });
    await this.settle(outcome);
    return outcome;
  }

  async renameTheme(themeId: string, name: string): Promise<CurationOutcome> {
    if (!name.trim()) {
      return { status: "invalid", message: "theme name must not be empty" };
    }
    this.conflictMessage = null;
    this.pending = {
      description: `rename ${themeId} -> ${name}`,
      previewThemes: this.themes.map((t) =>
        t.theme_id === themeId ? { ...t, name } : t,
      ),
    };
    const outcome = await this.api.postCuration({
      kind: "rename",
      payload: { theme_id: themeId, name },
      base_version: this.version,
      actor: this.actor,
    });
    await this.settle(outcome);
    return outcome;
  }

  async moveCluster(clusterId: number, themeId: string): Promise<CurationOutcome> {
    this.conflictMessage = null;
    const outcome = await this.api.postCuration({
      kind: "split",
      payload: { cluster_id: clusterId, theme_id: themeId },
      base_version: this.version,
      actor: this.actor,
    });
    await this.settle(outcome);
    return outcome;
  }

  /** Server answered: drop the preview and re-mirror authoritative state. */
  private async settle(outcome: CurationOutcome): Promise<void> {
    this.pending = null;
    if (outcome.status === "conflict") {
      this.conflictMessage = `conflict: ${outcome.message} (server at version ${outcome.currentVersion})`;
    }
    if (outcome.status !== "invalid") {
      await this.refresh();
    }
  }
}
