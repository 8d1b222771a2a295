/** Payload shapes of the curation service API (mirrored, never derived). */

export interface ClusterCard {
  cluster_id: number;
  name: string;
  size: number;
  sample_topics: string[];
  coherence: number;
  review_largest: boolean;
  review_smallest: boolean;
  theme_id: string;
}

export interface ClustersPayload {
  version: number;
  clusters: ClusterCard[];
}

export interface ThemeView {
  theme_id: string;
  name: string;
  clusters: number[];
  size: number;
}

export interface ThemesPayload {
  version: number;
  themes: ThemeView[];
}

export interface HistoryEntry {
  kind: string;
  payload: Record<string, unknown>;
  actor: string;
  timestamp: string;
  version: number;
}

export interface TopTheme {
  theme: string;
  probability: number;
}

export interface LayoutPoint {
  channel_id: string;
  x: number;
  y: number;
  orientation: string;
  top_themes: TopTheme[];
}

export type CurationKind = "merge" | "rename" | "split";

export interface CurationRequest {
  kind: CurationKind;
  payload: Record<string, unknown>;
  base_version: number;
  actor?: string;
}

export type CurationOutcome =
  | { status: "applied"; version: number }
  | { status: "conflict"; currentVersion: number; message: string }
  | { status: "invalid"; message: string };
