"""HTTP API over a project store: read cluster/theme state, mutate curation.

Reads are concurrent; curation mutations serialize through one lock and are
applied with optimistic versioning, so a stale client gets a 409 and must
refetch. Every mutable resource carries the merge-map `version`.
"""

from __future__ import annotations

import csv
import io
import threading
from datetime import datetime, timezone

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from ..errors import ConflictError, DependencyError, UsageError
from ..themes import Theme, apply_merge, intra_theme_coherence
from .stages import (
    load_assignments,
    load_cluster_names,
    load_corpus,
    load_embeddings,
    load_topics,
)
from .store import ProjectStore

REVIEW_QUEUE_SIZE = 30
SAMPLE_TOPIC_LIMIT = 20


class CurationRequest(BaseModel):
    kind: str
    payload: dict
    base_version: int
    actor: str = "anonymous"


class ServiceState:
    """Loads immutable stage outputs once; merge map re-read per mutation."""

    def __init__(self, store: ProjectStore):
        self.store = store
        self.lock = threading.Lock()
        self.assignments = load_assignments(store)
        self.names = load_cluster_names(store)
        self.embeddings = load_embeddings(store)
        self.topics = {t.key: t for t in load_topics(store)}
        self.corpus = load_corpus(store)
        self._cluster_cards = self._build_cluster_cards()

    def _build_cluster_cards(self) -> list[dict]:
        members: dict[int, list] = {}
        for key, cluster in self.assignments.items():
            members.setdefault(cluster, []).append(key)
        sizes = {c: len(keys) for c, keys in members.items()}
        by_size_desc = sorted(sizes, key=lambda c: (-sizes[c], c))
        by_size_asc = sorted(sizes, key=lambda c: (sizes[c], c))
        largest = set(by_size_desc[:REVIEW_QUEUE_SIZE])
        smallest = set(by_size_asc[:REVIEW_QUEUE_SIZE])

        cards = []
        for cluster_id in sorted(members):
            keys = sorted(members[cluster_id])
            pseudo = Theme(
                theme_id=f"c{cluster_id}",
                name=self.names.get(cluster_id, f"Cluster {cluster_id}"),
                member_clusters=frozenset({cluster_id}),
                member_topics=tuple(keys),
            )
            cards.append(
                {
                    "cluster_id": cluster_id,
                    "name": self.names.get(cluster_id, f"Cluster {cluster_id}"),
                    "size": len(keys),
                    "sample_topics": [
                        self.topics[k].text for k in keys[:SAMPLE_TOPIC_LIMIT]
                    ],
                    "coherence": intra_theme_coherence(pseudo, self.embeddings),
                    "review_largest": cluster_id in largest,
                    "review_smallest": cluster_id in smallest,
                }
            )
        return cards

    def clusters_payload(self) -> dict:
        merge_map = self.store.load_merge_map()
        cards = []
        for card in self._cluster_cards:
            enriched = dict(card)
            enriched["theme_id"] = merge_map.entries[card["cluster_id"]]
            cards.append(enriched)
        return {"version": merge_map.version, "clusters": cards}

    def themes_payload(self) -> dict:
        merge_map = self.store.load_merge_map()
        themes = apply_merge(self.assignments, merge_map)
        return {
            "version": merge_map.version,
            "themes": [
                {
                    "theme_id": t.theme_id,
                    "name": t.name,
                    "clusters": sorted(t.member_clusters),
                    "size": len(t.member_topics),
                }
                for t in themes
            ],
        }

    def apply_curation(self, request: CurationRequest) -> int:
        with self.lock:
            merge_map = self.store.load_merge_map()
            merge_map.apply_action(
                request.kind,
                request.payload,
                actor=request.actor,
                base_version=request.base_version,
                timestamp=datetime.now(timezone.utc).isoformat(),
            )
            self.store.save_merge_map(merge_map)
            return merge_map.version


def _csv_rows(data: bytes) -> list[dict]:
    return list(csv.DictReader(io.StringIO(data.decode("utf-8"))))


def create_app(store: ProjectStore) -> FastAPI:
    state = ServiceState(store)
    app = FastAPI(title="themeforge service")
    app.state.service = state

    @app.get("/api/clusters")
    def get_clusters():
        return state.clusters_payload()

    @app.get("/api/clusters/{cluster_id}")
    def get_cluster(cluster_id: int):
        for card in state.clusters_payload()["clusters"]:
            if card["cluster_id"] == cluster_id:
                detail = dict(card)
                keys = sorted(
                    k for k, c in state.assignments.items() if c == cluster_id
                )
                detail["topics"] = [state.topics[k].text for k in keys]
                return detail
        raise HTTPException(status_code=404, detail=f"no cluster {cluster_id}")

    @app.get("/api/themes")
    def get_themes():
        return state.themes_payload()

    @app.get("/api/history")
    def get_history():
        merge_map = store.load_merge_map()
        return {"version": merge_map.version, "history": merge_map.history}

    @app.post("/api/curation")
    def post_curation(request: CurationRequest):
        try:
            version = state.apply_curation(request)
        except ConflictError as exc:
            raise HTTPException(
                status_code=409,
                detail={"error": str(exc), "current_version": exc.current_version},
            )
        except UsageError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"version": version}

    @app.get("/api/metrics")
    def get_metrics():
        try:
            frequency = _csv_rows(store.read_stage_file("tables", "frequency.csv"))
            clusters_summary = _csv_rows(
                store.read_stage_file("tables", "clusters_summary.csv")
            )
            themes_summary = _csv_rows(
                store.read_stage_file("tables", "themes_summary.csv")
            )
        except DependencyError as exc:
            raise HTTPException(status_code=404, detail=f"stage {exc} not run")
        engagement = []
        try:
            engagement = _csv_rows(store.read_stage_file("engagement", "engagement.csv"))
        except DependencyError:
            pass
        return {
            "frequency": frequency,
            "clusters_summary": clusters_summary,
            "themes_summary": themes_summary,
            "engagement": engagement,
        }

    @app.get("/api/layout")
    def get_layout():
        try:
            points = _csv_rows(store.read_stage_file("viz", "layout.csv"))
            vectors = _csv_rows(store.read_stage_file("viz", "channel_vectors.csv"))
        except DependencyError as exc:
            raise HTTPException(status_code=404, detail=f"stage {exc} not run")
        top_themes: dict[str, list[dict]] = {}
        for row in vectors:
            top_themes.setdefault(row["channel_id"], []).append(
                {"theme": row["theme"], "probability": float(row["probability"])}
            )
        for channel_id in top_themes:
            top_themes[channel_id].sort(key=lambda e: (-e["probability"], e["theme"]))
            top_themes[channel_id] = top_themes[channel_id][:5]
        return {
            "points": [
                {
                    "channel_id": row["channel_id"],
                    "x": float(row["x"]),
                    "y": float(row["y"]),
                    "orientation": row["orientation"],
                    "top_themes": top_themes.get(row["channel_id"], []),
                }
                for row in points
            ]
        }

    return app
