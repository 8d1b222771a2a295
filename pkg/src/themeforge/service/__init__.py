"""Project store, pipeline orchestration, HTTP API, and report export."""

from .export import ExportReport, export_report
from .stages import Pipeline, ProjectConfig, themes_state
from .store import ProjectStore, STAGE_DEPS

__all__ = [
    "ExportReport",
    "Pipeline",
    "ProjectConfig",
    "ProjectStore",
    "STAGE_DEPS",
    "export_report",
    "themes_state",
]
