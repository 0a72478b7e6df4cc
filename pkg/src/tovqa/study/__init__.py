"""Subjective-study backend: gating, screening, assignment, playback control,
rating persistence and export."""

from .core import (
    LANDOLT_DIRECTIONS,
    PhaseError,
    RecordLog,
    ScenarioAssignment,
    Session,
    StudyConfig,
    StudyError,
    StudyService,
    TokenError,
    UnknownSession,
    ValidationFailure,
    draw_assignments,
)
from .http import build_app, build_app_from_config

__all__ = [
    "LANDOLT_DIRECTIONS",
    "PhaseError",
    "RecordLog",
    "ScenarioAssignment",
    "Session",
    "StudyConfig",
    "StudyError",
    "StudyService",
    "TokenError",
    "UnknownSession",
    "ValidationFailure",
    "draw_assignments",
    "build_app",
    "build_app_from_config",
]
