"""storysizer: planner-driven effort inventories from seed user stories.

A seed story is expanded into related questions, decomposed by a planner
LLM into data source / algorithm / UI widget tasks, deduplicated, validated
by a human, and counted into an effort report.
"""

from .domain import (
    Inventory,
    Task,
    TaskKind,
    TaskStatus,
    UserStory,
    normalize_task_name,
    task_kind_from_label,
)

__version__ = "0.1.0"

__all__ = [
    "Inventory",
    "Task",
    "TaskKind",
    "TaskStatus",
    "UserStory",
    "normalize_task_name",
    "task_kind_from_label",
    "__version__",
]
