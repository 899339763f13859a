"""Shared domain types: task kinds, stories, tasks, and the validated inventory.

Everything here is an immutable value object. Mutation of pipeline state
happens only in the engine module.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator


class StorysizerError(Exception):
    """Base class for all pipeline errors; ``code`` is machine-readable."""

    code = "ERROR"


class EmptyName(StorysizerError):
    code = "EMPTY_NAME"


class UnknownKindLabel(StorysizerError):
    code = "UNKNOWN_KIND_LABEL"

    def __init__(self, label: str) -> None:
        super().__init__(f"unknown task kind label: {label!r}")
        self.label = label


class InvalidStory(StorysizerError):
    code = "INVALID_STORY"


class KeyCollision(StorysizerError):
    code = "KEY_COLLISION"

    def __init__(self, kind: "TaskKind", name: str) -> None:
        super().__init__(
            f"inventory already holds a {kind.label} task named {name!r}; "
            "use a merge verdict instead"
        )
        self.kind = kind
        self.name = name


class TaskKind(str, Enum):
    """The three countable effort buckets every planner task falls into."""

    DATA_SOURCE = "data_source"
    ALGORITHM = "algorithm"
    UI_WIDGET = "ui_widget"

    @property
    def label(self) -> str:
        """Canonical human-readable label, as used in review files and reports."""
        return _KIND_LABELS[self]


_KIND_LABELS = {
    TaskKind.DATA_SOURCE: "Data Source",
    TaskKind.ALGORITHM: "Algorithm",
    TaskKind.UI_WIDGET: "User Interface",
}

# Planner prompts speak MVC (model/view/control); planner output tables tend
# to use the report vocabulary. Both are accepted, nothing else is.
_KIND_ALIASES = {
    "model": TaskKind.DATA_SOURCE,
    "data source": TaskKind.DATA_SOURCE,
    "datasource": TaskKind.DATA_SOURCE,
    "control": TaskKind.ALGORITHM,
    "algorithm": TaskKind.ALGORITHM,
    "view": TaskKind.UI_WIDGET,
    "user interface": TaskKind.UI_WIDGET,
    "interface": TaskKind.UI_WIDGET,
    "ui": TaskKind.UI_WIDGET,
}

_CAMEL_BOUNDARY_1 = re.compile(r"(.)([A-Z][a-z]+)")
_CAMEL_BOUNDARY_2 = re.compile(r"([a-z0-9])([A-Z])")
_NON_ALNUM_RUN = re.compile(r"[^a-z0-9]+")


def normalize_task_name(raw: str) -> str:
    """Canonicalize a planner-emitted name into a snake_case identifier.

    Camel case is split on case boundaries so LLM casing does not create
    spurious identities: ``CheckPromotionForItem`` and
    ``check promotion for item`` normalize to the same name.

    Raises ``EmptyName`` when nothing alphanumeric survives.
    """
    s = _CAMEL_BOUNDARY_1.sub(r"\1_\2", raw)
    s = _CAMEL_BOUNDARY_2.sub(r"\1_\2", s)
    s = _NON_ALNUM_RUN.sub("_", s.lower()).strip("_")
    if not s:
        raise EmptyName(f"name normalizes to empty: {raw!r}")
    return s


def task_kind_from_label(label: str) -> TaskKind:
    """Map a planner label (either vocabulary) onto a TaskKind.

    Case-insensitive and whitespace-trimmed; anything outside the two
    known vocabularies raises ``UnknownKindLabel`` rather than guessing.
    """
    kind = _KIND_ALIASES.get(label.strip().lower())
    if kind is None:
        raise UnknownKindLabel(label)
    return kind


class TaskStatus(str, Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    MERGED = "merged"
    EDITED = "edited"


@dataclass(frozen=True)
class UserStory:
    """A seed natural-language request to be expanded and decomposed."""

    id: str
    text: str
    created_at: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise InvalidStory("story text must be non-empty")


@dataclass(frozen=True)
class Task:
    """One planner-produced unit of work, identified by (kind, name).

    ``merged_into`` is set exactly when status is MERGED; ``merged_from``
    records lineage on the surviving task.
    """

    id: str
    kind: TaskKind
    name: str
    raw_name: str | None
    description: str
    origin_question_ids: tuple[str, ...]
    origin_story_id: str
    status: TaskStatus = TaskStatus.PENDING
    merged_into: str | None = None
    merged_from: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise EmptyName("task name must be non-empty")
        if not self.origin_question_ids:
            raise ValueError("origin_question_ids must be non-empty")
        if (self.status is TaskStatus.MERGED) != (self.merged_into is not None):
            raise ValueError("merged_into is set exactly for MERGED tasks")

    @property
    def key(self) -> tuple[TaskKind, str]:
        return (self.kind, self.name)


@dataclass(frozen=True)
class Inventory:
    """The accumulating validated task set, unique by (kind, name).

    Construction rejects duplicate keys, so holding an Inventory is proof
    of the uniqueness invariant.
    """

    tasks: tuple[Task, ...] = ()

    def __post_init__(self) -> None:
        seen: set[tuple[TaskKind, str]] = set()
        for task in self.tasks:
            if task.key in seen:
                raise KeyCollision(task.kind, task.name)
            seen.add(task.key)

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self) -> Iterator[Task]:
        return iter(self.tasks)

    def find(self, kind: TaskKind, name: str) -> Task | None:
        for task in self.tasks:
            if task.kind is kind and task.name == name:
                return task
        return None

    def get(self, task_id: str) -> Task | None:
        for task in self.tasks:
            if task.id == task_id:
                return task
        return None

    def add(self, task: Task) -> "Inventory":
        if self.find(task.kind, task.name) is not None:
            raise KeyCollision(task.kind, task.name)
        return Inventory(self.tasks + (task,))

    def counts(self) -> dict[TaskKind, int]:
        out = {kind: 0 for kind in TaskKind}
        for task in self.tasks:
            out[task.kind] += 1
        return out
