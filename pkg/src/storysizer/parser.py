"""Parsers for raw LLM output: related-question lists and planner CSV rows.

The prompts forbid enumerations, fences, headers and prose; models emit them
anyway. Lenient parsing (the default) strips or skips the junk and reports
what it skipped; strict mode turns any skip into an error so CI fixtures
cannot rot silently.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass

from .domain import (
    StorysizerError,
    Task,
    TaskStatus,
    UnknownKindLabel,
    normalize_task_name,
    task_kind_from_label,
)


class NoQuestions(StorysizerError):
    code = "NO_QUESTIONS"


class MalformedRow(StorysizerError):
    code = "MALFORMED_ROW"

    def __init__(self, line_no: int, line: str) -> None:
        super().__init__(f"malformed row at line {line_no}: {line!r}")
        self.line_no = line_no
        self.line = line


class EmptyOutput(StorysizerError):
    code = "EMPTY_OUTPUT"


@dataclass(frozen=True)
class RawTask:
    """One planner CSV row as emitted, before domain validation."""

    kind_label: str
    function_name: str | None
    description: str
    source_line: int

    def __post_init__(self) -> None:
        if not self.description.strip():
            raise ValueError("description must be non-empty")
        if self.source_line < 1:
            raise ValueError("source_line must be >= 1")


@dataclass(frozen=True)
class ParseReport:
    """Parse outcome: every non-blank line lands in parsed or skipped."""

    parsed: tuple
    skipped: tuple[tuple[int, str], ...]
    strict_ok: bool


# Enumeration markers LLMs prepend despite instructions: "1.", "1)", "-", "*", "•".
# Markers need trailing whitespace (or end of line) so "1.5 miles" and "-3" survive.
_ENUM_MARKER = re.compile(r"^\s*(?:\d+[.)]|[-*•])(?:\s+|$)")
_FENCE = re.compile(r"^```[\w-]*\s*$")

_HEADER_FIRST_CELL = "task type"


def _strip_markers(line: str) -> str:
    prev = None
    while prev != line:
        prev = line
        line = _ENUM_MARKER.sub("", line, count=1)
    return line.strip()


def parse_question_list(text: str) -> ParseReport:
    """Split question-generator output into individual questions.

    Blank lines are dropped; leading enumeration markers are stripped;
    order is preserved. Raises ``NoQuestions`` when nothing survives.
    """
    questions: list[str] = []
    skipped: list[tuple[int, str]] = []
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        if not raw_line.strip():
            continue
        question = _strip_markers(raw_line)
        if question:
            questions.append(question)
        else:
            skipped.append((line_no, "EmptyAfterMarkers"))
    if not questions:
        raise NoQuestions("no questions survived parsing")
    return ParseReport(tuple(questions), tuple(skipped), strict_ok=not skipped)


def parse_planner_csv(text: str, strict: bool = False) -> ParseReport:
    """Parse planner output into ``RawTask`` rows.

    Handles the deviations seen in practice: surrounding code fences, an
    optional header row (first cell "task type"), leading enumeration
    markers, and quoted fields with embedded commas. Rows with two fields
    map to (kind_label, description) with no function name.

    Lenient mode skips bad rows with a reason; strict mode raises
    ``MalformedRow`` or ``UnknownKindLabel`` on the first offender.
    Raises ``EmptyOutput`` when no task parses at all.
    """
    parsed: list[RawTask] = []
    skipped: list[tuple[int, str]] = []
    header_seen = False
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or _FENCE.match(line):
            continue
        stripped = _strip_markers(raw_line)
        if not stripped:
            skipped.append((line_no, "EmptyAfterMarkers"))
            continue
        try:
            fields = next(csv.reader(io.StringIO(stripped)))
        except (csv.Error, StopIteration) as exc:
            if strict:
                raise MalformedRow(line_no, raw_line) from exc
            skipped.append((line_no, f"CsvError: {exc}"))
            continue
        fields = [f.strip() for f in fields]
        if not header_seen and fields and fields[0].lower() == _HEADER_FIRST_CELL:
            header_seen = True
            continue
        if len(fields) == 3:
            kind_label, function_name, description = fields[0], fields[1] or None, fields[2]
        elif len(fields) == 2:
            kind_label, function_name, description = fields[0], None, fields[1]
        else:
            if strict:
                raise MalformedRow(line_no, raw_line)
            skipped.append((line_no, "MalformedRow"))
            continue
        try:
            task_kind_from_label(kind_label)
        except UnknownKindLabel:
            if strict:
                raise
            skipped.append((line_no, f"UnknownKindLabel: {kind_label!r}"))
            continue
        if not description:
            if strict:
                raise MalformedRow(line_no, raw_line)
            skipped.append((line_no, "EmptyDescription"))
            continue
        parsed.append(RawTask(kind_label, function_name, description, line_no))
    if not parsed:
        raise EmptyOutput(f"no tasks parsed ({len(skipped)} lines skipped)")
    return ParseReport(tuple(parsed), tuple(skipped), strict_ok=not skipped)


def serialize_tasks_csv(tasks: list[RawTask] | tuple[RawTask, ...]) -> str:
    """Inverse of ``parse_planner_csv`` for round-trip checks and fixtures."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for task in tasks:
        if task.function_name is None:
            writer.writerow([task.kind_label, task.description])
        else:
            writer.writerow([task.kind_label, task.function_name, task.description])
    return buf.getvalue()


_NAME_FALLBACK_WORDS = 8


def raw_to_task(
    raw: RawTask,
    *,
    task_id: str,
    origin_question_ids: tuple[str, ...],
    origin_story_id: str,
) -> Task:
    """Promote a parsed row into a Pending domain task.

    When the planner omitted the function name (as real output tables do),
    identity falls back to the first eight words of the description.
    """
    kind = task_kind_from_label(raw.kind_label)
    base = raw.function_name or " ".join(raw.description.split()[:_NAME_FALLBACK_WORDS])
    return Task(
        id=task_id,
        kind=kind,
        name=normalize_task_name(base),
        raw_name=raw.function_name,
        description=raw.description,
        origin_question_ids=tuple(origin_question_ids),
        origin_story_id=origin_story_id,
        status=TaskStatus.PENDING,
    )
