"""Effort reports: per-kind counts, raw task list, baseline deltas, scope.

Counting is the whole cost model here: the number of data sources,
algorithms and UI widgets stands in for development size. Rendering is
deterministic for every report value.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from .domain import Inventory, Task, TaskKind, normalize_task_name
from .engine import Session, convergence_stats

KIND_ORDER = (TaskKind.DATA_SOURCE, TaskKind.ALGORITHM, TaskKind.UI_WIDGET)

AGENT_UI_NAME = "agent_language_interface"
AGENT_UI_DESCRIPTION = (
    "Natural-language interface presented by the agent itself (reported only, not a stored task)"
)

QUESTION_EDIT_FOOTNOTE = (
    "Questions are reported as generated; question-level editing is not part of the workflow."
)


@dataclass(frozen=True)
class Baseline:
    """Manually estimated counts to compare the pipeline against."""

    data_sources: int
    algorithms: int
    ui_widgets: int

    def __post_init__(self) -> None:
        if min(self.data_sources, self.algorithms, self.ui_widgets) < 0:
            raise ValueError("baseline counts must be non-negative")

    def for_kind(self, kind: TaskKind) -> int:
        return {
            TaskKind.DATA_SOURCE: self.data_sources,
            TaskKind.ALGORITHM: self.algorithms,
            TaskKind.UI_WIDGET: self.ui_widgets,
        }[kind]


@dataclass(frozen=True)
class EffortReport:
    counts: dict[TaskKind, int]
    include_agent_ui: bool
    reported_ui: int
    raw_list: tuple[Task, ...]
    baseline: Baseline | None
    scope_in: tuple[str, ...]
    scope_out: tuple[str, ...]
    finalized: bool
    snapshot_hash: str | None
    convergence: tuple[tuple[str, int, int, int], ...]
    footnotes: tuple[str, ...]

    def reported_count(self, kind: TaskKind) -> int:
        if kind is TaskKind.UI_WIDGET:
            return self.reported_ui
        return self.counts[kind]


def effort_summary(
    inventory: Inventory, include_agent_ui: bool = True
) -> tuple[dict[TaskKind, int], int]:
    """Counts by kind plus the reported UI count.

    The agent's own natural-language interface is one more UI to build but
    never appears as planner output, so the flag adds one to the reported
    count without touching stored data.
    """
    counts = inventory.counts()
    reported_ui = counts[TaskKind.UI_WIDGET] + (1 if include_agent_ui else 0)
    return counts, reported_ui


def scope_document(
    inventory: Inventory, catalog: tuple[str, ...]
) -> tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]:
    """In-scope data source names, out-of-scope catalog remainder, warnings.

    Both sides are compared on normalized names so catalog spelling does
    not matter.
    """
    normalized_catalog = [normalize_task_name(entry) for entry in catalog]
    if len(set(normalized_catalog)) != len(normalized_catalog):
        raise ValueError("catalog entries must be unique after normalization")
    in_scope = sorted(
        {t.name for t in inventory if t.kind is TaskKind.DATA_SOURCE}
    )
    out_of_scope = sorted(set(normalized_catalog) - set(in_scope))
    warnings: tuple[str, ...] = ()
    if not catalog:
        warnings = (
            "No data source catalog supplied; the out-of-scope list is empty by construction.",
        )
    return tuple(in_scope), tuple(out_of_scope), warnings


def build_report(
    session: Session,
    *,
    include_agent_ui: bool = True,
    baseline: Baseline | None = None,
) -> EffortReport:
    inventory = session.inventory()
    counts, reported_ui = effort_summary(inventory, include_agent_ui)
    raw_list = tuple(
        task
        for kind in KIND_ORDER
        for task in inventory
        if task.kind is kind
    )
    scope_in, scope_out, scope_warnings = scope_document(
        inventory, session.config.catalog
    )
    footnotes = list(scope_warnings)
    if include_agent_ui:
        footnotes.append(
            f"User Interface count includes one reported-only row for the agent's own "
            f"interface; stored UI tasks: {counts[TaskKind.UI_WIDGET]}."
        )
    footnotes.append(QUESTION_EDIT_FOOTNOTE)
    stats = convergence_stats(session)
    return EffortReport(
        counts=counts,
        include_agent_ui=include_agent_ui,
        reported_ui=reported_ui,
        raw_list=raw_list,
        baseline=baseline,
        scope_in=scope_in,
        scope_out=scope_out,
        finalized=session.finalized is not None,
        snapshot_hash=(session.finalized or {}).get("snapshot_hash"),
        convergence=tuple(
            (s.iteration_id, s.new_accepted, s.duplicates_flagged, s.rejected)
            for s in stats
        ),
        footnotes=tuple(footnotes),
    )


def baseline_rows(report: EffortReport) -> list[tuple[str, int, int, int]]:
    """(kind label, baseline, current, delta) rows; deltas use reported counts."""
    assert report.baseline is not None
    rows = []
    for kind in KIND_ORDER:
        base = report.baseline.for_kind(kind)
        current = report.reported_count(kind)
        rows.append((kind.label, base, current, current - base))
    return rows


def render(report: EffortReport, fmt: str) -> str:
    if fmt == "markdown":
        return _render_markdown(report)
    if fmt == "csv":
        return _render_csv(report)
    if fmt == "json":
        return _render_json(report)
    raise ValueError(f"unknown report format: {fmt!r}")


def _md_escape(text: str) -> str:
    return text.replace("|", "\\|")


def _render_markdown(report: EffortReport) -> str:
    lines: list[str] = ["# Effort Report", ""]
    if report.finalized:
        lines += [f"Final (inventory snapshot `{report.snapshot_hash}`).", ""]
    else:
        lines += ["Draft (session not finalized).", ""]

    lines += ["## Summary", "", "| Kind | Count |", "| --- | --- |"]
    for kind in KIND_ORDER:
        lines.append(f"| {kind.label} | {report.reported_count(kind)} |")
    total = sum(report.counts.values())
    lines += ["", f"Stored tasks: {total}", ""]

    if report.baseline is not None:
        lines += [
            "## Baseline comparison",
            "",
            "| Kind | Baseline | Pipeline | Delta |",
            "| --- | --- | --- | --- |",
        ]
        for label, base, current, delta in baseline_rows(report):
            lines.append(f"| {label} | {base} | {current} | {delta:+d} |")
        lines.append("")

    lines += ["## Raw task list", ""]
    for kind in KIND_ORDER:
        tasks = [t for t in report.raw_list if t.kind is kind]
        shown = report.reported_count(kind)
        lines += [f"### {kind.label} ({shown})", ""]
        if tasks or (kind is TaskKind.UI_WIDGET and report.include_agent_ui):
            lines += ["| Name | Description |", "| --- | --- |"]
            for task in tasks:
                lines.append(
                    f"| {_md_escape(task.name)} | {_md_escape(task.description)} |"
                )
            if kind is TaskKind.UI_WIDGET and report.include_agent_ui:
                lines.append(f"| {AGENT_UI_NAME} | {_md_escape(AGENT_UI_DESCRIPTION)} |")
        else:
            lines.append("(none)")
        lines.append("")

    lines += ["## Scope", ""]
    if report.scope_in:
        lines.append("In-scope data sources: " + ", ".join(report.scope_in))
    else:
        lines.append("In-scope data sources: (none)")
    if report.scope_out:
        lines.append("Out-of-scope data sources: " + ", ".join(report.scope_out))
    else:
        lines.append("Out-of-scope data sources: (none)")
    lines.append("")

    if report.convergence:
        lines += [
            "## Convergence",
            "",
            "| Iteration | New accepted | Duplicates flagged | Rejected |",
            "| --- | --- | --- | --- |",
        ]
        for iteration_id, accepted, dupes, rejected in report.convergence:
            lines.append(f"| {iteration_id} | {accepted} | {dupes} | {rejected} |")
        lines.append("")

    if report.footnotes:
        lines += ["## Notes", ""]
        for note in report.footnotes:
            lines.append(f"- {note}")
        lines.append("")

    return "\n".join(lines)


def _render_csv(report: EffortReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind", "name", "description"])
    for task in report.raw_list:
        writer.writerow([task.kind.label, task.name, task.description])
    return buf.getvalue()


def _render_json(report: EffortReport) -> str:
    doc = {
        "counts": {kind.value: report.counts[kind] for kind in KIND_ORDER},
        "reported_ui": report.reported_ui,
        "include_agent_ui": report.include_agent_ui,
        "total": sum(report.counts.values()),
        "baseline": (
            None
            if report.baseline is None
            else {
                kind.value: {
                    "baseline": report.baseline.for_kind(kind),
                    "pipeline": report.reported_count(kind),
                    "delta": report.reported_count(kind) - report.baseline.for_kind(kind),
                }
                for kind in KIND_ORDER
            }
        ),
        "raw_list": [
            {
                "kind": t.kind.value,
                "name": t.name,
                "description": t.description,
                "status": t.status.value,
            }
            for t in report.raw_list
        ],
        "scope": {
            "in_scope": list(report.scope_in),
            "out_of_scope": list(report.scope_out),
        },
        "convergence": [
            {
                "iteration_id": iteration_id,
                "new_accepted": accepted,
                "duplicates_flagged": dupes,
                "rejected": rejected,
            }
            for iteration_id, accepted, dupes, rejected in report.convergence
        ],
        "finalized": report.finalized,
        "snapshot_hash": report.snapshot_hash,
        "footnotes": list(report.footnotes),
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n"
