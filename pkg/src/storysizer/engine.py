"""Pipeline orchestration and durable session state.

A session is one JSON document: config, seed stories, iterations, the
pristine parsed tasks, an append-only decision log, and the materialized
inventory. Tasks are stored exactly as parsed; human decisions live only
in the log plus the inventory they build, so replaying the log from an
empty inventory must reproduce the stored one (and tests do exactly that).

The session is single-writer: every mutation goes through an Engine, each
operation stages its changes on a copy and commits with one atomic write.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Protocol, Sequence

from . import dedup, parser, prompts
from .dedup import DuplicateCandidate
from .domain import (
    Inventory,
    KeyCollision,
    StorysizerError,
    Task,
    TaskKind,
    TaskStatus,
    UserStory,
    normalize_task_name,
    task_kind_from_label,
)
from .llm_backend import CompletionBackend, CompletionRequest
from .prompts import TemplateSet

SCHEMA_VERSION = 1

VERDICTS = ("accept", "reject", "edit", "merge")


class UnknownTask(StorysizerError):
    code = "UNKNOWN_TASK"


class UnknownStory(StorysizerError):
    code = "UNKNOWN_STORY"


class UnknownIteration(StorysizerError):
    code = "UNKNOWN_ITERATION"


class DoubleDecision(StorysizerError):
    code = "DOUBLE_DECISION"


class InvalidDecision(StorysizerError):
    code = "INVALID_DECISION"


class MergeTargetMissing(StorysizerError):
    code = "MERGE_TARGET_MISSING"


class UnvalidatedIterations(StorysizerError):
    code = "UNVALIDATED_ITERATIONS"


class IterationPending(StorysizerError):
    code = "ITERATION_PENDING"


class SessionFrozen(StorysizerError):
    code = "SESSION_FROZEN"


class SessionCorrupt(StorysizerError):
    code = "SESSION_CORRUPT"


class SessionExists(StorysizerError):
    code = "SESSION_EXISTS"


class Clock(Protocol):
    def now(self) -> str: ...


class SystemClock:
    def now(self) -> str:
        return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class FixedClock:
    """Injectable clock for reproducible sessions and tests."""

    def __init__(self, at: str = "2024-01-01T00:00:00Z") -> None:
        self.at = at

    def now(self) -> str:
        return self.at


@dataclass
class SessionConfig:
    n_questions: int = 6
    threshold: float = dedup.DEFAULT_THRESHOLD
    minimize: bool = True
    context: str = ""
    baseline_tools: tuple[str, ...] = prompts.DEFAULT_BASELINE_TOOLS
    backend: str = ""
    prompts_dir: str | None = None
    template_versions: dict[str, str] = field(default_factory=dict)
    catalog: tuple[str, ...] = ()
    model_id: str = "gpt-4"
    temperature: float = 0.0
    max_tokens: int = 2048

    def __post_init__(self) -> None:
        if self.n_questions < 0:
            raise ValueError("n_questions must be >= 0")
        if not 0 < self.threshold <= 1:
            raise ValueError("threshold must be in (0, 1]")


@dataclass
class Question:
    id: str
    text: str
    seed: bool = False


ITERATION_AWAITING = "awaiting_validation"
ITERATION_VALIDATED = "validated"


@dataclass
class Iteration:
    id: str
    story_id: str
    questions: list[Question]
    planner_prompt_hash: str
    task_ids: list[str]
    duplicate_candidates: list[DuplicateCandidate]
    status: str = ITERATION_AWAITING
    warnings: list[str] = field(default_factory=list)

    def pending_task_ids(self, decided: set[str]) -> list[str]:
        return [tid for tid in self.task_ids if tid not in decided]


@dataclass(frozen=True)
class Decision:
    """One human verdict on one pending task."""

    task_id: str
    verdict: str
    payload: dict | None
    actor: str
    at: str


@dataclass(frozen=True)
class IterationStats:
    iteration_id: str
    new_accepted: int
    duplicates_flagged: int
    rejected: int


@dataclass
class Session:
    config: SessionConfig
    schema_version: int = SCHEMA_VERSION
    id_counter: int = 0
    stories: list[UserStory] = field(default_factory=list)
    iterations: list[Iteration] = field(default_factory=list)
    tasks: dict[str, Task] = field(default_factory=dict)
    inventory_entries: list[Task] = field(default_factory=list)
    decision_log: list[Decision] = field(default_factory=list)
    failed_attempts: list[dict] = field(default_factory=list)
    finalized: dict | None = None

    # ------------------------------------------------------------------
    # Lookup helpers
    # ------------------------------------------------------------------

    def next_id(self, prefix: str) -> str:
        self.id_counter += 1
        return f"{prefix}-{self.id_counter:04d}"

    def story(self, story_id: str) -> UserStory | None:
        for story in self.stories:
            if story.id == story_id:
                return story
        return None

    def iteration(self, iteration_id: str) -> Iteration | None:
        for it in self.iterations:
            if it.id == iteration_id:
                return it
        return None

    def iteration_of_task(self, task_id: str) -> Iteration | None:
        for it in self.iterations:
            if task_id in it.task_ids:
                return it
        return None

    def decided_task_ids(self) -> set[str]:
        return {d.task_id for d in self.decision_log}

    def inventory(self) -> Inventory:
        return Inventory(tuple(self.inventory_entries))

    def question(self, question_id: str) -> Question | None:
        for it in self.iterations:
            for q in it.questions:
                if q.id == question_id:
                    return q
        return None

    # ------------------------------------------------------------------
    # Serialization (stable key order, schema versioned)
    # ------------------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "schema_version": self.schema_version,
            "id_counter": self.id_counter,
            "config": {
                "n_questions": self.config.n_questions,
                "threshold": self.config.threshold,
                "minimize": self.config.minimize,
                "context": self.config.context,
                "baseline_tools": list(self.config.baseline_tools),
                "backend": self.config.backend,
                "prompts_dir": self.config.prompts_dir,
                "template_versions": self.config.template_versions,
                "catalog": list(self.config.catalog),
                "model_id": self.config.model_id,
                "temperature": self.config.temperature,
                "max_tokens": self.config.max_tokens,
            },
            "stories": [
                {"id": s.id, "text": s.text, "created_at": s.created_at}
                for s in self.stories
            ],
            "iterations": [
                {
                    "id": it.id,
                    "story_id": it.story_id,
                    "questions": [
                        {"id": q.id, "text": q.text, "seed": q.seed}
                        for q in it.questions
                    ],
                    "planner_prompt_hash": it.planner_prompt_hash,
                    "task_ids": list(it.task_ids),
                    "duplicate_candidates": [
                        {
                            "new_task_id": c.new_task_id,
                            "existing_task_id": c.existing_task_id,
                            "score": c.score,
                            "basis": c.basis,
                        }
                        for c in it.duplicate_candidates
                    ],
                    "status": it.status,
                    "warnings": list(it.warnings),
                }
                for it in self.iterations
            ],
            "tasks": {tid: _task_to_dict(t) for tid, t in self.tasks.items()},
            "inventory": [_task_to_dict(t) for t in self.inventory_entries],
            "decision_log": [
                {
                    "task_id": d.task_id,
                    "verdict": d.verdict,
                    "payload": d.payload,
                    "actor": d.actor,
                    "at": d.at,
                }
                for d in self.decision_log
            ],
            "failed_attempts": self.failed_attempts,
            "finalized": self.finalized,
        }
        return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Session":
        try:
            doc = json.loads(text)
            if doc.get("schema_version") != SCHEMA_VERSION:
                raise ValueError(f"unsupported schema_version: {doc.get('schema_version')}")
            cfg = doc["config"]
            config = SessionConfig(
                n_questions=cfg["n_questions"],
                threshold=cfg["threshold"],
                minimize=cfg["minimize"],
                context=cfg["context"],
                baseline_tools=tuple(cfg["baseline_tools"]),
                backend=cfg["backend"],
                prompts_dir=cfg["prompts_dir"],
                template_versions=dict(cfg["template_versions"]),
                catalog=tuple(cfg["catalog"]),
                model_id=cfg["model_id"],
                temperature=cfg["temperature"],
                max_tokens=cfg["max_tokens"],
            )
            session = cls(config=config, id_counter=doc["id_counter"])
            session.stories = [
                UserStory(id=s["id"], text=s["text"], created_at=s["created_at"])
                for s in doc["stories"]
            ]
            session.iterations = [
                Iteration(
                    id=it["id"],
                    story_id=it["story_id"],
                    questions=[
                        Question(id=q["id"], text=q["text"], seed=q["seed"])
                        for q in it["questions"]
                    ],
                    planner_prompt_hash=it["planner_prompt_hash"],
                    task_ids=list(it["task_ids"]),
                    duplicate_candidates=[
                        DuplicateCandidate(
                            new_task_id=c["new_task_id"],
                            existing_task_id=c["existing_task_id"],
                            score=c["score"],
                            basis=c["basis"],
                        )
                        for c in it["duplicate_candidates"]
                    ],
                    status=it["status"],
                    warnings=list(it["warnings"]),
                )
                for it in doc["iterations"]
            ]
            session.tasks = {
                tid: _task_from_dict(t) for tid, t in doc["tasks"].items()
            }
            session.inventory_entries = [_task_from_dict(t) for t in doc["inventory"]]
            session.decision_log = [
                Decision(
                    task_id=d["task_id"],
                    verdict=d["verdict"],
                    payload=d["payload"],
                    actor=d["actor"],
                    at=d["at"],
                )
                for d in doc["decision_log"]
            ]
            session.failed_attempts = list(doc["failed_attempts"])
            session.finalized = doc["finalized"]
            return session
        except (KeyError, TypeError, ValueError) as exc:
            raise SessionCorrupt(f"cannot parse session: {exc}") from exc


def _task_to_dict(t: Task) -> dict:
    return {
        "id": t.id,
        "kind": t.kind.value,
        "name": t.name,
        "raw_name": t.raw_name,
        "description": t.description,
        "origin_question_ids": list(t.origin_question_ids),
        "origin_story_id": t.origin_story_id,
        "status": t.status.value,
        "merged_into": t.merged_into,
        "merged_from": list(t.merged_from),
    }


def _task_from_dict(d: dict) -> Task:
    return Task(
        id=d["id"],
        kind=TaskKind(d["kind"]),
        name=d["name"],
        raw_name=d["raw_name"],
        description=d["description"],
        origin_question_ids=tuple(d["origin_question_ids"]),
        origin_story_id=d["origin_story_id"],
        status=TaskStatus(d["status"]),
        merged_into=d["merged_into"],
        merged_from=tuple(d["merged_from"]),
    )


def snapshot_hash(session: Session) -> str:
    """Lowercase hex digest of the canonicalized inventory serialization."""
    canonical = json.dumps(
        [
            {"id": t.id, "kind": t.kind.value, "name": t.name, "description": t.description}
            for t in session.inventory_entries
        ],
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class SessionStore:
    """Durable session persistence: one JSON file, atomic replace on save.

    ``after_write`` is a test hook invoked after each durable write; crash
    safety tests raise from it to simulate a kill at every commit point.
    """

    def __init__(
        self,
        path: str | Path,
        after_write: Callable[[Path], None] | None = None,
    ) -> None:
        self.path = Path(path)
        self.after_write = after_write

    def exists(self) -> bool:
        return self.path.exists()

    def load(self) -> Session:
        try:
            text = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise SessionCorrupt(f"cannot read session file {self.path}: {exc}") from exc
        return Session.from_json(text)

    def save(self, session: Session) -> None:
        tmp = self.path.with_name(self.path.name + ".tmp")
        data = session.to_json().encode("utf-8")
        fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o644)
        try:
            os.write(fd, data)
            os.fsync(fd)
        finally:
            os.close(fd)
        os.replace(tmp, self.path)
        if self.after_write is not None:
            self.after_write(self.path)


def init_session(
    store: SessionStore,
    config: SessionConfig,
    story_texts: Sequence[str],
    clock: Clock | None = None,
) -> Session:
    """Create and persist a fresh session seeded with one or more stories."""
    if store.exists():
        raise SessionExists(f"session file already exists: {store.path}")
    clock = clock or SystemClock()
    session = Session(config=config)
    for text in story_texts:
        session.stories.append(
            UserStory(id=session.next_id("story"), text=text, created_at=clock.now())
        )
    store.save(session)
    return session


class Engine:
    """Single writer for one session: plans iterations, applies decisions,
    finalizes, and persists after every mutation."""

    def __init__(
        self,
        session: Session,
        store: SessionStore,
        backend: CompletionBackend | None = None,
        templates: TemplateSet | None = None,
        clock: Clock | None = None,
    ) -> None:
        self.session = session
        self.store = store
        self.backend = backend
        self.templates = templates
        self.clock = clock or SystemClock()

    # ------------------------------------------------------------------
    # Stories
    # ------------------------------------------------------------------

    def add_story(self, text: str) -> UserStory:
        if self.session.finalized:
            raise SessionFrozen("session is finalized")
        story = UserStory(
            id=self.session.next_id("story"), text=text, created_at=self.clock.now()
        )
        self.session.stories.append(story)
        self.store.save(self.session)
        return story

    # ------------------------------------------------------------------
    # Iterations
    # ------------------------------------------------------------------

    def run_iteration(self, story_id: str) -> Iteration:
        """Expand one story into questions, plan tasks, flag duplicates.

        On backend or parse failure the session is left unchanged except a
        logged failed-attempt record; a successful iteration is durably
        written before returning.
        """
        if self.backend is None or self.templates is None:
            raise StorysizerError("engine needs a backend and templates to run iterations")
        session = self.session
        if session.finalized:
            raise SessionFrozen("session is finalized")
        story = session.story(story_id)
        if story is None:
            raise UnknownStory(f"no such story: {story_id}")
        for it in session.iterations:
            if it.story_id == story_id and it.status == ITERATION_AWAITING:
                raise IterationPending(
                    f"iteration {it.id} for story {story_id} is awaiting validation"
                )
        work = copy.deepcopy(session)
        try:
            iteration = self._plan(work, work.story(story_id))
        except StorysizerError as exc:
            session.failed_attempts.append(
                {
                    "at": self.clock.now(),
                    "story_id": story_id,
                    "error": exc.code,
                    "detail": str(exc),
                }
            )
            self.store.save(session)
            raise
        work.iterations.append(iteration)
        self.session = work
        self.store.save(work)
        return iteration

    def _plan(self, work: Session, story: UserStory) -> Iteration:
        cfg = work.config
        cfg.template_versions = self.templates.versions
        warnings: list[str] = []
        questions = [Question(id=work.next_id("q"), text=story.text, seed=True)]

        if cfg.n_questions > 0:
            question_prompt = prompts.render_question_prompt(
                self.templates.question_gen, story, cfg.n_questions, cfg.context
            )
            generated_text = self._complete(question_prompt, cfg)
            report = parser.parse_question_list(generated_text)
            generated = list(report.parsed)
            if len(generated) < cfg.n_questions:
                warnings.append(
                    f"question generator produced {len(generated)} of "
                    f"{cfg.n_questions} requested questions"
                )
            # Over-production is truncated so |questions| stays 1 + N.
            for text in generated[: cfg.n_questions]:
                questions.append(Question(id=work.next_id("q"), text=text))

        inventory = work.inventory()
        planner_prompt = prompts.render_planner_prompt(
            self.templates.planner,
            [q.text for q in questions],
            inventory,
            cfg.context,
            cfg.minimize,
            cfg.baseline_tools,
        )
        planner_text = self._complete(planner_prompt, cfg)
        report = parser.parse_planner_csv(planner_text)
        for line_no, reason in report.skipped:
            warnings.append(f"planner output line {line_no} skipped: {reason}")

        question_ids = tuple(q.id for q in questions)
        tasks: list[Task] = []
        for raw in report.parsed:
            try:
                task = parser.raw_to_task(
                    raw,
                    task_id=work.next_id("task"),
                    origin_question_ids=question_ids,
                    origin_story_id=story.id,
                )
            except StorysizerError as exc:
                warnings.append(f"planner output line {raw.source_line} dropped: {exc}")
                continue
            tasks.append(task)
        if not tasks:
            raise parser.EmptyOutput("planner output produced no usable tasks")

        candidates = dedup.find_duplicates(tasks, inventory, cfg.threshold)
        for task in tasks:
            work.tasks[task.id] = task
        return Iteration(
            id=work.next_id("iter"),
            story_id=story.id,
            questions=questions,
            planner_prompt_hash=hashlib.sha256(planner_prompt.encode("utf-8")).hexdigest(),
            task_ids=[t.id for t in tasks],
            duplicate_candidates=candidates,
            warnings=warnings,
        )

    def _complete(self, prompt: str, cfg: SessionConfig) -> str:
        request = CompletionRequest(
            prompt=prompt,
            model_id=cfg.model_id,
            temperature=cfg.temperature,
            max_tokens=cfg.max_tokens,
        )
        return self.backend.complete(request)

    # ------------------------------------------------------------------
    # Decisions
    # ------------------------------------------------------------------

    def apply_decisions(self, decisions: Sequence[Decision]) -> Session:
        """Apply a batch of verdicts all-or-nothing.

        Any error leaves the stored session untouched; on success the
        updated session is durably written exactly once.
        """
        if self.session.finalized:
            raise SessionFrozen("session is finalized")
        work = copy.deepcopy(self.session)
        decided = work.decided_task_ids()
        for decision in decisions:
            self._apply_one(work, decision, decided)
        for it in work.iterations:
            if it.status == ITERATION_AWAITING and not it.pending_task_ids(decided):
                it.status = ITERATION_VALIDATED
        self.session = work
        self.store.save(work)
        return work

    def _apply_one(self, work: Session, decision: Decision, decided: set[str]) -> None:
        if decision.verdict not in VERDICTS:
            raise InvalidDecision(f"unknown verdict: {decision.verdict!r}")
        base = work.tasks.get(decision.task_id)
        if base is None:
            raise UnknownTask(f"no such task: {decision.task_id}")
        if decision.task_id in decided:
            raise DoubleDecision(f"task already decided: {decision.task_id}")

        if decision.verdict == "accept":
            self._insert(work, replace(base, status=TaskStatus.ACCEPTED))
        elif decision.verdict == "reject":
            pass
        elif decision.verdict == "edit":
            payload = decision.payload or {}
            edited = replace(
                base,
                kind=_kind_from_payload(payload.get("kind"), base.kind),
                name=(
                    normalize_task_name(payload["name"])
                    if payload.get("name")
                    else base.name
                ),
                description=payload.get("description") or base.description,
                status=TaskStatus.EDITED,
            )
            self._insert(work, edited)
        elif decision.verdict == "merge":
            target_id = (decision.payload or {}).get("into")
            if not target_id:
                raise MergeTargetMissing("merge verdict needs payload.into")
            index = next(
                (i for i, t in enumerate(work.inventory_entries) if t.id == target_id),
                None,
            )
            if index is None:
                raise MergeTargetMissing(
                    f"merge target {target_id} is not an accepted inventory task"
                )
            target = work.inventory_entries[index]
            work.inventory_entries[index] = replace(
                target, merged_from=target.merged_from + (base.id,)
            )

        decided.add(decision.task_id)
        work.decision_log.append(decision)

    def _insert(self, work: Session, task: Task) -> None:
        for existing in work.inventory_entries:
            if existing.kind is task.kind and existing.name == task.name:
                raise KeyCollision(task.kind, task.name)
        work.inventory_entries.append(task)

    # ------------------------------------------------------------------
    # Finalization
    # ------------------------------------------------------------------

    def finalize(self, actor: str = "human") -> str:
        """Freeze the session behind one signed-off inventory snapshot.

        Idempotent: finalizing twice returns the same hash.
        """
        if self.session.finalized:
            return self.session.finalized["snapshot_hash"]
        awaiting = [
            it.id for it in self.session.iterations if it.status == ITERATION_AWAITING
        ]
        if awaiting:
            raise UnvalidatedIterations(
                f"iterations awaiting validation: {', '.join(awaiting)}"
            )
        digest = snapshot_hash(self.session)
        work = copy.deepcopy(self.session)
        work.finalized = {
            "at": self.clock.now(),
            "actor": actor,
            "snapshot_hash": digest,
        }
        self.session = work
        self.store.save(work)
        return digest

    # ------------------------------------------------------------------
    # Derived views
    # ------------------------------------------------------------------

    def convergence_stats(self) -> list[IterationStats]:
        return convergence_stats(self.session)


def _kind_from_payload(label: str | None, default: TaskKind) -> TaskKind:
    if not label:
        return default
    try:
        return TaskKind(label)
    except ValueError:
        return task_kind_from_label(label)


def convergence_stats(session: Session) -> list[IterationStats]:
    """Per-iteration (new_accepted, duplicates_flagged, rejected).

    Accept and edit verdicts insert exactly one inventory task each, so
    new_accepted sums to the inventory size; merges add nothing new.
    """
    task_to_iteration = {
        tid: it.id for it in session.iterations for tid in it.task_ids
    }
    accepted: dict[str, int] = {it.id: 0 for it in session.iterations}
    rejected: dict[str, int] = {it.id: 0 for it in session.iterations}
    for decision in session.decision_log:
        iteration_id = task_to_iteration.get(decision.task_id)
        if iteration_id is None:
            continue
        if decision.verdict in ("accept", "edit"):
            accepted[iteration_id] += 1
        elif decision.verdict == "reject":
            rejected[iteration_id] += 1
    return [
        IterationStats(
            iteration_id=it.id,
            new_accepted=accepted[it.id],
            duplicates_flagged=len(it.duplicate_candidates),
            rejected=rejected[it.id],
        )
        for it in session.iterations
    ]


def replay_inventory(session: Session) -> tuple[Task, ...]:
    """Rebuild the inventory from pristine tasks plus the decision log.

    This is the event-sourcing check: the result must equal the stored
    ``inventory_entries`` exactly.
    """
    members: list[Task] = []

    def insert(task: Task) -> None:
        for existing in members:
            if existing.kind is task.kind and existing.name == task.name:
                raise KeyCollision(task.kind, task.name)
        members.append(task)

    for decision in session.decision_log:
        base = session.tasks.get(decision.task_id)
        if base is None:
            raise SessionCorrupt(f"decision log references unknown task {decision.task_id}")
        if decision.verdict == "accept":
            insert(replace(base, status=TaskStatus.ACCEPTED))
        elif decision.verdict == "edit":
            payload = decision.payload or {}
            insert(
                replace(
                    base,
                    kind=_kind_from_payload(payload.get("kind"), base.kind),
                    name=(
                        normalize_task_name(payload["name"])
                        if payload.get("name")
                        else base.name
                    ),
                    description=payload.get("description") or base.description,
                    status=TaskStatus.EDITED,
                )
            )
        elif decision.verdict == "merge":
            target_id = (decision.payload or {}).get("into")
            index = next((i for i, t in enumerate(members) if t.id == target_id), None)
            if index is None:
                raise SessionCorrupt(f"merge target {target_id} missing during replay")
            target = members[index]
            members[index] = replace(
                target, merged_from=target.merged_from + (base.id,)
            )
    return tuple(members)


def task_status(session: Session, task_id: str) -> tuple[TaskStatus, str | None]:
    """Current status of a task, derived from the decision log."""
    for decision in session.decision_log:
        if decision.task_id != task_id:
            continue
        if decision.verdict == "accept":
            return TaskStatus.ACCEPTED, None
        if decision.verdict == "reject":
            return TaskStatus.REJECTED, None
        if decision.verdict == "edit":
            return TaskStatus.EDITED, None
        if decision.verdict == "merge":
            return TaskStatus.MERGED, (decision.payload or {}).get("into")
    return TaskStatus.PENDING, None
