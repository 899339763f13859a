"""Human validation surfaces: a local HTTP API and a CSV batch mode.

Both routes translate verdicts into engine decisions, so they are
interchangeable: the same verdict set produces the same session file
either way. The API exists for the web UI; the batch file covers headless
runs and CI.
"""

from __future__ import annotations

import csv
import json
import threading
from pathlib import Path

from . import engine as engine_mod
from . import llm_backend, prompts
from .domain import StorysizerError, TaskKind
from .engine import (
    Clock,
    Decision,
    Engine,
    Session,
    SessionStore,
    task_status,
)
from .report import Baseline, build_report, render


class NothingPending(StorysizerError):
    code = "NOTHING_PENDING"


class ReviewFileError(StorysizerError):
    code = "REVIEW_FILE_ERROR"


class PortInUse(StorysizerError):
    code = "PORT_IN_USE"


REVIEW_HEADER = ["id", "kind", "name", "description", "verdict", "merge_target"]
VERDICTS = {"accept", "reject", "edit", "merge"}

DEFAULT_PORT = 8642


# ----------------------------------------------------------------------
# Batch mode
# ----------------------------------------------------------------------


def pending_tasks(session: Session) -> list:
    decided = session.decided_task_ids()
    out = []
    for iteration in session.iterations:
        if iteration.status != engine_mod.ITERATION_AWAITING:
            continue
        for task_id in iteration.pending_task_ids(decided):
            out.append(session.tasks[task_id])
    return out


def export_pending(session: Session, path: str | Path) -> int:
    """Write pending tasks to an editable review CSV; returns row count."""
    tasks = pending_tasks(session)
    if not tasks:
        raise NothingPending("no tasks awaiting validation")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REVIEW_HEADER)
        for task in tasks:
            writer.writerow(
                [task.id, task.kind.label, task.name, task.description, "", ""]
            )
    return len(tasks)


def parse_review_file(path: str | Path) -> list[dict]:
    """Parse an edited review CSV into verdict rows, collecting all errors."""
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise ReviewFileError(f"cannot read review file {path}: {exc}") from exc
    if not rows or [c.strip() for c in rows[0]] != REVIEW_HEADER:
        raise ReviewFileError(
            f"review file must start with header {','.join(REVIEW_HEADER)!r}"
        )
    parsed: list[dict] = []
    errors: list[str] = []
    for row_no, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(REVIEW_HEADER):
            errors.append(f"row {row_no}: expected {len(REVIEW_HEADER)} columns, got {len(row)}")
            continue
        record = dict(zip(REVIEW_HEADER, (cell.strip() for cell in row)))
        verdict = record["verdict"].lower()
        if verdict not in VERDICTS:
            errors.append(
                f"row {row_no}: verdict must be one of {sorted(VERDICTS)}, got {record['verdict']!r}"
            )
            continue
        if verdict == "merge" and not record["merge_target"]:
            errors.append(f"row {row_no}: merge verdict needs a merge_target")
            continue
        record["verdict"] = verdict
        parsed.append(record)
    if errors:
        raise ReviewFileError("; ".join(errors))
    if not parsed:
        raise ReviewFileError("review file contains no verdict rows")
    return parsed


def decisions_from_rows(
    rows: list[dict], clock: Clock, actor: str = "human"
) -> list[Decision]:
    decisions = []
    for row in rows:
        verdict = row["verdict"]
        payload = None
        if verdict == "edit":
            payload = {
                "kind": row["kind"],
                "name": row["name"],
                "description": row["description"],
            }
        elif verdict == "merge":
            payload = {"into": row["merge_target"]}
        decisions.append(
            Decision(
                task_id=row["id"],
                verdict=verdict,
                payload=payload,
                actor=actor,
                at=clock.now(),
            )
        )
    return decisions


def apply_pending(engine: Engine, path: str | Path, actor: str = "human") -> Session:
    """Apply an edited review file all-or-nothing via the engine."""
    rows = parse_review_file(path)
    decisions = decisions_from_rows(rows, engine.clock, actor)
    return engine.apply_decisions(decisions)


# ----------------------------------------------------------------------
# HTTP API
# ----------------------------------------------------------------------

_STATUS_BY_CODE = {
    "UNKNOWN_TASK": 404,
    "UNKNOWN_STORY": 404,
    "UNKNOWN_ITERATION": 404,
    "DOUBLE_DECISION": 409,
    "KEY_COLLISION": 409,
    "ITERATION_PENDING": 409,
    "UNVALIDATED_ITERATIONS": 409,
    "SESSION_FROZEN": 409,
    "NOTHING_PENDING": 409,
    "MERGE_TARGET_MISSING": 422,
    "INVALID_DECISION": 422,
    "REVIEW_FILE_ERROR": 422,
    "TEMPLATE_ERROR": 422,
    "EMPTY_NAME": 422,
    "UNKNOWN_KIND_LABEL": 422,
}


def _session_payload(session: Session) -> dict:
    decided = session.decided_task_ids()
    counts = session.inventory().counts()
    stats = {s.iteration_id: s for s in engine_mod.convergence_stats(session)}
    iterations = []
    for it in session.iterations:
        s = stats[it.id]
        iterations.append(
            {
                "id": it.id,
                "story_id": it.story_id,
                "status": it.status,
                "question_count": len(it.questions),
                "task_count": len(it.task_ids),
                "pending_count": len(it.pending_task_ids(decided)),
                "new_accepted": s.new_accepted,
                "duplicates_flagged": s.duplicates_flagged,
                "rejected": s.rejected,
                "warnings": list(it.warnings),
            }
        )
    return {
        "config": {
            "n_questions": session.config.n_questions,
            "threshold": session.config.threshold,
            "minimize": session.config.minimize,
            "backend": session.config.backend,
            "model_id": session.config.model_id,
            "template_versions": session.config.template_versions,
        },
        "stories": [
            {"id": s.id, "text": s.text, "created_at": s.created_at}
            for s in session.stories
        ],
        "iterations": iterations,
        "inventory_counts": {
            "data_source": counts[TaskKind.DATA_SOURCE],
            "algorithm": counts[TaskKind.ALGORITHM],
            "ui_widget": counts[TaskKind.UI_WIDGET],
            "total": len(session.inventory_entries),
        },
        "finalized": session.finalized is not None,
        "snapshot_hash": (session.finalized or {}).get("snapshot_hash"),
        "can_finalize": (
            session.finalized is None
            and all(
                it.status == engine_mod.ITERATION_VALIDATED
                for it in session.iterations
            )
            and bool(session.iterations)
        ),
    }


def _pending_payload(session: Session, iteration_id: str) -> dict:
    iteration = session.iteration(iteration_id)
    if iteration is None:
        raise engine_mod.UnknownIteration(f"no such iteration: {iteration_id}")
    decided = session.decided_task_ids()
    questions = {q.id: q.text for q in iteration.questions}
    hints_by_task: dict[str, list] = {}
    for cand in iteration.duplicate_candidates:
        hints_by_task.setdefault(cand.new_task_id, []).append(cand)
    pending = []
    for task_id in iteration.pending_task_ids(decided):
        task = session.tasks[task_id]
        hints = []
        for cand in hints_by_task.get(task_id, []):
            existing = session.tasks.get(cand.existing_task_id)
            inv_entry = next(
                (t for t in session.inventory_entries if t.id == cand.existing_task_id),
                None,
            )
            summary = inv_entry or existing
            existing_status, _ = task_status(session, cand.existing_task_id)
            hints.append(
                {
                    "existing_task_id": cand.existing_task_id,
                    "existing_name": summary.name if summary else None,
                    "existing_kind": summary.kind.value if summary else None,
                    "existing_description": summary.description if summary else None,
                    "existing_status": existing_status.value,
                    "score": cand.score,
                    "basis": cand.basis,
                }
            )
        pending.append(
            {
                "id": task.id,
                "kind": task.kind.value,
                "kind_label": task.kind.label,
                "name": task.name,
                "description": task.description,
                "origin_questions": [
                    questions[qid] for qid in task.origin_question_ids if qid in questions
                ],
                "duplicate_hints": hints,
            }
        )
    return {"iteration_id": iteration_id, "pending": pending}


def create_app(
    session_path: str | Path,
    *,
    clock: Clock | None = None,
    static_dir: str | Path | None = None,
):
    """Build the FastAPI app for one session file.

    FastAPI is imported here, not at module top, so CLI paths that never
    serve HTTP do not pay the import.
    """
    from fastapi import Body, FastAPI, Header, Query, Request
    from fastapi.responses import JSONResponse

    store = SessionStore(session_path)
    if not store.exists():
        raise engine_mod.SessionCorrupt(f"session file not found: {session_path}")
    session = store.load()  # raises SessionCorrupt before any socket is bound

    clock = clock or engine_mod.SystemClock()
    app = FastAPI(title="storysizer review service")
    state = {
        "engine": Engine(session, store=store, clock=clock),
        "lock": threading.Lock(),
        "idempotency": {},
    }
    app.state.review = state

    def _engine() -> Engine:
        return state["engine"]

    def _ensure_runtime(engine: Engine) -> None:
        if engine.backend is None:
            descriptor = engine.session.config.backend
            if not descriptor:
                raise llm_backend.BackendError(
                    "session config has no backend descriptor; run the CLI with --backend first"
                )
            engine.backend = llm_backend.make_backend(descriptor)
        if engine.templates is None:
            engine.templates = prompts.load_templates(engine.session.config.prompts_dir)

    @app.exception_handler(StorysizerError)
    async def _domain_error(request: Request, exc: StorysizerError):
        if isinstance(exc, llm_backend.BackendError):
            status = 502
        else:
            status = _STATUS_BY_CODE.get(exc.code, 400)
        return JSONResponse(
            status_code=status, content={"error": exc.code, "message": str(exc)}
        )

    def _idempotent(key: str | None, endpoint: str, compute):
        """Replay the stored response for a repeated Idempotency-Key."""
        if key:
            hit = state["idempotency"].get((endpoint, key))
            if hit is not None:
                return hit
        response = compute()
        if key:
            state["idempotency"][(endpoint, key)] = response
        return response

    @app.get("/api/v1/session")
    def get_session():
        return _session_payload(_engine().session)

    @app.get("/api/v1/iterations/{iteration_id}/pending")
    def get_pending(iteration_id: str):
        return _pending_payload(_engine().session, iteration_id)

    @app.post("/api/v1/decisions")
    def post_decisions(
        decisions: list[dict] = Body(...),
        idempotency_key: str | None = Header(default=None, alias="Idempotency-Key"),
    ):
        def compute():
            with state["lock"]:
                engine = _engine()
                batch = []
                for item in decisions:
                    if "task_id" not in item or "verdict" not in item:
                        raise engine_mod.InvalidDecision(
                            "each decision needs task_id and verdict"
                        )
                    batch.append(
                        Decision(
                            task_id=item["task_id"],
                            verdict=str(item["verdict"]).lower(),
                            payload=item.get("payload"),
                            actor=item.get("actor", "human"),
                            at=clock.now(),
                        )
                    )
                updated = engine.apply_decisions(batch)
                counts = updated.inventory().counts()
                return {
                    "applied": len(batch),
                    "inventory_counts": {
                        "data_source": counts[TaskKind.DATA_SOURCE],
                        "algorithm": counts[TaskKind.ALGORITHM],
                        "ui_widget": counts[TaskKind.UI_WIDGET],
                        "total": len(updated.inventory_entries),
                    },
                }

        return _idempotent(idempotency_key, "decisions", compute)

    @app.post("/api/v1/iterations")
    def post_iteration(
        body: dict = Body(...),
        idempotency_key: str | None = Header(default=None, alias="Idempotency-Key"),
    ):
        def compute():
            with state["lock"]:
                engine = _engine()
                story_id = body.get("story_id")
                if not story_id:
                    raise engine_mod.UnknownStory("body must carry story_id")
                _ensure_runtime(engine)
                iteration = engine.run_iteration(story_id)
                return {
                    "id": iteration.id,
                    "story_id": iteration.story_id,
                    "question_count": len(iteration.questions),
                    "task_count": len(iteration.task_ids),
                    "duplicates_flagged": len(iteration.duplicate_candidates),
                    "warnings": list(iteration.warnings),
                }

        return _idempotent(idempotency_key, "iterations", compute)

    @app.get("/api/v1/report")
    def get_report(
        format: str = Query(default="json"),
        agent_ui: bool = Query(default=True),
        baseline: str | None = Query(default=None),
    ):
        if format != "json":
            raise ReviewFileError("only format=json is served over the API")
        parsed_baseline = None
        if baseline:
            parsed_baseline = parse_baseline(baseline)
        report = build_report(
            _engine().session,
            include_agent_ui=agent_ui,
            baseline=parsed_baseline,
        )
        return json.loads(render(report, "json"))

    @app.post("/api/v1/finalize")
    def post_finalize(
        idempotency_key: str | None = Header(default=None, alias="Idempotency-Key"),
    ):
        def compute():
            with state["lock"]:
                digest = _engine().finalize()
                return {"snapshot_hash": digest}

        return _idempotent(idempotency_key, "finalize", compute)

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def parse_baseline(text: str) -> Baseline:
    """Parse 'T,A,W' (tables, algorithms, widgets) into a Baseline."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3 or not all(p.lstrip("-").isdigit() for p in parts):
        raise ReviewFileError(
            f"baseline must be three comma-separated integers, got {text!r}"
        )
    return Baseline(
        data_sources=int(parts[0]), algorithms=int(parts[1]), ui_widgets=int(parts[2])
    )


def serve(
    session_path: str | Path,
    port: int = DEFAULT_PORT,
    host: str = "127.0.0.1",
    clock: Clock | None = None,
    static_dir: str | Path | None = None,
) -> None:
    """Run the review API on loopback until interrupted."""
    import socket

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        raise PortInUse(f"cannot bind {host}:{port}: {exc}") from exc
    finally:
        probe.close()

    app = create_app(session_path, clock=clock, static_dir=static_dir)

    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="warning")
