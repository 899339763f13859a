"""Operator entry point binding the whole workflow.

Subcommands mirror the pipeline: init a session from a seed story, run an
iteration against a backend, review pending tasks (HTTP service or CSV
batch), report counts, finalize. Errors print one JSON object to stderr
and exit nonzero; the session stays valid and re-runnable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import contextmanager
from pathlib import Path

from . import engine as engine_mod
from . import llm_backend, prompts
from .domain import StorysizerError
from .engine import Engine, FixedClock, SessionConfig, SessionStore, SystemClock

CLOCK_ENV = "STORYSIZER_CLOCK"


class SessionLocked(StorysizerError):
    code = "SESSION_LOCKED"


def _clock():
    fixed = os.environ.get(CLOCK_ENV)
    return FixedClock(fixed) if fixed else SystemClock()


@contextmanager
def session_lock(session_path: Path):
    """One CLI invocation owns the session; concurrent writers are rejected."""
    lock_path = Path(str(session_path) + ".lock")
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise SessionLocked(
            f"session is locked by another invocation ({lock_path}); "
            "remove the lock file if that process is gone"
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        os.close(fd)
        yield
    finally:
        try:
            lock_path.unlink()
        except OSError:
            pass


def _read_text_file(path: str | None) -> str:
    if not path:
        return ""
    return Path(path).read_text(encoding="utf-8")


def _read_catalog(path: str | None) -> tuple[str, ...]:
    if not path:
        return ()
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line)
    return tuple(entries)


def _engine_for(args, *, need_backend: bool) -> Engine:
    store = SessionStore(args.session)
    session = store.load()
    templates = prompts.load_templates(session.config.prompts_dir)
    backend = None
    if need_backend:
        descriptor = getattr(args, "backend", None) or session.config.backend
        if not descriptor:
            raise llm_backend.BackendError(
                "no backend configured; pass --backend live:<url> | fixture:<path> | record:<path>"
            )
        session.config.backend = descriptor
        backend = llm_backend.make_backend(
            descriptor,
            metadata={
                "model_id": session.config.model_id,
                "recorded_at": _clock().now(),
                "template_versions": templates.versions,
            },
        )
    return Engine(session, store=store, backend=backend, templates=templates, clock=_clock())


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------


def cmd_init(args) -> dict:
    session_path = Path(args.session)
    config = SessionConfig(
        n_questions=args.n,
        threshold=args.threshold,
        minimize=not args.no_minimize,
        context=_read_text_file(args.context),
        backend=args.backend or "",
        prompts_dir=args.prompts_dir,
        catalog=_read_catalog(args.catalog),
    )
    config.template_versions = prompts.load_templates(args.prompts_dir).versions
    with session_lock(session_path):
        store = SessionStore(session_path)
        session = engine_mod.init_session(store, config, [args.story], clock=_clock())
    return {
        "session": str(session_path),
        "stories": [{"id": s.id, "text": s.text} for s in session.stories],
    }


def cmd_run(args) -> dict:
    with session_lock(Path(args.session)):
        engine = _engine_for(args, need_backend=True)
        if args.n is not None:
            engine.session.config.n_questions = args.n
        if args.no_minimize:
            engine.session.config.minimize = False
        decided = engine.session.decided_task_ids()
        eligible = [
            story.id
            for story in engine.session.stories
            if not any(
                it.story_id == story.id and it.status == engine_mod.ITERATION_AWAITING
                for it in engine.session.iterations
            )
        ]
        if args.story:
            eligible = [args.story]
        ran = []
        for story_id in eligible:
            iteration = engine.run_iteration(story_id)
            ran.append(
                {
                    "id": iteration.id,
                    "story_id": iteration.story_id,
                    "question_count": len(iteration.questions),
                    "task_count": len(iteration.task_ids),
                    "pending_count": len(iteration.pending_task_ids(decided)),
                    "duplicates_flagged": len(iteration.duplicate_candidates),
                    "warnings": list(iteration.warnings),
                }
            )
    return {"iterations": ran}


def cmd_review_serve(args) -> dict:
    from . import review_service

    static_dir = args.ui_dir
    if static_dir is None:
        repo_root = Path(__file__).resolve().parent.parent.parent
        bundled = repo_root / "frontend" / "dist"
        static_dir = bundled if bundled.is_dir() else None
    with session_lock(Path(args.session)):
        review_service.serve(
            args.session, port=args.port, clock=_clock(), static_dir=static_dir
        )
    return {}


def cmd_review_export(args) -> dict:
    from . import review_service

    store = SessionStore(args.session)
    count = review_service.export_pending(store.load(), args.out)
    return {"exported": count, "file": args.out}


def cmd_review_apply(args) -> dict:
    from . import review_service

    with session_lock(Path(args.session)):
        engine = _engine_for(args, need_backend=False)
        session = review_service.apply_pending(engine, getattr(args, "in"))
        counts = session.inventory().counts()
    return {
        "applied": True,
        "inventory_counts": {kind.value: counts[kind] for kind in counts},
    }


def cmd_report(args) -> dict | str:
    from . import review_service
    from .report import build_report, render

    store = SessionStore(args.session)
    session = store.load()
    baseline = review_service.parse_baseline(args.baseline) if args.baseline else None
    report = build_report(
        session, include_agent_ui=not args.no_agent_ui, baseline=baseline
    )
    fmt = {"md": "markdown", "csv": "csv", "json": "json"}[args.format]
    text = render(report, fmt)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        return {"written": args.out, "format": fmt}
    return text


def cmd_finalize(args) -> dict:
    with session_lock(Path(args.session)):
        engine = _engine_for(args, need_backend=False)
        digest = engine.finalize()
    return {"snapshot_hash": digest}


def cmd_fixtures_record(args) -> dict:
    """Run every eligible story against the live backend, recording all
    request/response pairs into a replayable fixture file."""
    with session_lock(Path(args.session)):
        args.backend = f"record:{args.out}"
        engine = _engine_for(args, need_backend=True)
        ran = []
        for story in engine.session.stories:
            busy = any(
                it.story_id == story.id and it.status == engine_mod.ITERATION_AWAITING
                for it in engine.session.iterations
            )
            if busy:
                continue
            iteration = engine.run_iteration(story.id)
            ran.append(iteration.id)
    return {"recorded_to": args.out, "iterations": ran}


# ----------------------------------------------------------------------
# Argument parsing
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storysizer",
        description="Expand seed user stories into validated, countable task inventories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a session from a seed story")
    p.add_argument("--session", required=True)
    p.add_argument("--story", required=True)
    p.add_argument("--context", help="file with background for the planner prompt")
    p.add_argument("--catalog", help="file with one known data source name per line")
    p.add_argument("--backend", help="live:<url> | fixture:<path> | record:<path>")
    p.add_argument("--prompts-dir", help="directory overriding the packaged templates")
    p.add_argument("--n", type=int, default=6, help="related questions per story")
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--no-minimize", action="store_true")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("run", help="run one iteration per eligible story")
    p.add_argument("--session", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--backend")
    p.add_argument("--story", help="run only this story id")
    p.add_argument("--no-minimize", action="store_true")
    p.set_defaults(func=cmd_run)

    review = sub.add_parser("review", help="validate pending tasks")
    review_sub = review.add_subparsers(dest="review_command", required=True)

    p = review_sub.add_parser("serve", help="serve the review API (and UI if built)")
    p.add_argument("--session", required=True)
    p.add_argument("--port", type=int, default=8642)
    p.add_argument("--ui-dir", help="static directory with the built web UI")
    p.set_defaults(func=cmd_review_serve)

    p = review_sub.add_parser("export", help="write pending tasks to a review CSV")
    p.add_argument("--session", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_review_export)

    p = review_sub.add_parser("apply", help="apply an edited review CSV")
    p.add_argument("--session", required=True)
    p.add_argument("--in", required=True)
    p.set_defaults(func=cmd_review_apply)

    p = sub.add_parser("report", help="render the effort report")
    p.add_argument("--session", required=True)
    p.add_argument("--format", choices=["md", "csv", "json"], required=True)
    p.add_argument("--no-agent-ui", action="store_true")
    p.add_argument("--baseline", help="manual counts as 'tables,algorithms,widgets'")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("finalize", help="freeze the session behind a snapshot hash")
    p.add_argument("--session", required=True)
    p.set_defaults(func=cmd_finalize)

    fixtures = sub.add_parser("fixtures", help="manage record/replay fixtures")
    fixtures_sub = fixtures.add_subparsers(dest="fixtures_command", required=True)
    p = fixtures_sub.add_parser(
        "record", help="run eligible stories live and record responses"
    )
    p.add_argument("--session", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixtures_record)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except StorysizerError as exc:
        print(
            json.dumps({"error": exc.code, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1
    except ValueError as exc:
        print(json.dumps({"error": "INVALID_ARGUMENT", "message": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "IO_ERROR", "message": str(exc)}), file=sys.stderr)
        return 1
    if isinstance(result, str):
        sys.stdout.write(result)
    elif result:
        print(json.dumps(result, ensure_ascii=False))
    return 0


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
