"""Shared fixtures: the pizza replay scenario, fixed clocks, scenario drivers."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE_PATH = REPO_ROOT / "fixtures" / "pizza_order.json"
GOLDEN_DIR = Path(__file__).resolve().parent / "goldens"
MALFORMED_DIR = Path(__file__).resolve().parent / "data" / "malformed"

sys.path.insert(0, str(REPO_ROOT / "scripts"))

PIZZA_STORY = "I want to order a gourmet Margherita pizza in 20 minutes."

# The six generated questions of the reference scenario, in order.
PIZZA_QUESTIONS = [
    "Can you provide a list of nearby pizzerias that offer gourmet Margherita pizzas with an estimated delivery time of 20 minutes or less?",
    "Are there any ongoing promotions or discounts for a Margherita gourmet pizza available for quick delivery?",
    "What are the options for customizing a Margherita gourmet pizza, such as crust type or cheese options, while still ensuring a 20-minute delivery?",
    "Can you recommend the top-rated restaurant for a gourmet Margherita pizza based on user reviews and delivery speed?",
    "Are there any minimum order requirements or additional fees associated with ordering a single Margherita gourmet pizza for quick delivery?",
    "Can you filter the restaurant search?",
]

# Expected inventory counts for the accept-all replay of the scenario.
EXPECTED_COUNTS = {"algorithm": 22, "data_source": 11, "ui_widget": 10}
EXPECTED_REPORTED_UI = 11
EXPECTED_TASK_TOTAL = 43


@pytest.fixture
def fixed_clock():
    from storysizer.engine import FixedClock

    return FixedClock("2024-01-01T00:00:00Z")


@pytest.fixture
def templates():
    from storysizer.prompts import load_templates

    return load_templates()


@pytest.fixture
def pizza_backend():
    from storysizer.llm_backend import FixtureBackend, FixtureStore

    return FixtureBackend(FixtureStore.load(FIXTURE_PATH))


@pytest.fixture
def pizza_engine(tmp_path, fixed_clock, templates, pizza_backend):
    """A fresh engine over a new session seeded with the pizza story."""
    from storysizer.engine import Engine, SessionConfig, SessionStore, init_session

    store = SessionStore(tmp_path / "session.json")
    config = SessionConfig(backend=f"fixture:{FIXTURE_PATH}")
    session = init_session(store, config, [PIZZA_STORY], clock=fixed_clock)
    return Engine(
        session, store=store, backend=pizza_backend, templates=templates, clock=fixed_clock
    )


def accept_all_decisions(session, clock, actor="human"):
    """Accept every pending task, merging when a key already exists.

    This is the accept-all driver used by union-semantics checks: accept
    wherever the (kind, name) slot is free, merge into the existing holder
    otherwise.
    """
    from storysizer.engine import Decision
    from storysizer.review_service import pending_tasks

    taken: dict[tuple, str] = {
        (t.kind, t.name): t.id for t in session.inventory_entries
    }
    decisions = []
    for task in pending_tasks(session):
        key = (task.kind, task.name)
        if key in taken:
            decisions.append(
                Decision(
                    task_id=task.id,
                    verdict="merge",
                    payload={"into": taken[key]},
                    actor=actor,
                    at=clock.now(),
                )
            )
        else:
            taken[key] = task.id
            decisions.append(
                Decision(
                    task_id=task.id, verdict="accept", payload=None, actor=actor, at=clock.now()
                )
            )
    return decisions


def run_resumable_pizza_flow(tmp_path, name, after_write=None):
    """Init, iterate, accept-all, finalize; every step checks state first,
    so the same driver both runs the flow and resumes it after a crash.

    Returns the final session bytes.
    """
    from storysizer.engine import (
        Engine,
        FixedClock,
        SessionConfig,
        SessionStore,
        init_session,
    )
    from storysizer.llm_backend import FixtureBackend, FixtureStore
    from storysizer.prompts import load_templates

    clock = FixedClock("2024-01-01T00:00:00Z")
    path = tmp_path / name
    store = SessionStore(path, after_write=after_write)
    if not store.exists():
        init_session(
            store,
            SessionConfig(backend=f"fixture:{FIXTURE_PATH}"),
            [PIZZA_STORY],
            clock=clock,
        )
    engine = Engine(
        store.load(),
        store=store,
        backend=FixtureBackend(FixtureStore.load(FIXTURE_PATH)),
        templates=load_templates(),
        clock=clock,
    )
    if not engine.session.iterations:
        engine.run_iteration("story-0001")
    if any(
        it.pending_task_ids(engine.session.decided_task_ids())
        for it in engine.session.iterations
    ):
        engine.apply_decisions(accept_all_decisions(engine.session, clock))
    if engine.session.finalized is None:
        engine.finalize()
    return path.read_bytes()


# ----------------------------------------------------------------------
# Acceptance summary: one pass/fail line per criterion at the end of the run.
# ----------------------------------------------------------------------

ACCEPTANCE_CRITERIA = {
    "test_paper_scenario_replay": "Paper-scenario replay (22/11/10 stored, 11 reported UI, offline < 5 s)",
    "test_question_parsing": "Question parsing (six questions, exact texts)",
    "test_baseline_table": "Baseline table (2,1,4 beside pipeline counts with deltas)",
    "test_prompt_goldens": "Prompt goldens (byte-for-byte, exact sentences)",
    "test_dedup_oracle_equivalence": "Dedup oracle equivalence (fixture + 100 random corpora)",
    "test_event_sourcing_and_crash_safety": "Event sourcing & crash safety (replay + kill-points)",
    "test_parser_robustness": "Parser robustness (malformed corpus + 10k fuzz)",
    "test_batch_api_equivalence": "Batch/API equivalence (identical session files)",
}

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    name = report.nodeid.split("::")[-1].split("[")[0]
    if name in ACCEPTANCE_CRITERIA and "test_acceptance" in report.nodeid:
        _acceptance_results[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, label in ACCEPTANCE_CRITERIA.items():
        if name in _acceptance_results:
            terminalreporter.write_line(f"  [{_acceptance_results[name]}] {label}")
