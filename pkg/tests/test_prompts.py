"""Prompt rendering tests, including the checked-in golden files."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import GOLDEN_DIR, PIZZA_QUESTIONS, PIZZA_STORY
from storysizer.domain import Inventory, InvalidStory, Task, TaskKind, UserStory
from storysizer.prompts import (
    MINIMIZE_SENTENCE,
    PromptTemplate,
    TemplateError,
    load_templates,
    render_planner_prompt,
    render_question_prompt,
)


@pytest.fixture(scope="module")
def templates():
    return load_templates()


def pizza_story():
    return UserStory(id="story-0001", text=PIZZA_STORY, created_at="2024-01-01T00:00:00Z")


def inventory_task(name, kind=TaskKind.ALGORITHM, task_id="task-0001"):
    return Task(
        id=task_id,
        kind=kind,
        name=name,
        raw_name=None,
        description=f"{name} description",
        origin_question_ids=("q-0001",),
        origin_story_id="story-0001",
    )


class TestQuestionPrompt:
    def test_pizza_scenario_sentences(self, templates):
        text = render_question_prompt(templates.question_gen, pizza_story(), 6)
        assert "You will generate 6 related questions to the user request." in text
        assert "I want to order a gourmet Margherita pizza in 20 minutes." in text
        assert "should not contain enumerations or itemized lists" in text
        assert "nothing more" in text

    def test_numeral_substitution_without_pluralization(self, templates):
        text = render_question_prompt(templates.question_gen, pizza_story(), 1)
        assert "You will generate 1 related questions to the user request." in text

    def test_empty_story_surfaces_invalid_story(self, templates):
        with pytest.raises(InvalidStory):
            UserStory(id="s", text="  ", created_at="t")
        # A story-shaped object that dodged construction checks still fails.
        class Hollow:
            text = "   "

        with pytest.raises(InvalidStory):
            render_question_prompt(templates.question_gen, Hollow(), 6)

    def test_n_must_be_positive(self, templates):
        with pytest.raises(ValueError):
            render_question_prompt(templates.question_gen, pizza_story(), 0)

    def test_pure_function(self, templates):
        a = render_question_prompt(templates.question_gen, pizza_story(), 6)
        b = render_question_prompt(templates.question_gen, pizza_story(), 6)
        assert a == b


class TestPlannerPrompt:
    def test_baseline_tools_section(self, templates):
        text = render_planner_prompt(
            templates.planner,
            [PIZZA_STORY] + PIZZA_QUESTIONS,
            Inventory(),
            "",
            minimize=False,
        )
        tools_section = text.split("AVAILABLE TOOLS:\n")[1].split("\n\n")[0]
        assert tools_section == "- Search Tool\n- Math Tool"
        assert (
            "Your answer should be only a csv list with fields task type, "
            "function call name and task description"
        ) in text
        assert MINIMIZE_SENTENCE not in text

    def test_minimize_clause_appears_exactly_once(self, templates):
        base = render_planner_prompt(
            templates.planner, [PIZZA_STORY], Inventory(), "", minimize=False
        )
        with_clause = render_planner_prompt(
            templates.planner, [PIZZA_STORY], Inventory(), "", minimize=True
        )
        assert with_clause.count(MINIMIZE_SENTENCE) == 1
        assert with_clause.replace(MINIMIZE_SENTENCE + "\n", "") == base

    def test_inventory_tasks_listed_as_tools(self, templates):
        inv = Inventory().add(inventory_task("estimate_delivery_time"))
        text = render_planner_prompt(
            templates.planner, ["one question"], inv, "", minimize=False
        )
        assert "- estimate_delivery_time (Algorithm)" in text

    def test_questions_one_per_line_in_order(self, templates):
        text = render_planner_prompt(
            templates.planner,
            [PIZZA_STORY] + PIZZA_QUESTIONS,
            Inventory(),
            "",
            minimize=True,
        )
        request_section = text.split("USER REQUEST:\n")[1].split("\n\nANSWER FORMAT")[0]
        assert request_section.splitlines() == [PIZZA_STORY] + PIZZA_QUESTIONS

    def test_context_carried_verbatim(self, templates):
        context = "The app already integrates with StripePay.\nMenus sync nightly."
        text = render_planner_prompt(
            templates.planner, ["q"], Inventory(), context, minimize=False
        )
        assert context in text

    def test_empty_questions_rejected(self, templates):
        with pytest.raises(ValueError):
            render_planner_prompt(templates.planner, [], Inventory(), "", minimize=True)

    def test_answer_format_stays_csv(self, templates):
        text = render_planner_prompt(
            templates.planner, ["q"], Inventory(), "", minimize=True
        )
        assert text.rstrip().endswith("ANSWER FORMAT\ncsv list")

    @given(st.integers(min_value=0, max_value=12))
    def test_tool_line_count_is_baseline_plus_inventory(self, n):
        templates = load_templates()
        inv = Inventory()
        for i in range(n):
            inv = inv.add(inventory_task(f"tool_{i}", task_id=f"task-{i:04d}"))
        text = render_planner_prompt(
            templates.planner, ["q"], inv, "", minimize=False
        )
        tools_section = text.split("AVAILABLE TOOLS:\n")[1].split("\n\nCONTEXTUAL")[0]
        assert len(tools_section.splitlines()) == 2 + n


class TestTemplates:
    def test_goldens_byte_for_byte(self, templates):
        question = render_question_prompt(templates.question_gen, pizza_story(), 6, "")
        planner = render_planner_prompt(
            templates.planner,
            [PIZZA_STORY] + PIZZA_QUESTIONS,
            Inventory(),
            "",
            minimize=True,
        )
        golden_q = (GOLDEN_DIR / "question_prompt_pizza.txt").read_text(encoding="utf-8")
        golden_p = (GOLDEN_DIR / "planner_prompt_pizza.txt").read_text(encoding="utf-8")
        assert question == golden_q
        assert planner == golden_p

    def test_undeclared_placeholder_rejected_at_load(self):
        with pytest.raises(TemplateError):
            PromptTemplate.from_text("bad", "hello {{surprise}}")

    def test_unbound_placeholder_rejected_at_render(self):
        template = PromptTemplate.from_text("t", "value: {{user_request}}")
        with pytest.raises(TemplateError):
            template.render({})

    def test_missing_template_dir_file(self, tmp_path):
        with pytest.raises(TemplateError):
            load_templates(tmp_path)

    def test_prompts_dir_override(self, tmp_path):
        (tmp_path / "question_gen.prompt").write_text("ASK {{n_questions}}: {{user_request}}")
        (tmp_path / "planner.prompt").write_text(
            "{{minimize_clause}}{{available_tools}}{{contextual_information}}{{user_request}}"
        )
        templates = load_templates(tmp_path)
        text = render_question_prompt(templates.question_gen, pizza_story(), 3)
        assert text.startswith("ASK 3:")
        assert templates.versions["question_gen"] != load_templates().versions["question_gen"]

    def test_versions_stable_for_same_content(self):
        a = load_templates().versions
        b = load_templates().versions
        assert a == b
