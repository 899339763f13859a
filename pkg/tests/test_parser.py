"""Parser tests: question lists, planner CSV, and promotion to domain tasks."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PIZZA_QUESTIONS
from storysizer.domain import EmptyName, TaskKind, TaskStatus, UnknownKindLabel
from storysizer.parser import (
    EmptyOutput,
    MalformedRow,
    NoQuestions,
    RawTask,
    parse_planner_csv,
    parse_question_list,
    raw_to_task,
    serialize_tasks_csv,
)

# The question generator's reply for the pizza story, as a model actually
# returns it: enumerated despite the prompt forbidding enumerations.
ENUMERATED_SIX = "".join(
    f"{i}. {question}\n" for i, question in enumerate(PIZZA_QUESTIONS, start=1)
)


class TestParseQuestionList:
    def test_six_question_block(self):
        report = parse_question_list(ENUMERATED_SIX)
        assert list(report.parsed) == PIZZA_QUESTIONS
        assert report.parsed[0] == (
            "Can you provide a list of nearby pizzerias that offer gourmet "
            "Margherita pizzas with an estimated delivery time of 20 minutes or less?"
        )

    def test_plain_lines(self):
        report = parse_question_list("\n".join(PIZZA_QUESTIONS))
        assert list(report.parsed) == PIZZA_QUESTIONS
        assert report.strict_ok

    @pytest.mark.parametrize(
        "text, expected",
        [
            ("1. A?\n2. B?", ["A?", "B?"]),
            ("1) A?\n2) B?", ["A?", "B?"]),
            ("- A?\n* B?\n• C?", ["A?", "B?", "C?"]),
            ("A?\n\n\nB?", ["A?", "B?"]),
            ("  A?  ", ["A?"]),
            ("1. - A?", ["A?"]),
        ],
    )
    def test_marker_stripping(self, text, expected):
        assert list(parse_question_list(text).parsed) == expected

    def test_decimal_numbers_survive(self):
        report = parse_question_list("1.5 miles too far?")
        assert list(report.parsed) == ["1.5 miles too far?"]

    def test_blank_input_raises(self):
        with pytest.raises(NoQuestions):
            parse_question_list("\n \n")

    def test_marker_only_lines_raise(self):
        with pytest.raises(NoQuestions):
            parse_question_list("1.\n2.\n-")

    def test_order_preserved(self):
        report = parse_question_list("z?\na?\nm?")
        assert list(report.parsed) == ["z?", "a?", "m?"]


class TestParsePlannerCsv:
    def test_three_field_row(self):
        text = (
            'control,EstimateDeliveryTime,"Algorithm to estimate delivery time '
            'based on user location and pizzeria location"'
        )
        report = parse_planner_csv(text)
        (task,) = report.parsed
        assert task.kind_label == "control"
        assert task.function_name == "EstimateDeliveryTime"
        assert task.description == (
            "Algorithm to estimate delivery time based on user location and pizzeria location"
        )
        assert task.source_line == 1

    def test_fences_stripped(self):
        text = "```csv\nview,ShowMenu,Interface to display the PizzaMenu for user selection\n```"
        report = parse_planner_csv(text)
        assert len(report.parsed) == 1
        assert report.parsed[0].function_name == "ShowMenu"

    def test_header_row_stripped(self):
        text = (
            "task type,function call name,task description\n"
            "control,FilterPizzerias,Algorithm to filter pizzerias"
        )
        report = parse_planner_csv(text)
        assert len(report.parsed) == 1
        assert report.strict_ok

    def test_two_field_rows(self):
        text = "Algorithm,Filter customizations ensuring a 20-minute delivery"
        report = parse_planner_csv(text)
        (task,) = report.parsed
        assert task.function_name is None
        assert task.kind_label == "Algorithm"

    def test_quoted_commas_belong_to_field(self):
        text = 'model,OrderDB,"Database table to store orders, including details, and timings"'
        (task,) = parse_planner_csv(text).parsed
        assert task.description == "Database table to store orders, including details, and timings"

    def test_malformed_row_strict(self):
        with pytest.raises(MalformedRow):
            parse_planner_csv("view,ShowMenu,desc,extra", strict=True)

    def test_malformed_row_lenient_is_skipped(self):
        text = "view,ShowMenu,desc,extra\ncontrol,Ok,fine description"
        report = parse_planner_csv(text)
        assert len(report.parsed) == 1
        assert report.skipped == ((1, "MalformedRow"),)
        assert not report.strict_ok

    def test_one_field_row_is_malformed(self):
        text = "Here are the tasks:\ncontrol,Ok,fine description"
        report = parse_planner_csv(text)
        assert report.skipped == ((1, "MalformedRow"),)
        with pytest.raises(MalformedRow):
            parse_planner_csv(text, strict=True)

    def test_unknown_kind_label_skipped_with_reason(self):
        text = "widget,ShowMenu,Interface to display the menu\nview,ShowMenu,Interface to display the menu"
        report = parse_planner_csv(text)
        assert len(report.parsed) == 1
        assert report.skipped[0][1].startswith("UnknownKindLabel")
        with pytest.raises(UnknownKindLabel):
            parse_planner_csv(text, strict=True)

    def test_empty_output_raises(self):
        with pytest.raises(EmptyOutput):
            parse_planner_csv("\n \n")

    def test_all_rows_bad_raises_empty_output(self):
        with pytest.raises(EmptyOutput):
            parse_planner_csv("widget,ShowMenu,desc")

    def test_enumerated_rows(self):
        text = "1. control,CheckAvailability,Check availability\n2. model,MenuDB,Menu data source"
        report = parse_planner_csv(text)
        assert [t.kind_label for t in report.parsed] == ["control", "model"]

    def test_line_accounting(self):
        text = (
            "```csv\n"
            "task type,function call name,task description\n"
            "control,Ok,fine description\n"
            "\n"
            "widget,Bad,unknown kind\n"
            "only one field\n"
            "```\n"
        )
        report = parse_planner_csv(text)
        # 3 countable rows: one parsed, two skipped (fences, blank, header excluded)
        assert len(report.parsed) == 1
        assert len(report.skipped) == 2

    def test_round_trip(self):
        text = (
            'control,EstimateDeliveryTime,"Algorithm to estimate, delivery time"\n'
            "Algorithm,Two field row description\n"
            'view,,Interface row with empty name cell\n'
        )
        report = parse_planner_csv(text)
        serialized = serialize_tasks_csv(report.parsed)
        reparsed = parse_planner_csv(serialized)
        assert [
            (t.kind_label, t.function_name, t.description) for t in report.parsed
        ] == [(t.kind_label, t.function_name, t.description) for t in reparsed.parsed]

    @given(st.text(max_size=400))
    @settings(max_examples=300, deadline=None)
    def test_total_on_arbitrary_text(self, text):
        try:
            report = parse_planner_csv(text)
            assert report.parsed
        except (EmptyOutput, MalformedRow, UnknownKindLabel):
            pass

    @given(st.text(max_size=400))
    @settings(max_examples=300, deadline=None)
    def test_question_parse_total(self, text):
        try:
            report = parse_question_list(text)
            assert report.parsed
        except NoQuestions:
            pass


class TestRawToTask:
    def test_function_name_wins(self):
        raw = RawTask("model", "RestaurantDB", "Model containing pizzeria information including location and menu offerings", 1)
        task = raw_to_task(raw, task_id="task-0001", origin_question_ids=("q-1",), origin_story_id="s-1")
        assert task.kind is TaskKind.DATA_SOURCE
        assert task.name == "restaurant_db"
        assert task.status is TaskStatus.PENDING
        assert task.raw_name == "RestaurantDB"

    def test_eight_word_fallback(self):
        raw = RawTask("control", None, "Algorithm to filter pizzerias that offer gourmet Margherita pizzas", 1)
        task = raw_to_task(raw, task_id="task-0001", origin_question_ids=("q-1",), origin_story_id="s-1")
        assert task.name == "algorithm_to_filter_pizzerias_that_offer_gourmet_margherita"

    def test_empty_description_rejected_at_construction(self):
        with pytest.raises(ValueError):
            RawTask("view", "X", "", 1)

    def test_unknown_kind_propagates(self):
        raw = RawTask("gizmo", "X", "some description", 1)
        with pytest.raises(UnknownKindLabel):
            raw_to_task(raw, task_id="t", origin_question_ids=("q",), origin_story_id="s")

    def test_unnormalizable_name_propagates(self):
        raw = RawTask("view", "!!!", "valid description", 1)
        with pytest.raises(EmptyName):
            raw_to_task(raw, task_id="t", origin_question_ids=("q",), origin_story_id="s")

    def test_provenance_recorded(self):
        raw = RawTask("view", "ShowMenu", "Interface to display the menu", 3)
        task = raw_to_task(raw, task_id="task-0009", origin_question_ids=("q-1", "q-2"), origin_story_id="story-7")
        assert task.origin_question_ids == ("q-1", "q-2")
        assert task.origin_story_id == "story-7"
