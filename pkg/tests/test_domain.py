"""Domain type tests: normalization, kind labels, inventory uniqueness."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from storysizer.domain import (
    EmptyName,
    Inventory,
    InvalidStory,
    KeyCollision,
    Task,
    TaskKind,
    TaskStatus,
    UnknownKindLabel,
    UserStory,
    normalize_task_name,
    task_kind_from_label,
)


def make_task(task_id="task-0001", kind=TaskKind.ALGORITHM, name="do_thing", **kw):
    defaults = dict(
        id=task_id,
        kind=kind,
        name=name,
        raw_name=None,
        description="does a thing",
        origin_question_ids=("q-0001",),
        origin_story_id="story-0001",
        status=TaskStatus.PENDING,
    )
    defaults.update(kw)
    return Task(**defaults)


class TestNormalizeTaskName:
    @pytest.mark.parametrize(
        "raw, expected",
        [
            ("CheckPromotionForItem", "check_promotion_for_item"),
            (
                "  Check availability of Margherita gourmet pizza ",
                "check_availability_of_margherita_gourmet_pizza",
            ),
            ("RestaurantDB", "restaurant_db"),
            ("ShowPromotionDetails", "show_promotion_details"),
            ("show promotion details", "show_promotion_details"),
            ("20-minute delivery", "20_minute_delivery"),
            ("already_normal", "already_normal"),
        ],
    )
    def test_examples(self, raw, expected):
        assert normalize_task_name(raw) == expected

    def test_empty_result_is_an_error(self):
        with pytest.raises(EmptyName):
            normalize_task_name("!!!")

    def test_whitespace_only_is_an_error(self):
        with pytest.raises(EmptyName):
            normalize_task_name("   ")

    def test_camel_and_spaced_variants_collide(self):
        assert normalize_task_name("ShowPromotionDetails") == normalize_task_name(
            "show promotion details"
        )

    @given(st.text(min_size=0, max_size=60))
    def test_idempotent(self, raw):
        try:
            once = normalize_task_name(raw)
        except EmptyName:
            return
        assert normalize_task_name(once) == once

    @given(st.text(min_size=1, max_size=60))
    def test_output_shape(self, raw):
        try:
            name = normalize_task_name(raw)
        except EmptyName:
            return
        assert name == name.lower()
        assert not name.startswith("_") and not name.endswith("_")
        assert "__" not in name


class TestTaskKindFromLabel:
    @pytest.mark.parametrize(
        "label, kind",
        [
            ("model", TaskKind.DATA_SOURCE),
            ("Data Source", TaskKind.DATA_SOURCE),
            ("datasource", TaskKind.DATA_SOURCE),
            ("control", TaskKind.ALGORITHM),
            ("Algorithm", TaskKind.ALGORITHM),
            ("view", TaskKind.UI_WIDGET),
            ("User Interface", TaskKind.UI_WIDGET),
            ("interface", TaskKind.UI_WIDGET),
            ("UI", TaskKind.UI_WIDGET),
            ("  MODEL  ", TaskKind.DATA_SOURCE),
        ],
    )
    def test_both_vocabularies(self, label, kind):
        assert task_kind_from_label(label) is kind

    @pytest.mark.parametrize("label", ["widget", "controller", "", "database"])
    def test_unknown_labels_never_coerced(self, label):
        with pytest.raises(UnknownKindLabel):
            task_kind_from_label(label)

    @pytest.mark.parametrize("kind", list(TaskKind))
    def test_label_round_trip_identity(self, kind):
        assert task_kind_from_label(kind.label) is kind


class TestUserStory:
    def test_empty_text_rejected(self):
        with pytest.raises(InvalidStory):
            UserStory(id="s", text="   ", created_at="2024-01-01T00:00:00Z")

    def test_valid(self):
        story = UserStory(id="s", text="order pizza", created_at="2024-01-01T00:00:00Z")
        assert story.text == "order pizza"


class TestTask:
    def test_requires_origin_questions(self):
        with pytest.raises(ValueError):
            make_task(origin_question_ids=())

    def test_merged_requires_target(self):
        with pytest.raises(ValueError):
            make_task(status=TaskStatus.MERGED)
        merged = make_task(status=TaskStatus.MERGED, merged_into="task-0002")
        assert merged.merged_into == "task-0002"

    def test_empty_name_rejected(self):
        with pytest.raises(EmptyName):
            make_task(name="")


class TestInventory:
    def test_duplicate_insertion_rejected(self):
        inv = Inventory().add(make_task("task-0001", name="estimate_delivery_time"))
        clone = make_task("task-0002", name="estimate_delivery_time")
        with pytest.raises(KeyCollision):
            inv.add(clone)

    def test_duplicate_construction_rejected(self):
        a = make_task("task-0001")
        b = make_task("task-0002")
        with pytest.raises(KeyCollision):
            Inventory((a, b))

    def test_same_name_different_kind_is_fine(self):
        inv = Inventory().add(make_task("task-0001", kind=TaskKind.ALGORITHM))
        inv = inv.add(make_task("task-0002", kind=TaskKind.UI_WIDGET))
        assert len(inv) == 2

    def test_counts_sum_to_cardinality(self):
        inv = Inventory()
        for i, kind in enumerate([TaskKind.ALGORITHM, TaskKind.ALGORITHM, TaskKind.DATA_SOURCE]):
            inv = inv.add(make_task(f"task-{i:04d}", kind=kind, name=f"name_{i}"))
        counts = inv.counts()
        assert sum(counts.values()) == len(inv) == 3
        assert counts[TaskKind.ALGORITHM] == 2
