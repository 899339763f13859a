#!/usr/bin/env python3
"""Regenerate fixtures/pizza_order.json, the canonical replay fixture.

The pizza-ordering scenario is the reference desk-check for the whole
pipeline: one seed story, six generated questions, and a 43-task planner
batch (22 algorithms, 11 data sources, 10 UI widgets). Responses are keyed
by prompt hash, so this script renders the exact prompts the engine will
render and stores the scripted completions under their keys.

Run from the repository root:

    python3 scripts/make_pizza_fixture.py
"""

from __future__ import annotations

import io
import csv
import json
from pathlib import Path

from storysizer.domain import Inventory, UserStory
from storysizer.llm_backend import CompletionRequest, FixtureStore
from storysizer.prompts import load_templates, render_planner_prompt, render_question_prompt

PIZZA_STORY = "I want to order a gourmet Margherita pizza in 20 minutes."

N_QUESTIONS = 6
MODEL_ID = "gpt-4"
TEMPERATURE = 0.0

GENERATED_QUESTIONS = [
    "Can you provide a list of nearby pizzerias that offer gourmet Margherita pizzas with an estimated delivery time of 20 minutes or less?",
    "Are there any ongoing promotions or discounts for a Margherita gourmet pizza available for quick delivery?",
    "What are the options for customizing a Margherita gourmet pizza, such as crust type or cheese options, while still ensuring a 20-minute delivery?",
    "Can you recommend the top-rated restaurant for a gourmet Margherita pizza based on user reviews and delivery speed?",
    "Are there any minimum order requirements or additional fees associated with ordering a single Margherita gourmet pizza for quick delivery?",
    "Can you filter the restaurant search?",
]

# (kind label, description) pairs exactly as a planner emits them for this
# scenario: no function-call names, report-vocabulary labels.
PLANNER_TASKS = [
    ("Algorithm", "Algorithm to check the availability of the selected pizza type in real-time"),
    ("Algorithm", "Algorithm to record the new order with a gourmet margherita pizza and a set time of 20 minutes from the current time"),
    ("Algorithm", "Algorithm to manage the countdown and ensure the order is ready in twenty minutes"),
    ("Algorithm", "Algorithm to notify the user when the order is placed, when it starts being prepared, and when it's ready for delivery or pickup"),
    ("Algorithm", "Algorithm to handle payment for the order through the app's integrated payment system"),
    ("Algorithm", "Algorithm to ensure the order is completed and pizza is handed off for delivery or pickup after twenty minutes"),
    ("Algorithm", "Algorithm to filter pizzerias that offer gourmet Margherita pizzas"),
    ("Algorithm", "Algorithm to estimate delivery time based on user location and pizzeria location"),
    ("Algorithm", "Algorithm to filter pizzerias with an estimated delivery time of 20 minutes or less"),
    ("Algorithm", "Algorithm to check for promotions or discounts on a specific item"),
    ("Algorithm", "Algorithm to determine if quick delivery is available for an item"),
    ("Algorithm", "Algorithm that combines CheckPromotionForItem and ShowPromotionDetails for a specific item"),
    ("Algorithm", "Algorithm that combines CheckQuickDeliveryOption and ShowDeliveryOption for a specific item"),
    ("Algorithm", "Filter the customizations applicable to Margherita pizza"),
    ("Algorithm", "Filter customizations ensuring a 20-minute delivery"),
    ("Algorithm", "Algorithm that retrieves restaurants sorted by user ratings and filters for gourmet Margherita pizza."),
    ("Algorithm", "Algorithm that retrieves restaurant with the fastest delivery speed for Margherita pizza."),
    ("Algorithm", "Algorithm that recommends the top-rated restaurant for gourmet Margherita pizza with the fastest delivery."),
    ("Algorithm", "Check availability of Margherita gourmet pizza"),
    ("Algorithm", "Calculate total cost for a single Margherita gourmet pizza including additional fees"),
    ("Algorithm", "Provide delivery time estimate for quick delivery option"),
    ("Algorithm", "Algorithm to filter restaurant data based on certain criteria"),
    ("Data Source", "Database table containing different types of pizzas including gourmet margherita"),
    ("Data Source", "Database table to store information about user orders including details and timings"),
    ("Data Source", "Model containing pizzeria information including location and menu offerings"),
    ("Data Source", "Data source representing promotions or discounts"),
    ("Data Source", "Data source representing menu items including pizzas"),
    ("Data Source", "Retrieve list of gourmet pizza customizations"),
    ("Data Source", "Retrieve delivery times for each customization option"),
    ("Data Source", "Data source containing restaurant details including ratings and reviews."),
    ("Data Source", "Data source containing delivery speed information for restaurants."),
    ("Data Source", "Retrieve minimum order requirements and additional fees"),
    ("Data Source", "Retrieve delivery options, time estimates, and fees for quick delivery"),
    ("User Interface", "Interface to display the PizzaMenu for user selection"),
    ("User Interface", "Interface to show confirmation details and allow users to confirm their order"),
    ("User Interface", "Interface to display the real-time status of the order including the countdown and readiness status"),
    ("User Interface", "Interface to display the list of nearby pizzerias that meet the criteria"),
    ("User Interface", "Interface to display promotion details to the user"),
    ("User Interface", "Interface to display quick delivery availability to the user"),
    ("User Interface", "Show available crust types and cheese options for Margherita pizza within 20-minute delivery time"),
    ("User Interface", "Interface to show the recommended restaurant to the user."),
    ("User Interface", "Show availability, total cost, and delivery time for a single Margherita gourmet pizza"),
    ("User Interface", "Interface to show filtered restaurant results to the user"),
]


def question_response() -> str:
    return "\n".join(GENERATED_QUESTIONS) + "\n"


def planner_response() -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for kind_label, description in PLANNER_TASKS:
        writer.writerow([kind_label, description])
    return buf.getvalue()


def build_store() -> FixtureStore:
    templates = load_templates()
    story = UserStory(id="story-0001", text=PIZZA_STORY, created_at="2024-01-01T00:00:00Z")

    question_prompt = render_question_prompt(templates.question_gen, story, N_QUESTIONS, "")
    planner_prompt = render_planner_prompt(
        templates.planner,
        [PIZZA_STORY] + GENERATED_QUESTIONS,
        Inventory(),
        "",
        minimize=True,
    )

    store = FixtureStore(
        metadata={
            "model_id": MODEL_ID,
            "recorded_at": "2024-01-01T00:00:00Z",
            "template_versions": templates.versions,
            "scenario": "pizza_order",
        }
    )
    store.record(
        CompletionRequest(prompt=question_prompt, model_id=MODEL_ID, temperature=TEMPERATURE),
        question_response(),
    )
    store.record(
        CompletionRequest(prompt=planner_prompt, model_id=MODEL_ID, temperature=TEMPERATURE),
        planner_response(),
    )
    return store


def main() -> None:
    root = Path(__file__).resolve().parent.parent
    out = root / "fixtures" / "pizza_order.json"
    out.parent.mkdir(exist_ok=True)
    store = build_store()
    store.save(out)
    doc = json.loads(out.read_text(encoding="utf-8"))
    print(f"wrote {out} with {len(doc['entries'])} entries")


if __name__ == "__main__":
    main()
