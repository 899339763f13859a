"""Prompt template loading and rendering.

Templates are plain UTF-8 files with ``{{placeholder}}`` slots. The two
required templates, ``question_gen.prompt`` and ``planner.prompt``, ship
with the package and can be overridden per session by pointing a prompts
directory at replacement files. Rendering is pure: same inputs, same bytes.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from .domain import Inventory, InvalidStory, StorysizerError, UserStory

PLACEHOLDERS = frozenset(
    {
        "n_questions",
        "user_request",
        "available_tools",
        "contextual_information",
        "minimize_clause",
    }
)

DEFAULT_BASELINE_TOOLS = ("Search Tool", "Math Tool")

MINIMIZE_SENTENCE = (
    "You should minimize redundant tasks or tools and reuse the available "
    "tools whenever possible."
)

REQUIRED_TEMPLATES = ("question_gen", "planner")

_PLACEHOLDER = re.compile(r"\{\{(\w+)\}\}")


class TemplateError(StorysizerError):
    code = "TEMPLATE_ERROR"


@dataclass(frozen=True)
class PromptTemplate:
    """A named template body plus a content-derived version string."""

    name: str
    body: str
    version: str

    @classmethod
    def from_text(cls, name: str, body: str) -> "PromptTemplate":
        unknown = set(_PLACEHOLDER.findall(body)) - PLACEHOLDERS
        if unknown:
            raise TemplateError(
                f"template {name!r} uses undeclared placeholders: {sorted(unknown)}"
            )
        version = hashlib.sha256(body.encode("utf-8")).hexdigest()[:12]
        return cls(name=name, body=body, version=version)

    def render(self, slots: dict[str, str]) -> str:
        out = _PLACEHOLDER.sub(lambda m: slots.get(m.group(1), m.group(0)), self.body)
        leftover = _PLACEHOLDER.findall(out)
        if leftover:
            raise TemplateError(
                f"template {self.name!r} has unbound placeholders: {sorted(set(leftover))}"
            )
        return out


@dataclass(frozen=True)
class TemplateSet:
    question_gen: PromptTemplate
    planner: PromptTemplate

    @property
    def versions(self) -> dict[str, str]:
        return {
            "question_gen": self.question_gen.version,
            "planner": self.planner.version,
        }


def load_templates(prompts_dir: str | Path | None = None) -> TemplateSet:
    """Load the two required templates, from ``prompts_dir`` when given,
    otherwise the packaged defaults."""
    bodies: dict[str, str] = {}
    if prompts_dir is None:
        base = resources.files(__package__) / "templates"
        for name in REQUIRED_TEMPLATES:
            bodies[name] = (base / f"{name}.prompt").read_text(encoding="utf-8")
    else:
        base_path = Path(prompts_dir)
        for name in REQUIRED_TEMPLATES:
            path = base_path / f"{name}.prompt"
            if not path.is_file():
                raise TemplateError(f"missing template file: {path}")
            bodies[name] = path.read_text(encoding="utf-8")
    return TemplateSet(
        question_gen=PromptTemplate.from_text("question_gen", bodies["question_gen"]),
        planner=PromptTemplate.from_text("planner", bodies["planner"]),
    )


def render_question_prompt(
    template: PromptTemplate,
    story: UserStory,
    n: int,
    context: str | None = None,
) -> str:
    """Render the related-questions prompt for one seed story.

    ``n`` substitutes as a bare numeral; there is deliberately no
    pluralization logic.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not story.text.strip():
        raise InvalidStory("story text must be non-empty")
    return template.render(
        {
            "n_questions": str(n),
            "user_request": story.text,
            "contextual_information": context or "",
        }
    )


def render_planner_prompt(
    template: PromptTemplate,
    questions: Sequence[str],
    current_tools: Inventory,
    context: str,
    minimize: bool,
    baseline_tools: Sequence[str] = DEFAULT_BASELINE_TOOLS,
) -> str:
    """Render the planner prompt over the full question set.

    The USER REQUEST section carries all questions one per line, in order.
    AVAILABLE TOOLS lists the baseline tools followed by one line per
    inventory task as ``- <name> (<kind label>)``, so the planner can reuse
    what already exists.
    """
    if not questions:
        raise ValueError("questions must be non-empty")
    tool_lines = [f"- {tool}" for tool in baseline_tools]
    tool_lines += [f"- {task.name} ({task.kind.label})" for task in current_tools]
    return template.render(
        {
            "available_tools": "\n".join(tool_lines),
            "contextual_information": context,
            "user_request": "\n".join(questions),
            "minimize_clause": MINIMIZE_SENTENCE + "\n" if minimize else "",
        }
    )
