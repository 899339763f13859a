"""Near-duplicate detection between a planner batch and the inventory.

Lexical only, by design: token-set Jaccard over names and over
stopword-filtered descriptions. Deterministic and offline-testable, which
an embedding model is not. Candidates are flagged for the human validator,
never auto-merged.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .domain import Inventory, Task

# Fixed and versioned so scores are reproducible across runs.
STOPWORDS = frozenset(
    {"a", "an", "the", "to", "of", "for", "and", "or", "with", "that", "on", "in", "by"}
)

DEFAULT_THRESHOLD = 0.8

_TOKEN = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> frozenset[str]:
    return frozenset(_TOKEN.findall(text.lower()))


def name_tokens(task: Task) -> frozenset[str]:
    return _tokens(task.name)


def description_tokens(task: Task) -> frozenset[str]:
    return _tokens(task.description) - STOPWORDS


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def similarity(a: Task, b: Task) -> float:
    """Max of name Jaccard and stopword-filtered description Jaccard."""
    return max(
        jaccard(name_tokens(a), name_tokens(b)),
        jaccard(description_tokens(a), description_tokens(b)),
    )


@dataclass(frozen=True)
class DuplicateCandidate:
    """A same-kind pair scoring at or above the session threshold."""

    new_task_id: str
    existing_task_id: str
    score: float
    basis: str  # "name" | "description" | "both"


def find_duplicates(
    batch: Sequence[Task],
    inventory: Inventory,
    threshold: float = DEFAULT_THRESHOLD,
) -> list[DuplicateCandidate]:
    """Flag all same-kind near-duplicates of batch tasks.

    Pairs are drawn from batch x (batch ∪ inventory), self-pairs excluded.
    Within the batch the later task is "new"; against the inventory the
    batch task is "new". Result order is (score desc, new id, existing id)
    so concurrent scoring cannot change the output.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    ntoks = {t.id: name_tokens(t) for t in batch}
    dtoks = {t.id: description_tokens(t) for t in batch}
    for t in inventory:
        ntoks.setdefault(t.id, name_tokens(t))
        dtoks.setdefault(t.id, description_tokens(t))

    candidates: list[DuplicateCandidate] = []

    def consider(new: Task, existing: Task) -> None:
        if new.kind is not existing.kind or new.id == existing.id:
            return
        name_score = jaccard(ntoks[new.id], ntoks[existing.id])
        desc_score = jaccard(dtoks[new.id], dtoks[existing.id])
        score = max(name_score, desc_score)
        if score < threshold:
            return
        if name_score >= threshold and desc_score >= threshold:
            basis = "both"
        elif name_score >= threshold:
            basis = "name"
        else:
            basis = "description"
        candidates.append(DuplicateCandidate(new.id, existing.id, score, basis))

    for j in range(len(batch)):
        for i in range(j):
            consider(batch[j], batch[i])
    for new in batch:
        for existing in inventory:
            consider(new, existing)

    candidates.sort(key=lambda c: (-c.score, c.new_task_id, c.existing_task_id))
    return candidates
