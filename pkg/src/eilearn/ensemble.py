"""Hypothesis pool with base ratings, a discard buffer and majority voting.

Active hypotheses vote; a tie between top classes goes to whichever voter
for a tied class has the highest base rating (lowest id on equal ratings).
Hypotheses scoring at most 50% on their phase test set are parked in the
buffer, and one can be recalled when every active hypothesis gets a labeled
instance wrong.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .data import Instance, Schema
from .learner import TreeNode, predict

ACTIVE = "active"
BUFFERED = "buffered"
RETENTION_THRESHOLD = 0.5


class EnsembleError(RuntimeError):
    pass


@dataclass(eq=False)
class Hypothesis:
    id: int
    phase_origin: int
    cluster_origin: int
    model: TreeNode
    schema: Schema
    base_rating: int = 0
    status: str = ACTIVE
    accuracy_record: dict[str, float] = field(default_factory=dict)
    training_size: int = 0

    def predict(self, x: Instance) -> int:
        return predict(self.model, x, self.schema)


@dataclass
class EnsembleState:
    active: list[Hypothesis] = field(default_factory=list)
    buffer: list[Hypothesis] = field(default_factory=list)
    next_id: int = 0

    def new_id(self) -> int:
        i = self.next_id
        self.next_id += 1
        return i

    def all(self) -> list[Hypothesis]:
        return sorted(self.active + self.buffer, key=lambda h: h.id)

    def get(self, hid: int) -> Hypothesis:
        for h in self.active + self.buffer:
            if h.id == hid:
                return h
        raise KeyError(hid)

    def snapshot(self) -> tuple:
        """Hashable summary used to check that frozen evaluation left no trace."""
        return (
            tuple((h.id, h.base_rating, h.status) for h in self.active),
            tuple((h.id, h.base_rating, h.status) for h in self.buffer),
            self.next_id,
        )


@dataclass(frozen=True)
class VoteOutcome:
    predicted: int
    votes: dict[int, int]
    tie_broken: bool
    deciding_hypothesis: int | None


def majority_vote(
    ballots: Sequence[tuple[int, int, int]],
) -> VoteOutcome:
    """Plurality over ``(hypothesis id, base rating, predicted class)`` ballots."""
    if not ballots:
        raise EnsembleError("no active hypotheses to vote")
    votes = Counter(cls for _, _, cls in ballots)
    top = max(votes.values())
    leaders = {cls for cls, n in votes.items() if n == top}
    if len(leaders) == 1:
        return VoteOutcome(next(iter(leaders)), dict(sorted(votes.items())), False, None)
    hid, _, cls = min(
        (b for b in ballots if b[2] in leaders), key=lambda b: (-b[1], b[0])
    )
    return VoteOutcome(cls, dict(sorted(votes.items())), True, hid)


def classify_majority(
    state: EnsembleState, x: Instance, predictions: Mapping[int, int] | None = None
) -> VoteOutcome:
    """Vote over the active hypotheses.

    ``predictions`` may carry precomputed per-hypothesis predictions for
    ``x`` keyed by hypothesis id.
    """
    if not state.active:
        raise EnsembleError("no active hypotheses to vote")
    ballots = [
        (h.id, h.base_rating, predictions[h.id] if predictions is not None else h.predict(x))
        for h in state.active
    ]
    return majority_vote(ballots)


def update_ratings(
    state: EnsembleState,
    x: Instance,
    true_label: int,
    predictions: Mapping[int, int] | None = None,
) -> EnsembleState:
    """Add one to the rating of every active hypothesis that predicts ``x`` correctly."""
    if true_label < 0:
        raise EnsembleError(f"invalid label {true_label}")
    for h in state.active:
        p = predictions[h.id] if predictions is not None else h.predict(x)
        if p == true_label:
            h.base_rating += 1
    return state


def filter_to_buffer(
    state: EnsembleState,
    new_hypotheses: Sequence[Hypothesis],
    accuracies: Mapping[int, float],
) -> EnsembleState:
    """Admit hypotheses scoring above 50% to the active pool, buffer the rest."""
    for h in new_hypotheses:
        if h.id not in accuracies:
            raise EnsembleError(f"hypothesis {h.id} has no test accuracy")
    for h in new_hypotheses:
        if accuracies[h.id] > RETENTION_THRESHOLD:
            h.status = ACTIVE
            state.active.append(h)
        else:
            h.status = BUFFERED
            state.buffer.append(h)
    state.active.sort(key=lambda h: h.id)
    state.buffer.sort(key=lambda h: h.id)
    return state


def recall_from_buffer(
    state: EnsembleState,
    x: Instance,
    true_label: int,
    predictions: Mapping[int, int] | None = None,
) -> tuple[EnsembleState, int | None]:
    """Reinstate the best-rated buffered hypothesis that gets ``x`` right."""
    qualifying = [
        h
        for h in state.buffer
        if (predictions[h.id] if predictions is not None else h.predict(x)) == true_label
    ]
    if not qualifying:
        return state, None
    chosen = min(qualifying, key=lambda h: (-h.base_rating, h.id))
    state.buffer.remove(chosen)
    chosen.status = ACTIVE
    state.active.append(chosen)
    state.active.sort(key=lambda h: h.id)
    return state, chosen.id
