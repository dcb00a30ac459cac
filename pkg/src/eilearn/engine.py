"""Phase-by-phase driver for the incremental ensemble.

Each phase splits its data part into train and test blocks, clusters the
train block, grows one tree per cluster, screens the new trees on the test
block, and then measures the whole ensemble on the test block (where ratings
and recall are live), on the validation set (frozen) and on the previous
phase's test block (frozen, retention).
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from . import clustering
from .clustering import EM, cluster_membership, encode, fit_clusterer
from .data import (
    DataError,
    Dataset,
    SplitPlan,
    load_csv,
    partition_phases,
    split_holdout,
    split_train_test,
)
from .ensemble import (
    ACTIVE,
    EnsembleState,
    Hypothesis,
    classify_majority,
    filter_to_buffer,
    recall_from_buffer,
    update_ratings,
)
from .learner import TreeParams, predict_many, train_tree, tree_size

log = logging.getLogger(__name__)

LEARNING = "learning"
FROZEN = "frozen"
SEED_RULE = "seed_i = SeedSequence([master_seed, i]).generate_state(1)[0]"


class ExperimentError(RuntimeError):
    pass


def phase_seed(master_seed: int, phase: int) -> int:
    return int(np.random.SeedSequence([master_seed, phase]).generate_state(1)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    data_path: str
    label: str
    holdout_size: int
    phases: int
    train_fraction: float
    shuffle_seed: int | None = None
    clusterer: str = EM
    clusters: int = 3
    max_iters: int = clustering.DEFAULT_MAX_ITERS
    tol: float = clustering.DEFAULT_TOL
    min_cluster_size: int = clustering.MIN_CLUSTER_SIZE
    min_leaf: int = 2
    max_depth: int | None = None
    min_gain: float = 1e-9
    master_seed: int = 0
    kind_overrides: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.phases < 1:
            raise ExperimentError("phases must be >= 1")
        if self.clusters < 1:
            raise ExperimentError("clusters must be >= 1")
        if self.clusterer not in (clustering.EM, clustering.KMEANS):
            raise ExperimentError(f"unknown clusterer {self.clusterer!r}")
        self.plan()
        self.tree_params()

    def plan(self) -> SplitPlan:
        return SplitPlan(self.holdout_size, self.phases, self.train_fraction, self.shuffle_seed)

    def tree_params(self) -> TreeParams:
        return TreeParams(self.min_leaf, self.max_depth, self.min_gain)


@dataclass
class RecallEvent:
    phase: int
    set_name: str
    instance_index: int
    hypothesis_id: int


@dataclass
class HypothesisScore:
    id: int
    accuracy: float


@dataclass
class PhaseReport:
    phase: int
    seed: int
    sizes: dict[str, int]
    cluster_sizes: list[int]
    clusterer_converged: bool
    clusterer_log_likelihood: float
    new_hypotheses: list[int]
    q_individual: list[HypothesisScore]
    q_mean_individual: float
    q_ensemble: float
    v_individual: list[HypothesisScore]
    v_mean_individual: float
    v_ensemble: float
    retention: float | None
    buffered: list[int]
    recalls: list[RecallEvent]
    active_after: list[int]
    buffer_after: list[int]


@dataclass
class RosterEntry:
    id: int
    phase_origin: int
    cluster_origin: int
    training_size: int
    tree_size: int
    base_rating: int
    status: str
    accuracy_record: dict[str, float]


@dataclass
class ExperimentReport:
    config: dict
    seed_rule: str
    phases: list[PhaseReport] = field(default_factory=list)
    roster: list[RosterEntry] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> ExperimentReport:
        phases = []
        for p in d["phases"]:
            p = dict(p)
            p["q_individual"] = [HypothesisScore(**s) for s in p["q_individual"]]
            p["v_individual"] = [HypothesisScore(**s) for s in p["v_individual"]]
            p["recalls"] = [RecallEvent(**e) for e in p["recalls"]]
            phases.append(PhaseReport(**p))
        roster = [RosterEntry(**r) for r in d["roster"]]
        return cls(config=dict(d["config"]), seed_rule=d["seed_rule"], phases=phases, roster=roster)


def evaluate_individual(h: Hypothesis, S: Dataset) -> float:
    if len(S) == 0:
        raise ExperimentError("cannot evaluate on an empty set")
    return float(np.mean(predict_many(h.model, S) == S.labels))


def evaluate_ensemble(
    state: EnsembleState,
    S: Dataset,
    mode: str,
    phase: int = 0,
    set_name: str = "",
) -> tuple[float, EnsembleState, list[RecallEvent]]:
    """Majority-vote accuracy of the active pool on ``S``.

    In learning mode ratings are updated after each vote and, when every
    active hypothesis misses an instance, a buffered hypothesis may be
    recalled; both changes apply to the instances that follow. Frozen mode
    leaves the state untouched.
    """
    if not state.active:
        raise ExperimentError("no active hypotheses to vote")
    if len(S) == 0:
        raise ExperimentError("cannot evaluate on an empty set")
    if mode not in (LEARNING, FROZEN):
        raise ExperimentError(f"unknown evaluation mode {mode!r}")
    everyone = state.active + state.buffer
    table = {h.id: predict_many(h.model, S) for h in everyone}
    labels = S.labels
    correct = 0
    recalls = []
    for i, x in enumerate(S):
        preds = {hid: int(col[i]) for hid, col in table.items()}
        outcome = classify_majority(state, x, preds)
        y = int(labels[i])
        correct += outcome.predicted == y
        if mode == FROZEN:
            continue
        all_wrong = all(preds[h.id] != y for h in state.active)
        update_ratings(state, x, y, preds)
        if all_wrong:
            state, recalled = recall_from_buffer(state, x, y, preds)
            if recalled is not None:
                recalls.append(RecallEvent(phase, set_name, i, recalled))
    return correct / len(S), state, recalls


def _scores(hyps, S: Dataset) -> list[HypothesisScore]:
    return [HypothesisScore(h.id, evaluate_individual(h, S)) for h in hyps]


def _mean(scores: list[HypothesisScore]) -> float:
    return float(sum(s.accuracy for s in scores) / len(scores))


def run_phase(
    i: int,
    T_i: Dataset,
    V: Dataset,
    Q_prev: Dataset | None,
    state: EnsembleState,
    cfg: ExperimentConfig,
    seed: int,
) -> tuple[PhaseReport, EnsembleState, Dataset]:
    """Run one learning phase; returns the report, the state and ``Q_i``."""
    P_i, Q_i = split_train_test(T_i, cfg.train_fraction)

    X = encode(P_i)
    model = fit_clusterer(
        X, cfg.clusterer, cfg.clusters, max_iters=cfg.max_iters, tol=cfg.tol, seed=seed
    )
    members = cluster_membership(model, X, cfg.min_cluster_size)

    params = cfg.tree_params()
    new = []
    for cluster, rows in members.items():
        part = P_i.take(rows)
        new.append(
            Hypothesis(
                id=state.new_id(),
                phase_origin=i,
                cluster_origin=cluster,
                model=train_tree(part, params),
                schema=P_i.schema,
                training_size=len(part),
            )
        )

    q_name = f"Q{i}"
    q_scores = _scores(new, Q_i)
    for h, s in zip(new, q_scores):
        h.accuracy_record[q_name] = s.accuracy
    state = filter_to_buffer(state, new, {s.id: s.accuracy for s in q_scores})
    buffered = [h.id for h in new if h.status != ACTIVE]

    v_scores = _scores(new, V)
    for h, s in zip(new, v_scores):
        h.accuracy_record["V"] = s.accuracy

    if not state.active:
        raise ExperimentError(
            "every hypothesis was buffered and the active set is empty; cannot vote"
        )

    q_ens, state, recalls = evaluate_ensemble(state, Q_i, LEARNING, phase=i, set_name=q_name)
    v_ens, state, _ = evaluate_ensemble(state, V, FROZEN)
    retention = None
    if Q_prev is not None:
        retention, state, _ = evaluate_ensemble(state, Q_prev, FROZEN)

    report = PhaseReport(
        phase=i,
        seed=seed,
        sizes={"T_i": len(T_i), "P_i": len(P_i), "Q_i": len(Q_i)},
        cluster_sizes=[len(r) for r in members.values()],
        clusterer_converged=bool(model.converged),
        clusterer_log_likelihood=float(model.final_log_likelihood),
        new_hypotheses=[h.id for h in new],
        q_individual=q_scores,
        q_mean_individual=_mean(q_scores),
        q_ensemble=q_ens,
        v_individual=v_scores,
        v_mean_individual=_mean(v_scores),
        v_ensemble=v_ens,
        retention=retention,
        buffered=buffered,
        recalls=recalls,
        active_after=[h.id for h in state.active],
        buffer_after=[h.id for h in state.buffer],
    )
    log.info(
        "phase %d: %d new hypotheses, %d buffered, ensemble Q=%.4f V=%.4f",
        i, len(new), len(buffered), q_ens, v_ens,
    )
    return report, state, Q_i


def config_echo(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["kind_overrides"] = [list(p) for p in cfg.kind_overrides]
    return d


def run_on_dataset(D: Dataset, cfg: ExperimentConfig) -> ExperimentReport:
    plan = cfg.plan()
    T, V = split_holdout(D, plan)
    parts = partition_phases(T, plan.phases)
    state = EnsembleState()
    report = ExperimentReport(config=config_echo(cfg), seed_rule=SEED_RULE)
    Q_prev = None
    for i, T_i in enumerate(parts, start=1):
        try:
            phase_report, state, Q_prev = run_phase(
                i, T_i, V, Q_prev, state, cfg, phase_seed(cfg.master_seed, i)
            )
        except (DataError, ValueError, RuntimeError) as e:
            raise ExperimentError(f"phase {i}: {e}") from e
        report.phases.append(phase_report)
    report.roster = [
        RosterEntry(
            id=h.id,
            phase_origin=h.phase_origin,
            cluster_origin=h.cluster_origin,
            training_size=h.training_size,
            tree_size=tree_size(h.model),
            base_rating=h.base_rating,
            status=h.status,
            accuracy_record=dict(h.accuracy_record),
        )
        for h in state.all()
    ]
    return report


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    D = load_csv(cfg.data_path, cfg.label, dict(cfg.kind_overrides) or None)
    cfg.plan().check(len(D))
    return run_on_dataset(D, cfg)
