"""Training orchestration: dataset collection, the episode/update loop,
and the learned conflict resolver.

Per-episode randomness flows from a seed derived only from the base
seed and the episode index, so a resumed run continues exactly the run
an uninterrupted execution would have produced.  Updates are applied
between waves: with wave size w (default 1, the faithful setting) the
resolver inside a wave reads a frozen snapshot of the table, and the
w finished episodes are folded in serially afterwards, each episode
first refreshing the cluster-turn means, then computing its returns,
then updating the state-action values.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field
from typing import Callable

from ..inference import EpisodeLimits, EpisodeRecord, RandomResolver
from ..ki import KnowledgeItem
from ..microciv import game as g
from ..microciv.match import play_scripted_episode
from ..ontology import Ontology
from .clustering import ClusterModel, assign_cluster, fit_clusters, update_cluster_turns
from .features import FEATURE_NAMES, FEATURE_WEIGHTS, FeatureVector, build_feature_vector
from .policy import StateActionTable, episode_returns, policy_params, select_action, update_values


def episode_seed(base_seed: int, episode_index: int) -> int:
    return base_seed * 1_000_003 + episode_index


class RLResolver:
    """Conflict resolver backed by a cluster model and a state-action table.

    Observes the game once per turn to fix the current cluster, then
    resolves conflicts by sampling the Normal right-tail policy of that
    cluster, epsilon-greedy.  With epsilon 0 this is greedy play.
    """

    def __init__(self, model: ClusterModel, table: StateActionTable,
                 epsilon: float = 0.1):
        self.model = model
        self.table = table
        self.epsilon = epsilon
        self._cluster: int | None = None

    def begin_episode(self, rng: random.Random) -> None:
        self._cluster = None

    def observe_turn(self, snapshot) -> int | None:
        state, player = snapshot
        vector = build_feature_vector(state, player)
        self._cluster = assign_cluster(vector, self.model)
        return self._cluster

    def select(self, action_ids: list[str], rng: random.Random) -> str:
        if self._cluster is None:
            return action_ids[rng.randrange(len(action_ids))]
        params = policy_params(self.table, self._cluster)
        chosen, _ = select_action(action_ids, params, self.epsilon, rng)
        return chosen


@dataclass
class TrainConfig:
    kb_dirs: tuple
    fixture: str = "twin-continents"
    episodes: int = 300
    epsilon_start: float = 0.1
    epsilon_end: float = 0.02
    k: int = 16
    seed: int = 0
    wave: int = 1
    max_turns: int = 400
    max_iter: int = 300
    collect_episodes: int = 20
    checkpoint_every: int = 25

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if not (0 < self.epsilon_start <= 1) or not (0 <= self.epsilon_end <= 1):
            raise ValueError("epsilon must be in (0, 1]")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.wave < 1:
            raise ValueError("wave size must be >= 1")


def epsilon_at(cfg: TrainConfig, episode_index: int) -> float:
    """Linear anneal from epsilon_start to epsilon_end over the run."""
    if cfg.episodes <= 1:
        return cfg.epsilon_start
    frac = min(episode_index / (cfg.episodes - 1), 1.0)
    return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac


def collect_dataset(kb: list[KnowledgeItem], ontology: Ontology,
                    fixture: g.MapFixture, episodes: int, seed: int,
                    max_turns: int = 400):
    """Baseline episodes under uniform-random conflict resolution.

    Returns (rows, episode_lengths): one raw feature row per turn of
    every episode, in play order.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    rows: list[tuple] = []
    lengths: list[int] = []
    limits = EpisodeLimits(max_turns=max_turns)
    for i in range(episodes):
        before = len(rows)

        def hook(snapshot):
            state, player = snapshot
            rows.append(build_feature_vector(state, player).values)

        play_scripted_episode(
            kb, ontology, fixture, episode_seed(seed, i), RandomResolver(),
            limits, turn_hook=hook,
        )
        lengths.append(len(rows) - before)
    return rows, lengths


def fit_model_from_rows(rows, k: int, max_iter: int = 300, seed: int = 0) -> ClusterModel:
    vectors = [FeatureVector(tuple(r)) for r in rows]
    return fit_clusters(
        vectors, k, max_iter=max_iter, seed=seed,
        feature_names=FEATURE_NAMES, weights=FEATURE_WEIGHTS,
    )


@dataclass
class CurveRow:
    episode: int
    outcome: str
    final_turn: int
    episode_return: int | None
    epsilon: float


@dataclass
class TrainResult:
    model: ClusterModel
    table: StateActionTable
    curve: list = field(default_factory=list)
    records: list = field(default_factory=list)


def train(
    cfg: TrainConfig,
    kb: list[KnowledgeItem],
    ontology: Ontology,
    fixture: g.MapFixture,
    model: ClusterModel,
    table: StateActionTable | None = None,
    start_episode: int = 0,
    curve: list | None = None,
    checkpoint: Callable[[int, ClusterModel, StateActionTable, list], None] | None = None,
    keep_records: bool = False,
) -> TrainResult:
    """Run the episode -> update loop from start_episode to cfg.episodes."""
    table = table if table is not None else StateActionTable()
    curve = curve if curve is not None else []
    limits = EpisodeLimits(max_turns=cfg.max_turns)
    result = TrainResult(model, table, curve)

    episode = start_episode
    while episode < cfg.episodes:
        wave_end = min(episode + cfg.wave, cfg.episodes)
        frozen = copy.deepcopy(table) if cfg.wave > 1 else table
        wave_records: list[tuple[int, EpisodeRecord]] = []
        for i in range(episode, wave_end):
            resolver = RLResolver(model, frozen, epsilon_at(cfg, i))
            record = play_scripted_episode(
                kb, ontology, fixture, episode_seed(cfg.seed, i), resolver, limits,
            )
            wave_records.append((i, record))
        for i, record in wave_records:
            if record.outcome != "truncated":
                update_cluster_turns(model, record)
                visited = [c for _, c in record.turn_clusters if c is not None]
                g_value, _ = episode_returns(
                    record.outcome, record.final_turn, visited, model
                )
                update_values(table, model, record)
                ret: int | None = g_value
            else:
                ret = None
            curve.append(CurveRow(i, record.outcome, record.final_turn, ret,
                                  epsilon_at(cfg, i)))
            if keep_records:
                result.records.append(record)
        episode = wave_end
        if checkpoint is not None and (
            episode % cfg.checkpoint_every == 0 or episode == cfg.episodes
        ):
            checkpoint(episode, model, table, curve)
    return result
