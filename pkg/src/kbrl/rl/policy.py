"""Return bookkeeping and the Normal-distribution selection policy.

Returns.  Every turn costs 1, undiscounted.  A game won at turn N has
episode return G = -N; losing the race costs double, G = -2N; being
destroyed is worst, G = -(1000 - N) (the earlier, the lower).  The
state-level return for a cluster with running mean turn t is

    won:        G_s = -(N - t)
    lost race:  G_s = -(2N - t)
    destroyed:  G_s = -(1000 - N + t)

State-action values.  Per (cluster, action) the table keeps the visit
count n, the running mean return, and a squared-deviation accumulator
that gains (G_s - mean)^2 against the *updated* running mean of that
action as each sample is folded in; sigma_raw = sqrt(sqdev / n).  With
consistent outcomes the deviations shrink and the policy sharpens, the
"more experience, more confidence" behaviour the selection rule needs.
The cluster-wide expected return is tracked alongside for reporting.

Selection.  Per cluster, the means are min-max normalized to [0, 1]
giving each action a mu; sigma_raw is divided by the same range so both
parameters live on one scale, floored at SIGMA_FLOOR.  The action with
the highest mu defines the limit L = mu_max - sigma_max, and each
candidate's weight is its Normal right-tail mass past L,

    p_a  ∝  1 - Phi((L - mu_a) / sigma_a),

normalized to sum to 1.  Actions never tried get an optimistic
(mu, sigma) = (1.0, 0.5) so they keep exploration pressure beyond the
epsilon-greedy override, which picks uniformly at random with
probability epsilon.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .clustering import ClusterModel, SchemaVersionError

TABLE_SCHEMA = "kbrl-state-action-table-v1"

SIGMA_FLOOR = 1e-3
UNSEEN_MU = 1.0
UNSEEN_SIGMA = 0.5
DESTRUCTION_PENALTY = 1000


def normal_sf(z: float) -> float:
    """Right-tail mass of the standard Normal, 1 - Phi(z).

    Uses math.erfc, which is accurate to double precision, far inside
    the 1e-7 absolute error this module needs.
    """
    return 0.5 * math.erfc(z / math.sqrt(2.0))


@dataclass
class ActionValue:
    n: int = 0
    mean: float = 0.0
    sqdev: float = 0.0

    def fold(self, g: float) -> None:
        self.n += 1
        self.mean += (g - self.mean) / self.n
        self.sqdev += (g - self.mean) ** 2

    def sigma_raw(self) -> float:
        if self.n == 0:
            return 0.0
        return math.sqrt(self.sqdev / self.n)


@dataclass
class ClusterValues:
    g_count: int = 0
    g_mean: float = 0.0  # cluster-wide expected return over all samples
    actions: dict = field(default_factory=dict)  # action id -> ActionValue

    def fold_cluster(self, g: float) -> None:
        self.g_count += 1
        self.g_mean += (g - self.g_mean) / self.g_count


@dataclass
class StateActionTable:
    clusters: dict = field(default_factory=dict)  # cluster id -> ClusterValues

    def cluster(self, cluster_id: int) -> ClusterValues:
        return self.clusters.setdefault(cluster_id, ClusterValues())

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": TABLE_SCHEMA,
                "clusters": {
                    str(cid): {
                        "g_count": cv.g_count,
                        "g_mean": cv.g_mean,
                        "actions": {
                            a: {"n": av.n, "mean": av.mean, "sqdev": av.sqdev}
                            for a, av in sorted(cv.actions.items())
                        },
                    }
                    for cid, cv in sorted(self.clusters.items())
                },
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "StateActionTable":
        doc = json.loads(text)
        if doc.get("schema") != TABLE_SCHEMA:
            raise SchemaVersionError(
                f"expected {TABLE_SCHEMA}, got {doc.get('schema')!r}"
            )
        table = cls()
        for cid, cv in doc["clusters"].items():
            cluster = ClusterValues(cv["g_count"], cv["g_mean"])
            for action, av in cv["actions"].items():
                cluster.actions[action] = ActionValue(av["n"], av["mean"], av["sqdev"])
            table.clusters[int(cid)] = cluster
        return table

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "StateActionTable":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def episode_returns(outcome: str, final_turn: int, visited_clusters,
                    model: ClusterModel):
    """Episode return G and per-cluster state returns G_s.

    ``visited_clusters`` are the clusters seen this episode; each takes
    its turn value t from the model's running cluster-turn means.
    """
    n = final_turn
    if outcome == "won":
        g = -n
    elif outcome == "lost_race":
        g = -(n * 2)
    elif outcome == "destroyed":
        g = -(DESTRUCTION_PENALTY - n)
    else:
        raise ValueError(f"no return defined for outcome {outcome!r}")

    per_cluster = {}
    for cluster in sorted(set(visited_clusters)):
        t = model.cluster_turn(cluster)
        if outcome == "won":
            per_cluster[cluster] = -(n - t)
        elif outcome == "lost_race":
            per_cluster[cluster] = -(n * 2 - t)
        else:
            per_cluster[cluster] = -(DESTRUCTION_PENALTY - n + t)
    return g, per_cluster


def update_values(table: StateActionTable, model: ClusterModel, episode) -> StateActionTable:
    """Fold one finished episode's decisions into the table.

    Truncated episodes carry no learning signal and are rejected.
    Decisions are processed in episode order; for each, the chosen
    action's count, running mean and squared-deviation accumulator are
    updated with the state return of the decision's cluster, and the
    cluster-wide mean return is folded alongside.
    """
    if episode.outcome == "truncated":
        raise ValueError("truncated episodes are excluded from value updates")
    visited = [c for _, c in episode.turn_clusters if c is not None]
    _, per_cluster = episode_returns(
        episode.outcome, episode.final_turn, visited, model
    )
    for decision in episode.decisions:
        if decision.cluster is None:
            continue
        g_s = per_cluster[decision.cluster]
        cluster = table.cluster(decision.cluster)
        action = cluster.actions.setdefault(decision.chosen, ActionValue())
        action.fold(g_s)
        cluster.fold_cluster(g_s)
    return table


@dataclass(frozen=True)
class PolicyParams:
    """Per-action (mu, sigma) for one cluster, in normalized value space."""

    cluster: int
    entries: dict  # action id -> (mu, sigma)
    q_values: dict  # action id -> raw mean return, for reporting
    value_range: tuple  # (min mean, max mean) over sampled actions

    def mu_sigma(self, action: str) -> tuple[float, float]:
        return self.entries.get(action, (UNSEEN_MU, UNSEEN_SIGMA))


def policy_params(table: StateActionTable, cluster_id: int) -> PolicyParams:
    """Min-max normalized means and range-scaled deviations for a cluster.

    Degenerate cases: with all means equal (or a single action) every mu
    is 0.5 and sigma is the floor, making selection uniform; actions
    without samples are absent here and receive the optimistic defaults
    at lookup time.
    """
    cv = table.clusters.get(cluster_id)
    entries: dict[str, tuple[float, float]] = {}
    q_values: dict[str, float] = {}
    if cv:
        sampled = {a: av for a, av in cv.actions.items() if av.n >= 1}
        if sampled:
            means = {a: av.mean for a, av in sampled.items()}
            q_values = dict(means)
            lo, hi = min(means.values()), max(means.values())
            span = hi - lo
            for action, av in sampled.items():
                if span <= 0:
                    mu, sigma = 0.5, SIGMA_FLOOR
                else:
                    mu = (av.mean - lo) / span
                    sigma = max(av.sigma_raw() / span, SIGMA_FLOOR)
                entries[action] = (mu, sigma)
            return PolicyParams(cluster_id, entries, q_values, (lo, hi))
    return PolicyParams(cluster_id, entries, q_values, (0.0, 0.0))


def selection_probabilities(action_ids, params: PolicyParams) -> dict:
    """Right-tail Normal masses past L = mu_max - sigma_max, normalized.

    The limit comes from the first candidate (in the given order)
    holding the maximal mu.
    """
    ids = list(action_ids)
    if not ids:
        raise ValueError("empty conflict set")
    if len(ids) == 1:
        return {ids[0]: 1.0}
    mus = {}
    sigmas = {}
    for action in ids:
        mu, sigma = params.mu_sigma(action)
        mus[action], sigmas[action] = mu, max(sigma, SIGMA_FLOOR)
    best = max(ids, key=lambda a: mus[a])
    limit = mus[best] - sigmas[best]
    weights = {
        a: normal_sf((limit - mus[a]) / sigmas[a]) for a in ids
    }
    total = sum(weights.values())
    return {a: w / total for a, w in weights.items()}


def select_action(action_ids, params: PolicyParams, epsilon: float,
                  rng: random.Random):
    """Pick an action: uniform with probability epsilon, else sample the
    right-tail distribution.  Returns (action, probabilities)."""
    ids = list(action_ids)
    probs = selection_probabilities(ids, params)
    if epsilon > 0 and rng.random() < epsilon:
        return ids[rng.randrange(len(ids))], probs
    roll = rng.random()
    acc = 0.0
    for action in ids:
        acc += probs[action]
        if roll < acc:
            return action, probs
    return ids[-1], probs
