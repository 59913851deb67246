"""Per-turn feature vectors describing a MicroCiv position.

Each game turn is summarized by a fixed-length weighted vector.  The
weights express how strongly each feature is believed to track the
game's outcome: score, population and tech progress carry the most,
per-turn resource rates a middle weight, raw counts less, and the
research-focus one-hot the least.  Weights are fixed for the lifetime
of a cluster model; normalization happens later, against dataset-wide
per-feature ranges stored on the model.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..microciv import game as g


def _counts(state, player):
    me = state.players[player]
    kinds = {"settler": 0, "worker": 0, "warrior": 0}
    for unit in me.units.values():
        kinds[unit.kind] += 1
    return kinds


def _feature_list():
    def pop_total(state, player):
        return sum(c.population for c in state.players[player].cities.values())

    return [
        ("score", 3.0, lambda s, p: g.score(s, p)),
        ("population", 3.0, pop_total),
        ("tech_level", 3.0, lambda s, p: s.players[p].tech_level),
        ("food_rate", 1.5, lambda s, p: g.player_income(s, p)["food"]),
        ("production_rate", 1.5, lambda s, p: g.player_income(s, p)["production"]),
        ("science_rate", 1.5, lambda s, p: g.player_income(s, p)["science"]),
        ("gold_rate", 1.5, lambda s, p: g.player_income(s, p)["gold"]),
        ("science_stock", 1.5, lambda s, p: s.players[p].science),
        ("gold_stock", 1.5, lambda s, p: s.players[p].gold),
        ("cities", 1.0, lambda s, p: len(s.players[p].cities)),
        ("units", 1.0, lambda s, p: len(s.players[p].units)),
        ("settlers", 1.0, lambda s, p: _counts(s, p)["settler"]),
        ("workers", 1.0, lambda s, p: _counts(s, p)["worker"]),
        ("warriors", 1.0, lambda s, p: _counts(s, p)["warrior"]),
        ("explored", 1.0, lambda s, p: len(s.players[p].explored)),
        ("enemies_visible", 1.0,
         lambda s, p: sum(len(side) for side in g.visible_enemy_pieces(s, p))),
        ("global_tech", 1.0, lambda s, p: max(pl.tech_level for pl in s.players)),
        ("focus_balanced", 0.5, lambda s, p: int(s.players[p].focus == "balanced")),
        ("focus_science", 0.5, lambda s, p: int(s.players[p].focus == "science")),
        ("focus_production", 0.5, lambda s, p: int(s.players[p].focus == "production")),
    ]


_FEATURES = _feature_list()
FEATURE_NAMES = tuple(name for name, _, _ in _FEATURES)
FEATURE_WEIGHTS = tuple(weight for _, weight, _ in _FEATURES)


@dataclass(frozen=True)
class FeatureVector:
    values: tuple
    weights: tuple = FEATURE_WEIGHTS

    def __post_init__(self):
        if len(self.values) != len(self.weights):
            raise ValueError(
                f"{len(self.values)} values vs {len(self.weights)} weights"
            )


def build_feature_vector(state: g.GameState, player: int = 0) -> FeatureVector:
    """Deterministic raw feature vector for one player's current position."""
    if player not in (0, 1):
        raise ValueError(f"no player {player}")
    values = tuple(float(extract(state, player)) for _, _, extract in _FEATURES)
    return FeatureVector(values)
